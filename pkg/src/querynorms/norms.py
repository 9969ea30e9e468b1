"""Factorization norms: gamma_2, its filtered variant, and the dual norm.

The filtered norm of A against filters Z = {Z_1, ..., Z_n} is the optimal
value of

    min  max( max_x sum_j ||u_xj||^2 , max_y sum_j ||v_yj||^2 )
    s.t. A[x, y] = sum_j Z_j[x, y] <u_xj | v_yj>   for all x, y,

computed here as a Gram-matrix SDP over the stacked vectors. Every value
is returned together with a `Factorization` certificate extracted from the
optimal Gram matrix, so results can be re-verified without trusting the
solver, and with the dual matrix of the max-form characterization

    max { ||A o M|| : max_j ||Z_j o M|| <= 1 }

recovered from the equality multipliers. Infeasibility (some A[x, y] != 0
with every filter zero there) is detected by an entry scan and reported as
a tagged infinite value, never a float comparison downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, sdp
from .linalg import as_matrix

CERT_RANK_TOL = 1e-8


@dataclass
class Factorization:
    """Witness vectors u[x, j], v[y, j] in C^m realizing a filtered value."""

    dim: int
    u: np.ndarray  # shape (d1, n, m)
    v: np.ndarray  # shape (d2, n, m)
    value: float

    def row_load(self, x: int) -> float:
        return float(np.sum(np.abs(self.u[x]) ** 2))

    def col_load(self, y: int) -> float:
        return float(np.sum(np.abs(self.v[y]) ** 2))


@dataclass
class CheckReport:
    residual: float
    objective: float


@dataclass
class Gamma2Result:
    value: float
    infeasible: bool
    cert: Factorization | None
    dual_matrix: np.ndarray | None = None
    sdp_result: sdp.SdpResult | None = field(default=None, repr=False)

    @property
    def finite(self) -> bool:
        return not self.infeasible


def validate_filters(zs) -> list[np.ndarray]:
    mats = [as_matrix(z) for z in zs]
    if not mats:
        raise ValueError("filter set must be nonempty")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ValueError("filters must share one shape")
    return mats


def check_factorization(a, zs, cert: Factorization) -> CheckReport:
    """Residual and objective of a claimed factorization, solver-free."""
    a = as_matrix(a)
    mats = validate_filters(zs)
    d1, d2 = a.shape
    n = len(mats)
    if cert.u.shape[:2] != (d1, n) or cert.v.shape[:2] != (d2, n):
        raise ValueError("certificate shape does not match the matrix/filters")
    residual = 0.0
    for x in range(d1):
        for y in range(d2):
            total = 0j
            for j in range(n):
                zj = mats[j][x, y]
                if zj != 0:
                    total += zj * np.vdot(cert.u[x, j], cert.v[y, j])
            residual = max(residual, abs(total - a[x, y]))
    objective = max(
        max((cert.row_load(x) for x in range(d1)), default=0.0),
        max((cert.col_load(y) for y in range(d2)), default=0.0),
    )
    return CheckReport(residual=float(residual), objective=float(objective))


def _zero_certificate(d1: int, d2: int, n: int) -> Factorization:
    return Factorization(dim=1, u=np.zeros((d1, n, 1), dtype=complex),
                         v=np.zeros((d2, n, 1), dtype=complex), value=0.0)


def filtered_gamma2(a, zs, gap_tol: float = sdp.DEFAULT_GAP_TOL,
                    feas_tol: float = sdp.DEFAULT_FEAS_TOL) -> Gamma2Result:
    """Filtered factorization norm with certificate and dual matrix."""
    a = as_matrix(a)
    mats = validate_filters(zs)
    if mats[0].shape != a.shape:
        raise ValueError(f"filters of shape {mats[0].shape} do not match matrix {a.shape}")
    d1, d2 = a.shape
    n = len(mats)

    # strict-feasibility scan: infinite iff some entry is uncovered (property 2).
    # Entries below 1e-12 of the matrix scale count as zeros so that roundoff
    # on analytically-zero entries cannot fake infeasibility.
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    nonzero = np.abs(a) > 1e-12 * (1.0 + scale)
    cover = np.zeros((d1, d2), dtype=bool)
    for z in mats:
        cover |= z != 0
    if np.any(nonzero & ~cover):
        return Gamma2Result(value=math.inf, infeasible=True, cert=None)

    if not np.any(nonzero):
        return Gamma2Result(value=0.0, infeasible=False, cert=_zero_certificate(d1, d2, n))

    iscomplex = bool(np.any(np.abs(a.imag) > 0) or any(np.any(np.abs(z.imag) > 0) for z in mats))

    # No constraint couples vectors of different filters, so the Gram matrix
    # of the stacked family splits exactly into one (d1+d2) block per filter.
    prog = sdp.SdpProgram(dim_cap=4096)
    grams = [sdp.HermitianVar(prog, d1 + d2, iscomplex=iscomplex) for _ in range(n)]
    t = prog.add_nonneg_block(1)
    slack = prog.add_nonneg_block(d1 + d2)
    prog.add_objective_term(t, 0, w=1.0)

    entry_rows: dict[tuple[int, int], tuple[int, int]] = {}
    for x in range(d1):
        for y in range(d2):
            if not cover[x, y]:
                continue
            row = sdp.ComplexRow(prog)
            for j in range(n):
                zj = mats[j][x, y]
                if zj != 0:
                    row.add(grams[j], x, d1 + y, zj)
            before = len(prog.constraints)
            row.finalize(a[x, y])
            entry_rows[(x, y)] = (before, len(prog.constraints))

    load_rows: list[int] = []
    for x in range(d1):
        row = sdp.ComplexRow(prog)
        for j in range(n):
            row.add(grams[j], x, x, 1.0)
        row.add_scalar(slack, x, 1.0).add_scalar(t, 0, -1.0)
        load_rows.append(len(prog.constraints))
        row.finalize(0.0)
    for y in range(d2):
        row = sdp.ComplexRow(prog)
        for j in range(n):
            row.add(grams[j], d1 + y, d1 + y, 1.0)
        row.add_scalar(slack, d1 + y, 1.0).add_scalar(t, 0, -1.0)
        load_rows.append(len(prog.constraints))
        row.finalize(0.0)

    res = sdp.require_optimal(sdp.solve(prog, gap_tol=gap_tol, feas_tol=feas_tol),
                              "filtered gamma_2 SDP")
    value = float(res.primal_value)

    factors = [linalg.psd_factorize(g.read(res.X), rank_tol=CERT_RANK_TOL,
                                    norm_floor=1.0 + value) for g in grams]
    m = max(1, max(vecs[0].size for vecs in factors))
    u = np.zeros((d1, n, m), dtype=complex)
    v = np.zeros((d2, n, m), dtype=complex)
    for j, vecs in enumerate(factors):
        for x in range(d1):
            w = vecs[x]
            u[x, j, :w.size] = w
        for y in range(d2):
            w = vecs[d1 + y]
            v[y, j, :w.size] = w
    cert = Factorization(dim=m, u=u, v=v, value=value)

    dual_m = _dual_matrix(res, entry_rows, load_rows, d1, d2)
    return Gamma2Result(value=value, infeasible=False, cert=cert,
                        dual_matrix=dual_m, sdp_result=res)


def _dual_matrix(res: sdp.SdpResult, entry_rows, load_rows, d1: int, d2: int) -> np.ndarray:
    """Max-form dual witness M from the equality multipliers.

    With m the multiplier on the (x, y) entry row and p, q the (negated)
    multipliers on the row/column load rows, M[x, y] = m / (2 sqrt(p_x q_y))
    satisfies max_j ||Z_j o M|| <= 1 and <A o M> at the norm value.
    """
    y = res.y
    p = np.maximum(-y[load_rows[:d1]], 0.0)
    q = np.maximum(-y[load_rows[d1:]], 0.0)
    m = np.zeros((d1, d2), dtype=complex)
    for (x, yy), (lo, hi) in entry_rows.items():
        mult = y[lo] + (1j * y[lo + 1] if hi - lo > 1 else 0.0)
        m[x, yy] = mult
    # complementary slackness zeroes m on rows/columns whose load constraint
    # is slack (p or q ~ 0); truncating them avoids dividing noise by noise
    scale = max(float(p.max(initial=0.0)), float(q.max(initial=0.0)), 1e-300)
    keep_r = p > 1e-6 * scale
    keep_c = q > 1e-6 * scale
    m[~keep_r, :] = 0.0
    m[:, ~keep_c] = 0.0
    kept = np.outer(keep_r, keep_c)
    denom = 2.0 * np.sqrt(np.outer(np.maximum(p, 1e-300), np.maximum(q, 1e-300)))
    out = np.zeros_like(m)
    np.divide(m, denom, out=out, where=kept)
    return out


def gamma2(a, **kw) -> Gamma2Result:
    """Plain gamma_2 norm (single all-ones filter)."""
    a = as_matrix(a)
    return filtered_gamma2(a, [np.ones(a.shape)], **kw)


@dataclass
class Gamma2StarResult:
    value: float
    sdp_result: sdp.SdpResult | None = field(default=None, repr=False)


def gamma2_star(a, zs, gap_tol: float = sdp.DEFAULT_GAP_TOL,
                feas_tol: float = sdp.DEFAULT_FEAS_TOL) -> Gamma2StarResult:
    """Dual norm via its minimization SDP over a nonnegative diagonal.

    Hermitian data uses the one-sided pair Omega +/- A o Z_j >= 0 of size d;
    general data goes through the Hermitian dilation of A and the filters.
    """
    a = as_matrix(a)
    mats = validate_filters(zs)
    if mats[0].shape != a.shape:
        raise ValueError("filter shape mismatch")
    if not np.any(a != 0):
        return Gamma2StarResult(value=0.0)

    hermitian_case = (a.shape[0] == a.shape[1] and linalg.is_hermitian(a)
                      and all(linalg.is_hermitian(z) for z in mats))
    if hermitian_case:
        targets = [a * z for z in mats]
        d = a.shape[0]
        obj_scale = 1.0
        signs = (1.0, -1.0)
    else:
        d1, d2 = a.shape
        d = d1 + d2
        targets = []
        for z in mats:
            dil = np.zeros((d, d), dtype=complex)
            dil[:d1, d1:] = a * z
            dil[d1:, :d1] = (a * z).conj().T
            targets.append(dil)
        obj_scale = 0.5
        signs = (1.0,)

    iscomplex = any(np.any(np.abs(t.imag) > 0) for t in targets)
    prog = sdp.SdpProgram(dim_cap=4096)
    omega = prog.add_nonneg_block(d)
    for i in range(d):
        prog.add_objective_term(omega, i, w=obj_scale)
    for target in targets:
        for sign in signs:
            s_var = sdp.HermitianVar(prog, d, iscomplex=iscomplex)
            for pp in range(d):
                for qq in range(pp, d):
                    row = sdp.ComplexRow(prog)
                    row.add(s_var, pp, qq, 1.0)
                    if pp == qq:
                        row.add_scalar(omega, pp, -1.0)
                    row.finalize(sign * target[pp, qq])
    res = sdp.require_optimal(sdp.solve(prog, gap_tol=gap_tol, feas_tol=feas_tol),
                              "gamma_2 dual-norm SDP")
    return Gamma2StarResult(value=float(res.primal_value), sdp_result=res)


# -- Appendix-style property suite -------------------------------------------

PROPERTY_NAMES = {
    1: "special cases gamma2(A|{A}) = 1 and gamma2(A|{J}) = gamma2(A)",
    2: "zero iff A = 0; infinite iff an entry of A is uncovered",
    3: "positive scalability in the matrix and in the filters",
    4: "triangle inequality",
    5: "invariance under duplicating rows or columns",
    6: "filter union monotone; equality for rectangular restrictions",
    7: "convex combinations of filters are redundant",
    8: "row- and column-disjoint filters may be merged",
    9: "gamma2(A o B|Z) <= gamma2(A|Z) gamma2(B)",
    10: "two-sided Schur filtering chain",
    11: "composition through an intermediate filter set",
    12: "direct-sum property",
    13: "tensor-product property",
}


@dataclass
class PropertyResult:
    pid: int
    name: str
    trials: int
    failures: int
    worst_violation: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class PropertySuiteReport:
    tol: float
    results: list[PropertyResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tol,
            "all_passed": self.all_passed,
            "properties": [
                {"id": r.pid, "name": r.name, "trials": r.trials,
                 "failures": r.failures, "worst_violation": r.worst_violation,
                 "passed": r.passed}
                for r in self.results
            ],
        }


def _rand_matrix(rng, d1, d2, cplx):
    m = rng.normal(size=(d1, d2))
    if cplx:
        m = m + 1j * rng.normal(size=(d1, d2))
    return m


def _rand_filters(rng, d1, d2, count):
    return [rng.uniform(0.3, 1.5, size=(d1, d2)) for _ in range(count)]


def _val(a, zs) -> float:
    r = filtered_gamma2(a, zs)
    return r.value


def _ineq(lhs: float, rhs: float) -> float:
    """Violation of lhs <= rhs, scale-relative; infinite rhs never violates."""
    if math.isinf(rhs):
        return 0.0
    return max(0.0, (lhs - rhs) / (1.0 + abs(rhs)))


def _eq(lhs: float, rhs: float) -> float:
    if math.isinf(lhs) and math.isinf(rhs):
        return 0.0
    if math.isinf(lhs) or math.isinf(rhs):
        return math.inf
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def _property_trial(pid: int, rng) -> float:
    """Worst violation over the checks of one random trial of property pid."""
    cplx = rng.random() < 0.25
    d1 = int(rng.integers(2, 4))
    d2 = int(rng.integers(2, 4))
    a = _rand_matrix(rng, d1, d2, cplx)
    zs = _rand_filters(rng, d1, d2, int(rng.integers(1, 3)))
    j_all = np.ones((d1, d2))

    if pid == 1:
        return max(_eq(_val(a, [a]), 1.0),
                   _eq(_val(a, [j_all]), gamma2(a).value))
    if pid == 2:
        checks = []
        zero = filtered_gamma2(np.zeros((d1, d2)), zs)
        checks.append(0.0 if (not zero.infeasible and zero.value == 0.0) else math.inf)
        pos = filtered_gamma2(a, zs)
        checks.append(0.0 if (not pos.infeasible and pos.value > 0) else math.inf)
        x0, y0 = int(rng.integers(d1)), int(rng.integers(d2))
        punct = [z.copy() for z in zs]
        for z in punct:
            z[x0, y0] = 0.0
        a2 = a.copy()
        a2[x0, y0] = 1.0
        inf_res = filtered_gamma2(a2, punct)
        checks.append(0.0 if inf_res.infeasible else math.inf)
        a3 = a.copy()
        a3[x0, y0] = 0.0
        fin = filtered_gamma2(a3, punct)
        checks.append(0.0 if not fin.infeasible else math.inf)
        return max(checks)
    if pid == 3:
        s = float(rng.uniform(0.3, 2.5)) * (1 if rng.random() < 0.5 else -1)
        base = _val(a, zs)
        return max(_eq(_val(s * a, zs), abs(s) * base),
                   _eq(_val(a, [s * z for z in zs]), base / abs(s)))
    if pid == 4:
        b = _rand_matrix(rng, d1, d2, cplx)
        return _ineq(_val(a + b, zs), _val(a, zs) + _val(b, zs))
    if pid == 5:
        base = _val(a, zs)
        x0 = int(rng.integers(d1))
        a_dup = np.vstack([a, a[x0:x0 + 1, :]])
        zs_dup = [np.vstack([z, z[x0:x0 + 1, :]]) for z in zs]
        v_row = _val(a_dup, zs_dup)
        y0 = int(rng.integers(d2))
        a_dupc = np.hstack([a, a[:, y0:y0 + 1]])
        zs_dupc = [np.hstack([z, z[:, y0:y0 + 1]]) for z in zs]
        v_col = _val(a_dupc, zs_dupc)
        return max(_eq(v_row, base), _eq(v_col, base))
    if pid == 6:
        extra = _rand_filters(rng, d1, d2, 1)
        mono = _ineq(_val(a, zs + extra), _val(a, zs))
        rows = rng.random(d1) < 0.7
        cols = rng.random(d2) < 0.7
        mask = np.outer(rows, cols).astype(float)
        restricted = zs[0] * mask
        eqv = _eq(_val(a, zs + [restricted]), _val(a, zs))
        return max(mono, eqv)
    if pid == 7:
        k = len(zs)
        p = rng.normal(size=k)
        p /= np.sum(np.abs(p))
        mix = sum(pj * z for pj, z in zip(p, zs))
        return _eq(_val(a, zs + [mix]), _val(a, zs))
    if pid == 8:
        d1, d2 = 4, 4
        a = _rand_matrix(rng, d1, d2, cplx)
        z1 = np.zeros((4, 4))
        z1[:2, :2] = rng.uniform(0.3, 1.5, size=(2, 2))
        z2 = np.zeros((4, 4))
        z2[2:, 2:] = rng.uniform(0.3, 1.5, size=(2, 2))
        z3 = rng.uniform(0.3, 1.5, size=(4, 4))
        return _eq(_val(a, [z1, z2, z3]), _val(a, [z1 + z2, z3]))
    if pid == 9:
        if rng.random() < 0.5:
            b = (rng.random(size=(d1, d2)) < 0.6).astype(float)
        else:
            b = _rand_matrix(rng, d1, d2, cplx)
        lhs = _val(a * b, zs)
        return _ineq(lhs, _val(a, zs) * gamma2(b).value)
    if pid == 10:
        b = _rand_matrix(rng, d1, d2, cplx)
        mid = _val(a, zs)
        filtered = [z * b for z in zs]
        lo = _val(a * b, filtered)
        hi_factor = filtered_gamma2(a, filtered)
        g2b = gamma2(b).value
        hi = math.inf if hi_factor.infeasible else hi_factor.value * g2b
        return max(_ineq(lo, mid), _ineq(mid, hi))
    if pid == 11:
        ys = _rand_filters(rng, d1, d2, int(rng.integers(1, 3)))
        bound = _val(a, ys) * max(_val(yj, zs) for yj in ys)
        return _ineq(_val(a, zs), bound)
    if pid == 12:
        e1, e2 = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        b = _rand_matrix(rng, e1, e2, cplx)
        k = int(rng.integers(1, 3))
        ys = _rand_filters(rng, d1, d2, k)
        ws = _rand_filters(rng, e1, e2, k)
        direct = np.zeros((d1 + e1, d2 + e2), dtype=complex)
        direct[:d1, :d2] = a
        direct[d1:, d2:] = b
        filters = []
        for yj, wj in zip(ys, ws):
            f = np.zeros((d1 + e1, d2 + e2))
            f[:d1, :d2] = yj
            f[d1:, d2:] = wj
            filters.append(f)
        return _eq(_val(direct, filters), max(_val(a, ys), _val(b, ws)))
    if pid == 13:
        d1 = d2 = 2
        a = _rand_matrix(rng, 2, 2, cplx)
        b = _rand_matrix(rng, 2, 2, cplx)
        ys = _rand_filters(rng, 2, 2, int(rng.integers(1, 3)))
        ws = _rand_filters(rng, 2, 2, int(rng.integers(1, 3)))
        tensor_filters = [np.kron(yj, wj) for yj in ys for wj in ws]
        return _eq(_val(np.kron(a, b), tensor_filters), _val(a, ys) * _val(b, ws))
    raise ValueError(f"unknown property id {pid}")


def property_suite(trials: int = 50, seed: int = 0, tol: float = 1e-4) -> PropertySuiteReport:
    """Randomized check of the thirteen filtered-norm properties.

    Inequalities are checked one-sided and equalities two-sided, both
    scale-relative at `tol`. Trials are deterministic in (seed, property,
    trial index).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    for pid in sorted(PROPERTY_NAMES):
        failures = 0
        worst = 0.0
        for trial in range(trials):
            rng = np.random.default_rng([seed, pid, trial])
            violation = _property_trial(pid, rng)
            worst = max(worst, violation)
            if violation > tol:
                failures += 1
        results.append(PropertyResult(pid=pid, name=PROPERTY_NAMES[pid],
                                      trials=trials, failures=failures,
                                      worst_violation=worst))
    return PropertySuiteReport(tol=tol, results=results)
