"""Finite functions, difference filters, and the general adversary bound.

A function is stored as an explicit domain list plus an output map. The
query structure enters through the difference filters Delta_j (1 exactly
where two inputs differ in coordinate j). The general adversary bound is
computed two independent ways and cross-checked:

  * the witness SDP  max <J, W> over diagonal Omega with Tr Omega = 1,
    W supported off the output-agreement pattern, and
    Omega +/- W o Delta_j >= 0 for every j;
  * the filtered norm of J - F against {Delta_j o (J - F)}.

The max-form program (max ||Gamma|| with ||Gamma o Delta_j|| <= 1 and
Gamma o F = 0) maximizes a convex function, so it is implemented only as a
certificate checker; optimal Gammas are recovered from the filtered norm's
dual matrix. Bounded-error query distances q_delta / q_delta_nc are joint
SDPs over the final Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg, norms, sdp
from .norms import Gamma2Result, filtered_gamma2
from .linalg import as_matrix, spectral_norm

SYMBOLS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz"

CROSSCHECK_TOL = 1e-4


class ConsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree."""


class CertificateError(ValueError):
    """A claimed certificate violates one of its constraints."""


@dataclass(frozen=True)
class FunctionSpec:
    """Finite f: D -> E on an explicit domain of strings.

    `alphabets[j]` lists the admissible symbols at coordinate j (a uniform
    alphabet is the special case of identical lists). Domain order
    is canonical: it fixes the indexing of every matrix built from the spec.
    """

    alphabets: tuple[tuple[str, ...], ...]
    domain: tuple[str, ...]
    out_labels: tuple[str, ...]

    def __post_init__(self):
        n = self.arity
        if n == 0:
            raise ValueError("arity must be positive")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("domain entries must be distinct")
        if len(self.out_labels) != len(self.domain):
            raise ValueError("outputs must be total on the domain")
        for word in self.domain:
            if len(word) != n:
                raise ValueError(f"domain word {word!r} does not have length {n}")
            for j, ch in enumerate(word):
                if ch not in self.alphabets[j]:
                    raise ValueError(f"symbol {ch!r} not in alphabet of coordinate {j}")

    @property
    def arity(self) -> int:
        return len(self.alphabets)

    @property
    def size(self) -> int:
        return len(self.domain)

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.alphabets)

    @property
    def alphabet_size(self) -> int:
        """Largest per-coordinate alphabet size."""
        return max(self.alphabet_sizes)

    def symbol_index(self, j: int, ch: str) -> int:
        return self.alphabets[j].index(ch)

    def output(self, word: str) -> str:
        return self.out_labels[self.domain.index(word)]

    @property
    def output_alphabet(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for label in self.out_labels:
            seen.setdefault(label)
        return tuple(seen)

    @property
    def is_boolean_output(self) -> bool:
        return len(self.output_alphabet) == 2

    @staticmethod
    def uniform(alphabet: int, arity: int, domain, outputs) -> "FunctionSpec":
        """Spec over a single alphabet {0, ..., k-1} rendered as symbols."""
        if alphabet < 1 or alphabet > len(SYMBOLS):
            raise ValueError("unsupported alphabet size")
        syms = tuple(SYMBOLS[:alphabet])
        domain = tuple(domain)
        if isinstance(outputs, dict):
            labels = tuple(str(outputs[w]) for w in domain)
        else:
            labels = tuple(str(v) for v in outputs)
        return FunctionSpec(alphabets=(syms,) * arity, domain=domain, out_labels=labels)

    @staticmethod
    def boolean(arity: int, truth) -> "FunctionSpec":
        """Total boolean function from a callable or truth-table sequence."""
        domain = tuple(format(i, f"0{arity}b") for i in range(2 ** arity))
        if callable(truth):
            values = [truth(tuple(int(c) for c in w)) for w in domain]
        else:
            values = list(truth)
            if len(values) != len(domain):
                raise ValueError("truth table length mismatch")
        return FunctionSpec.uniform(2, arity, domain, [str(int(v)) for v in values])


def or_spec(n: int) -> FunctionSpec:
    return FunctionSpec.boolean(n, lambda bits: int(any(bits)))


def and_spec(n: int) -> FunctionSpec:
    return FunctionSpec.boolean(n, lambda bits: int(all(bits)))


def parity_spec(n: int) -> FunctionSpec:
    return FunctionSpec.boolean(n, lambda bits: sum(bits) % 2)


def majority_spec(n: int) -> FunctionSpec:
    return FunctionSpec.boolean(n, lambda bits: int(sum(bits) * 2 > n))


def identity_spec(k: int = 2) -> FunctionSpec:
    """One-coordinate identity on an alphabet of size k."""
    dom = [SYMBOLS[i] for i in range(k)]
    return FunctionSpec.uniform(k, 1, dom, {w: w for w in dom})


# -- Gram-matrix helpers ------------------------------------------------------


def validate_gram(g, unit_diagonal: bool = False, name: str = "gram") -> np.ndarray:
    g = as_matrix(g, square=True)
    if not linalg.is_hermitian(g, tol=1e-10):
        raise ValueError(f"{name} must be Hermitian")
    g = (g + g.conj().T) / 2
    if g.size:
        if float(np.min(np.linalg.eigvalsh(g))) < -1e-8 * (1 + spectral_norm(g)):
            raise ValueError(f"{name} must be PSD")
        diag = np.real(np.diag(g))
        if np.any(diag < -1e-10) or np.any(diag > 1 + 1e-10):
            raise ValueError(f"{name} diagonal must lie in [0, 1]")
        if unit_diagonal and np.max(np.abs(diag - 1)) > 1e-10:
            raise ValueError(f"{name} must have unit diagonal")
    return g


def build_filters(spec: FunctionSpec) -> list[np.ndarray]:
    """Difference filters Delta_j over the spec's domain order."""
    n, words = spec.arity, spec.domain
    out = []
    for j in range(n):
        col = np.array([spec.symbol_index(j, w[j]) for w in words])
        out.append((col[:, None] != col[None, :]).astype(float))
    return out


def output_gram(spec: FunctionSpec) -> np.ndarray:
    labels = spec.out_labels
    return np.array([[1.0 if a == b else 0.0 for b in labels] for a in labels])


# -- general adversary bound --------------------------------------------------


@dataclass
class AdversaryWitness:
    """Feasible point of the witness SDP: diagonal Omega and weights W."""

    omega: np.ndarray
    W: np.ndarray
    objective: float


@dataclass
class WitnessCheck:
    trace_error: float
    support_violation: float
    min_eigenvalue: float
    objective: float


def check_witness(witness: AdversaryWitness, deltas, agreement: np.ndarray) -> WitnessCheck:
    """Solver-free feasibility audit of a witness against Eq.-style constraints."""
    omega, w = witness.omega, witness.W
    trace_error = abs(float(np.sum(omega)) - 1.0)
    support_violation = float(np.max(np.abs(w * agreement))) if w.size else 0.0
    min_eig = np.inf
    om = np.diag(omega)
    for dj in deltas:
        for sign in (1.0, -1.0):
            m = om + sign * (w * dj)
            min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(m))))
    objective = float(np.sum(w))
    return WitnessCheck(trace_error=trace_error, support_violation=support_violation,
                        min_eigenvalue=min_eig, objective=objective)


def _witness_program(agreement: np.ndarray, deltas):
    """Witness SDP in canonical form; returns (program, omega block, pair list, free block)."""
    n_pts = agreement.shape[0]
    support = [(x, y) for x in range(n_pts) for y in range(x + 1, n_pts)
               if agreement[x, y] == 0]
    prog = sdp.SdpProgram(dim_cap=4096)
    omega = prog.add_nonneg_block(n_pts)
    wblk = prog.add_free_block(len(support)) if support else None
    pair_index = {pair: e for e, pair in enumerate(support)}
    for e in range(len(support)):
        prog.add_objective_term(wblk, e, w=-2.0)  # maximize <J, W> = 2 sum_e w_e
    for dj in deltas:
        for sign in (1.0, -1.0):
            s_blk = prog.add_psd_block(n_pts)
            for p in range(n_pts):
                for q in range(p, n_pts):
                    row = prog.new_row().add(s_blk, p, q, 1.0)
                    if p == q:
                        row.add(omega, p, w=-1.0)
                    elif (p, q) in pair_index and dj[p, q] != 0:
                        row.add(wblk, pair_index[(p, q)], w=-sign * dj[p, q])
                    row.finalize(0.0)
    trace = prog.new_row()
    for p in range(n_pts):
        trace.add(omega, p, w=1.0)
    trace.finalize(1.0)
    return prog, omega, support, wblk


def adversary_witness_value(agreement: np.ndarray, deltas,
                            gap_tol: float = sdp.DEFAULT_GAP_TOL) -> tuple[float, AdversaryWitness, sdp.SdpResult | None]:
    """Solve the witness SDP for an agreement pattern (1 where outputs agree)."""
    n_pts = agreement.shape[0]
    if not np.any(agreement == 0):
        omega = np.full(n_pts, 1.0 / n_pts)
        return 0.0, AdversaryWitness(omega=omega, W=np.zeros((n_pts, n_pts)), objective=0.0), None
    prog, omega_blk, support, wblk = _witness_program(agreement, deltas)
    res = sdp.require_optimal(sdp.solve(prog, gap_tol=gap_tol), "adversary witness SDP")
    value = -res.primal_value
    omega = np.maximum(res.X[omega_blk], 0.0)
    w = np.zeros((n_pts, n_pts))
    for e, (x, y) in enumerate(support):
        w[x, y] = w[y, x] = res.X[wblk][e]
    return value, AdversaryWitness(omega=omega, W=w, objective=float(np.sum(w))), res


@dataclass
class AdvResult:
    value: float
    witness: AdversaryWitness
    gamma: np.ndarray
    certified_lower: float
    filtered_value: float
    crosscheck_gap: float
    filtered: Gamma2Result = field(repr=False, default=None)


def adv_pm(spec: FunctionSpec, cross_tol: float = CROSSCHECK_TOL) -> AdvResult:
    """General adversary bound with both solve routes and a primal certificate.

    The witness SDP and the filtered norm of J - F against
    {Delta_j o (J - F)} must agree within cross_tol, else a
    ConsistencyError is raised. The returned Gamma is validated by
    adv_pm_certify and certifies the value from below.
    """
    deltas = build_filters(spec)
    f_gram = output_gram(spec)
    n_pts = spec.size
    a = np.ones((n_pts, n_pts)) - f_gram

    value, witness, _ = adversary_witness_value(f_gram, deltas)

    if not np.any(a != 0):
        gamma_mat = np.zeros((n_pts, n_pts))
        return AdvResult(value=0.0, witness=witness, gamma=gamma_mat,
                         certified_lower=0.0, filtered_value=0.0,
                         crosscheck_gap=0.0,
                         filtered=Gamma2Result(0.0, False, None))

    filtered = filtered_gamma2(a, [dj * a for dj in deltas])
    gap = abs(filtered.value - value) / (1.0 + abs(value))
    if gap > cross_tol:
        raise ConsistencyError(
            f"adversary SDP {value:.8f} and filtered norm {filtered.value:.8f} disagree")

    gamma_mat = _extract_gamma(a, filtered.dual_matrix, deltas, f_gram)
    certified = adv_pm_certify(spec, gamma_mat)
    return AdvResult(value=value, witness=witness, gamma=gamma_mat,
                     certified_lower=certified, filtered_value=filtered.value,
                     crosscheck_gap=gap, filtered=filtered)


def _extract_gamma(a: np.ndarray, dual_m: np.ndarray, deltas, f_gram: np.ndarray) -> np.ndarray:
    m = np.real(dual_m)
    m = (m + m.T) / 2
    gamma_mat = np.where(f_gram == 0, a.real * m, 0.0)
    scale = max((spectral_norm(gamma_mat * dj) for dj in deltas), default=0.0)
    if scale > 0:
        gamma_mat = gamma_mat / scale
    return gamma_mat


def adv_pm_certify(spec: FunctionSpec, gamma_mat) -> float:
    """Validate a max-form certificate and return its certified lower bound.

    Checks Gamma o F = 0 exactly and ||Gamma o Delta_j|| <= 1 + 1e-8 for
    every coordinate; the certified bound is ||Gamma||.
    """
    gamma_mat = np.asarray(gamma_mat, dtype=float)
    n_pts = spec.size
    if gamma_mat.shape != (n_pts, n_pts):
        raise CertificateError(f"certificate must be {n_pts}x{n_pts}")
    if np.max(np.abs(gamma_mat - gamma_mat.T)) > 1e-10 * (1 + np.max(np.abs(gamma_mat))):
        raise CertificateError("certificate must be symmetric")
    f_gram = output_gram(spec)
    if np.any((f_gram != 0) & (gamma_mat != 0)):
        raise CertificateError("certificate violates Gamma o F = 0")
    for j, dj in enumerate(build_filters(spec)):
        norm_j = spectral_norm(gamma_mat * dj)
        if norm_j > 1 + 1e-8:
            raise CertificateError(
                f"certificate violates ||Gamma o Delta_{j + 1}|| <= 1 (got {norm_j:.10f})")
    return spectral_norm(gamma_mat)


def query_distance(rho, sigma, deltas) -> Gamma2Result:
    """Filtered-norm distance between two Gram matrices."""
    rho = as_matrix(rho, square=True)
    sigma = as_matrix(sigma, square=True)
    if rho.shape != sigma.shape:
        raise ValueError("Gram matrices must have matching shapes")
    return filtered_gamma2(rho - sigma, deltas)


@dataclass
class SandwichReport:
    adv: float
    qdist: float
    ratio: float
    output_count: int
    upper_factor: float
    passed: bool
    lower_margin: float
    upper_margin: float
    equality_margin: float | None


def sandwich_check(spec: FunctionSpec, tol: float = 1e-4) -> SandwichReport:
    """Check ADV <= filtered distance <= 2(1 - 1/|E|) ADV, equality when |E| = 2."""
    res = adv_pm(spec)
    adv, qdist = res.value, res.filtered_value
    n_outputs = len(spec.output_alphabet)
    factor = 2 * (1 - 1 / n_outputs) if n_outputs > 0 else 0.0
    lower_margin = qdist - adv               # >= -tol required
    upper_margin = factor * adv - qdist      # >= -tol required
    scale = 1.0 + abs(adv)
    passed = lower_margin >= -tol * scale and upper_margin >= -tol * scale
    equality_margin = None
    if n_outputs <= 2:
        equality_margin = abs(qdist - adv)
        passed = passed and equality_margin <= tol * scale
    ratio = qdist / adv if adv > 0 else (0.0 if qdist == 0 else np.inf)
    return SandwichReport(adv=adv, qdist=qdist, ratio=ratio, output_count=n_outputs,
                          upper_factor=factor, passed=passed,
                          lower_margin=lower_margin, upper_margin=upper_margin,
                          equality_margin=equality_margin)


# -- bounded-error query distance ---------------------------------------------


@dataclass
class QDeltaResult:
    value: float
    sdp_result: sdp.SdpResult = field(repr=False, default=None)


def _qdelta_program(rho, sigma, deltas, delta, noncoherent: bool,
                    unit_diagonal_sigma_prime: bool):
    rho = validate_gram(rho, name="rho")
    sigma = validate_gram(sigma, name="sigma")
    if rho.shape != sigma.shape:
        raise ValueError("Gram matrices must have matching shapes")
    mats = norms.validate_filters(deltas)
    d = rho.shape[0]
    if mats[0].shape != (d, d):
        raise ValueError("filters must match the Gram dimension")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n = len(mats)
    iscomplex = bool(np.any(np.abs(rho.imag) > 0) or np.any(np.abs(sigma.imag) > 0)
                     or any(np.any(np.abs(z.imag) > 0) for z in mats))

    prog = sdp.SdpProgram(dim_cap=4096)
    grams = [sdp.HermitianVar(prog, 2 * d, iscomplex=iscomplex) for _ in range(n)]
    sig_p = sdp.HermitianVar(prog, d, iscomplex=iscomplex)
    ball = sdp.HermitianVar(prog, 2 * d, iscomplex=iscomplex)
    s_var = sdp.HermitianVar(prog, d, iscomplex=iscomplex) if noncoherent else None
    t = prog.add_nonneg_block(1)
    load_slack = prog.add_nonneg_block(2 * d)
    ball_slack = prog.add_nonneg_block(2 * d)
    prog.add_objective_term(t, 0, w=1.0)

    for x in range(d):
        for y in range(d):
            row = sdp.ComplexRow(prog)
            for j in range(n):
                zj = mats[j][x, y]
                if zj != 0:
                    row.add(grams[j], x, d + y, zj)
            row.add(sig_p, x, y, 1.0)
            row.finalize(rho[x, y])
    for x in range(d):
        row = sdp.ComplexRow(prog)
        for j in range(n):
            row.add(grams[j], x, x, 1.0)
        row.add_scalar(load_slack, x, 1.0).add_scalar(t, 0, -1.0)
        row.finalize(0.0)
    for y in range(d):
        row = sdp.ComplexRow(prog)
        for j in range(n):
            row.add(grams[j], d + y, d + y, 1.0)
        row.add_scalar(load_slack, d + y, 1.0).add_scalar(t, 0, -1.0)
        row.finalize(0.0)

    # gamma_2 ball: sigma' - target = <ball u_x | ball v_y> with loads <= delta
    for x in range(d):
        for y in range(d):
            row = sdp.ComplexRow(prog)
            row.add(ball, x, d + y, 1.0)
            row.add(sig_p, x, y, -1.0)
            if noncoherent:
                if sigma[x, y] != 0:
                    row.add(s_var, x, y, sigma[x, y])
                row.finalize(0.0)
            else:
                row.finalize(-sigma[x, y])
    for i in range(2 * d):
        row = sdp.ComplexRow(prog)
        row.add(ball, i, i, 1.0)
        row.add_scalar(ball_slack, i, 1.0)
        row.finalize(delta)

    if noncoherent:
        for x in range(d):
            sdp.ComplexRow(prog).add(s_var, x, x, 1.0).finalize(1.0)
    if unit_diagonal_sigma_prime:
        for x in range(d):
            sdp.ComplexRow(prog).add(sig_p, x, x, 1.0).finalize(1.0)
    return prog


def q_delta(rho, sigma, deltas, delta: float,
            unit_diagonal_sigma_prime: bool = False) -> QDeltaResult:
    """Bounded-error query distance: closest admissible final Gram matrix.

    Minimizes the filtered distance from rho to sigma' over PSD sigma'
    whose plain-norm distance to sigma is at most delta. sigma' carries no
    unit-diagonal constraint by default; pass unit_diagonal_sigma_prime to
    restrict to normalized final states.
    """
    prog = _qdelta_program(rho, sigma, deltas, delta, noncoherent=False,
                           unit_diagonal_sigma_prime=unit_diagonal_sigma_prime)
    res = sdp.require_optimal(sdp.solve(prog), "bounded-error distance SDP")
    return QDeltaResult(value=float(res.primal_value), sdp_result=res)


def q_delta_nc(rho, sigma, deltas, delta: float) -> QDeltaResult:
    """Non-coherent variant: garbage phases enter through a unit-diagonal S."""
    prog = _qdelta_program(rho, sigma, deltas, delta, noncoherent=True,
                           unit_diagonal_sigma_prime=False)
    res = sdp.require_optimal(sdp.solve(prog), "non-coherent distance SDP")
    return QDeltaResult(value=float(res.primal_value), sdp_result=res)
