"""Construction and simulation of the reflection-product conversion algorithm.

Given Gram matrices rho, sigma over a query domain and a filtered-norm
certificate {u_xj}, {v_xj} for W = the filtered distance, this module builds
the algorithm's geometric objects:

    t_{y+-} = (|0>|rho_y> +- |1>|sigma_y>) / sqrt(2)
    psi_y   = (eps / sqrt(W)) t_{y-} - sum_j |j>|mu_{y_j}>|u_yj>
    Pi_y    = 1 - sum_j |j><j| x |mu_{y_j}><mu_{y_j}| x 1
    Lambda  = projector onto the orthogonal complement of span{psi_y}
    U_x     = (2 Pi_x - 1)(2 Lambda - 1)

and simulates phase detection as the exact eigenspace reflection
2 P_Theta - 1 on U_x's spectrum (error parameter of the detection routine
idealized to zero; eigenvectors with 0 < |theta| <= Theta are fixed).
Per-input reports record the eigenphase histogram, the two overlap claims,
the final conversion error against both the guaranteed 4*eps bound and the
tighter ideal-reflection bound (sqrt(2)+1)*eps, and the query-count
estimate ceil(C log(1/delta) / Theta) with C = 100.

Also here: the effective-spectral-gap margin check for arbitrary reflection
pairs, the one-query and fractional-query certificates bounding the
filtered distance moved by a single (fractional) oracle call, and both
directions of the plain-norm output condition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg, norms
from .adversary import SYMBOLS, FunctionSpec, output_gram, validate_gram
from .norms import Factorization, filtered_gamma2
from .linalg import as_matrix, complement_basis, psd_factorize, spectral_norm

ZERO_PHASE_TOL = 1e-10  # bucket |e^{i theta} - 1| below this as phase zero
QUERY_CONSTANT = 100    # phase-detection call count: ceil(C log(1/delta) / Theta)


class BoundViolation(RuntimeError):
    """A proven inequality failed numerically: bad certificate or a bug."""


# -- the explicit unit-vector system behind gamma2(J - I) ---------------------


@dataclass(frozen=True)
class MuNuSystem:
    """Unit vectors with <mu_i|nu_j> = k/(2(k-1)) exactly when i != j."""

    k: int
    alpha: float
    mu: np.ndarray  # (k, k), row i = mu_i
    nu: np.ndarray

    def cross_gram(self) -> np.ndarray:
        return self.mu.conj() @ self.nu.T


def build_mu_nu(k: int) -> MuNuSystem:
    if k < 2:
        raise ValueError("alphabet size must be at least 2")
    alpha = math.sqrt(0.5 - math.sqrt(k - 1) / k)
    beta = math.sqrt(1 - alpha ** 2)
    mu = np.zeros((k, k))
    nu = np.zeros((k, k))
    for i in range(k):
        mu[i, :] = beta / math.sqrt(k - 1)
        mu[i, i] = -alpha
        nu[i, :] = alpha / math.sqrt(k - 1)
        nu[i, i] = beta
    system = MuNuSystem(k=k, alpha=alpha, mu=mu, nu=nu)
    target = k / (2 * (k - 1)) * (1 - np.eye(k))
    gram = system.cross_gram()
    if np.max(np.abs(np.linalg.norm(mu, axis=1) - 1)) > 1e-12 or \
       np.max(np.abs(np.linalg.norm(nu, axis=1) - 1)) > 1e-12:
        raise AssertionError("mu/nu vectors failed to normalize")
    if np.max(np.abs(gram - target)) > 1e-10:
        raise AssertionError("mu/nu cross Gram deviates from its closed form")
    return system


def canonical_states(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Unit-vector realizations of two Gram matrices in H_rho (+) H_sigma.

    Cross inner products <rho_x|sigma_y> vanish by the direct-sum embedding;
    only the two Gram matrices are problem data.
    """
    rho = validate_gram(rho, unit_diagonal=True, name="rho")
    sigma = validate_gram(sigma, unit_diagonal=True, name="sigma")
    if rho.shape != sigma.shape:
        raise ValueError("Gram matrices must have matching shapes")
    fr = psd_factorize(rho)
    fs = psd_factorize(sigma)
    m1 = fr[0].size if fr else 0
    m2 = fs[0].size if fs else 0
    n_pts = rho.shape[0]
    rho_vecs = np.zeros((n_pts, m1 + m2), dtype=complex)
    sigma_vecs = np.zeros((n_pts, m1 + m2), dtype=complex)
    for x in range(n_pts):
        rho_vecs[x, :m1] = fr[x]
        sigma_vecs[x, m1:] = fs[x]
    return rho_vecs, sigma_vecs


def _domain_info(domain, k: int | None = None):
    """Normalize a FunctionSpec or word list to (words, symbol indices, k)."""
    if isinstance(domain, FunctionSpec):
        words = domain.domain
        sym = np.array([[domain.symbol_index(j, w[j]) for j in range(domain.arity)]
                        for w in words])
        k_eff = max(2, domain.alphabet_size)
    else:
        words = tuple(domain)
        if not words:
            raise ValueError("domain must be nonempty")
        n = len(words[0])
        if any(len(w) != n for w in words):
            raise ValueError("domain words must share one length")
        sym = np.array([[SYMBOLS.index(ch) for ch in w] for w in words])
        k_eff = max(2, int(sym.max()) + 1)
    if k is not None:
        if k < k_eff:
            raise ValueError(f"alphabet size {k} too small for the domain")
        k_eff = k
    return words, sym, k_eff


def domain_filters(domain, k: int | None = None) -> list[np.ndarray]:
    """Difference filters for a FunctionSpec or raw word list."""
    _, sym, _ = _domain_info(domain, k)
    return [(sym[:, j][:, None] != sym[:, j][None, :]).astype(float)
            for j in range(sym.shape[1])]


class AlgorithmInstance:
    """All data of one constructed conversion algorithm.

    Immutable after build apart from an eigendecomposition cache; per-input
    unitaries share the projector Lambda and differ only in Pi_x.
    """

    def __init__(self, words, sym, k, eps, w_value, cert: Factorization,
                 rho_vecs, sigma_vecs, deltas):
        self.words = tuple(words)
        self.sym = sym
        self.k = k
        self.n = sym.shape[1]
        self.eps = float(eps)
        self.W = float(w_value)
        self.theta = self.eps ** 2 / self.W
        self.detection_error = self.eps  # the delta parameter of phase detection
        self.cert = cert
        self.m = cert.dim
        self.deltas = deltas
        self.rho_vecs = rho_vecs
        self.sigma_vecs = sigma_vecs
        self.dim_h = rho_vecs.shape[1]
        self.dim_first = 2 * self.dim_h
        self.dim = self.dim_first + self.n * self.k * self.m
        self.mu_nu = build_mu_nu(self.k)

        n_pts = len(self.words)
        self.t_plus = np.zeros((n_pts, self.dim), dtype=complex)
        self.t_minus = np.zeros((n_pts, self.dim), dtype=complex)
        for x in range(n_pts):
            self.t_plus[x, :self.dim_h] = rho_vecs[x] / math.sqrt(2)
            self.t_plus[x, self.dim_h:self.dim_first] = sigma_vecs[x] / math.sqrt(2)
            self.t_minus[x, :self.dim_h] = rho_vecs[x] / math.sqrt(2)
            self.t_minus[x, self.dim_h:self.dim_first] = -sigma_vecs[x] / math.sqrt(2)

        self.psi = np.zeros((n_pts, self.dim), dtype=complex)
        scale = self.eps / math.sqrt(self.W)
        for y in range(n_pts):
            vec = scale * self.t_minus[y].copy()
            for j in range(self.n):
                mu = self.mu_nu.mu[self.sym[y, j]]
                block = np.kron(mu, cert.u[y, j])
                start = self.dim_first + j * self.k * self.m
                vec[start:start + self.k * self.m] -= block
            self.psi[y] = vec

        self.lambda_proj = linalg.complement_projector(list(self.psi), dim=self.dim)
        self._eig_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

        for x in range(n_pts):
            if abs(np.linalg.norm(self.t_plus[x]) - 1) > 1e-10 or \
               abs(np.linalg.norm(self.t_minus[x]) - 1) > 1e-10:
                raise AssertionError("t vectors are not unit; Gram diagonals off")
            if np.linalg.norm(self.lambda_proj @ self.psi[x]) > 1e-8 * (1 + np.linalg.norm(self.psi[x])):
                raise AssertionError("Lambda fails to annihilate a psi vector")

    # -- per-input operators ------------------------------------------------

    def index_of(self, x) -> int:
        if isinstance(x, (int, np.integer)):
            return int(x)
        return self.words.index(x)

    def projector_pi(self, x) -> np.ndarray:
        xi = self.index_of(x)
        pi = np.eye(self.dim, dtype=complex)
        for j in range(self.n):
            mu = self.mu_nu.mu[self.sym[xi, j]]
            blk = np.kron(np.outer(mu, mu.conj()), np.eye(self.m))
            start = self.dim_first + j * self.k * self.m
            sl = slice(start, start + self.k * self.m)
            pi[sl, sl] -= blk
        return pi

    def unitary(self, x) -> np.ndarray:
        pi = self.projector_pi(x)
        lam = self.lambda_proj
        return (2 * pi - np.eye(self.dim)) @ (2 * lam - np.eye(self.dim))

    def eigensystem(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Phases in (-pi, pi] and an orthonormal eigenbasis of U_x."""
        xi = self.index_of(x)
        if xi not in self._eig_cache:
            u = self.unitary(xi)
            t, z = scipy.linalg.schur(u, output="complex")
            off = np.max(np.abs(t - np.diag(np.diag(t))))
            if off > 1e-7:
                raise AssertionError(f"U_x not numerically normal (off-diagonal {off:.2e})")
            lam = np.diag(t)
            mods = np.abs(lam)
            if np.max(np.abs(mods - 1)) > 1e-8:
                raise AssertionError("U_x eigenvalues leave the unit circle")
            phases = np.angle(lam)
            phases[phases <= -math.pi + 1e-15] = math.pi
            self._eig_cache[xi] = (phases, z)
        return self._eig_cache[xi]

    def phase_projector(self, x, theta: float) -> np.ndarray:
        """P_theta, the projector onto eigenphases |phase| <= theta.

        theta = 0 selects the numerically exact kernel bucket
        |e^{i phase} - 1| < 1e-10.
        """
        phases, z = self.eigensystem(x)
        if theta <= 0:
            mask = np.abs(np.exp(1j * phases) - 1) < ZERO_PHASE_TOL
        else:
            mask = np.abs(phases) <= theta
        zsel = z[:, mask]
        return zsel @ zsel.conj().T

    def initial_state(self, x) -> np.ndarray:
        xi = self.index_of(x)
        vec = np.zeros(self.dim, dtype=complex)
        vec[:self.dim_h] = self.rho_vecs[xi]
        return vec

    def target_state(self, x) -> np.ndarray:
        xi = self.index_of(x)
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.dim_h:self.dim_first] = self.sigma_vecs[xi]
        return vec

    def claim_fixed_point(self, x) -> np.ndarray:
        """The explicit U_x-invariant vector witnessing the large t_+ overlap."""
        xi = self.index_of(x)
        phi = self.t_plus[xi].copy()
        coeff = 0.5 * (self.eps / math.sqrt(self.W)) * (2 * (self.k - 1) / self.k)
        for j in range(self.n):
            nu = self.mu_nu.nu[self.sym[xi, j]]
            start = self.dim_first + j * self.k * self.m
            phi[start:start + self.k * self.m] += coeff * np.kron(nu, self.cert.v[xi, j])
        return phi


def build_instance(domain, rho, sigma, eps: float, k: int | None = None,
                   deltas=None) -> AlgorithmInstance:
    """Construct the conversion algorithm from a filtered-norm certificate.

    Requires 0 < eps < W where W is the filtered distance of rho - sigma
    against the domain's difference filters. `deltas`, when supplied, must
    equal those coordinate filters; the construction is tied to them.
    """
    words, sym, k_eff = _domain_info(domain, k)
    rho = validate_gram(rho, unit_diagonal=True, name="rho")
    sigma = validate_gram(sigma, unit_diagonal=True, name="sigma")
    derived = [(sym[:, j][:, None] != sym[:, j][None, :]).astype(float)
               for j in range(sym.shape[1])]
    if deltas is not None:
        supplied = norms.validate_filters(deltas)
        if len(supplied) != len(derived) or any(
                np.any(s != d) for s, d in zip(supplied, derived)):
            raise ValueError("supplied filters are not the domain's difference filters")
    if rho.shape[0] != len(words):
        raise ValueError("Gram size does not match the domain")

    filt = filtered_gamma2(rho - sigma, derived)
    if filt.infeasible:
        raise ValueError("filtered distance is infinite; no algorithm exists")
    w_value = filt.value
    if not (0 < eps < w_value):
        raise ValueError(f"eps must lie in (0, W) = (0, {w_value:.6g})")
    rho_vecs, sigma_vecs = canonical_states(rho, sigma)
    return AlgorithmInstance(words=words, sym=sym, k=k_eff, eps=eps,
                             w_value=w_value, cert=filt.cert,
                             rho_vecs=rho_vecs, sigma_vecs=sigma_vecs,
                             deltas=derived)


def evaluation_instance(spec: FunctionSpec, eps: float) -> AlgorithmInstance:
    """Instance for function evaluation: rho = J, sigma = output agreement."""
    n_pts = spec.size
    return build_instance(spec, np.ones((n_pts, n_pts)), output_gram(spec), eps)


def eigenphases(inst: AlgorithmInstance, x) -> np.ndarray:
    """Sorted eigenphases of U_x in (-pi, pi]."""
    phases, _ = inst.eigensystem(x)
    return np.sort(phases)


def ideal_phase_detect(inst: AlgorithmInstance, x, state, theta: float | None = None) -> np.ndarray:
    """Exact eigenspace reflection 2 P_Theta - 1 applied to a state.

    Phases with |phase| <= Theta (the gray zone included) are fixed, the
    rest negated; the detection-error parameter is idealized to zero.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (inst.dim,):
        raise ValueError(f"state must have dimension {inst.dim}")
    if theta is None:
        theta = inst.theta
    p = inst.phase_projector(x, theta)
    return 2 * (p @ state) - state


@dataclass
class ClaimsReport:
    p0_tplus_sq: float
    tplus_bound: float
    tplus_margin: float
    ptheta_tminus_sq: float
    tminus_bound: float
    tminus_margin: float


def verify_claims(inst: AlgorithmInstance, x, strict: bool = True) -> ClaimsReport:
    """Check the two overlap claims for one input; margins are slack amounts."""
    xi = inst.index_of(x)
    p0 = inst.phase_projector(xi, 0.0)
    ptheta = inst.phase_projector(xi, inst.theta)
    plus_sq = float(np.linalg.norm(p0 @ inst.t_plus[xi]) ** 2)
    minus_sq = float(np.linalg.norm(ptheta @ inst.t_minus[xi]) ** 2)
    tplus_bound = 1 - inst.eps ** 2
    tminus_bound = (inst.theta ** 2 / 4) * (inst.W ** 2 / inst.eps ** 2 + 1)
    report = ClaimsReport(
        p0_tplus_sq=plus_sq,
        tplus_bound=tplus_bound,
        tplus_margin=plus_sq - tplus_bound,
        ptheta_tminus_sq=minus_sq,
        tminus_bound=tminus_bound,
        tminus_margin=tminus_bound - minus_sq,
    )
    if strict and (report.tplus_margin < -1e-10 or report.tminus_margin < -1e-10):
        raise BoundViolation(f"overlap claim violated on input {inst.words[xi]}: {report}")
    return report


@dataclass
class ConversionRecord:
    word: str
    error: float
    error_bound: float
    ideal_bound: float
    fidelity: float
    claims: ClaimsReport
    query_estimate: int
    phase_histogram: list[tuple[float, int]]


def _phase_histogram(phases: np.ndarray) -> list[tuple[float, int]]:
    rounded = np.round(phases, 9)
    values, counts = np.unique(rounded, return_counts=True)
    return [(float(v), int(c)) for v, c in zip(values, counts)]


def run_conversion(inst: AlgorithmInstance, x, strict: bool = True) -> ConversionRecord:
    """Simulate one input end to end and enforce the final-error bound."""
    xi = inst.index_of(x)
    out = ideal_phase_detect(inst, xi, inst.initial_state(xi))
    target = inst.target_state(xi)
    error = float(np.linalg.norm(out - target))
    error_bound = 4 * inst.eps
    ideal_bound = (math.sqrt(2) + 1) * inst.eps
    claims = verify_claims(inst, xi, strict=strict)
    record = ConversionRecord(
        word=inst.words[xi],
        error=error,
        error_bound=error_bound,
        ideal_bound=ideal_bound,
        fidelity=float(abs(np.vdot(target, out))),
        claims=claims,
        query_estimate=math.ceil(QUERY_CONSTANT * math.log(1 / inst.detection_error) / inst.theta),
        phase_histogram=_phase_histogram(inst.eigensystem(xi)[0]),
    )
    if strict and error >= error_bound:
        raise BoundViolation(
            f"conversion error {error:.6f} >= 4 eps = {error_bound:.6f} on {inst.words[xi]}")
    return record


@dataclass
class SimulationReport:
    eps: float
    W: float
    theta: float
    dim: int
    cert_rank: int
    records: list[ConversionRecord]

    @property
    def max_error(self) -> float:
        return max(r.error for r in self.records)

    @property
    def all_within_bounds(self) -> bool:
        return all(r.error < r.error_bound for r in self.records)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "W": self.W, "theta": self.theta,
            "dimension": self.dim, "certificate_rank": self.cert_rank,
            "max_error": self.max_error,
            "inputs": [
                {
                    "word": r.word, "error": r.error,
                    "error_bound": r.error_bound, "ideal_bound": r.ideal_bound,
                    "fidelity": r.fidelity,
                    "p0_tplus_sq": r.claims.p0_tplus_sq,
                    "tplus_bound": r.claims.tplus_bound,
                    "ptheta_tminus_sq": r.claims.ptheta_tminus_sq,
                    "tminus_bound": r.claims.tminus_bound,
                    "query_estimate": r.query_estimate,
                }
                for r in self.records
            ],
        }

    def histogram_csv(self, x_index: int = 0) -> str:
        lines = ["phase,multiplicity"]
        for phase, mult in self.records[x_index].phase_histogram:
            lines.append(f"{phase:.9f},{mult}")
        return "\n".join(lines) + "\n"


def simulate(inst: AlgorithmInstance, strict: bool = True) -> SimulationReport:
    records = [run_conversion(inst, x, strict=strict) for x in range(len(inst.words))]
    return SimulationReport(eps=inst.eps, W=inst.W, theta=inst.theta,
                            dim=inst.dim, cert_rank=inst.m, records=records)


# -- effective spectral gap ----------------------------------------------------


def spectral_gap_check(pi, lam, w, theta: float) -> float:
    """Margin (theta/2)||w|| - ||P_theta Pi w|| for R = (2 Pi - 1)(2 Lambda - 1).

    Preconditions: pi and lam are orthogonal projections and lam annihilates
    w, all within 1e-8. The returned margin is nonnegative up to roundoff.
    """
    pi = as_matrix(pi, square=True)
    lam = as_matrix(lam, square=True)
    w = np.asarray(w, dtype=complex).ravel()
    dim = pi.shape[0]
    if lam.shape != (dim, dim) or w.size != dim:
        raise ValueError("dimension mismatch")
    for name, p in (("Pi", pi), ("Lambda", lam)):
        if spectral_norm(p @ p - p) > 1e-8 or spectral_norm(p - p.conj().T) > 1e-8:
            raise ValueError(f"{name} is not an orthogonal projection")
    wnorm = float(np.linalg.norm(w))
    if np.linalg.norm(lam @ w) > 1e-8 * (1 + wnorm):
        raise ValueError("Lambda w = 0 violated")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    r = (2 * pi - np.eye(dim)) @ (2 * lam - np.eye(dim))
    t, z = scipy.linalg.schur(r, output="complex")
    phases = np.angle(np.diag(t))
    if theta <= 0:
        mask = np.abs(np.exp(1j * phases) - 1) < ZERO_PHASE_TOL
    else:
        mask = np.abs(phases) <= theta
    zsel = z[:, mask]
    overlap = float(np.linalg.norm(zsel.conj().T @ (pi @ w)))
    return (theta / 2) * wnorm - overlap


# -- one-query and fractional-query certificates -------------------------------


@dataclass
class OneQueryCertificate:
    factorization: Factorization
    rho: np.ndarray
    sigma: np.ndarray
    residual: float
    objective: float


def _query_slices(states: np.ndarray, n: int):
    n_pts, total = states.shape
    if total % n != 0:
        raise ValueError("state dimension is not divisible by the query-register size")
    r = total // n
    return states.reshape(n_pts, n, r)


def one_query_certificate(states, oracles, words, k: int | None = None) -> OneQueryCertificate:
    """Explicit factorization bounding the distance moved by one query.

    `states[x]` lives in C^n (x) C^r with the query register first;
    `oracles[j][a]` is the r-by-r unitary applied to the work register when
    coordinate j holds symbol a (this block structure is exactly the oracle
    convention O_x^dag O_y Gamma_j = Gamma_j whenever x_j = y_j). The
    factorization certifies filtered distance at most 2 and its residual
    is checkable without any SDP.
    """
    words, sym, k_eff = _domain_info(words, k)
    states = np.asarray(states, dtype=complex)
    n_pts, n = len(words), sym.shape[1]
    if states.shape[0] != n_pts:
        raise ValueError("one state per domain word required")
    slices = _query_slices(states, n)
    r = slices.shape[2]
    used = {(j, sym[x, j]) for x in range(len(words)) for j in range(n)}
    for j, a in sorted(used):
        o = as_matrix(oracles[j][a], square=True)
        if o.shape != (r, r):
            raise ValueError("oracle block has wrong dimensions")
        if spectral_norm(o.conj().T @ o - np.eye(r)) > 1e-10:
            raise ValueError(f"oracle block ({j}, {a}) is not unitary")

    applied = np.zeros_like(slices)
    for x in range(n_pts):
        for j in range(n):
            o = np.asarray(oracles[j][sym[x, j]], dtype=complex)
            applied[x, j] = o @ slices[x, j]

    rho = np.einsum("xjr,yjr->xy", slices.conj(), slices)
    sigma = np.einsum("xjr,yjr->xy", applied.conj(), applied)

    m = 2 * r
    u = np.zeros((n_pts, n, m), dtype=complex)
    v = np.zeros((n_pts, n, m), dtype=complex)
    for x in range(n_pts):
        for j in range(n):
            u[x, j, :r] = slices[x, j]
            u[x, j, r:] = applied[x, j]
            v[x, j, :r] = slices[x, j]
            v[x, j, r:] = -applied[x, j]
    loads = [float(np.sum(np.abs(u[x]) ** 2)) for x in range(n_pts)]
    fact = Factorization(dim=m, u=u, v=v, value=max(loads))

    deltas = [(sym[:, j][:, None] != sym[:, j][None, :]).astype(float) for j in range(n)]
    rep = norms.check_factorization(rho - sigma, deltas, fact)
    return OneQueryCertificate(factorization=fact, rho=rho, sigma=sigma,
                               residual=rep.residual, objective=rep.objective)


@dataclass
class FractionalCertificate:
    lam: float
    p_matrices: list[np.ndarray]
    bound: float
    cost: float
    rho: np.ndarray
    sigma: np.ndarray
    residual: float
    min_eigenvalue: float


def fractional_query_certificate(states, words, lam: float) -> FractionalCertificate:
    """PSD decomposition certifying the distance moved by a lam-fractional query.

    Boolean input alphabet; the fractional phase oracle multiplies the j-th
    query slice by e^{i lam pi x_j}. Builds P_j = (1 - cos(lam pi)) M_j +
    sin(lam pi) M_j o E_j with E_j the Gram of e_b = b + i(1 - b), checks
    rho - sigma = sum_j P_j o Delta_j entrywise, each P_j PSD, and
    max_x sum_j P_j[x, x] <= p(lam) <= lam pi sqrt(2).
    """
    if not (0 <= lam <= 1):
        raise ValueError("lam must lie in [0, 1]")
    words, sym, k_eff = _domain_info(words)
    if k_eff > 2 or sym.max(initial=0) > 1:
        raise ValueError("fractional certificate requires a boolean input alphabet")
    states = np.asarray(states, dtype=complex)
    n_pts, n = len(words), sym.shape[1]
    slices = _query_slices(states, n)

    phases = np.exp(1j * lam * math.pi * sym)  # (n_pts, n)
    applied = slices * phases[:, :, None]
    rho = np.einsum("xjr,yjr->xy", slices.conj(), slices)
    sigma = np.einsum("xjr,yjr->xy", applied.conj(), applied)

    e_vals = np.where(sym == 1, 1.0 + 0.0j, 1.0j)  # e_b = b + i(1-b)
    deltas = []
    p_mats = []
    min_eig = math.inf
    for j in range(n):
        m_j = slices[:, j, :].conj() @ slices[:, j, :].T
        e_j = np.outer(e_vals[:, j].conj(), e_vals[:, j])
        p_j = (1 - math.cos(lam * math.pi)) * m_j + math.sin(lam * math.pi) * (m_j * e_j)
        p_mats.append(p_j)
        scale = 1 + spectral_norm(p_j)
        min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh((p_j + p_j.conj().T) / 2))) / scale)
        deltas.append((sym[:, j][:, None] != sym[:, j][None, :]).astype(float))

    recon = sum(p * d for p, d in zip(p_mats, deltas))
    residual = float(np.max(np.abs((rho - sigma) - recon)))
    cost = float(max(np.real(sum(p[x, x] for p in p_mats)) for x in range(n_pts)))
    p_lam = (1 - math.cos(lam * math.pi)) + math.sin(lam * math.pi)
    if residual > 1e-8:
        raise BoundViolation(f"fractional decomposition residual {residual:.2e}")
    if min_eig < -1e-8:
        raise BoundViolation(f"fractional P_j not PSD (relative min eig {min_eig:.2e})")
    if cost > p_lam + 1e-10 or p_lam > lam * math.pi * math.sqrt(2) + 1e-12:
        raise BoundViolation("fractional cost bound violated")
    return FractionalCertificate(lam=lam, p_matrices=p_mats, bound=lam * math.pi * math.sqrt(2),
                                 cost=cost, rho=rho, sigma=sigma, residual=residual,
                                 min_eigenvalue=min_eig)


# -- output condition -----------------------------------------------------------


def align_factors(a: np.ndarray, b: np.ndarray, rank_tol: float = 1e-8) -> np.ndarray:
    """Unitary U with A U = B for row-factor matrices sharing a Gram matrix.

    Realizes the unitary freedom of square roots: A A^H = B B^H implies the
    rows of A can be rotated onto the rows of B.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("factor matrices must share a shape")
    c = a @ a.conj().T
    eig = linalg.hermitian_eig((c + c.conj().T) / 2)
    w, vmat = eig.eigenvalues, eig.eigenvectors
    top = float(np.max(w)) if w.size else 0.0
    keep = w > rank_tol * max(top, 1e-300)
    vr = vmat[:, keep]
    dr = np.sqrt(w[keep])
    x = a.conj().T @ (vr / dr)
    y = b.conj().T @ (vr / dr)
    xc = complement_basis(list(x.T), dim=a.shape[1])
    yc = complement_basis(list(y.T), dim=a.shape[1])
    if xc.shape[1] != yc.shape[1]:
        raise ValueError("factor matrices do not share a Gram matrix")
    return x @ y.conj().T + xc @ yc.conj().T


@dataclass
class OutputConditionReport:
    eps_fidelity: float
    gamma2_value: float
    forward_bound: float
    forward_ok: bool
    unitary: np.ndarray
    min_alignment: float
    reverse_bound: float
    reverse_ok: bool


def output_condition(rho_vecs, sigma_vecs, tol: float = 1e-8) -> OutputConditionReport:
    """Both directions of the plain-norm output condition for an ensemble pair.

    Forward: from the per-input fidelities Re<rho_x|sigma_x> >= sqrt(1 - eps),
    the norm of the Gram difference is at most 2 sqrt(eps). Reverse: from a
    norm value eps', an explicit unitary aligns any factorizations of the two
    Gram matrices to alignment at least 1 - sqrt(2 eps').
    """
    rho_vecs = np.asarray(rho_vecs, dtype=complex)
    sigma_vecs = np.asarray(sigma_vecs, dtype=complex)
    if rho_vecs.shape != sigma_vecs.shape:
        raise ValueError("ensembles must have matching shapes")
    lengths = np.linalg.norm(rho_vecs, axis=1), np.linalg.norm(sigma_vecs, axis=1)
    if max(np.max(np.abs(ln - 1)) for ln in lengths) > 1e-8:
        raise ValueError("ensemble vectors must be unit")

    rho = rho_vecs.conj() @ rho_vecs.T
    sigma = sigma_vecs.conj() @ sigma_vecs.T
    res = norms.gamma2(rho - sigma)
    g2 = res.value

    fid = np.real(np.einsum("xi,xi->x", rho_vecs.conj(), sigma_vecs))
    eps_fid = float(max(0.0, np.max(1 - np.clip(fid, -1, 1) ** 2)))
    forward_bound = 2 * math.sqrt(eps_fid)
    forward_ok = g2 <= forward_bound + tol

    # reverse direction: build U from the norm certificate
    cert = res.cert
    alpha = cert.u[:, 0, :]
    beta = cert.v[:, 0, :]
    p = (alpha - beta) / 2
    q = (alpha + beta) / 2
    a_full = np.hstack([rho_vecs, p])
    b_full = np.hstack([sigma_vecs, q])
    u_mat = align_factors(a_full, b_full)
    pad = np.zeros_like(p)
    a0 = np.hstack([rho_vecs, pad])
    b0 = np.hstack([sigma_vecs, pad])
    aligned = a0 @ u_mat
    values = np.real(np.einsum("xi,xi->x", aligned.conj(), b0))
    min_align = float(np.min(values))
    reverse_bound = 1 - math.sqrt(2 * g2)
    reverse_ok = min_align >= reverse_bound - tol
    return OutputConditionReport(
        eps_fidelity=eps_fid, gamma2_value=g2,
        forward_bound=forward_bound, forward_ok=forward_ok,
        unitary=u_mat, min_alignment=min_align,
        reverse_bound=reverse_bound, reverse_ok=reverse_ok,
    )
