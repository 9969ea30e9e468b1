"""Function composition and the two-sided adversary composition bounds.

compose() builds f o g^n over the full n-fold product of g's domain, in
lexicographic order of the inner tuples. The upper bound multiplies the
outer adversary value by the inner evaluation distance; the lower bound
tensors balanced witnesses:

    Omega~ = d_g^{n-1} Lambda~ o Omega^{x n}
    W~     = V~ o (d_g Omega + W)^{x n}

which is feasible for the composed witness SDP with objective
d_f (d_g / 2)^n, certifying ADV(f o g^n) >= ADV(f) ADV(g) after trace
normalization. The construction needs boolean inputs for f and boolean
output for g; the even-numbers counterexample (regression-tested) shows
the restriction is genuine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import adversary as adv
from .adversary import (AdversaryWitness, CertificateError, FunctionSpec,
                        build_filters, output_gram)
from .norms import filtered_gamma2

MAX_INNER_POINTS = 16
MAX_COPIES = 2


@dataclass(frozen=True)
class ComposedSpec:
    outer: FunctionSpec
    inner: FunctionSpec
    copies: int
    spec: FunctionSpec
    lifts: tuple[str, ...]  # composed word -> outer input word


def compose(f: FunctionSpec, g: FunctionSpec, n: int,
            max_inner_points: int = MAX_INNER_POINTS,
            max_copies: int = MAX_COPIES) -> ComposedSpec:
    """Compose f with n copies of g over the full product domain."""
    if n < 1:
        raise ValueError("need at least one inner copy")
    if f.arity != n:
        raise ValueError(f"outer arity {f.arity} must equal the number of copies {n}")
    if n > max_copies or g.size > max_inner_points:
        raise ValueError("composed domain exceeds the desk-scale cap")
    for label in g.output_alphabet:
        if len(label) != 1:
            raise ValueError("inner output labels must be single symbols")
        for p in range(n):
            if label not in f.alphabets[p]:
                raise ValueError(
                    f"inner output {label!r} missing from outer alphabet at coordinate {p}")

    words = []
    lifts = []
    outputs = []
    for combo in itertools.product(g.domain, repeat=n):
        word = "".join(combo)
        lift = "".join(g.output(part) for part in combo)
        if lift not in f.domain:
            raise ValueError(f"lifted word {lift!r} is outside the outer domain")
        words.append(word)
        lifts.append(lift)
        outputs.append(f.output(lift))
    spec = FunctionSpec(alphabets=g.alphabets * n, domain=tuple(words),
                        out_labels=tuple(outputs))
    return ComposedSpec(outer=f, inner=g, copies=n, spec=spec, lifts=tuple(lifts))


def identity_on(labels, n: int) -> FunctionSpec:
    """Identity function on n-tuples over a label alphabet (direct-sum outer)."""
    labels = tuple(labels)
    words = ["".join(c) for c in itertools.product(labels, repeat=n)]
    return FunctionSpec(alphabets=(labels,) * n, domain=tuple(words),
                        out_labels=tuple(words))


@dataclass
class UpperBoundReport:
    composed_adv: float
    outer_adv: float
    inner_distance: float
    bound: float
    margin: float
    passed: bool


def check_upper(f: FunctionSpec, g: FunctionSpec, n: int, tol: float = 1e-4) -> UpperBoundReport:
    """Check ADV(f o g^n) <= ADV(f) * filtered distance of g's evaluation."""
    composed = compose(f, g, n)
    composed_adv = adv.adv_pm(composed.spec).value
    outer_adv = adv.adv_pm(f).value
    g_gram = output_gram(g)
    inner = filtered_gamma2(np.ones(g_gram.shape) - g_gram, build_filters(g))
    bound = outer_adv * inner.value
    margin = bound - composed_adv
    return UpperBoundReport(composed_adv=composed_adv, outer_adv=outer_adv,
                            inner_distance=inner.value, bound=bound, margin=margin,
                            passed=margin >= -tol * (1 + abs(bound)))


def balance_witness(g: FunctionSpec, witness: AdversaryWitness) -> AdversaryWitness:
    """Rebalance a feasible witness so each output class carries trace 1/2.

    Scales the two output blocks by c = sqrt(T1 / T0), renormalizes the
    diagonal to unit trace (the weight matrix is untouched, so the
    objective is unchanged), and re-asserts feasibility plus the
    strengthened condition objective * Omega +/- W >= 0.
    """
    if not g.is_boolean_output:
        raise ValueError("witness balancing needs a two-valued output")
    deltas = build_filters(g)
    agreement = output_gram(g)
    check = adv.check_witness(witness, deltas, agreement)
    if check.min_eigenvalue < -1e-8 or check.support_violation > 1e-12:
        raise ValueError("input witness is not feasible")

    label0, label1 = g.output_alphabet
    mask0 = np.array([lab == label0 for lab in g.out_labels])
    t0 = float(np.sum(witness.omega[mask0]))
    t1 = float(np.sum(witness.omega[~mask0]))
    if t0 <= 0 or t1 <= 0:
        raise ValueError("witness places no weight on one output class")
    c = math.sqrt(t1 / t0)
    omega = witness.omega.copy()
    omega[mask0] *= c
    omega[~mask0] /= c
    omega /= 2 * math.sqrt(t0 * t1)

    balanced = AdversaryWitness(omega=omega, W=witness.W.copy(),
                                objective=float(np.sum(witness.W)))
    halves = (float(np.sum(omega[mask0])), float(np.sum(omega[~mask0])))
    if max(abs(h - 0.5) for h in halves) > 1e-6:
        raise CertificateError(f"trace split {halves} is not 1/2, 1/2")
    d_g = balanced.objective
    strengthened = d_g * np.diag(omega)
    for sign in (1.0, -1.0):
        m = strengthened + sign * balanced.W
        if float(np.min(np.linalg.eigvalsh(m))) < -1e-8:
            raise CertificateError("strengthened PSD condition d_g Omega +/- W failed")
    recheck = adv.check_witness(balanced, deltas, agreement)
    if recheck.min_eigenvalue < -1e-8:
        raise CertificateError("balanced witness lost feasibility")
    return balanced


@dataclass
class ComposedWitnessResult:
    witness: AdversaryWitness
    value: float
    outer_value: float
    inner_value: float
    objective_unnormalized: float
    objective_target: float
    trace_unnormalized: float
    trace_target: float
    min_eigenvalue: float
    support_exact: bool


def compose_witness(f: FunctionSpec, g: FunctionSpec, n: int,
                    f_witness: AdversaryWitness | None = None,
                    g_witness: AdversaryWitness | None = None,
                    psd_tol: float = 1e-6) -> ComposedWitnessResult:
    """Tensor balanced witnesses into a lower-bound witness for f o g^n.

    Witnesses default to freshly solved, balanced optima. The construction
    is verified entry by entry: objective d_f (d_g / 2)^n, exact support
    against the composed agreement pattern, trace d_g^(n-1) / 2^n, and
    PSD-ness of Omega~ +/- W~ o Delta_(p,q) for every composed coordinate.
    """
    if any(size != 2 for size in f.alphabet_sizes):
        raise ValueError("composition lower bound needs boolean outer inputs")
    if not g.is_boolean_output:
        raise ValueError("composition lower bound needs a boolean inner output")
    if f.size != 2 ** f.arity:
        raise ValueError("outer function must be total on its boolean cube")
    composed = compose(f, g, n)

    if f_witness is None:
        f_witness = adv.adv_pm(f).witness
    if g_witness is None:
        g_witness = balance_witness(g, adv.adv_pm(g).witness)
    d_f = f_witness.objective
    d_g = g_witness.objective

    lam_diag = {w: f_witness.omega[f.domain.index(w)] for w in f.domain}
    strengthened = d_g * np.diag(g_witness.omega) + g_witness.W  # (d_g Omega + W)

    points = composed.spec.domain
    n_pts = len(points)
    g_index = {w: i for i, w in enumerate(g.domain)}
    parts = [tuple(g_index[p[i * g.arity:(i + 1) * g.arity]] for i in range(n))
             for p in points]

    omega_t = np.zeros(n_pts)
    for xi, x in enumerate(points):
        prod = d_g ** (n - 1) * lam_diag[composed.lifts[xi]]
        for part in parts[xi]:
            prod *= g_witness.omega[part]
        omega_t[xi] = prod

    f_index = {w: i for i, w in enumerate(f.domain)}
    w_t = np.zeros((n_pts, n_pts))
    for xi in range(n_pts):
        for yi in range(n_pts):
            v_entry = f_witness.W[f_index[composed.lifts[xi]], f_index[composed.lifts[yi]]]
            if v_entry == 0.0:
                continue
            prod = v_entry
            for px, py in zip(parts[xi], parts[yi]):
                prod *= strengthened[px, py]
            w_t[xi, yi] = prod

    objective_target = d_f * (d_g / 2) ** n
    objective = float(np.sum(w_t))
    trace_target = d_g ** (n - 1) / 2 ** n
    trace = float(np.sum(omega_t))

    composed_agreement = output_gram(composed.spec)
    support_exact = not np.any((composed_agreement != 0) & (w_t != 0))

    min_eig = math.inf
    om = np.diag(omega_t)
    for dj in build_filters(composed.spec):
        for sign in (1.0, -1.0):
            m = om + sign * (w_t * dj)
            min_eig = min(min_eig, float(np.min(np.linalg.eigvalsh(m))))

    if abs(objective - objective_target) > 1e-4 * (1 + abs(objective_target)):
        raise CertificateError(
            f"composed objective {objective:.8f} != {objective_target:.8f}")
    if abs(trace - trace_target) > 1e-6 * (1 + abs(trace_target)):
        raise CertificateError(f"composed trace {trace:.10f} != {trace_target:.10f}")
    if not support_exact:
        raise CertificateError("composed weight leaks onto the agreement pattern")
    if min_eig < -psd_tol:
        raise CertificateError(f"composed witness PSD violation {min_eig:.2e}")

    witness = AdversaryWitness(omega=omega_t / trace, W=w_t / trace,
                               objective=objective / trace)
    return ComposedWitnessResult(
        witness=witness, value=objective / trace,
        outer_value=d_f, inner_value=d_g,
        objective_unnormalized=objective, objective_target=objective_target,
        trace_unnormalized=trace, trace_target=trace_target,
        min_eigenvalue=min_eig, support_exact=support_exact,
    )


@dataclass
class DirectSumReport:
    n: int
    single_adv: float
    product_adv: float
    margin: float
    passed: bool


def direct_sum_check(g: FunctionSpec, n: int, tol: float = 1e-3) -> DirectSumReport:
    """ADV of n independent copies equals n times ADV, by direct SDP."""
    outer = identity_on(g.output_alphabet, n)
    composed = compose(outer, g, n)
    product_adv = adv.adv_pm(composed.spec).value
    single_adv = adv.adv_pm(g).value
    margin = abs(product_adv - n * single_adv)
    return DirectSumReport(n=n, single_adv=single_adv, product_adv=product_adv,
                           margin=margin, passed=margin <= tol * (1 + n * single_adv))
