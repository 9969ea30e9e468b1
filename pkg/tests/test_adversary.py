import math

import numpy as np
import pytest

from querynorms import adversary as adv
from querynorms.adversary import FunctionSpec


def J(n):
    return np.ones((n, n))


# -- FunctionSpec and encodings -------------------------------------------------


def test_function_spec_validation():
    with pytest.raises(ValueError):
        FunctionSpec.uniform(2, 1, ["0", "0"], {"0": "0"})  # duplicate
    with pytest.raises(ValueError):
        FunctionSpec.uniform(2, 1, ["2"], {"2": "0"})  # symbol out of alphabet
    with pytest.raises(ValueError):
        FunctionSpec.uniform(2, 2, ["00", "1"], {"00": "0", "1": "0"})  # length


def test_build_filters_identity():
    spec = adv.identity_spec(2)
    deltas = adv.build_filters(spec)
    assert len(deltas) == 1
    assert np.allclose(deltas[0], J(2) - np.eye(2))


def test_build_filters_or2():
    spec = adv.or_spec(2)
    d1 = adv.build_filters(spec)[0]
    first_bits = [w[0] for w in spec.domain]
    expect = np.array([[1.0 if a != b else 0.0 for b in first_bits] for a in first_bits])
    assert np.allclose(d1, expect)
    assert d1.sum() == 8


def test_build_filters_mixed_alphabets():
    spec = FunctionSpec(alphabets=(("0", "1"), ("A", "B", "C")),
                        domain=("0A", "0B", "1C"),
                        out_labels=("A", "B", "C"))
    d1, d2 = adv.build_filters(spec)
    expect1 = np.array([[0, 0, 1], [0, 0, 1], [1, 1, 0]], dtype=float)
    assert np.allclose(d1, expect1)
    assert np.allclose(d2, J(3) - np.eye(3))


def test_output_gram_cases():
    const = FunctionSpec.uniform(2, 1, ["0", "1"], {"0": "c", "1": "c"})
    assert np.allclose(adv.output_gram(const), J(2))
    assert np.allclose(adv.output_gram(adv.identity_spec(2)), np.eye(2))
    par = adv.parity_spec(2)
    f = adv.output_gram(par)
    blocks = {w: par.output(w) for w in par.domain}
    for i, a in enumerate(par.domain):
        for j, b in enumerate(par.domain):
            assert f[i, j] == (1.0 if blocks[a] == blocks[b] else 0.0)


# -- adversary bound -------------------------------------------------------------


def test_adv_identity():
    res = adv.adv_pm(adv.identity_spec(2))
    assert res.value == pytest.approx(1.0, abs=1e-4)
    hand = adv.AdversaryWitness(omega=np.array([0.5, 0.5]),
                                W=(J(2) - np.eye(2)) / 2, objective=1.0)
    check = adv.check_witness(hand, adv.build_filters(adv.identity_spec(2)),
                              adv.output_gram(adv.identity_spec(2)))
    assert check.min_eigenvalue >= -1e-12
    assert check.objective == pytest.approx(1.0)


def test_adv_or2():
    res = adv.adv_pm(adv.or_spec(2))
    assert res.value == pytest.approx(math.sqrt(2), abs=1e-4)
    assert res.certified_lower == pytest.approx(math.sqrt(2), abs=1e-4)


def test_adv_parity2():
    res = adv.adv_pm(adv.parity_spec(2))
    assert res.value == pytest.approx(2.0, abs=1e-4)
    assert res.filtered_value == pytest.approx(2.0, abs=1e-4)


def test_adv_constant_is_zero():
    spec = FunctionSpec.uniform(2, 2, ["00", "01", "10", "11"],
                                {w: "x" for w in ["00", "01", "10", "11"]})
    res = adv.adv_pm(spec)
    assert res.value == 0.0
    assert np.all(res.witness.W == 0)


def test_witness_verifies_independently():
    spec = adv.or_spec(2)
    res = adv.adv_pm(spec)
    check = adv.check_witness(res.witness, adv.build_filters(spec), adv.output_gram(spec))
    assert check.trace_error <= 1e-8
    assert check.support_violation == 0.0
    assert check.min_eigenvalue >= -1e-8
    assert check.objective == pytest.approx(res.value, abs=1e-6)


def test_certify_hand_certificate():
    spec = adv.identity_spec(2)
    assert adv.adv_pm_certify(spec, J(2) - np.eye(2)) == pytest.approx(1.0, abs=1e-12)
    assert adv.adv_pm_certify(spec, np.zeros((2, 2))) == 0.0


def test_certify_rejects_bad_certificates():
    spec = adv.identity_spec(2)
    with pytest.raises(adv.CertificateError):
        adv.adv_pm_certify(spec, np.eye(2))  # violates Gamma o F = 0
    with pytest.raises(adv.CertificateError):
        adv.adv_pm_certify(spec, 3.0 * (J(2) - np.eye(2)))  # filter norm > 1
    with pytest.raises(adv.CertificateError):
        adv.adv_pm_certify(spec, np.array([[0.0, 1.0], [0.5, 0.0]]))  # asymmetric


def test_certificate_lower_bounds_value():
    for spec in (adv.or_spec(2), adv.parity_spec(2), adv.majority_spec(3)):
        res = adv.adv_pm(spec)
        assert res.certified_lower <= res.value + 1e-4


# -- query distance and sandwich --------------------------------------------------


def test_query_distance_zero():
    spec = adv.identity_spec(2)
    assert adv.query_distance(J(2), J(2), adv.build_filters(spec)).value == 0.0


def test_query_distance_identity_evaluation():
    spec = adv.identity_spec(2)
    res = adv.query_distance(J(2), np.eye(2), adv.build_filters(spec))
    assert res.value == pytest.approx(1.0, abs=1e-6)


def test_query_distance_or2_is_adv():
    spec = adv.or_spec(2)
    res = adv.query_distance(J(4), adv.output_gram(spec), adv.build_filters(spec))
    assert res.value == pytest.approx(math.sqrt(2), abs=1e-4)


def test_sandwich_boolean_equality():
    for spec in (adv.or_spec(2), adv.and_spec(2), adv.parity_spec(2)):
        rep = adv.sandwich_check(spec)
        assert rep.passed
        assert rep.equality_margin <= 1e-4


def test_sandwich_ternary():
    rep = adv.sandwich_check(adv.identity_spec(3))
    assert rep.passed
    assert rep.ratio <= 4 / 3 + 1e-4


def test_sandwich_partial_domain_mixed_alphabets():
    # three-point domain over per-coordinate alphabets; output = 2nd symbol
    spec = FunctionSpec(alphabets=(("0", "1"), ("A", "B", "C")),
                        domain=("0A", "0B", "1C"), out_labels=("A", "B", "C"))
    res = adv.adv_pm(spec)
    rep = adv.sandwich_check(spec)
    assert rep.passed
    assert res.value == pytest.approx(1.0, abs=1e-4)
    assert res.certified_lower == pytest.approx(1.0, abs=1e-4)
    assert rep.ratio <= 2 * (1 - 1 / 3) + 1e-4


def test_sandwich_constant():
    spec = FunctionSpec.uniform(2, 1, ["0", "1"], {"0": "c", "1": "c"})
    rep = adv.sandwich_check(spec)
    assert rep.adv == 0.0 and rep.qdist == 0.0 and rep.passed


# -- bounded-error distances ------------------------------------------------------


@pytest.fixture
def identity_problem():
    spec = adv.identity_spec(2)
    return J(2), np.eye(2), adv.build_filters(spec)


def test_qdelta_zero_matches_query_distance(identity_problem):
    rho, sigma, deltas = identity_problem
    q0 = adv.q_delta(rho, sigma, deltas, 0.0)
    qd = adv.query_distance(rho, sigma, deltas)
    assert q0.value == pytest.approx(qd.value, abs=1e-4)


def test_qdelta_vanishes_beyond_gamma2(identity_problem):
    rho, sigma, deltas = identity_problem
    # gamma2(rho - sigma) = 1, so sigma' = rho is admissible from delta = 1 on
    assert adv.q_delta(rho, sigma, deltas, 1.0).value == pytest.approx(0.0, abs=1e-6)
    assert adv.q_delta(rho, sigma, deltas, 1.2).value == pytest.approx(0.0, abs=1e-6)


def test_qdelta_monotone(identity_problem):
    rho, sigma, deltas = identity_problem
    values = [adv.q_delta(rho, sigma, deltas, d).value for d in np.arange(0.0, 0.55, 0.05)]
    for lo, hi in zip(values[1:], values[:-1]):
        assert lo <= hi + 1e-6
    assert 0 < values[2] < 1  # strictly between at delta = 0.1


def test_qdelta_nc_never_larger(identity_problem):
    rho, sigma, deltas = identity_problem
    for d in (0.0, 0.2):
        assert adv.q_delta_nc(rho, sigma, deltas, d).value <= \
            adv.q_delta(rho, sigma, deltas, d).value + 1e-6


def test_qdelta_nc_phase_function_trivial():
    # target = computing the function into a phase: sigma = 2F - J
    spec = adv.parity_spec(2)
    f = adv.output_gram(spec)
    sigma = 2 * f - J(4)
    deltas = adv.build_filters(spec)
    coherent = adv.q_delta(J(4), sigma, deltas, 0.0)
    noncoherent = adv.q_delta_nc(J(4), sigma, deltas, 0.0)
    assert coherent.value == pytest.approx(4.0, abs=1e-3)
    assert noncoherent.value <= 1e-5


def test_qdelta_rejects_negative_delta(identity_problem):
    rho, sigma, deltas = identity_problem
    with pytest.raises(ValueError):
        adv.q_delta(rho, sigma, deltas, -0.1)


def test_qdelta_unit_diagonal_switch(identity_problem):
    rho, sigma, deltas = identity_problem
    plain = adv.q_delta(rho, sigma, deltas, 0.3).value
    strict = adv.q_delta(rho, sigma, deltas, 0.3, unit_diagonal_sigma_prime=True).value
    assert strict >= plain - 1e-8


def test_qdelta_complex_grams():
    rng = np.random.default_rng(42)
    m = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    rho = m.conj() @ m.T
    sigma = np.eye(2)
    deltas = [np.array([[0.0, 1.0], [1.0, 0.0]])]
    qd = adv.query_distance(rho, sigma, deltas)
    assert not qd.infeasible  # roundoff diagonals must not fake infeasibility
    q0 = adv.q_delta(rho, sigma, deltas, 0.0)
    assert q0.value == pytest.approx(qd.value, abs=1e-4)
    assert adv.q_delta(rho, sigma, deltas, 0.3).value <= q0.value + 1e-6
