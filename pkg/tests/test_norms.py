import math

import numpy as np
import pytest

from querynorms import linalg, norms


def J(n):
    return np.ones((n, n))


def test_gamma2_all_ones():
    for n in (1, 2, 5):
        assert norms.gamma2(J(n)).value == pytest.approx(1.0, abs=1e-6)


def test_gamma2_zero():
    res = norms.gamma2(np.zeros((3, 2)))
    assert res.value == 0.0 and not res.infeasible


def test_gamma2_j_minus_identity_2():
    # upper bound 2(1 - 1/2) = 1 from the explicit construction; the matching
    # lower bound comes from the dual witness M = J - I, which has norm 1
    res = norms.gamma2(J(2) - np.eye(2))
    assert res.value == pytest.approx(1.0, abs=1e-6)
    m = J(2) - np.eye(2)
    assert linalg.spectral_norm(m) <= 1 + 1e-12
    assert linalg.spectral_norm((J(2) - np.eye(2)) * m) == pytest.approx(1.0, abs=1e-12)


def test_gamma2_j_minus_identity_4():
    res = norms.gamma2(J(4) - np.eye(4))
    assert res.value == pytest.approx(1.5, abs=1e-4)
    assert res.value <= 2 * (1 - 1 / 4) + 1e-4


def test_filtered_self_filter_is_one():
    z = J(2) - np.eye(2)
    assert norms.filtered_gamma2(z, [z]).value == pytest.approx(1.0, abs=1e-6)


def test_filtered_uncovered_entry_is_infinite():
    res = norms.filtered_gamma2(np.eye(2), [J(2) - np.eye(2)])
    assert res.infeasible
    assert math.isinf(res.value)
    assert res.cert is None


def test_filtered_allones_filter_matches_plain():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(3, 3))
    assert norms.filtered_gamma2(a, [J(3)]).value == pytest.approx(
        norms.gamma2(a).value, rel=1e-5)


def test_certificate_verifies_independently():
    rng = np.random.default_rng(12)
    a = rng.normal(size=(3, 4))
    zs = [rng.uniform(0.3, 1.2, size=(3, 4)) for _ in range(2)]
    res = norms.filtered_gamma2(a, zs)
    rep = norms.check_factorization(a, zs, res.cert)
    assert rep.residual <= 1e-6 * (1 + linalg.spectral_norm(a))
    assert rep.objective <= res.value + 1e-6
    assert rep.objective >= res.value - 1e-6


def test_value_sandwiched_by_dual():
    rng = np.random.default_rng(13)
    a = rng.normal(size=(3, 3))
    res = norms.filtered_gamma2(a, [J(3)])
    assert abs(res.sdp_result.primal_value - res.sdp_result.dual_value) <= 2e-7 * (
        1 + abs(res.value))


def test_dual_matrix_is_max_form_witness():
    rng = np.random.default_rng(14)
    a = rng.normal(size=(3, 3))
    zs = [rng.uniform(0.4, 1.3, size=(3, 3)) for _ in range(2)]
    res = norms.filtered_gamma2(a, zs)
    m = res.dual_matrix
    for z in zs:
        assert linalg.spectral_norm(z * m) <= 1 + 1e-6
    assert linalg.spectral_norm(a * m) >= res.value - 1e-5


def test_check_factorization_hand_allones():
    cert = norms.Factorization(
        dim=1,
        u=np.ones((2, 1, 1), dtype=complex),
        v=np.ones((2, 1, 1), dtype=complex),
        value=1.0,
    )
    rep = norms.check_factorization(J(2), [J(2)], cert)
    assert rep.residual == 0.0
    assert rep.objective == pytest.approx(1.0)


def test_check_factorization_mu_nu_vectors():
    # the explicit unit-vector construction scaled by sqrt(2(k-1)/k)
    # factorizes J - I at objective 2(1 - 1/k); see conversion.build_mu_nu
    from querynorms import conversion

    k = 3
    system = conversion.build_mu_nu(k)
    scale = math.sqrt(2 * (k - 1) / k)
    u = np.zeros((k, 1, k), dtype=complex)
    v = np.zeros((k, 1, k), dtype=complex)
    for i in range(k):
        u[i, 0] = scale * system.mu[i]
        v[i, 0] = scale * system.nu[i]
    cert = norms.Factorization(dim=k, u=u, v=v, value=2 * (1 - 1 / k))
    rep = norms.check_factorization(J(k) - np.eye(k), [J(k)], cert)
    assert rep.residual <= 1e-12
    assert rep.objective == pytest.approx(4 / 3, abs=1e-12)


def test_solver_certificate_random():
    rng = np.random.default_rng(15)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    res = norms.gamma2(a)
    rep = norms.check_factorization(a, [J(4)], res.cert)
    assert rep.residual <= 1e-6


def test_gamma2_star_scalar():
    assert norms.gamma2_star(np.array([[1.0]]), [np.array([[1.0]])]).value == pytest.approx(
        1.0, abs=1e-6)


def test_gamma2_star_zero():
    assert norms.gamma2_star(np.zeros((2, 2)), [J(2)]).value == 0.0


def test_gamma2_star_dual_pairing():
    rng = np.random.default_rng(16)
    a = rng.normal(size=(3, 3))
    a = (a + a.T) / 2
    star = norms.gamma2_star(a, [J(3)])
    # random B normalized to gamma2(B) = 1 lower-bound the dual value
    best = 0.0
    for _ in range(8):
        b = rng.normal(size=(3, 3))
        b = (b + b.T) / 2
        g = norms.gamma2(b).value
        best = max(best, abs(np.trace(a.T @ b)) / g)
    assert best <= star.value + 1e-4
    # equality certified by the SDP's own duality gap
    assert star.sdp_result.gap <= 1e-6


def test_gamma2_star_complex_hermitian():
    rng = np.random.default_rng(42)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    a = (a + a.conj().T) / 2
    star = norms.gamma2_star(a, [J(3)])
    assert star.value > 0
    assert star.sdp_result.gap <= 1e-6
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = (b + b.conj().T) / 2
    pairing = abs(float(np.trace(a.conj().T @ b).real))
    assert pairing <= star.value * norms.gamma2(b).value + 1e-6 * (1 + pairing)


def test_gamma2_star_rectangular_dilation_path():
    rng = np.random.default_rng(17)
    a = rng.normal(size=(2, 3))
    star = norms.gamma2_star(a, [np.ones((2, 3))])
    assert star.value > 0
    # duality against the primal norm: <A, B> <= gamma2*(A) gamma2(B)
    b = rng.normal(size=(2, 3))
    pairing = abs(np.sum(a * b))
    assert pairing <= star.value * norms.gamma2(b).value + 1e-6 * (1 + pairing)


def test_complex_filter_scaling():
    # scaling a filter by i divides the value by |i| = 1; a complex filter
    # exercises the realified Gram path end to end
    rng = np.random.default_rng(18)
    a = rng.normal(size=(3, 3))
    base = norms.filtered_gamma2(a, [J(3)]).value
    res = norms.filtered_gamma2(a, [1j * J(3)])
    assert res.value == pytest.approx(base, rel=1e-5)
    rep = norms.check_factorization(a, [1j * J(3)], res.cert)
    assert rep.residual <= 1e-6


def test_filter_shape_mismatch():
    with pytest.raises(ValueError):
        norms.filtered_gamma2(np.eye(2), [np.ones((3, 3))])
    with pytest.raises(ValueError):
        norms.filtered_gamma2(np.eye(2), [])


def test_property_suite_smoke():
    rep = norms.property_suite(trials=2, seed=3)
    assert rep.all_passed
    assert len(rep.results) == 13
    d = rep.to_dict()
    assert d["all_passed"] and len(d["properties"]) == 13


def test_property_suite_rejects_bad_trials():
    with pytest.raises(ValueError):
        norms.property_suite(trials=0)
