import math

import numpy as np
import pytest

from querynorms import adversary as adv
from querynorms import composition as comp
from querynorms.adversary import FunctionSpec


def test_compose_identity_is_identity():
    ident = adv.identity_spec(2)
    c = comp.compose(ident, ident, 1)
    assert c.spec.domain == ident.domain
    assert c.spec.out_labels == ident.out_labels


def test_compose_xor_of_ands():
    c = comp.compose(adv.parity_spec(2), adv.and_spec(2), 2)
    assert c.spec.size == 16
    assert c.spec.arity == 4
    for word, label in zip(c.spec.domain, c.spec.out_labels):
        bits = [int(ch) for ch in word]
        expect = (bits[0] & bits[1]) ^ (bits[2] & bits[3])
        assert label == str(expect)


def test_compose_identity_outer_gives_direct_sum():
    g = adv.or_spec(2)
    outer = comp.identity_on(g.output_alphabet, 2)
    c = comp.compose(outer, g, 2)
    for word, label in zip(c.spec.domain, c.spec.out_labels):
        expect = g.output(word[:2]) + g.output(word[2:])
        assert label == expect


def test_compose_validates_alphabets():
    g_bad = FunctionSpec.uniform(2, 1, ["0", "1"], {"0": "X", "1": "Y"})
    with pytest.raises(ValueError):
        comp.compose(adv.parity_spec(2), g_bad, 2)
    with pytest.raises(ValueError):
        comp.compose(adv.parity_spec(2), adv.or_spec(2), 3)  # arity mismatch


def test_check_upper_identity():
    rep = comp.check_upper(adv.identity_spec(2), adv.identity_spec(2), 1)
    assert rep.passed
    assert rep.bound == pytest.approx(1.0, abs=1e-4)


def test_check_upper_xor_and():
    rep = comp.check_upper(adv.parity_spec(2), adv.and_spec(2), 2)
    assert rep.passed
    assert rep.composed_adv == pytest.approx(2 * math.sqrt(2), abs=1e-3)
    assert rep.bound == pytest.approx(2 * math.sqrt(2), abs=1e-3)


def test_check_upper_direct_sum_form():
    g = adv.or_spec(2)
    rep = comp.check_upper(comp.identity_on(g.output_alphabet, 2), g, 2)
    assert rep.passed
    assert rep.composed_adv <= 2 * math.sqrt(2) + 1e-3


def test_balance_identity_witness_is_fixed_point():
    spec = adv.identity_spec(2)
    witness = adv.AdversaryWitness(omega=np.array([0.5, 0.5]),
                                   W=(np.ones((2, 2)) - np.eye(2)) / 2,
                                   objective=1.0)
    balanced = comp.balance_witness(spec, witness)
    assert np.allclose(balanced.omega, [0.5, 0.5])
    d_g = balanced.objective
    for sign in (1, -1):
        m = d_g * np.diag(balanced.omega) + sign * balanced.W
        assert np.min(np.linalg.eigvalsh(m)) >= -1e-12


def test_balance_or2_optimal_witness():
    spec = adv.or_spec(2)
    balanced = comp.balance_witness(spec, adv.adv_pm(spec).witness)
    label0, label1 = spec.output_alphabet
    mask0 = np.array([lab == label0 for lab in spec.out_labels])
    assert float(np.sum(balanced.omega[mask0])) == pytest.approx(0.5, abs=1e-6)
    assert float(np.sum(balanced.omega[~mask0])) == pytest.approx(0.5, abs=1e-6)


def test_balance_restores_deliberately_unbalanced_witness():
    spec = adv.or_spec(2)
    base = comp.balance_witness(spec, adv.adv_pm(spec).witness)
    label0 = spec.output_alphabet[0]
    mask0 = np.array([lab == label0 for lab in spec.out_labels])
    skew = base.omega.copy()
    skew[mask0] *= 3.0
    skew[~mask0] /= 3.0  # stays feasible for the PSD constraints
    unbalanced = adv.AdversaryWitness(omega=skew, W=base.W.copy(), objective=base.objective)
    rebalanced = comp.balance_witness(spec, unbalanced)
    assert rebalanced.objective == pytest.approx(base.objective, abs=1e-9)
    assert float(np.sum(rebalanced.omega[mask0])) == pytest.approx(0.5, abs=1e-6)
    assert float(np.sum(rebalanced.omega)) == pytest.approx(1.0, abs=1e-8)


def test_balance_rejects_nonboolean():
    spec = adv.identity_spec(3)
    res = adv.adv_pm(spec)
    with pytest.raises(ValueError):
        comp.balance_witness(spec, res.witness)


def test_compose_witness_identity():
    res = comp.compose_witness(adv.identity_spec(2), adv.identity_spec(2), 1)
    assert res.value >= 1 - 1e-3
    assert res.support_exact


def test_compose_witness_xor_and():
    res = comp.compose_witness(adv.parity_spec(2), adv.and_spec(2), 2)
    assert res.value >= 2 * math.sqrt(2) - 1e-3
    assert res.min_eigenvalue >= -1e-6
    assert abs(res.objective_unnormalized - res.objective_target) <= 1e-4 * (
        1 + res.objective_target)
    assert abs(res.trace_unnormalized - res.trace_target) <= 1e-6
    # sandwich against the direct SDP and the upper bound
    direct = adv.adv_pm(comp.compose(adv.parity_spec(2), adv.and_spec(2), 2).spec).value
    upper = comp.check_upper(adv.parity_spec(2), adv.and_spec(2), 2).bound
    assert res.value <= direct + 1e-3 <= upper + 2e-3


def test_compose_witness_or_of_parities():
    res = comp.compose_witness(adv.or_spec(2), adv.parity_spec(2), 2)
    assert res.value >= math.sqrt(2) * 2 - 1e-3


def test_composed_witness_verifies_as_adversary_witness():
    c = comp.compose(adv.parity_spec(2), adv.and_spec(2), 2)
    res = comp.compose_witness(adv.parity_spec(2), adv.and_spec(2), 2)
    check = adv.check_witness(res.witness, adv.build_filters(c.spec),
                              adv.output_gram(c.spec))
    assert check.trace_error <= 1e-8
    assert check.support_violation == 0.0
    assert check.min_eigenvalue >= -1e-6
    assert check.objective == pytest.approx(res.value, abs=1e-8)


def test_direct_sum_identity_bits():
    rep = comp.direct_sum_check(adv.identity_spec(2), 2)
    assert rep.passed
    assert rep.product_adv == pytest.approx(2.0, abs=1e-3)


def test_direct_sum_or2():
    rep = comp.direct_sum_check(adv.or_spec(2), 2)
    assert rep.passed
    assert rep.product_adv == pytest.approx(2 * math.sqrt(2), abs=1e-3)


def test_direct_sum_constant():
    const = FunctionSpec.uniform(2, 1, ["0", "1"], {"0": "c", "1": "c"})
    rep = comp.direct_sum_check(const, 2)
    assert rep.passed
    assert rep.product_adv == pytest.approx(0.0, abs=1e-8)


def test_even_output_counterexample():
    # inner outputs only even numbers; outer sums mod two; composition is
    # constant, so no product lower bound can hold and the witness
    # construction must refuse the non-boolean structure
    g_even = FunctionSpec.uniform(2, 2, ["00", "01", "10", "11"],
                                  {"00": "0", "01": "0", "10": "0", "11": "2"})
    f_mod = FunctionSpec.uniform(3, 2, [a + b for a in "012" for b in "012"],
                                 {a + b: str((int(a) + int(b)) % 2)
                                  for a in "012" for b in "012"})
    c = comp.compose(f_mod, g_even, 2)
    assert set(c.spec.out_labels) == {"0"}
    assert adv.adv_pm(c.spec).value == 0.0
    assert adv.adv_pm(g_even).value > 1 - 1e-4  # inner is genuinely nonconstant
    with pytest.raises(ValueError):
        comp.compose_witness(f_mod, g_even, 2)
