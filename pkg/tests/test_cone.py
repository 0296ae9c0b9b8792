import numpy as np
import pytest
from scipy.optimize import lsq_linear
from hypothesis import given, settings, strategies as st

from staralg import (BlockPSD, DominantSet, FunctionalGenerated, InputError, StarAlgebra,
                     check_coercive_product, coercivity_margin, is_positive, order_leq,
                     qdown_member, regularity_check, validate_cone_axioms)
from staralg.cone import monoid_act, verify_qdown_certificate
from staralg.errors import AlgebraValidationError
from staralg.functionals import evaluation

from conftest import matrix_unit, psd, simplex


# -- positivity and order ------------------------------------------------------

def test_simplex_positivity_examples():
    _, cone = simplex(2)
    assert is_positive(cone, [3, 0]) == (True, 0.0)
    ok, margin = is_positive(cone, [1, -1])
    assert not ok and margin == pytest.approx(-1)


def test_m2_positivity_examples():
    alg, cone = psd([2])
    assert is_positive(cone, matrix_unit(alg, 0, 0, 0))[0]
    x = matrix_unit(alg, 0, 0, 1) + matrix_unit(alg, 0, 1, 0)
    ok, margin = is_positive(cone, x)
    assert not ok and margin == pytest.approx(-1)


def test_non_hermitian_is_input_error():
    _, cone = psd([2])
    with pytest.raises(InputError):
        is_positive(cone, cone.algebra.element([0, 1, 0, 0]))


def test_order_leq_examples(rng):
    for alg, cone in (simplex(3), psd([2, 1])):
        assert order_leq(cone, np.zeros(alg.dim), alg.one())
        h = alg.random_hermitian(rng)
        assert order_leq(cone, h, h)
    _, cone = simplex(2)
    assert order_leq(cone, [1, 1], [2, 1])
    assert not order_leq(cone, [2, 1], [1, 2])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 5), k=st.integers(1, 6))
def test_generated_cone_positivity_matches_generators(seed, n, k):
    rng = np.random.default_rng(seed)
    alg = StarAlgebra.pointwise(n)
    gens = [rng.random(n) + 0.01 for _ in range(k)]
    cone = FunctionalGenerated(alg, gens)
    a = rng.standard_normal(n)
    oracle = min(float(g @ a) / g.sum() for g in gens)
    assert cone.positivity_margin(a) == pytest.approx(oracle, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), sizes=st.sampled_from([[2], [1, 1], [2, 1], [3]]))
def test_block_psd_margin_is_min_eigenvalue(seed, sizes):
    rng = np.random.default_rng(seed)
    alg, cone = psd(sizes)
    h = alg.random_hermitian(rng)
    oracle = min(np.linalg.eigvalsh(b).min() for b in alg.to_blocks(h))
    assert cone.positivity_margin(h) == pytest.approx(oracle, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 4))
def test_functional_margin_agrees_with_bounded_lsq(seed, n):
    rng = np.random.default_rng(seed)
    alg = StarAlgebra.pointwise(n)
    gens = [rng.random(n) + 0.05 for _ in range(n + 1)]
    cone = FunctionalGenerated(alg, gens)
    w = rng.standard_normal(n)
    g = np.array(gens).T
    x = lsq_linear(g, w, bounds=(0, np.inf), method="bvls").x
    inside = np.linalg.norm(g @ x - w) < 1e-9
    margin = cone.functional_margin(w)
    if abs(margin) > 1e-7:
        assert (margin > 0) == inside


def test_monoid_action_examples():
    alg, _ = simplex(2)
    w = np.array([0.5, 0.5])
    assert np.allclose(monoid_act(alg, alg.one(), w), w)
    assert np.allclose(monoid_act(alg, [1, 0], w), [0.5, 0])


# -- axioms --------------------------------------------------------------------

def test_axioms_pass_on_full_cones():
    for _, cone in (simplex(4), psd([2]), psd([2, 1])):
        rep = validate_cone_axioms(cone, samples=30)
        assert rep["passed"] and rep["congruence"] and rep["partial_order"]
        assert rep["closure_warnings"] == []


def test_degenerate_cone_is_quasi_order():
    alg = StarAlgebra.pointwise(2)
    cone = FunctionalGenerated(alg, [evaluation(alg, 0)])
    rep = validate_cone_axioms(cone)
    assert rep["congruence"] and not rep["partial_order"]
    assert rep["quasi_order_not_partial_order"]
    null = rep["null_direction"]
    assert is_positive(cone, null)[0] and is_positive(cone, -null)[0]
    assert np.allclose(np.abs(null), [0, 1])


def test_corrupted_cone_reports_congruence_witness():
    alg = StarAlgebra.pointwise(2)
    cone = FunctionalGenerated(alg, [np.array([1.0, 2]), np.array([2.0, 1])])
    rep = validate_cone_axioms(cone)
    assert not rep["congruence"]
    w = rep["closure_warnings"][0]
    d, b = w["d"], w["b"]
    # b is cone-positive but d* b d is not
    assert is_positive(cone, b)[0]
    assert not is_positive(cone, alg.multiply(alg.star(d), alg.multiply(b, d)))[0]


def test_generator_not_algebraically_positive():
    alg = StarAlgebra.pointwise(2)
    with pytest.raises(AlgebraValidationError) as exc:
        FunctionalGenerated(alg, [np.array([1.0, -1e-3])])
    a = exc.value.witness
    assert np.real(np.array([1.0, -1e-3]) @ alg.multiply(alg.star(a), a)) < 0


# -- coercivity ----------------------------------------------------------------

def test_coercivity_examples():
    _, cone = simplex(2)
    assert coercivity_margin(cone, [2, 3]) == pytest.approx(2)
    assert coercivity_margin(cone, [0, 1]) == pytest.approx(0)
    with pytest.raises(InputError):
        coercivity_margin(cone, [-1, 1])
    alg, cone = psd([2])
    q = alg.from_blocks([np.array([[4.0, 2], [2, 2]])])
    assert coercivity_margin(cone, q) == pytest.approx(3 - np.sqrt(5))


def test_coercive_product_c2():
    _, cone = simplex(2)
    rep = check_coercive_product(cone, [2, 3], [1, 2])
    assert rep["passed"]
    assert rep["epsilon"] == pytest.approx(1) and rep["lam"] == pytest.approx(2)
    # q^2 + r^2 = (5, 13) versus 2 q^2 r^2 = (8, 72)
    assert rep["inequality_margin"] == pytest.approx(3)


def test_coercive_product_unit_equality():
    alg, cone = simplex(2)
    rep = check_coercive_product(cone, alg.one(), alg.one())
    assert rep["passed"]
    assert rep["inequality_margin"] == pytest.approx(0, abs=1e-12)
    # q^2 + r^2 = 2 forces lam = 2 here
    assert rep["minimal_lam"] == pytest.approx(2, abs=1e-6)


def test_coercive_product_diagonal_m2():
    alg, cone = psd([2])
    q = alg.from_blocks([np.diag([2.0, 1])])
    r = alg.from_blocks([np.diag([1.0, 2])])
    rep = check_coercive_product(cone, q, r)
    assert rep["passed"] and rep["epsilon"] == pytest.approx(1)


def test_coercive_product_precondition_failure():
    alg, cone = psd([2])
    q = alg.from_blocks([np.array([[2.0, 1], [1, 2]])])
    r = alg.from_blocks([np.diag([1.0, 2])])
    rep = check_coercive_product(cone, q, r)
    assert not rep["preconditions"]["commute"] and not rep["passed"]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_coercive_product_random_commuting(seed):
    rng = np.random.default_rng(seed)
    alg, cone = simplex(3)
    q, r = rng.uniform(0.5, 3, 3), rng.uniform(0.5, 3, 3)
    assert check_coercive_product(cone, q, r)["passed"]


# -- dominant sets -------------------------------------------------------------

def test_qdown_unit_member():
    alg, cone = simplex(2)
    dom = DominantSet(cone, [np.array([2.0, 2.0])])
    res = qdown_member(dom, cone, alg.one())
    assert res.is_member and verify_qdown_certificate(dom, cone, alg.one(), res)
    row = res.witnesses[0]
    assert row["r"]["product"] == row["q"] and row["r"]["lam"] == pytest.approx(1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_qdown_c2_scale_is_sup_norm(seed):
    rng = np.random.default_rng(seed)
    alg, cone = simplex(2)
    dom = DominantSet(cone, [np.array([2.0, 2.0])])
    a = rng.uniform(-5, 5, 2) + 1j * rng.uniform(-5, 5, 2)
    res = qdown_member(dom, cone, a)
    assert res.is_member and verify_qdown_certificate(dom, cone, a, res)
    lam = res.witnesses[0]["r"]["lam"]
    assert lam == pytest.approx(max(1.0, np.abs(a).max()), rel=1e-6)


def test_qdown_closed_under_sums(rng):
    alg, cone = psd([2, 1])
    dom = DominantSet(cone, [alg.one() * 2])
    a, b = alg.random_element(rng), alg.random_element(rng)
    for x in (a, b, a + b, alg.multiply(a, b), alg.star(a)):
        res = qdown_member(dom, cone, x)
        assert res.is_member and verify_qdown_certificate(dom, cone, x, res)


def test_dominant_set_rejects_bad_base():
    alg, cone = simplex(2)
    with pytest.raises(InputError):
        DominantSet(cone, [np.array([0.0, 1.0])])


# -- regularity ----------------------------------------------------------------

def test_regularity_examples():
    for _, cone in (simplex(3), psd([2])):
        assert regularity_check(cone)["verdict"] == "regular"


def test_regularity_counterexample_candidate():
    alg = StarAlgebra.pointwise(2)
    cone = FunctionalGenerated(alg, [np.array([1.0, 2]), np.array([2.0, 1])])
    rep = regularity_check(cone)
    assert rep["verdict"] == "counterexample-candidate"
    ce = np.real(rep["counterexamples"][0])
    # positive for both generators, yet outside the orthant of sums of squares
    assert ce @ [1, 2] >= -1e-12 and ce @ [2, 1] >= -1e-12
    assert ce.min() < 0
    assert any(np.allclose(ce, v / np.linalg.norm(v)) for v in ([-1, 2], [2, -1]))
