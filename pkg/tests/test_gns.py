import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from staralg import (CapabilityError, InputError, State, build_gns, gns_positivity_check,
                     limit_formula_check, moment_sequence_of, op_norm_inf)
from staralg.functionals import density_state, evaluation, vector_state
from staralg.gns import commutant_dimension, sup_form_check

from conftest import matrix_unit, psd, simplex
from test_functionals import random_state


def assert_contracts(g, tol=1e-10):
    res = g.residuals()
    for key in ("homomorphism", "star", "unit", "state_recovery"):
        assert res[key] <= tol, (key, res[key])


def test_faithful_state_on_c2():
    alg, cone = simplex(2)
    g = build_gns(State(np.array([0.5, 0.5]), cone))
    assert g.quotient_dim == 2
    assert np.allclose(np.sort(np.linalg.eigvalsh(g.rep([2, 1]))), [1, 2])
    assert_contracts(g)


def test_evaluation_state_kills_second_point():
    alg, cone = simplex(2)
    g = build_gns(State(evaluation(alg, 0), cone))
    assert g.quotient_dim == 1
    assert g.ideal_basis.shape[1] == 1
    assert np.allclose(np.abs(g.ideal_basis[:, 0]), [0, 1])
    assert g.rep([3, 7])[0, 0] == pytest.approx(3)


def test_vector_state_on_m2_is_faithful_rep():
    alg, cone = psd([2])
    g = build_gns(State(vector_state(alg, 0, [1, 0]), cone))
    assert g.quotient_dim == 2
    assert commutant_dimension(g) == 1
    assert_contracts(g)
    e12 = matrix_unit(alg, 0, 0, 1)
    assert op_norm_inf(g.state, e12, g) == pytest.approx(1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), sizes=st.sampled_from([[1, 1, 1], [2], [2, 1], [3, 1, 1]]),
       pure=st.booleans())
def test_gns_contracts_and_rank(seed, sizes, pure):
    rng = np.random.default_rng(seed)
    alg, cone = psd(sizes)
    if pure:
        blk = int(rng.integers(len(sizes)))
        v = rng.standard_normal(sizes[blk]) + 1j * rng.standard_normal(sizes[blk])
        w = State(vector_state(alg, blk, v), cone)
        expected = sizes[blk]
    else:
        w = random_state(alg, cone, rng)
        expected = alg.dim
    g = build_gns(w)
    assert_contracts(g)
    s = np.linalg.svd(g.gram, compute_uv=False)
    assert g.quotient_dim == int((s > 1e-10 * s[0]).sum()) == expected
    # <[a], [b]> reproduces <w, a* b>
    a, b = alg.random_element(rng), alg.random_element(rng)
    lhs = np.vdot(g.vector(a), g.vector(b))
    assert lhs == pytest.approx(w(alg.multiply(alg.star(a), b)), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), sizes=st.sampled_from([[1, 1, 1], [2], [2, 1]]))
def test_positive_elements_map_to_psd(seed, sizes):
    rng = np.random.default_rng(seed)
    alg, cone = psd(sizes)
    w = random_state(alg, cone, rng)
    assert gns_positivity_check(w, samples=10, seed=seed)["passed"]
    g = build_gns(w)
    assert np.allclose(g.rep(alg.one()), np.eye(g.quotient_dim))
    c = alg.random_element(rng)
    assert np.linalg.eigvalsh(g.rep(alg.adjoint_square(c))).min() >= -1e-10


def test_op_norm_examples():
    alg, cone = simplex(2)
    w = State(np.array([0.5, 0.5]), cone)
    assert op_norm_inf(w, alg.one()) == pytest.approx(1)
    assert op_norm_inf(w, [2, 1]) == pytest.approx(2)
    assert sup_form_check(w, [2, 1])["passed"]


def test_limit_formula_hand_values():
    alg, cone = simplex(2)
    w = State(np.array([0.5, 0.5]), cone)
    rep = limit_formula_check(w, np.array([2.0, 1.0]))
    n = np.arange(1, 129)
    oracle = np.exp((np.log(0.5) + np.logaddexp(n * np.log(4), 0)) / (2 * n))
    assert np.allclose(rep["r"], oracle, rtol=1e-12)
    assert rep["monotone"] and rep["passed"]
    assert 2 - rep["r_final"] <= 0.005 * 2


def test_limit_formula_trivial_cases():
    alg, cone = simplex(2)
    w = State(np.array([0.5, 0.5]), cone)
    rep = limit_formula_check(w, alg.one(), n_max=16)
    assert np.allclose(rep["r"], 1) and rep["gap"] == pytest.approx(0, abs=1e-12)
    rep = limit_formula_check(State(evaluation(alg, 0), cone), np.array([3.0, 7.0]), n_max=32)
    assert np.allclose(rep["r"], 3, rtol=1e-13)


def test_limit_formula_no_overflow():
    alg, cone = simplex(3)
    w = State(np.array([0.2, 0.3, 0.5]), cone)
    rep = limit_formula_check(w, np.array([1e6, 3.0, 1.0]), n_max=128)
    assert np.isfinite(rep["r_final"]) and rep["passed"]
    assert rep["relative_gap"] < 0.01


def test_limit_formula_rejects_noncommutative():
    alg, cone = psd([2])
    with pytest.raises(CapabilityError):
        limit_formula_check(State(vector_state(alg, 0, [1, 0]), cone), alg.one())


def test_moment_sequence_examples():
    alg, cone = simplex(2)
    w = State(np.array([0.5, 0.5]), cone)
    m = moment_sequence_of(w, alg.one(), n_max=16)
    assert np.allclose(m.mu, 1)
    m = moment_sequence_of(w, np.array([2.0, 1.0]), n_max=40)
    n = np.arange(41)
    assert np.allclose(m.log_mu, np.log(0.5 * (2.0 ** n + 1)), rtol=1e-13)
    alg, cone = psd([2])
    tr = State(density_state(alg, 0, np.eye(2) / 2), cone)
    m = moment_sequence_of(tr, alg.from_blocks([np.diag([3.0, 1.0])]), n_max=30)
    assert np.allclose(m.log_mu, np.log(0.5 * (3.0 ** np.arange(31) + 1)), rtol=1e-13)


def test_moment_sequence_zero_branch():
    alg, cone = simplex(2)
    m = moment_sequence_of(State(evaluation(alg, 0), cone), np.array([0.0, 5.0]), n_max=16)
    assert m.zero_branch and m.mu[0] == 1 and (m.mu[1:] == 0).all()


def test_moment_sequence_needs_positive_element():
    alg, cone = simplex(2)
    with pytest.raises(InputError):
        moment_sequence_of(State(np.array([0.5, 0.5]), cone), np.array([1.0, -1.0]))
