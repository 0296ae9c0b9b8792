import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from staralg import (FunctionalGenerated, InputError, StarAlgebra, State, Unsupported,
                     bimodule_act, cauchy_schwarz_check, enumerate_pure_states, functional_leq,
                     functional_star, is_pure, monoid_act, variance)
from staralg.functionals import (density_state, evaluation, polarization_residual,
                                 sample_order_interval, vector_state)

from conftest import matrix_unit, psd, simplex

ALGS = {"C3": lambda: simplex(3), "M2": lambda: psd([2]), "M2+C": lambda: psd([2, 1]),
        "M3+C2": lambda: psd([3, 1, 1])}


def random_state(alg, cone, rng):
    """Random faithful state: a random density per block, random block weights."""
    mats = []
    for n in alg.block_tag:
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mats.append(x @ x.conj().T)
    total = sum(np.trace(m).real for m in mats)
    return State(cone.functional_from_density([m / total for m in mats]), cone)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(sorted(ALGS)), seed=st.integers(0, 2**31))
def test_dual_operations(name, seed):
    alg, _ = ALGS[name]() if name != "C3" else psd([1, 1, 1])
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(alg.dim) + 1j * rng.standard_normal(alg.dim)
    a, b, c = (alg.random_element(rng) for _ in range(3))
    ws = functional_star(alg, w)
    assert np.isclose(ws @ a, np.conj(w @ alg.star(a)))
    assert np.isclose(bimodule_act(alg, b, w, c) @ a, w @ alg.multiply(c, alg.multiply(a, b)))
    assert np.allclose(monoid_act(alg, a, w), bimodule_act(alg, a, w, alg.star(a)))
    # (ab) |> w = a |> (b |> w), since <a |> w, x> = <w, a* x a>
    ab = alg.multiply(a, b)
    assert np.allclose(monoid_act(alg, ab, w), monoid_act(alg, a, monoid_act(alg, b, w)))
    assert np.isclose(monoid_act(alg, a, w) @ c, w @ alg.multiply(alg.star(a), alg.multiply(c, a)))
    assert polarization_residual(alg, a, b, w) < 1e-10


def test_monoid_action_examples():
    alg, _ = simplex(2)
    w = np.array([0.5, 0.5])
    assert np.allclose(monoid_act(alg, alg.one(), w), w)
    assert np.allclose(monoid_act(alg, [1, 0], w), [0.5, 0])


def test_state_validation():
    alg, cone = simplex(2)
    with pytest.raises(InputError):
        State(np.array([0.5, 0.6]), cone)
    with pytest.raises(InputError):
        State(np.array([1.5, -0.5]), cone)
    with pytest.raises(InputError):
        State(np.array([0.5, 0.5j]), cone)
    assert State(np.array([0.5, 0.5]), cone)(alg.one()) == pytest.approx(1)


def test_variance_examples():
    alg, cone = simplex(2)
    w = State(np.array([0.5, 0.5]), cone)
    assert variance(w, [1, -1]) == pytest.approx(1)
    eps = State(evaluation(alg, 0), cone)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert variance(eps, alg.random_element(rng)) == pytest.approx(0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(sorted(ALGS)), seed=st.integers(0, 2**31))
def test_cauchy_schwarz(name, seed):
    alg, cone = ALGS[name]()
    if isinstance(cone, FunctionalGenerated):
        alg, cone = psd([1, 1, 1])
    rng = np.random.default_rng(seed)
    w = random_state(alg, cone, rng)
    a, b = alg.random_element(rng), alg.random_element(rng)
    assert cauchy_schwarz_check(w, a, b)["passed"]
    rep = cauchy_schwarz_check(w, a, a)
    assert rep["plain_slack"] == pytest.approx(0, abs=1e-10 * max(1, abs(w(alg.adjoint_square(a))) ** 2))
    rep = cauchy_schwarz_check(w, a, alg.one())
    assert rep["plain_slack"] == pytest.approx(
        w(alg.adjoint_square(a)).real - abs(w(a)) ** 2, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(["M2", "C3pd"]), seed=st.integers(0, 2**31))
def test_variance_convexity_identity(name, seed):
    alg, cone = psd([2]) if name == "M2" else psd([1, 1, 1])
    rng = np.random.default_rng(seed)
    r1, r2 = random_state(alg, cone, rng), random_state(alg, cone, rng)
    lam = rng.uniform()
    a = alg.random_element(rng)
    mix = State(lam * r1.covector + (1 - lam) * r2.covector, cone)
    rhs = (lam * variance(r1, a) + (1 - lam) * variance(r2, a)
           + lam * (1 - lam) * abs(r1(a) - r2(a)) ** 2)
    assert variance(mix, a) == pytest.approx(rhs, abs=1e-10 * max(1, abs(rhs)))


def test_functional_leq_examples():
    alg, cone = simplex(2)
    w = np.array([0.5, 0.5])
    assert functional_leq(np.zeros(2), w, cone)
    assert functional_leq(np.array([0.25, 0.25]), w, cone)
    assert not functional_leq(np.array([0.6, 0.1]), w, cone)
    # 0 <= rho <= omega with <rho, 1> = 0 forces rho = 0
    rho = np.array([0.1, -0.1])
    assert functional_leq(rho, w, cone) and not functional_leq(np.zeros(2), rho, cone)
    alg, cone = psd([2])
    w = vector_state(alg, 0, [1, 0])
    assert not functional_leq(density_state(alg, 0, np.diag([0, 0.1])), w, cone)
    assert functional_leq(0.3 * w, w, cone)


def test_purity_examples():
    alg, cone = simplex(2)
    assert is_pure(State(evaluation(alg, 0), cone))
    assert not is_pure(State(np.array([0.5, 0.5]), cone))
    alg, cone = psd([2])
    vs = is_pure(State(vector_state(alg, 0, [1, 0]), cone))
    assert vs and vs.tests["commutant"]["commutant_dim"] == 1
    tr = is_pure(State(density_state(alg, 0, np.eye(2) / 2), cone))
    assert not tr and tr.tests["commutant"]["commutant_dim"] == 4
    assert tr.tests["order_interval"]["span_dim"] == 4


def test_purity_on_two_generator_cone():
    alg = StarAlgebra.pointwise(2)
    cone = FunctionalGenerated(alg, [np.array([1.0, 2]), np.array([2.0, 1])])
    assert is_pure(State(np.array([1, 2]) / 3, cone))
    assert not is_pure(State(np.array([0.5, 0.5]), cone))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), sizes=st.sampled_from([[2], [2, 1], [3, 1, 1]]))
def test_vector_states_are_pure_and_mixtures_are_not(seed, sizes):
    rng = np.random.default_rng(seed)
    alg, cone = psd(sizes)
    blk = int(rng.integers(len(sizes)))
    n = sizes[blk]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert is_pure(State(vector_state(alg, blk, v), cone))
    if n > 1:
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        mix = 0.5 * vector_state(alg, blk, v) + 0.5 * vector_state(alg, blk, u)
        assert not is_pure(State(mix, cone))


def test_enumerate_pure_states():
    for n in (2, 3, 5):
        alg, cone = simplex(n)
        got = enumerate_pure_states(cone)
        assert len(got) == n
        assert sorted(int(np.argmax(np.abs(s.covector))) for s in got) == list(range(n))
    alg = StarAlgebra.pointwise(2)
    cone = FunctionalGenerated(alg, [np.array([1.0, 2]), np.array([2.0, 1]), np.array([1.0, 1])])
    got = enumerate_pure_states(cone)
    assert len(got) == 2
    assert all(any(np.allclose(s.covector, g) for g in ([1 / 3, 2 / 3], [2 / 3, 1 / 3]))
               for s in got)
    assert isinstance(enumerate_pure_states(psd([2])[1]), Unsupported)
    assert len(enumerate_pure_states(psd([1, 1, 1])[1])) == 3


@pytest.mark.parametrize("make", [lambda: simplex(3), lambda: psd([2, 1])])
def test_order_interval_samples_are_feasible(make):
    alg, cone = make()
    rng = np.random.default_rng(5)
    w = random_state(alg, cone, rng) if not isinstance(cone, FunctionalGenerated) else \
        State(np.array([0.2, 0.3, 0.5]), cone)
    for rho in sample_order_interval(w, 30, rng):
        assert cone.functional_margin(rho) >= -1e-10
        assert functional_leq(rho, w.covector, cone)


def test_block_matrix_unit_pairing():
    alg, cone = psd([2])
    w = vector_state(alg, 0, [1, 0])
    assert w @ matrix_unit(alg, 0, 0, 0) == pytest.approx(1)
    assert w @ matrix_unit(alg, 0, 1, 1) == pytest.approx(0)
    d = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    w = density_state(alg, 0, d)
    x = np.array([[1, 2j], [3, 4]])
    assert w @ alg.from_blocks([x]) == pytest.approx(np.trace(d @ x))
