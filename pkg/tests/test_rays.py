import numpy as np
import pytest
from scipy.optimize import lsq_linear
from hypothesis import given, settings, strategies as st

from staralg.errors import CapabilityError
from staralg.rays import brute_force_rays, extreme_rays


def same_rays(r1, r2, tol=1e-8):
    if len(r1) != len(r2):
        return False
    return all(min(np.linalg.norm(x - y) for y in r2) < tol for x in r1)


def test_orthant():
    rays, lin = extreme_rays(np.eye(3))
    assert lin.shape[1] == 0
    assert same_rays(rays, np.eye(3))


def test_square_pyramid_is_degenerate_but_exact():
    # four facets through the apex; every ray lies on exactly two of them
    cons = np.array([[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]], dtype=float)
    rays, _ = extreme_rays(cons)
    expected = np.array([[sx, sy, 1] for sx in (1, -1) for sy in (1, -1)]) / np.sqrt(3)
    assert same_rays(rays, expected)


def test_lineality_split():
    # {x : x0 >= 0} in R^3 is a half-space with a 2-dim lineality space
    rays, lin = extreme_rays(np.array([[1.0, 0, 0]]))
    assert lin.shape[1] == 2
    assert same_rays(rays, np.array([[1.0, 0, 0]]))


def test_two_dimensional_wedge():
    # dual of the cone generated by (1,2) and (2,1)
    rays, _ = extreme_rays(np.array([[1.0, 2], [2, 1]]))
    expected = np.array([[-1, 2], [2, -1]]) / np.sqrt(5)
    assert same_rays(rays, expected)


def test_overflow_is_capability_error():
    cons = np.array([[np.cos(t), np.sin(t), 1] for t in np.linspace(0, 2 * np.pi, 40)[:-1]])
    with pytest.raises(CapabilityError):
        extreme_rays(cons, max_rays=5)


def covers(rays, lin, x):
    """x is a nonnegative combination of rays plus a lineality component."""
    if lin.shape[1]:
        x = x - lin @ (lin.T @ x)
    if len(rays) == 0:
        return np.linalg.norm(x) < 1e-8
    c = lsq_linear(rays.T, x, bounds=(0, np.inf), method="bvls").x
    return np.linalg.norm(rays.T @ c - x) < 1e-7 * max(1.0, np.linalg.norm(x))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.integers(2, 4), m=st.integers(2, 7))
def test_double_description_matches_brute_force(seed, d, m):
    rng = np.random.default_rng(seed)
    cons = rng.standard_normal((m, d))
    if rng.random() < 0.5:
        cons = np.round(cons)  # integer data produces degenerate vertices
        cons = cons[np.linalg.norm(cons, axis=1) > 0]
        if len(cons) == 0:
            return
    rays, lin = extreme_rays(cons)
    for r in rays:
        assert (cons @ r >= -1e-9).all()
    if lin.shape[1] == 0:
        assert same_rays(rays, brute_force_rays(cons))
    # completeness: random feasible points decompose over the rays
    for _ in range(5):
        x = rng.standard_normal(d)
        if (cons @ x >= 0).all():
            assert covers(rays, lin, x)
