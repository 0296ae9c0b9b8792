"""Linear functionals on a finite-dimensional *-algebra, states and purity.

A functional is its covector ``w`` with ``<w, a> = w @ a``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .algebra import StarAlgebra
from .cone import (POS_TOL, BlockPSD, ConeModel, FunctionalGenerated, functional_star,
                   hermitian_functional_residual, monoid_act)
from .errors import CapabilityError, InputError, InternalConsistencyError

__all__ = [
    "functional_star", "bimodule_act", "monoid_act", "polarization_residual",
    "State", "variance", "cauchy_schwarz_check", "functional_leq", "PurityResult",
    "is_pure", "Unsupported", "enumerate_pure_states", "sample_order_interval",
    "evaluation", "vector_state", "density_state",
]


def pair(w, a) -> complex:
    return complex(np.asarray(w, dtype=complex) @ np.asarray(a, dtype=complex))


def bimodule_act(algebra: StarAlgebra, b, w, c) -> np.ndarray:
    """Covector of b.w.c, defined by <b.w.c, a> = <w, c a b>."""
    op = algebra.left_matrix(c) @ algebra.right_matrix(b)
    return op.T @ np.asarray(w, dtype=complex)


def polarization_residual(algebra: StarAlgebra, a, b, w) -> float:
    """|| a.w.b* - 1/4 sum_k i^k (a + i^k b) |> w ||."""
    lhs = bimodule_act(algebra, a, w, algebra.star(b))
    rhs = sum((1j ** k) * monoid_act(algebra, a + (1j ** k) * b, w) for k in range(4)) / 4
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True, eq=False)
class State:
    """A functional that is Hermitian, normalised and positive on the cone."""

    covector: np.ndarray
    cone: ConeModel
    label: str = ""

    def __post_init__(self):
        alg = self.cone.algebra
        w = np.asarray(self.covector, dtype=complex)
        if w.shape != (alg.dim,):
            raise InputError(f"functional has shape {w.shape}, algebra has dim {alg.dim}")
        res = hermitian_functional_residual(alg, w)
        if res > 1e-10:
            raise InputError(f"functional is not Hermitian (residual {res:.2e})")
        norm = pair(w, alg.unit)
        if abs(norm - 1) > 1e-12 * max(1.0, float(np.abs(w).max())) * alg.dim:
            raise InputError(f"functional is not normalised: <w, 1> = {norm:.6g}")
        margin = self.cone.functional_margin(w)
        if margin < -POS_TOL:
            raise InputError(f"functional is not positive on the cone (margin {margin:.3e})")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "covector", w)

    @property
    def algebra(self) -> StarAlgebra:
        return self.cone.algebra

    def __call__(self, a) -> complex:
        return pair(self.covector, a)


def evaluation(algebra: StarAlgebra, i: int) -> np.ndarray:
    """Evaluation at point ``i`` of a pointwise algebra (coefficient ``a_i``)."""
    w = np.zeros(algebra.dim, dtype=complex)
    w[i] = 1.0
    return w


def density_state(algebra: StarAlgebra, block: int, matrix) -> np.ndarray:
    """Covector of a -> tr(D a_block) for a density matrix on one block."""
    d = np.asarray(matrix, dtype=complex)
    blocks = [np.zeros((n, n), dtype=complex) for n in algebra.block_tag]
    if d.shape != blocks[block].shape:
        raise InputError(f"density of shape {d.shape} does not fit block {block}")
    blocks[block] = d.T
    return algebra.from_blocks(blocks)


def vector_state(algebra: StarAlgebra, block: int, amplitudes) -> np.ndarray:
    """Covector of a -> <v, a_block v> for a unit vector v (normalised here)."""
    v = np.asarray(amplitudes, dtype=complex)
    v = v / np.linalg.norm(v)
    return density_state(algebra, block, np.outer(v, v.conj()))


def variance(state: State, a) -> float:
    """Var(a) = <w, a* a> - |<w, a>|^2."""
    alg = state.algebra
    return float((state(alg.adjoint_square(a)) - abs(state(a)) ** 2).real)


def cauchy_schwarz_check(state: State, a, b) -> dict:
    """Slacks of the Cauchy-Schwarz inequality and its covariance version."""
    alg = state.algebra
    a, b = alg.element(a), alg.element(b)
    aa = state(alg.adjoint_square(a)).real
    bb = state(alg.adjoint_square(b)).real
    ab = state(alg.multiply(alg.star(a), b))
    ba = state(alg.multiply(alg.star(b), a))
    cov = ba - np.conj(state(b)) * state(a)
    plain = aa * bb - abs(ab) ** 2
    covariance = variance(state, b) * variance(state, a) - abs(cov) ** 2
    scale = max(1.0, aa * bb)
    return {
        "plain_slack": float(plain),
        "covariance_slack": float(covariance),
        "passed": bool(plain >= -1e-10 * scale and covariance >= -1e-10 * scale),
    }


def functional_leq(rho, omega, cone: ConeModel) -> bool:
    """rho <= omega, i.e. omega - rho is positive on the cone."""
    alg = cone.algebra
    rho, omega = np.asarray(rho, dtype=complex), np.asarray(omega, dtype=complex)
    for name, w in (("rho", rho), ("omega", omega)):
        if hermitian_functional_residual(alg, w) > 1e-10:
            raise InputError(f"{name} is not Hermitian")
    diff = omega - rho
    return cone.functional_margin(diff) >= -POS_TOL * max(1.0, float(np.abs(diff).max()))


# -- purity -------------------------------------------------------------------

@dataclass
class PurityResult:
    pure: bool
    tests: dict

    def __bool__(self):
        return self.pure


def _rank(mat, tol=1e-9) -> int:
    mat = np.atleast_2d(mat)
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    return int((s > tol * max(1.0, s[0])).sum()) if len(s) else 0


def order_interval_test(state: State) -> dict:
    """Dimension of the linear span of {rho : 0 <= rho <= w}."""
    cone = state.cone
    if isinstance(cone, BlockPSD):
        ranks = []
        for d in cone.density_blocks(state.covector):
            vals = np.linalg.eigvalsh((d + d.conj().T) / 2)
            ranks.append(int((vals > 1e-10 * max(1.0, vals[-1])).sum()))
        dim = sum(r * r for r in ranks)
        return {"pure": dim == 1, "span_dim": dim, "density_ranks": ranks}
    gens = cone.real_generators
    f = cone.real_functional(state.covector)
    m = len(gens)
    inside, weights = [], []
    for j in range(m):
        # maximise t with  w - t g_j = sum_k c_k g_k,  c >= 0
        a_eq = np.hstack([gens[j][:, None], gens.T])
        cost = np.zeros(m + 1)
        cost[0] = -1.0
        res = linprog(cost, A_eq=a_eq, b_eq=f, bounds=[(0, 1)] + [(0, None)] * m, method="highs")
        t = float(res.x[0]) if res.status == 0 else 0.0
        weights.append(t)
        if t > 1e-9:
            inside.append(j)
    dim = _rank(gens[inside]) if inside else 0
    return {"pure": dim == 1, "span_dim": dim, "generators_below": inside, "max_weights": weights}


def vertex_test(state: State) -> dict:
    """Active-constraint rank at w inside the state polytope."""
    cone = state.cone
    if not isinstance(cone, FunctionalGenerated):
        raise CapabilityError("vertex test needs a functional-generated cone")
    alg = cone.algebra
    _, s, vt = np.linalg.svd(cone.real_generators)
    w_basis = vt[: int((s > 1e-10 * s[0]).sum())].T
    f = cone.real_functional(state.covector)
    vals = cone.rays @ f if len(cone.rays) else np.zeros(0)
    active = np.flatnonzero(np.abs(vals) <= 1e-9)
    u = alg.hermitian_coords(alg.unit)
    rows = np.vstack([cone.rays[active] @ w_basis, (u @ w_basis)[None, :]])
    rank = _rank(rows)
    dim = w_basis.shape[1]
    return {"pure": rank == dim, "active_rank": rank, "hull_dim": dim,
            "active_rays": active.tolist()}


def commutant_test(state: State) -> dict:
    from .gns import build_gns, commutant_dimension

    g = build_gns(state)
    dim = commutant_dimension(g)
    return {"pure": dim == 1, "commutant_dim": dim, "quotient_dim": g.quotient_dim}


def is_pure(state: State) -> PurityResult:
    """Decide whether ``state`` is an extreme point of the state set.

    Block-PSD cones run the order-interval and commutant tests; functional-
    generated cones run the order-interval and vertex tests.  All applicable
    tests must agree, otherwise :class:`InternalConsistencyError` is raised.
    """
    cone = state.cone
    if isinstance(cone, BlockPSD):
        tests = {"order_interval": order_interval_test(state), "commutant": commutant_test(state)}
    elif isinstance(cone, FunctionalGenerated):
        tests = {"order_interval": order_interval_test(state), "vertex": vertex_test(state)}
    else:
        raise CapabilityError(f"no purity test for cone kind {cone.kind!r}")
    verdicts = {name: t["pure"] for name, t in tests.items()}
    if len(set(verdicts.values())) != 1:
        raise InternalConsistencyError(
            f"purity tests disagree: {verdicts}",
            dump={"covector": state.covector, "tests": tests, "cone": cone.describe()})
    return PurityResult(next(iter(verdicts.values())), tests)


@dataclass(frozen=True)
class Unsupported:
    reason: str

    def __bool__(self):
        return False


def _lex_order(vectors) -> list[int]:
    if not vectors:
        return []
    arr = np.round(np.array(vectors), 9)
    keys = np.hstack([arr.real, arr.imag])
    return list(np.lexsort(keys.T[::-1]))


def enumerate_pure_states(cone: ConeModel):
    """Vertices of the state set, or :class:`Unsupported`.

    For functional-generated cones these are the irredundant normalised
    generators.  Block-PSD algebras with only 1x1 blocks are simplices and
    their vertices are the point evaluations; larger blocks give a continuum.
    """
    alg = cone.algebra
    if isinstance(cone, BlockPSD):
        if any(n > 1 for n in alg.block_tag):
            return Unsupported("block-PSD cone with a matrix block: pure states form a continuum")
        candidates = [alg.from_blocks([np.eye(n) if k == j else np.zeros((n, n))
                                       for k, n in enumerate(alg.block_tag)])
                      for j in range(len(alg.block_tag))]
        # the covector of evaluation at block j has a 1 at the block's position
    elif isinstance(cone, FunctionalGenerated):
        candidates = []
        for g in cone.generators:
            if all(np.abs(g - h).max() > 1e-8 for h in candidates):
                candidates.append(np.array(g))
    else:
        raise CapabilityError(f"cannot enumerate pure states for {cone.kind!r}")
    states = []
    for w in candidates:
        st = State(w, cone)
        if isinstance(cone, FunctionalGenerated) and not vertex_test(st)["pure"]:
            continue
        if not is_pure(st):
            raise InternalConsistencyError("enumerated vertex failed the purity tests",
                                           dump={"covector": w})
        states.append(st)
    order = _lex_order([s.covector for s in states])
    return [states[i] for i in order]


# -- sampling below a state -----------------------------------------------------

def sample_order_interval(state: State, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random positive functionals rho with rho <= w.

    Block-PSD: rho has density D^(1/2) Y D^(1/2) blockwise with 0 <= Y <= 1.
    Functional-generated: random vertices of the LP describing the interval
    (rho = sum c_k g_k, w - rho = sum e_k g_k, c, e >= 0) mixed convexly with
    0 and w.
    """
    cone = state.cone
    alg = cone.algebra
    out = []
    if isinstance(cone, BlockPSD):
        roots = [_psd_sqrt(d) for d in cone.density_blocks(state.covector)]
        for _ in range(count):
            blocks = []
            for r in roots:
                n = r.shape[0]
                x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                q, _ = np.linalg.qr(x)
                y = q @ np.diag(rng.uniform(0, 1, n)) @ q.conj().T
                blocks.append(r @ y @ r)
            out.append(cone.functional_from_density(blocks))
        return out
    gens = cone.real_generators
    m = len(gens)
    f = cone.real_functional(state.covector)
    a_eq = np.hstack([gens.T, gens.T])
    vertices = []
    for _ in range(max(4, count // 10)):
        cost = np.concatenate([-rng.exponential(size=m), np.zeros(m)])
        res = linprog(cost, A_eq=a_eq, b_eq=f, bounds=[(0, None)] * (2 * m), method="highs")
        if res.status != 0:
            continue
        x = _polish(a_eq, f, res.x)
        vertices.append(x[:m] @ cone.generators)
    vertices += [np.zeros(alg.dim, dtype=complex), np.array(state.covector)]
    for _ in range(count):
        lam = rng.dirichlet(np.ones(len(vertices)))
        out.append(sum(l * v for l, v in zip(lam, vertices)))
    return out


def _psd_sqrt(d: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues below the rank cut become 0."""
    vals, vecs = np.linalg.eigh((d + d.conj().T) / 2)
    vals = np.where(vals > 1e-12 * max(1.0, vals[-1]), vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def _polish(a_eq, b, x, tol=1e-9):
    """Re-solve the equality system on the LP support to remove solver noise."""
    support = np.flatnonzero(x > tol)
    if len(support) == 0:
        return x
    sol, *_ = np.linalg.lstsq(a_eq[:, support], b, rcond=None)
    if (sol < 0).any():
        return x
    y = np.zeros_like(x)
    y[support] = sol
    return y
