"""GNS representation of a state and the seminorm it induces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cone import gram_matrix
from .errors import CapabilityError, InputError
from .functionals import State, monoid_act, pair

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GnsData:
    """GNS data of ``state``.

    The quotient A / I_w is realised on ``C^r`` through the map
    ``[a] = quotient_map @ a`` whose image carries the standard inner
    product, so ``<[a], [b]> = <w, a* b>``.
    """

    state: State
    gram: np.ndarray
    quotient_map: np.ndarray
    ideal_basis: np.ndarray
    cyclic_vector: np.ndarray
    _pinv: np.ndarray = field(repr=False)

    @property
    def quotient_dim(self) -> int:
        return self.quotient_map.shape[0]

    def vector(self, a) -> np.ndarray:
        return self.quotient_map @ self.state.algebra.element(a)

    def rep(self, a) -> np.ndarray:
        """pi(a) as an r x r matrix."""
        alg = self.state.algebra
        return self.quotient_map @ alg.left_matrix(a) @ self._pinv

    def residuals(self) -> dict:
        alg = self.state.algebra
        basis = [alg.basis(i) for i in range(alg.dim)]
        reps = [self.rep(b) for b in basis]
        hom = max(float(np.abs(self.rep(alg.multiply(x, y)) - reps[i] @ reps[j]).max())
                  for i, x in enumerate(basis) for j, y in enumerate(basis))
        star = max(float(np.abs(self.rep(alg.star(x)) - reps[i].conj().T).max())
                   for i, x in enumerate(basis))
        unit = float(np.abs(self.rep(alg.one()) - np.eye(self.quotient_dim)).max())
        xi = self.cyclic_vector
        recovery = max(abs(xi.conj() @ reps[i] @ xi - self.state.covector[i])
                       for i in range(alg.dim))
        gram_eigs = np.linalg.eigvalsh(self.gram)
        return {"homomorphism": hom, "star": star, "unit": unit,
                "state_recovery": float(recovery), "gram_min_eig": float(gram_eigs[0])}


def build_gns(state: State, rank_tol: float = RANK_TOL) -> GnsData:
    alg = state.algebra
    g = gram_matrix(alg, state.covector)
    g = (g + g.conj().T) / 2
    vals, vecs = np.linalg.eigh(g)
    top = max(float(vals[-1]), 0.0)
    keep = vals > rank_tol * top if top > 0 else np.zeros(len(vals), bool)
    lam, u = vals[keep], vecs[:, keep]
    qmap = np.sqrt(lam)[:, None] * u.conj().T
    pinv = u / np.sqrt(lam)[None, :]
    ideal = vecs[:, ~keep]
    xi = qmap @ alg.unit
    for arr in (g, qmap, ideal, xi, pinv):
        arr.setflags(write=False)
    return GnsData(state, g, qmap, ideal, xi, pinv)


def commutant_dimension(gns: GnsData, tol: float = 1e-9) -> int:
    """Dimension of {X : X pi(b) = pi(b) X for every basis b}."""
    alg = gns.state.algebra
    r = gns.quotient_dim
    eye = np.eye(r)
    rows = []
    for i in range(alg.dim):
        p = gns.rep(alg.basis(i))
        # vec(P X - X P) for row-major vec
        rows.append(np.kron(p, eye) - np.kron(eye, p.T))
    mat = np.vstack(rows)
    s = np.linalg.svd(mat, compute_uv=False)
    scale = max(1.0, s[0]) if len(s) else 1.0
    return int(r * r - (s > tol * scale).sum())


def gns_positivity_check(state: State, samples: int = 20, seed: int = 0,
                         gns: GnsData | None = None) -> dict:
    """Minimum eigenvalue of pi(a) over sampled cone-positive a."""
    gns = gns or build_gns(state)
    cone = state.cone
    alg = state.algebra
    rng = np.random.default_rng(seed)
    elems = [alg.one()] + [alg.adjoint_square(alg.random_element(rng)) for _ in range(samples)]
    elems += [cone.sample_positive(rng) for _ in range(samples)]
    worst = np.inf
    for a in elems:
        p = gns.rep(a)
        p = (p + p.conj().T) / 2
        if p.size:
            scale = max(1.0, float(np.abs(a).max()))
            worst = min(worst, float(np.linalg.eigvalsh(p)[0]) / scale)
    return {"min_eigenvalue": float(worst), "samples": len(elems),
            "passed": bool(worst >= -1e-9)}


def op_norm_inf(state: State, a, gns: GnsData | None = None) -> float:
    """The seminorm ||a||_{w, inf}: spectral norm of pi(a)."""
    gns = gns or build_gns(state)
    p = gns.rep(a)
    return float(np.linalg.norm(p, 2)) if p.size else 0.0


def sup_form_check(state: State, a, samples: int = 50, seed: int = 0,
                   gns: GnsData | None = None) -> dict:
    """Sampled lower bound sup_b sqrt(<b |> w, a* a>) against the spectral norm."""
    gns = gns or build_gns(state)
    alg = state.algebra
    rng = np.random.default_rng(seed)
    norm = op_norm_inf(state, a, gns)
    a2 = alg.adjoint_square(a)
    best = 0.0
    for _ in range(samples):
        b = alg.random_element(rng)
        nb = state(alg.adjoint_square(b)).real
        if nb <= 1e-12:
            continue
        val = pair(monoid_act(alg, b, state.covector), a2).real / nb
        best = max(best, float(np.sqrt(max(val, 0.0))))
    return {"op_norm": norm, "sampled_sup": best, "passed": bool(best <= norm + 1e-9)}


def _log_moments(p: np.ndarray, v: np.ndarray, n_max: int):
    """log <v, p^n v> for n = 0..n_max with p Hermitian PSD.

    Even moments are ||p^k v||^2 and odd ones <p^k v, p p^k v>, both computed
    on renormalised iterates, so nothing overflows.  Returns (logs, scale)
    where the logs already include the scale.
    """
    s = float(np.linalg.norm(p, 2)) if p.size else 0.0
    logs = np.full(n_max + 1, -np.inf)
    nv = float(np.linalg.norm(v))
    if nv == 0:
        return logs, s
    logs[0] = 2 * np.log(nv)
    if s == 0:
        return logs, s
    q = p / s
    w = v / nv
    log_w = np.log(nv)  # current iterate is exp(log_w) * w
    k = 0
    while 2 * k + 1 <= n_max:
        odd = float((w.conj() @ q @ w).real)
        logs[2 * k + 1] = 2 * log_w + np.log(odd) + (2 * k + 1) * np.log(s) if odd > 0 else -np.inf
        w = q @ w
        nw = float(np.linalg.norm(w))
        k += 1
        if nw == 0:
            break
        log_w += np.log(nw)
        w = w / nw
        if 2 * k <= n_max:
            logs[2 * k] = 2 * log_w + 2 * k * np.log(s)
    return logs, s


def limit_formula_check(state: State, a, n_max: int = 128, gns: GnsData | None = None) -> dict:
    """r_n = <w, (a* a)^n>^(1/2n) against the seminorm of a.

    Needs a commutative algebra.  r_n is computed in the GNS space from
    pi(a* a) rescaled by its norm.
    """
    alg = state.algebra
    if not alg.is_commutative:
        raise CapabilityError("limit formula check needs a commutative algebra")
    gns = gns or build_gns(state)
    p = gns.rep(alg.adjoint_square(a))
    p = (p + p.conj().T) / 2
    logs, scale = _log_moments(p, gns.cyclic_vector, n_max)
    n = np.arange(1, n_max + 1)
    r = np.exp(logs[1:] / (2 * n))
    norm = op_norm_inf(state, a, gns)
    diffs = np.diff(r)
    mono = diffs >= -1e-12 * np.maximum(1.0, r[:-1])
    return {
        "r": r.tolist(),
        "r_final": float(r[-1]),
        "op_norm": norm,
        "gap": float(norm - r[-1]),
        "relative_gap": float((norm - r[-1]) / norm) if norm > 0 else 0.0,
        "monotone": bool(mono.all()),
        "bounded_by_norm": bool(r[-1] <= norm + 1e-9),
        "rescaled_by": scale,
        "n_max": n_max,
        "bounded_elements": "all of A (finite dimension)",
        "passed": bool(mono.all() and r[-1] <= norm + 1e-9),
    }


def twisted_log_moments(state: State, a, b, n_max: int, gns: GnsData | None = None):
    """log <b |> w, a^n> for positive a, through the GNS vector [b]."""
    gns = gns or build_gns(state)
    p = gns.rep(a)
    p = (p + p.conj().T) / 2
    return _log_moments(p, gns.vector(b), n_max)[0]


def moment_sequence_of(state: State, a, n_max: int = 64, gns: GnsData | None = None,
                       zero_tol: float = 1e-12):
    """Moments <w, a^n>, n = 0..n_max, of a cone-positive element."""
    from .moments import GrowthTag, MomentSequence

    cone = state.cone
    alg = state.algebra
    margin = cone.positivity_margin(a)
    if margin < -1e-10 * max(1.0, float(np.abs(a).max())):
        raise InputError(f"element is not cone-positive (margin {margin:.3e})")
    gns = gns or build_gns(state)
    p = gns.rep(a)
    p = (p + p.conj().T) / 2
    if np.linalg.eigvalsh(p)[0] < -1e-9 * max(1.0, np.abs(p).max()) if p.size else False:
        raise InputError("pi(a) is not positive semidefinite")
    logs, scale = _log_moments(p, gns.cyclic_vector, n_max)
    clamped = False
    if scale == 0 or (n_max >= 1 and logs[1] <= np.log(zero_tol) + np.log(max(scale, 1e-300))):
        logs[1:] = -np.inf
        clamped = scale != 0
    return MomentSequence(log_mu=logs, source="algebra-state",
                          tag=GrowthTag("bounded", rate=scale),
                          label=f"<w, a^n> on {alg.name or 'algebra'}",
                          meta={"op_norm": scale, "zero_branch_clamped": clamped,
                                "cone": cone.kind})
