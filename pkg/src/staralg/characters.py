"""Multiplicative states and the comparison of pure states with characters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import StarAlgebra, is_symmetric_algebra
from .cone import ConeModel, regularity_check, validate_cone_axioms
from .errors import CapabilityError, InputError, InternalConsistencyError, StarAlgebraError
from .functionals import State, Unsupported, _lex_order, enumerate_pure_states, is_pure, variance

MULT_TOL = 1e-9
CANDIDATE_TOL = 1e-8
DEDUP_TOL = 1e-8
CLUSTER_TOL = 1e-4
MAX_RETRIES = 5


def multiplicativity_residual(algebra: StarAlgebra, w) -> tuple[float, tuple[int, int]]:
    """max |<w, b_i b_j> - <w, b_i><w, b_j>| over basis pairs, and the worst pair."""
    w = np.asarray(w, dtype=complex)
    prod = np.einsum("ijk,k->ij", algebra.mult, w)
    res = np.abs(prod - np.outer(w, w))
    i, j = np.unravel_index(int(np.argmax(res)), res.shape)
    return float(res[i, j]), (int(i), int(j))


def is_multiplicative(state: State, tol: float = MULT_TOL) -> tuple[bool, float]:
    res, _ = multiplicativity_residual(state.algebra, state.covector)
    return res <= tol, res


def _hermitian_probes(algebra: StarAlgebra, rng, samples: int) -> list[np.ndarray]:
    hb = list(algebra.hermitian_basis.T)
    probes = list(hb)
    for i in range(len(hb)):
        for j in range(i + 1, len(hb)):
            probes += [hb[i] + hb[j], hb[i] - hb[j]]
    probes += [algebra.random_hermitian(rng) for _ in range(samples)]
    return probes


def variance_square_criterion(state: State, samples: int = 16, seed: int = 0) -> dict:
    """Compare multiplicativity with vanishing of Var(h^2) over Hermitian h.

    Also evaluates the identity 4<w, a^2> = <w, a(a+1)^2> - <w, a(a-1)^2>
    on the same probes.
    """
    alg = state.algebra
    rng = np.random.default_rng(seed)
    probes = _hermitian_probes(alg, rng, samples)
    worst, witness, ident = 0.0, None, 0.0
    for h in probes:
        h2 = alg.multiply(h, h)
        v = variance(state, h2)
        if v > worst:
            worst, witness = v, h
        p, m = h + alg.unit, h - alg.unit
        lhs = 4 * state(h2)
        rhs = state(alg.multiply(h, alg.multiply(p, p))) - state(alg.multiply(h, alg.multiply(m, m)))
        ident = max(ident, abs(lhs - rhs) / max(1.0, abs(lhs)))
    mult, res = is_multiplicative(state)
    squares_vanish = worst <= 1e-9
    return {
        "multiplicative": bool(mult),
        "multiplicativity_residual": res,
        "max_square_variance": float(worst),
        "witness": witness,
        "squares_vanish": bool(squares_vanish),
        "agree": bool(mult == squares_vanish),
        "identity_residual": float(ident),
        "probes": len(probes),
    }


def largest_multiplicative_subalgebra(state: State, tol: float = 1e-9) -> np.ndarray:
    """Columns spanning {a : Var(a) = 0}, the kernel of the covariance form."""
    alg = state.algebra
    if not alg.is_commutative:
        raise CapabilityError("largest multiplicative subalgebra needs a commutative algebra")
    from .cone import gram_matrix

    w = state.covector
    cov = gram_matrix(alg, w) - np.outer(np.conj(w), w)
    cov = (cov + cov.conj().T) / 2
    vals, vecs = np.linalg.eigh(cov)
    kernel = vecs[:, vals <= tol * max(1.0, float(vals[-1]))]
    proj = kernel @ kernel.conj().T
    for i in range(kernel.shape[1]):
        u = kernel[:, i]
        for x in [alg.star(u)] + [alg.multiply(u, kernel[:, j]) for j in range(kernel.shape[1])]:
            if np.linalg.norm(x - proj @ x) > 1e-9 * max(1.0, np.linalg.norm(x)):
                raise InternalConsistencyError("variance kernel is not a *-subalgebra",
                                               dump={"kernel": kernel})
    return kernel


# -- enumeration ----------------------------------------------------------------

def commutator_ideal(algebra: StarAlgebra, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning the two-sided ideal generated by commutators."""
    d = algebra.dim
    vecs = [algebra.multiply(algebra.basis(i), algebra.basis(j))
            - algebra.multiply(algebra.basis(j), algebra.basis(i))
            for i in range(d) for j in range(i + 1, d)]
    span = _orth(vecs, d, tol)
    while True:
        grown = list(span.T)
        for v in span.T:
            for i in range(d):
                b = algebra.basis(i)
                grown += [algebra.multiply(b, v), algebra.multiply(v, b)]
        new = _orth(grown, d, tol)
        if new.shape[1] == span.shape[1]:
            return new
        span = new


def _orth(vecs, d, tol) -> np.ndarray:
    if not vecs:
        return np.zeros((d, 0), dtype=complex)
    mat = np.array(vecs).T
    if np.abs(mat).max() <= tol:
        return np.zeros((d, 0), dtype=complex)
    return scipy.linalg.orth(mat, rcond=tol)


def _clusters(vals: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage clusters of eigenvalues closer than ``tol``."""
    order = np.argsort(vals.real)
    groups: list[list[int]] = []
    for idx in order:
        for g in groups:
            if min(abs(vals[idx] - vals[k]) for k in g) <= tol:
                g.append(int(idx))
                break
        else:
            groups.append([int(idx)])
    # merge groups that became close after insertion
    merged = True
    while merged:
        merged = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if min(abs(vals[i] - vals[j]) for i in groups[a] for j in groups[b]) <= tol:
                    groups[a] += groups.pop(b)
                    merged = True
                    break
            if merged:
                break
    return groups


@dataclass
class CharacterEnumeration:
    characters: list
    degenerate: bool
    attempts: int
    rejected: list = field(default_factory=list)


def enumerate_characters(algebra: StarAlgebra, cone: ConeModel, seed: int = 0,
                         tol: float = CANDIDATE_TOL) -> CharacterEnumeration:
    """Characters (multiplicative states positive on the cone).

    A multiplicative functional is a common eigenvector of the transposed
    left-multiplication matrices that annihilates the commutator ideal; on
    that invariant subspace the matrices commute.  Each eigenvalue cluster of
    a random Hermitian combination gives an invariant subspace (via a sorted
    Schur form); the normalised trace of each basis operator on it is the
    candidate.  Clusters that mix several characters fail the
    multiplicativity check and trigger a retry with a new combination.
    Non-commutative algebras are supported through the commutator ideal.
    """
    rng = np.random.default_rng(seed)
    d = algebra.dim
    ideal = commutator_ideal(algebra)
    if ideal.shape[1]:
        annihilator = scipy.linalg.null_space(ideal.T)
    else:
        annihilator = np.eye(d, dtype=complex)
    q = annihilator.shape[1]
    if q == 0:
        return CharacterEnumeration([], False, 0)
    ops = [annihilator.conj().T @ algebra.left_matrix(algebra.basis(i)).T @ annihilator
           for i in range(d)]
    hb = algebra.hermitian_basis
    ops_h = [sum(hb[i, k] * ops[i] for i in range(d)) for k in range(hb.shape[1])]
    found: list[np.ndarray] = []
    rejected = []
    degenerate = False
    attempts = 0
    for attempt in range(MAX_RETRIES + 1):
        attempts = attempt + 1
        coeffs = rng.standard_normal(len(ops_h))
        mat = sum(c * o for c, o in zip(coeffs, ops_h))
        vals = np.linalg.eigvals(mat)
        scale = max(1.0, float(np.abs(vals).max()))
        merged = False
        for group in _clusters(vals, CLUSTER_TOL * scale):
            centre = np.mean(vals[group])
            radius = max(abs(vals[k] - centre) for k in group) + CLUSTER_TOL * scale / 2
            _, z, sdim = scipy.linalg.schur(mat, output="complex",
                                            sort=lambda x, c=centre, r=radius: abs(x - c) <= r)
            k = len(group)
            if sdim != k:
                merged = True
                continue
            sub = z[:, :k]
            cand = np.array([np.trace(sub.conj().T @ o @ sub) / k for o in ops])
            res, _ = multiplicativity_residual(algebra, cand)
            if res > tol:
                merged = True
                continue
            if all(np.abs(cand - f).max() > DEDUP_TOL for f in found):
                found.append(cand)
        if not merged:
            break
    else:
        degenerate = True
    characters = []
    for cand in found:
        try:
            State(cand, cone)
        except InputError as exc:
            rejected.append({"covector": cand, "reason": str(exc)})
            continue
        characters.append(cand)
    order = _lex_order(characters)
    return CharacterEnumeration([characters[i] for i in order], degenerate, attempts, rejected)


# -- comparison -----------------------------------------------------------------

@dataclass
class CharacterReport:
    characters: list
    pure_states: list | Unsupported
    inclusion_verdict: dict
    equality_verdict: dict
    hypothesis_audit: dict
    candidate_results: list
    predictions: dict
    consistent: bool
    warnings: list

    def as_dict(self) -> dict:
        pure = (self.pure_states.reason if isinstance(self.pure_states, Unsupported)
                else [s.covector for s in self.pure_states])
        return {
            "characters": self.characters,
            "n_characters": len(self.characters),
            "pure_states": pure,
            "n_pure_states": None if isinstance(self.pure_states, Unsupported) else len(pure),
            "inclusion_verdict": self.inclusion_verdict,
            "equality_verdict": self.equality_verdict,
            "hypothesis_audit": self.hypothesis_audit,
            "candidate_results": self.candidate_results,
            "predictions": self.predictions,
            "consistent": self.consistent,
            "warnings": self.warnings,
        }


def _match(a, b, tol=DEDUP_TOL):
    return any(np.abs(np.asarray(a) - np.asarray(y)).max() <= tol for y in b)


def compare_pure_vs_characters(algebra: StarAlgebra, cone: ConeModel, candidates=(),
                               seed: int = 0) -> CharacterReport:
    """Enumerate characters and pure states, audit hypotheses, compare.

    Inclusion of characters in the pure states is predicted for every
    ordered algebra whose cone is stable under congruence; equality is
    predicted in addition when the algebra is commutative and either
    symmetric or regular (boundedness is automatic in finite dimension).
    """
    warnings = []
    enum = enumerate_characters(algebra, cone, seed=seed)
    if enum.degenerate:
        warnings.append("character enumeration hit the retry limit; list may be incomplete")
    try:
        pure = enumerate_pure_states(cone)
    except StarAlgebraError as exc:
        pure = Unsupported(f"enumeration failed: {exc}")
    pure_vecs = None if isinstance(pure, Unsupported) else [s.covector for s in pure]

    axioms = validate_cone_axioms(cone, samples=20, seed=seed)
    sym = is_symmetric_algebra(algebra, seed=seed)
    try:
        reg = regularity_check(cone, algebra, seed=seed)
    except StarAlgebraError as exc:
        reg = {"verdict": "inconclusive", "error": str(exc)}
    audit = {
        "commutative": bool(algebra.is_commutative),
        "symmetric_evidence": bool(sym["symmetric_evidence"]),
        "bounded": "automatic (finite dimension)",
        "regular": reg["verdict"],
        "congruence_stable": bool(axioms["congruence"]),
        "partial_order": bool(axioms["partial_order"]),
        "cone": cone.describe(),
    }
    if not axioms["congruence"]:
        warnings.append("degraded order: cone is not stable under congruence; "
                        "the inclusion and equality predictions are suspended")
    if not axioms["partial_order"]:
        warnings.append("quasi-order, not a partial order: the cone contains a line")

    # characters are pure
    not_pure = []
    for c in enum.characters:
        res = is_pure(State(c, cone))
        if not res.pure:
            not_pure.append(c)
    inclusion = {"holds": not not_pure, "witnesses": not_pure}

    candidate_results = []
    strict_witnesses = []
    for name, w in candidates:
        entry = {"name": name}
        try:
            st = State(w, cone)
            pr = is_pure(st)
            mult, res = is_multiplicative(st)
            entry.update(pure=pr.pure, multiplicative=mult, multiplicativity_residual=res,
                         purity_tests={k: v["pure"] for k, v in pr.tests.items()})
            if pr.pure and not mult:
                strict_witnesses.append(name)
        except StarAlgebraError as exc:
            entry["error"] = str(exc)
        candidate_results.append(entry)

    if pure_vecs is not None:
        extra = [p for p in pure_vecs if not _match(p, enum.characters)]
        missing = [c for c in enum.characters if not _match(c, pure_vecs)]
        equality = {"holds": not extra and not missing, "witnesses": extra,
                    "characters_not_enumerated_as_pure": missing, "method": "enumeration"}
        if extra:
            strict_witnesses = strict_witnesses or ["enumerated pure state"]
    elif strict_witnesses:
        equality = {"holds": False, "witnesses": strict_witnesses, "method": "supplied candidates"}
    else:
        equality = {"holds": None, "witnesses": [], "method": "undetermined"}

    stable = axioms["congruence"]
    predict_eq = bool(stable and audit["commutative"]
                      and (audit["symmetric_evidence"] or audit["regular"] == "regular"))
    predictions = {"inclusion": bool(stable), "equality": predict_eq}
    consistent = True
    if predictions["inclusion"] and not inclusion["holds"]:
        consistent = False
    if predictions["equality"] and equality["holds"] is False:
        consistent = False
    return CharacterReport(enum.characters, pure, inclusion, equality, audit,
                           candidate_results, predictions, consistent, warnings)
