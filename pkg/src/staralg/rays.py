"""Extreme-ray enumeration for polyhedral cones ``{x : A x >= 0}``.

Incremental double description (Motzkin) with the combinatorial adjacency
test.  The cone may contain a lineality space; it is split off first and the
pointed remainder is enumerated in the orthogonal complement.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import CapabilityError

MAX_RAYS = 10_000


def lineality_space(constraints: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning ``{x : A x = 0}``."""
    a = np.atleast_2d(np.asarray(constraints, dtype=float))
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    return scipy.linalg.null_space(a, rcond=tol)


def extreme_rays(constraints, tol: float = 1e-10, max_rays: int = MAX_RAYS):
    """Extreme rays and lineality basis of ``{x : A x >= 0}``.

    Returns
    -------
    rays : ndarray (r, d)
        Unit-norm extreme rays of the pointed part (orthogonal to the
        lineality space), sorted lexicographically.
    lineality : ndarray (d, l)
        Orthonormal basis of the lineality space.
    """
    a = np.atleast_2d(np.asarray(constraints, dtype=float))
    d = a.shape[1]
    norms = np.linalg.norm(a, axis=1)
    a = a[norms > tol] / norms[norms > tol, None]
    lineality = lineality_space(a, tol)
    if a.shape[0] == 0:
        return np.zeros((0, d)), lineality
    # Coordinates on the orthogonal complement of the lineality space.
    _, s, vt = np.linalg.svd(a)
    rank = int((s > tol * s[0]).sum())
    basis = vt[:rank]
    ar = a @ basis.T
    rays = _pointed_rays(ar, tol, max_rays)
    full = rays @ basis
    full /= np.linalg.norm(full, axis=1, keepdims=True)
    order = np.lexsort(np.round(full, 9).T[::-1])
    return full[order], lineality


def _pointed_rays(a: np.ndarray, tol: float, max_rays: int) -> np.ndarray:
    m, r = a.shape
    # initial simplicial cone from r independent rows
    _, _, piv = scipy.linalg.qr(a.T, pivoting=True)
    first = sorted(piv[:r])
    rest = [i for i in range(m) if i not in set(first)]
    a0 = a[first]
    rays = np.linalg.inv(a0).T
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)
    processed = list(first)
    zero_sets = [frozenset(first[j] for j in range(r) if j != i) for i in range(r)]

    for idx in rest:
        row = a[idx]
        vals = rays @ row
        plus = [i for i, v in enumerate(vals) if v > tol]
        minus = [i for i, v in enumerate(vals) if v < -tol]
        zero = [i for i, v in enumerate(vals) if abs(v) <= tol]
        new_rays, new_zeros = [], []
        for i in plus + zero:
            new_rays.append(rays[i])
            new_zeros.append(zero_sets[i] | {idx} if i in zero else zero_sets[i])
        for p in plus:
            for n in minus:
                common = zero_sets[p] & zero_sets[n]
                if len(common) < r - 2:
                    continue
                if any(common <= zero_sets[q] for q in range(len(rays)) if q not in (p, n)):
                    continue
                v = vals[p] * rays[n] - vals[n] * rays[p]
                v /= np.linalg.norm(v)
                new_rays.append(v)
                new_zeros.append(common | {idx})
        if len(new_rays) > max_rays:
            raise CapabilityError(f"ray enumeration exceeded {max_rays} rays")
        processed.append(idx)
        rays = np.array(new_rays).reshape(-1, r)
        zero_sets = new_zeros
        if len(rays) == 0:
            break
    return _dedupe(rays, tol)


def _dedupe(rays: np.ndarray, tol: float) -> np.ndarray:
    kept = []
    for v in rays:
        if all(np.linalg.norm(v - w) > 1e3 * tol for w in kept):
            kept.append(v)
    return np.array(kept).reshape(-1, rays.shape[1])


def brute_force_rays(constraints, tol: float = 1e-9) -> np.ndarray:
    """Enumerate extreme rays by checking every (rank-1)-subset of constraints.

    Exponential; meant as an independent check of :func:`extreme_rays`.
    """
    from itertools import combinations

    a = np.atleast_2d(np.asarray(constraints, dtype=float))
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    _, s, vt = np.linalg.svd(a)
    rank = int((s > 1e-10 * s[0]).sum())
    basis = vt[:rank]
    ar = a @ basis.T
    found = []
    for subset in combinations(range(len(ar)), rank - 1):
        sub = ar[list(subset)]
        if rank > 1 and np.linalg.matrix_rank(sub, tol=1e-9) < rank - 1:
            continue
        ns = scipy.linalg.null_space(sub) if rank > 1 else np.eye(1)
        if ns.shape[1] != 1:
            continue
        for sign in (1.0, -1.0):
            z = sign * ns[:, 0]
            if (ar @ z >= -tol).all():
                x = z @ basis
                x /= np.linalg.norm(x)
                if all(np.linalg.norm(x - y) > 1e-7 for y in found):
                    found.append(x)
    out = np.array(found).reshape(-1, a.shape[1])
    if len(out):
        out = out[np.lexsort(np.round(out, 9).T[::-1])]
    return out
