"""Finite-dimensional unital *-algebras given by structure constants.

Elements and functionals are plain complex numpy vectors of length ``dim``.
The product of basis vectors is ``b_i b_j = sum_k mult[i, j, k] b_k`` and the
involution is ``(b_i)* = sum_k star_matrix[k, i] b_k`` extended antilinearly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AlgebraValidationError, InputError, NotInvertible

AXIOM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
INVERT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StarAlgebra:
    mult: np.ndarray
    star_matrix: np.ndarray
    unit: np.ndarray
    block_tag: tuple[int, ...] | None = None
    name: str = ""
    residuals: dict = field(init=False, repr=False)

    def __post_init__(self):
        mult = np.asarray(self.mult, dtype=complex)
        star = np.asarray(self.star_matrix, dtype=complex)
        unit = np.asarray(self.unit, dtype=complex)
        if mult.ndim != 3 or len(set(mult.shape)) != 1:
            raise AlgebraValidationError(f"mult must have shape (d, d, d), got {mult.shape}")
        d = mult.shape[0]
        if d == 0:
            raise AlgebraValidationError("dim must be positive")
        if star.shape != (d, d):
            raise AlgebraValidationError(f"star must have shape ({d}, {d}), got {star.shape}")
        if unit.shape != (d,):
            raise AlgebraValidationError(f"unit must have shape ({d},), got {unit.shape}")
        for arr in (mult, star, unit):
            arr.setflags(write=False)
        object.__setattr__(self, "mult", mult)
        object.__setattr__(self, "star_matrix", star)
        object.__setattr__(self, "unit", unit)
        if self.block_tag is not None:
            object.__setattr__(self, "block_tag", tuple(int(n) for n in self.block_tag))
            if sum(n * n for n in self.block_tag) != d:
                raise AlgebraValidationError(
                    f"block sizes {self.block_tag} do not add up to dim {d}")
        res = self._axiom_residuals()
        object.__setattr__(self, "residuals", res)
        scale = max(1.0, float(np.abs(mult).max()), float(np.abs(star).max()))
        for key, value in res.items():
            if value > AXIOM_TOL * scale:
                raise AlgebraValidationError(f"{key} residual {value:.3e} exceeds tolerance")

    # -- constructors --------------------------------------------------------

    @classmethod
    def pointwise(cls, n: int) -> "StarAlgebra":
        """C^n with componentwise product and conjugation."""
        mult = np.zeros((n, n, n), dtype=complex)
        for i in range(n):
            mult[i, i, i] = 1.0
        return cls(mult, np.eye(n), np.ones(n), block_tag=(1,) * n, name=f"C^{n}")

    @classmethod
    def blocks(cls, sizes) -> "StarAlgebra":
        """Direct sum of full matrix algebras M_{n_1} + ... + M_{n_m}.

        Basis: matrix units E^(k)_{ij}, block by block, row-major inside a block.
        """
        sizes = tuple(int(n) for n in sizes)
        if not sizes or min(sizes) < 1:
            raise InputError(f"invalid block sizes {sizes}")
        index = _block_index(sizes)
        d = len(index)
        mult = np.zeros((d, d, d), dtype=complex)
        star = np.zeros((d, d), dtype=complex)
        unit = np.zeros(d, dtype=complex)
        for (k, i, j), p in index.items():
            star[index[k, j, i], p] = 1.0
            if i == j:
                unit[p] = 1.0
            for l in range(sizes[k]):
                mult[p, index[k, j, l], index[k, i, l]] = 1.0
        name = " + ".join(f"M_{n}" if n > 1 else "C" for n in sizes)
        return cls(mult, star, unit, block_tag=sizes, name=name)

    @classmethod
    def poly_trunc(cls, degree: int) -> "StarAlgebra":
        """C[x]/(x^{degree+1}) with x Hermitian; basis 1, x, ..., x^degree."""
        d = degree + 1
        mult = np.zeros((d, d, d), dtype=complex)
        for i in range(d):
            for j in range(d - i):
                mult[i, j, i + j] = 1.0
        unit = np.zeros(d)
        unit[0] = 1.0
        return cls(mult, np.eye(d), unit, name=f"C[x]/(x^{d})")

    @classmethod
    def cyclic_group(cls, n: int) -> "StarAlgebra":
        """Group algebra of Z/n with basis g^0..g^{n-1} and (g^k)* = g^{-k}."""
        mult = np.zeros((n, n, n), dtype=complex)
        star = np.zeros((n, n), dtype=complex)
        for i in range(n):
            star[(-i) % n, i] = 1.0
            for j in range(n):
                mult[i, j, (i + j) % n] = 1.0
        unit = np.zeros(n)
        unit[0] = 1.0
        return cls(mult, star, unit, name=f"C[Z/{n}]")

    # -- basic structure -----------------------------------------------------

    @property
    def dim(self) -> int:
        return self.mult.shape[0]

    def basis(self, i: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=complex)
        e[i] = 1.0
        return e

    def one(self) -> np.ndarray:
        return np.array(self.unit)

    def element(self, coeffs) -> np.ndarray:
        a = np.asarray(coeffs, dtype=complex)
        if a.shape != (self.dim,):
            raise InputError(f"element has shape {a.shape}, algebra has dim {self.dim}")
        return a

    def multiply(self, a, b) -> np.ndarray:
        a, b = self.element(a), self.element(b)
        return np.einsum("i,j,ijk->k", a, b, self.mult)

    def star(self, a) -> np.ndarray:
        return self.star_matrix @ np.conj(self.element(a))

    def left_matrix(self, a) -> np.ndarray:
        """Matrix of x -> a x in the basis."""
        return np.einsum("i,ijk->kj", self.element(a), self.mult)

    def right_matrix(self, a) -> np.ndarray:
        """Matrix of x -> x a in the basis."""
        return np.einsum("j,ijk->ki", self.element(a), self.mult)

    def power(self, a, n: int) -> np.ndarray:
        """a^n by repeated squaring (a^0 is the unit)."""
        if n < 0:
            raise InputError("negative power")
        result = self.one()
        base = self.element(a)
        while n:
            if n & 1:
                result = self.multiply(result, base)
            n >>= 1
            if n:
                base = self.multiply(base, base)
        return result

    def adjoint_square(self, a) -> np.ndarray:
        """a* a."""
        return self.multiply(self.star(a), a)

    def hermitian_residual(self, a) -> float:
        a = self.element(a)
        return float(np.linalg.norm(self.star(a) - a))

    def is_hermitian(self, a, tol: float = HERMITIAN_TOL) -> bool:
        a = self.element(a)
        return self.hermitian_residual(a) <= tol * max(1.0, float(np.linalg.norm(a)))

    def require_hermitian(self, a, what: str = "element") -> np.ndarray:
        a = self.element(a)
        if not self.is_hermitian(a, tol=1e-10):
            raise InputError(f"{what} is not Hermitian (residual {self.hermitian_residual(a):.2e})")
        return a

    def hermitian_decompose(self, a) -> tuple[np.ndarray, np.ndarray]:
        """Split a = h + i k with h, k Hermitian."""
        a = self.element(a)
        s = self.star(a)
        return (a + s) / 2, (a - s) / 2j

    @cached_property
    def is_commutative(self) -> bool:
        return bool(np.abs(self.mult - self.mult.transpose(1, 0, 2)).max() <= AXIOM_TOL)

    @cached_property
    def hermitian_basis(self) -> np.ndarray:
        """Columns form a real basis of the Hermitian elements (dim_R = dim).

        Picked greedily from (b_i + b_i*)/2 and (b_i - b_i*)/(2i) so that the
        standard algebras get their natural bases.
        """
        candidates = []
        for i in range(self.dim):
            h, k = self.hermitian_decompose(self.basis(i))
            candidates.extend([h, k])
        chosen, real_rows = [], np.zeros((0, 2 * self.dim))
        for c in candidates:
            v = np.concatenate([c.real, c.imag])
            if np.linalg.norm(v) < 1e-12:
                continue
            trial = np.vstack([real_rows, v])
            if np.linalg.matrix_rank(trial, tol=1e-9) > len(real_rows):
                real_rows = trial
                chosen.append(c)
            if len(chosen) == self.dim:
                break
        basis = np.array(chosen).T
        basis.setflags(write=False)
        return basis

    @cached_property
    def _hermitian_coord_map(self) -> np.ndarray:
        h = self.hermitian_basis
        real = np.vstack([h.real, h.imag])
        return np.linalg.pinv(real)

    def hermitian_coords(self, a) -> np.ndarray:
        """Real coordinates of a Hermitian element in ``hermitian_basis``."""
        a = self.element(a)
        return self._hermitian_coord_map @ np.concatenate([a.real, a.imag])

    def from_hermitian_coords(self, x) -> np.ndarray:
        return self.hermitian_basis @ np.asarray(x, dtype=float)

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)

    def random_hermitian(self, rng: np.random.Generator) -> np.ndarray:
        return self.from_hermitian_coords(rng.standard_normal(self.dim))

    # -- blocks --------------------------------------------------------------

    @cached_property
    def block_index(self) -> dict:
        if self.block_tag is None:
            raise InputError("algebra carries no block tag")
        return _block_index(self.block_tag)

    def to_blocks(self, a) -> list[np.ndarray]:
        """Matrix blocks of an element of a block algebra."""
        a = self.element(a)
        mats = [np.zeros((n, n), dtype=complex) for n in self.block_tag]
        for (k, i, j), p in self.block_index.items():
            mats[k][i, j] = a[p]
        return mats

    def from_blocks(self, mats) -> np.ndarray:
        a = np.zeros(self.dim, dtype=complex)
        for (k, i, j), p in self.block_index.items():
            a[p] = mats[k][i, j]
        return a

    # -- validation ----------------------------------------------------------

    def _axiom_residuals(self) -> dict:
        c, s, u = self.mult, self.star_matrix, self.unit
        d = c.shape[0]
        # (b_i b_j) b_k versus b_i (b_j b_k)
        left = np.einsum("ijm,mkn->ijkn", c, c)
        right = np.einsum("jkm,imn->ijkn", c, c)
        assoc = float(np.abs(left - right).max())
        eye = np.eye(d)
        unit_left = float(np.abs(np.einsum("i,ijk->jk", u, c) - eye).max())
        unit_right = float(np.abs(np.einsum("j,ijk->ik", u, c) - eye).max())
        involution = float(np.abs(s @ np.conj(s) - eye).max())
        # (b_i b_j)* = b_j* b_i*; the structure constants of b_i b_j are c[i, j, :]
        lhs = np.einsum("kl,ijl->ijk", s, np.conj(c))
        rhs = np.einsum("pj,qi,pqk->ijk", s, s, c)
        antihom = float(np.abs(lhs - rhs).max())
        unit_star = float(np.abs(s @ np.conj(u) - u).max())
        return {
            "associativity": assoc,
            "unit_left": unit_left,
            "unit_right": unit_right,
            "involution": involution,
            "star_antihomomorphism": antihom,
            "unit_star": unit_star,
        }


def _block_index(sizes) -> dict:
    index, p = {}, 0
    for k, n in enumerate(sizes):
        for i in range(n):
            for j in range(n):
                index[k, i, j] = p
                p += 1
    return index


def try_invert(algebra: StarAlgebra, a) -> np.ndarray:
    """Two-sided inverse of ``a`` or :class:`NotInvertible`.

    Solves ``L_a x = 1`` and then checks ``x a = 1``.  The system counts as
    singular when its smallest singular value is at most ``1e-10 * ||L_a||``.
    """
    a = algebra.element(a)
    lm = algebra.left_matrix(a)
    sv = np.linalg.svd(lm, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= INVERT_TOL * sv[0]:
        raise NotInvertible(f"left multiplication is singular (sigma_min/sigma_max = "
                            f"{sv[-1] / sv[0] if sv[0] else 0.0:.2e})")
    x = np.linalg.solve(lm, algebra.unit)
    scale = max(1.0, float(sv[0]) * float(np.linalg.norm(x)))
    right = np.linalg.norm(algebra.multiply(a, x) - algebra.unit)
    left = np.linalg.norm(algebra.multiply(x, a) - algebra.unit)
    if max(left, right) > INVERT_TOL * scale:
        raise NotInvertible(f"right inverse is not a left inverse (residual {left:.2e})")
    return x


def four_a_identity_residual(algebra: StarAlgebra, a) -> float:
    """|| 4a - ((a+1)^2 - (a-1)^2) || for a Hermitian element."""
    a = algebra.element(a)
    one = algebra.unit
    p, m = a + one, a - one
    return float(np.linalg.norm(4 * a - (algebra.multiply(p, p) - algebra.multiply(m, m))))


def is_symmetric_algebra(algebra: StarAlgebra, samples: int = 32, seed: int = 0) -> dict:
    """Look for a Hermitian ``a`` with ``1 + a^2`` not invertible.

    Tries the Hermitian basis, pairwise sums of it, and ``samples`` random
    Hermitian elements.  Along each trial direction h, ``1 + t^2 h^2`` is
    singular exactly when ``L_{h^2}`` has the eigenvalue ``-1/t^2``, so
    negative real eigenvalues give the scaled candidate ``t h`` as well.
    A failure is a certificate; a pass is only evidence.
    """
    rng = np.random.default_rng(seed)
    hb = algebra.hermitian_basis.T
    trial = [h for h in hb]
    trial += [hb[i] + hb[j] for i in range(len(hb)) for j in range(i + 1, len(hb))]
    trial += [algebra.random_hermitian(rng) for _ in range(samples)]
    scaled = []
    for h in trial:
        ev = np.linalg.eigvals(algebra.left_matrix(algebra.multiply(h, h)))
        scale = max(1.0, float(np.abs(ev).max()))
        for mu in ev:
            if abs(mu.imag) <= 1e-12 * scale and mu.real < -1e-12 * scale:
                scaled.append(h / np.sqrt(-mu.real))
    trial += scaled
    witnesses = []
    worst = 0.0
    for a in trial:
        b = algebra.one() + algebra.multiply(a, a)
        try:
            inv = try_invert(algebra, b)
        except NotInvertible as exc:
            witnesses.append({"element": a, "reason": str(exc)})
            continue
        worst = max(worst, float(np.linalg.norm(algebra.multiply(b, inv) - algebra.unit)))
    return {
        "symmetric_evidence": not witnesses,
        "tested": len(trial),
        "witnesses": witnesses,
        "max_inverse_residual": worst,
        "note": "a failing witness certifies non-symmetry; passing is evidence only",
    }
