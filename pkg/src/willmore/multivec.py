"""Exterior algebra over R^m for small ambient dimension (3 <= m <= 8).

A grade-k multivector is stored as one coefficient per strictly increasing
k-subset of {1..m}, with subsets ordered lexicographically.  Coefficient
arrays may carry arbitrary leading axes, so a ``MultiVec`` doubles as a
field of multivectors sampled on a grid; all operations broadcast over the
leading axes.  With integer coefficient arrays every operation is exact,
since the structure constants are the integers +-1.

Operations: wedge product, Hodge star (standard orientation of R^m),
interior multiplication ``interior(gamma, beta)`` defined by duality
<gamma . beta, alpha> = <gamma, beta ^ alpha>, and the first-order
contraction ``bullet`` defined inductively from the interior product.
The inner product is bilinear (no complex conjugation).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

MAX_DIM = 8
MIN_DIM = 3


class AlgebraError(ValueError):
    """Invalid dimension or grade combination."""


@lru_cache(maxsize=None)
def _masks(m: int, k: int) -> tuple[int, ...]:
    # bitmask per sorted k-subset of {1..m}; bit (i-1) set means index i present
    return tuple(sum(1 << (i - 1) for i in combo)
                 for combo in combinations(range(1, m + 1), k))


@lru_cache(maxsize=None)
def _positions(m: int, k: int) -> dict[int, int]:
    return {mask: pos for pos, mask in enumerate(_masks(m, k))}


def _wedge_sign(mask_a: int, mask_b: int) -> int:
    # parity of moving every index of b past the larger indices of a
    sign = 1
    b = mask_b
    while b:
        low = b & -b
        above = mask_a & ~(2 * low - 1)
        if bin(above).count("1") % 2:
            sign = -sign
        b ^= low
    return sign


@lru_cache(maxsize=None)
def _wedge_table(m: int, p: int, q: int):
    out_pos = _positions(m, p + q)
    table = []
    for ia, ma in enumerate(_masks(m, p)):
        for ib, mb in enumerate(_masks(m, q)):
            if ma & mb:
                continue
            table.append((ia, ib, out_pos[ma | mb], _wedge_sign(ma, mb)))
    return tuple(table)


@lru_cache(maxsize=None)
def _star_table(m: int, k: int):
    full = (1 << m) - 1
    out_pos = _positions(m, m - k)
    idx = np.empty(comb(m, k), dtype=np.intp)
    sgn = np.empty(comb(m, k), dtype=np.int64)
    for i, mask in enumerate(_masks(m, k)):
        compl = full ^ mask
        idx[i] = out_pos[compl]
        sgn[i] = _wedge_sign(mask, compl)
    return idx, sgn


@lru_cache(maxsize=None)
def _interior_table(m: int, q: int, p: int):
    # e_I . e_J = sign(J, I\J) e_{I\J} when J subset of I, else 0
    out_pos = _positions(m, q - p)
    table = []
    for ia, mi in enumerate(_masks(m, q)):
        for ib, mj in enumerate(_masks(m, p)):
            if mj & ~mi:
                continue
            rest = mi ^ mj
            table.append((ia, ib, out_pos[rest], _wedge_sign(mj, rest)))
    return tuple(table)


@lru_cache(maxsize=None)
def _bullet_basis(m: int, mask_a: int, grade_a: int, mask_b: int, grade_b: int):
    """Expansion of e_A bullet e_B as {result_mask: coefficient}."""
    if grade_b == 1:
        if grade_a < 1:
            raise AlgebraError("bullet base case needs a grade >= 1 left slot")
        if mask_b & ~mask_a:
            return {}
        rest = mask_a ^ mask_b
        return {rest: _wedge_sign(mask_b, rest)}
    if grade_b < 1:
        raise AlgebraError("bullet right slot must have grade >= 1")
    # split e_B = e_b1 ^ e_rest with b1 the lowest index (no extra sign)
    b1 = mask_b & -mask_b
    rest = mask_b ^ b1
    qr = grade_b - 1
    out: dict[int, int] = {}
    # (a bullet e_b1) ^ e_rest
    for mask, coef in _bullet_basis(m, mask_a, grade_a, b1, 1).items():
        if mask & rest:
            continue
        key = mask | rest
        out[key] = out.get(key, 0) + coef * _wedge_sign(mask, rest)
    # (-1)^{1*qr} (a bullet e_rest) ^ e_b1
    flip = -1 if qr % 2 else 1
    for mask, coef in _bullet_basis(m, mask_a, grade_a, rest, qr).items():
        if mask & b1:
            continue
        key = mask | b1
        out[key] = out.get(key, 0) + flip * coef * _wedge_sign(mask, b1)
    return {k: v for k, v in out.items() if v != 0}


@lru_cache(maxsize=None)
def _bullet_table(m: int, p: int, q: int):
    if q < 1 or p + q - 2 < 0 or p + q - 2 > m:
        raise AlgebraError(f"bullet undefined for grades ({p}, {q}) in dim {m}")
    out_pos = _positions(m, p + q - 2)
    table = []
    for ia, ma in enumerate(_masks(m, p)):
        for ib, mb in enumerate(_masks(m, q)):
            for mask, coef in _bullet_basis(m, ma, p, mb, q).items():
                table.append((ia, ib, out_pos[mask], coef))
    return tuple(table)


def _apply_bilinear(table, a: np.ndarray, b: np.ndarray, dim_out: int) -> np.ndarray:
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (dim_out,)
    out = np.zeros(shape, dtype=np.result_type(a, b))
    for ia, ib, io, s in table:
        if s == 1:
            out[..., io] += a[..., ia] * b[..., ib]
        elif s == -1:
            out[..., io] -= a[..., ia] * b[..., ib]
        else:
            out[..., io] += s * (a[..., ia] * b[..., ib])
    return out


@dataclass(frozen=True)
class MultiVec:
    """Grade-k element (or field of elements) of Lambda^k R^m."""

    ambient_dim: int
    grade: int
    coeffs: np.ndarray  # shape (..., comb(m, k))

    def __post_init__(self):
        m, k = self.ambient_dim, self.grade
        if not MIN_DIM <= m <= MAX_DIM:
            raise AlgebraError(f"ambient dimension {m} outside [{MIN_DIM}, {MAX_DIM}]")
        if not 0 <= k <= m:
            raise AlgebraError(f"grade {k} outside [0, {m}]")
        c = np.asarray(self.coeffs)
        if c.shape[-1:] != (comb(m, k),):
            raise AlgebraError(
                f"expected {comb(m, k)} coefficients for grade {k} in R^{m}, "
                f"got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(m: int, k: int, lead_shape: tuple = (), dtype=float) -> "MultiVec":
        return MultiVec(m, k, np.zeros(lead_shape + (comb(m, k),), dtype=dtype))

    @staticmethod
    def scalar(m: int, value) -> "MultiVec":
        return MultiVec(m, 0, np.asarray(value)[..., None])

    @staticmethod
    def vector(m: int, components: np.ndarray) -> "MultiVec":
        components = np.asarray(components)
        if components.shape[-1] != m:
            raise AlgebraError(f"vector needs {m} components")
        return MultiVec(m, 1, components)

    @staticmethod
    def basis(m: int, indices: tuple[int, ...]) -> "MultiVec":
        """Basis element e_{i1} ^ ... ^ e_{ik} for strictly increasing indices."""
        if list(indices) != sorted(set(indices)):
            raise AlgebraError("basis indices must be strictly increasing")
        k = len(indices)
        mask = sum(1 << (i - 1) for i in indices)
        c = np.zeros(comb(m, k))
        c[_positions(m, k)[mask]] = 1.0
        return MultiVec(m, k, c)

    # -- helpers -----------------------------------------------------------

    def _like(self, other: "MultiVec"):
        if self.ambient_dim != other.ambient_dim:
            raise AlgebraError("ambient dimension mismatch")

    def __add__(self, other: "MultiVec") -> "MultiVec":
        self._like(other)
        if self.grade != other.grade:
            raise AlgebraError("grade mismatch in addition")
        return MultiVec(self.ambient_dim, self.grade, self.coeffs + other.coeffs)

    def __sub__(self, other: "MultiVec") -> "MultiVec":
        self._like(other)
        if self.grade != other.grade:
            raise AlgebraError("grade mismatch in subtraction")
        return MultiVec(self.ambient_dim, self.grade, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "MultiVec":
        return MultiVec(self.ambient_dim, self.grade, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "MultiVec":
        return MultiVec(self.ambient_dim, self.grade, -self.coeffs)

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.coeffs) ** 2, axis=-1))


def wedge(a: MultiVec, b: MultiVec) -> MultiVec:
    """Wedge product; bilinear, associative, graded-anticommutative."""
    a._like(b)
    m = a.ambient_dim
    if a.grade + b.grade > m:
        raise AlgebraError(f"grade overflow: {a.grade} + {b.grade} > {m}")
    table = _wedge_table(m, a.grade, b.grade)
    k = a.grade + b.grade
    return MultiVec(m, k, _apply_bilinear(table, a.coeffs, b.coeffs, comb(m, k)))


def hodge_star(a: MultiVec) -> MultiVec:
    """Hodge dual for the standard orientation: star e_I = sign(I, I^c) e_{I^c}."""
    m, k = a.ambient_dim, a.grade
    idx, sgn = _star_table(m, k)
    out = np.zeros(a.coeffs.shape[:-1] + (comb(m, m - k),), dtype=a.coeffs.dtype)
    out[..., idx] = a.coeffs * sgn
    return MultiVec(m, m - k, out)


def interior(gamma: MultiVec, beta: MultiVec) -> MultiVec:
    """Interior multiplication, <gamma . beta, alpha> = <gamma, beta ^ alpha>."""
    gamma._like(beta)
    if gamma.grade < beta.grade:
        raise AlgebraError(
            f"interior needs grade(gamma) >= grade(beta), got {gamma.grade} < {beta.grade}")
    m = gamma.ambient_dim
    k = gamma.grade - beta.grade
    table = _interior_table(m, gamma.grade, beta.grade)
    return MultiVec(m, k, _apply_bilinear(table, gamma.coeffs, beta.coeffs, comb(m, k)))


def bullet(alpha: MultiVec, beta: MultiVec) -> MultiVec:
    """First-order contraction.

    Equals ``interior`` when beta is a 1-vector, and satisfies
    alpha . (beta ^ gamma) = (alpha . beta) ^ gamma + (-1)^{pq} (alpha . gamma) ^ beta.
    Result grade is grade(alpha) + grade(beta) - 2.
    """
    alpha._like(beta)
    m = alpha.ambient_dim
    table = _bullet_table(m, alpha.grade, beta.grade)
    k = alpha.grade + beta.grade - 2
    return MultiVec(m, k, _apply_bilinear(table, alpha.coeffs, beta.coeffs, comb(m, k)))


def inner(a: MultiVec, b: MultiVec) -> np.ndarray:
    """Bilinear inner product of equal-grade multivectors (orthonormal basis)."""
    a._like(b)
    if a.grade != b.grade:
        raise AlgebraError("inner product needs equal grades")
    return np.sum(a.coeffs * b.coeffs, axis=-1)
