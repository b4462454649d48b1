"""Exact rational quadratic-space geometry.

Everything metric in this package is measured through a positive definite
symmetric bilinear form with rational entries.  Angles never appear as
radians: every angular question is answered by the sign of a form value or
by comparing squared cosines after cross-multiplying.  All computation stays
inside ``fractions.Fraction``; floats are rejected at the door.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

ACUTE = "acute"
RIGHT = "right"
OBTUSE = "obtuse"

LT = "lt"
EQ = "eq"
GT = "gt"


def rat(x) -> Fraction:
    """Coerce an int, Fraction, or fraction string to Fraction.

    Floats are rejected on purpose: one float would silently poison every
    downstream sign test.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}: {x!r}")


def rat_tuple(coords) -> Tuple[Fraction, ...]:
    return tuple(rat(c) for c in coords)


def sign(x: Fraction) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant by exact Gaussian elimination."""
    m = [[rat(x) for x in r] for r in rows]
    n = len(m)
    result = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            result = -result
        result *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col]:
                f = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
    return result


def solve_exact(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Optional[Tuple[Fraction, ...]]:
    """Solve a square rational system exactly; None if singular."""
    n = len(matrix)
    m = [[rat(x) for x in matrix[i]] + [rat(rhs[i])] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        for c in range(col, n + 1):
            m[col][c] *= inv
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                for c in range(col, n + 1):
                    m[r][c] -= f * m[col][c]
    return tuple(m[i][n] for i in range(n))


class BilinearForm:
    """Symmetric positive definite rational form, given by its Gram matrix.

    Positive definiteness is certified at construction time by checking that
    all leading principal minors are positive.
    """

    __slots__ = ("matrix", "dim")

    def __init__(self, matrix):
        rows = tuple(rat_tuple(row) for row in matrix)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("form matrix must be square")
        for i in range(n):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise ValueError("form matrix must be symmetric")
        for k in range(1, n + 1):
            minor = det([row[:k] for row in rows[:k]])
            if minor <= 0:
                raise ValueError(f"form is not positive definite: leading {k}x{k} minor = {minor}")
        self.matrix = rows
        self.dim = n

    def pair(self, u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
        if len(u) != self.dim or len(v) != self.dim:
            raise ValueError(f"dimension mismatch: form dim {self.dim}, vectors {len(u)}, {len(v)}")
        total = Fraction(0)
        for i, ui in enumerate(u):
            if ui:
                row = self.matrix[i]
                total += ui * sum(row[j] * vj for j, vj in enumerate(v) if vj)
        return total

    def norm_sq(self, u: Sequence[Fraction]) -> Fraction:
        return self.pair(u, u)

    def __eq__(self, other):
        return isinstance(other, BilinearForm) and self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)

    def __repr__(self):
        return f"BilinearForm({[[str(c) for c in row] for row in self.matrix]})"


def identity_form(n: int) -> BilinearForm:
    return BilinearForm([[1 if i == j else 0 for j in range(n)] for i in range(n)])


@dataclass(frozen=True)
class RVec:
    """A rational vector together with the form it is measured in."""

    coords: Tuple[Fraction, ...]
    form: BilinearForm

    def __post_init__(self):
        object.__setattr__(self, "coords", rat_tuple(self.coords))
        if len(self.coords) != self.form.dim:
            raise ValueError(f"coordinate length {len(self.coords)} does not match form dimension {self.form.dim}")

    def __add__(self, other: "RVec") -> "RVec":
        self._check(other)
        return RVec(tuple(a + b for a, b in zip(self.coords, other.coords)), self.form)

    def __sub__(self, other: "RVec") -> "RVec":
        self._check(other)
        return RVec(tuple(a - b for a, b in zip(self.coords, other.coords)), self.form)

    def __neg__(self) -> "RVec":
        return RVec(tuple(-a for a in self.coords), self.form)

    def scaled(self, r) -> "RVec":
        r = rat(r)
        return RVec(tuple(r * a for a in self.coords), self.form)

    def pair(self, other: "RVec") -> Fraction:
        self._check(other)
        return self.form.pair(self.coords, other.coords)

    def norm_sq(self) -> Fraction:
        return self.form.norm_sq(self.coords)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def _check(self, other: "RVec"):
        if self.form != other.form:
            raise ValueError("vectors live in different forms")

    def __repr__(self):
        return "RVec(" + ", ".join(str(c) for c in self.coords) + ")"


def vec(form: BilinearForm, *coords) -> RVec:
    return RVec(rat_tuple(coords), form)


@dataclass(frozen=True)
class AffineFlat:
    """Affine subspace: a base point plus an independent rational span."""

    base: RVec
    span: Tuple[RVec, ...]

    def __post_init__(self):
        object.__setattr__(self, "span", tuple(self.span))
        for s in self.span:
            if s.form != self.base.form:
                raise ValueError("span vectors live in different forms")
        if self.span:
            gram = [[a.pair(b) for b in self.span] for a in self.span]
            if det(gram) == 0:
                raise ValueError("span vectors are linearly dependent")


def pair(u: RVec, v: RVec) -> Fraction:
    """The form value B(u, v)."""
    return u.pair(v)


def angle_sign(apex: RVec, u: RVec, v: RVec) -> str:
    """Classify the angle at apex between the directions toward u and v.

    Returns "acute", "right", or "obtuse" according to the sign of
    B(u - apex, v - apex).
    """
    du = u - apex
    dv = v - apex
    if du.is_zero() or dv.is_zero():
        raise ValueError("zero direction at apex")
    s = sign(du.pair(dv))
    if s > 0:
        return ACUTE
    if s < 0:
        return OBTUSE
    return RIGHT


def project_flat(x: RVec, flat: AffineFlat) -> RVec:
    """Orthogonal projection of x onto the flat, via the Gram normal equations.

    The result y satisfies B(x - y, s) = 0 for every spanning vector s, which
    together with y being in the flat pins it down uniquely.
    """
    if not flat.span:
        return flat.base
    diff = x - flat.base
    gram = [[a.pair(b) for b in flat.span] for a in flat.span]
    rhs = [diff.pair(s) for s in flat.span]
    coeffs = solve_exact(gram, rhs)
    if coeffs is None:
        raise ValueError("degenerate span")
    y = flat.base
    for t, s in zip(coeffs, flat.span):
        y = y + s.scaled(t)
    return y


def cos_compare(u: RVec, v: RVec, u2: RVec, v2: RVec) -> str:
    """Compare cos of the angle (u, v) against cos of the angle (u2, v2).

    Exact and radical-free: signs decide first, then squared cosines are
    cross-multiplied.  The two pairs may live in different forms; the cosine
    ratio is dimensionless.  Returns "lt", "eq", or "gt".
    """
    for w in (u, v, u2, v2):
        if w.is_zero():
            raise ValueError("zero vector has no direction")
    p1 = u.pair(v)
    p2 = u2.pair(v2)
    s1 = sign(p1)
    s2 = sign(p2)
    if s1 != s2:
        return LT if s1 < s2 else GT
    if s1 == 0:
        return EQ
    lhs = p1 * p1 * u2.norm_sq() * v2.norm_sq()
    rhs = p2 * p2 * u.norm_sq() * v.norm_sq()
    if lhs == rhs:
        return EQ
    if s1 > 0:
        return GT if lhs > rhs else LT
    return LT if lhs > rhs else GT


def spherical_angle_sign(base: RVec, u: RVec, v: RVec) -> int:
    """Sign of the cosine of the spherical angle at direction base.

    For the geodesics from the direction of base toward the directions of u
    and v on the unit sphere, the cosine of the angle between them has the
    sign of B(u,v) B(base,base) - B(base,u) B(base,v).  Homogeneous, so no
    normalization is needed.
    """
    if base.is_zero() or u.is_zero() or v.is_zero():
        raise ValueError("zero vector has no direction")
    return sign(u.pair(v) * base.norm_sq() - base.pair(u) * base.pair(v))
