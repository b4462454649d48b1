"""Small finite fields, exact linear algebra over them, Laurent polynomials.

Fields of order 2, 3, and 4 cover everything needed elsewhere.  Elements
are the ints 0..q-1; for order 4 the two roots of x^2 + x + 1 are encoded
as 2 and 3, addition is xor, and multiplication follows x^2 = x + 1.
Laurent polynomials store nonzero terms sparsely and know how to substitute
the variable by its inverse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Sequence, Tuple

_GF4_MUL = (
    (0, 0, 0, 0),
    (0, 1, 2, 3),
    (0, 2, 3, 1),
    (0, 3, 1, 2),
)
_GF4_INV = (0, 1, 3, 2)


@dataclass(frozen=True)
class Field:
    q: int

    def __post_init__(self):
        if self.q not in (2, 3, 4):
            raise ValueError("only the fields of order 2, 3, and 4 are supported")

    @property
    def elements(self) -> Tuple[int, ...]:
        return tuple(range(self.q))

    def check(self, a: int) -> int:
        if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < self.q:
            raise ValueError(f"not an element of a field of order {self.q}: {a!r}")
        return a

    def add(self, a: int, b: int) -> int:
        if self.q == 4:
            return a ^ b
        return (a + b) % self.q

    def neg(self, a: int) -> int:
        if self.q == 4:
            return a
        return (-a) % self.q

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.q == 4:
            return _GF4_MUL[a][b]
        return (a * b) % self.q

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        if self.q == 4:
            return _GF4_INV[a]
        return pow(a, self.q - 2, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))


def all_vectors(field: Field, n: int):
    return itertools.product(field.elements, repeat=n)


def rref(field: Field, rows: Iterable[Sequence[int]]) -> Tuple[Tuple[int, ...], ...]:
    """Canonical reduced row echelon basis of the row space.

    The output is the unique such basis, so equal tuples mean equal row
    spaces and the tuple doubles as a subspace identifier.
    """
    mat = [[field.check(a) for a in r] for r in rows]
    if mat and any(len(r) != len(mat[0]) for r in mat):
        raise ValueError("rows must all have the same length")
    ncols = len(mat[0]) if mat else 0
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        scale = field.inv(mat[r][c])
        mat[r] = [field.mul(scale, x) for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [field.sub(x, field.mul(f, y)) for x, y in zip(mat[i], mat[r])]
        r += 1
        if r == len(mat):
            break
    return tuple(tuple(row) for row in mat[:r])


def rank(field: Field, rows: Iterable[Sequence[int]]) -> int:
    return len(rref(field, rows))


def in_row_space(field: Field, v: Sequence[int], rows: Sequence[Sequence[int]]) -> bool:
    base = rank(field, rows)
    return rank(field, list(rows) + [list(v)]) == base


def sum_dim(field: Field, a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> int:
    return rank(field, list(a) + list(b))


def intersection_dim(field: Field, a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> int:
    return rank(field, a) + rank(field, b) - sum_dim(field, a, b)


def nullspace(field: Field, rows: Sequence[Sequence[int]], ncols: int) -> Tuple[Tuple[int, ...], ...]:
    """Basis of the right kernel {v : A v = 0} of the given coefficient rows."""
    if any(len(r) != ncols for r in rows):
        raise ValueError("rows must have ncols entries")
    echelon = rref(field, rows) if rows else ()
    pivots = []
    for row in echelon:
        pivots.append(next(c for c in range(ncols) if row[c] != 0))
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for row, p in zip(echelon, pivots):
            v[p] = field.neg(row[f])
        basis.append(tuple(v))
    return tuple(basis)


@dataclass(frozen=True)
class LPoly:
    """A Laurent polynomial: nonzero terms (exponent, coefficient), ascending."""

    field: Field
    terms: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        checked = tuple((int(e), self.field.check(c)) for e, c in self.terms)
        object.__setattr__(self, "terms", checked)
        exps = [e for e, _ in checked]
        if exps != sorted(exps) or len(set(exps)) != len(exps):
            raise ValueError("terms must be strictly ascending in the exponent")
        if any(c == 0 for _, c in checked):
            raise ValueError("zero coefficients must be dropped")

    @staticmethod
    def from_dict(field: Field, coeffs: Dict[int, int]) -> "LPoly":
        items = sorted((e, c) for e, c in coeffs.items() if c != 0)
        return LPoly(field, tuple(items))

    @staticmethod
    def zero(field: Field) -> "LPoly":
        return LPoly(field, ())

    @staticmethod
    def const(field: Field, c: int) -> "LPoly":
        return LPoly.from_dict(field, {0: c})

    @staticmethod
    def t_power(field: Field, e: int, c: int = 1) -> "LPoly":
        return LPoly.from_dict(field, {e: c})

    @staticmethod
    def one(field: Field) -> "LPoly":
        return LPoly.const(field, 1)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, e: int) -> int:
        for exp, c in self.terms:
            if exp == e:
                return c
        return 0

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(e for e, _ in self.terms)

    def valuation(self) -> int:
        if not self.terms:
            raise ValueError("the zero polynomial has no valuation")
        return self.terms[0][0]

    def degree(self) -> int:
        if not self.terms:
            raise ValueError("the zero polynomial has no degree")
        return self.terms[-1][0]

    def _require_same_field(self, other: "LPoly"):
        if not isinstance(other, LPoly):
            raise TypeError(f"expected a Laurent polynomial, got {other!r}")
        if other.field != self.field:
            raise ValueError("polynomials live over different fields")

    def __add__(self, other: "LPoly") -> "LPoly":
        self._require_same_field(other)
        out = dict(self.terms)
        for e, c in other.terms:
            out[e] = self.field.add(out.get(e, 0), c)
        return LPoly.from_dict(self.field, out)

    def __neg__(self) -> "LPoly":
        return LPoly(self.field, tuple((e, self.field.neg(c)) for e, c in self.terms))

    def __sub__(self, other: "LPoly") -> "LPoly":
        return self + (-other)

    def __mul__(self, other: "LPoly") -> "LPoly":
        self._require_same_field(other)
        out: Dict[int, int] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                out[e] = self.field.add(out.get(e, 0), self.field.mul(c1, c2))
        return LPoly.from_dict(self.field, out)

    def scale(self, c: int) -> "LPoly":
        self.field.check(c)
        if c == 0:
            return LPoly.zero(self.field)
        return LPoly(self.field, tuple((e, self.field.mul(c, x)) for e, x in self.terms))

    def shift(self, k: int) -> "LPoly":
        return LPoly(self.field, tuple((e + k, c) for e, c in self.terms))

    def subs_inv(self) -> "LPoly":
        """Substitute the variable by its inverse: exponents negate."""
        return LPoly(self.field, tuple(reversed([(-e, c) for e, c in self.terms])))

    def is_unit(self) -> bool:
        return len(self.terms) == 1

    def unit_inverse(self) -> "LPoly":
        if not self.is_unit():
            raise ValueError("only monomials are invertible")
        e, c = self.terms[0]
        return LPoly(self.field, ((-e, self.field.inv(c)),))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        bits = []
        for e, c in self.terms:
            if e == 0:
                bits.append(str(c))
            else:
                head = "" if c == 1 else f"{c}*"
                bits.append(f"{head}t^{e}" if e != 1 else f"{head}t")
        return " + ".join(bits)
