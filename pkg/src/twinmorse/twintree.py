"""The twin tree of the rank-one Laurent loop group, exactly.

Elements are 2 by 2 Laurent-polynomial matrices of determinant one over a
small finite field.  The positive tree's chambers are cosets of the Borel
subgroup of t-polynomial matrices (lower left divisible by t), the negative
tree mirrors this in the inverse variable.  Chambers are named by canonical
gallery words from the fundamental chamber, Weyl distance comes from a
lattice model with valuation bookkeeping, codistance from the splitting
exponents of lattice pairs across the two rings, Birkhoff factors from
small linear systems over the scalar field, and all of it feeds coordinate
formulas on the standard twin apartment (the integer line twice, glued by
opposition).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Dict, List, Optional, Sequence, Tuple

from .gfq import Field, LPoly, nullspace

Letter = Tuple[int, int]
Word = Tuple[Letter, ...]

_BALL_GUARDRAIL = 1500


def _vector_ratio(field: Field, u, base) -> Optional[int]:
    """The scalar lam with u = lam * base, or None if the pair is independent.

    Both arguments are nonzero length-two coefficient vectors.
    """
    if base[0] != 0:
        lam = field.div(u[0], base[0])
        return lam if u[1] == field.mul(lam, base[1]) else None
    if u[0] != 0:
        return None
    return field.div(u[1], base[1])


def _unit_determinant_pair(field: Field, top_rows, bottom_rows):
    """A pair of rows, one from each basis, with nonzero constant determinant.

    The determinant is bilinear in the two rows, so if it vanishes on all
    basis pairs it vanishes on the spans and no valid pair exists (None).
    """
    for top in top_rows:
        for bot in bottom_rows:
            det = top[0] * bot[1] - top[1] * bot[0]
            if det.is_zero():
                continue
            assert det.is_unit() and det.degree() == 0, (
                "a Borel row pair must have constant determinant"
            )
            return top, bot
    return None


@dataclass(frozen=True)
class CodistValue:
    """An infinite dihedral element: word length plus the first letter.

    Letters are the panel tags 1 and 0; words alternate, so (length, first)
    is a complete encoding.  Length zero is the identity and carries no
    first letter.
    """

    length: int
    first: Optional[int]

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be nonnegative")
        if (self.length == 0) != (self.first is None):
            raise ValueError("first letter must exist exactly when length > 0")
        if self.first not in (None, 0, 1):
            raise ValueError("letters are the panel tags 0 and 1")

    def word(self) -> Tuple[int, ...]:
        if self.length == 0:
            return ()
        out = []
        j = self.first
        for _ in range(self.length):
            out.append(j)
            j = 1 - j
        return tuple(out)

    @property
    def last(self) -> Optional[int]:
        w = self.word()
        return w[-1] if w else None

    def inverse(self) -> "CodistValue":
        if self.length == 0:
            return self
        return CodistValue(self.length, self.last)


IDENTITY_WORD = CodistValue(0, None)


@dataclass(frozen=True)
class LaurentMat:
    """A determinant-one 2 by 2 matrix of Laurent polynomials."""

    a: LPoly
    b: LPoly
    c: LPoly
    d: LPoly

    def __post_init__(self):
        f = self.a.field
        for e in (self.b, self.c, self.d):
            if e.field != f:
                raise ValueError("entries live over different fields")
        det = self.a * self.d - self.b * self.c
        if det != LPoly.one(f):
            raise ValueError(f"determinant must be one, got {det!r}")

    @property
    def field(self) -> Field:
        return self.a.field

    @property
    def entries(self) -> Tuple[LPoly, LPoly, LPoly, LPoly]:
        return (self.a, self.b, self.c, self.d)

    @staticmethod
    def identity(f: Field) -> "LaurentMat":
        one, zero = LPoly.one(f), LPoly.zero(f)
        return LaurentMat(one, zero, zero, one)

    def __mul__(self, other: "LaurentMat") -> "LaurentMat":
        return LaurentMat(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inv(self) -> "LaurentMat":
        return LaurentMat(self.d, -self.b, -self.c, self.a)

    def subs_inv(self) -> "LaurentMat":
        return LaurentMat(
            self.a.subs_inv(), self.b.subs_inv(), self.c.subs_inv(), self.d.subs_inv()
        )

    def is_identity(self) -> bool:
        return self == LaurentMat.identity(self.field)


def mat_to_json(m: LaurentMat) -> dict:
    return {
        "q": m.field.q,
        "entries": [[[e, c] for e, c in p.terms] for p in m.entries],
    }


def mat_from_json(data: dict) -> LaurentMat:
    f = Field(data["q"])
    polys = [
        LPoly(f, tuple((int(e), int(c)) for e, c in entry)) for entry in data["entries"]
    ]
    return LaurentMat(*polys)


@dataclass(frozen=True)
class ChamberCoset:
    """A Borel coset named by its canonical gallery word from the base chamber.

    The word lists (panel tag, residue) letters along the unique geodesic
    gallery; it is a complete name, so equality is word equality.  The
    stored representative is the product of the letter matrices.
    """

    side: str
    word: Word
    rep: LaurentMat = dataclass_field(compare=False)


@dataclass(frozen=True)
class TreeVertex:
    """A vertex: the word of its chamber nearest the base, plus the type."""

    side: str
    word: Word
    typ: int


def _check_side(side: str) -> str:
    if side not in ("+", "-"):
        raise ValueError(f"side must be '+' or '-', got {side!r}")
    return side


def panel_vertex_type(j: int) -> int:
    """Panel tag 1 crosses the type-0 vertex, tag 0 crosses type 1."""
    return 1 - j


class TwinTree:
    def __init__(self, q: int):
        self.field = Field(q)
        self.q = q
        f = self.field
        one, zero = LPoly.one(f), LPoly.zero(f)
        self._s = {
            1: LaurentMat(zero, one, -one, zero),
            0: LaurentMat(zero, LPoly.t_power(f, -1), -LPoly.t_power(f, 1), zero),
        }
        self._rep_cache: Dict[Tuple[str, Word], LaurentMat] = {}

    # -- elements ----------------------------------------------------------

    def s_hat(self, j: int) -> LaurentMat:
        return self._s[j]

    def x_elem(self, j: int, c: int) -> LaurentMat:
        f = self.field
        one, zero = LPoly.one(f), LPoly.zero(f)
        if j == 1:
            return LaurentMat(one, LPoly.from_dict(f, {0: c}), zero, one)
        if j == 0:
            return LaurentMat(one, zero, LPoly.from_dict(f, {1: c}), one)
        raise ValueError("panel tags are 0 and 1")

    def phi(self, m: LaurentMat) -> LaurentMat:
        """The side-swapping automorphism: conjugated variable inversion."""
        s = self._s[1]
        return s * m.subs_inv() * s.inv()

    def letter_matrix(self, side: str, j: int, c: int) -> LaurentMat:
        m = self.x_elem(j, c) * self._s[j]
        return m if side == "+" else self.phi(m)

    def rep(self, side: str, word: Word) -> LaurentMat:
        _check_side(side)
        word = tuple(word)
        if (side, word) not in self._rep_cache:
            if not word:
                out = LaurentMat.identity(self.field)
            else:
                out = self.rep(side, word[:-1]) * self.letter_matrix(side, *word[-1])
            self._rep_cache[(side, word)] = out
        return self._rep_cache[(side, word)]

    def chamber(self, side: str, word: Sequence[Letter]) -> ChamberCoset:
        word = tuple((int(j), self.field.check(c)) for j, c in word)
        for (j, _), (j2, _) in zip(word, word[1:]):
            if j2 != 1 - j:
                raise ValueError("gallery words alternate their panel tags")
        return ChamberCoset(_check_side(side), word, self.rep(side, word))

    def fundamental(self, side: str) -> ChamberCoset:
        return self.chamber(side, ())

    # -- Borel membership ----------------------------------------------------

    def in_borel(self, m: LaurentMat, side: str) -> bool:
        _check_side(side)
        a, b, c, d = m.entries
        if side == "+":
            polys = all(p.is_zero() or p.valuation() >= 0 for p in (a, b, d))
            return polys and (c.is_zero() or c.valuation() >= 1)
        polys = all(p.is_zero() or p.degree() <= 0 for p in (a, c, d))
        return polys and (b.is_zero() or b.degree() <= -1)

    def coset_equal(self, side: str, g: LaurentMat, h: LaurentMat) -> bool:
        return self.in_borel(g.inv() * h, side)

    # -- lattice-model Weyl distance -------------------------------------------

    def _val(self, side: str, p: LPoly) -> Optional[int]:
        if p.is_zero():
            return None
        return p.valuation() if side == "+" else -p.degree()

    def _vertex_mat(self, side: str, g: LaurentMat, typ: int):
        # column basis of the lattice g . (e1, t^typ e2); both sides share it
        shift = LPoly.t_power(self.field, typ)
        return (g.a, g.b * shift, g.c, g.d * shift)

    def _lattice_distance(self, side: str, A, B) -> int:
        # |val det - 2 min-val| of adj(A).B; the adjugate scale cancels
        adj = (A[3], -A[1], -A[2], A[0])
        n = (
            adj[0] * B[0] + adj[1] * B[2],
            adj[0] * B[1] + adj[1] * B[3],
            adj[2] * B[0] + adj[3] * B[2],
            adj[2] * B[1] + adj[3] * B[3],
        )
        det_n = n[0] * n[3] - n[1] * n[2]
        assert not det_n.is_zero(), "lattice bases must be invertible"
        vdet = self._val(side, det_n)
        mu = min(v for v in (self._val(side, e) for e in n) if v is not None)
        return abs(vdet - 2 * mu)

    def vertex_distance(self, u: TreeVertex, v: TreeVertex) -> int:
        if u.side != v.side:
            raise ValueError("vertex distance needs one side; use codistance across")
        A = self._vertex_mat(u.side, self.rep(u.side, u.word), u.typ)
        B = self._vertex_mat(v.side, self.rep(v.side, v.word), v.typ)
        return self._lattice_distance(u.side, A, B)

    def matrix_delta(self, g: LaurentMat, side: str) -> CodistValue:
        """Weyl distance from the fundamental chamber to g's chamber."""
        if self.in_borel(g, side):
            return IDENTITY_WORD
        eye = LaurentMat.identity(self.field)
        ends_c0 = {t: self._vertex_mat(side, eye, t) for t in (0, 1)}
        ends_g = [self._vertex_mat(side, g, t) for t in (0, 1)]
        best = {
            t: min(self._lattice_distance(side, ends_c0[t], e) for e in ends_g)
            for t in (0, 1)
        }
        assert best[0] != best[1], "the geodesic leaves through one endpoint"
        length = 1 + min(best.values())
        exit_type = 0 if best[0] < best[1] else 1
        return CodistValue(length, 1 if exit_type == 0 else 0)

    def delta(self, c: ChamberCoset, d: ChamberCoset) -> CodistValue:
        if c.side != d.side:
            raise ValueError("Weyl distance needs chambers on one side")
        return self.matrix_delta(c.rep.inv() * d.rep, c.side)

    # -- chamber enumeration -----------------------------------------------------

    def ball(self, side: str, radius: int) -> List[ChamberCoset]:
        """All chambers within gallery distance `radius` of the base chamber."""
        _check_side(side)
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        count = 1 + 2 * self.q * (self.q ** radius - 1) // (self.q - 1)
        if count > _BALL_GUARDRAIL:
            raise ValueError(f"guardrail exceeded: the ball would hold {count} chambers")
        out = [self.fundamental(side)]
        frontier: List[Word] = [()]
        for _ in range(radius):
            grown: List[Word] = []
            for word in frontier:
                tags = (0, 1) if not word else (1 - word[-1][0],)
                for j in tags:
                    for c in self.field.elements:
                        nw = word + ((j, c),)
                        grown.append(nw)
                        out.append(self.chamber(side, nw))
            frontier = grown
        assert len(out) == count
        return out

    def canonical_chamber(self, side: str, g: LaurentMat) -> ChamberCoset:
        """Peel the unique geodesic word of the coset; Borel check at the end."""
        word: List[Letter] = []
        cur = g
        while True:
            w = self.matrix_delta(cur, side)
            if w.length == 0:
                break
            j = w.first
            hit = None
            for c in self.field.elements:
                step = self.letter_matrix(side, j, c)
                nxt = step.inv() * cur
                if self.matrix_delta(nxt, side).length == w.length - 1:
                    assert hit is None, "geodesic letters must be unique"
                    hit = (c, nxt)
            assert hit is not None, "some letter must shorten a positive length"
            word.append((j, hit[0]))
            cur = hit[1]
        assert self.in_borel(cur, side)
        coset = self.chamber(side, tuple(word))
        assert self.coset_equal(side, coset.rep, g)
        return coset

    # -- vertices and stars ---------------------------------------------------------

    def vertex_of(self, c: ChamberCoset, typ: int) -> TreeVertex:
        if typ not in (0, 1):
            raise ValueError("vertex types are 0 and 1")
        word = c.word
        if word and typ == panel_vertex_type(word[-1][0]):
            word = word[:-1]
        return TreeVertex(c.side, word, typ)

    def chamber_vertices(self, c: ChamberCoset) -> Tuple[TreeVertex, TreeVertex]:
        return (self.vertex_of(c, 0), self.vertex_of(c, 1))

    def star(self, v: TreeVertex) -> List[ChamberCoset]:
        """The q+1 chambers containing a vertex."""
        if v.word and panel_vertex_type(v.word[-1][0]) == v.typ:
            raise ValueError("vertex word is not in canonical form")
        j = 1 if v.typ == 0 else 0
        out = [self.chamber(v.side, v.word)]
        out.extend(self.chamber(v.side, v.word + ((j, c),)) for c in self.field.elements)
        for ch in out:
            assert self.vertex_of(ch, v.typ) == v
        return out

    # -- lattice pair splitting ---------------------------------------------------------

    def _splitting_exponents(self, n) -> Tuple[int, int]:
        """Reduce the columns of a transition matrix over the inverse-variable ring.

        A column operation adds a t^(-j) multiple (j >= 0) of one column to the
        other, so the column lattice over that ring never changes.  While the
        bottom coefficient vectors of the two columns are parallel, the move
        cancels the lower one and strictly raises its valuation; the sum of the
        column valuations is capped by the determinant valuation, so this
        stops.  The two valuations of the reduced basis are the splitting pair
        of the lattice pair, returned in descending order.
        """
        f = self.field
        cols = [[n[0], n[2]], [n[1], n[3]]]
        det = n[0] * n[3] - n[1] * n[2]
        assert not det.is_zero(), "transition matrix must be invertible"

        def vmin(col: List[LPoly]) -> int:
            return min(p.valuation() for p in col if not p.is_zero())

        def bottom(col: List[LPoly], v: int) -> Tuple[int, int]:
            return (col[0].coeff(v), col[1].coeff(v))

        start = vmin(cols[0]) + vmin(cols[1])
        cap = det.valuation() - start + 2
        steps = 0
        while True:
            v = [vmin(cols[0]), vmin(cols[1])]
            low = 0 if v[0] <= v[1] else 1
            other = 1 - low
            u = bottom(cols[low], v[low])
            base = bottom(cols[other], v[other])
            lam = _vector_ratio(f, u, base)
            if lam is None:
                assert v[0] + v[1] == det.valuation()
                return (max(v), min(v))
            shift = LPoly.t_power(f, v[low] - v[other], f.neg(lam))
            cols[low][0] = cols[low][0] + shift * cols[other][0]
            cols[low][1] = cols[low][1] + shift * cols[other][1]
            steps += 1
            assert steps <= cap, "column reduction exceeded its valuation budget"

    def _splitting_gap(self, plus_basis, minus_basis) -> int:
        # adj(A).B differs from A^-1.B by a monomial scale, which moves both
        # splitting exponents equally and drops out of the gap
        A, B = plus_basis, minus_basis
        adj = (A[3], -A[1], -A[2], A[0])
        n = (
            adj[0] * B[0] + adj[1] * B[2],
            adj[0] * B[1] + adj[1] * B[3],
            adj[2] * B[0] + adj[3] * B[2],
            adj[2] * B[1] + adj[3] * B[3],
        )
        e1, e2 = self._splitting_exponents(n)
        return e1 - e2

    # -- Birkhoff reduction -----------------------------------------------------------

    def birkhoff(self, m: LaurentMat):
        """Factor m as (negative Borel) . standard Weyl rep . (positive Borel).

        The Weyl word comes from the endpoint splitting gaps.  The inverse of
        the negative factor is then a matrix R with inverse-polynomial rows
        such that R.m has the entrywise valuation floors of (Weyl rep) times
        a positive Borel; those floors are linear conditions on the
        coefficients of R, solved over the scalar field.  Any solution has a
        constant determinant, because det R equals det(R.m), and one is an
        inverse-polynomial while the other is a polynomial.  Returns
        (w, b_minus, b_plus) recombining exactly.
        """
        f = self.field
        w = self.matrix_codelta(m, "-")
        wh = self.standard_rep(w)

        floors = [[0, 0], [0, 0]]
        wrows = ((wh.a, wh.b), (wh.c, wh.d))
        for i in (0, 1):
            kcol = 0 if not wrows[i][0].is_zero() else 1
            piv = wrows[i][kcol]
            assert piv.is_unit() and wrows[i][1 - kcol].is_zero()
            floors[i][0] = piv.valuation() + (1 if kcol == 1 else 0)
            floors[i][1] = piv.valuation()

        span = 0
        for p in m.entries:
            if not p.is_zero():
                span = max(span, abs(p.degree()), abs(p.valuation()))
        pair = None
        width = span + 2
        while pair is None:
            assert width <= 5 * span + 12, "Birkhoff row solve outgrew its window"
            s0 = self._borel_row_solutions(m, width, floors[0], tail=-1)
            s1 = self._borel_row_solutions(m, width, floors[1], tail=0)
            pair = _unit_determinant_pair(f, s0, s1)
            width += 3

        (r00, r01), (r10, r11) = pair
        det_r = r00 * r11 - r01 * r10
        assert det_r.is_unit() and det_r.degree() == 0
        u = det_r.coeff(0)
        uinv = LPoly.const(f, f.inv(u))
        bm = LaurentMat(r11, -r01 * uinv, -r10, r00 * uinv)
        bp = wh.inv() * LaurentMat(r00 * uinv, r01 * uinv, r10, r11) * m
        assert self.in_borel(bm, "-") and self.in_borel(bp, "+")
        assert bm * wh * bp == m
        return w, bm, bp

    def _borel_row_solutions(self, m: LaurentMat, width: int, row_floors, tail: int):
        """Rows (p, s) of inverse-polynomials, p up to exponent 0 and s up to
        `tail`, with p*a + s*c and p*b + s*d meeting the given valuation
        floors.  Returns a basis of the solution space as LPoly pairs."""
        f = self.field
        p_exps = list(range(-width, 1))
        s_exps = list(range(-width, tail + 1))
        nvars = len(p_exps) + len(s_exps)
        eqs = []
        for colpair, floor in zip(((m.a, m.c), (m.b, m.d)), row_floors):
            assert not (colpair[0].is_zero() and colpair[1].is_zero())
            lo = min(p.valuation() for p in colpair if not p.is_zero()) - width
            for e in range(lo, floor):
                row = [0] * nvars
                for idx, x in enumerate(p_exps):
                    row[idx] = colpair[0].coeff(e - x)
                for idx, x in enumerate(s_exps):
                    row[len(p_exps) + idx] = colpair[1].coeff(e - x)
                if any(v != 0 for v in row):
                    eqs.append(row)
        out = []
        for vec in nullspace(f, eqs, nvars):
            p = LPoly.from_dict(f, {x: vec[i] for i, x in enumerate(p_exps)})
            s = LPoly.from_dict(f, {x: vec[len(p_exps) + i] for i, x in enumerate(s_exps)})
            out.append((p, s))
        return out

    def standard_rep(self, w: CodistValue) -> LaurentMat:
        out = LaurentMat.identity(self.field)
        for j in w.word():
            out = out * self._s[j]
        return out

    # -- codistance -------------------------------------------------------------------

    def _codistance_table(self, m: LaurentMat, from_side: str):
        """Splitting gaps k[center endpoint type][far endpoint type] for the
        pair (fundamental chamber of from_side, m . far fundamental chamber)."""
        eye = LaurentMat.identity(self.field)
        table = [[0, 0], [0, 0]]
        for tau in (0, 1):
            for sigma in (0, 1):
                if from_side == "+":
                    gap = self._splitting_gap(
                        self._vertex_mat("+", eye, tau),
                        self._vertex_mat("-", m, sigma),
                    )
                else:
                    gap = self._splitting_gap(
                        self._vertex_mat("+", m, sigma),
                        self._vertex_mat("-", eye, tau),
                    )
                assert gap % 2 == (tau + sigma) % 2
                table[tau][sigma] = gap
        return table

    def matrix_codelta(self, m: LaurentMat, from_side: str) -> CodistValue:
        """Codistance word for m = center_rep^-1 . far_rep, from the center's side."""
        _check_side(from_side)
        k = self._codistance_table(m, from_side)
        if k[0][0] == 0 and k[1][1] == 0:
            return IDENTITY_WORD
        near = {tau: min(k[tau]) for tau in (0, 1)}
        assert near[0] != near[1], "the geodesic leaves through one endpoint"
        length = 1 + min(near.values())
        exit_type = 0 if near[0] < near[1] else 1
        return CodistValue(length, 1 if exit_type == 0 else 0)

    def codistance(self, c_plus: ChamberCoset, c_minus: ChamberCoset) -> CodistValue:
        if c_plus.side != "+" or c_minus.side != "-":
            raise ValueError("codistance takes a positive and a negative chamber")
        return self.matrix_codelta(c_plus.rep.inv() * c_minus.rep, "+")

    def codelta_from(self, center: ChamberCoset, far: ChamberCoset) -> CodistValue:
        if center.side == far.side:
            raise ValueError("codistance needs chambers on opposite sides")
        return self.matrix_codelta(center.rep.inv() * far.rep, center.side)

    # -- standard-apartment coordinates ---------------------------------------------------

    @staticmethod
    def _signed_coordinate(w: CodistValue, same_side: bool) -> int:
        if w.length == 0:
            return 0
        if same_side:
            return -w.length if w.first == 1 else w.length
        return w.length if w.first == 0 else -w.length

    @staticmethod
    def _apartment_action(word: Word, n: int) -> int:
        # letters act on vertex coordinates: tag 1 reflects at 0, tag 0 at 1
        cur = n
        for j, _ in reversed(word):
            cur = -cur if j == 1 else 2 - cur
        return cur

    @staticmethod
    def _apartment_chamber_action(word: Word, n: int) -> int:
        # the same reflections on chamber indices, where chamber n spans [n, n+1]
        cur = n
        for j, _ in reversed(word):
            cur = -1 - cur if j == 1 else 1 - cur
        return cur

    def _std_word(self, center: ChamberCoset) -> Word:
        if any(c != 0 for _, c in center.word):
            raise ValueError("the center must lie in the standard twin apartment")
        return center.word

    def chamber_coordinate(self, center: ChamberCoset, c: ChamberCoset) -> int:
        """Index of the apartment chamber the twin retraction sends c to."""
        word = self._std_word(center)
        if c.side == center.side:
            rel = self._signed_coordinate(self.delta(center, c), True)
        else:
            rel = self._signed_coordinate(self.codelta_from(center, c), False)
        return self._apartment_chamber_action(word, rel)

    def vertex_coordinate(self, center: ChamberCoset, v: TreeVertex) -> int:
        """Apartment coordinate of the retraction image of a vertex."""
        word = self._std_word(center)
        base = self.chamber(v.side, v.word)
        if v.side == center.side:
            rel = self._signed_coordinate(self.delta(center, base), True)
        else:
            rel = self._signed_coordinate(self.codelta_from(center, base), False)
        rel_vertex = rel + ((v.typ - rel) % 2)
        return self._apartment_action(word, rel_vertex)

    def vertex_codistance(self, v_plus: TreeVertex, v_minus: TreeVertex) -> int:
        """Coordinate gap after retracting both vertices, centered at the minus side.

        Every chamber containing the negative vertex gives the same value;
        all q+1 centers are checked.
        """
        if v_plus.side != "+" or v_minus.side != "-":
            raise ValueError("vertex codistance takes a positive and a negative vertex")
        base_plus = self.chamber(v_plus.side, v_plus.word)
        values = set()
        for center in self.star(v_minus):
            w = self.codelta_from(center, base_plus)
            rel = self._signed_coordinate(w, False)
            a = rel + ((v_plus.typ - rel) % 2)
            values.add(abs(a - v_minus.typ))
        assert len(values) == 1, "codistance must not depend on the center chamber"
        return values.pop()

    # -- twin retraction ------------------------------------------------------------------

    def twin_retraction(self, center: ChamberCoset, x):
        """Retract a chamber or vertex onto the standard twin apartment."""
        apt = StdTwinApartment(self)
        if isinstance(x, ChamberCoset):
            return apt.chamber(x.side, self.chamber_coordinate(center, x))
        if isinstance(x, TreeVertex):
            return apt.vertex(x.side, self.vertex_coordinate(center, x))
        raise TypeError("retraction applies to chambers and vertices")

    # -- panels across the twinning ----------------------------------------------------------

    def pr_panel(self, v: TreeVertex, d: ChamberCoset) -> ChamberCoset:
        """The chamber of v's panel with maximal codistance length to d."""
        if v.side == d.side:
            raise ValueError("the panel projection pairs a vertex with the far side")
        star = self.star(v)
        lengths = [self.codelta_from(ch, d).length for ch in star]
        top = max(lengths)
        winners = [ch for ch, l in zip(star, lengths) if l == top]
        assert len(winners) == 1, "exactly one chamber must realize the top codistance"
        assert all(l == top - 1 for l in lengths if l != top)
        return winners[0]


class StdTwinApartment:
    """Both halves of the standard twin apartment, coordinatized by integers.

    Chamber n spans [n, n+1]; the vertex at n has type n mod 2.  Opposition
    is the identity on coordinates, so the two coordinate maps commute with
    it by construction.
    """

    def __init__(self, tree: TwinTree):
        self.tree = tree

    @staticmethod
    def chamber_word(n: int) -> Word:
        out: List[Letter] = []
        j = 0 if n > 0 else 1
        for _ in range(abs(n)):
            out.append((j, 0))
            j = 1 - j
        return tuple(out)

    def chamber(self, side: str, n: int) -> ChamberCoset:
        return self.tree.chamber(side, self.chamber_word(n))

    def vertex(self, side: str, n: int) -> TreeVertex:
        base = self.chamber(side, n - 1 if n >= 1 else n)
        return self.tree.vertex_of(base, n % 2)

    def op(self, x):
        if isinstance(x, ChamberCoset):
            flip = "-" if x.side == "+" else "+"
            return self.tree.chamber(flip, x.word)
        if isinstance(x, TreeVertex):
            flip = "-" if x.side == "+" else "+"
            return TreeVertex(flip, x.word, x.typ)
        raise TypeError("opposition applies to chambers and vertices")

    def coordinate_of_chamber(self, c: ChamberCoset) -> int:
        pos = 0
        for j, cc in c.word:
            if cc != 0:
                raise ValueError("not an apartment chamber")
            pos = pos + 1 if (pos + 1) % 2 == panel_vertex_type(j) else pos - 1
        return pos

    def coordinate_of_vertex(self, v: TreeVertex) -> int:
        pos = self.coordinate_of_chamber(self.tree.chamber(v.side, v.word))
        return pos + ((v.typ - pos) % 2)


# -- Bruhat normal form ---------------------------------------------------------------------


def bruhat(tree: TwinTree, g: LaurentMat, side: str):
    """Peel g into (w, b1, b2) with g = b1 . standard rep of w . b2, b's in one Borel.

    The gallery word comes from the lattice-model Weyl distance; each letter
    is the unique panel move shortening it, and every peeled prefix
    conjugate is checked to stay in the Borel subgroup.
    """
    _check_side(side)
    if side == "-":
        w, b1, b2 = bruhat(tree, tree.phi(g), "+")
        return w, tree.phi(b1), tree.phi(b2)
    w = tree.matrix_delta(g, "+")
    cur = g
    residues: List[int] = []
    remaining = w.length
    for j in w.word():
        hit = None
        for c in tree.field.elements:
            step = tree.letter_matrix("+", j, c)
            nxt = step.inv() * cur
            if tree.matrix_delta(nxt, "+").length == remaining - 1:
                assert hit is None, "the geodesic letter must be unique"
                hit = (c, nxt)
        assert hit is not None
        residues.append(hit[0])
        cur = hit[1]
        remaining -= 1
    assert tree.in_borel(cur, "+")
    b2 = cur
    r = LaurentMat.identity(tree.field)
    prefix = LaurentMat.identity(tree.field)
    for j, c in zip(w.word(), residues):
        conj = prefix * tree.x_elem(j, c) * prefix.inv()
        assert tree.in_borel(conj, "+"), "peeled root elements must stay positive"
        prefix = prefix * tree.s_hat(j)
        r = r * tree.letter_matrix("+", j, c)
    b1 = r * tree.standard_rep(w).inv()
    assert tree.in_borel(b1, "+")
    assert b1 * tree.standard_rep(w) * b2 == g
    return w, b1, b2
