"""Finite flag buildings over small fields and their hemisphere geometry.

Vertices are proper nonzero subspaces of a finite vector space, cells are
chains of nested subspaces, chambers are complete flags.  Joins of two such
buildings are supported so that reducible spherical types can be exercised.
Weyl distance is computed from intersection dimension profiles; vertex
directions relative to a pole are read off by retracting onto the model
apartment of the pole's carrier chamber.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .complexes import Complex, full_subcomplex
from .coxeter import (
    CoxeterSystem,
    direct_sum,
    finite_cartan,
    identity_matrix,
    mat_mul,
    mat_vec,
)
from .gfq import Field, all_vectors, in_row_space, intersection_dim, rank, rref
from .qspace import RVec, sign

_CARTAN_NAME = {1: "A1", 2: "A2", 3: "A3"}
_MAX_CHAMBERS = 1000

Subspace = Tuple[Tuple[int, ...], ...]
Flag = Tuple[Subspace, ...]
Perm = Tuple[int, ...]


def _subspaces_by_dim(field: Field, space_dim: int) -> List[Tuple[Subspace, ...]]:
    by_dim: List[Tuple[Subspace, ...]] = []
    points = sorted({rref(field, [v]) for v in all_vectors(field, space_dim) if any(v)})
    by_dim.append(tuple(points))
    for k in range(2, space_dim):
        grown = set()
        for smaller in by_dim[-1]:
            for p in points:
                span = rref(field, list(smaller) + list(p))
                if len(span) == k:
                    grown.add(span)
        by_dim.append(tuple(sorted(grown)))
    return by_dim


def _contains_subspace(field: Field, big: Subspace, small: Subspace) -> bool:
    return all(in_row_space(field, row, big) for row in small)


def _complete_flags(field: Field, n: int, by_dim) -> List[Flag]:
    flags: List[Flag] = [(p,) for p in by_dim[0]]
    for k in range(2, n + 1):
        flags = [
            f + (big,)
            for f in flags
            for big in by_dim[k - 1]
            if _contains_subspace(field, big, f[-1])
        ]
    return flags


class FlagBuilding:
    """A spherical building realized as the flag complex of subspace chains.

    `factors` lists the irreducible factors as (rank, field order) pairs;
    more than one factor makes the complex a join.  Vertex ids are pairs
    (global type, subspace), so typ is just the first entry.
    """

    def __init__(self, factors: Sequence[Tuple[int, int]]):
        for n, q in factors:
            if n not in (1, 2, 3):
                raise ValueError("factor ranks are limited to 1, 2, 3")
        self.factors = tuple((int(n), int(q)) for n, q in factors)
        self.fields = tuple(Field(q) for _, q in self.factors)
        self.offsets = tuple(
            sum(n for n, _ in self.factors[:i]) for i in range(len(self.factors))
        )
        self.rank = sum(n for n, _ in self.factors)

        self.by_dim = []
        factor_flags: List[List[Flag]] = []
        total = 1
        for (n, q), field in zip(self.factors, self.fields):
            by_dim = _subspaces_by_dim(field, n + 1)
            self.by_dim.append(by_dim)
            flags = _complete_flags(field, n, by_dim)
            factor_flags.append(flags)
            total *= len(flags)
        if total > _MAX_CHAMBERS:
            raise ValueError(f"size guardrail exceeded: {total} chambers")

        self.flag_of: Dict[frozenset, Tuple[Flag, ...]] = {}
        tops = []
        for combo in itertools.product(*factor_flags):
            verts = []
            for fi, flag in enumerate(combo):
                off = self.offsets[fi]
                verts.extend((off + d, sub) for d, sub in enumerate(flag))
            cid = frozenset(verts)
            self.flag_of[cid] = tuple(combo)
            tops.append(verts)
        self.complex = Complex.simplicial_closure(tops)
        self.chambers = sorted(self.flag_of, key=lambda c: sorted(c))

        parts = [finite_cartan(_CARTAN_NAME[n]) for n, _ in self.factors]
        self.sys = CoxeterSystem(parts[0] if len(parts) == 1 else direct_sum(*parts))

        self._chambers_of_vertex: Dict[Tuple[int, Subspace], List[frozenset]] = {}
        for cid in self.chambers:
            for v in cid:
                self._chambers_of_vertex.setdefault(v, []).append(cid)

    def typ(self, v) -> int:
        return v[0]

    def factor_of_type(self, t: int) -> int:
        for fi in range(len(self.factors)):
            n = self.factors[fi][0]
            if self.offsets[fi] <= t < self.offsets[fi] + n:
                return fi
        raise ValueError(f"no such vertex type: {t}")

    def chambers_of_vertex(self, v) -> List[frozenset]:
        return self._chambers_of_vertex[v]

    def check_thick(self):
        """Every panel bounds at least three chambers."""
        counts: Dict[frozenset, int] = {}
        for cid in self.chambers:
            for v in cid:
                counts[cid - {v}] = counts.get(cid - {v}, 0) + 1
        assert counts and all(c >= 3 for c in counts.values())


def build_flag(n: int, q: int) -> FlagBuilding:
    return FlagBuilding(((n, q),))


def build_join(first: Tuple[int, int], second: Tuple[int, int]) -> FlagBuilding:
    return FlagBuilding((first, second))


# -- Weyl distance from dimension profiles -----------------------------------------


def _perm_mul(a: Perm, b: Perm) -> Perm:
    return tuple(a[b[i]] for i in range(len(a)))


def _perm_inv(a: Perm) -> Perm:
    out = [0] * len(a)
    for i, v in enumerate(a):
        out[v] = i
    return tuple(out)


def _inversions(a: Perm) -> int:
    return sum(1 for i, j in itertools.combinations(range(len(a)), 2) if a[i] > a[j])


def _descent_word(p: Perm) -> List[int]:
    """A reduced word in adjacent transpositions, multiplying left to right."""
    cur = list(p)
    rev: List[int] = []
    while True:
        k = next((i for i in range(len(cur) - 1) if cur[i] > cur[i + 1]), None)
        if k is None:
            break
        cur[k], cur[k + 1] = cur[k + 1], cur[k]
        rev.append(k)
    return rev[::-1]


def _factor_permutation(field: Field, fa: Flag, fb: Flag, space_dim: int) -> Perm:
    full = tuple(tuple(1 if i == j else 0 for j in range(space_dim)) for i in range(space_dim))
    ca: List[Subspace] = [()] + list(fa) + [full]
    cb: List[Subspace] = [()] + list(fb) + [full]
    d = [[intersection_dim(field, a, b) for b in cb] for a in ca]
    pi = [None] * space_dim
    for i in range(1, space_dim + 1):
        for j in range(1, space_dim + 1):
            if d[i][j] - d[i - 1][j] - d[i][j - 1] + d[i - 1][j - 1] == 1:
                assert pi[j - 1] is None
                pi[j - 1] = i - 1
    assert all(v is not None for v in pi)
    return tuple(pi)


def weyl_distance_flags(bldg: FlagBuilding, c: frozenset, d: frozenset) -> Tuple[Perm, ...]:
    """Relative position of two chambers, one permutation per join factor."""
    if c not in bldg.flag_of or d not in bldg.flag_of:
        raise ValueError("both cells must be chambers (complete flags)")
    out = []
    for fi, (fa, fb) in enumerate(zip(bldg.flag_of[c], bldg.flag_of[d])):
        n, _ = bldg.factors[fi]
        out.append(_factor_permutation(bldg.fields[fi], fa, fb, n + 1))
    return tuple(out)


def weyl_length(delta: Tuple[Perm, ...]) -> int:
    return sum(_inversions(p) for p in delta)


def delta_matrix(bldg: FlagBuilding, delta: Tuple[Perm, ...]):
    """The Weyl element as a matrix on the model apartment's coordinates."""
    m = identity_matrix(bldg.sys.rank)
    for fi, p in enumerate(delta):
        off = bldg.offsets[fi]
        for k in _descent_word(p):
            m = mat_mul(m, bldg.sys.simple_matrices[off + k])
    return m


# -- projections and retractions ----------------------------------------------------


def projection(bldg: FlagBuilding, sigma: frozenset, c: frozenset) -> frozenset:
    """The chamber containing sigma closest to c, unique by gate property."""
    if sigma not in bldg.complex.cells:
        raise ValueError("sigma must be a cell of the building")
    cands = [ch for ch in bldg.chambers if sigma <= ch]
    best = min(weyl_length(weyl_distance_flags(bldg, c, ch)) for ch in cands)
    winners = [ch for ch in cands if weyl_length(weyl_distance_flags(bldg, c, ch)) == best]
    assert len(winners) == 1, "the projection chamber must be unique"
    return winners[0]


def standard_frame(bldg: FlagBuilding) -> Tuple[Tuple[Subspace, ...], ...]:
    out = []
    for (n, _), field in zip(bldg.factors, bldg.fields):
        lines = tuple(
            rref(field, [tuple(1 if j == i else 0 for j in range(n + 1))])
            for i in range(n + 1)
        )
        out.append(lines)
    return tuple(out)


def frame_through(bldg: FlagBuilding, c: frozenset) -> Tuple[Tuple[Subspace, ...], ...]:
    """A frame whose apartment contains the chamber: a basis adapted to it."""
    out = []
    for fi, flag in enumerate(bldg.flag_of[c]):
        field = bldg.fields[fi]
        n = bldg.factors[fi][0]
        chosen: List[Tuple[int, ...]] = []
        chain = list(flag) + [tuple(tuple(1 if i == j else 0 for j in range(n + 1)) for i in range(n + 1))]
        for step in chain:
            fresh = next(
                v for v in step if not in_row_space(field, v, chosen)
            )
            chosen.append(fresh)
        out.append(tuple(rref(field, [v]) for v in chosen))
    return tuple(out)


def _check_frame(bldg: FlagBuilding, frame) -> None:
    if len(frame) != len(bldg.factors):
        raise ValueError("frame needs one line tuple per join factor")
    for fi, lines in enumerate(frame):
        n, _ = bldg.factors[fi]
        field = bldg.fields[fi]
        if len(lines) != n + 1:
            raise ValueError("a frame consists of rank + 1 lines")
        stacked = [row for line in lines for row in line]
        if rank(field, stacked) != n + 1:
            raise ValueError("frame lines must be independent")


def frame_vertices(bldg: FlagBuilding, frame) -> List[Tuple[int, Subspace]]:
    """Vertices of the apartment: spans of proper nonempty subsets of lines."""
    _check_frame(bldg, frame)
    out = []
    for fi, lines in enumerate(frame):
        field = bldg.fields[fi]
        off = bldg.offsets[fi]
        for k in range(1, len(lines)):
            for combo in itertools.combinations(lines, k):
                span = rref(field, [row for line in combo for row in line])
                assert len(span) == k
                out.append((off + k - 1, span))
    return out


def frame_chambers(bldg: FlagBuilding, frame) -> List[frozenset]:
    """Chambers of the apartment: flags of prefix spans of line orderings."""
    _check_frame(bldg, frame)
    per_factor = []
    for fi, lines in enumerate(frame):
        field = bldg.fields[fi]
        off = bldg.offsets[fi]
        factor_cells = set()
        for order in itertools.permutations(lines):
            verts = []
            for k in range(1, len(lines)):
                span = rref(field, [row for line in order[:k] for row in line])
                verts.append((off + k - 1, span))
            factor_cells.add(tuple(verts))
        per_factor.append(sorted(factor_cells))
    return [
        frozenset(v for part in combo for v in part)
        for combo in itertools.product(*per_factor)
    ]


def retraction(bldg: FlagBuilding, frame, c: frozenset, x: frozenset) -> frozenset:
    """Retract a cell onto the frame's apartment, centered at its chamber c.

    Each vertex lands on the vertex of equal type in the apartment chamber
    with the same Weyl distance from c; every chamber containing the vertex
    must give the same answer, which pins the image uniquely.
    """
    apartment_chambers = frame_chambers(bldg, frame)
    if c not in apartment_chambers:
        raise ValueError("the center must be a chamber of the frame's apartment")
    if x not in bldg.complex.cells:
        raise ValueError("x must be a cell of the building")
    by_delta = {weyl_distance_flags(bldg, c, e): e for e in apartment_chambers}
    image = set()
    for v in sorted(x):
        hits = set()
        for d in bldg.chambers_of_vertex(v):
            e = by_delta[weyl_distance_flags(bldg, c, d)]
            hits.add(next(w for w in e if bldg.typ(w) == bldg.typ(v)))
        assert len(hits) == 1, "retraction must not depend on the chamber choice"
        image.add(hits.pop())
    out = frozenset(image)
    assert out in bldg.complex.cells
    return out


# -- hemisphere decompositions -------------------------------------------------------


@dataclass(frozen=True)
class Pole:
    """A direction in the closed model chamber of a carrier chamber.

    Coefficients are coordinates in the model apartment (one per vertex
    type); nonnegativity keeps the direction inside the carrier's closed
    cone, and the type with coefficient 1 and the rest 0 points at a vertex.
    """

    carrier: frozenset
    coefficients: Tuple[Fraction, ...]


def vertex_directions(bldg: FlagBuilding, carrier: frozenset) -> Dict[Tuple[int, Subspace], RVec]:
    """Model-apartment direction of every vertex, by retraction to the carrier.

    The direction of a type-t vertex of a chamber at Weyl distance w is the
    image of the t-th model vertex under w; agreement over all chambers
    containing the vertex is asserted.
    """
    out: Dict[Tuple[int, Subspace], RVec] = {}
    for d in bldg.chambers:
        delta = weyl_distance_flags(bldg, carrier, d)
        m = delta_matrix(bldg, delta)
        for v in d:
            t = bldg.typ(v)
            coords = tuple(m[r][t] for r in range(bldg.sys.rank))
            u = RVec(coords, bldg.sys.form)
            if v in out:
                assert out[v] == u, "vertex direction must not depend on the chamber"
            else:
                out[v] = u
    return out


def hemisphere_complexes(bldg: FlagBuilding, pole: Pole) -> Dict[str, Complex]:
    """Split the building by the angle each vertex direction makes with a pole.

    Returns full subcomplexes: closed and open far hemispheres, the equator,
    and the equator's split into the join factors the pole is perpendicular
    to (horizontal) and the rest (vertical, which includes every
    non-equatorial vertex).
    """
    if pole.carrier not in bldg.flag_of:
        raise ValueError("the pole carrier must be a chamber")
    coeffs = tuple(Fraction(c) for c in pole.coefficients)
    if len(coeffs) != bldg.sys.rank:
        raise ValueError("pole needs one coefficient per vertex type")
    if any(c < 0 for c in coeffs) or all(c == 0 for c in coeffs):
        raise ValueError("pole outside carrier: coefficients must be nonnegative, not all zero")
    pole_vec = RVec(coeffs, bldg.sys.form)

    directions = vertex_directions(bldg, pole.carrier)
    pairs = {v: sign(pole_vec.pair(u)) for v, u in directions.items()}
    closed = [v for v, s in pairs.items() if s <= 0]
    open_far = [v for v, s in pairs.items() if s < 0]
    equator = [v for v, s in pairs.items() if s == 0]

    flat_factors = []
    for fi in range(len(bldg.factors)):
        off, n = bldg.offsets[fi], bldg.factors[fi][0]
        factor_verts = [v for v in pairs if off <= bldg.typ(v) < off + n]
        if all(pairs[v] == 0 for v in factor_verts):
            flat_factors.append(fi)
    horizontal = [v for v in pairs if bldg.factor_of_type(bldg.typ(v)) in flat_factors]
    vertical = [v for v in pairs if bldg.factor_of_type(bldg.typ(v)) not in flat_factors]

    cx = bldg.complex
    return {
        "closed": full_subcomplex(cx, closed),
        "open": full_subcomplex(cx, open_far),
        "equator": full_subcomplex(cx, equator),
        "horizontal": full_subcomplex(cx, horizontal),
        "vertical": full_subcomplex(cx, vertical),
    }
