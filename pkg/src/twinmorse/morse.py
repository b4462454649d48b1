"""Secondary Morse data for perturbed codistance height functions.

The primary height of a cell is its maximal squared vertex height.  Ties
are broken first by a combinatorial depth (the longest chain of moves in
the cell game below) and then by dimension, giving the lexicographic value
attached to every cell.  This module provides the cell game (cohorizontal
faces, least cohorizontal face, up and down moves, depth), the values, and
the descending links with their sphere * vertical * horizontal splitting.

Five concrete fields are provided:

* ``ThinOnePlace``: a chamber ball in an affine Coxeter complex with the
  exact squared distance to a zonotope of difference vectors, measured
  from a base vertex.
* ``ThinTwoPlace``: pairs of vertices from two copies of such a ball; the
  height depends only on the coordinate gap and uses the sum-enlarged
  zonotope.
* ``TreeOnePlace`` / ``TreeTwoPlace``: vertices of the SL2 Laurent twin
  tree with heights cut off from the vertex codistance; star queries are
  answered by the tree itself, so links are exact.
* ``LevelField``: an affine level function on a product apartment.  It has
  no height, only the cell game, and exists to exercise the failure mode
  where a flat cell has no least cohorizontal face.

Heights, forms and zonotope data are exact rationals throughout; depths
are stored doubled so that every value is an integer.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .complexes import Complex, homology
from .coxeter import AffineBall, CoxeterSystem, affine_cartan, direct_sum, rich_set
from .qspace import BilinearForm, RVec, rat, rat_tuple
from .twintree import StdTwinApartment, TreeVertex, TwinTree
from .zonotope import Zonotope, hash_sum, project, richness

ZERO = Fraction(0)


class MovesCycleError(RuntimeError):
    """The moves digraph closed a directed cycle; the game would not end."""


class NoMinimumError(ValueError):
    """A flat cell whose cohorizontal faces have no least element."""

    def __init__(self, cell_key: str, antichain: Sequence[str]):
        self.cell_key = cell_key
        self.antichain = tuple(antichain)
        super().__init__(
            f"no least cohorizontal face under {cell_key}; "
            f"minimal faces {list(self.antichain)} are incomparable"
        )


class DecompositionError(AssertionError):
    """The descending link did not split as the predicted join."""


@dataclass(frozen=True, order=True)
class MorseValue:
    """Lexicographic cell value: squared height, doubled depth, dimension."""

    hsq: Fraction
    dp2: int
    dim: int

    @property
    def depth(self) -> Fraction:
        return Fraction(self.dp2, 2)

    def as_json(self) -> list:
        return [str(self.hsq), self.dp2, self.dim]


@dataclass(frozen=True)
class AsymptoticPole:
    """Rational direction datum, one coordinate block per product factor.

    Only the ray matters, so the coordinates are scaled jointly by a
    positive rational into coprime integers.
    """

    components: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        blocks = tuple(rat_tuple(b) for b in self.components)
        flat = [c for b in blocks for c in b]
        if all(c == 0 for c in flat):
            raise ValueError("a pole must be nonzero")
        lcm = 1
        for c in flat:
            lcm = lcm * c.denominator // gcd(lcm, c.denominator)
        ints = [c * lcm for c in flat]
        g = 0
        for c in ints:
            g = gcd(g, int(c))
        scale = Fraction(lcm, g)
        blocks = tuple(tuple(c * scale for c in b) for b in blocks)
        object.__setattr__(self, "components", blocks)

    def factorwise_nonzero(self) -> bool:
        return all(any(c != 0 for c in b) for b in self.components)


@dataclass(frozen=True)
class GradientInfo:
    """Gradient pole of a flat cell plus, where discrete, the carrying covers."""

    pole: AsymptoticPole
    carriers: tuple


@dataclass(frozen=True)
class FlatCellRecord:
    """Certificate for one flat cell of positive height."""

    cell: str
    hsq: Fraction
    pole: AsymptoticPole
    tau_min: Optional[str]
    dp2: int


# -- product factors --------------------------------------------------------------


class ApartmentFactor:
    """A chamber ball in an affine Coxeter complex, with link bookkeeping."""

    def __init__(self, ball: AffineBall):
        self.ball = ball
        self.sys = ball.sys
        self.form = ball.sys.form
        self.complex = ball.complex
        self.cells: Dict[frozenset, int] = dict(ball.complex.cells)
        self.nodes = tuple(range(self.sys.cartan.n))
        self._sub: Dict[frozenset, tuple] = {}
        self._cov: Optional[Dict[frozenset, tuple]] = None
        self._dir: Dict[Tuple[frozenset, frozenset], RVec] = {}
        self._star_count: Optional[Dict[tuple, int]] = None

    def cell_vertices(self, fc: frozenset) -> tuple:
        return tuple(sorted(fc))

    def vertex_name(self, v) -> str:
        return "(" + ",".join(str(c) for c in v) + ")"

    def cell_dim(self, fc: frozenset) -> int:
        return self.cells[fc]

    def subcells(self, fc: frozenset) -> tuple:
        """All nonempty faces including the cell itself."""
        if fc not in self._sub:
            vs = sorted(fc)
            found = []
            for k in range(1, len(vs) + 1):
                for combo in itertools.combinations(vs, k):
                    sub = frozenset(combo)
                    if sub in self.cells:
                        found.append(sub)
            self._sub[fc] = tuple(found)
        return self._sub[fc]

    def covers(self, fc: frozenset) -> tuple:
        if self._cov is None:
            index: Dict[frozenset, list] = {c: [] for c in self.cells}
            for c, d in self.cells.items():
                for s in self.subcells(c):
                    if self.cells[s] == d - 1:
                        index[s].append(c)
            self._cov = {s: tuple(sorted(cs, key=sorted)) for s, cs in index.items()}
        return self._cov[fc]

    def is_cell(self, fs: frozenset) -> bool:
        return fs in self.cells

    def star_ok(self, fc: frozenset) -> bool:
        """Whether each vertex carries its full apartment star in the ball.

        In a thin complex the star is complete exactly when the chamber
        count matches the vertex stabilizer; affine A-type components have
        symmetric-group stabilizers, so the count is a factorial.
        """
        if self._star_count is None:
            top = max(self.cells.values())
            counts: Dict[tuple, int] = {}
            for c, d in self.cells.items():
                if d == top:
                    for v in c:
                        counts[v] = counts.get(v, 0) + 1
            self._star_count = counts
        expect = 1
        for comp in self.sys.components:
            n = 1
            for k in range(2, len(comp) + 1):
                n *= k
            expect *= n
        return all(self._star_count.get(v, 0) == expect for v in fc)

    def types_of(self, fc: frozenset) -> frozenset:
        out = set()
        for v in fc:
            out.update(self.ball.typ[v])
        return frozenset(out)

    def residue_nodes(self, fc: frozenset) -> tuple:
        used = self.types_of(fc)
        return tuple(t for t in self.nodes if t not in used)

    def residue_edges(self, nodes: Sequence[int]) -> list:
        out = []
        for a, b in itertools.combinations(nodes, 2):
            m = self.sys.cartan.coxeter_m(a, b)
            if m is None or m >= 3:
                out.append((a, b))
        return out

    def cover_node(self, fc: frozenset, cov: frozenset) -> int:
        added = self.types_of(cov) - self.types_of(fc)
        assert len(added) == 1, "a cover must add exactly one vertex type"
        return next(iter(added))

    def cover_direction(self, fc: frozenset, cov: frozenset) -> RVec:
        key = (fc, cov)
        if key not in self._dir:
            added = sorted(cov - fc)
            dirs = [self.complex.direction_in_link(fc, u) for u in added]
            for d in dirs[1:]:
                assert d.coords == dirs[0].coords, (
                    "added vertices of one cover must share their link direction"
                )
            self._dir[key] = dirs[0]
        return self._dir[key]

    def irreducible_dims(self) -> tuple:
        return tuple(len(comp) - 1 for comp in self.sys.components)


class LineFactor:
    """An integer segment of the subdivided line with unit edge lengths."""

    def __init__(self, lo: int, hi: int):
        if hi - lo < 1:
            raise ValueError("a line factor needs at least one edge")
        self.lo, self.hi = lo, hi
        self.form = BilinearForm(((1,),))
        self.cells: Dict[frozenset, int] = {}
        for n in range(lo, hi + 1):
            self.cells[frozenset((n,))] = 0
        for n in range(lo, hi):
            self.cells[frozenset((n, n + 1))] = 1

    def cell_vertices(self, fc: frozenset) -> tuple:
        return tuple(sorted(fc))

    def vertex_name(self, v) -> str:
        return str(v)

    def cell_dim(self, fc: frozenset) -> int:
        return len(fc) - 1

    def subcells(self, fc: frozenset) -> tuple:
        if len(fc) == 1:
            return (fc,)
        a, b = sorted(fc)
        return (frozenset((a,)), frozenset((b,)), fc)

    def covers(self, fc: frozenset) -> tuple:
        if len(fc) != 1:
            return ()
        (n,) = fc
        out = [frozenset((n - 1, n)), frozenset((n, n + 1))]
        return tuple(e for e in out if e in self.cells)

    def is_cell(self, fs: frozenset) -> bool:
        vs = sorted(fs)
        return len(vs) == 1 or (len(vs) == 2 and vs[1] - vs[0] == 1)

    def star_ok(self, fc: frozenset) -> bool:
        return all(self.lo < n < self.hi for n in fc) or len(fc) == 2

    def residue_nodes(self, fc: frozenset) -> tuple:
        if len(fc) > 1:
            return ()
        (n,) = fc
        return ((n + 1) % 2,)

    def residue_edges(self, nodes: Sequence[int]) -> list:
        return []

    def cover_node(self, fc: frozenset, cov: frozenset) -> int:
        (n,) = fc
        return (n + 1) % 2

    def cover_direction(self, fc: frozenset, cov: frozenset) -> RVec:
        (n,) = fc
        (m,) = cov - fc
        return RVec((Fraction(m - n),), self.form)

    def irreducible_dims(self) -> tuple:
        return (1,)


class TreeFactor:
    """One half of a twin tree: vertices and chamber edges, stars exact.

    The chamber ball only selects which cells the field enumerates; cover
    and star queries go back to the tree, so they are never truncated.
    """

    def __init__(self, tree: TwinTree, side: str, radius: int):
        self.tree = tree
        self.side = side
        self.cells: Dict[frozenset, int] = {}
        for ch in tree.ball(side, radius):
            a, b = tree.chamber_vertices(ch)
            self.cells[frozenset((a,))] = 0
            self.cells[frozenset((b,))] = 0
            self.cells[frozenset((a, b))] = 1

    def vkey(self, v: TreeVertex):
        return (len(v.word), tuple((j, str(c)) for j, c in v.word), v.typ)

    def cell_vertices(self, fc: frozenset) -> tuple:
        return tuple(sorted(fc, key=self.vkey))

    def vertex_name(self, v: TreeVertex) -> str:
        word = ".".join(f"{j}:{c}" for j, c in v.word)
        return f"{v.side}t{v.typ}[{word}]"

    def cell_dim(self, fc: frozenset) -> int:
        return len(fc) - 1

    def subcells(self, fc: frozenset) -> tuple:
        if len(fc) == 1:
            return (fc,)
        a, b = self.cell_vertices(fc)
        return (frozenset((a,)), frozenset((b,)), fc)

    def star_chambers(self, v: TreeVertex) -> list:
        return self.tree.star(v)

    def neighbors(self, v: TreeVertex) -> tuple:
        out = []
        for ch in self.tree.star(v):
            a, b = self.tree.chamber_vertices(ch)
            out.append(b if a == v else a)
        return tuple(sorted(out, key=self.vkey))

    def covers(self, fc: frozenset) -> tuple:
        if len(fc) != 1:
            return ()
        (v,) = fc
        return tuple(frozenset((v, w)) for w in self.neighbors(v))

    def is_cell(self, fs: frozenset) -> bool:
        if len(fs) == 1:
            return True
        if len(fs) != 2:
            return False
        a, b = tuple(fs)
        return b in self.neighbors(a)

    def star_ok(self, fc: frozenset) -> bool:
        return True

    def residue_nodes(self, fc: frozenset) -> tuple:
        if len(fc) > 1:
            return ()
        (v,) = fc
        return (1 - v.typ,)

    def residue_edges(self, nodes: Sequence[int]) -> list:
        return []

    def cover_node(self, fc: frozenset, cov: frozenset) -> int:
        (v,) = fc
        return 1 - v.typ

    def cover_direction(self, fc: frozenset, cov: frozenset):
        raise NotImplementedError("tree links are discrete; use metric pairings")

    def irreducible_dims(self) -> tuple:
        return (1,)


# -- the shared cell game ----------------------------------------------------------


class HeightField:
    """Cell poset plus the moves game shared by every concrete field.

    Cells are tuples holding one cell per factor.  Subclasses provide the
    vertex level (squared height, or the affine level for ``LevelField``),
    the gradient pairing against covers, and midpoint heights.
    """

    mode = "one_place"
    has_height = True

    def __init__(self, factors: tuple):
        self.factors = factors
        self._cells: Optional[list] = None
        self._cofaces: Dict[tuple, tuple] = {}
        self._flat: Dict[tuple, bool] = {}
        self._roof: Dict[tuple, tuple] = {}
        self._depth: Dict[tuple, int] = {}
        self._cohor: Dict[Tuple[tuple, tuple], bool] = {}
        self._partition: Dict[tuple, tuple] = {}
        self._value: Dict[tuple, MorseValue] = {}

    # -- hooks ---------------------------------------------------------------

    def vertex_level(self, v: tuple) -> Fraction:
        raise NotImplementedError

    def grad_pairing(self, cell: tuple, cover: tuple) -> Fraction:
        raise NotImplementedError

    def gradient(self, cell: tuple) -> GradientInfo:
        raise NotImplementedError

    def midpoint_hsq(self, cell: tuple) -> Fraction:
        raise NotImplementedError

    # -- poset ---------------------------------------------------------------

    def dim(self, cell: tuple) -> int:
        return sum(self.factors[i].cell_dim(fc) for i, fc in enumerate(cell))

    def vertices_of(self, cell: tuple) -> tuple:
        lists = [self.factors[i].cell_vertices(fc) for i, fc in enumerate(cell)]
        return tuple(itertools.product(*lists))

    def faces(self, cell: tuple) -> tuple:
        """Proper faces, every mixture of factor subcells except the cell."""
        subs = [self.factors[i].subcells(fc) for i, fc in enumerate(cell)]
        out = [c for c in itertools.product(*subs) if c != cell]
        return tuple(sorted(out, key=self.cell_key))

    def covers(self, cell: tuple) -> tuple:
        out = []
        for i, fc in enumerate(cell):
            for cov in self.factors[i].covers(fc):
                out.append(cell[:i] + (cov,) + cell[i + 1 :])
        return tuple(sorted(out, key=self.cell_key))

    def cofaces(self, cell: tuple) -> tuple:
        """Proper cofaces, closed off under covers."""
        if cell not in self._cofaces:
            seen = set()
            frontier = [cell]
            while frontier:
                nxt = []
                for c in frontier:
                    for cov in self.covers(c):
                        if cov not in seen:
                            seen.add(cov)
                            nxt.append(cov)
                frontier = nxt
            self._cofaces[cell] = tuple(sorted(seen, key=self.cell_key))
        return self._cofaces[cell]

    def contains(self, big: tuple, small: tuple) -> bool:
        return all(s <= b for s, b in zip(small, big))

    def extending_factor(self, cell: tuple, cover: tuple) -> int:
        for i, (a, b) in enumerate(zip(cell, cover)):
            if a != b:
                return i
        raise ValueError("cover equals the cell")

    def cell_key(self, cell: tuple) -> str:
        parts = []
        for i, fc in enumerate(cell):
            f = self.factors[i]
            parts.append("|".join(f.vertex_name(v) for v in f.cell_vertices(fc)))
        return ";".join(parts)

    def cells(self) -> list:
        if self._cells is None:
            pools = [list(f.cells) for f in self.factors]
            out = [tuple(combo) for combo in itertools.product(*pools)]
            out.sort(key=lambda c: (self.dim(c), self.cell_key(c)))
            self._cells = out
        return self._cells

    def cells_of_dim(self, k: int) -> list:
        return [c for c in self.cells() if self.dim(c) == k]

    def star_ok(self, cell: tuple) -> bool:
        return all(self.factors[i].star_ok(fc) for i, fc in enumerate(cell))

    def dim_total(self) -> int:
        return sum(sum(f.irreducible_dims()) for f in self.factors)

    # -- heights and flatness --------------------------------------------------

    def cell_hsq(self, cell: tuple) -> Fraction:
        if not self.has_height:
            raise ValueError("this field has no height, only the cell game")
        return max(self.vertex_level(v) for v in self.vertices_of(cell))

    def is_flat(self, cell: tuple) -> bool:
        if cell not in self._flat:
            levels = {self.vertex_level(v) for v in self.vertices_of(cell)}
            self._flat[cell] = len(levels) == 1
        return self._flat[cell]

    def cell_positive(self, cell: tuple) -> bool:
        if not self.has_height:
            return True
        return self.cell_hsq(cell) > 0

    def roof(self, cell: tuple) -> tuple:
        """The face spanned by the vertices of maximal height."""
        if not self.has_height:
            raise ValueError("this field has no height, only the cell game")
        if cell not in self._roof:
            verts = self.vertices_of(cell)
            top = max(self.vertex_level(v) for v in verts)
            arg = [v for v in verts if self.vertex_level(v) == top]
            pieces = []
            for i in range(len(self.factors)):
                pieces.append(frozenset(v[i] for v in arg))
            expect = set(itertools.product(*[sorted(p, key=repr) for p in pieces]))
            assert expect == {tuple(v) for v in arg}, (
                "the maximal vertices must span a product face"
            )
            out = tuple(pieces)
            for i, fs in enumerate(out):
                assert self.factors[i].is_cell(fs), "the maximal set must be a face"
            self._roof[cell] = out
        return self._roof[cell]

    # -- link structure ----------------------------------------------------------

    def cover_metric_pairing(self, cell: tuple, c1: tuple, c2: tuple) -> Fraction:
        i1 = self.extending_factor(cell, c1)
        i2 = self.extending_factor(cell, c2)
        if i1 != i2:
            return ZERO
        f = self.factors[i1]
        if isinstance(f, TreeFactor):
            return Fraction(1) if c1 == c2 else Fraction(-1)
        d1 = f.cover_direction(cell[i1], c1[i1])
        d2 = f.cover_direction(cell[i2], c2[i2])
        return d1.pair(d2)

    def link_partition(self, cell: tuple) -> tuple:
        """Join factors of the link as cover classes.

        The classes come from the residue diagram (vertex types left over
        after removing the cell's types, joined where the Coxeter order
        exceeds 2) and are cross-checked against exact perpendicularity of
        link directions; disagreement is a hard failure.
        """
        if cell in self._partition:
            return self._partition[cell]
        covers = self.covers(cell)

        parent: Dict[tuple, tuple] = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        nodes = []
        for i, f in enumerate(self.factors):
            for t in f.residue_nodes(cell[i]):
                nodes.append((i, t))
        for n in nodes:
            parent[n] = n
        for i, f in enumerate(self.factors):
            for a, b in f.residue_edges(f.residue_nodes(cell[i])):
                union((i, a), (i, b))
        by_node: Dict[tuple, list] = {}
        for cov in covers:
            i = self.extending_factor(cell, cov)
            node = (i, self.factors[i].cover_node(cell[i], cov[i]))
            by_node.setdefault(find(node), []).append(cov)
        diagram = {frozenset(group) for group in by_node.values()}

        mparent = {cov: cov for cov in covers}

        def mfind(x):
            while mparent[x] != x:
                mparent[x] = mparent[mparent[x]]
                x = mparent[x]
            return x

        for c1, c2 in itertools.combinations(covers, 2):
            if self.cover_metric_pairing(cell, c1, c2) != 0:
                r1, r2 = mfind(c1), mfind(c2)
                if r1 != r2:
                    mparent[r1] = r2
        metric_groups: Dict[tuple, list] = {}
        for cov in covers:
            metric_groups.setdefault(mfind(cov), []).append(cov)
        metric = {frozenset(group) for group in metric_groups.values()}
        if diagram != metric:
            raise DecompositionError(
                "residue components and perpendicularity classes disagree at "
                + self.cell_key(cell)
            )
        self._partition[cell] = tuple(
            tuple(sorted(g, key=self.cell_key)) for g in sorted(diagram, key=lambda g: min(map(self.cell_key, g)))
        )
        return self._partition[cell]

    def horizontal_covers(self, cell: tuple) -> frozenset:
        """Covers lying in link factors on which the gradient pairing vanishes."""
        out = []
        for group in self.link_partition(cell):
            if all(self.grad_pairing(cell, cov) == 0 for cov in group):
                out.extend(group)
        return frozenset(out)

    # -- the moves game ------------------------------------------------------------

    def _require_game(self, cell: tuple):
        if not self.is_flat(cell):
            raise ValueError(f"cell {self.cell_key(cell)} is not flat")
        if self.has_height and self.cell_hsq(cell) == 0:
            raise ValueError("cells at height zero form the ground floor; no game there")

    def cohorizontal(self, tau: tuple, sigma: tuple) -> bool:
        """Does every link vertex of tau over sigma sit in a horizontal factor?"""
        if not self.contains(tau, sigma):
            raise ValueError("cohorizontality compares a cell with its face")
        self._require_game(tau)
        self._require_game(sigma)
        if tau == sigma:
            return True
        key = (tau, sigma)
        if key not in self._cohor:
            hor = self.horizontal_covers(sigma)
            below = [c for c in self.covers(sigma) if self.contains(tau, c)]
            self._cohor[key] = all(c in hor for c in below)
        return self._cohor[key]

    def cohorizontal_faces(self, tau: tuple) -> list:
        self._require_game(tau)
        out = [f for f in self.faces(tau) if self.cohorizontal(tau, f)]
        out.append(tau)
        return out

    def tau_min(self, tau: tuple) -> tuple:
        """The least cohorizontal face, with the interval property asserted."""
        S = self.cohorizontal_faces(tau)
        members = set(S)
        minimal = [
            s for s in S if not any(t != s and self.contains(s, t) for t in S)
        ]
        if len(minimal) != 1:
            raise NoMinimumError(
                self.cell_key(tau), sorted(self.cell_key(m) for m in minimal)
            )
        m = minimal[0]
        between = [f for f in self.faces(tau) if self.contains(f, m)]
        for f in between:
            assert f in members, (
                "every face between the least cohorizontal face and the cell "
                "must itself be cohorizontal"
            )
        return m

    def moves_from(self, cell: tuple) -> Tuple[tuple, tuple]:
        """Up moves (flat cofaces whose least cohorizontal face is the cell)
        and down moves (proper faces that are not cohorizontal)."""
        self._require_game(cell)
        downs = tuple(
            f for f in self.faces(cell) if not self.cohorizontal(cell, f)
        )
        ups = []
        for t in self.cofaces(cell):
            if not self.is_flat(t):
                continue
            if not self.cohorizontal(t, cell):
                continue
            if all(
                self.contains(f, cell)
                for f in self.cohorizontal_faces(t)
            ) and t != cell:
                ups.append(t)
        return tuple(ups), downs

    def depth_bound(self) -> int:
        prod = 1
        for f in self.factors:
            for d in f.irreducible_dims():
                prod *= 2 ** (d + 1) - 1
        return (self.dim_total() + 1) * prod

    def depth(self, cell: tuple) -> int:
        """Longest chain of moves below the cell; height-zero cells sit at 0."""
        if not self.is_flat(cell):
            raise ValueError("depth is defined for flat cells")
        if self.has_height and self.cell_hsq(cell) == 0:
            return 0
        return self._depth_rec(cell, ())

    def _depth_rec(self, cell: tuple, stack: tuple) -> int:
        if cell in self._depth:
            return self._depth[cell]
        if cell in stack:
            raise MovesCycleError(
                "moves closed a cycle through " + self.cell_key(cell)
            )
        ups, downs = self.moves_from(cell)
        stack = stack + (cell,)
        best = 0
        for nxt in ups + downs:
            best = max(best, 1 + self._depth_rec(nxt, stack))
        bound = self.depth_bound()
        assert best <= bound, f"depth {best} exceeds the bound {bound}"
        self._depth[cell] = best
        return best

    # -- values ---------------------------------------------------------------

    def morse_value(self, cell: tuple) -> MorseValue:
        if cell not in self._value:
            hsq = self.cell_hsq(cell)
            if self.is_flat(cell):
                dp2 = 0 if hsq == 0 else 2 * self.depth(cell)
            else:
                dp2 = 2 * self.depth(self.roof(cell)) - 1
            self._value[cell] = MorseValue(hsq, dp2, self.dim(cell))
        return self._value[cell]

    def significant(self, cell: tuple) -> bool:
        """Flat, of positive height, and its own least cohorizontal face."""
        if not self.is_flat(cell) or not self.cell_positive(cell):
            return False
        if self.has_height and self.cell_hsq(cell) == 0:
            return False
        try:
            return self.tau_min(cell) == cell
        except NoMinimumError:
            return False

    def flat_record(self, cell: tuple) -> FlatCellRecord:
        self._require_game(cell)
        grad = self.gradient(cell)
        for v, w in itertools.combinations(self.vertices_of(cell), 2):
            assert self._vertex_separation_pairing(cell, v, w) == 0, (
                "the gradient must be perpendicular to the cell"
            )
        try:
            m = self.tau_min(cell)
            mkey: Optional[str] = self.cell_key(m)
            assert self.contains(cell, m)
        except NoMinimumError:
            mkey = None
        dp2 = 2 * self.depth(cell)
        assert dp2 >= 0
        return FlatCellRecord(self.cell_key(cell), self.cell_hsq(cell) if self.has_height else ZERO, grad.pole, mkey, dp2)

    def _vertex_separation_pairing(self, cell: tuple, v: tuple, w: tuple) -> Fraction:
        raise NotImplementedError

    # -- descending links -------------------------------------------------------

    def comparables(self, cell: tuple) -> tuple:
        return tuple(self.faces(cell)) + tuple(self.cofaces(cell))

    def descending_link(self, cell: tuple) -> "DescendingLink":
        val = self.morse_value(cell)
        dfaces = tuple(
            f for f in self.faces(cell) if self.morse_value(f) < val
        )
        dcofs = tuple(
            t for t in self.cofaces(cell) if self.morse_value(t) < val
        )
        cx = self.chain_complex(dfaces + dcofs)
        return DescendingLink(self.cell_key(cell), val, cx, dfaces, dcofs)

    def chain_complex(self, members: Sequence[tuple]) -> Complex:
        """Order complex of a family of cells: one vertex per barycenter."""
        elems = sorted(set(members), key=lambda c: (self.dim(c), self.cell_key(c)))
        bid = [("b", self.cell_key(c)) for c in elems]
        n = len(elems)
        if n == 0:
            return Complex.empty()
        less = [
            [i != j and self.contains(elems[j], elems[i]) for j in range(n)]
            for i in range(n)
        ]
        cells: Dict[frozenset, int] = {}

        def grow(chain: list):
            cells[frozenset(bid[i] for i in chain)] = len(chain) - 1
            for j in range(chain[-1] + 1, n):
                if less[chain[-1]][j]:
                    grow(chain + [j])

        for i in range(n):
            grow([i])
        return Complex(cells)

    def _covers_below(self, cell: tuple, t: tuple) -> frozenset:
        return frozenset(c for c in self.covers(cell) if self.contains(t, c))

    def _join_with_covers(self, cell: tuple, covs: Sequence[tuple]) -> tuple:
        pieces = list(cell)
        for cov in covs:
            i = self.extending_factor(cell, cov)
            pieces[i] = pieces[i] | cov[i]
        out = tuple(frozenset(p) for p in pieces)
        for i, fs in enumerate(out):
            if not self.factors[i].is_cell(fs):
                raise DecompositionError(
                    "expected join cell is missing at " + self.cell_key(cell)
                )
        return out

    def decompose_descending(self, cell: tuple) -> "Decomposition":
        """Split the descending link of a significant cell and verify it.

        The three parts are the boundary sphere of the cell, the open
        vertical hemisphere of the link (covers pairing strictly negative
        against the gradient), and the descending horizontal link.  Every
        claim is checked cell by cell; failure raises DecompositionError.
        """
        if not self.significant(cell):
            raise ValueError("only significant cells decompose")
        if not self.star_ok(cell):
            raise ValueError("the decomposition needs a complete star")
        dl = self.descending_link(cell)
        val = dl.value

        faces = self.faces(cell)
        for f in faces:
            if not self.morse_value(f) < val:
                raise DecompositionError(
                    "a proper face of a significant cell failed to descend"
                )
        face_sphere = self.chain_complex(faces)
        d = self.dim(cell)
        _assert_sphere(face_sphere, d - 1)

        covers = self.covers(cell)
        hor = self.horizontal_covers(cell)
        vert = frozenset(
            c
            for c in covers
            if c not in hor and self.grad_pairing(cell, c) < 0
        )

        dcof = set(dl.coface_cells)
        for t in dcof:
            for f in self.faces(t):
                if self.contains(f, cell) and f != cell and f not in dcof:
                    raise DecompositionError(
                        "the descending coface part is not a subcomplex"
                    )

        vertical_cells: Dict[frozenset, int] = {}
        horizontal_cells: Dict[frozenset, int] = {}
        vcofaces = []
        hcofaces = []
        for t in self.cofaces(cell):
            cb = self._covers_below(cell, t)
            if not cb:
                continue
            if cb <= vert:
                if t not in dcof:
                    raise DecompositionError(
                        "a coface inside the open vertical hemisphere must descend"
                    )
                vertical_cells[cb] = len(cb) - 1
                vcofaces.append(t)
            if cb <= hor:
                flat = self.is_flat(t)
                descending = t in dcof
                bounded = self.cell_hsq(t) <= self.cell_hsq(cell)
                if not (flat == descending == bounded):
                    raise DecompositionError(
                        "horizontal trichotomy failed at " + self.cell_key(t)
                    )
                if descending:
                    horizontal_cells[cb] = len(cb) - 1
                    hcofaces.append(t)

        for t in dcof:
            cb = self._covers_below(cell, t)
            cv = frozenset(c for c in cb if c in vert)
            ch = frozenset(c for c in cb if c in hor)
            if cv | ch != cb:
                raise DecompositionError(
                    "a descending coface used a non-vertical, non-horizontal "
                    "link direction at " + self.cell_key(t)
                )
            if cv and cv not in vertical_cells:
                raise DecompositionError("vertical part of a coface is missing")
            if ch and ch not in horizontal_cells:
                raise DecompositionError("horizontal part of a coface is missing")

        for cv in [frozenset()] + list(vertical_cells):
            for ch in [frozenset()] + list(horizontal_cells):
                if not cv and not ch:
                    continue
                t = self._join_with_covers(cell, tuple(cv | ch))
                if t not in dcof:
                    raise DecompositionError(
                        "a join of vertical and horizontal cells must descend"
                    )

        vertical = _cover_complex(self, cell, vertical_cells)
        horizontal = _cover_complex(self, cell, horizontal_cells)
        return Decomposition(
            self.cell_key(cell),
            face_sphere,
            vertical,
            horizontal,
            tuple(sorted(vert, key=self.cell_key)),
            tuple(sorted(hor, key=self.cell_key)),
            dl,
        )

    def descending_report(self, cell: tuple) -> dict:
        """JSON-ready summary of one descending link."""
        val = self.morse_value(cell)
        sig = self.significant(cell)
        dl = self.descending_link(cell)
        out = {
            "cell": self.cell_key(cell),
            "mode": self.mode,
            "significant": sig,
            "morse_value": val.as_json(),
            "homology": [[k, r, list(t)] for k, r, t in homology(dl.complex)],
        }
        if sig:
            dec = self.decompose_descending(cell)
            out["parts"] = {
                "face": _part_summary(dec.face_sphere),
                "vertical": _part_summary(dec.vertical),
                "horizontal": _part_summary(dec.horizontal),
            }
        else:
            out["parts"] = {
                "face": _part_summary(self.chain_complex(dl.face_cells)),
                "vertical": None,
                "horizontal": None,
            }
        return out

    # -- convenience for suites ----------------------------------------------------

    def edge_cells(self) -> list:
        return self.cells_of_dim(1)

    def adjacent_vertex_pairs(self) -> list:
        out = []
        for e in self.edge_cells():
            v, w = self.vertices_of(e)
            out.append((v, w, e))
        return out


def _part_summary(cx: Complex) -> dict:
    return {
        "f_vector": list(cx.f_vector()) if cx.cells else [],
        "homology": [[k, r, list(t)] for k, r, t in homology(cx)],
    }


def _assert_sphere(cx: Complex, degree: int):
    for k, r, tors in homology(cx):
        want = 1 if k == degree else 0
        if r != want or tors:
            raise DecompositionError(
                f"the face part is not a {degree}-sphere: homology {homology(cx)}"
            )


def _cover_complex(field: HeightField, cell: tuple, cells: Dict[frozenset, int]) -> Complex:
    """Subcomplex of the link spanned by cover sets, with covers as vertices."""
    if not cells:
        return Complex.empty()
    named = {
        frozenset(field.cell_key(c) for c in fs): d for fs, d in cells.items()
    }
    return Complex(named)


@dataclass(frozen=True)
class DescendingLink:
    cell: str
    value: MorseValue
    complex: Complex
    face_cells: tuple
    coface_cells: tuple


@dataclass(frozen=True)
class Decomposition:
    cell: str
    face_sphere: Complex
    vertical: Complex
    horizontal: Complex
    vertical_covers: tuple
    horizontal_covers: tuple
    link: DescendingLink


# -- concrete fields -------------------------------------------------------------


def _line_zonotope(D: Sequence[int]) -> Zonotope:
    form = BilinearForm(((1,),))
    gens = []
    for d in sorted(set(abs(int(x)) for x in D) - {0}):
        gens.append(RVec((Fraction(d),), form))
        gens.append(RVec((Fraction(-d),), form))
    return Zonotope(gens)


class ThinOnePlace(HeightField):
    """Zonotope distance height on one affine chamber ball.

    ``system`` may be "A2" (the hexagonal apartment, Cartan normalization)
    or "line" (the subdivided line with unit edges).  D defaults to the
    difference set certified at the stated level on a radius-4 ball.
    """

    mode = "one_place"

    def __init__(self, system="A2", radius=4, level="almost", D=None, base=None):
        if system == "line":
            half = max(abs(int(x)) for x in (D or (1, 2))) * 3 + radius
            factor: object = LineFactor(-half, half)
            form = factor.form
            self.Z = _line_zonotope(D or (1, 2))
            self.level = level
        else:
            sys = CoxeterSystem(affine_cartan(system))
            ball = AffineBall(sys, radius)
            factor = ApartmentFactor(ball)
            form = sys.form
            if D is None:
                D = rich_set(AffineBall(sys, 4), level)
            gens = [RVec(c, form) for c in sorted(D)]
            ok, bad = richness(gens, ball, level)
            if not ok:
                raise ValueError(f"difference set misses required vector {bad}")
            self.Z = Zonotope(gens)
            self.level = level
        super().__init__((factor,))
        self.form = form
        n = form.dim
        self.base = RVec(tuple(Fraction(0) for _ in range(n)) if base is None else base, form)
        self._hmemo: Dict[tuple, Tuple[Fraction, Optional[RVec]]] = {}

    def _point(self, v) -> RVec:
        coords = v if isinstance(v, tuple) else (v,)
        return RVec(tuple(Fraction(c) for c in coords), self.form)

    def _height_data(self, v: tuple) -> Tuple[Fraction, Optional[RVec]]:
        key = v
        if key not in self._hmemo:
            x = self._point(v[0]) - self.base
            pr = project(x, self.Z)
            normal = None if pr.sq_dist == 0 else x - pr.point
            self._hmemo[key] = (pr.sq_dist, normal)
        return self._hmemo[key]

    def vertex_level(self, v: tuple) -> Fraction:
        return self._height_data(v)[0]

    def point_hsq(self, coords) -> Fraction:
        x = self._point(coords) - self.base
        return project(x, self.Z).sq_dist

    def _cell_normal(self, cell: tuple) -> RVec:
        self._require_game(cell)
        normals = [self._height_data(v)[1] for v in self.vertices_of(cell)]
        for nv in normals[1:]:
            assert nv.coords == normals[0].coords, (
                "flat cells must project along a single normal"
            )
        return normals[0]

    def grad_pairing(self, cell: tuple, cover: tuple) -> Fraction:
        n = self._cell_normal(cell)
        d = self.factors[0].cover_direction(cell[0], cover[0])
        return n.pair(d)

    def gradient(self, cell: tuple) -> GradientInfo:
        n = self._cell_normal(cell)
        return GradientInfo(AsymptoticPole((n.coords,)), (None,))

    def _vertex_separation_pairing(self, cell, v, w) -> Fraction:
        n = self._cell_normal(cell)
        return n.pair(self._point(v[0]) - self._point(w[0]))

    def midpoint_hsq(self, cell: tuple) -> Fraction:
        (v, w) = self.vertices_of(cell)
        a, b = self._point(v[0]), self._point(w[0])
        mid = RVec(tuple((p + q) / 2 for p, q in zip(a.coords, b.coords)), self.form)
        return project(mid - self.base, self.Z).sq_dist


class ThinTwoPlace(HeightField):
    """Pair height on two copies of an affine chamber ball.

    The height of a vertex pair depends only on the coordinate gap and is
    the exact squared distance to the zonotope of the sum-enlarged
    difference set.
    """

    mode = "two_place"

    def __init__(self, system="A2", radius=3, level="almost", D=None):
        if system == "line":
            half = max(abs(int(x)) for x in (D or (1, 2))) * 6 + radius
            factor: object = LineFactor(-half, half)
            form = factor.form
            base_gens = _line_zonotope(D or (1, 2)).generators
        else:
            sys = CoxeterSystem(affine_cartan(system))
            ball = AffineBall(sys, radius)
            factor = ApartmentFactor(ball)
            form = sys.form
            if D is None:
                D = rich_set(AffineBall(sys, 4), level)
            base_gens = tuple(RVec(c, form) for c in sorted(D))
            ok, bad = richness(base_gens, ball, level)
            if not ok:
                raise ValueError(f"difference set misses required vector {bad}")
        super().__init__((factor, factor))
        self.form = form
        self.D = base_gens
        self.Z = Zonotope(hash_sum(base_gens, base_gens))
        self._pimemo: Dict[tuple, Tuple[Fraction, Optional[RVec]]] = {}

    def _point(self, u) -> RVec:
        coords = u if isinstance(u, tuple) else (u,)
        return RVec(tuple(Fraction(c) for c in coords), self.form)

    def _gap(self, v: tuple) -> RVec:
        return self._point(v[0]) - self._point(v[1])

    def _height_data(self, v: tuple) -> Tuple[Fraction, Optional[RVec]]:
        pi = self._gap(v).coords
        if pi not in self._pimemo:
            x = RVec(pi, self.form)
            pr = project(x, self.Z)
            normal = None if pr.sq_dist == 0 else x - pr.point
            self._pimemo[pi] = (pr.sq_dist, normal)
        return self._pimemo[pi]

    def vertex_level(self, v: tuple) -> Fraction:
        return self._height_data(v)[0]

    def pair_hsq(self, a, b) -> Fraction:
        return self._height_data((a, b))[0]

    def _cell_normal(self, cell: tuple) -> RVec:
        self._require_game(cell)
        normals = [self._height_data(v)[1] for v in self.vertices_of(cell)]
        for nv in normals[1:]:
            assert nv.coords == normals[0].coords, (
                "flat cells must project along a single normal"
            )
        return normals[0]

    def grad_pairing(self, cell: tuple, cover: tuple) -> Fraction:
        n = self._cell_normal(cell)
        i = self.extending_factor(cell, cover)
        d = self.factors[i].cover_direction(cell[i], cover[i])
        p = n.pair(d)
        return p if i == 0 else -p

    def gradient(self, cell: tuple) -> GradientInfo:
        n = self._cell_normal(cell)
        pole = AsymptoticPole((n.coords, tuple(-c for c in n.coords)))
        assert pole.factorwise_nonzero(), "pair gradients mix both factors"
        return GradientInfo(pole, (None, None))

    def _vertex_separation_pairing(self, cell, v, w) -> Fraction:
        n = self._cell_normal(cell)
        return n.pair(self._gap(v) - self._gap(w))

    def midpoint_hsq(self, cell: tuple) -> Fraction:
        (v, w) = self.vertices_of(cell)
        a, b = self._gap(v), self._gap(w)
        mid = RVec(tuple((p + q) / 2 for p, q in zip(a.coords, b.coords)), self.form)
        return project(mid, self.Z).sq_dist


def _tree_cutoff(D: Sequence[int], two_place: bool) -> int:
    base = sorted(set(abs(int(x)) for x in D) - {0})
    if not base or base[0] != 1:
        raise ValueError("tree difference sets must contain the unit step")
    if two_place:
        sums = {a + b for a in base for b in base}
        base = sorted(set(base) | sums)
    return sum(base)


class TreeOnePlace(HeightField):
    """Cutoff codistance height on the positive half of the twin tree.

    The height of a vertex is max(0, codistance - M) where M is the sum of
    the positive difference steps; the default D = {1, 2} covers every
    difference of vertices with a common neighbor on the tree.
    """

    mode = "one_place"

    def __init__(self, q=2, radius=5, D=(1, 2)):
        self.tree = TwinTree(q)
        self.q = q
        factor = TreeFactor(self.tree, "+", radius)
        super().__init__((factor,))
        self.cutoff = _tree_cutoff(D, two_place=False)
        self.apartment = StdTwinApartment(self.tree)
        self.base = self.apartment.vertex("-", 0)
        self._vcd: Dict[TreeVertex, int] = {}
        self._raise: Dict[TreeVertex, TreeVertex] = {}

    def vcd(self, v: TreeVertex) -> int:
        if v not in self._vcd:
            self._vcd[v] = self.tree.vertex_codistance(v, self.base)
        return self._vcd[v]

    def vertex_level(self, v: tuple) -> Fraction:
        h = max(0, self.vcd(v[0]) - self.cutoff)
        return Fraction(h * h)

    def raising_neighbor(self, v: TreeVertex) -> TreeVertex:
        """The unique neighbor of strictly larger codistance, cross-checked
        against the chamber projections from the base star."""
        if v not in self._raise:
            n = self.vcd(v)
            ups = []
            for w in self.factors[0].neighbors(v):
                m = self.vcd(w)
                if m == n + 1:
                    ups.append(w)
                else:
                    assert m == n - 1, "neighbors change the codistance by one"
            assert len(ups) == 1, "the raising neighbor must be unique"
            winner = ups[0]
            projected = set()
            for d in self.tree.star(self.base):
                ch = self.tree.pr_panel(v, d)
                a, b = self.tree.chamber_vertices(ch)
                projected.add(b if a == v else a)
            assert projected == {winner}, (
                "the raising neighbor must match the panel projection"
            )
            self._raise[v] = winner
        return self._raise[v]

    def grad_pairing(self, cell: tuple, cover: tuple) -> Fraction:
        self._require_game(cell)
        assert self.dim(cell) == 0, "flat cells of positive height here are vertices"
        (v,) = cell[0]
        far = next(iter(cover[0] - cell[0]))
        return Fraction(1) if far == self.raising_neighbor(v) else Fraction(-1)

    def gradient(self, cell: tuple) -> GradientInfo:
        self._require_game(cell)
        (v,) = cell[0]
        w = self.raising_neighbor(v)
        carrier = (frozenset((v, w)),)
        return GradientInfo(AsymptoticPole(((Fraction(1),),)), carrier)

    def _vertex_separation_pairing(self, cell, v, w) -> Fraction:
        return ZERO if v == w else Fraction(1)

    def midpoint_hsq(self, cell: tuple) -> Fraction:
        (v, w) = self.vertices_of(cell)
        mid = Fraction(self.vcd(v[0]) + self.vcd(w[0]), 2)
        h = max(ZERO, mid - self.cutoff)
        return h * h


class TreeTwoPlace(HeightField):
    """Cutoff codistance height on vertex pairs across the twin tree."""

    mode = "two_place"

    def __init__(self, q=2, radius=3, D=(1,)):
        self.tree = TwinTree(q)
        self.q = q
        factors = (
            TreeFactor(self.tree, "+", radius),
            TreeFactor(self.tree, "-", radius),
        )
        super().__init__(factors)
        self.cutoff = _tree_cutoff(D, two_place=True)
        self._vcd: Dict[tuple, int] = {}
        self._raise: Dict[tuple, TreeVertex] = {}

    def vcd(self, vp: TreeVertex, vm: TreeVertex) -> int:
        key = (vp, vm)
        if key not in self._vcd:
            self._vcd[key] = self.tree.vertex_codistance(vp, vm)
        return self._vcd[key]

    def vertex_level(self, v: tuple) -> Fraction:
        h = max(0, self.vcd(v[0], v[1]) - self.cutoff)
        return Fraction(h * h)

    def raising_neighbor(self, v: tuple, i: int) -> TreeVertex:
        key = (v, i)
        if key not in self._raise:
            n = self.vcd(v[0], v[1])
            ups = []
            for w in self.factors[i].neighbors(v[i]):
                pair = (w, v[1]) if i == 0 else (v[0], w)
                m = self.vcd(*pair)
                if m == n + 1:
                    ups.append(w)
                else:
                    assert m == n - 1, "neighbors change the codistance by one"
            assert len(ups) == 1, "the raising neighbor must be unique per factor"
            self._raise[key] = ups[0]
        return self._raise[key]

    def grad_pairing(self, cell: tuple, cover: tuple) -> Fraction:
        self._require_game(cell)
        assert self.dim(cell) == 0, "flat cells of positive height here are vertices"
        v = self.vertices_of(cell)[0]
        i = self.extending_factor(cell, cover)
        far = next(iter(cover[i] - cell[i]))
        return Fraction(1) if far == self.raising_neighbor(v, i) else Fraction(-1)

    def gradient(self, cell: tuple) -> GradientInfo:
        self._require_game(cell)
        v = self.vertices_of(cell)[0]
        wp = self.raising_neighbor(v, 0)
        wm = self.raising_neighbor(v, 1)
        pole = AsymptoticPole(((Fraction(1),), (Fraction(1),)))
        assert pole.factorwise_nonzero()
        return GradientInfo(pole, (frozenset((v[0], wp)), frozenset((v[1], wm))))

    def _vertex_separation_pairing(self, cell, v, w) -> Fraction:
        return ZERO if v == w else Fraction(1)

    def midpoint_hsq(self, cell: tuple) -> Fraction:
        (v, w) = self.vertices_of(cell)
        mid = Fraction(self.vcd(v[0], v[1]) + self.vcd(w[0], w[1]), 2)
        h = max(ZERO, mid - self.cutoff)
        return h * h


class LevelField(HeightField):
    """Affine level function on a product apartment; the cell game only.

    Flatness means the level is constant on the cell.  There is no height,
    no roof and no Morse value; the field exists to drive the cohorizontal
    machinery where the pole vanishes on a factor, including the flat cell
    whose cohorizontal faces have no least element.
    """

    mode = "one_place"
    has_height = False

    def __init__(self, names=("A1", "A2"), radius=3, pole=((0,), (1, -2))):
        sys = CoxeterSystem(direct_sum(*(affine_cartan(n) for n in names)))
        ball = AffineBall(sys, radius)
        factor = ApartmentFactor(ball)
        super().__init__((factor,))
        self.form = sys.form
        coords = tuple(Fraction(c) for blk in pole for c in blk)
        if len(coords) != self.form.dim:
            raise ValueError("pole blocks must match the diagram components")
        self.pole_vec = RVec(coords, self.form)
        self.pole = AsymptoticPole(tuple(tuple(Fraction(c) for c in blk) for blk in pole))

    def vertex_level(self, v: tuple) -> Fraction:
        return self.pole_vec.pair(RVec(tuple(Fraction(c) for c in v[0]), self.form))

    def grad_pairing(self, cell: tuple, cover: tuple) -> Fraction:
        d = self.factors[0].cover_direction(cell[0], cover[0])
        return self.pole_vec.pair(d)

    def gradient(self, cell: tuple) -> GradientInfo:
        self._require_game(cell)
        return GradientInfo(self.pole, (None,))

    def _vertex_separation_pairing(self, cell, v, w) -> Fraction:
        a = RVec(tuple(Fraction(c) for c in v[0]), self.form)
        b = RVec(tuple(Fraction(c) for c in w[0]), self.form)
        return self.pole_vec.pair(a - b)
