"""Finite and affine Coxeter systems in exact coweight coordinates.

A point is stored by the values the simple-root functionals take on it, so
the closed dominant chamber is simply the nonnegative orthant.  In these
coordinates simple roots are columns of the Cartan matrix, all reflections
act by integer affine maps, and the Weyl-invariant inner product has the
rational Gram matrix D A^{-1} (Cartan matrix A, symmetrizer D).  Affine
systems additionally carry, per diagram component, one distinguished node
whose wall is the highest-root hyperplane at level one; by convention that
node is the last one of its component.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .complexes import Complex
from .qspace import AffineFlat, BilinearForm, RVec, det, rat_tuple, sign, solve_exact

Matrix = Tuple[Tuple[Fraction, ...], ...]


def mat_vec(m: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    return tuple(sum(a * b for a, b in zip(row, v)) for row in m)


def vec_mat(v: Sequence[Fraction], m: Sequence[Sequence[Fraction]]) -> Tuple[Fraction, ...]:
    return tuple(sum(v[i] * m[i][j] for i in range(len(v))) for j in range(len(m[0])))


def mat_mul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Matrix:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0])))
        for i in range(len(a))
    )


def mat_inv(m: Sequence[Sequence[Fraction]]) -> Matrix:
    n = len(m)
    cols = []
    for j in range(n):
        col = solve_exact(m, [Fraction(1 if i == j else 0) for i in range(n)])
        if col is None:
            raise ValueError("matrix is singular")
        cols.append(col)
    return tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))


def identity_matrix(n: int) -> Matrix:
    return tuple(tuple(Fraction(1 if i == j else 0) for j in range(n)) for i in range(n))


def _positive_definite(sym: Sequence[Sequence[Fraction]]) -> bool:
    for k in range(1, len(sym) + 1):
        if det([row[:k] for row in sym[:k]]) <= 0:
            return False
    return True


class CartanData:
    """A generalized Cartan matrix with its symmetrizer and diagram structure."""

    def __init__(self, rows):
        m = []
        for row in rows:
            r = []
            for x in row:
                if isinstance(x, bool) or not isinstance(x, int):
                    raise TypeError(f"Cartan entries must be plain integers, got {x!r}")
                r.append(x)
            m.append(tuple(r))
        self.matrix: Tuple[Tuple[int, ...], ...] = tuple(m)
        n = len(self.matrix)
        if n == 0 or any(len(r) != n for r in self.matrix):
            raise ValueError("Cartan matrix must be square and nonempty")
        for i in range(n):
            if self.matrix[i][i] != 2:
                raise ValueError("diagonal Cartan entries must equal 2")
            for j in range(n):
                if i == j:
                    continue
                if self.matrix[i][j] > 0:
                    raise ValueError("off-diagonal Cartan entries must be nonpositive")
                if (self.matrix[i][j] == 0) != (self.matrix[j][i] == 0):
                    raise ValueError("Cartan zero pattern must be symmetric")
        self.n = n
        self.components = self._components()
        self.symmetrizer = self._symmetrizer()

    def _components(self) -> Tuple[Tuple[int, ...], ...]:
        comps = []
        seen = set()
        for start in range(self.n):
            if start in seen:
                continue
            comp = {start}
            frontier = [start]
            while frontier:
                i = frontier.pop()
                for j in range(self.n):
                    if j not in comp and self.matrix[i][j] != 0:
                        comp.add(j)
                        frontier.append(j)
            seen |= comp
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    def _symmetrizer(self) -> Tuple[Fraction, ...]:
        d: List[Optional[Fraction]] = [None] * self.n
        for comp in self.components:
            d[comp[0]] = Fraction(1)
            frontier = [comp[0]]
            while frontier:
                i = frontier.pop()
                for j in comp:
                    if j == i or self.matrix[i][j] == 0:
                        continue
                    val = d[i] * Fraction(self.matrix[i][j], self.matrix[j][i])
                    if d[j] is None:
                        d[j] = val
                        frontier.append(j)
                    elif d[j] != val:
                        raise ValueError("Cartan matrix is not symmetrizable")
            lo = min(d[i] for i in comp)
            for i in comp:
                d[i] /= lo
        return tuple(d)

    def coxeter_m(self, i: int, j: int) -> Optional[int]:
        """Order of s_i s_j; None encodes infinity."""
        if i == j:
            return 1
        return {0: 2, 1: 3, 2: 4, 3: 6}.get(self.matrix[i][j] * self.matrix[j][i])

    def _symmetrized(self, nodes: Sequence[int]):
        return [[self.symmetrizer[i] * self.matrix[i][j] for j in nodes] for i in nodes]

    def component_kind(self, comp: Sequence[int]) -> str:
        s = self._symmetrized(comp)
        if _positive_definite(s):
            return "finite"
        if det(s) == 0 and _positive_definite(self._symmetrized(comp[:-1])):
            return "affine"
        raise ValueError(f"component {tuple(comp)} is neither finite nor affine type")


@dataclass(frozen=True)
class AffineIsometry:
    """Exact affine map x -> L x + t with rational entries."""

    linear: Matrix
    translation: Tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "linear", tuple(rat_tuple(row) for row in self.linear))
        object.__setattr__(self, "translation", rat_tuple(self.translation))

    @staticmethod
    def identity(n: int) -> "AffineIsometry":
        return AffineIsometry(identity_matrix(n), tuple(Fraction(0) for _ in range(n)))

    def apply(self, point: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        return tuple(a + b for a, b in zip(mat_vec(self.linear, point), self.translation))

    def compose(self, other: "AffineIsometry") -> "AffineIsometry":
        """self after other."""
        return AffineIsometry(
            mat_mul(self.linear, other.linear),
            tuple(a + b for a, b in zip(mat_vec(self.linear, other.translation), self.translation)),
        )

    def inverse(self) -> "AffineIsometry":
        inv = mat_inv(self.linear)
        return AffineIsometry(inv, tuple(-a for a in mat_vec(inv, self.translation)))

    def is_identity(self) -> bool:
        n = len(self.translation)
        return self.linear == identity_matrix(n) and all(t == 0 for t in self.translation)


@dataclass(frozen=True)
class Root:
    """A root in coordinate form.

    ``u`` is the root as a vector, ``row`` the linear functional whose value
    is the pairing with the coroot, so the reflection in the wall at level k
    sends x to x - (row.x - k) u.  ``coeffs`` is the expansion in simple
    roots and ``component`` indexes the diagram component carrying it.
    """

    u: Tuple[Fraction, ...]
    row: Tuple[Fraction, ...]
    coeffs: Tuple[int, ...]
    component: int


@dataclass(frozen=True)
class Wall:
    root: Root
    level: int
    flat: AffineFlat

    def value(self, point: Sequence[Fraction]) -> Fraction:
        return sum(r * p for r, p in zip(self.root.row, point)) - self.level


class CoxeterSystem:
    """A finite or affine Coxeter system with exact reflection geometry."""

    def __init__(self, cartan):
        if not isinstance(cartan, CartanData):
            cartan = CartanData(cartan)
        self.cartan = cartan
        kinds = {cartan.component_kind(c) for c in cartan.components}
        if len(kinds) != 1:
            raise ValueError("mixing finite and affine components is not supported")
        self.kind = kinds.pop()
        self.components = cartan.components
        if self.kind == "affine":
            self.affine_nodes: Tuple[int, ...] = tuple(c[-1] for c in self.components)
        else:
            self.affine_nodes = ()
        aff = set(self.affine_nodes)
        self.finite_nodes = tuple(i for i in range(cartan.n) if i not in aff)
        self.finite_pos = {node: k for k, node in enumerate(self.finite_nodes)}
        self.rank = len(self.finite_nodes)
        if self.rank == 0:
            raise ValueError("system has no finite nodes")

        a_f = [[cartan.matrix[i][j] for j in self.finite_nodes] for i in self.finite_nodes]
        self.finite_cartan = CartanData(a_f)
        self.component_positions = tuple(
            tuple(self.finite_pos[i] for i in c if i not in aff) for c in self.components
        )
        local = {frozenset(c) for c in self.finite_cartan.components}
        for part in self.component_positions:
            if frozenset(part) not in local:
                raise ValueError("the distinguished node must leave its component connected")

        a_inv = mat_inv(self.finite_cartan.matrix)
        d = self.finite_cartan.symmetrizer
        self.form = BilinearForm(
            [[d[i] * a_inv[i][j] for j in range(self.rank)] for i in range(self.rank)]
        )

        n = self.rank
        af = self.finite_cartan.matrix
        self.simple_matrices: Tuple[Matrix, ...] = tuple(
            tuple(
                tuple(Fraction((1 if r == c else 0) - (af[r][i] if c == i else 0)) for c in range(n))
                for r in range(n)
            )
            for i in range(n)
        )
        self._a_inv = a_inv
        self.positive_roots = self._positive_roots()
        self.highest_roots = self._highest_roots()
        self.component_local = self._component_local()
        self.node_wall: Dict[int, Tuple[Tuple[Fraction, ...], int]] = {}
        self.generators: Dict[int, AffineIsometry] = {}
        self._install_generators()
        self.fundamental_blocks = self._fundamental_blocks()

    # -- root system -----------------------------------------------------

    def _positive_roots(self) -> Tuple[Root, ...]:
        n = self.rank
        af = self.finite_cartan.matrix
        seen: Dict[Tuple[Fraction, ...], Tuple[Fraction, ...]] = {}
        frontier = []
        for j in range(n):
            u = tuple(Fraction(af[r][j]) for r in range(n))
            row = tuple(Fraction(1 if c == j else 0) for c in range(n))
            seen[u] = row
            frontier.append((u, row))
        while frontier:
            u, row = frontier.pop()
            for s in self.simple_matrices:
                nu = mat_vec(s, u)
                if nu not in seen:
                    nrow = vec_mat(row, s)
                    seen[nu] = nrow
                    frontier.append((nu, nrow))
        comp_of_pos = {}
        for k, comp in enumerate(self.finite_cartan.components):
            for p in comp:
                comp_of_pos[p] = k
        roots = []
        for u, row in seen.items():
            coeffs = mat_vec(self._a_inv, u)
            ints = []
            for c in coeffs:
                assert c.denominator == 1, "root coefficients must be integers"
                ints.append(int(c))
            assert all(c >= 0 for c in ints) or all(c <= 0 for c in ints), \
                "every root must be positive or negative"
            if not all(c >= 0 for c in ints):
                continue
            comps = {comp_of_pos[p] for p, c in enumerate(ints) if c != 0}
            assert len(comps) == 1, "a root is supported on one diagram component"
            bu = mat_vec(self.form.matrix, u)
            nrm = sum(x * y for x, y in zip(u, bu))
            assert row == tuple(2 * x / nrm for x in bu), "functional row must match the form"
            roots.append(Root(u, row, tuple(ints), comps.pop()))
        roots.sort(key=lambda r: (sum(r.coeffs), r.u))
        return tuple(roots)

    def _highest_roots(self) -> Tuple[Root, ...]:
        out = []
        for k in range(len(self.finite_cartan.components)):
            cands = [r for r in self.positive_roots if r.component == k]
            heights = sorted(sum(r.coeffs) for r in cands)
            assert len(heights) < 2 or heights[-1] > heights[-2], "highest root must be unique"
            out.append(max(cands, key=lambda r: sum(r.coeffs)))
        return tuple(out)

    def _component_local(self) -> Tuple[int, ...]:
        out = []
        for part in self.component_positions:
            for k, lc in enumerate(self.finite_cartan.components):
                if set(part) == set(lc):
                    out.append(k)
                    break
        return tuple(out)

    # -- generators and alcove data ----------------------------------------

    def _install_generators(self):
        n = self.rank
        zero = tuple(Fraction(0) for _ in range(n))
        for i in self.finite_nodes:
            li = self.finite_pos[i]
            self.node_wall[i] = (tuple(Fraction(1 if c == li else 0) for c in range(n)), 0)
            self.generators[i] = AffineIsometry(self.simple_matrices[li], zero)
        for ci, a in enumerate(self.affine_nodes):
            th = self.highest_roots[self.component_local[ci]]
            lin = tuple(
                tuple(Fraction(1 if r == c else 0) - th.u[r] * th.row[c] for c in range(n))
                for r in range(n)
            )
            self.node_wall[a] = (th.row, 1)
            self.generators[a] = AffineIsometry(lin, th.u)
            # the Cartan row of the distinguished node encodes minus the
            # highest coroot; this pins down the level-one wall convention
            nrm = self.form.norm_sq(th.u)
            for j in self.finite_nodes:
                p = self.finite_pos[j]
                assert self.cartan.matrix[a][j] == -2 * th.u[p] / nrm
                alpha = tuple(Fraction(self.finite_cartan.matrix[r][p]) for r in range(n))
                expected = -2 * self.form.pair(alpha, th.u) / self.form.norm_sq(alpha)
                assert self.cartan.matrix[j][a] == expected

    def _fundamental_blocks(self):
        """Per component: the fundamental-domain vertices, as (block, node type).

        For an affine component these are the fundamental alcove's vertices
        restricted to the component's coordinates; the origin carries the
        distinguished node's type.  Finite systems use the origin plus the
        fundamental coweights, which spans the closed dominant chamber.
        """
        blocks = []
        for ci, comp in enumerate(self.components):
            positions = self.component_positions[ci]
            vs = []
            if self.kind == "affine":
                vs.append((tuple(Fraction(0) for _ in positions), self.affine_nodes[ci]))
                th = self.highest_roots[self.component_local[ci]]
                for i in comp:
                    if i in self.affine_nodes:
                        continue
                    p = self.finite_pos[i]
                    assert th.row[p] > 0, "highest root must be dominant on its component"
                    vs.append((tuple(Fraction(1, 1) / th.row[p] if q == p else Fraction(0) for q in positions), i))
            else:
                for i in comp:
                    p = self.finite_pos[i]
                    vs.append((tuple(Fraction(1 if q == p else 0) for q in positions), i))
            blocks.append(tuple(vs))
        return tuple(blocks)

    def assemble(self, blocks_by_component: Sequence[Sequence[Fraction]]) -> Tuple[Fraction, ...]:
        coords: List[Optional[Fraction]] = [None] * self.rank
        for positions, block in zip(self.component_positions, blocks_by_component):
            for pos, val in zip(positions, block):
                coords[pos] = val
        assert all(c is not None for c in coords)
        return tuple(coords)

    def base_point(self) -> Tuple[Fraction, ...]:
        """An interior point of the fundamental domain (alcove or chamber)."""
        blocks = []
        for vs in self.fundamental_blocks:
            k = len(vs)
            if self.kind == "affine":
                blocks.append(tuple(sum(col) / k for col in zip(*(b for b, _ in vs))))
            else:
                blocks.append(tuple(sum(col) for col in zip(*(b for b, _ in vs))))
        return self.assemble(blocks)


# -- presets -------------------------------------------------------------------


_FINITE = {
    "A1": [[2]],
    "A2": [[2, -1], [-1, 2]],
    "A3": [[2, -1, 0], [-1, 2, -1], [0, -1, 2]],
    "B2": [[2, -2], [-1, 2]],
    "G2": [[2, -1], [-3, 2]],
}

_AFFINE = {
    "A1": [[2, -2], [-2, 2]],
    "A2": [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]],
}


def finite_cartan(name: str) -> CartanData:
    if name not in _FINITE:
        raise KeyError(f"unknown finite type {name!r}; have {sorted(_FINITE)}")
    return CartanData(_FINITE[name])


def affine_cartan(name: str) -> CartanData:
    if name not in _AFFINE:
        raise KeyError(f"unknown affine type {name!r}; have {sorted(_AFFINE)}")
    return CartanData(_AFFINE[name])


def direct_sum(*parts: CartanData) -> CartanData:
    n = sum(p.n for p in parts)
    rows = [[0] * n for _ in range(n)]
    off = 0
    for p in parts:
        for i in range(p.n):
            for j in range(p.n):
                rows[off + i][off + j] = p.matrix[i][j]
        off += p.n
    return CartanData(rows)


# -- the affine chamber ball ----------------------------------------------------


class AffineBall:
    """All chambers within a gallery radius of the fundamental alcove.

    Chambers are identified with affine isometries (the group acts simply
    transitively), vertices with their exact coordinate tuples.  The cell
    complex is polysimplicial: one simplex factor per diagram component.
    """

    def __init__(self, sys: CoxeterSystem, radius: int):
        if sys.kind != "affine":
            raise ValueError("chamber balls need an affine system")
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.sys = sys
        self.radius = radius
        self.lengths: Dict[AffineIsometry, int] = {AffineIsometry.identity(sys.rank): 0}
        frontier = list(self.lengths)
        for dist in range(1, radius + 1):
            nxt = []
            for g in frontier:
                for i in range(sys.cartan.n):
                    h = g.compose(sys.generators[i])
                    if h not in self.lengths:
                        self.lengths[h] = dist
                        nxt.append(h)
            frontier = nxt

        self.chamber_blocks = {}
        for g in self.lengths:
            per_comp = []
            for ci, positions in enumerate(sys.component_positions):
                vs = []
                for block, t in sys.fundamental_blocks[ci]:
                    coords: List[Fraction] = [Fraction(0)] * sys.rank
                    for pos, val in zip(positions, block):
                        coords[pos] = val
                    image = g.apply(coords)
                    vs.append((tuple(image[p] for p in positions), t))
                per_comp.append(tuple(vs))
            self.chamber_blocks[g] = tuple(per_comp)

        cells: Dict[frozenset, int] = {}
        self.typ: Dict[Tuple[Fraction, ...], Tuple[int, ...]] = {}
        self.cell_chamber: Dict[frozenset, AffineIsometry] = {}
        self.chamber_cell: Dict[AffineIsometry, frozenset] = {}
        top = sys.rank
        for g, per_comp in self.chamber_blocks.items():
            subset_menu = [_nonempty_subsets(vs) for vs in per_comp]
            for choice in itertools.product(*subset_menu):
                verts = []
                for combo in itertools.product(*choice):
                    vid = sys.assemble([blk for blk, _ in combo])
                    t = tuple(t for _, t in combo)
                    old = self.typ.get(vid)
                    assert old is None or old == t, "vertex type must be well defined"
                    self.typ[vid] = t
                    verts.append(vid)
                cid = frozenset(verts)
                dim = sum(len(ch) - 1 for ch in choice)
                old_dim = cells.get(cid)
                assert old_dim is None or old_dim == dim, "cell dimension must be well defined"
                cells[cid] = dim
                if dim == top:
                    self.cell_chamber[cid] = g
                    self.chamber_cell[g] = cid

        geometry = {v: RVec(v, sys.form) for v in self.typ}
        self.complex = Complex(cells, geometry=geometry, simplicial=len(sys.components) == 1)
        self.walls = self._walls()
        self._star_ok: Dict[Tuple[Fraction, ...], bool] = {}
        self._panel_data: Optional[Tuple[Dict[frozenset, int], Dict[Tuple[Fraction, ...], List[frozenset]]]] = None

    def vertices(self) -> List[Tuple[Fraction, ...]]:
        return self.complex.vertices()

    def chambers(self) -> List[frozenset]:
        return sorted(self.cell_chamber, key=lambda c: sorted(map(repr, c)))

    def _walls(self) -> Tuple[Wall, ...]:
        verts = list(self.typ)
        walls = []
        for root in self.sys.positive_roots:
            vals = [sum(r * v for r, v in zip(root.row, vert)) for vert in verts]
            lo, hi = min(vals), max(vals)
            pivot = next(p for p, r in enumerate(root.row) if r != 0)
            span = []
            for j in range(self.sys.rank):
                if j == pivot:
                    continue
                coeffs = [Fraction(0)] * self.sys.rank
                coeffs[j] = Fraction(1)
                coeffs[pivot] = -root.row[j] / root.row[pivot]
                span.append(RVec(tuple(coeffs), self.sys.form))
            for k in range(math.ceil(lo), math.floor(hi) + 1):
                base = RVec(tuple(Fraction(k, 2) * c for c in root.u), self.sys.form)
                assert sum(r * b for r, b in zip(root.row, base.coords)) == k
                walls.append(Wall(root, k, AffineFlat(base, tuple(span))))
        return tuple(walls)

    def special(self, v: Tuple[Fraction, ...]) -> bool:
        """A vertex is special when every root functional is integral on it."""
        return all(
            sum(r * c for r, c in zip(root.row, v)).denominator == 1
            for root in self.sys.positive_roots
        )

    def _panels(self):
        if self._panel_data is None:
            top = self.sys.rank
            counts: Dict[frozenset, int] = {}
            for cid, dim in self.complex.cells.items():
                if dim != top - 1:
                    continue
                counts[cid] = 0
            for cid in self.cell_chamber:
                for panel in self.complex.cells:
                    if self.complex.cells[panel] == top - 1 and panel < cid:
                        counts[panel] += 1
            by_vertex: Dict[Tuple[Fraction, ...], List[frozenset]] = {v: [] for v in self.typ}
            for panel in counts:
                for v in panel:
                    by_vertex[v].append(panel)
            self._panel_data = (counts, by_vertex)
        return self._panel_data

    def star_complete(self, v: Tuple[Fraction, ...]) -> bool:
        """True when every panel at v sits between exactly two chambers here."""
        if v not in self._star_ok:
            counts, by_vertex = self._panels()
            self._star_ok[v] = all(counts[p] == 2 for p in by_vertex[v])
        return self._star_ok[v]

    def check_thin(self):
        """Every panel of a chamber strictly inside the ball bounds 2 chambers."""
        counts, _ = self._panels()
        for cid, g in self.cell_chamber.items():
            if self.lengths[g] >= self.radius:
                continue
            for panel in self.complex.cells:
                if self.complex.cells[panel] == self.sys.rank - 1 and panel < cid:
                    assert counts[panel] == 2, "interior panel must bound two chambers"


def _nonempty_subsets(seq):
    items = list(seq)
    return [
        combo
        for k in range(1, len(items) + 1)
        for combo in itertools.combinations(items, k)
    ]


def affine_ball(sys: CoxeterSystem, radius: int) -> AffineBall:
    return AffineBall(sys, radius)


def weyl_matrices(sys: CoxeterSystem, cap: int = 50000) -> frozenset:
    """All linear parts of the finite Weyl group, by closure under generators."""
    seen = {identity_matrix(sys.rank)}
    frontier = list(seen)
    while frontier:
        w = frontier.pop()
        for s in sys.simple_matrices:
            nw = mat_mul(w, s)
            if nw not in seen:
                if len(seen) >= cap:
                    raise ValueError("group is too large; is the system really finite?")
                seen.add(nw)
                frontier.append(nw)
    return frozenset(seen)


def wall_reflection(sys: CoxeterSystem, wall: Wall) -> AffineIsometry:
    n = sys.rank
    lin = tuple(
        tuple(Fraction(1 if r == c else 0) - wall.root.u[r] * wall.root.row[c] for c in range(n))
        for r in range(n)
    )
    return AffineIsometry(lin, tuple(wall.level * c for c in wall.root.u))


# -- words and distances ---------------------------------------------------------


def length_and_word(sys: CoxeterSystem, g: AffineIsometry) -> Tuple[int, List[int]]:
    """Word length of g and a reduced word, multiplying left to right.

    Length is the number of reflection walls separating the fundamental base
    point from its image; the word is read off by greedily splitting the
    smallest separating facet index from the left.
    """
    p0 = sys.base_point()
    q = g.apply(p0)
    total = 0
    for root in sys.positive_roots:
        a = sum(r * c for r, c in zip(root.row, p0))
        b = sum(r * c for r, c in zip(root.row, q))
        if sys.kind == "finite":
            total += 1 if b < 0 else 0
        else:
            assert a.denominator != 1 and b.denominator != 1, "base point must avoid all walls"
            total += abs(math.floor(a) - math.floor(b))
    word: List[int] = []
    cur = g
    cur_q = q
    for _ in range(total):
        found = None
        for i in range(sys.cartan.n):
            row, k = sys.node_wall[i]
            va = sum(r * c for r, c in zip(row, p0)) - k
            vb = sum(r * c for r, c in zip(row, cur_q)) - k
            assert va != 0 and vb != 0
            if sign(va) != sign(vb):
                found = i
                break
        if found is None:
            break
        word.append(found)
        cur = sys.generators[found].compose(cur)
        cur_q = cur.apply(p0)
    if not cur.is_identity():
        raise ValueError("element is not reachable: not in the affine reflection group")
    assert len(word) == total
    return total, word


def weyl_distance_thin(ball: AffineBall, c: frozenset, d: frozenset) -> AffineIsometry:
    """Group-valued distance between two chambers of the ball."""
    return ball.cell_chamber[c].inverse().compose(ball.cell_chamber[d])


# -- the finite chamber complex ---------------------------------------------------


def finite_complex(sys: CoxeterSystem, cap: int = 50000) -> Complex:
    """Cells are Weyl images of faces of the fundamental-coweight simplex.

    Vertices are images of the basis vectors; a cell collects the images of
    a nonempty subset under one group element, so cells of cosets coincide
    and the complex is the full Coxeter complex (a sphere).
    """
    if sys.kind != "finite":
        raise ValueError("the spherical chamber complex needs a finite system")
    n = sys.rank
    cells: Dict[frozenset, int] = {}
    for w in weyl_matrices(sys, cap):
        columns = [tuple(w[r][i] for r in range(n)) for i in range(n)]
        for k in range(1, n + 1):
            for subset in itertools.combinations(range(n), k):
                cells[frozenset(columns[i] for i in subset)] = k - 1
    geometry = {v: RVec(v, sys.form) for c in cells for v in c}
    return Complex(cells, geometry=geometry, simplicial=True)


def join_decomposition(sys: CoxeterSystem) -> Tuple[Tuple[int, ...], ...]:
    """Diagram components, cross-checked against the form's zero pattern."""
    m = sys.form.matrix
    n = sys.rank
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(n):
            if m[i][j] != 0:
                parent[find(i)] = find(j)
    derived = {}
    for i in range(n):
        derived.setdefault(find(i), set()).add(i)
    expected = {frozenset(part) for part in sys.component_positions}
    if {frozenset(s) for s in derived.values()} != expected:
        raise AssertionError("metric and diagram component decompositions disagree")
    return sys.components


# -- difference sets of nearby vertices -------------------------------------------


def rich_set(ball: AffineBall, level: str) -> frozenset:
    """Difference vectors of nearby star-complete vertex pairs.

    Level "almost" takes pairs sharing a cell; "rich" takes pairs with a
    common neighbor (or equal to one of them).  Only pairs of star-complete
    vertices contribute, so boundary effects cannot leak in; the result is
    then checked to cover the unfiltered demand of the whole ball and to be
    closed under the finite Weyl group and negation, both of which fail when
    the ball is too small to see every orbit representative.
    """
    if level not in ("almost", "rich"):
        raise ValueError(f"level must be 'almost' or 'rich', got {level!r}")
    cx = ball.complex
    ok = {v for v in ball.typ if ball.star_complete(v)}
    diffs = set()
    needed = set()
    if level == "almost":
        for cell in cx.cells:
            for v, w in itertools.permutations(cell, 2):
                needed.add(tuple(a - b for a, b in zip(v, w)))
                if v in ok and w in ok:
                    diffs.add(tuple(a - b for a, b in zip(v, w)))
    else:
        closed_nbr = {v: {v} for v in ball.typ}
        for cell in cx.cells:
            for v, w in itertools.permutations(cell, 2):
                closed_nbr[v].add(w)
        for u in ball.typ:
            for v, w in itertools.permutations(closed_nbr[u], 2):
                needed.add(tuple(a - b for a, b in zip(v, w)))
                if u in ok and v in ok and w in ok:
                    diffs.add(tuple(a - b for a, b in zip(v, w)))
    if not diffs:
        raise ValueError("no star-complete vertex pairs: ball radius too small")
    if not needed <= diffs:
        raise ValueError("difference set has not stabilized: ball radius too small")
    group = weyl_matrices(ball.sys)
    for d in diffs:
        if tuple(-c for c in d) not in diffs:
            raise ValueError("difference set is not symmetric: ball radius too small")
        for w in group:
            if mat_vec(w, d) not in diffs:
                raise ValueError("difference set is not Weyl closed: ball radius too small")
    return frozenset(diffs)
