"""Graded cell complexes with links, joins, subdivision, and exact homology.

Cells are identified by their vertex sets.  The face relation is vertex
containment: a present cell is a face of another iff its vertex set is a
subset.  That discipline is sound for simplicial complexes and for products
of simplicial complexes (the vertex set of a product cell factors uniquely),
which covers everything built here.  Products are not simplicial, so every
cell carries an explicit dimension.

Homology is reduced integer homology via a hand-rolled Smith normal form on
big integers.  Orientations come from a global canonical ordering of vertex
ids, so mixed id types are fine.
"""

from __future__ import annotations

import itertools
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

from .qspace import AffineFlat, RVec

CellId = FrozenSet[Hashable]


def canonical_key(v) -> Tuple[str, str]:
    """Deterministic sort key for arbitrary hashable vertex ids."""
    return (type(v).__name__, repr(v))


def sorted_vertices(cell: Iterable[Hashable]) -> Tuple[Hashable, ...]:
    return tuple(sorted(cell, key=canonical_key))


class Complex:
    """A finite polyhedral complex with vertex-determined cells."""

    def __init__(self, cells: Dict[CellId, int], geometry: Optional[Dict[Hashable, RVec]] = None,
                 simplicial: bool = True):
        self.cells: Dict[CellId, int] = {}
        for cell, dim in cells.items():
            cell = frozenset(cell)
            if not cell:
                raise ValueError("the empty cell is implicit and never stored")
            self.cells[cell] = dim
        for cell, dim in self.cells.items():
            if simplicial and dim != len(cell) - 1:
                raise ValueError(f"simplicial cell {sorted_vertices(cell)} must have dim {len(cell) - 1}, got {dim}")
            for v in cell:
                if frozenset((v,)) not in self.cells:
                    raise ValueError(f"vertex {v!r} of a cell is not itself a cell")
            if dim < 0 or (len(cell) == 1 and dim != 0):
                raise ValueError("bad dimension")
        if len(self.cells) <= 1500:
            for cell, dim in self.cells.items():
                for other, odim in self.cells.items():
                    if other < cell and odim >= dim:
                        raise ValueError("dimension must strictly increase along proper faces")
        self.geometry = dict(geometry) if geometry else None
        if self.geometry is not None:
            for v in self.vertices():
                if v not in self.geometry:
                    raise ValueError(f"vertex {v!r} has no geometry")
        self.simplicial = simplicial

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def simplicial_closure(top_cells: Iterable[Iterable[Hashable]],
                           geometry: Optional[Dict[Hashable, RVec]] = None) -> "Complex":
        """Close a family of simplices downward under taking subsets."""
        cells: Dict[CellId, int] = {}
        for top in top_cells:
            top = tuple(top)
            for k in range(1, len(top) + 1):
                for sub in itertools.combinations(top, k):
                    cells[frozenset(sub)] = k - 1
        return Complex(cells, geometry=geometry, simplicial=True)

    @staticmethod
    def empty() -> "Complex":
        return Complex({}, simplicial=True)

    # -- basic queries --------------------------------------------------------

    def vertices(self) -> List[Hashable]:
        return sorted((next(iter(c)) for c in self.cells if len(c) == 1), key=canonical_key)

    def dim(self) -> int:
        return max(self.cells.values(), default=-1)

    def sorted_cells(self) -> List[CellId]:
        return sorted(self.cells, key=lambda c: (self.cells[c], tuple(canonical_key(v) for v in sorted_vertices(c))))

    def cells_of_dim(self, k: int) -> List[CellId]:
        return [c for c in self.sorted_cells() if self.cells[c] == k]

    def has_cell(self, cell: Iterable[Hashable]) -> bool:
        return frozenset(cell) in self.cells

    def faces(self, cell: Iterable[Hashable]) -> List[CellId]:
        cell = frozenset(cell)
        return [c for c in self.sorted_cells() if c < cell]

    def proper_cofaces(self, cell: Iterable[Hashable]) -> List[CellId]:
        cell = frozenset(cell)
        return [c for c in self.sorted_cells() if cell < c]

    def maximal_cells(self) -> List[CellId]:
        return [c for c in self.sorted_cells() if not any(c < d for d in self.cells)]

    def f_vector(self) -> Tuple[int, ...]:
        counts = [0] * (self.dim() + 1)
        for c, d in self.cells.items():
            counts[d] += 1
        return tuple(counts)

    def __eq__(self, other):
        return isinstance(other, Complex) and self.cells == other.cells

    def __repr__(self):
        return f"Complex(f={self.f_vector()})"

    # -- geometry of links ----------------------------------------------------

    def direction_in_link(self, cell: Iterable[Hashable], v: Hashable) -> RVec:
        """Direction from a cell toward an adjacent vertex, orthogonal to the cell.

        Requires geometry.  The direction is v minus its projection onto the
        affine hull of the cell; nonzero whenever v is not in that hull.
        """
        if self.geometry is None:
            raise ValueError("complex has no geometry")
        cell = sorted_vertices(frozenset(cell))
        base = self.geometry[cell[0]]
        diffs = [self.geometry[w] - base for w in cell[1:]]
        span = _independent(diffs)
        flat = AffineFlat(base, tuple(span))
        from .qspace import project_flat

        p = self.geometry[v]
        return p - project_flat(p, flat)


def _independent(vectors: Sequence[RVec]) -> List[RVec]:
    """Greedy independent subfamily, judged by Gram determinant."""
    from .qspace import det

    chosen: List[RVec] = []
    for v in vectors:
        trial = chosen + [v]
        gram = [[a.pair(b) for b in trial] for a in trial]
        if det(gram) != 0:
            chosen.append(v)
    return chosen


# -- constructions ------------------------------------------------------------


def link(K: Complex, cell: Iterable[Hashable]) -> Complex:
    """The link of a cell: residues tau minus sigma over all proper cofaces."""
    sigma = frozenset(cell)
    if sigma not in K.cells:
        raise ValueError("cell not in complex")
    d0 = K.cells[sigma]
    cells: Dict[CellId, int] = {}
    for tau, d in K.cells.items():
        if sigma < tau:
            cells[tau - sigma] = d - d0 - 1
    geometry = None
    if K.geometry is not None:
        geometry = {}
        for c in cells:
            for v in c:
                if v not in geometry:
                    geometry[v] = K.direction_in_link(sigma, v)
    simplicial = K.simplicial and all(d == len(c) - 1 for c, d in cells.items())
    return Complex(cells, geometry=geometry, simplicial=simplicial)


def join(K: Complex, L: Complex) -> Complex:
    """Spherical join: unions of a cell of K and a cell of L, either empty."""
    kv = {v for c in K.cells for v in c}
    lv = {v for c in L.cells for v in c}
    collision = kv & lv
    if collision:
        raise ValueError(f"vertex id collision in join: {sorted(collision, key=canonical_key)[:3]}")
    cells: Dict[CellId, int] = {}
    k_cells = [(frozenset(), -1)] + list(K.cells.items())
    l_cells = [(frozenset(), -1)] + list(L.cells.items())
    for (a, da), (b, db) in itertools.product(k_cells, l_cells):
        if a or b:
            cells[a | b] = da + db + 1
    return Complex(cells, simplicial=K.simplicial and L.simplicial)


def product(K: Complex, L: Complex) -> Complex:
    """Direct product: cells are products of cells, vertices are pairs."""
    cells: Dict[CellId, int] = {}
    for (a, da), (b, db) in itertools.product(K.cells.items(), L.cells.items()):
        cells[frozenset(itertools.product(a, b))] = da + db
    simplicial = all(d == len(c) - 1 for c, d in cells.items())
    return Complex(cells, simplicial=simplicial)


def barycentric(K: Complex) -> Complex:
    """Barycentric subdivision: the flag complex of the poset of cells."""
    by_dim = sorted(K.cells, key=lambda c: K.cells[c])
    chains_at: Dict[CellId, List[Tuple[CellId, ...]]] = {}
    for c in by_dim:
        chains = [(c,)]
        for f in K.cells:
            if f < c:
                chains.extend(ch + (c,) for ch in chains_at[f])
        chains_at[c] = chains
    cells: Dict[CellId, int] = {}
    for chain_list in chains_at.values():
        for ch in chain_list:
            cells[frozenset(barycenter_id(c) for c in ch)] = len(ch) - 1
    return Complex(cells, simplicial=True)


def barycenter_id(cell: Iterable[Hashable]):
    return ("b", sorted_vertices(frozenset(cell)))


def full_subcomplex(K: Complex, V: Iterable[Hashable]) -> Complex:
    vs = set(V)
    unknown = vs - {v for c in K.cells for v in c}
    if unknown:
        raise ValueError(f"unknown vertices: {sorted(unknown, key=canonical_key)[:3]}")
    cells = {c: d for c, d in K.cells.items() if c <= vs}
    geometry = None
    if K.geometry is not None:
        geometry = {v: K.geometry[v] for v in vs if v in K.geometry}
    return Complex(cells, geometry=geometry, simplicial=K.simplicial)


# -- homology -----------------------------------------------------------------


def boundary_matrices(K: Complex) -> List[List[List[int]]]:
    """Reduced simplicial boundary matrices, degree k matrix mapping C_k -> C_{k-1}.

    Index 0 is the augmentation (1 x #vertices).  Requires a simplicial
    complex; subdivide first if needed.
    """
    if not K.simplicial:
        raise ValueError("homology needs a simplicial complex; apply barycentric() first")
    top = K.dim()
    basis = [K.cells_of_dim(k) for k in range(top + 1)]
    index = [{c: i for i, c in enumerate(basis[k])} for k in range(top + 1)]
    matrices: List[List[List[int]]] = []
    matrices.append([[1] * len(basis[0])] if basis else [[]])
    for k in range(1, top + 1):
        rows = len(basis[k - 1])
        cols = len(basis[k])
        m = [[0] * cols for _ in range(rows)]
        for j, cell in enumerate(basis[k]):
            vs = sorted_vertices(cell)
            for i, v in enumerate(vs):
                face = frozenset(vs[:i] + vs[i + 1:])
                m[index[k - 1][face]][j] = (-1) ** i
        matrices.append(m)
    return matrices


def _mat_mul(a: List[List[int]], b: List[List[int]]) -> List[List[int]]:
    if not a or not b:
        return []
    rows, mid, cols = len(a), len(b), len(b[0])
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        ai = a[i]
        for k in range(mid):
            f = ai[k]
            if f:
                bk = b[k]
                oi = out[i]
                for j in range(cols):
                    if bk[j]:
                        oi[j] += f * bk[j]
    return out


def smith_invariants(matrix: List[List[int]]) -> List[int]:
    """Nonzero diagonal invariants of the integer Smith normal form.

    Pivots on a minimum-absolute-value entry; enforces the divisibility
    chain, so the result lists the elementary divisors in order.
    """
    m = [row[:] for row in matrix]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    invariants: List[int] = []
    r = 0
    while True:
        best = None
        for i in range(r, rows):
            for j in range(r, cols):
                v = m[i][j]
                if v and (best is None or abs(v) < abs(m[best[0]][best[1]])):
                    best = (i, j)
                    if abs(v) == 1:
                        break
            if best is not None and abs(m[best[0]][best[1]]) == 1:
                break
        if best is None:
            break
        bi, bj = best
        m[r], m[bi] = m[bi], m[r]
        for row in m:
            row[r], row[bj] = row[bj], row[r]
        pivot = m[r][r]
        dirty = False
        for i in range(r + 1, rows):
            if m[i][r]:
                q = m[i][r] // pivot
                if q:
                    for j in range(r, cols):
                        m[i][j] -= q * m[r][j]
                if m[i][r]:
                    dirty = True
        for j in range(r + 1, cols):
            if m[r][j]:
                q = m[r][j] // pivot
                if q:
                    for i in range(r, rows):
                        m[i][j] -= q * m[i][r]
                if m[r][j]:
                    dirty = True
        if dirty:
            continue
        # pivot must divide the rest of the submatrix for true invariants
        offender = None
        for i in range(r + 1, rows):
            for j in range(r + 1, cols):
                if m[i][j] % pivot:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            for j in range(r, cols):
                m[r][j] += m[offender][j]
            continue
        invariants.append(abs(pivot))
        r += 1
        if r >= rows or r >= cols:
            break
    return invariants


def homology(K: Complex) -> List[Tuple[int, int, Tuple[int, ...]]]:
    """Reduced integer homology: list of (degree, rank, torsion coefficients).

    Degrees run from 0 to dim K.  The empty complex reports its reduced
    (-1)-homology instead.
    """
    if not K.cells:
        return [(-1, 1, ())]
    mats = boundary_matrices(K)
    top = K.dim()
    counts = [len(K.cells_of_dim(k)) for k in range(top + 1)]
    for k in range(1, len(mats)):
        square = _mat_mul(mats[k - 1], mats[k])
        assert all(all(x == 0 for x in row) for row in square), "boundary of boundary must vanish"
    invs = [smith_invariants(m) for m in mats]
    ranks = [len(i) for i in invs]
    result = []
    for k in range(top + 1):
        rank_in = ranks[k + 1] if k + 1 <= top else 0
        rank = counts[k] - ranks[k] - rank_in
        torsion = tuple(d for d in (invs[k + 1] if k + 1 <= top else []) if d > 1)
        result.append((k, rank, torsion))
    return result


def reduced_rank(K: Complex, degree: int) -> int:
    for k, rank, _ in homology(K):
        if k == degree:
            return rank
    return 1 if (degree == -1 and not K.cells) else 0


def homology_concentrated(K: Complex, degree: int) -> bool:
    """True iff all reduced homology vanishes except possibly in the degree."""
    return all(rank == 0 and not torsion for k, rank, torsion in homology(K) if k != degree)


def to_json_dict(K: Complex) -> dict:
    return {
        "dim": K.dim(),
        "f_vector": list(K.f_vector()),
        "cells": [
            {"dim": K.cells[c], "vertices": [repr(v) for v in sorted_vertices(c)]}
            for c in K.sorted_cells()
        ],
    }
