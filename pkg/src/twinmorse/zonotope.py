"""Exact zonotope calculus in ambient dimension one and two.

A zonotope is a Minkowski sum of segments [0, z] over a generator list.
Everything here is certificate-driven: membership returns coefficients,
projection returns the face and the normal vector, the translate algorithm
returns a vertex whose difference cone fits inside the zonotope.  Ambient
dimensions stay at one or two, where the halfspace description is just the
generator perpendiculars; higher dimensions are out of scope and rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Dict, List, Optional, Sequence, Tuple

from .coxeter import AffineBall, CoxeterSystem, mat_vec, weyl_matrices
from .qspace import RVec, sign


@dataclass(frozen=True)
class Zonotope:
    """Z(D): the Minkowski sum of the segments [0, z] over z in D."""

    generators: Tuple[RVec, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if not self.generators:
            raise ValueError("a zonotope needs at least one generator (use the zero vector)")
        form = self.generators[0].form
        for g in self.generators:
            if g.form != form:
                raise ValueError("generators live in different forms")
        if form.dim > 2:
            raise ValueError("only ambient dimensions 1 and 2 are supported")

    @property
    def form(self):
        return self.generators[0].form

    @property
    def dim(self) -> int:
        return self.form.dim

    def vertex_sums(self) -> List[RVec]:
        """All subset sums; the vertices of Z are among them.  Small D only."""
        if len(self.generators) > 16:
            raise ValueError("refusing to enumerate 2^n subset sums for n > 16")
        zero = RVec(tuple(Fraction(0) for _ in range(self.dim)), self.form)
        sums = [zero]
        for g in self.generators:
            sums.extend(s + g for s in list(sums))
        seen = {}
        for s in sums:
            seen.setdefault(s.coords, s)
        return list(seen.values())


@dataclass(frozen=True)
class ZFace:
    """A face of a zonotope: the active generators plus a constant shift.

    The face equals Z(active) + shift and maximizes the pairing with the
    witness direction.  The witness is zero only for the improper face (the
    whole zonotope).
    """

    active: Tuple[RVec, ...]
    shift: RVec
    witness: RVec


@dataclass(frozen=True)
class ProjectionResult:
    point: RVec
    sq_dist: Fraction
    face: ZFace
    normal: RVec


def _dot(row: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum(r * c for r, c in zip(row, v))


def _halfspaces(dim: int, gens: Sequence[Tuple[Fraction, ...]]) -> List[Tuple[Tuple[Fraction, ...], Fraction]]:
    """A complete linear-inequality description of Z(gens), coordinates only.

    Every functional bound is the exact support value, so any superset of
    the facet normals yields the zonotope exactly.  In dimension two the
    facet normals are perpendiculars of generators, plus span constraints
    when the generators do not span.
    """
    rows: List[Tuple[Fraction, ...]] = []
    if dim == 1:
        rows = [(Fraction(1),), (Fraction(-1),)]
    elif dim == 2:
        nonzero = [g for g in gens if any(c != 0 for c in g)]
        for g in nonzero:
            rows.append((-g[1], g[0]))
            rows.append((g[1], -g[0]))
        spans_plane = any(
            a[0] * b[1] - a[1] * b[0] != 0 for a, b in itertools.combinations(nonzero, 2)
        )
        if nonzero and not spans_plane:
            v = nonzero[0]
            rows.append(tuple(v))
            rows.append(tuple(-c for c in v))
        if not nonzero:
            rows = [
                (Fraction(1), Fraction(0)),
                (Fraction(-1), Fraction(0)),
                (Fraction(0), Fraction(1)),
                (Fraction(0), Fraction(-1)),
            ]
    else:
        raise ValueError("only ambient dimensions 1 and 2 are supported")
    out = []
    for row in rows:
        bound = sum(max(Fraction(0), _dot(row, g)) for g in gens)
        out.append((row, bound))
    return out


def contains_certificate(x: RVec, Z: Zonotope) -> Optional[Tuple[Fraction, ...]]:
    """Coefficients writing x as a [0,1]-combination of the generators, or None.

    Peels one generator at a time: the feasible coefficient set for the first
    generator, given that the remainder must lie in the zonotope of the rest,
    is an interval cut out by the remainder's halfspace description.  Taking
    its lower end keeps the invariant and recursion terminates on the empty
    generator list.
    """
    if x.form != Z.form:
        raise ValueError("point and zonotope live in different forms")
    gens = [g.coords for g in Z.generators]
    dim = Z.dim
    cur = list(x.coords)
    alphas: List[Fraction] = []
    for k, z in enumerate(gens):
        rest = gens[k + 1:]
        lo, hi = Fraction(0), Fraction(1)
        feasible = True
        for row, bound in _halfspaces(dim, rest):
            rx = _dot(row, cur)
            rz = _dot(row, z)
            if rz == 0:
                if rx > bound:
                    feasible = False
                    break
            elif rz > 0:
                lo = max(lo, (rx - bound) / rz)
            else:
                hi = min(hi, (rx - bound) / rz)
        if not feasible or lo > hi:
            assert k == 0, "peeling invariant violated on a feasible point"
            return None
        alphas.append(lo)
        cur = [c - lo * zc for c, zc in zip(cur, z)]
    if any(c != 0 for c in cur):
        return None
    return tuple(alphas)


def contains(x: RVec, Z: Zonotope) -> bool:
    return contains_certificate(x, Z) is not None


def face_of_direction(v: RVec, Z: Zonotope) -> ZFace:
    """The face on which the pairing with v is maximal: Z(D_v) + shift."""
    if v.is_zero():
        raise ValueError("zero direction has no face")
    active = []
    shift = RVec(tuple(Fraction(0) for _ in range(Z.dim)), Z.form)
    for g in Z.generators:
        s = sign(v.pair(g))
        if s == 0:
            active.append(g)
        elif s > 0:
            shift = shift + g
    return ZFace(tuple(active), shift, v)


def _zonogon_boundary(gens: List[Tuple[Fraction, ...]]) -> List[Tuple[Fraction, ...]]:
    """Closed boundary cycle of a two-dimensional zonotope, as vertex list."""
    base = [Fraction(0), Fraction(0)]
    ws = []
    for g in gens:
        if g[0] == 0 and g[1] == 0:
            continue
        if g[1] < 0 or (g[1] == 0 and g[0] < 0):
            base = [b + c for b, c in zip(base, g)]
            ws.append(tuple(-c for c in g))
        else:
            ws.append(g)

    def cmp(a, b):
        cross = a[0] * b[1] - a[1] * b[0]
        if cross > 0:
            return -1
        if cross < 0:
            return 1
        return 0

    ws.sort(key=cmp_to_key(cmp))
    pts = [tuple(base)]
    for w in ws:
        pts.append(tuple(p + c for p, c in zip(pts[-1], w)))
    for w in ws:
        pts.append(tuple(p - c for p, c in zip(pts[-1], w)))
    assert pts[-1] == pts[0]
    return pts


def project(x: RVec, Z: Zonotope) -> ProjectionResult:
    """Closest point of the zonotope, with face, squared distance, and normal.

    The closest point is certified exactly: the normal pairs nonpositively
    with every direction that stays inside the zonotope, which for a convex
    set pins the projection down uniquely.
    """
    inside = contains_certificate(x, Z)
    zero = RVec(tuple(Fraction(0) for _ in range(Z.dim)), Z.form)
    if inside is not None:
        whole = ZFace(Z.generators, zero, zero)
        return ProjectionResult(x, Fraction(0), whole, zero)
    if Z.dim == 1:
        lo = sum(min(Fraction(0), g.coords[0]) for g in Z.generators)
        hi = sum(max(Fraction(0), g.coords[0]) for g in Z.generators)
        c = x.coords[0]
        p = RVec((lo if c < lo else hi,), Z.form)
    else:
        best = None
        pts = _zonogon_boundary([g.coords for g in Z.generators])
        if len(pts) == 1:
            best = RVec(pts[0], Z.form)
        else:
            for a, b in zip(pts, pts[1:]):
                av = RVec(a, Z.form)
                d = RVec(b, Z.form) - av
                t = (x - av).pair(d) / d.norm_sq()
                t = max(Fraction(0), min(Fraction(1), t))
                q = av + d.scaled(t)
                dd = (x - q).norm_sq()
                if best is None or dd < (x - best).norm_sq():
                    best = q
        p = best
    normal = x - p
    face = face_of_direction(normal, Z)
    residue = p - face.shift
    cert = contains_certificate(residue, Zonotope(face.active)) if face.active else (
        None if not residue.is_zero() else ()
    )
    assert cert is not None, "projection point must lie on the face of its normal"
    return ProjectionResult(p, normal.norm_sq(), face, normal)


def sq_distance(x: RVec, Z: Zonotope) -> Fraction:
    return project(x, Z).sq_dist


def _generator_index(Z: Zonotope, coords: Tuple[Fraction, ...]) -> Optional[int]:
    for i, g in enumerate(Z.generators):
        if g.coords == coords:
            return i
    return None


def parallel_translate(x: RVec, sigma_vertices: Sequence[RVec], Z: Zonotope) -> int:
    """Index of a vertex v of the cell with x + Z({w - v}) still inside Z.

    Starting from a membership certificate for x, positive directed cycles
    on the complete graph of cell vertices (edge v -> w weighted by the
    coefficient of the generator w - v) telescope to zero, so their common
    weight can be drained until some generator coefficient hits zero.  Once
    no positive cycle remains, some vertex has all outgoing weights zero and
    its difference cone fits in the remaining headroom.
    """
    verts = list(sigma_vertices)
    cert = contains_certificate(x, Z)
    if cert is None:
        raise ValueError("the point is not in the zonotope")
    edge_gen: Dict[Tuple[int, int], int] = {}
    for i, j in itertools.permutations(range(len(verts)), 2):
        d = (verts[j] - verts[i]).coords
        idx = _generator_index(Z, d)
        if idx is None:
            raise ValueError(f"generator set is not rich enough: missing difference {d}")
        edge_gen[(i, j)] = idx
    alphas = list(cert)
    eliminations = 0
    cap = len(Z.generators) * len(verts) ** 2
    while True:
        cycle = _positive_cycle(len(verts), edge_gen, alphas)
        if cycle is None:
            break
        eliminations += 1
        assert eliminations <= cap, "cycle elimination must terminate"
        counts: Dict[int, int] = {}
        for e in cycle:
            counts[edge_gen[e]] = counts.get(edge_gen[e], 0) + 1
        t = min(alphas[idx] / k for idx, k in counts.items())
        assert t > 0
        for idx, k in counts.items():
            alphas[idx] -= t * k
        assert any(alphas[idx] == 0 for idx in counts)
    for i in range(len(verts)):
        if all(alphas[edge_gen[(i, j)]] == 0 for j in range(len(verts)) if j != i):
            return i
    raise AssertionError("a cycle-free weighting must have a source vertex")


def _positive_cycle(n: int, edge_gen, alphas) -> Optional[List[Tuple[int, int]]]:
    adj = {i: [j for j in range(n) if j != i and alphas[edge_gen[(i, j)]] > 0] for i in range(n)}
    state = {i: 0 for i in range(n)}
    parent: Dict[int, int] = {}
    for start in range(n):
        if state[start]:
            continue
        stack = [(start, iter(adj[start]))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if state[nxt] == 0:
                    state[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
                if state[nxt] == 1:
                    cycle = [(node, nxt)]
                    cur = node
                    while cur != nxt:
                        cycle.append((parent[cur], cur))
                        cur = parent[cur]
                    cycle.reverse()
                    return cycle
            if not advanced:
                state[node] = 2
                stack.pop()
        state[start] = 2
    return None


def extremes_on_polytope(sigma_vertices: Sequence[RVec], Z: Zonotope):
    """Vertex nearest the zonotope and the vertex set spanning the farthest face.

    Needs every vertex difference among the generators; then the distance
    function is convex along cell edges in a way that puts its minimum at a
    vertex and makes the maximizers a face.
    """
    verts = list(sigma_vertices)
    ok, pair = richness(Z.generators, verts, "sufficient")
    if not ok:
        raise ValueError(f"generator set is not rich enough for this cell: missing difference for {pair}")
    values = [sq_distance(v, Z) for v in verts]
    mx = max(values)
    mn = min(values)
    min_vertex = verts[values.index(mn)]
    max_face = tuple(v for v, val in zip(verts, values) if val == mx)
    return min_vertex, max_face


def nf_chamber_check(v: RVec, Z: Zonotope, sys: CoxeterSystem) -> Tuple[RVec, bool]:
    """Split v into foot plus normal and test chamber compatibility.

    With a reflection-and-negation invariant zonotope, every closed Weyl
    chamber containing v must contain the normal part n = v - foot.  Returns
    (n, ok) where ok reports that containment over all chambers.
    """
    if sys.kind != "finite":
        raise ValueError("chamber compatibility needs a finite reflection group")
    if v.form != Z.form or sys.form != Z.form:
        raise ValueError("point, zonotope, and group must share one form")
    mats = weyl_matrices(sys)
    gen_coords = {g.coords for g in Z.generators}
    for g in Z.generators:
        if tuple(-c for c in g.coords) not in gen_coords:
            raise ValueError("zonotope is not negation invariant")
        for m in mats:
            if mat_vec(m, g.coords) not in gen_coords:
                raise ValueError("zonotope is not invariant under the reflection group")
    n = v - project(v, Z).point
    ok = True
    for m in mats:
        image = mat_vec(m, v.coords)
        if all(c >= 0 for c in image):
            if any(c < 0 for c in mat_vec(m, n.coords)):
                ok = False
                break
    return n, ok


def hash_sum(d1: Sequence[RVec], d2: Sequence[RVec]) -> Tuple[RVec, ...]:
    """Pairwise sums together with both inputs, deduplicated, zero dropped."""
    out: Dict[Tuple[Fraction, ...], RVec] = {}
    for g in itertools.chain(d1, d2, (a + b for a in d1 for b in d2)):
        if not g.is_zero():
            out.setdefault(g.coords, g)
    return tuple(out[c] for c in sorted(out))


def richness(D: Sequence[RVec], target, level: str):
    """Does D contain all difference vectors the level demands on the target?

    Level "sufficient" takes a polytope (vertex list) and demands every
    vertex difference.  Levels "almost" and "rich" take a chamber ball and
    demand differences of distinct vertex pairs sharing a cell, respectively
    pairs whose closed stars share a vertex.  Returns (ok, counterexample).
    """
    if isinstance(D, Zonotope):
        D = D.generators
    have = {g.coords for g in D}
    if level == "sufficient":
        verts = [v.coords for v in target]
        for a, b in itertools.permutations(verts, 2):
            if tuple(y - x for x, y in zip(a, b)) not in have:
                return False, (a, b)
        return True, None
    if level not in ("almost", "rich"):
        raise ValueError(f"level must be 'sufficient', 'almost', or 'rich', got {level!r}")
    if not isinstance(target, AffineBall):
        raise ValueError("levels 'almost' and 'rich' need a chamber ball target")
    cx = target.complex
    pairs = set()
    if level == "almost":
        for cell in cx.cells:
            pairs.update(itertools.permutations(cell, 2))
    else:
        closed_nbr = {v: {v} for v in target.typ}
        for cell in cx.cells:
            for a, b in itertools.permutations(cell, 2):
                closed_nbr[a].add(b)
        for u in target.typ:
            for a, b in itertools.permutations(closed_nbr[u], 2):
                pairs.add((a, b))
    for a, b in sorted(pairs):
        if tuple(y - x for x, y in zip(a, b)) not in have:
            return False, (a, b)
    return True, None
