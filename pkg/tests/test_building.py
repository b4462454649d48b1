import itertools
from fractions import Fraction

import pytest

from twinmorse.building import (
    FlagBuilding,
    Pole,
    build_flag,
    build_join,
    delta_matrix,
    frame_chambers,
    frame_through,
    frame_vertices,
    hemisphere_complexes,
    projection,
    retraction,
    standard_frame,
    vertex_directions,
    weyl_distance_flags,
    weyl_length,
)
from twinmorse.complexes import homology, homology_concentrated, reduced_rank
from twinmorse.coxeter import CoxeterSystem, finite_cartan, finite_complex
from twinmorse.gfq import Field, rref


def identity_delta(bldg):
    return tuple(tuple(range(n + 1)) for n, _ in bldg.factors)


def local_swap(n, k):
    p = list(range(n + 1))
    p[k], p[k + 1] = p[k + 1], p[k]
    return tuple(p)


def chamber_graph(bldg):
    adj = {c: [] for c in bldg.chambers}
    for c, d in itertools.combinations(bldg.chambers, 2):
        shared = c & d
        if len(shared) == len(c) - 1:
            t = bldg.typ(next(iter(c - shared)))
            adj[c].append((d, t))
            adj[d].append((c, t))
    return adj


def bfs_deltas(bldg, adj, start):
    """Gallery-product oracle: fold edge transpositions along a shortest path."""
    out = {start: identity_delta(bldg)}
    frontier = [start]
    while frontier:
        nxt = []
        for c in frontier:
            for d, t in adj[c]:
                if d not in out:
                    fi = bldg.factor_of_type(t)
                    k = t - bldg.offsets[fi]
                    parts = list(out[c])
                    s = local_swap(bldg.factors[fi][0], k)
                    parts[fi] = tuple(parts[fi][s[i]] for i in range(len(s)))
                    out[d] = tuple(parts)
                    nxt.append(d)
        frontier = nxt
    return out


def test_build_counts():
    a1 = build_flag(1, 3)
    assert a1.complex.f_vector() == (4,)
    assert a1.complex.dim() == 0
    assert build_flag(1, 4).complex.f_vector() == (5,)
    a2 = build_flag(2, 2)
    assert a2.complex.f_vector() == (14, 21)
    a3 = build_flag(3, 2)
    assert a3.complex.f_vector() == (65, 315, 315)
    assert tuple(len(d) for d in a3.by_dim[0]) == (15, 35, 15)


def test_build_guardrails():
    with pytest.raises(ValueError, match="rank"):
        build_flag(4, 2)
    with pytest.raises(ValueError, match="guardrail"):
        build_flag(3, 3)
    with pytest.raises(ValueError):
        build_flag(2, 5)


def test_thickness():
    build_flag(2, 2).check_thick()
    build_flag(2, 3).check_thick()
    build_join((1, 2), (1, 2)).check_thick()


def test_weyl_distance_trivials():
    b = build_flag(2, 2)
    c = b.chambers[0]
    assert weyl_distance_flags(b, c, c) == ((0, 1, 2),)
    with pytest.raises(ValueError, match="chambers"):
        weyl_distance_flags(b, frozenset([next(iter(c))]), c)


def test_weyl_distance_adjacent_and_opposite():
    b = build_flag(2, 2)
    point = next(v for v in b.chambers[0] if b.typ(v) == 0)
    sharing = [c for c in b.chambers if point in c]
    assert len(sharing) == 3
    c, d = sharing[0], sharing[1]
    # same point, distinct lines: the line type swaps
    assert weyl_distance_flags(b, c, d) == ((0, 2, 1),)
    far = [
        d for d in b.chambers
        if weyl_length(weyl_distance_flags(b, b.chambers[0], d)) == 3
    ]
    assert far
    for d in far:
        assert weyl_distance_flags(b, b.chambers[0], d) == ((2, 1, 0),)


def test_weyl_distance_matches_gallery_oracle():
    for bldg in [build_flag(2, 2), build_join((1, 2), (1, 2))]:
        adj = chamber_graph(bldg)
        for c in bldg.chambers:
            oracle = bfs_deltas(bldg, adj, c)
            for d in bldg.chambers:
                assert weyl_distance_flags(bldg, c, d) == oracle[d]
    a3 = build_flag(3, 2)
    adj = chamber_graph(a3)
    for c in a3.chambers[:5]:
        oracle = bfs_deltas(a3, adj, c)
        for d in a3.chambers:
            assert weyl_distance_flags(a3, c, d) == oracle[d]


def test_weyl_distance_inverse_symmetry():
    b = build_flag(2, 3)
    for c in b.chambers[:6]:
        for d in b.chambers[::7]:
            fwd = weyl_distance_flags(b, c, d)[0]
            back = weyl_distance_flags(b, d, c)[0]
            inv = [0, 0, 0]
            for i, v in enumerate(fwd):
                inv[v] = i
            assert back == tuple(inv)


def test_projection_trivials_and_gate_property():
    b = build_flag(2, 2)
    for c in b.chambers[:4]:
        assert projection(b, c, b.chambers[10]) == c
        for v in c:
            assert projection(b, frozenset([v]), c) == c
    # gate property: distances to cofaces of sigma split through the projection
    for sigma in b.complex.sorted_cells():
        for c in b.chambers[::5]:
            pr = projection(b, sigma, c)
            lpr = weyl_length(weyl_distance_flags(b, c, pr))
            for e in b.chambers:
                if sigma <= e:
                    via = lpr + weyl_length(weyl_distance_flags(b, pr, e))
                    assert weyl_length(weyl_distance_flags(b, c, e)) == via


def test_standard_frame_apartment_is_coxeter_complex():
    b = build_flag(2, 2)
    frame = standard_frame(b)
    verts = frame_vertices(b, frame)
    assert len(verts) == 6
    from twinmorse.complexes import full_subcomplex

    ap = full_subcomplex(b.complex, verts)
    model = finite_complex(CoxeterSystem(finite_cartan("A2")))
    assert ap.f_vector() == model.f_vector()
    assert homology(ap) == homology(model)
    assert len(frame_chambers(b, frame)) == 6


def test_frame_validation_and_adapted_frame():
    b = build_flag(2, 2)
    f = Field(2)
    bad = ((rref(f, [(1, 0, 0)]), rref(f, [(0, 1, 0)]), rref(f, [(1, 1, 0)])),)
    with pytest.raises(ValueError, match="independent"):
        frame_vertices(b, bad)
    with pytest.raises(ValueError, match="rank"):
        frame_vertices(b, ((rref(f, [(1, 0, 0)]),),))
    for c in b.chambers[:6]:
        frame = frame_through(b, c)
        assert c <= frozenset(frame_vertices(b, frame))
        assert c in frame_chambers(b, frame)


def all_frames_a2f2(b):
    f = b.fields[0]
    points = list(b.by_dim[0][0])
    frames = []
    for trio in itertools.combinations(points, 3):
        stacked = [row for line in trio for row in line]
        if len(rref(f, stacked)) == 3:
            frames.append((trio,))
    return frames


def test_retraction_trivials():
    b = build_flag(2, 2)
    c = b.chambers[0]
    frame = frame_through(b, c)
    for cell in frame_chambers(b, frame):
        assert retraction(b, frame, c, cell) == cell
    for v in sorted(c):
        assert retraction(b, frame, c, frozenset([v])) == frozenset([v])
    outside = next(d for d in b.chambers if d not in frame_chambers(b, frame))
    img = retraction(b, frame, c, outside)
    assert weyl_distance_flags(b, c, img) == weyl_distance_flags(b, c, outside)
    assert {b.typ(v) for v in img} == {b.typ(v) for v in outside}
    with pytest.raises(ValueError, match="center"):
        retraction(b, frame, outside, c)


def test_retraction_preserves_distances_on_every_apartment():
    b = build_flag(2, 2)
    frames = all_frames_a2f2(b)
    assert len(frames) == 28
    c = b.chambers[0]
    home = frame_through(b, c)
    for frame in frames:
        chambers = frame_chambers(b, frame)
        if c not in chambers:
            continue
        images = [retraction(b, home, c, e) for e in chambers]
        assert len(set(images)) == len(chambers)
        assert set(images) == set(frame_chambers(b, home))
        for e, img in zip(chambers, images):
            assert weyl_distance_flags(b, c, img) == weyl_distance_flags(b, c, e)


def test_vertex_directions_on_carrier():
    b = build_flag(2, 2)
    c = b.chambers[0]
    dirs = vertex_directions(b, c)
    for v in c:
        t = b.typ(v)
        assert dirs[v].coords == tuple(
            Fraction(1 if i == t else 0) for i in range(b.sys.rank)
        )


def test_hemisphere_point_pole_a2f2():
    b = build_flag(2, 2)
    h = hemisphere_complexes(b, Pole(b.chambers[0], (1, 0)))
    assert h["closed"].f_vector() == (10, 12)
    assert homology(h["closed"]) == [(0, 0, ()), (1, 3, ())]
    assert len(h["equator"].cells) == 0
    assert h["open"].cells == h["closed"].cells
    assert len(h["horizontal"].cells) == 0
    assert h["vertical"].f_vector() == b.complex.f_vector()
    dual = hemisphere_complexes(b, Pole(b.chambers[0], (0, 1)))
    assert dual["closed"].f_vector() == (10, 12)
    assert homology(dual["closed"]) == [(0, 0, ()), (1, 3, ())]


def test_hemisphere_point_pole_a2f3():
    b = build_flag(2, 3)
    h = hemisphere_complexes(b, Pole(b.chambers[0], (1, 0)))
    assert h["closed"].f_vector() == (21, 36)
    assert homology(h["closed"]) == [(0, 0, ()), (1, 16, ())]
    assert len(h["equator"].cells) == 0


def test_hemisphere_generic_pole_has_empty_equator():
    cases = [
        (build_flag(2, 2), (1, 2)),
        (build_flag(2, 3), (2, 3)),
        (build_flag(3, 2), (1, 2, 3)),
    ]
    for b, coeffs in cases:
        h = hemisphere_complexes(b, Pole(b.chambers[0], coeffs))
        assert len(h["equator"].cells) == 0
        assert h["open"].cells == h["closed"].cells


def test_hemisphere_join_building():
    for q, iso_rank, cycle_rank in [(2, 1, 2), (3, 2, 6)]:
        j = build_join((1, q), (1, q))
        assert j.complex.f_vector() == ((q + 1) * 2, (q + 1) ** 2)
        h = hemisphere_complexes(j, Pole(j.chambers[0], (1, 0)))
        assert h["closed"].f_vector() == (2 * q + 1, q * (q + 1))
        assert homology(h["closed"]) == [(0, 0, ()), (1, cycle_rank, ())]
        assert h["open"].f_vector() == (q,)
        assert homology(h["open"]) == [(0, iso_rank, ())]
        # pole sits on the first factor, so the second factor is horizontal
        assert h["horizontal"].f_vector() == (q + 1,)
        assert {j.typ(v) for v in h["horizontal"].vertices()} == {1}
        assert h["vertical"].f_vector() == (q + 1,)
        assert h["vertical"].dim() == 0
        flipped = hemisphere_complexes(j, Pole(j.chambers[0], (0, 1)))
        assert {j.typ(v) for v in flipped["horizontal"].vertices()} == {0}


def test_hemisphere_middle_pole_a3f2_equator():
    b = build_flag(3, 2)
    h = hemisphere_complexes(b, Pole(b.chambers[0], (0, 1, 0)))
    assert h["equator"].f_vector() == (18,)
    assert len(h["horizontal"].cells) == 0
    assert h["vertical"].f_vector() == b.complex.f_vector()


def test_pole_validation():
    b = build_flag(2, 2)
    c = b.chambers[0]
    v = next(iter(c))
    with pytest.raises(ValueError, match="chamber"):
        hemisphere_complexes(b, Pole(frozenset([v]), (1, 0)))
    with pytest.raises(ValueError, match="outside"):
        hemisphere_complexes(b, Pole(c, (-1, 2)))
    with pytest.raises(ValueError, match="outside"):
        hemisphere_complexes(b, Pole(c, (0, 0)))
    with pytest.raises(ValueError, match="coefficient"):
        hemisphere_complexes(b, Pole(c, (1, 0, 0)))


def euler_rank(cx, top):
    chi = sum((-1) ** i * n for i, n in enumerate(cx.f_vector()))
    return (-1) ** top * (chi - 1)


def test_schulz_closed_hemispheres():
    cases = []
    for b in [build_flag(2, 2), build_flag(2, 3), build_flag(3, 2)]:
        vertex_pole = tuple(1 if i == 0 else 0 for i in range(b.sys.rank))
        generic = tuple(range(1, b.sys.rank + 1))
        cases.extend([(b, vertex_pole), (b, generic)])
    for b, coeffs in cases:
        top = b.complex.dim()
        h = hemisphere_complexes(b, Pole(b.chambers[0], coeffs))
        closed = h["closed"]
        assert homology_concentrated(closed, top)
        rank = reduced_rank(closed, top)
        assert rank > 0
        assert rank == euler_rank(closed, top)


def test_schulz_a3f2_vertex_pole_rank():
    b = build_flag(3, 2)
    h = hemisphere_complexes(b, Pole(b.chambers[0], (1, 0, 0)))
    assert h["closed"].f_vector() == (50, 196, 168)
    assert homology(h["closed"]) == [(0, 0, ()), (1, 0, ()), (2, 21, ())]


def test_schulz_open_hemispheres():
    b = build_flag(2, 2)
    h = hemisphere_complexes(b, Pole(b.chambers[0], (1, 0)))
    assert homology_concentrated(h["open"], h["vertical"].dim())
    for q in (2, 3):
        j = build_join((1, q), (1, q))
        h = hemisphere_complexes(j, Pole(j.chambers[0], (1, 0)))
        assert h["vertical"].dim() == 0
        assert homology_concentrated(h["open"], 0)
        assert reduced_rank(h["open"], 0) == q - 1
    a1 = build_flag(1, 3)
    h = hemisphere_complexes(a1, Pole(a1.chambers[0], (1,)))
    assert h["closed"].f_vector() == (3,)
    assert homology(h["closed"]) == [(0, 2, ())]


def test_solomon_tits_top_concentration():
    for n, q, expect in [(2, 2, 8), (2, 3, 27), (3, 2, 64)]:
        b = build_flag(n, q)
        top = b.complex.dim()
        assert homology_concentrated(b.complex, top)
        rank = reduced_rank(b.complex, top)
        assert rank == expect
        assert rank == euler_rank(b.complex, top)
