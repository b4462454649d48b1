import itertools
import random
from fractions import Fraction

import pytest

from twinmorse.coxeter import (
    CoxeterSystem,
    affine_ball,
    affine_cartan,
    finite_cartan,
    mat_vec,
    rich_set,
    weyl_matrices,
)
from twinmorse.qspace import BilinearForm, identity_form, vec
from twinmorse.zonotope import (
    Zonotope,
    contains,
    contains_certificate,
    extremes_on_polytope,
    face_of_direction,
    hash_sum,
    nf_chamber_check,
    parallel_translate,
    project,
    richness,
    sq_distance,
)

E1 = identity_form(1)
E2 = identity_form(2)


def v1(a):
    return vec(E1, a)


def v2(a, b):
    return vec(E2, a, b)


def unit_square():
    return Zonotope((v2(1, 0), v2(0, 1)))


def reconstruct(cert, Z):
    out = vec(Z.form, *([0] * Z.dim))
    for a, g in zip(cert, Z.generators):
        out = out + g.scaled(a)
    return out


QUARTERS = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]


def test_contains_origin_and_full_sum():
    Z = unit_square()
    for x in [v2(0, 0), v2(1, 1), v2("1/2", "1/3")]:
        cert = contains_certificate(x, Z)
        assert cert is not None
        assert reconstruct(cert, Z) == x
        assert all(0 <= a <= 1 for a in cert)
    assert contains_certificate(v2(0, 0), Z) == (0, 0)
    assert contains_certificate(v2(1, 1), Z) == (1, 1)


def test_contains_rejects_outside_point():
    assert not contains(v2(2, 0), unit_square())
    assert contains_certificate(v2(2, 0), unit_square()) is None
    assert not contains(v2("1/2", "-1/100"), unit_square())


def test_contains_needs_matching_form():
    b2 = BilinearForm([[1, 1], [1, 2]])
    with pytest.raises(ValueError):
        contains(vec(b2, 0, 0), unit_square())


def test_contains_degenerate_generators():
    # collinear generators with opposite directions plus a zero generator
    Z = Zonotope((v2(2, 1), v2(-4, -2), v2(0, 0)))
    assert contains(v2(2, 1), Z)
    assert contains(v2(-4, -2), Z)
    assert contains(v2(-2, -1), Z)
    assert not contains(v2(2, 2), Z)
    assert not contains(v2(3, "3/2"), Z)
    only_zero = Zonotope((v2(0, 0),))
    assert contains(v2(0, 0), only_zero)
    assert not contains(v2(0, 1), only_zero)


def test_contains_seeded_reconstruction():
    rng = random.Random(7)
    for _ in range(60):
        dim = rng.choice([1, 2])
        form = E1 if dim == 1 else E2
        gens = tuple(
            vec(form, *[rng.randint(-3, 3) for _ in range(dim)])
            for _ in range(rng.randint(1, 6))
        )
        Z = Zonotope(gens)
        alphas = [rng.choice(QUARTERS) for _ in gens]
        x = reconstruct(alphas, Z)
        cert = contains_certificate(x, Z)
        assert cert is not None
        assert reconstruct(cert, Z) == x
        assert all(0 <= a <= 1 for a in cert)


def test_face_of_direction_square():
    Z = unit_square()
    edge = face_of_direction(v2(1, 0), Z)
    assert [g.coords for g in edge.active] == [(0, 1)]
    assert edge.shift == v2(1, 0)
    corner = face_of_direction(v2(1, 1), Z)
    assert corner.active == ()
    assert corner.shift == v2(1, 1)
    assert corner.witness == v2(1, 1)


def test_face_of_direction_perpendicular_and_zero():
    Z = Zonotope((v2(1, 0),))
    whole = face_of_direction(v2(0, 1), Z)
    assert [g.coords for g in whole.active] == [(1, 0)]
    assert whole.shift == v2(0, 0)
    with pytest.raises(ValueError):
        face_of_direction(v2(0, 0), Z)


def test_face_maximizes_pairing_seeded():
    rng = random.Random(11)
    for _ in range(40):
        gens = tuple(v2(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(rng.randint(1, 6)))
        Z = Zonotope(gens)
        d = v2(rng.randint(-4, 4), rng.randint(-4, 4))
        if d.is_zero():
            continue
        face = face_of_direction(d, Z)
        best = max(d.pair(s) for s in Z.vertex_sums())
        assert d.pair(face.shift) == best
        for g in face.active:
            assert d.pair(g) == 0
            assert contains(face.shift + g, Z)
        assert contains(face.shift, Z)


def test_projection_inside_point_is_fixed():
    Z = unit_square()
    res = project(v2("1/2", "1/3"), Z)
    assert res.point == v2("1/2", "1/3")
    assert res.sq_dist == 0
    assert res.normal.is_zero()
    assert res.face.active == Z.generators
    assert res.face.shift.is_zero()


def test_projection_square_example():
    res = project(v2(2, "1/2"), unit_square())
    assert res.point == v2(1, "1/2")
    assert res.sq_dist == 1
    assert res.normal == v2(1, 0)
    assert [g.coords for g in res.face.active] == [(0, 1)]
    assert res.face.shift == v2(1, 0)


def test_projection_line_example():
    Z = Zonotope((v1(3), v1(-3)))
    res = project(v1(5), Z)
    assert res.point == v1(3)
    assert res.sq_dist == 4
    assert res.face.active == ()
    low = project(v1(-5), Z)
    assert low.point == v1(-3)
    assert low.sq_dist == 4


def random_zonotope(rng, form):
    gens = tuple(
        vec(form, *[Fraction(rng.randint(-6, 6), rng.randint(1, 2)) for _ in range(form.dim)])
        for _ in range(rng.randint(1, 7))
    )
    return Zonotope(gens)


def test_projection_variational_inequality_seeded():
    # pairing nonpositively against every point of Z certifies the projection
    b2 = BilinearForm([[1, 1], [1, 2]])
    rng = random.Random(23)
    for form in (E1, E2, b2):
        for _ in range(40):
            Z = random_zonotope(rng, form)
            x = vec(form, *[Fraction(rng.randint(-20, 20), rng.randint(1, 3)) for _ in range(form.dim)])
            res = project(x, Z)
            assert contains(res.point, Z)
            assert res.sq_dist == (x - res.point).norm_sq()
            for s in Z.vertex_sums():
                assert (x - res.point).pair(s - res.point) <= 0


def test_projection_is_a_retraction_seeded():
    rng = random.Random(31)
    for _ in range(30):
        Z = random_zonotope(rng, E2)
        x = v2(rng.randint(-15, 15), rng.randint(-15, 15))
        p = project(x, Z).point
        again = project(p, Z)
        assert again.point == p
        assert again.sq_dist == 0


def test_zero_distance_iff_member_seeded():
    rng = random.Random(43)
    for _ in range(60):
        Z = random_zonotope(rng, E2)
        x = v2(Fraction(rng.randint(-8, 8), 2), Fraction(rng.randint(-8, 8), 2))
        assert (sq_distance(x, Z) == 0) == contains(x, Z)


def a2_rich_zonotope(radius=4):
    sys = CoxeterSystem(affine_cartan("A2"))
    ball = affine_ball(sys, radius)
    diffs = sorted(rich_set(ball, "rich"))
    return sys, ball, Zonotope(tuple(vec(sys.form, *d) for d in diffs))


def test_translate_missing_difference_vector():
    Z = unit_square()
    sigma = [v2(0, 0), v2(1, 1)]
    with pytest.raises(ValueError, match="missing difference"):
        parallel_translate(v2(1, 0), sigma, Z)


def test_translate_rejects_outside_point():
    Z = unit_square()
    with pytest.raises(ValueError, match="not in the zonotope"):
        parallel_translate(v2(5, 5), [v2(0, 0)], Z)


def test_translate_origin_short_segment():
    Z = Zonotope((v1(1), v1(-1)))
    sigma = [v1(0), v1(1)]
    idx = parallel_translate(v1(0), sigma, Z)
    diff = sigma[1 - idx] - sigma[idx]
    assert contains(v1(0) + diff, Z)


def valid_translate_vertices(x, verts, Z):
    good = []
    for i, v in enumerate(verts):
        others = [w - v for j, w in enumerate(verts) if j != i]
        ok = True
        for k in range(len(others) + 1):
            for combo in itertools.combinations(others, k):
                s = x
                for d in combo:
                    s = s + d
                if not contains(s, Z):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            good.append(i)
    return good


def test_translate_seeded_against_vertex_oracle():
    sys, ball, Z = a2_rich_zonotope()
    cells = ball.complex.sorted_cells()
    rng = random.Random(97)
    for _ in range(40):
        alphas = [rng.choice(QUARTERS) for _ in Z.generators]
        x = reconstruct(alphas, Z)
        cell = cells[rng.randrange(len(cells))]
        verts = [vec(sys.form, *u) for u in sorted(cell)]
        idx = parallel_translate(x, verts, Z)
        good = valid_translate_vertices(x, verts, Z)
        assert good
        assert idx in good


def test_extremes_line_example():
    Z = Zonotope((v1(1), v1(-1), v1(2), v1(-2)))
    mn, mx = extremes_on_polytope([v1(4), v1(6)], Z)
    assert mn == v1(4)
    assert mx == (v1(6),)


def test_extremes_inside_and_degenerate():
    Z = Zonotope((v1(1), v1(-1), v1(2), v1(-2)))
    mn, mx = extremes_on_polytope([v1(-1), v1(1)], Z)
    assert mn == v1(-1)
    assert mx == (v1(-1), v1(1))
    single = extremes_on_polytope([v1(5)], Z)
    assert single == (v1(5), (v1(5),))


def test_extremes_needs_rich_generators():
    Z = Zonotope((v1(1), v1(-1)))
    with pytest.raises(ValueError, match="not rich enough"):
        extremes_on_polytope([v1(0), v1("1/2")], Z)


def weyl_orbit_zonotope(name, seed_coords):
    sys = CoxeterSystem(finite_cartan(name))
    orbit = set()
    for m in weyl_matrices(sys):
        u = mat_vec(m, seed_coords)
        orbit.add(u)
        orbit.add(tuple(-c for c in u))
    return sys, Zonotope(tuple(vec(sys.form, *u) for u in sorted(orbit)))


def test_nf_chamber_check_examples():
    sys, Z = weyl_orbit_zonotope("A2", (Fraction(1), Fraction(1, 2)))
    inside, ok = nf_chamber_check(vec(sys.form, 0, 0), Z, sys)
    assert inside.is_zero() and ok
    n, ok = nf_chamber_check(vec(sys.form, 3, 2), Z, sys)
    assert ok
    assert n == vec(sys.form, 3, 2) - project(vec(sys.form, 3, 2), Z).point
    on_wall, ok = nf_chamber_check(vec(sys.form, 2, 0), Z, sys)
    assert ok
    # the wall through v keeps the normal part on the same wall
    assert on_wall.coords[1] == 0


def test_nf_chamber_check_seeded():
    cases = [("A2", (Fraction(1), Fraction(1, 2))), ("B2", (Fraction(1), Fraction(1))), ("G2", (Fraction(1, 2), Fraction(1)))]
    rng = random.Random(5)
    for name, seed_coords in cases:
        sys, Z = weyl_orbit_zonotope(name, seed_coords)
        for _ in range(40):
            v = vec(sys.form, Fraction(rng.randint(-9, 9), rng.randint(1, 3)), Fraction(rng.randint(-9, 9), rng.randint(1, 3)))
            n, ok = nf_chamber_check(v, Z, sys)
            assert ok
            assert n == v - project(v, Z).point


def test_nf_chamber_check_invariance_guards():
    sys = CoxeterSystem(finite_cartan("A2"))
    with pytest.raises(ValueError, match="negation"):
        nf_chamber_check(vec(sys.form, 1, 1), Zonotope((vec(sys.form, 1, 0),)), sys)
    lop = Zonotope((vec(sys.form, 1, 0), vec(sys.form, -1, 0)))
    with pytest.raises(ValueError, match="not invariant"):
        nf_chamber_check(vec(sys.form, 1, 1), lop, sys)
    with pytest.raises(ValueError, match="finite"):
        affine = CoxeterSystem(affine_cartan("A2"))
        _, Z = weyl_orbit_zonotope("A2", (Fraction(1), Fraction(1, 2)))
        nf_chamber_check(vec(affine.form, 1, 1), Z, affine)
    with pytest.raises(ValueError, match="form"):
        nf_chamber_check(v2(1, 1), unit_square(), sys)


def test_hash_sum_line_example():
    D = (v1(1), v1(-1), v1(2), v1(-2))
    out = hash_sum(D, D)
    assert {g.coords[0] for g in out} == {-4, -3, -2, -1, 1, 2, 3, 4}
    assert all(not g.is_zero() for g in out)
    assert hash_sum(D, ()) == tuple(sorted(D, key=lambda g: g.coords))
    assert hash_sum((), D) == tuple(sorted(D, key=lambda g: g.coords))


def test_hash_sum_of_cell_differences_is_neighbor_differences():
    # doubling the one-cell difference set reaches the common-neighbor set
    sys = CoxeterSystem(affine_cartan("A2"))
    ball = affine_ball(sys, 4)
    almost = sorted(rich_set(ball, "almost"))
    rich = rich_set(ball, "rich")
    D = tuple(vec(sys.form, *d) for d in almost)
    assert {g.coords for g in hash_sum(D, D)} == rich


def all_member(points, Z):
    return all(contains(p, Z) for p in points)


def test_minkowski_union_observation():
    d1 = (v2(1, 0),)
    d2 = (v2(0, 1),)
    union = Zonotope(tuple({g.coords: g for g in d1 + d2}.values()))
    minkowski = Zonotope(d1 + d2)
    assert all_member(union.vertex_sums(), minkowski)
    assert all_member(minkowski.vertex_sums(), union)
    hashed = Zonotope(hash_sum(d1, d2))
    assert all_member(union.vertex_sums(), hashed)

    # overlapping generator lists: the set union loses multiplicity
    same = (v2(1, 0),)
    minkowski2 = Zonotope(same + same)
    union2 = Zonotope(same)
    assert contains(v2(2, 0), minkowski2)
    assert not contains(v2(2, 0), union2)
    assert all_member(union2.vertex_sums(), minkowski2)
    assert all_member(minkowski2.vertex_sums(), Zonotope(hash_sum(same, same)))


def test_richness_polytope_level():
    D = (v2(1, 0), v2(0, 1))
    ok, pair = richness(D, [v2(0, 0), v2(1, 1)], "sufficient")
    assert not ok
    assert pair == ((0, 0), (1, 1))
    ok, pair = richness(D, [v2(3, 5)], "sufficient")
    assert ok and pair is None
    ok, pair = richness((v2(1, 1), v2(-1, -1)), [v2(0, 0), v2(1, 1)], "sufficient")
    assert ok and pair is None


def test_richness_ball_levels():
    sys, ball, Z = a2_rich_zonotope()
    ok, pair = richness(Z, ball, "rich")
    assert ok and pair is None
    ok, pair = richness(Z, ball, "almost")
    assert ok and pair is None
    almost = tuple(vec(sys.form, *d) for d in sorted(rich_set(ball, "almost")))
    ok, pair = richness(almost, ball, "almost")
    assert ok and pair is None
    ok, pair = richness(almost, ball, "rich")
    assert not ok
    a, b = pair
    missing = tuple(y - x for x, y in zip(a, b))
    assert missing in rich_set(ball, "rich")
    assert missing not in rich_set(ball, "almost")


def test_richness_level_guards():
    D = (v2(1, 0),)
    with pytest.raises(ValueError, match="level"):
        richness(D, [v2(0, 0)], "extreme")
    with pytest.raises(ValueError, match="ball"):
        richness(D, [v2(0, 0)], "rich")


def test_zonotope_validation():
    with pytest.raises(ValueError, match="generator"):
        Zonotope(())
    with pytest.raises(ValueError, match="forms"):
        Zonotope((v2(1, 0), vec(BilinearForm([[1, 1], [1, 2]]), 1, 0)))
    with pytest.raises(ValueError, match="dimension"):
        Zonotope((vec(identity_form(3), 1, 0, 0),))
    with pytest.raises(ValueError, match="16"):
        Zonotope(tuple(v2(i, 1) for i in range(17))).vertex_sums()
