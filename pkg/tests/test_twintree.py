"""Twin tree units: words, distances, codistance, Birkhoff factorization."""

import json
import random

import pytest

from twinmorse.gfq import Field, LPoly, nullspace
from twinmorse.twintree import (
    CodistValue,
    LaurentMat,
    StdTwinApartment,
    TreeVertex,
    TwinTree,
    bruhat,
    mat_from_json,
    mat_to_json,
    panel_vertex_type,
)


@pytest.fixture(scope="module")
def t2():
    return TwinTree(2)


@pytest.fixture(scope="module")
def apt2(t2):
    return StdTwinApartment(t2)


def rand_poly(f, rng, width, shift=0):
    return LPoly.from_dict(f, {e + shift: rng.randrange(f.q) for e in range(width)})


def rand_borel_plus(tree, rng, width=3):
    # rejection sampling for a unit constant determinant, then normalized
    f = tree.field
    while True:
        a = rand_poly(f, rng, width)
        d = rand_poly(f, rng, width)
        b = rand_poly(f, rng, width)
        c = rand_poly(f, rng, width, 1)
        det = a * d - b * c
        if not det.is_zero() and det.is_unit() and det.degree() == 0:
            scale = LPoly.const(f, f.inv(det.coeff(0)))
            return LaurentMat(a * scale, b, c * scale, d)


def rand_borel_minus(tree, rng, width=3):
    return tree.phi(rand_borel_plus(tree, rng, width))


def words_up_to(n):
    out = [CodistValue(0, None)]
    out.extend(CodistValue(length, first) for length in range(1, n + 1) for first in (0, 1))
    return out


def splitting_gap_oracle(tree, A, B):
    """Section-counting route to the splitting gap of a lattice pair.

    For each twist k it counts, in a bounded coefficient window over the
    inverse-variable ring, the vectors m with N m divisible by t^-k, where
    N = adj(A) B.  The first twist admitting a section pins the larger
    exponent, the determinant valuation supplies the sum, and the window is
    validated by recomputing with a wider one.  Shares nothing with the
    column reduction used by the library.
    """
    f = tree.field
    adj = (A[3], -A[1], -A[2], A[0])
    n = (
        adj[0] * B[0] + adj[1] * B[2],
        adj[0] * B[1] + adj[1] * B[3],
        adj[2] * B[0] + adj[3] * B[2],
        adj[2] * B[1] + adj[3] * B[3],
    )
    det = n[0] * n[3] - n[1] * n[2]
    assert not det.is_zero()
    span = max(
        max(abs(p.degree()), abs(p.valuation())) for p in n if not p.is_zero()
    )

    def section_dim(k, window):
        exps = list(range(-window, 1))
        nvars = 2 * len(exps)
        eqs = []
        for r in (0, 1):
            left, right = n[2 * r], n[2 * r + 1]
            if left.is_zero() and right.is_zero():
                continue
            lo = min(p.valuation() for p in (left, right) if not p.is_zero()) - window
            for e in range(lo, -k):
                row = [0] * nvars
                for i, x in enumerate(exps):
                    row[i] = left.coeff(e - x)
                    row[len(exps) + i] = right.coeff(e - x)
                if any(row):
                    eqs.append(row)
        return len(nullspace(f, eqs, nvars))

    def first_twist(window):
        for k in range(-2 * span - 3, 2 * span + 4):
            if section_dim(k, window) >= 1:
                return k
        raise AssertionError("no section found in the scanned twist range")

    kmin = first_twist(2 * span + 4)
    assert kmin == first_twist(2 * span + 8), "section window did not stabilize"
    e1 = -kmin
    return 2 * e1 - det.valuation()


def test_matrix_basics_and_serialization(t2):
    f = t2.field
    with pytest.raises(ValueError):
        LaurentMat(LPoly.one(f), LPoly.zero(f), LPoly.zero(f), LPoly.zero(f))
    g = t2.rep("+", ((1, 1), (0, 0), (1, 1)))
    assert g * g.inv() == LaurentMat.identity(f)
    assert g.subs_inv().subs_inv() == g
    data = json.loads(json.dumps(mat_to_json(g)))
    assert mat_from_json(data) == g


def test_borel_membership(t2):
    f = t2.field
    one, zero, t = LPoly.one(f), LPoly.zero(f), LPoly.t_power(f, 1)
    eye = LaurentMat.identity(f)
    assert t2.in_borel(eye, "+") and t2.in_borel(eye, "-")
    lower_t = LaurentMat(one, zero, t, one)
    assert t2.in_borel(lower_t, "+")
    assert not t2.in_borel(lower_t, "-")
    lower_const = LaurentMat(one, zero, one, one)
    assert not t2.in_borel(lower_const, "+")
    assert t2.in_borel(lower_const, "-")
    for j in (0, 1):
        assert not t2.in_borel(t2.s_hat(j), "+")
        assert not t2.in_borel(t2.s_hat(j), "-")


def test_word_validation(t2):
    with pytest.raises(ValueError):
        t2.chamber("+", ((1, 0), (1, 0)))
    with pytest.raises(ValueError):
        t2.chamber("x", ())
    with pytest.raises(ValueError):
        t2.chamber("+", ((1, 5),))


def test_ball_counts():
    for radius, want in ((0, 1), (1, 5), (2, 13), (3, 29), (4, 61)):
        assert len(TwinTree(2).ball("+", radius)) == want
    assert len(TwinTree(3).ball("-", 2)) == 25
    assert len(TwinTree(4).ball("+", 1)) == 9
    with pytest.raises(ValueError):
        TwinTree(4).ball("+", 9)


def test_delta_matches_construction_words(t2):
    for side in "+-":
        for ch in t2.ball(side, 3):
            tags = tuple(j for j, _ in ch.word)
            assert t2.matrix_delta(ch.rep, side).word() == tags


def test_delta_inverse_law(t2):
    ball = t2.ball("+", 2)
    for c in ball[::3]:
        for d in ball[::4]:
            assert t2.delta(c, d) == t2.delta(d, c).inverse()


def test_canonical_chamber_roundtrip(t2):
    rng = random.Random(5)
    for side in "+-":
        sampler = rand_borel_plus if side == "+" else rand_borel_minus
        for ch in t2.ball(side, 3)[::2]:
            g = ch.rep * sampler(t2, rng)
            assert t2.canonical_chamber(side, g).word == ch.word


def test_vertex_star(t2):
    for ch in t2.ball("+", 2):
        for typ in (0, 1):
            v = t2.vertex_of(ch, typ)
            star = t2.star(v)
            assert len({c.word for c in star}) == t2.q + 1
            assert any(c.word == ch.word for c in star)
    with pytest.raises(ValueError):
        t2.star(TreeVertex("+", ((1, 0),), panel_vertex_type(1)))


def test_vertex_distance_grid(t2, apt2):
    for side in "+-":
        for a in range(-3, 4):
            for b in range(-3, 4):
                got = t2.vertex_distance(apt2.vertex(side, a), apt2.vertex(side, b))
                assert got == abs(a - b)
    with pytest.raises(ValueError):
        t2.vertex_distance(apt2.vertex("+", 0), apt2.vertex("-", 0))


def test_codistance_frozen_values(t2):
    c0p, c0m = t2.fundamental("+"), t2.fundamental("-")
    assert t2.codistance(c0p, c0m) == CodistValue(0, None)
    assert t2.codistance(t2.chamber("+", ((1, 0),)), c0m) == CodistValue(1, 1)
    assert t2.codistance(t2.chamber("+", ((1, 0), (0, 0))), c0m) == CodistValue(2, 0)
    f = t2.field
    diag = LaurentMat(
        LPoly.t_power(f, 1), LPoly.zero(f), LPoly.zero(f), LPoly.t_power(f, -1)
    )
    assert t2.matrix_delta(diag, "+") == CodistValue(2, 1)
    with pytest.raises(ValueError):
        t2.codistance(c0m, c0p)


def test_apartment_codistance_grid(t2, apt2):
    for n in range(-3, 4):
        for m in range(-3, 4):
            w = t2.codelta_from(apt2.chamber("+", n), apt2.chamber("-", m))
            assert w.length == abs(n - m)
            assert t2.codelta_from(apt2.chamber("-", m), apt2.chamber("+", n)) == w.inverse()
    for m in range(-3, 4):
        w = t2.codelta_from(t2.fundamental("+"), apt2.chamber("-", m))
        if m != 0:
            assert w.first == (0 if m > 0 else 1)


def test_vertex_codistance_grid(t2, apt2):
    for a in range(-4, 5):
        for b in range(-3, 4):
            got = t2.vertex_codistance(apt2.vertex("+", a), apt2.vertex("-", b))
            assert got == abs(a - b)
    with pytest.raises(ValueError):
        t2.vertex_codistance(apt2.vertex("-", 0), apt2.vertex("+", 0))


def test_splitting_gap_against_section_oracle(t2, apt2):
    eye = LaurentMat.identity(t2.field)
    for a in range(-2, 3):
        for b in range(-2, 3):
            vp, vm = apt2.vertex("+", a), apt2.vertex("-", b)
            A = t2._vertex_mat("+", t2.rep("+", vp.word), vp.typ)
            B = t2._vertex_mat("-", t2.rep("-", vm.word), vm.typ)
            assert splitting_gap_oracle(t2, A, B) == abs(a - b)
    rng = random.Random(23)
    plus_chambers = t2.ball("+", 3)
    minus_chambers = t2.ball("-", 3)
    for _ in range(12):
        vp = t2.vertex_of(rng.choice(plus_chambers), rng.randrange(2))
        vm = t2.vertex_of(rng.choice(minus_chambers), rng.randrange(2))
        A = t2._vertex_mat("+", t2.rep("+", vp.word), vp.typ)
        B = t2._vertex_mat("-", t2.rep("-", vm.word), vm.typ)
        assert splitting_gap_oracle(t2, A, B) == t2.vertex_codistance(vp, vm)


def test_birkhoff_on_ball_representatives(t2):
    for ch in t2.ball("+", 3):
        w, bm, bp = t2.birkhoff(ch.rep)
        assert t2.in_borel(bm, "-") and t2.in_borel(bp, "+")
        assert bm * t2.standard_rep(w) * bp == ch.rep


@pytest.mark.parametrize("q", [2, 3])
def test_birkhoff_planted_recombinations(q):
    tree = TwinTree(q)
    rng = random.Random(100 + q)
    for trial in range(30):
        planted = rng.choice(words_up_to(4))
        m = (
            rand_borel_minus(tree, rng)
            * tree.standard_rep(planted)
            * rand_borel_plus(tree, rng)
        )
        w, bm, bp = tree.birkhoff(m)
        assert w == planted, (trial, planted, w)
        assert bm * tree.standard_rep(w) * bp == m


def test_birkhoff_of_standard_reps(t2):
    for w in words_up_to(5):
        got, bm, bp = t2.birkhoff(t2.standard_rep(w))
        assert got == w


@pytest.mark.parametrize("side", ["+", "-"])
def test_bruhat_planted_recombinations(t2, side):
    rng = random.Random(7 if side == "+" else 8)
    sampler = rand_borel_plus if side == "+" else rand_borel_minus
    for trial in range(25):
        planted = rng.choice(words_up_to(4))
        m = sampler(t2, rng) * t2.standard_rep(planted) * sampler(t2, rng)
        w, b1, b2 = bruhat(t2, m, side)
        assert w == planted, (trial, planted, w)
        assert t2.in_borel(b1, side) and t2.in_borel(b2, side)
        assert b1 * t2.standard_rep(w) * b2 == m


def test_bruhat_frozen_values(t2):
    rng = random.Random(3)
    w, _, _ = bruhat(t2, rand_borel_plus(t2, rng), "+")
    assert w == CodistValue(0, None)
    w, _, _ = bruhat(t2, t2.s_hat(1), "+")
    assert w == CodistValue(1, 1)
    f = t2.field
    diag = LaurentMat(
        LPoly.t_power(f, 1), LPoly.zero(f), LPoly.zero(f), LPoly.t_power(f, -1)
    )
    w, _, _ = bruhat(t2, diag, "+")
    assert w == CodistValue(2, 1)


def test_gallery_law_across_sides(t2):
    """Within a far vertex's panel, one chamber beats the rest by one."""
    vertices = {t2.vertex_of(ch, typ) for ch in t2.ball("+", 2) for typ in (0, 1)}
    targets = t2.ball("-", 2)[::3]
    for v in vertices:
        for d in targets:
            lengths = [t2.codelta_from(ch, d).length for ch in t2.star(v)]
            top = max(lengths)
            assert lengths.count(top) == 1
            assert all(l == top - 1 for l in lengths if l != top)
            best = t2.pr_panel(v, d)
            assert t2.codelta_from(best, d).length == top
    with pytest.raises(ValueError):
        t2.pr_panel(next(iter(vertices)), t2.fundamental("+"))


def test_retraction_preserves_center_distances(t2, apt2):
    """The twin retraction keeps every distance taken from its center."""
    for center_side, center_n in (("-", 0), ("-", 1), ("+", 0), ("+", -2)):
        center = apt2.chamber(center_side, center_n)
        for side in "+-":
            for x in t2.ball(side, 2)[::2]:
                image = t2.twin_retraction(center, x)
                assert image.side == side
                if side == center_side:
                    assert t2.delta(center, x) == t2.delta(center, image)
                else:
                    assert t2.codelta_from(center, x) == t2.codelta_from(center, image)


def test_retraction_fixes_the_apartment(t2, apt2):
    center = apt2.chamber("-", 0)
    for side in "+-":
        for n in range(-3, 4):
            ch = apt2.chamber(side, n)
            assert t2.twin_retraction(center, ch) == ch
            v = apt2.vertex(side, n)
            assert t2.twin_retraction(center, v) == v


def test_retraction_rejects_centers_off_the_apartment(t2):
    center = t2.chamber("+", ((1, 1),))
    with pytest.raises(ValueError):
        t2.twin_retraction(center, t2.fundamental("-"))


def test_std_apartment_structure(t2, apt2):
    assert StdTwinApartment.chamber_word(2) == ((0, 0), (1, 0))
    assert StdTwinApartment.chamber_word(-2) == ((1, 0), (0, 0))
    for n in range(-4, 5):
        ch = apt2.chamber("+", n)
        assert apt2.coordinate_of_chamber(ch) == n
        assert apt2.op(apt2.op(ch)) == ch
        assert apt2.op(ch).side == "-"
        assert apt2.coordinate_of_chamber(apt2.op(ch)) == n
        v = apt2.vertex("-", n)
        assert v.typ == n % 2
        assert apt2.coordinate_of_vertex(v) == n
        assert t2.vertex_codistance(apt2.op(v), v) == 0


def test_chamber_coordinate_matches_apartment(t2, apt2):
    base = apt2.chamber("+", 0)
    assert t2.chamber_coordinate(base, apt2.chamber("+", 5)) == 5
    assert t2.chamber_coordinate(base, apt2.chamber("-", -3)) == -3
    off_center = apt2.chamber("-", 2)
    for n in range(-3, 4):
        assert t2.chamber_coordinate(off_center, apt2.chamber("+", n)) == n
