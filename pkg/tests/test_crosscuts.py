import random
from fractions import Fraction as F

import pytest
from gmpy2 import mpq

from boundext.crosscuts import (
    ApproxCrosscut,
    Crosscut,
    CrosscutError,
    Wad,
    acceptably_placed_constituents,
    acceptably_placed_points,
    approximates,
    avoiding_arc,
    chain_diam2,
    chain_for,
    chain_from_document,
    conservatively_intersects,
    crosscut_from_document,
    error_of,
    interior_side_check,
    is_approx_crosscut,
    make_crosscut,
    star_filter,
    thicken,
)
from boundext.domain import Kind, constituent_of
from boundext.geometry import QPoint, QRect, TaxicabArc, Segment, one_plus_sqrt2_lt, taxicab_arcs
from generators import random_crosscut
from oracles import random_boundary_point

P = QPoint


def box(x0, x1, y0, y1):
    return QRect.open(F(x0), F(x1), F(y0), F(y1))


def single(*b):
    return Wad((box(*b),))


def horizontal_chain():
    """Five boxes along height 7/8 from the left side to the right side."""
    cuts = [F(-1, 16), F(3, 16), F(7, 16), F(11, 16), F(15, 16), F(17, 16)]
    wads = []
    for i in range(5):
        lo = cuts[i] - (F(1, 32) if i else 0)
        wads.append(single(lo, cuts[i + 1] + F(1, 64), F(27, 32), F(29, 32)))
    return ApproxCrosscut(tuple(wads))


def test_horizontal_chain_is_approx_crosscut(spike_domain):
    a = horizontal_chain()
    assert is_approx_crosscut(spike_domain, a)
    C = make_crosscut(spike_domain, [P(0, F(7, 8)), P(1, F(7, 8))])
    assert approximates(a, C)


def test_not_simple(spike_domain):
    a = ApproxCrosscut(
        (single(F(-1, 16), F(1, 4), F(3, 4), F(7, 8)), single(F(3, 16), F(1, 2), F(3, 4), F(7, 8)), single(F(1, 8), F(3, 8), F(13, 16), F(15, 16)))
    )
    v = is_approx_crosscut(spike_domain, a)
    assert not v and "not simple" in v.reason


def test_closure_escapes(spike_domain):
    a = ApproxCrosscut(
        (
            single(F(-1, 16), F(1, 8), F(3, 4), F(7, 8)),
            single(F(1, 16), F(5, 16), F(1, 8), F(15, 16)),  # reaches down over the spike at 1/4
            single(F(1, 4), F(17, 16), F(7, 8), F(31, 32)),
        )
    )
    v = is_approx_crosscut(spike_domain, a)
    assert not v and "closure escapes D" in v.reason


def test_closure_touching_boundary_escapes(spike_domain):
    # middle box closure touches the top side y = 1
    a = ApproxCrosscut(
        (single(F(-1, 16), F(1, 4), F(3, 4), F(7, 8)), single(F(3, 16), F(1, 2), F(3, 4), 1), single(F(7, 16), F(17, 16), F(3, 4), F(7, 8)))
    )
    assert "closure escapes D" in is_approx_crosscut(spike_domain, a).reason


def test_approximates_single_wad(spike_domain):
    C = make_crosscut(spike_domain, [P(0, F(7, 8)), P(1, F(7, 8))])
    a = ApproxCrosscut((single(F(-1, 8), F(9, 8), F(3, 4), 1),))
    assert approximates(a, C)


def test_approximates_thickened_subdivision(mixed_domain):
    C = make_crosscut(mixed_domain, [P(0, F(3, 4)), P(F(1, 2) + F(1, 16), F(5, 8)), P(F(3, 4), 0)])
    a = thicken(C, 12, F(1, 128))
    assert approximates(a, C)
    assert is_approx_crosscut(mixed_domain, a)


def test_approximates_fails_when_middle_wad_misses_vertex(spike_domain):
    C = make_crosscut(spike_domain, [P(0, F(3, 4)), P(F(5, 8), F(5, 8)), P(1, F(3, 4))])
    a = thicken(C, 4, F(1, 128))
    assert approximates(a, C)
    # nudge the wad holding the corner (5/8, 5/8) upward so it misses it
    w = a.wads[1].boxes[0]
    moved = QRect.open(w.x_lo, w.x_hi, F(5, 8) + F(1, 256), w.y_hi + F(1, 8))
    b = ApproxCrosscut((a.wads[0], Wad((moved,)), *a.wads[2:]))
    assert not approximates(b, C)


def test_approximates_needs_order(spike_domain):
    C = make_crosscut(spike_domain, [P(0, F(7, 8)), P(1, F(7, 8))])
    a = horizontal_chain()
    assert not approximates(ApproxCrosscut(tuple(reversed(a.wads))), C)


def test_error_examples():
    assert error_of(ApproxCrosscut((single(0, F(1, 4), 0, F(1, 4)),))) == mpq(1, 8)
    two = Wad((box(0, 1, 0, 1), box(F(1, 2), F(3, 2), F(1, 2), F(3, 2))))
    # farthest corners are 0 and 3/2 + 3i/2
    assert error_of(ApproxCrosscut((two,))) == mpq(9, 2)
    with pytest.raises(CrosscutError):
        Wad(())


def test_wad_chain_condition():
    with pytest.raises(CrosscutError):
        Wad((box(0, 1, 0, 1), box(1, 2, 0, 1)))


def test_conservatively_intersects_examples(spike_domain):
    dm = spike_domain
    assert conservatively_intersects(dm, single(F(-1, 16), F(1, 16), F(7, 16), F(9, 16))) == 0
    assert conservatively_intersects(dm, single(F(-1, 16), F(1, 16), F(15, 16), F(17, 16))) is None
    assert conservatively_intersects(dm, single(F(-1, 8), F(1, 8), F(7, 8), F(9, 8))) is None
    spike = dm.tent_constituent(0).index
    assert conservatively_intersects(dm, single(F(7, 16), F(9, 16), F(1, 4), F(3, 8))) == spike


def test_acceptably_placed_examples(spike_domain):
    dm = spike_domain
    assert acceptably_placed_points(dm, P(0, F(1, 2)), P(F(3, 8), 0))
    assert not acceptably_placed_points(dm, P(0, 1), P(F(3, 8), 0))
    with pytest.raises(CrosscutError):
        acceptably_placed_points(dm, P(F(1, 3), F(1, 3)), P(0, F(1, 2)))
    # a point on the first spike and one on sigma_0 are not placed acceptably
    assert not acceptably_placed_points(dm, P(0, F(1, 2)), P(F(1, 2), F(1, 4)))
    # ... but the spike and the bottom run next to it are
    assert acceptably_placed_points(dm, P(F(1, 2), F(1, 4)), P(F(3, 4), 0))


def test_constituent_examples(mixed_domain):
    dm = mixed_domain
    n = dm.n_constituents
    assert all(acceptably_placed_constituents(dm, k, k) for k in range(n))
    assert acceptably_placed_constituents(dm, 0, 1)
    assert acceptably_placed_constituents(dm, 1, 2)
    assert not acceptably_placed_constituents(dm, 0, 2)
    feats = [c.index for c in dm.constituents if c.kind in (Kind.TENT, Kind.SPIKE)]
    for a in feats:
        for b in feats:
            if a != b:
                assert not acceptably_placed_constituents(dm, a, b)
    bottoms = [c.index for c in dm.constituents if c.kind == Kind.BOTTOM_RUN]
    for f in feats:
        for b in bottoms:
            assert acceptably_placed_constituents(dm, f, b)


def expected_placement(dm, k1, k2):
    """Table derived by hand from the shape of the domain."""
    if k1 == k2:
        return True
    kinds = {dm.constituent(k).kind for k in (k1, k2)}
    ks = {k1, k2}
    if Kind.TENT in kinds or Kind.SPIKE in kinds:
        return kinds <= {Kind.TENT, Kind.SPIKE, Kind.BOTTOM_RUN} and Kind.BOTTOM_RUN in kinds
    bottom = lambda k: dm.constituent(k).kind == Kind.BOTTOM_RUN  # noqa: E731
    if all(bottom(k) for k in ks):
        return True
    if ks in ({0, 1}, {1, 2}):
        return True
    if 0 in ks or 2 in ks:
        other = (ks - {0, 2}) or ks
        return all(bottom(k) for k in other)
    return False


def test_placement_matches_shape_table(battery_domains):
    for dm in battery_domains[:10]:
        for k1 in range(dm.n_constituents):
            for k2 in range(dm.n_constituents):
                assert acceptably_placed_constituents(dm, k1, k2) == expected_placement(dm, k1, k2), (k1, k2)


def test_pointwise_matches_constituent(battery_domains):
    rng = random.Random(29)
    for dm in battery_domains[:8]:
        for _ in range(60):
            p, q = random_boundary_point(rng, dm), random_boundary_point(rng, dm)
            if p == q:
                continue
            k1 = constituent_of(dm, p).constituent
            k2 = constituent_of(dm, q).constituent
            assert acceptably_placed_points(dm, p, q) == acceptably_placed_constituents(dm, k1, k2)


def test_star_filter(spike_domain):
    dm = spike_domain
    good = ApproxCrosscut(
        (
            single(F(-1, 64), F(1, 64), F(3, 64), F(5, 64)),
            single(F(1, 128), F(5, 64), F(1, 128), F(5, 64)),
            single(F(3, 64), F(5, 64), F(-1, 64), F(1, 64)),
        )
    )
    assert is_approx_crosscut(dm, good)
    bad_end = ApproxCrosscut((single(F(-1, 16), F(1, 16), F(15, 16), F(17, 16)),))
    huge = horizontal_chain()
    kept = list(star_filter(dm, [good, bad_end, huge], mpq(1, 2)))
    assert kept == [good]
    with pytest.raises(CrosscutError):
        list(star_filter(dm, [good], mpq(0)))


def test_star_filter_kept_chains_approximate_acceptable_crosscuts(mixed_domain):
    dm = mixed_domain
    rng = random.Random(31)
    rho = mpq(1, 2)
    seen = 0
    for _ in range(40):
        C, _ = random_crosscut(rng, dm)
        a = chain_for(dm, C)
        if a is None:
            continue
        for kept in star_filter(dm, [a], rho):
            seen += 1
            assert acceptably_placed_points(dm, C.start, C.end)
            assert one_plus_sqrt2_lt(C.diam2(), rho * rho)
    assert seen > 0


def test_interior_side_examples(spike_domain):
    dm = spike_domain
    C = make_crosscut(dm, [P(0, F(1, 8)), P(F(1, 8) + F(1, 64), 0)])
    tau = avoiding_arc(dm, C.start, C.end)
    rep = interior_side_check(dm, C, tau)
    assert rep.interior_side in ("left", "right")
    assert (rep.left_winding != 0) != (rep.right_winding != 0)


def test_interior_side_chord(spike_domain):
    dm = spike_domain
    C = make_crosscut(dm, [P(0, F(1, 2)), P(F(1, 4) - F(1, 32), F(1, 2)), P(F(1, 4) - F(1, 32), 0)])
    tau = avoiding_arc(dm, C.start, C.end)
    assert tau is not None
    rep = interior_side_check(dm, C, tau)
    # travelling down the right leg, the corner region at 0 lies to the right
    assert rep.interior_side == "right"


def test_interior_side_rejects_crossing(spike_domain):
    dm = spike_domain
    C = make_crosscut(dm, [P(0, F(1, 8)), P(F(1, 16), F(1, 4)), P(F(1, 8), 0)])
    tau = TaxicabArc((Segment(P(0, F(1, 8)), P(0, 0)), Segment(P(0, 0), P(F(1, 8), 0))))
    interior_side_check(dm, C, tau)
    bad = TaxicabArc((Segment(P(0, F(1, 8)), P(F(1, 8), F(1, 8))), Segment(P(F(1, 8), F(1, 8)), P(F(1, 8), 0))))
    with pytest.raises(CrosscutError):
        interior_side_check(dm, C, bad)


def test_interior_side_random(mixed_domain):
    rng = random.Random(37)
    for _ in range(25):
        C, tau = random_crosscut(rng, mixed_domain)
        rep = interior_side_check(mixed_domain, C, tau)
        assert (rep.left_winding != 0) + (rep.right_winding != 0) == 1


def test_make_crosscut_rejections(spike_domain):
    dm = spike_domain
    with pytest.raises(CrosscutError):
        make_crosscut(dm, [P(0, 1), P(F(1, 2), F(3, 4)), P(1, F(1, 2))])
    with pytest.raises(CrosscutError):
        make_crosscut(dm, [P(0, F(1, 4)), P(1, F(1, 4))])  # crosses the spikes
    with pytest.raises(CrosscutError):
        make_crosscut(dm, [P(0, F(1, 4)), P(F(1, 3), F(1, 3))])


def test_serialization_roundtrip(spike_domain):
    C = make_crosscut(spike_domain, [P(0, F(7, 8)), P(1, F(7, 8))])
    import json

    assert crosscut_from_document(spike_domain, json.loads(C.dumps())) == C
    a = horizontal_chain()
    assert chain_from_document(json.loads(a.dumps())) == a
    assert chain_diam2(a) >= error_of(a)
