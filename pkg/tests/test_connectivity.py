import random
from fractions import Fraction as F

import pytest
from gmpy2 import mpq

from boundext.connectivity import (
    BCF,
    ConnectivityError,
    analysis,
    boundary_graph,
    load_bcf,
    min_arc_diameter_sq,
    mlc_table,
    tent_feet,
    tent_feet_arc_sq,
    turing_reduce,
    validate_bcf,
)
from boundext.domain import build_domain, pow2
from boundext.geometry import QPoint
from boundext.staged import StagedSet
from oracles import delta_oracle, diameter_sq_oracle, random_boundary_point

P = QPoint


def test_tent_feet_arc(tent_domain):
    bg = boundary_graph(tent_domain)
    d2 = min_arc_diameter_sq(bg, P(F(17, 32), 0), P(F(15, 32), 0))
    expected = diameter_sq_oracle([P(F(17, 32), 0), P(F(1, 2), F(1, 2)), P(F(15, 32), 0)])
    assert d2 == expected == mpq(257, 1024)
    assert d2 >= pow2(-2)


def test_arc_on_one_side(tent_domain):
    bg = boundary_graph(tent_domain)
    assert min_arc_diameter_sq(bg, P(0, F(1, 8)), P(0, F(5, 8))) == mpq(1, 4)
    assert min_arc_diameter_sq(bg, P(0, 1), P(1, 1)) == 1


def test_arc_across_spike_base(spike_domain):
    bg = boundary_graph(spike_domain)
    # the arc through the foot skips the slit
    assert min_arc_diameter_sq(bg, P(F(17, 32), 0), P(F(15, 32), 0)) == mpq(1, 256)
    # from the apex the arc must run down the slit
    assert min_arc_diameter_sq(bg, P(F(1, 2), F(1, 2)), P(F(15, 32), 0)) == mpq(1, 4) + mpq(1, 1024)


def test_arc_errors(tent_domain):
    bg = boundary_graph(tent_domain)
    with pytest.raises(ConnectivityError):
        min_arc_diameter_sq(bg, P(F(1, 3), F(1, 3)), P(0, F(1, 2)))
    with pytest.raises(ConnectivityError):
        min_arc_diameter_sq(bg, P(0, F(1, 2)), P(0, F(1, 2)))


def test_arc_properties(mixed_domain):
    bg = boundary_graph(mixed_domain)
    rng = random.Random(41)
    for _ in range(300):
        p, q = random_boundary_point(rng, mixed_domain), random_boundary_point(rng, mixed_domain)
        if p == q:
            continue
        d2 = min_arc_diameter_sq(bg, p, q)
        assert d2 >= (p - q).abs2()
        assert d2 == min_arc_diameter_sq(bg, q, p)


@pytest.mark.parametrize(
    "entries,J",
    [({0: 2}, 1), ({}, 2), ({0: 3, 2: 0, 3: 7}, 4), ({1: 1}, 3), ({0: 0, 1: 4}, 2)],
)
def test_delta_matches_sampling_oracle(entries, J):
    dm = build_domain(StagedSet(n_max=5, s_max=12, entries=entries), J)
    an = analysis(dm)
    for k in range(J + 2):
        d, _ = an.delta(k)
        o = delta_oracle(dm, k, 32)
        assert d <= o * (1 + 1e-12)
        assert o <= d * 1.05


def test_bad_pair_is_really_bad(mixed_domain):
    an = analysis(mixed_domain)
    for k in range(1, 6):
        d, bad = an.delta(k)
        if bad is None:
            continue
        p, q = bad.points(an.bg)
        assert min_arc_diameter_sq(an.bg, p, q) >= pow2(-2 * k) * (1 - mpq(1, 10**6))


def test_tent_forces_large_g():
    for j, s in [(0, 2), (1, 5), (2, 0)]:
        dm = build_domain(StagedSet(n_max=4, s_max=9, entries={j: s}), j + 1)
        g = mlc_table(dm)
        assert g(j + 1) > j + 2 + s


def test_mlc_is_valid_and_nondecreasing(battery_domains):
    for dm in battery_domains[:15]:
        g = mlc_table(dm)
        assert list(g.values) == sorted(g.values)
        assert validate_bcf(dm, g) is None
        slack = BCF(tuple(v + 1 for v in g.values))
        assert validate_bcf(dm, slack) is None


def test_minimality_audit(battery_domains):
    for dm in battery_domains[:15]:
        an = analysis(dm)
        g = mlc_table(dm)
        for k, v in enumerate(g.values):
            lowered = list(g.values)
            lowered[k] = v - 1
            if lowered != sorted(lowered) or v == 0:
                continue
            still = validate_bcf(dm, BCF(tuple(lowered))) is None
            # lowering an entry that sits at its own minimum breaks it; one raised for monotonicity survives
            assert still == (an.g_at(k) < v)


def test_zero_function_counterexample_at_feet():
    dm = build_domain(StagedSet(n_max=3, s_max=9, entries={1: 5}), 2)
    bad = validate_bcf(dm, BCF((0, 0, 0, 0)))
    assert bad is not None and bad.exact
    assert {bad.p, bad.q} == set(tent_feet(dm, 1))
    assert (bad.p - bad.q).abs2() == pow2(-2 * (1 + 2 + 5))


def test_reduction_examples(tent_domain):
    g = mlc_table(tent_domain)
    assert turing_reduce(tent_domain, g) == {0: True}
    dm = build_domain(StagedSet(n_max=4, s_max=9, entries={1: 3}), 3)
    answers = turing_reduce(dm, mlc_table(dm))
    assert answers == {0: False, 1: True, 2: False}


def test_reduction_rejects_invalid(tent_domain):
    with pytest.raises(ConnectivityError):
        turing_reduce(tent_domain, BCF((0, 0, 0)))
    with pytest.raises(ConnectivityError):
        turing_reduce(tent_domain, BCF((5,)))


def test_reduction_with_slack(battery_domains):
    rng = random.Random(43)
    for dm in battery_domains[:10]:
        g = mlc_table(dm)
        truth = {n: n in dm.staged.entries for n in range(dm.depth)}
        for _ in range(20):
            extra, vals = 0, []
            for v in g.values:
                extra += rng.randint(0, 3)
                vals.append(v + extra)
            h = BCF(tuple(vals))
            assert validate_bcf(dm, h) is None
            assert turing_reduce(dm, h) == truth


def test_soundness_arithmetic_chain(battery_domains):
    """If n entered after stage g(n+2), the feet would break g at k = n+2."""
    for dm in battery_domains:
        g = mlc_table(dm)
        for n, s in dm.staged.entries.items():
            if n >= dm.depth:
                continue
            p, q = tent_feet(dm, n)
            gap2 = (p - q).abs2()
            assert gap2 == pow2(-2 * (n + 2 + s))
            assert tent_feet_arc_sq(dm, n) >= pow2(-2 * (n + 1))
            # validity of g at k = n+2 forces the gap above 2^-g(n+2), i.e. s < g(n+2)
            assert gap2 > pow2(-2 * g(n + 2))
            assert s < g(n + 2)


def test_bcf_documents():
    g = BCF((2, 5, 6))
    assert load_bcf(g.dumps()) == g
    with pytest.raises(ConnectivityError):
        BCF((3, 2))
    with pytest.raises(ConnectivityError):
        load_bcf('{"g": [[0, 1], [2, 3]]}')
    with pytest.raises(ConnectivityError):
        load_bcf("nope")
