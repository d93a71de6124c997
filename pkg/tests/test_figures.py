import re
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from boundext.domain import Kind, build_domain, square_domain
from boundext.figures import domain_svg
from boundext.staged import StagedSet

NS = "{http://www.w3.org/2000/svg}"


def paths(svg):
    root = ET.fromstring(svg)
    return root.findall(f".//{NS}path")


def coords(d):
    nums = [Fraction(x) for x in re.findall(r"-?[0-9.]+(?:e-?\d+)?", d)]
    return list(zip(nums[::2], nums[1::2]))


def test_one_path_per_constituent(mixed_domain):
    ps = paths(domain_svg(mixed_domain))
    assert len(ps) == mixed_domain.n_constituents
    assert [int(p.get("data-constituent")) for p in ps] == list(range(mixed_domain.n_constituents))


def test_coordinates_are_exact(mixed_domain):
    for p, c in zip(paths(domain_svg(mixed_domain)), mixed_domain.constituents):
        pts = coords(p.get("d"))
        assert pts == [(Fraction(v.re), Fraction(v.im)) for v in c.points()]
        assert p.get("class") == c.kind.value


def test_spike_drawn_as_doubled_slit():
    dm = build_domain(StagedSet(n_max=3, s_max=5, entries={1: 2}), 3)
    ps = paths(domain_svg(dm))
    spikes = [p for p in ps if p.get("class") == Kind.SPIKE.value]
    tents = [p for p in ps if p.get("class") == Kind.TENT.value]
    assert len(spikes) == 2 and len(tents) == 1
    for p in spikes:
        a, apex, b = coords(p.get("d"))
        assert a == b and apex[1] > 0 and apex[0] == a[0]
    a, apex, b = coords(tents[0].get("d"))
    assert a != b and a[1] == b[1] == 0


def test_viewport_and_markers():
    svg = domain_svg(square_domain(), viewport=(0, 0, 2, 1), width=400, markers=[0.5 + 0.5j])
    root = ET.fromstring(svg)
    assert root.get("height") == "200"
    assert root.get("viewBox") == "0 -1 2 1"
    assert len(root.findall(f".//{NS}circle")) == 1
    with pytest.raises(ValueError):
        domain_svg(square_domain(), viewport=(1, 0, 0, 1))


def test_deterministic(mixed_domain):
    assert domain_svg(mixed_domain) == domain_svg(mixed_domain)
