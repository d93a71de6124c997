"""SVG drawings of a truncated domain, one path per boundary constituent."""
from __future__ import annotations

from typing import Optional, Sequence
from xml.sax.saxutils import quoteattr

from .domain import DomainModel, Kind

STYLE = {
    Kind.SQUARE_SIDE: ("#222222", 1.5),
    Kind.BOTTOM_RUN: ("#222222", 1.5),
    Kind.TENT: ("#b03a2e", 1.5),
    Kind.SPIKE: ("#1f4e9c", 1.5),
}

DEFAULT_VIEWPORT = (-1 / 16, -1 / 16, 17 / 16, 17 / 16)


def _num(x) -> str:
    # dyadic rationals print exactly as floats; strip the trailing ".0" noise
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def constituent_path(points) -> str:
    head, *rest = points
    return "M" + " L".join([f"{_num(head.re)} {_num(head.im)}"] + [f"{_num(p.re)} {_num(p.im)}" for p in rest])


def domain_svg(
    dm: DomainModel,
    viewport: Sequence[float] = DEFAULT_VIEWPORT,
    width: int = 600,
    markers: Optional[Sequence[complex]] = None,
) -> str:
    """SVG text in domain coordinates (y up).

    Spikes are drawn foot, apex, foot so the doubled slit is visible as a
    single stroke; ``markers`` adds small dots (e.g. boundary estimates).
    """
    x0, y0, x1, y1 = (float(v) for v in viewport)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("viewport must have positive extent")
    height = round(width * (y1 - y0) / (x1 - x0))
    # flip y: the group maps domain y to svg -y, shifted back into the viewBox
    view = f"{_num(x0)} {_num(-y1)} {_num(x1 - x0)} {_num(y1 - y0)}"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="{view}">',
        '<g transform="scale(1 -1)" fill="none" stroke-linecap="round" stroke-linejoin="round">',
    ]
    for c in dm.constituents:
        colour, w = STYLE[c.kind]
        extra = "" if c.tent_index is None else f' data-feature="{c.tent_index}"'
        out.append(
            f'<path class="{c.kind.value}" data-constituent="{c.index}"{extra} '
            f'stroke="{colour}" stroke-width="{w}" vector-effect="non-scaling-stroke" '
            f"d={quoteattr(constituent_path(c.points()))}/>"
        )
    for z in markers or ():
        out.append(f'<circle class="marker" cx="{_num(z.real)}" cy="{_num(z.imag)}" r="0.006" fill="#e67e22"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
