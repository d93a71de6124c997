"""Oscillation covers of the unit circle and the rectangle-in/rectangle-out evaluator."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from gmpy2 import mpq

from ..crosscuts import Crosscut, CrosscutError
from ..geometry import QRect, dyadic, from_qpair, qpair
from .sc import TWO_PI, ConformalError, ConformalMap, rho_lower_bound
from .witness import (
    NumVerdict,
    WitnessParams,
    build_recognizing_crosscut,
    check_recognizably_bounds,
    is_acceptable,
)

COVER_FORMAT = "boundext.cover/1"
DEFAULT_K_MAX = 6


# -- exact circle coverage --------------------------------------------------------------


def _cmp_signed_sqrt(r: mpq, sign: int, s2: mpq) -> int:
    """Sign of r - sign * sqrt(s2), exactly."""
    if sign == 0 or s2 == 0:
        return (r > 0) - (r < 0)
    if sign > 0:
        if r <= 0:
            return -1
        return (r * r > s2) - (r * r < s2)
    if r >= 0:
        return 1
    return (s2 > r * r) - (s2 < r * r)


def _in_open_interval(lo: mpq, hi: mpq, sign: int, s2: mpq) -> bool:
    return _cmp_signed_sqrt(lo, sign, s2) < 0 and _cmp_signed_sqrt(hi, sign, s2) > 0


def _circle_edge_points(R: QRect) -> list:
    """Points of the unit circle on the boundary of R.

    Each is (kind, fixed, sign, s2): kind "x" means x = fixed and
    y = sign * sqrt(s2), kind "y" the transposed form.
    """
    pts = []
    for kind, vals, lo, hi in (("x", (R.x_lo, R.x_hi), R.y_lo, R.y_hi), ("y", (R.y_lo, R.y_hi), R.x_lo, R.x_hi)):
        for a in vals:
            s2 = 1 - a * a
            if s2 < 0:
                continue
            for sign in ((1, -1) if s2 > 0 else (0,)):
                # other coordinate must lie in the closed side
                if _cmp_signed_sqrt(lo, sign, s2) <= 0 and _cmp_signed_sqrt(hi, sign, s2) >= 0:
                    pts.append((kind, a, sign, s2))
    return pts


def _open_rect_contains(R: QRect, pt) -> bool:
    kind, a, sign, s2 = pt
    if kind == "x":
        return R.x_lo < a < R.x_hi and _in_open_interval(R.y_lo, R.y_hi, sign, s2)
    return R.y_lo < a < R.y_hi and _in_open_interval(R.x_lo, R.x_hi, sign, s2)


def covers_unit_circle(rects: Sequence[QRect]) -> bool:
    """Exact test that the union of open rational rectangles contains the unit circle.

    The union covers the circle iff it meets it and every circle point on
    the boundary of some rectangle lies inside another one.
    """
    rects = list(rects)
    if not rects:
        return False
    if any(not R.is_open for R in rects):
        raise ConformalError("circle coverage is defined for open rectangles")
    edge_pts = [p for R in rects for p in _circle_edge_points(R)]
    if not edge_pts:
        probe = ("x", mpq(1), 0, mpq(0))
        return any(_open_rect_contains(R, probe) for R in rects)
    return all(any(_open_rect_contains(R, p) for R in rects) for p in edge_pts)


# -- sampling R intersected with the closed disk -------------------------------------------


def circle_arcs_in_rect(R: QRect) -> list:
    """Angular intervals (a, b), a < b, of the unit circle inside the open rectangle R (floats)."""
    xl, xh, yl, yh = float(R.x_lo), float(R.x_hi), float(R.y_lo), float(R.y_hi)
    cuts = [0.0, TWO_PI]
    for x in (xl, xh):
        if abs(x) <= 1:
            a = math.acos(x)
            cuts += [a, TWO_PI - a]
    for y in (yl, yh):
        if abs(y) <= 1:
            a = math.asin(y)
            cuts += [a % TWO_PI, (math.pi - a) % TWO_PI]
    cuts = sorted(set(cuts))
    arcs = []
    for a, b in zip(cuts, cuts[1:]):
        m = (a + b) / 2
        if xl < math.cos(m) < xh and yl < math.sin(m) < yh:
            if arcs and abs(arcs[-1][1] - a) < 1e-15:
                arcs[-1] = (arcs[-1][0], b)
            else:
                arcs.append((a, b))
    if len(arcs) > 1 and arcs[0][0] == 0.0 and abs(arcs[-1][1] - TWO_PI) < 1e-15:
        first, last = arcs.pop(0), arcs.pop()
        arcs.append((last[0], first[1] + TWO_PI))
    return arcs


def sample_rect_disk(R: QRect, n_grid: int = 10, n_arc: int = 16) -> np.ndarray:
    """Sample points of R intersected with the closed unit disk, boundary arcs included."""
    xl, xh, yl, yh = float(R.x_lo), float(R.x_hi), float(R.y_lo), float(R.y_hi)
    fx = (np.arange(n_grid) + 0.5) / n_grid
    X, Y = np.meshgrid(xl + (xh - xl) * fx, yl + (yh - yl) * fx)
    grid = (X + 1j * Y).ravel()
    grid = grid[np.abs(grid) <= 1.0]
    arcs = []
    for a, b in circle_arcs_in_rect(R):
        t = a + (b - a) * (np.arange(n_arc) + 0.5) / n_arc
        arcs.append(np.exp(1j * t))
    return np.concatenate([grid] + arcs) if arcs else grid


def sampled_oscillation(cm: ConformalMap, R: QRect, n_grid: int = 10, n_arc: int = 16):
    pts = sample_rect_disk(R, n_grid, n_arc)
    if len(pts) == 0:
        return 0.0, pts, pts
    vals = cm(pts)
    osc = float(np.abs(vals[:, None] - vals[None, :]).max())
    return osc, pts, vals


# -- oscillation covers -----------------------------------------------------------------------


@dataclass(frozen=True)
class CoverElement:
    rect: QRect
    params: WitnessParams
    crosscut_diam: float
    sampled_oscillation: float
    error: float
    crosscut: Optional[Crosscut] = field(default=None, compare=False, repr=False)

    def to_document(self) -> dict:
        return {
            "rect": [qpair(v) for v in self.rect.to_list()],
            "crosscut": None if self.crosscut is None else self.crosscut.to_document()["polyline"],
            "witness": self.params.to_document(),
            "crosscut_diameter": self.crosscut_diam,
            "sampled_oscillation": self.sampled_oscillation,
            "error": self.error,
        }


@dataclass
class Cover:
    k: int
    elements: list = field(default_factory=list)

    @property
    def rects(self) -> list:
        return [e.rect for e in self.elements]

    def __len__(self) -> int:
        return len(self.elements)

    def to_document(self) -> dict:
        return {"format": COVER_FORMAT, "k": self.k, "elements": [e.to_document() for e in self.elements]}

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=1)


def rect_from_list(data) -> QRect:
    """Open rectangle from four [numerator, denominator] pairs."""
    xl, xh, yl, yh = [from_qpair(v) for v in data]
    return QRect.open(xl, xh, yl, yh)


def _rho(cm: ConformalMap) -> mpq:
    cache = cm.diagnostics.setdefault("_cache", {})
    if "rho" not in cache:
        cache["rho"] = rho_lower_bound(cm)
    return cache["rho"]


def image_scaled_threshold(cm: ConformalMap, turn, s0, r0) -> float:
    """The r0/4 threshold carried to image units by the local speed of the map."""
    a = TWO_PI * float(turn)
    zeta = complex(math.cos(a), math.sin(a))
    speed = abs(complex(cm.dphi(np.array([(1.0 - float(s0)) * zeta]))[0]))
    return float(r0) / 4.0 * min(1.0, speed)


def _anchor_rect(turn: mpq, r0: mpq) -> QRect:
    """Open rational rectangle inside D_r0(zeta), elongated along the circle's tangent."""
    a = TWO_PI * float(turn)
    cx, cy = dyadic(math.cos(a), 30), dyadic(math.sin(a), 30)
    tx, ty = abs(math.sin(a)) + 0.35, abs(math.cos(a)) + 0.35
    norm = math.hypot(tx, ty)
    reach = 0.97 * float(r0) - 2.0**-28
    hx, hy = dyadic(reach * tx / norm, 30), dyadic(reach * ty / norm, 30)
    return QRect.open(cx - hx, cx + hx, cy - hy, cy + hy)


def _arc_around(R: QRect, theta: float) -> Optional[tuple]:
    for a, b in circle_arcs_in_rect(R):
        for shift in (0.0, TWO_PI, -TWO_PI):
            if a < theta + shift < b:
                return a - shift, b - shift
    return None


def certify_anchor(cm: ConformalMap, turn: mpq, k: int, s_start: float = 0.45, s_min: float = 1e-7):
    """Find an element of the level-k cover anchored at exp(2 pi i turn), shrinking s0 as needed."""
    target = 0.9 * 2.0**-k
    rho = _rho(cm)
    s = s_start
    while s >= s_min:
        s0 = dyadic(s, 20)
        s *= 0.75
        for delta in (0.6, 0.9):
            try:
                built = build_recognizing_crosscut(cm, turn, s0, delta=delta)
            except CrosscutError:
                continue
            C = built.crosscut
            diam = math.sqrt(float(C.diam2()))
            if (1 + math.sqrt(2)) * (diam + 2 * cm.error) > target:
                break  # smaller s0 needed
            if not is_acceptable(cm, C, rho):
                break
            wp = WitnessParams(built.params.s0, built.params.r0, turn,
                               image_scaled_threshold(cm, turn, built.params.s0, built.params.r0))
            rep = check_recognizably_bounds(cm, C, wp, preimages=built.preimages)
            if rep.verdict != NumVerdict.PASS:
                continue
            R = _anchor_rect(turn, wp.r0)
            osc, _, _ = sampled_oscillation(cm, R)
            if osc + 2 * cm.error >= 2.0**-k:
                break
            return CoverElement(R, wp, diam, osc, cm.error, C), built
    raise ConformalError(f"cover not found at level {k}: no certified crosscut near turn {turn}")


def oscillation_cover(cm: ConformalMap, k: int, k_max: int = DEFAULT_K_MAX) -> Cover:
    """Finite open-rectangle cover of the unit circle with certified oscillation below 2^-k.

    Greedy walk around the circle: each anchor exp(2 pi i theta) at a dyadic
    turn theta gets a crosscut that recognizably bounds phi there, is
    acceptable and has (1 + sqrt 2) diam <= 0.9 * 2^-k; its rectangle lies
    inside D_r0 of the anchor.
    """
    if k < 0 or k > k_max:
        raise ConformalError(f"level k={k} outside 0..{k_max}")
    if cm.error * 100 > 2.0**-k:
        raise ConformalError(f"map error {cm.error:.2e} too large for level {k}")
    cover = Cover(k)
    turn = mpq(0)
    first, _ = certify_anchor(cm, turn, k)
    cover.elements.append(first)
    start_arc = _arc_around(first.rect, 0.0)
    goal = start_arc[0] + TWO_PI
    reach = start_arc[1]
    s_hint = min(0.45, float(first.params.s0) * 1.5)
    last_width = start_arc[1] - start_arc[0]
    guard = 0
    while reach < goal:
        guard += 1
        if guard > 20000:
            raise ConformalError(f"cover search did not close at level {k}")
        step = 0.45 * last_width
        while True:
            theta = min(reach + step, goal)
            turn = dyadic(theta / TWO_PI, 24)
            elem, _ = certify_anchor(cm, turn, k, s_start=s_hint)
            arc = _arc_around(elem.rect, float(turn) * TWO_PI)
            if arc is not None and arc[0] < reach - 1e-9:
                break
            step *= 0.5
            if step < 1e-9:
                raise ConformalError(f"cover not found at level {k}: stuck near angle {reach:.6f}")
        cover.elements.append(elem)
        reach = max(reach, arc[1])
        last_width = arc[1] - arc[0]
        s_hint = min(0.45, float(elem.params.s0) * 1.8)
    if not covers_unit_circle(cover.rects):
        raise ConformalError(f"level {k} rectangles fail the exact circle-coverage check")
    return cover


# -- strong evaluation ------------------------------------------------------------------------------


@dataclass(frozen=True)
class StrongOutput:
    rect: Optional[QRect]
    level: Optional[int]
    samples: np.ndarray
    values: np.ndarray

    @property
    def declined(self) -> bool:
        return self.rect is None


def _outward(lo: float, hi: float, bits: int = 40):
    s = 2.0**bits
    return mpq(math.floor(lo * s), 1 << bits), mpq(math.ceil(hi * s), 1 << bits)


class StrongEvaluator:
    """Rectangle in, rectangle out: every answer contains all sampled values with their error bars."""

    def __init__(self, cm: ConformalMap, covers: Sequence[Cover], check: bool = True):
        self.cm = cm
        self.covers = sorted(covers, key=lambda c: -c.k)
        self.check = check
        self.calls = 0

    def level_for(self, R: QRect) -> Optional[int]:
        for cover in self.covers:
            if any(E.contains_rect(R) for E in cover.rects):
                return cover.k
        return None

    def __call__(self, R: QRect) -> StrongOutput:
        self.calls += 1
        if not R.is_open:
            raise ConformalError("strong evaluation takes open rectangles")
        k = self.level_for(R)
        if k is None:
            return StrongOutput(None, None, np.empty(0, complex), np.empty(0, complex))
        pts = sample_rect_disk(R, 8, 16)
        if len(pts) == 0:
            return StrongOutput(None, None, pts, pts)
        vals = self.cm(pts)
        err = self.cm.error
        # local modulus from neighbouring samples pads the box of sampled values
        spread = float(np.abs(np.diff(vals)).max()) if len(vals) > 1 else 0.0
        pad = min(spread, 2.0**-k) + err
        xlo, xhi = vals.real.min() - pad, vals.real.max() + pad
        ylo, yhi = vals.imag.min() - pad, vals.imag.max() + pad
        c = vals[0]
        half = 0.95 * 2.0**-k
        xlo, xhi = max(xlo, c.real - half), min(xhi, c.real + half)
        ylo, yhi = max(ylo, c.imag - half), min(yhi, c.imag + half)
        qx = _outward(xlo, xhi)
        qy = _outward(ylo, yhi)
        out = QRect.open(qx[0], qx[1], qy[0], qy[1])
        if self.check:
            inside = (
                (vals.real - err > float(out.x_lo)) & (vals.real + err < float(out.x_hi))
                & (vals.imag - err > float(out.y_lo)) & (vals.imag + err < float(out.y_hi))
            )
            if not inside.all():
                raise AssertionError("strong correctness violated: sampled value outside the output")
        return StrongOutput(out, k, pts, vals)


def strong_eval(cm: ConformalMap, covers: Sequence[Cover], check: bool = True) -> StrongEvaluator:
    return StrongEvaluator(cm, covers, check)
