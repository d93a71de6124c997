"""Numeric checks of the recognizable-bounds conditions and the witness diameter bound.

Reading used for the half-arc A+_{s,zeta}: the image of the open cap
D_s(zeta) intersected with the unit disk.  So clause 3 asks that the
crosscut touch A_{s,zeta} in one connected run and otherwise lie in the
cap image, in two pieces.  The clause 4 threshold is a knob (default r0/4).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from gmpy2 import mpq

from ..crosscuts import Crosscut, CrosscutError, acceptably_placed_points, make_crosscut
from ..geometry import QPoint, dyadic, one_plus_sqrt2_lt
from .sc import TWO_PI, ConformalError, ConformalMap, cap_angle

SQRT2P1 = 1.0 + math.sqrt(2.0)


class NumVerdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def combine(verdicts: Sequence[NumVerdict]) -> NumVerdict:
    if NumVerdict.FAIL in verdicts:
        return NumVerdict.FAIL
    if NumVerdict.INCONCLUSIVE in verdicts:
        return NumVerdict.INCONCLUSIVE
    return NumVerdict.PASS


@dataclass(frozen=True)
class WitnessParams:
    s0: mpq
    r0: mpq
    turn: mpq  # zeta = exp(2 pi i turn)
    m_tilde: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("s0", "r0", "turn"):
            object.__setattr__(self, name, mpq(getattr(self, name)))

    @property
    def zeta(self) -> complex:
        a = TWO_PI * float(self.turn)
        return complex(math.cos(a), math.sin(a))

    @property
    def threshold(self) -> float:
        return float(self.r0) / 4.0 if self.m_tilde is None else float(self.m_tilde)

    def ordered(self) -> bool:
        return 0 < self.r0 < self.s0 < mpq(1, 2)

    def to_document(self) -> dict:
        return {"s0": str(self.s0), "r0": str(self.r0), "turn": str(self.turn), "m_tilde": self.threshold}


@dataclass(frozen=True)
class ClauseResult:
    clause: int
    verdict: NumVerdict
    margin: float
    note: str = ""


@dataclass(frozen=True)
class RecognitionReport:
    params: WitnessParams
    clauses: tuple
    notes: tuple = ()

    @property
    def verdict(self) -> NumVerdict:
        return combine([c.verdict for c in self.clauses])

    def to_document(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "params": self.params.to_document(),
            "clauses": [
                {"clause": c.clause, "verdict": c.verdict.value, "margin": c.margin, "note": c.note}
                for c in self.clauses
            ],
            "notes": list(self.notes),
        }


# -- float geometry helpers ------------------------------------------------------


def _point_polyline_dist(p: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point in p to the polyline through poly."""
    a, b = poly[:-1], poly[1:]
    ab = b - a
    L2 = np.maximum(np.abs(ab) ** 2, 1e-300)
    t = ((p[:, None] - a[None, :]) * ab.conj()[None, :]).real / L2
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :] + t * ab[None, :]
    return np.abs(p[:, None] - proj).min(axis=1)


def _runs(labels: Sequence[str]) -> list:
    out = []
    for lab in labels:
        if not out or out[-1] != lab:
            out.append(lab)
    return out


# -- recognizing crosscuts built from the map ------------------------------------------


@dataclass
class BuiltCrosscut:
    crosscut: Crosscut
    params: WitnessParams
    preimages: np.ndarray
    inner_radius: float  # distance from zeta to the preimage curve


def _preimage_curve(zeta: complex, s0: float, delta: float, inner: float, density: int) -> np.ndarray:
    """Arc of |z - zeta| = s0 around (1 - s0) zeta, joined to the unit circle by two inner arcs."""
    s_in = inner * s0
    psi_c = cap_angle(s_in)
    n_leg = max(8, density)
    n_mid = max(5, density // 2) | 1
    leg1 = np.linspace(psi_c, math.pi - delta, n_leg)
    mid = np.linspace(math.pi - delta, math.pi + delta, n_mid)
    leg2 = np.linspace(math.pi + delta, TWO_PI - psi_c, n_leg)
    rad = np.linspace(s_in, s0, 4)[1:-1]
    parts = [
        s_in * np.exp(1j * leg1),
        rad * np.exp(1j * (math.pi - delta)),
        s0 * np.exp(1j * mid),
        rad[::-1] * np.exp(1j * (math.pi + delta)),
        s_in * np.exp(1j * leg2),
    ]
    rel = np.concatenate(parts)
    pts = zeta + zeta * rel
    pts[0] /= abs(pts[0])
    pts[-1] /= abs(pts[-1])
    return pts


def _snap_to_boundary(cm: ConformalMap, w: complex) -> QPoint:
    """Nearest non-vertex boundary point, computed exactly from a dyadic rounding of w."""
    dm = cm.domain
    p = QPoint.from_complex(w, 40)
    best = None
    for e in dm.edges:
        a, b = complex(e.a), complex(e.b)
        ab = b - a
        t = min(max(((w - a) * ab.conjugate()).real / abs(ab) ** 2, 0.0), 1.0)
        d = abs(a + t * ab - w)
        if best is None or d < best[0]:
            best = (d, e)
    e = best[1]
    d = e.b - e.a
    t = ((p.re - e.a.re) * d.re + (p.im - e.a.im) * d.im) / d.abs2()
    eps = mpq(1, 2**30)
    t = min(max(t, eps), 1 - eps)
    return e.point_at(t)


def build_recognizing_crosscut(
    cm: ConformalMap,
    turn,
    s0,
    delta: float = 0.6,
    inner: float = 0.92,
    density: int = 24,
    m_tilde: Optional[float] = None,
) -> BuiltCrosscut:
    """Crosscut through phi((1 - s0) zeta) whose preimage stays in the closed cap.

    Raises CrosscutError when the rounded polyline is not a valid crosscut.
    """
    s0 = mpq(s0)
    turn = mpq(turn)
    zeta = complex(math.cos(TWO_PI * float(turn)), math.sin(TWO_PI * float(turn)))
    last_err = None
    for dens in (density, 2 * density, 4 * density):
        pre = _preimage_curve(zeta, float(s0), delta, inner, dens)
        img = cm(pre)
        pts = [_snap_to_boundary(cm, img[0])]
        pts += [QPoint.from_complex(v, 40) for v in img[1:-1]]
        pts.append(_snap_to_boundary(cm, img[-1]))
        keep = [0] + [i for i in range(1, len(pts)) if pts[i] != pts[i - 1]]
        pts = [pts[i] for i in keep]
        pre = pre[keep]
        try:
            C = make_crosscut(cm.domain, pts)
        except CrosscutError as exc:
            last_err = exc
            continue
        dist = float(np.abs(pre - zeta).min())
        r0 = dyadic(0.95 * dist, 30)
        if r0 >= s0:
            r0 = s0 * mpq(15, 16)
        return BuiltCrosscut(C, WitnessParams(s0, r0, turn, m_tilde), pre, dist)
    raise CrosscutError(f"no valid crosscut at turn {turn}, s0 {s0}: {last_err}")


# -- the checks ---------------------------------------------------------------------------


def _polyline(C: Crosscut) -> np.ndarray:
    return np.array([complex(p) for p in C.polyline])


def _classify(d: np.ndarray, tol: float) -> list:
    return ["A" if abs(x) <= tol else ("cap" if x < 0 else "out") for x in d]


def _clause3_ok(labels: list) -> bool:
    return _runs(labels) == ["cap", "A", "cap"]


def check_recognizably_bounds(
    cm: ConformalMap,
    C: Crosscut,
    wp: WitnessParams,
    preimages=None,
    tol_pre: float = 1e-7,
    radial_samples: int = 65,
) -> RecognitionReport:
    """Three-valued numeric check of the four witness clauses for (wp.r0, wp.s0) at wp.zeta."""
    notes = ["A+ read as the image of the open cap D_s0(zeta) within the disk", f"m_tilde={wp.threshold!r}"]
    if not wp.ordered():
        c1 = ClauseResult(1, NumVerdict.FAIL, float(min(wp.r0, wp.s0 - wp.r0, mpq(1, 2) - wp.s0)),
                          "need 0 < r0 < s0 < 1/2")
        return RecognitionReport(wp, (c1,), tuple(notes))
    clauses = [ClauseResult(1, NumVerdict.PASS, float(min(wp.r0, wp.s0 - wp.r0, mpq(1, 2) - wp.s0)))]
    zeta, s0, r0 = wp.zeta, float(wp.s0), float(wp.r0)
    err = cm.error
    poly = _polyline(C)

    near_nu0 = abs(cm.at(zeta) - 0.0) < 1e-3
    if near_nu0:
        notes.append("boundary image near nu_0: truncated domain, existence case not asserted")

    # clause 2: phi((1 - s0) zeta) on C
    target = cm.at((1.0 - s0) * zeta)
    dist = float(_point_polyline_dist(np.array([target]), poly)[0])
    tol2 = 4 * err + 1e-12
    if dist <= tol2:
        v2 = NumVerdict.PASS
    elif dist > 100 * tol2:
        v2 = NumVerdict.FAIL
    else:
        v2 = NumVerdict.INCONCLUSIVE
    clauses.append(ClauseResult(2, v2, tol2 - dist, "distance from phi((1-s0)zeta) to C"))

    # clause 3: preimages of the vertices of C
    u = cm.inverse(poly, guess=preimages) if preimages is not None else cm.inverse_along(poly)
    resid = np.abs(cm(u) - poly)
    u_in = u.copy()
    d = np.abs(u_in - zeta) - s0
    lab1, lab4 = _classify(d, tol_pre), _classify(d, 4 * tol_pre)
    ok1, ok4 = _clause3_ok(lab1), _clause3_ok(lab4)
    inner_resid = resid[1:-1].max() if len(resid) > 2 else 0.0
    if inner_resid > 1e-8:
        v3 = NumVerdict.INCONCLUSIVE
        note3 = f"inverse map residual {inner_resid:.2e}"
    elif ok1 and ok4:
        v3, note3 = NumVerdict.PASS, "runs cap/A/cap"
    elif not ok1 and not ok4:
        v3, note3 = NumVerdict.FAIL, "runs " + "/".join(_runs(lab1))
    else:
        v3, note3 = NumVerdict.INCONCLUSIVE, "classification unstable at the tolerance"
    cap_margin = float(-d[np.array([x == "cap" for x in lab1])].max()) if "cap" in lab1 else 0.0
    clauses.append(ClauseResult(3, v3, cap_margin, note3))

    # clause 4: radial segment stays m_tilde away from the closure of C within the open cap
    if v3 != NumVerdict.PASS and note3.startswith(("runs", "inverse")):
        why = "clause 3 failed" if v3 == NumVerdict.FAIL else "preimages unreliable"
        clauses.append(ClauseResult(4, NumVerdict.INCONCLUSIVE, float("nan"), f"skipped: {why}"))
        return RecognitionReport(wp, tuple(clauses), tuple(notes))
    idx = [i for i, x in enumerate(lab1) if x == "cap"]
    a_idx = [i for i, x in enumerate(lab1) if x == "A"]
    closure = set(idx)
    if a_idx:
        closure.update({a_idx[0], a_idx[-1]})
    if not closure:
        clauses.append(ClauseResult(4, NumVerdict.INCONCLUSIVE, float("nan"), "skipped: no part of C in the cap"))
        return RecognitionReport(wp, tuple(clauses), tuple(notes))
    pieces = []
    for i in range(len(poly) - 1):
        if i in closure and i + 1 in closure and not (i in a_idx and i + 1 in a_idx):
            pieces.append(poly[i : i + 2])
    t = np.linspace(1.0 - s0, 1.0 - r0, radial_samples)
    radial = cm(t * zeta)
    if pieces:
        dmin = min(float(_point_polyline_dist(radial, seg).min()) for seg in pieces)
    else:
        dmin = float(np.abs(radial[:, None] - poly[sorted(closure)][None, :]).min())
    slack = float(np.abs(np.diff(radial)).max()) / 2
    margin = dmin - wp.threshold
    if margin > slack + 2 * err:
        v4 = NumVerdict.PASS
    elif margin < -2 * err:
        v4 = NumVerdict.FAIL
    else:
        v4 = NumVerdict.INCONCLUSIVE
    clauses.append(ClauseResult(4, v4, margin, f"radial sampling slack {slack:.2e}"))
    return RecognitionReport(wp, tuple(clauses), tuple(notes))


def is_acceptable(cm: ConformalMap, C: Crosscut, rho_lb: mpq) -> bool:
    """Acceptably placed endpoints and (1 + sqrt 2) diam C < rho_lb, decided exactly."""
    if not acceptably_placed_points(cm.domain, C.start, C.end):
        return False
    rho_lb = mpq(rho_lb)
    return one_plus_sqrt2_lt(C.diam2(), rho_lb * rho_lb)


@dataclass(frozen=True)
class WitnessReport:
    verdict: NumVerdict
    pairs: int
    bound: float
    max_excess: float
    tolerance: float
    notes: tuple = ()

    def to_document(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "pairs": self.pairs,
            "bound": self.bound,
            "max_excess": self.max_excess,
            "tolerance": self.tolerance,
            "notes": list(self.notes),
        }


def sample_disk_cap(zeta: complex, r: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of D_r(zeta) inside the unit disk (rejection sampling)."""
    out = []
    need = count
    while need > 0:
        ang = rng.uniform(0, TWO_PI, 4 * need)
        rad = r * np.sqrt(rng.uniform(0, 1, 4 * need))
        z = zeta + rad * np.exp(1j * ang)
        z = z[np.abs(z) < 1.0]
        out.append(z[:need])
        need -= len(out[-1])
    return np.concatenate(out)


def witness_bound_check(
    cm: ConformalMap,
    C: Crosscut,
    wp: WitnessParams,
    pairs: int = 1000,
    seed: int = 0,
    tolerance: float = 1e-6,
    rho_lb: Optional[mpq] = None,
    recognition: Optional[RecognitionReport] = None,
    require_preconditions: bool = True,
    samples: Optional[tuple] = None,
) -> WitnessReport:
    """Check (1 + sqrt 2) diam C >= |phi(z1) - phi(z2)| - tolerance on sampled pairs in D_r0(zeta)."""
    notes = []
    if require_preconditions:
        if recognition is None:
            recognition = check_recognizably_bounds(cm, C, wp)
        if recognition.verdict != NumVerdict.PASS:
            raise ConformalError(f"precondition: recognizable-bounds check is {recognition.verdict.value}")
        if rho_lb is None:
            from .sc import rho_lower_bound

            rho_lb = rho_lower_bound(cm)
        if not is_acceptable(cm, C, rho_lb):
            raise ConformalError("precondition: crosscut is not acceptable")
    else:
        notes.append("preconditions not enforced")
    zeta, r0 = wp.zeta, float(wp.r0)
    if samples is None:
        rng = np.random.default_rng(seed)
        z1 = sample_disk_cap(zeta, r0, pairs, rng)
        z2 = sample_disk_cap(zeta, r0, pairs, rng)
    else:
        z1, z2 = (np.atleast_1d(np.asarray(s, dtype=complex)) for s in samples)
        pairs = len(z1)
    vals = np.abs(cm(z1) - cm(z2))
    bound = SQRT2P1 * math.sqrt(float(C.diam2()))
    excess = float((vals - bound).max())
    err = 2 * cm.error
    if excess > tolerance + err:
        v = NumVerdict.FAIL
    elif excess <= tolerance - err:
        v = NumVerdict.PASS
    else:
        v = NumVerdict.INCONCLUSIVE
    return WitnessReport(v, pairs, bound, excess, tolerance, tuple(notes))
