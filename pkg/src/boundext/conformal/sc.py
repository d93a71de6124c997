"""Schwarz-Christoffel map of the unit disk onto a truncated domain.

The boundary is traversed counterclockwise (the reverse of the vertex
order used by the domain builder).  A slit apex is a vertex with interior
angle 2*pi; the foot of a slit is visited twice, each time with interior
angle pi/2.  Prevertex angles are parametrised by a softmax of gap
logits so the boundary correspondence is angle-monotone by construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from gmpy2 import mpq
from scipy.optimize import least_squares
from scipy.special import roots_jacobi, roots_legendre

from ..domain import DomainModel, build_domain, domain_from_document
from ..geometry import dyadic

MAP_FORMAT = "boundext.conformal-map/1"
SOLVER_KIND = "schwarz-christoffel-disk"
CROWDING_BOUND = 5
TWO_PI = 2.0 * math.pi


class ConformalError(RuntimeError):
    """Solver failure or an unreachable accuracy request."""


def interior_betas(w: np.ndarray) -> np.ndarray:
    """Turning exponents alpha_k - 1 for a counterclockwise polygon that may contain slits."""
    n = len(w)
    beta = np.empty(n)
    for k in range(n):
        prev, cur, nxt = w[k - 1], w[k], w[(k + 1) % n]
        if abs(prev - nxt) == 0.0:
            beta[k] = 1.0  # slit apex: interior angle 2*pi
            continue
        d_in, d_out = cur - prev, nxt - cur
        turn = math.atan2((d_out * d_in.conjugate()).imag, (d_out * d_in.conjugate()).real)
        beta[k] = -turn / math.pi
    total = beta.sum()
    if abs(total + 2.0) > 1e-9:
        raise ConformalError(f"polygon angles do not close up (sum of exponents {total:.6g})")
    return beta


class _Rule:
    """Gauss-Legendre nodes plus one Gauss-Jacobi rule per prevertex exponent."""

    def __init__(self, betas: np.ndarray, order: int):
        self.order = order
        self.gl_x, self.gl_w = roots_legendre(order)
        self.gj = [roots_jacobi(order, 0.0, float(b)) for b in betas]


@dataclass
class ConformalMap:
    domain: DomainModel
    center: complex
    w: np.ndarray  # polygon vertices, counterclockwise, starting at nu_0
    beta: np.ndarray
    theta: np.ndarray  # prevertex angles, increasing from 0
    C: complex
    order: int = 20
    residual: float = float("nan")
    error: float = float("nan")
    kind: str = SOLVER_KIND
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=complex)
        self.beta = np.asarray(self.beta, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        self._rule = _Rule(self.beta, self.order)
        self._vertex_images: Optional[np.ndarray] = None

    # -- basic quantities ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.w)

    @cached_property
    def z(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    @cached_property
    def _sep(self) -> np.ndarray:
        """Distance from each prevertex to its nearest neighbour."""
        d = np.abs(self.z[:, None] - self.z[None, :])
        np.fill_diagonal(d, np.inf)
        return d.min(axis=1)

    def prevertex(self, vertex_index: int) -> complex:
        """Prevertex of the domain vertex nu_k (first visit for doubled feet)."""
        n = self.n
        return complex(self.z[(-vertex_index) % n])

    def vertex_images(self) -> np.ndarray:
        if self._vertex_images is None:
            self._vertex_images = self.center + self.C * _prevertex_integrals(self._rule, self.z, self.beta)
        return self._vertex_images

    # -- evaluation -----------------------------------------------------------

    def dphi(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        return self.C * _integrand(pts, self.z, self.beta)

    def __call__(self, pts) -> np.ndarray:
        """phi at points of the closed disk (vectorised)."""
        pts = np.atleast_1d(np.asarray(pts, dtype=complex))
        if np.any(np.abs(pts) > 1.0 + 1e-12):
            raise ConformalError("evaluation point outside the closed unit disk")
        out = np.empty(pts.shape, dtype=complex)
        flat = pts.ravel()
        res = np.empty(flat.shape, dtype=complex)
        d = np.abs(flat[:, None] - self.z[None, :])
        k = d.argmin(axis=1)
        dk = d[np.arange(len(flat)), k]
        near = dk < 0.5 * np.minimum(self._sep[k], 1.0)
        W = self.vertex_images()
        if near.any():
            idx = np.nonzero(near)[0]
            for kk in np.unique(k[idx]):
                sel = idx[k[idx] == kk]
                res[sel] = W[kk] + self.C * _jacobi_piece(self._rule, self.z, self.beta, kk, flat[sel])
        far = ~near
        if far.any():
            res[far] = self.center + self.C * _path(self._rule, self.z, self.beta, np.zeros(far.sum(), complex), flat[far])
        out[...] = res.reshape(pts.shape)
        return out

    def at(self, z: complex) -> complex:
        return complex(self(np.array([z]))[0])

    # -- inverse --------------------------------------------------------------

    @cached_property
    def _seed_grid(self):
        radii = np.array([0.0, 0.3, 0.5, 0.65, 0.75, 0.83, 0.89, 0.93, 0.96, 0.98, 0.99, 0.995, 0.998])
        angles = [np.linspace(0, TWO_PI, 256, endpoint=False)]
        for t, s in zip(self.theta, self._sep):
            offs = s * 0.5 ** np.arange(1, 16)
            angles.append(t + offs)
            angles.append(t - offs)
        ang = np.concatenate(angles)
        Z = (radii[:, None] * np.exp(1j * ang)[None, :]).ravel()
        Z = np.concatenate([[0j], Z[np.abs(Z) > 0]])
        return Z, self(Z)

    def inverse(self, wpts, guess=None, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
        """Numeric inverse by damped Newton iteration; seeds come from ``guess`` or an image grid."""
        wpts = np.atleast_1d(np.asarray(wpts, dtype=complex))
        if guess is None:
            Z, W = self._seed_grid
            u = Z[np.abs(wpts[:, None] - W[None, :]).argmin(axis=1)].copy()
        else:
            u = np.atleast_1d(np.asarray(guess, dtype=complex)).copy()
        f = self(u) - wpts
        active = np.abs(f) > tol
        for _ in range(max_iter):
            if not active.any():
                break
            ia = np.nonzero(active)[0]
            ua, fa = u[ia], f[ia]
            step = fa / self.dphi(ua)
            lam = np.ones(len(ia))
            for _ in range(30):
                cand = ua - lam * step
                bad = np.abs(cand) >= 1.0
                if not bad.any():
                    break
                lam[bad] *= 0.5
            # no admissible step (iterate pressed against the circle): stay put
            stuck = (np.abs(cand) >= 1.0) | ~np.isfinite(cand)
            cand[stuck] = ua[stuck]
            fc = self(cand) - wpts[ia]
            worse = np.abs(fc) > np.abs(fa)
            for _ in range(20):
                if not worse.any():
                    break
                lam[worse] *= 0.5
                cand[worse] = ua[worse] - lam[worse] * step[worse]
                fc[worse] = self(cand[worse]) - wpts[ia][worse]
                worse = np.abs(fc) > np.abs(fa)
            u[ia], f[ia] = cand, fc
            active[ia] = (np.abs(fc) > tol) & (np.abs(fc) < np.abs(fa))
        return u

    def inverse_along(self, path, tol: float = 1e-11, max_depth: int = 12) -> np.ndarray:
        """Preimages of the vertices of a polyline lying in the closed domain, by continuation.

        The best-seeded vertex is solved from the image grid; every other
        vertex is reached by marching along the polyline, halving a step
        until Newton from the previous preimage lands within ``tol``.
        Grid seeds alone can fall on the wrong side of a slit.
        """
        path = np.atleast_1d(np.asarray(path, dtype=complex))
        first = self.inverse(path)
        resid = np.abs(self(first) - path)
        # the ends usually sit on the boundary; start from the best interior vertex
        inner = resid[1:-1] if len(path) > 2 else resid
        start = int(np.argmin(inner)) + (1 if len(path) > 2 else 0)
        out = np.empty_like(path)
        out[start] = first[start]

        def march(u, a, b, depth):
            v = self.inverse([b], guess=[u])[0]
            if abs(self.at(v) - b) <= tol or depth >= max_depth:
                return v
            mid = (a + b) / 2
            return march(march(u, a, mid, depth + 1), mid, b, depth + 1)

        for order in (range(start + 1, len(path)), range(start - 1, -1, -1)):
            prev = start
            for i in order:
                out[i] = march(out[prev], path[prev], path[i], 0)
                prev = i
        return out

    # -- serialization ----------------------------------------------------------

    def to_document(self) -> dict:
        return {
            "format": MAP_FORMAT,
            "solver": self.kind,
            "domain": self.domain.to_document(),
            "center": [self.center.real, self.center.imag],
            "prevertex_angles": [float(t) for t in self.theta],
            "exponents": [float(b) for b in self.beta],
            "constant": [self.C.real, self.C.imag],
            "quadrature_order": self.order,
            "residual": self.residual,
            "error": self.error,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=1)


def map_from_document(doc) -> ConformalMap:
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConformalError(f"map state is not JSON: {exc}") from None
    if doc.get("format") != MAP_FORMAT:
        raise ConformalError("not a conformal map document")
    dm = domain_from_document(doc["domain"])
    w = np.array(_ccw_vertices(dm))
    cm = ConformalMap(
        domain=dm,
        center=complex(*doc["center"]),
        w=w,
        beta=np.array(doc["exponents"]),
        theta=np.array(doc["prevertex_angles"]),
        C=complex(*doc["constant"]),
        order=int(doc["quadrature_order"]),
        residual=float(doc["residual"]),
        error=float(doc["error"]),
        kind=doc.get("solver", SOLVER_KIND),
    )
    if len(cm.theta) != len(w):
        raise ConformalError("prevertex count does not match the domain")
    return cm


# -- quadrature kernels ---------------------------------------------------------


def _integrand(p: np.ndarray, z: np.ndarray, beta: np.ndarray, skip: Optional[int] = None) -> np.ndarray:
    ratio = 1.0 - p[..., None] / z
    if skip is not None:
        ratio[..., skip] = 1.0
    logs = np.log(ratio)
    return np.exp(logs @ beta)


def _gl(rule: _Rule, z, beta, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mid, half = (a + b) / 2, (b - a) / 2
    pts = mid[:, None] + half[:, None] * rule.gl_x[None, :]
    return half * (_integrand(pts, z, beta) @ rule.gl_w)


def _path(rule: _Rule, z, beta, a: np.ndarray, b: np.ndarray, max_steps: int = 400) -> np.ndarray:
    """Integral of the SC integrand along straight segments a -> b; a, b are not prevertices.

    Each step is at most half the distance to the nearest prevertex.
    """
    total = np.zeros(len(a), dtype=complex)
    length = np.abs(b - a)
    dirn = np.where(length > 0, (b - a) / np.where(length > 0, length, 1), 0)
    pos = a.astype(complex).copy()
    rem = length.copy()
    active = rem > 0
    for _ in range(max_steps):
        if not active.any():
            return total
        ia = np.nonzero(active)[0]
        p = pos[ia]
        d = np.abs(p[:, None] - z[None, :]).min(axis=1)
        step = np.minimum(rem[ia], 0.5 * d)
        last = step >= rem[ia]
        q = np.where(last, b[ia], p + dirn[ia] * step)
        total[ia] += _gl(rule, z, beta, p, q)
        pos[ia] = q
        rem[ia] = np.where(last, 0.0, rem[ia] - step)
        active[ia] = ~last
    raise ConformalError("quadrature path did not terminate (point on a prevertex?)")


def _jacobi_piece(rule: _Rule, z, beta, k: int, b: np.ndarray) -> np.ndarray:
    """Integral from the prevertex z_k to the points b, singular weight handled exactly."""
    a = z[k]
    out = np.zeros(len(b), dtype=complex)
    live = b != a
    if not live.any():
        return out
    b = b[live]
    x, wts = rule.gj[k]
    half = (b - a) / 2
    pts = a + half[:, None] * (1.0 + x[None, :])
    rest = _integrand(pts, z, beta, skip=k) @ wts
    c = -(b - a) / (2 * a)
    out[live] = half * rest * np.power(c, beta[k])
    return out


def _prevertex_integrals(rule: _Rule, z, beta) -> np.ndarray:
    """Integral from 0 to every prevertex."""
    n = len(z)
    sep = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(sep, np.inf)
    h = 0.5 * np.minimum(sep.min(axis=1), 1.0)
    p = z * (1.0 - h)
    out = _path(rule, z, beta, np.zeros(n, complex), p)
    for k in range(n):
        out[k] -= _jacobi_piece(rule, z, beta, k, p[k : k + 1])[0]
    return out


# -- parameter problem ------------------------------------------------------------


def _ccw_vertices(dm: DomainModel) -> list:
    poly = dm.polygon()
    return [poly[(-i) % len(poly)] for i in range(len(poly))]


def _angles(y: np.ndarray) -> np.ndarray:
    logits = np.concatenate([y, [0.0]])
    e = np.exp(logits - logits.max())
    gaps = TWO_PI * e / e.sum()
    return np.concatenate([[0.0], np.cumsum(gaps)[:-1]])


def _residual(y, rule, w, beta, center) -> np.ndarray:
    z = np.exp(1j * _angles(y))
    Phi = _prevertex_integrals(rule, z, beta)
    C = (w[0] - center) / Phi[0]
    r = center + C * Phi[1:] - w[1:]
    return np.concatenate([r.real, r.imag])


def _probe_points(n_probe: int = 100) -> np.ndarray:
    radii = np.array([0.2, 0.45, 0.7, 0.9])
    per = n_probe // len(radii)
    pts = [r * np.exp(1j * (TWO_PI * (np.arange(per) + 0.5 * i) / per)) for i, r in enumerate(radii)]
    return np.concatenate(pts)


def _split_first_gap(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Logits for a polygon with three more vertices right after nu_0 (counterclockwise)."""
    logits = np.concatenate([y, [0.0]])
    gaps = np.exp(logits - logits.max())
    gaps = gaps / gaps.sum()
    lengths = np.abs(np.diff(w[:5]))
    pieces = gaps[0] * lengths / lengths.sum()
    new = np.concatenate([pieces, gaps[1:]])
    return np.log(new[:-1] / new[-1])


def solve_map(
    dm: DomainModel,
    eps: float = 1e-8,
    order: int = 20,
    crowding_bound: int = CROWDING_BOUND,
) -> ConformalMap:
    """Solve the SC parameter problem with phi(0) = interior_ref and phi'(0) > 0."""
    if dm.depth > crowding_bound:
        raise ConformalError(
            f"depth J={dm.depth} exceeds the crowding bound {crowding_bound}; prevertices would underflow"
        )
    center = complex(dm.interior_ref)
    y, nfev, status = None, 0, 0
    # continuation in depth: each new feature is seeded inside the gap at nu_0
    levels = [dm] if dm.depth <= 1 or dm.staged is None else [build_domain(dm.staged, J) for J in range(1, dm.depth + 1)]
    for level in levels:
        w = np.array(_ccw_vertices(level))
        beta = interior_betas(w)
        rule = _Rule(beta, order)
        y = np.zeros(len(w) - 1) if y is None else _split_first_gap(y, w)
        for _ in range(3):
            sol = least_squares(
                _residual, y, args=(rule, w, beta, center), method="trf", jac="3-point", x_scale="jac",
                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000,
            )
            nfev += int(sol.nfev)
            status = int(sol.status)
            moved = np.abs(sol.x - y).max()
            y = sol.x
            if np.abs(sol.fun).max() < 1e-13 or moved < 1e-14:
                break
    n = len(w)
    theta = _angles(sol.x)
    z = np.exp(1j * theta)
    Phi = _prevertex_integrals(rule, z, beta)
    C = (w[0] - center) / Phi[0]
    gamma = -math.atan2(C.imag, C.real)
    theta = theta - gamma
    C = abs(C) + 0j
    gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
    cm = ConformalMap(dm, center, w, beta, theta, C, order=order)
    cm.diagnostics = {
        "nfev": nfev,
        "min_gap": float(gaps.min()),
        "max_gap": float(gaps.max()),
        "status": status,
    }
    _assess(cm)
    if not (cm.error <= eps):
        raise ConformalError(
            f"solver did not reach eps={eps:.3g}: error {cm.error:.3g}, "
            f"min prevertex gap {gaps.min():.3g} (crowding), nfev {nfev}"
        )
    return cm


def _assess(cm: ConformalMap) -> None:
    """Fill in residual (round trip at probes) and the overall error estimate."""
    W = cm.vertex_images()
    param = float(np.abs(W - cm.w).max())
    probes = _probe_points()
    images = cm(probes)
    hi = ConformalMap(cm.domain, cm.center, cm.w, cm.beta, cm.theta, cm.C, order=cm.order + 12)
    quad = float(np.abs(hi(probes) - images).max())
    back = cm.inverse(images)
    roundtrip = float(np.abs(cm(back) - images).max())
    cm.residual = max(roundtrip, param)
    cm.error = 2.0 * max(param, quad, roundtrip, 1e-14)
    cm.diagnostics.update(
        {"vertex_mismatch": param, "quadrature_spread": quad, "round_trip": roundtrip,
         "probe_preimage_drift": float(np.abs(back - probes).max())}
    )


# -- boundary values and derived quantities ----------------------------------------


@dataclass(frozen=True)
class BoundaryEstimate:
    value: complex
    error: float
    precision: int


def _radial_speed(cm: ConformalMap, zeta: complex, s: np.ndarray) -> np.ndarray:
    """|phi'((1 - s) zeta)| with the offset s kept explicit, accurate for s near 0."""
    u = zeta / cm.z
    factors = (1.0 - u)[None, :] + s[..., None] * u[None, :]
    return abs(cm.C) * np.exp(np.log(np.abs(factors)) @ cm.beta)


RADIAL_DEPTH = 50


def _radial_length_pieces(cm: ConformalMap, zeta: complex, start: int, count: int) -> np.ndarray:
    """Lengths of phi along the radius over s in [2^-(m+1), 2^-m] for m = start .. start+count-1."""
    m = np.arange(start, start + count)
    x, wt = cm._rule.gl_x, cm._rule.gl_w
    width = 0.5 ** (m + 1)
    s = width[:, None] * (1.5 + 0.5 * x[None, :])
    return width / 2 * (_radial_speed(cm, zeta, s) @ wt)


def boundary_point(cm: ConformalMap, zeta: complex, precision: int = 20) -> BoundaryEstimate:
    """phi(zeta) for |zeta| = 1 as the radial value at r = 1 - 2^-precision.

    The error bar is the remaining radial length of phi plus the map error,
    so it shrinks monotonically as the precision grows.
    """
    if abs(abs(zeta) - 1.0) > 1e-12:
        raise ConformalError("boundary_point needs a unimodular argument")
    if not 1 <= precision <= 46:
        raise ConformalError(f"precision {precision} unreachable in binary64 (use 1..46)")
    zeta = zeta / abs(zeta)
    pieces = _radial_length_pieces(cm, zeta, precision, RADIAL_DEPTH - precision)
    # past the last piece the length decays no slower than the worst corner allows;
    # the last piece is doubled to absorb rounding in the deepest offsets
    ratio = 2.0 ** -(1.0 + cm.beta.min())
    tail = 2 * pieces[-1] / (1.0 - ratio)
    r = 1.0 - 0.5 ** precision
    value = cm.at(r * zeta)
    err = float(pieces.sum() + tail + cm.error)
    if not math.isfinite(err):
        raise ConformalError("radial length diverged; precision unreachable near this prevertex")
    return BoundaryEstimate(value, err, precision)


def rho_details(cm: ConformalMap, n_angles: int = 512) -> dict:
    ang = TWO_PI * np.arange(n_angles) / n_angles
    half = 0.5 * np.exp(1j * ang)
    dist = np.abs(cm(half) - cm.center)
    fine = 0.5 * np.exp(1j * TWO_PI * np.arange(4 * n_angles) / (4 * n_angles))
    speed = float(np.abs(cm.dphi(fine)).max())
    safety = 1.25 * speed * math.pi / (2 * n_angles) + 2 * cm.error
    return {"grid_min": float(dist.min()), "safety": safety, "n_angles": n_angles}


def rho_lower_bound(cm: ConformalMap, n_angles: int = 512) -> mpq:
    """Rational lower bound for the minimum of |phi(0) - phi(zeta/2)| over the unit circle."""
    d = rho_details(cm, n_angles)
    lb = d["grid_min"] - d["safety"]
    if lb <= 0:
        raise ConformalError("rho margin collapsed: grid too coarse for the map's speed")
    q = dyadic(lb, 24)
    return q if q <= lb else q - mpq(1, 2**24)


@dataclass(frozen=True)
class ImageArc:
    radius: float
    zeta: complex
    preimages: np.ndarray
    points: np.ndarray
    errors: np.ndarray


def cap_angle(r: float) -> float:
    """Angle about zeta at which the circle |z - zeta| = r meets the unit circle."""
    return math.acos(-r / 2.0)


def image_arc(cm: ConformalMap, r: float, zeta: complex, resolution: int = 64) -> ImageArc:
    """Sampled image of the closed disk intersected with the circle |z - zeta| = r."""
    if not 0.0 < r < 1.0:
        raise ConformalError("image_arc needs 0 < r < 1")
    zeta = zeta / abs(zeta)
    psi_c = cap_angle(r)
    psi = np.linspace(psi_c, TWO_PI - psi_c, max(resolution, 2))
    pre = zeta + r * zeta * np.exp(1j * psi)
    pre = pre / np.maximum(np.abs(pre), 1.0)
    pts = cm(pre)
    return ImageArc(r, zeta, pre, pts, np.full(len(pts), cm.error))
