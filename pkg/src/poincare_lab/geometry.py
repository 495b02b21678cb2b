"""Planar domains and Shortley-Weller lattices.

A domain is described by a small JSON-serialisable record (``DomainSpec``)
and compiled into an intersection of primitive constraints (disks, disk
complements, half planes, ellipses, polygons).  ``build_grid`` lays a square
lattice over the bounding box and classifies every node as OUTSIDE,
INTERIOR (all four axis neighbours inside) or NEAR_BOUNDARY.  For a
near-boundary node the crossing of each short leg with the boundary is
solved exactly (quadratic for circles and ellipses, linear for edges), so
the fractional offsets used by the difference stencils carry no geometric
error beyond floating arithmetic.

Truncation edges of intrinsically unbounded domains (half plane, quarter
plane, strip, punctured disk, twice punctured plane) are flagged
``artificial``; downstream code can impose closed-form data there instead
of blow-up data.  Distances to the boundary are available both for the full
truncated region and for the natural part alone, where isolated punctures
count with their Euclidean point distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    EmptyDomain,
    FeatureTooFine,
    GridMismatch,
    InvalidDomainSpec,
    UndefinedAtCorner,
)

OUTSIDE = 0
INTERIOR = 1
NEAR_BOUNDARY = 2

#: axis directions in stencil order: east, west, north, south
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))

STRIP_HEIGHT = math.pi

_OFFSET_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# primitive constraints
# ---------------------------------------------------------------------------


class _Constraint:
    """One smooth inequality cutting out part of the plane."""

    artificial = False

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def crossing(self, px, py, dx, dy, h):
        """First t in (0, 1] where p + t*h*d leaves the constraint, else inf."""
        raise NotImplementedError

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Unsigned distance from interior points to the constraint curve."""
        raise NotImplementedError


def _roots_in_unit(A, B, C):
    """Smallest root of A t^2 + B t + C in (0, 1 + tiny], else inf.

    Vectorised and numerically stable: the root pair is computed with the
    sign trick q = -(B + sign(B) sqrt(disc)) / 2 to avoid cancellation.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    disc = B * B - 4.0 * A * C
    out = np.full(np.broadcast(A, B, C).shape, np.inf)
    ok = disc >= 0.0
    if not np.any(ok):
        return out
    sq = np.sqrt(np.where(ok, disc, 0.0))
    sgn = np.where(B >= 0.0, 1.0, -1.0)
    q = -0.5 * (B + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(A != 0.0, q / A, np.inf)
        r2 = np.where(q != 0.0, C / q, np.inf)
    hi = 1.0 + 1e-12
    for r in (r1, r2):
        good = ok & (r > 0.0) & (r <= hi)
        out = np.where(good & (r < out), r, out)
    return out


class _DiskIn(_Constraint):
    """Region inside a circle."""

    def __init__(self, cx, cy, r, artificial=False):
        self.cx, self.cy, self.r = float(cx), float(cy), float(r)
        self.artificial = artificial

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 < self.r**2

    def crossing(self, px, py, dx, dy, h):
        ux, uy = px - self.cx, py - self.cy
        A = h * h * (dx * dx + dy * dy)
        B = 2.0 * h * (dx * ux + dy * uy)
        C = ux * ux + uy * uy - self.r**2
        return _roots_in_unit(A, B, C)

    def distance(self, x, y):
        return self.r - np.hypot(x - self.cx, y - self.cy)


class _DiskOut(_Constraint):
    """Region outside a circle (a circular hole)."""

    def __init__(self, cx, cy, r, artificial=False):
        self.cx, self.cy, self.r = float(cx), float(cy), float(r)
        self.artificial = artificial

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 > self.r**2

    def crossing(self, px, py, dx, dy, h):
        ux, uy = px - self.cx, py - self.cy
        A = h * h * (dx * dx + dy * dy)
        B = 2.0 * h * (dx * ux + dy * uy)
        C = ux * ux + uy * uy - self.r**2
        return _roots_in_unit(A, B, C)

    def distance(self, x, y):
        return np.hypot(x - self.cx, y - self.cy) - self.r


class _HalfPlaneGE(_Constraint):
    """Region on the side n . x > d of a line, n a unit vector."""

    def __init__(self, nx, ny, d, artificial=False):
        n = math.hypot(nx, ny)
        self.nx, self.ny, self.d = nx / n, ny / n, d / n
        self.artificial = artificial

    def contains(self, x, y):
        return self.nx * x + self.ny * y > self.d

    def crossing(self, px, py, dx, dy, h):
        denom = h * (self.nx * dx + self.ny * dy)
        num = self.d - (self.nx * px + self.ny * py)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(denom != 0.0, num / denom, np.inf)
        bad = (t <= 0.0) | (t > 1.0 + 1e-12)
        return np.where(bad, np.inf, t)

    def distance(self, x, y):
        return self.nx * x + self.ny * y - self.d


class _EllipseIn(_Constraint):
    """Region inside an axis-aligned origin-centred ellipse."""

    def __init__(self, a, b, artificial=False):
        self.a, self.b = float(a), float(b)
        self.artificial = artificial

    def contains(self, x, y):
        return (x / self.a) ** 2 + (y / self.b) ** 2 < 1.0

    def crossing(self, px, py, dx, dy, h):
        vx, vy = h * dx / self.a, h * dy / self.b
        ux, uy = px / self.a, py / self.b
        A = vx * vx + vy * vy
        B = 2.0 * (ux * vx + uy * vy)
        C = ux * ux + uy * uy - 1.0
        return _roots_in_unit(A, B, C)

    def distance(self, x, y):
        return ellipse_boundary_distance(self.a, self.b, x, y)


class _PolygonIn(_Constraint):
    """Region inside a simple polygon, vertices stored counter-clockwise."""

    def __init__(self, vertices, artificial=False):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise InvalidDomainSpec("polygon needs at least three 2d vertices")
        area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area2 == 0.0:
            raise InvalidDomainSpec("degenerate polygon")
        if area2 < 0.0:
            v = v[::-1]
        self.v = v
        self.artificial = artificial

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        v = self.v
        n = len(v)
        for k in range(n):
            x1, y1 = v[k]
            x2, y2 = v[(k + 1) % n]
            straddles = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= straddles & (x < np.where(straddles, xc, np.inf))
        return inside

    def crossing(self, px, py, dx, dy, h):
        px = np.asarray(px, dtype=float)
        best = np.full(px.shape, np.inf)
        vx, vy = h * dx, h * dy
        v = self.v
        n = len(v)
        for k in range(n):
            x1, y1 = v[k]
            ex, ey = v[(k + 1) % n] - v[k]
            det = vx * (-ey) - vy * (-ex)
            if det == 0.0:
                continue
            rx, ry = x1 - px, y1 - py
            t = (rx * (-ey) + ex * ry) / det
            s = (vx * ry - vy * rx) / det
            good = (t > 0.0) & (t <= 1.0 + 1e-12) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
            best = np.where(good & (t < best), t, best)
        return best

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        best = np.full(np.broadcast(x, y).shape, np.inf)
        v = self.v
        n = len(v)
        for k in range(n):
            x1, y1 = v[k]
            ex, ey = v[(k + 1) % n] - v[k]
            ee = ex * ex + ey * ey
            t = np.clip(((x - x1) * ex + (y - y1) * ey) / ee, 0.0, 1.0)
            d = np.hypot(x - (x1 + t * ex), y - (y1 + t * ey))
            best = np.minimum(best, d)
        return best


def ellipse_boundary_distance(a: float, b: float, x, y) -> np.ndarray:
    """Distance from points to the ellipse (x/a)^2 + (y/b)^2 = 1.

    Foot-point search by bisection on the first-quadrant parameter, which is
    monotone for the reduced problem; 80 halvings bring the parameter
    interval far below floating resolution.
    """
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    shape = np.broadcast(x, y).shape
    x = np.broadcast_to(x, shape).ravel()
    y = np.broadcast_to(y, shape).ravel()
    lo = np.zeros_like(x)
    hi = np.full_like(x, 0.5 * math.pi)

    def g(t):
        return (a * a - b * b) * np.cos(t) * np.sin(t) - x * a * np.sin(t) + y * b * np.cos(t)

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    t = 0.5 * (lo + hi)
    d = np.hypot(a * np.cos(t) - x, b * np.sin(t) - y)
    return d.reshape(shape)


# ---------------------------------------------------------------------------
# boundary curves for sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundarySample:
    """Point sample of a boundary component.

    ``arclength`` accumulates along the component; ``normal`` points out of
    the domain; ``curvature`` is signed positive when the boundary bends
    around the interior (unit circle of a disk: +1, rim of a circular
    hole: -1/r).
    """

    x: float
    y: float
    arclength: float
    normal: tuple
    curvature: float
    component: int
    artificial: bool


class _Curve:
    artificial = False

    def length(self) -> float:
        raise NotImplementedError

    def sample(self, s: np.ndarray):
        """Return (x, y, nx, ny, kappa) arrays at arclength positions s."""
        raise NotImplementedError


class _CircleCurve(_Curve):
    def __init__(self, cx, cy, r, hole: bool, artificial=False):
        self.cx, self.cy, self.r, self.hole = cx, cy, float(r), hole
        self.artificial = artificial

    def length(self):
        return 2.0 * math.pi * self.r

    def sample(self, s):
        t = np.asarray(s, dtype=float) / self.r
        cx, sx = np.cos(t), np.sin(t)
        x = self.cx + self.r * cx
        y = self.cy + self.r * sx
        if self.hole:
            return x, y, -cx, -sx, -1.0 / self.r
        return x, y, cx, sx, 1.0 / self.r


class _SegmentCurve(_Curve):
    def __init__(self, p0, p1, normal, artificial=False):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        self.normal = np.asarray(normal, dtype=float)
        self.artificial = artificial

    def length(self):
        return float(np.hypot(*(self.p1 - self.p0)))

    def sample(self, s):
        s = np.asarray(s, dtype=float)
        L = self.length()
        t = s / L
        x = self.p0[0] + t * (self.p1[0] - self.p0[0])
        y = self.p0[1] + t * (self.p1[1] - self.p0[1])
        nx = np.full_like(x, self.normal[0])
        ny = np.full_like(x, self.normal[1])
        return x, y, nx, ny, 0.0


class _EllipseCurve(_Curve):
    def __init__(self, a, b, artificial=False):
        self.a, self.b = float(a), float(b)
        self.artificial = artificial
        t = np.linspace(0.0, 2.0 * math.pi, 16385)
        speed = np.hypot(self.a * np.sin(t), self.b * np.cos(t))
        ds = 0.5 * (speed[1:] + speed[:-1]) * np.diff(t)
        self._t_table = t
        self._s_table = np.concatenate([[0.0], np.cumsum(ds)])

    def length(self):
        return float(self._s_table[-1])

    def _param(self, s):
        return np.interp(np.asarray(s, dtype=float), self._s_table, self._t_table)

    def sample(self, s):
        t = self._param(s)
        a, b = self.a, self.b
        x = a * np.cos(t)
        y = b * np.sin(t)
        speed = np.hypot(a * np.sin(t), b * np.cos(t))
        nx = b * np.cos(t) / speed
        ny = a * np.sin(t) / speed
        kappa = a * b / speed**3
        return x, y, nx, ny, kappa


# ---------------------------------------------------------------------------
# domain specification
# ---------------------------------------------------------------------------

_KINDS = (
    "unit_disk",
    "disk",
    "half_plane_window",
    "quarter_plane_window",
    "strip",
    "annulus",
    "punctured_disk",
    "twice_punctured_plane",
    "ellipse",
    "polygon",
    "half_disk",
)


@dataclass(frozen=True)
class DomainSpec:
    """Declarative description of a planar domain.

    Use the class methods to construct instances; ``params`` holds the
    kind-specific numbers exactly as serialised to JSON.
    """

    kind: str
    params: tuple = ()

    # -- constructors -------------------------------------------------------

    @staticmethod
    def unit_disk() -> "DomainSpec":
        return DomainSpec("unit_disk")

    @staticmethod
    def disk(center=(0.0, 0.0), radius=1.0) -> "DomainSpec":
        if radius <= 0:
            raise InvalidDomainSpec("disk radius must be positive")
        return DomainSpec("disk", (float(center[0]), float(center[1]), float(radius)))

    @staticmethod
    def half_plane_window(x_min, x_max, y_max) -> "DomainSpec":
        if not (x_min < x_max and y_max > 0):
            raise InvalidDomainSpec("half plane window must satisfy x_min < x_max, y_max > 0")
        return DomainSpec("half_plane_window", (float(x_min), float(x_max), float(y_max)))

    @staticmethod
    def quarter_plane_window(x_max, y_max) -> "DomainSpec":
        if not (x_max > 0 and y_max > 0):
            raise InvalidDomainSpec("quarter plane window needs positive extents")
        return DomainSpec("quarter_plane_window", (float(x_max), float(y_max)))

    @staticmethod
    def strip(x_min, x_max) -> "DomainSpec":
        if not x_min < x_max:
            raise InvalidDomainSpec("strip window must satisfy x_min < x_max")
        return DomainSpec("strip", (float(x_min), float(x_max)))

    @staticmethod
    def annulus(modulus) -> "DomainSpec":
        if modulus <= 0:
            raise InvalidDomainSpec("annulus modulus must be positive")
        return DomainSpec("annulus", (float(modulus),))

    @staticmethod
    def punctured_disk(epsilon) -> "DomainSpec":
        if not 0 < epsilon < 1:
            raise InvalidDomainSpec("puncture truncation radius must lie in (0, 1)")
        return DomainSpec("punctured_disk", (float(epsilon),))

    @staticmethod
    def twice_punctured_plane(outer_radius, epsilon) -> "DomainSpec":
        if not (epsilon > 0 and outer_radius > 2 * epsilon):
            raise InvalidDomainSpec("need outer_radius > 2 * epsilon > 0")
        return DomainSpec("twice_punctured_plane", (float(outer_radius), float(epsilon)))

    @staticmethod
    def ellipse(a, b) -> "DomainSpec":
        if not (a > 0 and b > 0):
            raise InvalidDomainSpec("ellipse semi-axes must be positive")
        return DomainSpec("ellipse", (float(a), float(b)))

    @staticmethod
    def polygon(vertices) -> "DomainSpec":
        v = tuple((float(p[0]), float(p[1])) for p in vertices)
        if len(v) < 3:
            raise InvalidDomainSpec("polygon needs at least three vertices")
        return DomainSpec("polygon", v)

    @staticmethod
    def half_disk(radius=1.0) -> "DomainSpec":
        if radius <= 0:
            raise InvalidDomainSpec("half disk radius must be positive")
        return DomainSpec("half_disk", (float(radius),))

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_dict(self) -> dict:
        p = self.params
        if self.kind == "unit_disk":
            return {"kind": "unit_disk"}
        if self.kind == "disk":
            return {"kind": "disk", "center": [p[0], p[1]], "radius": p[2]}
        if self.kind == "half_plane_window":
            return {"kind": "half_plane_window", "x_min": p[0], "x_max": p[1], "y_max": p[2]}
        if self.kind == "quarter_plane_window":
            return {"kind": "quarter_plane_window", "x_max": p[0], "y_max": p[1]}
        if self.kind == "strip":
            return {"kind": "strip", "x_min": p[0], "x_max": p[1]}
        if self.kind == "annulus":
            return {"kind": "annulus", "modulus": p[0]}
        if self.kind == "punctured_disk":
            return {"kind": "punctured_disk", "epsilon": p[0]}
        if self.kind == "twice_punctured_plane":
            return {"kind": "twice_punctured_plane", "outer_radius": p[0], "epsilon": p[1]}
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": p[0], "b": p[1]}
        if self.kind == "polygon":
            return {"kind": "polygon", "vertices": [[q[0], q[1]] for q in p]}
        if self.kind == "half_disk":
            return {"kind": "half_disk", "radius": p[0]}
        raise InvalidDomainSpec(f"unknown kind {self.kind!r}")

    @staticmethod
    def from_dict(d: dict) -> "DomainSpec":
        try:
            kind = d["kind"]
        except (KeyError, TypeError) as exc:
            raise InvalidDomainSpec("missing 'kind' field") from exc
        try:
            if kind == "unit_disk":
                return DomainSpec.unit_disk()
            if kind == "disk":
                return DomainSpec.disk(d["center"], d["radius"])
            if kind == "half_plane_window":
                return DomainSpec.half_plane_window(d["x_min"], d["x_max"], d["y_max"])
            if kind == "quarter_plane_window":
                return DomainSpec.quarter_plane_window(d["x_max"], d["y_max"])
            if kind == "strip":
                return DomainSpec.strip(d["x_min"], d["x_max"])
            if kind == "annulus":
                return DomainSpec.annulus(d["modulus"])
            if kind == "punctured_disk":
                return DomainSpec.punctured_disk(d["epsilon"])
            if kind == "twice_punctured_plane":
                return DomainSpec.twice_punctured_plane(d["outer_radius"], d["epsilon"])
            if kind == "ellipse":
                return DomainSpec.ellipse(d["a"], d["b"])
            if kind == "polygon":
                return DomainSpec.polygon(d["vertices"])
            if kind == "half_disk":
                return DomainSpec.half_disk(d["radius"])
        except KeyError as exc:
            raise InvalidDomainSpec(f"missing field for kind {kind!r}: {exc}") from exc
        raise InvalidDomainSpec(f"unknown kind {kind!r}")

    @staticmethod
    def from_json(text: str) -> "DomainSpec":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidDomainSpec(f"not valid JSON: {exc}") from exc
        return DomainSpec.from_dict(d)

    # -- compiled geometry --------------------------------------------------

    def _compiled(self) -> "_Region":
        return _compile(self)

    @property
    def simply_connected(self) -> bool:
        return self.kind not in ("annulus", "punctured_disk", "twice_punctured_plane")

    def contains(self, x, y) -> np.ndarray:
        """Strict interior test, vectorised."""
        reg = self._compiled()
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for c in reg.constraints:
            out &= c.contains(x, y)
        return out

    def boundary_distance_exact(self, x, y, include_artificial: bool = True) -> np.ndarray:
        """Distance to the region boundary, or to the natural part alone.

        With ``include_artificial=False`` the truncation edges are ignored;
        punctures then count as points, so for the twice punctured plane the
        natural distance is min(|z|, |z - 1|).
        """
        reg = self._compiled()
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, np.inf)
        for c in reg.constraints:
            if include_artificial or not c.artificial:
                out = np.minimum(out, c.distance(x, y))
        if not include_artificial:
            for (px, py) in reg.punctures:
                out = np.minimum(out, np.hypot(x - px, y - py))
        return out


class _Region:
    def __init__(self, constraints, curves, feature, bbox, punctures=()):
        self.constraints = constraints
        self.curves = curves
        self.feature = feature
        self.bbox = bbox
        self.punctures = punctures


_REGION_CACHE: dict = {}


def _compile(spec: DomainSpec) -> _Region:
    key = (spec.kind, spec.params)
    reg = _REGION_CACHE.get(key)
    if reg is None:
        reg = _compile_uncached(spec)
        if len(_REGION_CACHE) > 256:
            _REGION_CACHE.clear()
        _REGION_CACHE[key] = reg
    return reg


def _compile_uncached(spec: DomainSpec) -> _Region:
    k, p = spec.kind, spec.params
    if k == "unit_disk":
        return _Region(
            [_DiskIn(0.0, 0.0, 1.0)],
            [_CircleCurve(0.0, 0.0, 1.0, hole=False)],
            feature=2.0,
            bbox=(-1.0, 1.0, -1.0, 1.0),
        )
    if k == "disk":
        cx, cy, r = p
        return _Region(
            [_DiskIn(cx, cy, r)],
            [_CircleCurve(cx, cy, r, hole=False)],
            feature=2.0 * r,
            bbox=(cx - r, cx + r, cy - r, cy + r),
        )
    if k == "half_plane_window":
        x0, x1, y1 = p
        cons = [
            _HalfPlaneGE(0.0, 1.0, 0.0),
            _HalfPlaneGE(1.0, 0.0, x0, artificial=True),
            _HalfPlaneGE(-1.0, 0.0, -x1, artificial=True),
            _HalfPlaneGE(0.0, -1.0, -y1, artificial=True),
        ]
        curves = [
            _SegmentCurve((x0, 0.0), (x1, 0.0), (0.0, -1.0)),
            _SegmentCurve((x0, 0.0), (x0, y1), (-1.0, 0.0), artificial=True),
            _SegmentCurve((x1, 0.0), (x1, y1), (1.0, 0.0), artificial=True),
            _SegmentCurve((x0, y1), (x1, y1), (0.0, 1.0), artificial=True),
        ]
        return _Region(cons, curves, feature=min(x1 - x0, y1), bbox=(x0, x1, 0.0, y1))
    if k == "quarter_plane_window":
        x1, y1 = p
        cons = [
            _HalfPlaneGE(1.0, 0.0, 0.0),
            _HalfPlaneGE(0.0, 1.0, 0.0),
            _HalfPlaneGE(-1.0, 0.0, -x1, artificial=True),
            _HalfPlaneGE(0.0, -1.0, -y1, artificial=True),
        ]
        curves = [
            _SegmentCurve((0.0, 0.0), (x1, 0.0), (0.0, -1.0)),
            _SegmentCurve((0.0, 0.0), (0.0, y1), (-1.0, 0.0)),
            _SegmentCurve((x1, 0.0), (x1, y1), (1.0, 0.0), artificial=True),
            _SegmentCurve((0.0, y1), (x1, y1), (0.0, 1.0), artificial=True),
        ]
        return _Region(cons, curves, feature=min(x1, y1), bbox=(0.0, x1, 0.0, y1))
    if k == "strip":
        x0, x1 = p
        H = STRIP_HEIGHT
        cons = [
            _HalfPlaneGE(0.0, 1.0, 0.0),
            _HalfPlaneGE(0.0, -1.0, -H),
            _HalfPlaneGE(1.0, 0.0, x0, artificial=True),
            _HalfPlaneGE(-1.0, 0.0, -x1, artificial=True),
        ]
        curves = [
            _SegmentCurve((x0, 0.0), (x1, 0.0), (0.0, -1.0)),
            _SegmentCurve((x0, H), (x1, H), (0.0, 1.0)),
            _SegmentCurve((x0, 0.0), (x0, H), (-1.0, 0.0), artificial=True),
            _SegmentCurve((x1, 0.0), (x1, H), (1.0, 0.0), artificial=True),
        ]
        return _Region(cons, curves, feature=min(x1 - x0, H), bbox=(x0, x1, 0.0, H))
    if k == "annulus":
        b = p[0]
        r_in = math.exp(-math.pi / b)
        cons = [_DiskIn(0.0, 0.0, 1.0), _DiskOut(0.0, 0.0, r_in)]
        curves = [
            _CircleCurve(0.0, 0.0, 1.0, hole=False),
            _CircleCurve(0.0, 0.0, r_in, hole=True),
        ]
        return _Region(
            cons, curves, feature=min(1.0 - r_in, 2.0 * r_in), bbox=(-1.0, 1.0, -1.0, 1.0)
        )
    if k == "punctured_disk":
        eps = p[0]
        cons = [_DiskIn(0.0, 0.0, 1.0), _DiskOut(0.0, 0.0, eps, artificial=True)]
        curves = [
            _CircleCurve(0.0, 0.0, 1.0, hole=False),
            _CircleCurve(0.0, 0.0, eps, hole=True, artificial=True),
        ]
        return _Region(
            cons,
            curves,
            feature=min(1.0 - eps, 2.0 * eps),
            bbox=(-1.0, 1.0, -1.0, 1.0),
            punctures=((0.0, 0.0),),
        )
    if k == "twice_punctured_plane":
        R, eps = p
        cons = [
            _DiskIn(0.0, 0.0, R, artificial=True),
            _DiskOut(0.0, 0.0, eps, artificial=True),
            _DiskOut(1.0, 0.0, eps, artificial=True),
        ]
        curves = [
            _CircleCurve(0.0, 0.0, R, hole=False, artificial=True),
            _CircleCurve(0.0, 0.0, eps, hole=True, artificial=True),
            _CircleCurve(1.0, 0.0, eps, hole=True, artificial=True),
        ]
        return _Region(
            cons,
            curves,
            feature=2.0 * eps,
            bbox=(-R, R, -R, R),
            punctures=((0.0, 0.0), (1.0, 0.0)),
        )
    if k == "ellipse":
        a, b = p
        return _Region(
            [_EllipseIn(a, b)],
            [_EllipseCurve(a, b)],
            feature=2.0 * min(a, b),
            bbox=(-a, a, -b, b),
        )
    if k == "polygon":
        poly = _PolygonIn(p)
        v = poly.v
        n = len(v)
        curves = []
        for i in range(n):
            p0, p1 = v[i], v[(i + 1) % n]
            e = p1 - p0
            L = math.hypot(*e)
            nrm = (e[1] / L, -e[0] / L)
            curves.append(_SegmentCurve(p0, p1, nrm))
        xs, ys = v[:, 0], v[:, 1]
        return _Region(
            [poly],
            curves,
            feature=min(xs.max() - xs.min(), ys.max() - ys.min()),
            bbox=(xs.min(), xs.max(), ys.min(), ys.max()),
        )
    if k == "half_disk":
        r = p[0]
        cons = [_DiskIn(0.0, 0.0, r), _HalfPlaneGE(0.0, 1.0, 0.0)]
        curves = [
            _CircleCurve(0.0, 0.0, r, hole=False),
            _SegmentCurve((-r, 0.0), (r, 0.0), (0.0, -1.0)),
        ]
        return _Region(cons, curves, feature=r, bbox=(-r, r, 0.0, r))
    raise InvalidDomainSpec(f"unknown kind {k!r}")


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------


class Grid:
    """Square lattice with Shortley-Weller boundary bookkeeping.

    Active nodes (interior and near-boundary) are numbered in row-major
    scan order, which every field and every CSV dump follows.  ``theta``
    holds the leg fractions of the four stencil arms; legs that end on the
    boundary point at an entry of the hit table instead of a neighbour.
    """

    def __init__(self, domain, h, m0x, m0y, nx, ny, cls):
        self.domain = domain
        self.h = float(h)
        self.m0x, self.m0y = int(m0x), int(m0y)
        self.nx, self.ny = int(nx), int(ny)
        self.cls = cls

        jj, ii = np.nonzero(cls != OUTSIDE)
        self.ii = ii.astype(np.int64)
        self.jj = jj.astype(np.int64)
        self.n_active = len(ii)
        node_index = np.full(cls.shape, -1, dtype=np.int64)
        node_index[jj, ii] = np.arange(self.n_active)
        self.node_index = node_index
        self.xs = (self.m0x + self.ii) * self.h
        self.ys = (self.m0y + self.jj) * self.h
        self.interior = cls[jj, ii] == INTERIOR

        self.nbr = np.full((self.n_active, 4), -1, dtype=np.int64)
        for d, (dx, dy) in enumerate(DIRECTIONS):
            i2 = self.ii + dx
            j2 = self.jj + dy
            ok = (i2 >= 0) & (i2 < self.nx) & (j2 >= 0) & (j2 < self.ny)
            idx = np.full(self.n_active, -1, dtype=np.int64)
            idx[ok] = node_index[j2[ok], i2[ok]]
            self.nbr[:, d] = idx

        self.theta = np.ones((self.n_active, 4))
        self.hit_index = np.full((self.n_active, 4), -1, dtype=np.int64)
        self.hit_x = np.empty(0)
        self.hit_y = np.empty(0)
        self.hit_artificial = np.empty(0, dtype=bool)
        self.hit_node = np.empty(0, dtype=np.int64)
        self.hit_dir = np.empty(0, dtype=np.int64)
        self._dist_cache: dict = {}

    # -- geometry queries ---------------------------------------------------

    def boundary_distance(self, include_artificial: bool = True) -> np.ndarray:
        """Distance of every active node to the (natural) boundary."""
        key = bool(include_artificial)
        if key not in self._dist_cache:
            self._dist_cache[key] = self.domain.boundary_distance_exact(
                self.xs, self.ys, include_artificial=key
            )
        return self._dist_cache[key]

    def nearest_active(self, px, py):
        """Index of the active node closest to each query point.

        Scalar inputs return a plain int.  The search widens square blocks
        until one holds an active node, then widens once more by sqrt(2) so
        a corner hit cannot hide a closer node just outside the block.
        """
        scalar = np.isscalar(px) and np.isscalar(py)
        px = np.atleast_1d(np.asarray(px, dtype=float))
        py = np.atleast_1d(np.asarray(py, dtype=float))
        out = np.empty(len(px), dtype=np.int64)

        def best_in_block(i0, j0, ring, x, y):
            ilo, ihi = max(0, i0 - ring), min(self.nx - 1, i0 + ring)
            jlo, jhi = max(0, j0 - ring), min(self.ny - 1, j0 + ring)
            block = self.node_index[jlo : jhi + 1, ilo : ihi + 1]
            cand = block[block >= 0]
            if not len(cand):
                return -1
            dx = self.xs[cand] - x
            dy = self.ys[cand] - y
            return int(cand[np.argmin(dx * dx + dy * dy)])

        for k in range(len(px)):
            fi = px[k] / self.h - self.m0x
            fj = py[k] / self.h - self.m0y
            i0 = int(np.clip(round(fi), 0, self.nx - 1))
            j0 = int(np.clip(round(fj), 0, self.ny - 1))
            found = -1
            for ring in range(0, max(self.nx, self.ny)):
                found = best_in_block(i0, j0, ring, px[k], py[k])
                if found >= 0:
                    if ring > 2:
                        wide = int(math.ceil(ring * math.sqrt(2.0))) + 1
                        found = best_in_block(i0, j0, wide, px[k], py[k])
                    break
            out[k] = found
        return int(out[0]) if scalar else out

    def interpolate(self, values: np.ndarray, px, py):
        """Bilinear interpolation of a node field at arbitrary points.

        Returns (vals, ok); points whose cell has any inactive corner get
        ok = False and a NaN value.
        """
        px = np.atleast_1d(np.asarray(px, dtype=float))
        py = np.atleast_1d(np.asarray(py, dtype=float))
        fi = px / self.h - self.m0x
        fj = py / self.h - self.m0y
        i0 = np.floor(fi).astype(np.int64)
        j0 = np.floor(fj).astype(np.int64)
        tx = fi - i0
        ty = fj - j0
        ok = (i0 >= 0) & (i0 < self.nx - 1) & (j0 >= 0) & (j0 < self.ny - 1)
        i0c = np.clip(i0, 0, self.nx - 2)
        j0c = np.clip(j0, 0, self.ny - 2)
        k00 = self.node_index[j0c, i0c]
        k10 = self.node_index[j0c, i0c + 1]
        k01 = self.node_index[j0c + 1, i0c]
        k11 = self.node_index[j0c + 1, i0c + 1]
        ok &= (k00 >= 0) & (k10 >= 0) & (k01 >= 0) & (k11 >= 0)
        vals = np.full(len(px), np.nan)
        if np.any(ok):
            v00 = values[k00[ok]]
            v10 = values[k10[ok]]
            v01 = values[k01[ok]]
            v11 = values[k11[ok]]
            a, b = tx[ok], ty[ok]
            vals[ok] = (
                v00 * (1 - a) * (1 - b)
                + v10 * a * (1 - b)
                + v01 * (1 - a) * b
                + v11 * a * b
            )
        return vals, ok

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Grid)
            and self.domain == other.domain
            and self.h == other.h
            and self.m0x == other.m0x
            and self.m0y == other.m0y
            and self.nx == other.nx
            and self.ny == other.ny
        )

    def __hash__(self):
        return hash((self.domain, self.h, self.m0x, self.m0y, self.nx, self.ny))


@dataclass
class ScalarField:
    """Real values attached to the active nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_active,):
            raise GridMismatch(
                f"field length {self.values.shape} does not match grid "
                f"({self.grid.n_active} active nodes)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @staticmethod
    def from_function(grid: Grid, f: Callable) -> "ScalarField":
        return ScalarField(grid, np.asarray(f(grid.xs, grid.ys), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def build_grid(domain: DomainSpec, h: float) -> Grid:
    """Lay a lattice of spacing h over the domain and classify its nodes.

    The lattice is anchored at integer multiples of h so that refining by
    two keeps every existing node in place.  Raises FeatureTooFine when h
    exceeds a quarter of the smallest geometric feature and EmptyDomain
    when no node lands inside.
    """
    if h <= 0:
        raise InvalidDomainSpec("grid spacing must be positive")
    reg = domain._compiled()
    if h > reg.feature / 4.0 + 1e-12:
        raise FeatureTooFine(
            f"h = {h} too coarse for feature size {reg.feature} "
            f"(need h <= feature / 4)"
        )
    xmin, xmax, ymin, ymax = reg.bbox
    m0x = math.floor(xmin / h) - 1
    m1x = math.ceil(xmax / h) + 1
    m0y = math.floor(ymin / h) - 1
    m1y = math.ceil(ymax / h) + 1
    nx = m1x - m0x + 1
    ny = m1y - m0y + 1
    X = (m0x + np.arange(nx)) * h
    Y = (m0y + np.arange(ny)) * h
    XX, YY = np.meshgrid(X, Y)

    inside = np.ones(XX.shape, dtype=bool)
    for c in reg.constraints:
        inside &= c.contains(XX, YY)
    if not inside.any():
        raise EmptyDomain(f"no lattice node of spacing {h} inside {domain.kind}")

    all_nbrs_in = np.ones_like(inside)
    pad = np.zeros_like(inside)
    for dx, dy in DIRECTIONS:
        shifted = pad.copy()
        src_y = slice(max(0, -dy), inside.shape[0] - max(0, dy))
        dst_y = slice(max(0, dy), inside.shape[0] - max(0, -dy))
        src_x = slice(max(0, -dx), inside.shape[1] - max(0, dx))
        dst_x = slice(max(0, dx), inside.shape[1] - max(0, -dx))
        shifted[dst_y, dst_x] = inside[src_y, src_x]
        all_nbrs_in &= shifted

    cls = np.zeros(XX.shape, dtype=np.int8)
    cls[inside & all_nbrs_in] = INTERIOR
    cls[inside & ~all_nbrs_in] = NEAR_BOUNDARY

    grid = Grid(domain, h, m0x, m0y, nx, ny, cls)

    # short legs: solve the exact crossing for every near-boundary arm
    hit_x, hit_y, hit_art, hit_node, hit_dir = [], [], [], [], []
    for d, (dx, dy) in enumerate(DIRECTIONS):
        node_ids = np.nonzero(grid.nbr[:, d] < 0)[0]
        if len(node_ids) == 0:
            continue
        px = grid.xs[node_ids]
        py = grid.ys[node_ids]
        ts = np.stack(
            [c.crossing(px, py, dx, dy, h) for c in reg.constraints], axis=0
        )
        which = np.argmin(ts, axis=0)
        t = ts[which, np.arange(len(node_ids))]
        t = np.where(np.isfinite(t), t, 1.0)
        t = np.clip(t, _OFFSET_FLOOR, 1.0)
        grid.theta[node_ids, d] = t
        hx = px + t * h * dx
        hy = py + t * h * dy
        art = np.array([reg.constraints[w].artificial for w in which], dtype=bool)
        start = sum(len(a) for a in hit_x)
        grid.hit_index[node_ids, d] = start + np.arange(len(node_ids))
        hit_x.append(hx)
        hit_y.append(hy)
        hit_art.append(art)
        hit_node.append(node_ids)
        hit_dir.append(np.full(len(node_ids), d, dtype=np.int64))

    if hit_x:
        grid.hit_x = np.concatenate(hit_x)
        grid.hit_y = np.concatenate(hit_y)
        grid.hit_artificial = np.concatenate(hit_art)
        grid.hit_node = np.concatenate(hit_node)
        grid.hit_dir = np.concatenate(hit_dir)
    return grid


# ---------------------------------------------------------------------------
# boundary sampling and curvature
# ---------------------------------------------------------------------------


def boundary_samples(
    domain: DomainSpec,
    spacing: float,
    natural_only: bool = True,
    corner_margin: float = 0.0,
) -> list:
    """Evenly spaced samples along the boundary components.

    Each component is walked with a step close to ``spacing`` (rounded so
    the walk closes up).  Samples within ``corner_margin`` of a segment
    endpoint are dropped, since normals and curvature are meaningless at
    corners.
    """
    reg = domain._compiled()
    out = []
    for comp, curve in enumerate(reg.curves):
        if natural_only and curve.artificial:
            continue
        L = curve.length()
        n = max(4, int(round(L / spacing)))
        closed = isinstance(curve, (_CircleCurve, _EllipseCurve))
        if closed:
            s = (np.arange(n) + 0.5) * (L / n)
        else:
            s = np.linspace(0.0, L, n + 1)
            keep = (s >= corner_margin) & (s <= L - corner_margin)
            s = s[keep]
        x, y, nxv, nyv, kap = curve.sample(s)
        kap = np.broadcast_to(np.asarray(kap, dtype=float), x.shape)
        nxv = np.broadcast_to(np.asarray(nxv, dtype=float), x.shape)
        nyv = np.broadcast_to(np.asarray(nyv, dtype=float), x.shape)
        for k in range(len(s)):
            out.append(
                BoundarySample(
                    x=float(x[k]),
                    y=float(y[k]),
                    arclength=float(s[k]),
                    normal=(float(nxv[k]), float(nyv[k])),
                    curvature=float(kap[k]),
                    component=comp,
                    artificial=curve.artificial,
                )
            )
    return out


def boundary_curvature(domain: DomainSpec, arclength: float, component: int = 0) -> float:
    """Signed curvature of one boundary component at an arclength position.

    Positive when the boundary bends around the interior.  Raises
    UndefinedAtCorner within 1e-9 of a polygon vertex or segment endpoint.
    """
    reg = domain._compiled()
    try:
        curve = reg.curves[component]
    except IndexError as exc:
        raise InvalidDomainSpec(f"no boundary component {component}") from exc
    L = curve.length()
    s = float(arclength)
    if not 0.0 <= s <= L + 1e-12:
        raise InvalidDomainSpec(f"arclength {s} outside [0, {L}]")
    if isinstance(curve, _SegmentCurve):
        if s < 1e-9 or s > L - 1e-9:
            raise UndefinedAtCorner(f"arclength {s} is at a segment endpoint")
        return 0.0
    _, _, _, _, kap = curve.sample(np.array([s]))
    return float(np.asarray(kap).ravel()[0])
