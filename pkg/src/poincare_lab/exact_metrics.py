"""Closed-form metrics of curvature -1 and the two-puncture comparison family.

Every metric here is conformal to the plane, e^{2u} |dx|^2, and the log
density u is what gets evaluated.  The catalogue:

  unit disk          e^{2u} = 4 / (1 - r^2)^2
  disk of radius R   e^{2u} = 4 R^2 / (R^2 - r^2)^2   (r measured from the centre)
  half plane y > 0   e^{2u} = y^{-2}
  punctured disk     e^{2u} = (r log(1/r))^{-2}        on 0 < r < 1
  strip 0 < y < pi   e^{2u} = (sin y)^{-2}
  annulus            e^{2u} = (b / (r sin(b log(1/r))))^2   on e^{-pi/b} < r < 1
  quarter plane      e^{2u} = (x^2 + y^2) / (x^2 y^2)
  sinh family        e^{u}  = beta / (r sinh(beta log(1/r)))  on 0 < r < 1

All of these have Gauss curvature exactly -1 away from their singular loci;
the sinh family degenerates to the punctured disk as beta -> 0.

The last entry is the explicit conformal metric on the plane minus {0, 1},

  e^{w0} = A (1 + r^a)^b r^{-c} (1 + rho^a)^b rho^{-c},
  r = |z|, rho = |z - 1|,

whose curvature has the closed form returned by ``grauert_curvature``.  It
is negative everywhere, bounded above by a negative constant exactly when

  a - 2 + 2c <= 0   and   4c - a - 4ab - 2 >= 0,

and scales like A^{-2}, so ``find_A_star`` can push it below -1 by shrinking
A.  Unlike everything else in the catalogue this metric is incomplete at
its punctures: the density grows only like r^{-c} with c < 1, so radial
segments toward a puncture have finite length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameters, NoAdmissibleScale, SingularPoint

_SING_TOL = 1e-14


def _as_arrays(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    return np.broadcast_to(x, shape).astype(float), np.broadcast_to(y, shape).astype(float)


def _check(cond_bad: np.ndarray, what: str):
    if np.any(cond_bad):
        raise SingularPoint(f"evaluation point on singular locus: {what}")


def _log_sinh(t: np.ndarray) -> np.ndarray:
    """log(sinh t) for t > 0 without overflow or small-t cancellation."""
    t = np.asarray(t, dtype=float)
    small = t < 1e-4
    out = np.empty_like(t)
    ts = t[small]
    # sinh t = t (1 + t^2/6 + t^4/120 + ...)
    out[small] = np.log(ts) + np.log1p(ts * ts / 6.0 * (1.0 + ts * ts / 20.0))
    tl = t[~small]
    out[~small] = tl + np.log1p(-np.exp(-2.0 * tl)) - math.log(2.0)
    return out


@dataclass(frozen=True)
class ModelMetric:
    """A named closed-form metric with its parameters."""

    name: str
    params: tuple = ()

    @staticmethod
    def unit_disk():
        return ModelMetric("unit_disk")

    @staticmethod
    def disk(center=(0.0, 0.0), radius=1.0):
        if radius <= 0:
            raise InvalidParameters("disk radius must be positive")
        return ModelMetric("disk", (float(center[0]), float(center[1]), float(radius)))

    @staticmethod
    def half_plane():
        return ModelMetric("half_plane")

    @staticmethod
    def punctured_disk():
        return ModelMetric("punctured_disk")

    @staticmethod
    def strip():
        return ModelMetric("strip")

    @staticmethod
    def annulus(modulus):
        if modulus <= 0:
            raise InvalidParameters("annulus modulus must be positive")
        return ModelMetric("annulus", (float(modulus),))

    @staticmethod
    def quarter_plane():
        return ModelMetric("quarter_plane")

    @staticmethod
    def sinh_family(beta):
        if beta <= 0:
            raise InvalidParameters("sinh family parameter must be positive")
        return ModelMetric("sinh_family", (float(beta),))

    @staticmethod
    def grauert(A, a, b, c):
        if min(A, a, b, c) <= 0:
            raise InvalidParameters("two-puncture metric needs positive A, a, b, c")
        return ModelMetric("grauert", (float(A), float(a), float(b), float(c)))

    def curvature_is_minus_one(self) -> bool:
        return self.name != "grauert"

    def log_density(self, x, y) -> np.ndarray:
        return log_density(self, x, y)

    def curvature(self, x, y) -> np.ndarray:
        """Exact Gauss curvature at evaluation points."""
        if self.name == "grauert":
            A, a, b, c = self.params
            return grauert_curvature(A, a, b, c, x, y)
        x, _ = _as_arrays(x, y)
        return np.full(x.shape, -1.0)


def log_density(metric: ModelMetric, x, y) -> np.ndarray:
    """u such that the metric is e^{2u} |dx|^2, vectorised over points."""
    x, y = _as_arrays(x, y)
    name = metric.name
    if name == "unit_disk":
        r2 = x * x + y * y
        _check(r2 >= 1.0 - _SING_TOL, "|z| = 1")
        return math.log(2.0) - np.log1p(-r2)
    if name == "disk":
        cx, cy, R = metric.params
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        _check(r2 >= R * R * (1.0 - _SING_TOL), "|z - p| = R")
        return math.log(2.0 * R) - np.log(R * R - r2)
    if name == "half_plane":
        _check(y <= _SING_TOL, "y = 0")
        return -np.log(y)
    if name == "punctured_disk":
        r = np.hypot(x, y)
        _check((r <= _SING_TOL) | (r >= 1.0 - _SING_TOL), "puncture or |z| = 1")
        L = -np.log(r)
        return -np.log(r) - np.log(L)
    if name == "strip":
        _check((y <= _SING_TOL) | (y >= math.pi - _SING_TOL), "strip edge")
        return -np.log(np.sin(y))
    if name == "annulus":
        b = metric.params[0]
        r = np.hypot(x, y)
        r_in = math.exp(-math.pi / b)
        _check((r <= r_in + _SING_TOL) | (r >= 1.0 - _SING_TOL), "annulus rim")
        L = -np.log(r)
        return math.log(b) - np.log(r) - np.log(np.sin(b * L))
    if name == "quarter_plane":
        _check((x <= _SING_TOL) | (y <= _SING_TOL), "coordinate axis")
        return 0.5 * np.log(x * x + y * y) - np.log(x) - np.log(y)
    if name == "sinh_family":
        beta = metric.params[0]
        r = np.hypot(x, y)
        _check((r <= _SING_TOL) | (r >= 1.0 - _SING_TOL), "puncture or |z| = 1")
        L = -np.log(r)
        return math.log(beta) - np.log(r) - _log_sinh(beta * L)
    if name == "grauert":
        A, a, b, c = metric.params
        return np.log(grauert_density(A, a, b, c, x, y))
    raise InvalidParameters(f"unknown metric {name!r}")


def sinh_density(beta: float, x, y) -> np.ndarray:
    """Density e^{u} = beta / (r sinh(beta log(1/r))) on the punctured disk."""
    return np.exp(log_density(ModelMetric.sinh_family(beta), x, y))


def grauert_density(A: float, a: float, b: float, c: float, x, y) -> np.ndarray:
    """Density e^{w0} = A (1+r^a)^b r^{-c} (1+rho^a)^b rho^{-c}."""
    if min(A, a, b, c) <= 0:
        raise InvalidParameters("need positive A, a, b, c")
    x, y = _as_arrays(x, y)
    r = np.hypot(x, y)
    rho = np.hypot(x - 1.0, y)
    _check((r <= _SING_TOL) | (rho <= _SING_TOL), "puncture at 0 or 1")
    logw = (
        math.log(A)
        + b * np.log1p(r**a)
        - c * np.log(r)
        + b * np.log1p(rho**a)
        - c * np.log(rho)
    )
    return np.exp(logw)


def grauert_curvature(A: float, a: float, b: float, c: float, x, y) -> np.ndarray:
    """Exact Gauss curvature of the two-puncture metric.

    K = -(a^2 b / A^2) [ r^{a-2+2c} rho^{2c} / ((1+r^a)^{2+2b} (1+rho^a)^{2b})
                       + r^{2c} rho^{a-2+2c} / ((1+r^a)^{2b} (1+rho^a)^{2+2b}) ].
    """
    if min(A, a, b, c) <= 0:
        raise InvalidParameters("need positive A, a, b, c")
    x, y = _as_arrays(x, y)
    r = np.hypot(x, y)
    rho = np.hypot(x - 1.0, y)
    _check((r <= _SING_TOL) | (rho <= _SING_TOL), "puncture at 0 or 1")
    one_r = 1.0 + r**a
    one_rho = 1.0 + rho**a
    term1 = r ** (a - 2.0 + 2.0 * c) * rho ** (2.0 * c) / (
        one_r ** (2.0 + 2.0 * b) * one_rho ** (2.0 * b)
    )
    term2 = r ** (2.0 * c) * rho ** (a - 2.0 + 2.0 * c) / (
        one_r ** (2.0 * b) * one_rho ** (2.0 + 2.0 * b)
    )
    return -(a * a * b / (A * A)) * (term1 + term2)


def admissible(a: float, b: float, c: float) -> bool:
    """Whether the curvature of the two-puncture metric is pinned below a
    negative constant at the punctures and at infinity."""
    if min(a, b, c) <= 0:
        raise InvalidParameters("need positive a, b, c")
    return (a - 2.0 + 2.0 * c) <= 0.0 and (4.0 * c - a - 4.0 * a * b - 2.0) >= 0.0


def _sample_lattice(radius: float, n: int):
    """Deterministic square lattice covering |z| <= radius, punctures removed."""
    s = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(s, s)
    X = X.ravel()
    Y = Y.ravel()
    keep = (np.hypot(X, Y) <= radius) & (np.hypot(X, Y) > 1e-9) & (np.hypot(X - 1.0, Y) > 1e-9)
    return X[keep], Y[keep]


def find_A_star(
    a: float,
    b: float,
    c: float,
    window_radius: float = 10.0,
    n: int = 201,
    tol: float = 1e-10,
) -> float:
    """Largest A for which sup K <= -1 on a sample lattice over |z| <= radius.

    Since K scales as A^{-2}, sup K is increasing in A and a bisection
    bracket is easy to establish.  Raises InvalidParameters when (a, b, c)
    is not admissible.
    """
    if not admissible(a, b, c):
        raise InvalidParameters(f"(a, b, c) = {(a, b, c)} is not admissible")
    X, Y = _sample_lattice(window_radius, n)

    def sup_k(A):
        return float(np.max(grauert_curvature(A, a, b, c, X, Y)))

    lo = None  # known good (sup K <= -1)
    hi = None  # known bad
    A = 1.0
    if sup_k(A) <= -1.0:
        lo = A
        for _ in range(200):
            A *= 2.0
            if sup_k(A) > -1.0:
                hi = A
                break
            lo = A
        if hi is None:
            raise NoAdmissibleScale("sup K stayed below -1 for absurdly large A")
    else:
        hi = A
        for _ in range(200):
            A *= 0.5
            if sup_k(A) <= -1.0:
                lo = A
                break
            hi = A
        if lo is None:
            raise NoAdmissibleScale("sup K stayed above -1 for absurdly small A")

    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if sup_k(mid) <= -1.0:
            lo = mid
        else:
            hi = mid
    return lo
