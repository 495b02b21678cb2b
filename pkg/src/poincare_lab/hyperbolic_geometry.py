"""Path lengths in the solved metric: distances, completeness, Koebe ratio.

Lengths are measured on an 8-neighbor graph whose edge weights are Euclidean
lengths scaled by e^{(u_i+u_j)/2}.  Shortest paths over-estimate continuum
distance by the metrication factor of the 8-neighbor stencil (at most ~8%),
which cancels in slope fits and divergence tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import Disconnected, InvalidParameters, ProbeTooShort
from .geometry import ScalarField

_OCTANT = (
    (1, 0), (0, 1), (1, 1), (1, -1),
)


class MetricGraph:
    """Active grid nodes joined to their 8 neighbors with metric weights."""

    def __init__(self, u: ScalarField):
        grid = u.grid
        self.grid = grid
        self.u = u
        h = grid.h
        idx = grid.node_index
        rows, cols, wts = [], [], []
        half = np.exp(0.5 * u.values)
        # slice pairs per octant direction; idx is [iy, ix] row-major
        ny, nx = idx.shape
        for dx, dy in _OCTANT:
            sl_a = (slice(max(0, -dy), ny - max(0, dy)),
                    slice(max(0, -dx), nx - max(0, dx)))
            sl_b = (slice(max(0, dy), ny - max(0, -dy)),
                    slice(max(0, dx), nx - max(0, -dx)))
            a = idx[sl_a].ravel()
            b = idx[sl_b].ravel()
            keep = (a >= 0) & (b >= 0)
            a, b = a[keep], b[keep]
            dist = h * np.hypot(dx, dy)
            w = dist * half[a] * half[b]
            rows.append(a)
            cols.append(b)
            wts.append(w)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        wts = np.concatenate(wts)
        if not np.all(np.isfinite(wts)) or (len(wts) and wts.min() <= 0):
            raise InvalidParameters("metric graph weights must be positive finite")
        n = grid.n_active
        m = sp.csr_matrix((wts, (rows, cols)), shape=(n, n))
        self.graph = m.maximum(m.T)

    def node_at(self, x: float, y: float) -> int:
        return int(self.grid.nearest_active(x, y))

    def distances_from(self, source: int) -> np.ndarray:
        return dijkstra(self.graph, directed=False, indices=[int(source)])[0]


def hyperbolic_distance(mg: MetricGraph, p: int, q: int) -> float:
    """Shortest-path length between two active nodes.

    The search always starts from the smaller index, so d(p,q) and d(q,p)
    share one summation order and agree to the last bit.
    """
    a, b = (int(p), int(q)) if p <= q else (int(q), int(p))
    d = mg.distances_from(a)[b]
    if not np.isfinite(d):
        raise Disconnected(f"nodes {p} and {q} lie in different components")
    return float(d)


@dataclass
class GrowthCurve:
    """Distances from an anchor to probe points approaching a target."""

    target: tuple
    offsets: np.ndarray
    deltas: np.ndarray
    distances: np.ndarray
    nodes: np.ndarray
    slope: float
    intercept: float

    @property
    def complete(self) -> bool:
        return 0.8 <= self.slope <= 1.2

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.distances)


def completeness_probe(
    mg: MetricGraph,
    p: int,
    target: tuple,
    offsets: Sequence[float],
    direction: Optional[tuple] = None,
) -> GrowthCurve:
    """Distance growth toward a boundary point or puncture.

    Probe points sit at the given offsets from the target along ``direction``
    (default: toward the anchor); each is snapped to its nearest active node
    and the x-axis of the slope fit uses that node's actual distance to the
    target, so snapping cannot bias the fit.  A slope of distance versus
    log(1/delta) near 1 certifies completeness in that direction; a bounded
    curve (vanishing increments) witnesses an incomplete metric.
    """
    grid = mg.grid
    offsets = np.asarray(sorted(offsets, reverse=True), dtype=float)
    if len(offsets) < 3:
        raise ProbeTooShort("need at least 3 offsets for a slope")
    if offsets[-1] < 2.0 * grid.h - 1e-12:
        raise InvalidParameters("offsets must stay at or above 2h")
    tx, ty = float(target[0]), float(target[1])
    if direction is None:
        ax, ay = grid.xs[p], grid.ys[p]
        norm = np.hypot(ax - tx, ay - ty)
        if norm == 0:
            raise InvalidParameters("anchor coincides with target")
        direction = ((ax - tx) / norm, (ay - ty) / norm)
    dx, dy = direction

    dall = mg.distances_from(p)
    nodes, deltas, dists = [], [], []
    for off in offsets:
        n = grid.nearest_active(tx + off * dx, ty + off * dy)
        if n in nodes:
            continue
        d = dall[n]
        if not np.isfinite(d):
            continue
        nodes.append(n)
        deltas.append(np.hypot(grid.xs[n] - tx, grid.ys[n] - ty))
        dists.append(d)
    if len(nodes) < 3:
        raise ProbeTooShort(f"only {len(nodes)} distinct reachable probe nodes")
    deltas = np.asarray(deltas)
    dists = np.asarray(dists)
    slope, intercept = np.polyfit(np.log(1.0 / deltas), dists, 1)
    return GrowthCurve(
        target=(tx, ty),
        offsets=offsets,
        deltas=deltas,
        distances=dists,
        nodes=np.asarray(nodes),
        slope=float(slope),
        intercept=float(intercept),
    )


@dataclass(frozen=True)
class KoebeRange:
    """Extremes of e^{-u}/delta over a mask."""

    min: float
    max: float
    argmin: int
    argmax: int


def koebe_ratio(
    u: ScalarField,
    delta: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
) -> KoebeRange:
    """Pinch of the reciprocal density against boundary distance.

    On a simply connected domain the ratio lies in [1/2, 2]: the lower half
    is the inscribed-disk barrier, the upper the Koebe quarter theorem with
    the sharp distortion constant 4.  The default mask keeps interior nodes
    at delta >= 4h, away from stencil pollution.
    """
    grid = u.grid
    if delta is None:
        delta = grid.boundary_distance(include_artificial=False)
    if mask is None:
        mask = grid.interior & (grid.boundary_distance(True) >= 4.0 * grid.h)
    ratio = np.exp(-u.values[mask]) / delta[mask]
    ids = np.nonzero(mask)[0]
    imin = int(np.argmin(ratio))
    imax = int(np.argmax(ratio))
    return KoebeRange(
        min=float(ratio[imin]),
        max=float(ratio[imax]),
        argmin=int(ids[imin]),
        argmax=int(ids[imax]),
    )
