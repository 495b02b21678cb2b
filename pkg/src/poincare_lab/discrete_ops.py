"""Difference operators on Shortley-Weller lattices.

The Laplacian at a node with arm fractions tE, tW, tN, tS (all 1 at
interior nodes) is

  L f = (2/h^2) [ fE / (tE (tE+tW)) + fW / (tW (tE+tW))
                + fN / (tN (tN+tS)) + fS / (tS (tN+tS))
                - (1/(tE tW) + 1/(tN tS)) fP ],

where an arm of fraction < 1 reads its value from the Dirichlet data at
the boundary crossing instead of a neighbour node.  At interior nodes
this is the classic (1, 1, 1, 1, -4)/h^2 stencil, second-order consistent;
the shortened rows are first-order consistent but keep the M-matrix sign
pattern, so comparison arguments survive discretisation.

The operator splits into a node-to-node matrix A and a hit-to-node matrix
B with L f = A f + B g; both are assembled once per grid and reused.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import CurvatureOverflow, GridMismatch
from .geometry import Grid, ScalarField

_EXP_CAP = 700.0


@dataclass
class LaplacianStencil:
    """Assembled Shortley-Weller Laplacian for one grid."""

    grid: Grid
    node_matrix: sp.csr_matrix
    hit_matrix: sp.csr_matrix

    @property
    def n_hits(self) -> int:
        return self.hit_matrix.shape[1]


def build_laplacian(grid: Grid) -> LaplacianStencil:
    """Assemble the node and boundary-hit matrices for a grid."""
    n = grid.n_active
    h2 = grid.h * grid.h
    tE, tW, tN, tS = (grid.theta[:, d] for d in range(4))
    pair = {0: tE + tW, 1: tE + tW, 2: tN + tS, 3: tN + tS}

    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [-(2.0 / h2) * (1.0 / (tE * tW) + 1.0 / (tN * tS))]

    hrows, hcols, hvals = [], [], []
    for d in range(4):
        coef = 2.0 / (h2 * grid.theta[:, d] * pair[d])
        nbr = grid.nbr[:, d]
        into_nodes = nbr >= 0
        rows.append(np.nonzero(into_nodes)[0])
        cols.append(nbr[into_nodes])
        vals.append(coef[into_nodes])
        into_hits = ~into_nodes
        hrows.append(np.nonzero(into_hits)[0])
        hcols.append(grid.hit_index[into_hits, d])
        hvals.append(coef[into_hits])

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    nh = len(grid.hit_x)
    B = sp.csr_matrix(
        (np.concatenate(hvals), (np.concatenate(hrows), np.concatenate(hcols))),
        shape=(n, nh),
    )
    return LaplacianStencil(grid, A, B)


BoundaryData = Union[float, np.ndarray, Callable]


def resolve_boundary_values(
    grid: Grid,
    data: BoundaryData,
    artificial_data: Optional[BoundaryData] = None,
) -> np.ndarray:
    """Boundary values at every hit point.

    ``data`` may be a constant, an array over hits, or a callable of the
    hit coordinates.  When ``artificial_data`` is given it overrides the
    values on hits that belong to truncation edges.
    """
    nh = len(grid.hit_x)

    def expand(d):
        if callable(d):
            return np.asarray(d(grid.hit_x, grid.hit_y), dtype=float)
        d = np.asarray(d, dtype=float)
        if d.ndim == 0:
            return np.full(nh, float(d))
        if d.shape != (nh,):
            raise GridMismatch(f"boundary data length {d.shape} != {nh} hits")
        return d.copy()

    g = expand(data)
    if artificial_data is not None and np.any(grid.hit_artificial):
        mask = grid.hit_artificial
        if callable(artificial_data):
            g[mask] = np.asarray(
                artificial_data(grid.hit_x[mask], grid.hit_y[mask]), dtype=float
            )
        else:
            a = np.asarray(artificial_data, dtype=float)
            g[mask] = a if a.ndim == 0 else a[mask]
    return g


def apply_laplacian(
    stencil: LaplacianStencil,
    f: ScalarField,
    boundary: BoundaryData = 0.0,
) -> ScalarField:
    """L f with Dirichlet data supplied on the boundary hits."""
    if f.grid is not stencil.grid and f.grid != stencil.grid:
        raise GridMismatch("field and stencil built on different grids")
    g = resolve_boundary_values(stencil.grid, boundary)
    vals = stencil.node_matrix @ f.values + stencil.hit_matrix @ g
    return ScalarField(stencil.grid, vals)


def interior_laplacian(stencil: LaplacianStencil, values: np.ndarray) -> np.ndarray:
    """L f at interior nodes only; boundary data never enters there."""
    return (stencil.node_matrix @ values)


def gauss_curvature(
    stencil: LaplacianStencil,
    u: ScalarField,
    k0: Union[float, np.ndarray] = 0.0,
) -> ScalarField:
    """Discrete Gauss curvature K = (K0 - L u) e^{-2u} of e^{2u} |dx|^2.

    Evaluated at interior nodes, where the stencil never touches boundary
    data; near-boundary entries are returned as zero and should be masked
    out by the caller.  Raises CurvatureOverflow when e^{-2u} leaves the
    floating range on an interior node.
    """
    if u.grid is not stencil.grid and u.grid != stencil.grid:
        raise GridMismatch("field and stencil built on different grids")
    grid = stencil.grid
    lap = stencil.node_matrix @ u.values
    two_u = 2.0 * u.values
    if np.any(two_u[grid.interior] < -_EXP_CAP):
        raise CurvatureOverflow("e^{-2u} overflows on an interior node")
    with np.errstate(over="raise"):
        try:
            factor = np.exp(np.clip(-two_u, -_EXP_CAP, _EXP_CAP))
        except FloatingPointError as exc:  # pragma: no cover
            raise CurvatureOverflow(str(exc)) from exc
    k0 = np.asarray(k0, dtype=float)
    vals = np.where(grid.interior, (k0 - lap) * factor, 0.0)
    if not np.all(np.isfinite(vals[grid.interior])):
        raise CurvatureOverflow("curvature not finite on an interior node")
    return ScalarField(grid, vals)


def probe_mask(grid: Grid, delta_min: float, include_artificial: bool = True) -> np.ndarray:
    """Interior nodes at least delta_min from the boundary."""
    delta = grid.boundary_distance(include_artificial=include_artificial)
    return grid.interior & (delta >= delta_min)
