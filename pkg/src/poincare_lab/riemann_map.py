"""Disk-covering map built from the Green function of a simply connected domain.

The pipeline is: solve the Dirichlet problem for the regular part eta of the
Green function log|z-p| + eta, integrate its harmonic conjugate zeta on the
dual lattice, and assemble Phi = (z-p) e^{eta + i zeta}.  The log singularity
and its 2 pi winding are carried analytically by the (z-p) factor, so zeta is
single-valued and the map vanishes at p exactly.  The map cross-validates the
curvature solver through the identity e^{-u} = (1-|Phi|^2) / (2 |Phi'|).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.sparse.linalg import splu

from .discrete_ops import LaplacianStencil, build_laplacian
from .errors import (
    CutCrossesNode,
    DerivativeDegenerate,
    InvalidParameters,
    NotSimplyConnected,
)
from .geometry import Grid, ScalarField


@dataclass
class ComplexField:
    """One complex value per active node."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_active,):
            raise InvalidParameters("complex field length must match active nodes")
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameters("complex field must be finite")


@dataclass
class GreenFunction:
    """Green function with pole p, split into log|z-p| and its regular part."""

    field: ScalarField
    eta: np.ndarray
    p: tuple
    p_node: int


def green_function(
    source: Union[Grid, LaplacianStencil],
    p: tuple,
    min_boundary_distance: float = 0.1,
) -> GreenFunction:
    """Solve for the Green function log|z-p| + eta with zero boundary values.

    p snaps to the nearest active node so the singular factor vanishes at a
    lattice point.  The stored field value at that node is a finite
    placeholder (the true value is -infinity); consumers that need the
    structure near p use the factored form.
    """
    stencil = source if isinstance(source, LaplacianStencil) else build_laplacian(source)
    grid = stencil.grid
    if not grid.domain.simply_connected:
        raise NotSimplyConnected(f"domain kind {grid.domain.kind!r} is not simply connected")
    n = grid.nearest_active(float(p[0]), float(p[1]))
    px, py = float(grid.xs[n]), float(grid.ys[n])
    if grid.boundary_distance(include_artificial=True)[n] < min_boundary_distance:
        raise InvalidParameters(
            f"pole ({px:.3f},{py:.3f}) closer than {min_boundary_distance} to the boundary"
        )

    gvals = -0.5 * np.log((grid.hit_x - px) ** 2 + (grid.hit_y - py) ** 2)
    rhs = -(stencil.hit_matrix @ gvals)
    eta = splu(stencil.node_matrix.tocsc()).solve(rhs)

    r2 = (grid.xs - px) ** 2 + (grid.ys - py) ** 2
    u = np.where(r2 > 0, 0.5 * np.log(np.maximum(r2, 1e-300)), 0.0) + eta
    u[n] = eta[n] + np.log(grid.h / 2.0)
    return GreenFunction(field=ScalarField(grid, u), eta=eta, p=(px, py), p_node=int(n))


@dataclass
class Conjugate:
    """Harmonic conjugate data: zeta per node plus the analytic angle part."""

    field: ScalarField
    zeta: np.ndarray
    cut_angle: float
    cycle_defect_max: float
    cycle_defect_interior: float


def _usable_cells(grid: Grid) -> np.ndarray:
    idx = grid.node_index
    return (idx[:-1, :-1] >= 0) & (idx[:-1, 1:] >= 0) & (idx[1:, :-1] >= 0) & (idx[1:, 1:] >= 0)


def _auto_cut(grid: Grid, px: float, py: float, p_node: int) -> float:
    ang = np.arctan2(grid.ys - py, grid.xs - px)
    ang = np.delete(ang, p_node)
    ang = np.unique(np.sort(ang))
    if len(ang) < 2:
        return np.pi / 4
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    return float(np.mod(ang[k] + 0.5 * gaps[k] + np.pi, 2 * np.pi) - np.pi)


def harmonic_conjugate(
    green: GreenFunction,
    cut_angle: Optional[float] = None,
) -> Conjugate:
    """Integrate the conjugate of the Green function, well defined mod 2 pi.

    The regular part eta is integrated over a spanning tree of the dual
    lattice (cell centers); each cycle defect equals h^2 times the discrete
    Laplacian of eta around the enclosed node, reported rather than averaged
    away.  The singular part contributes arg(z-p) analytically along a branch
    cut that must avoid all active nodes.
    """
    grid = green.field.grid
    px, py = green.p
    if cut_angle is None:
        cut_angle = _auto_cut(grid, px, py, green.p_node)
    ang = np.arctan2(grid.ys - py, grid.xs - px)
    offcut = np.mod(ang - cut_angle, 2 * np.pi)
    offcut = np.minimum(offcut, 2 * np.pi - offcut)
    onray = (offcut < 1e-12) & (np.arange(grid.n_active) != green.p_node)
    if np.any(onray):
        k = int(np.nonzero(onray)[0][0])
        raise CutCrossesNode(
            f"cut at angle {cut_angle:.6f} passes through node ({grid.xs[k]:.4f},{grid.ys[k]:.4f})"
        )

    idx = grid.node_index
    eta = green.eta
    cells = _usable_cells(grid)
    ny, nx = cells.shape
    zeta_c = np.full((ny, nx), np.nan)
    # root cell: the one holding p's lattice cell corner, else any usable
    ip = int(round(px / grid.h - grid.m0x))
    jp = int(round(py / grid.h - grid.m0y))
    root = None
    if 0 <= jp < ny and 0 <= ip < nx and cells[jp, ip]:
        root = (jp, ip)
    else:
        cand = np.argwhere(cells)
        if not len(cand):
            raise InvalidParameters("no complete lattice cell inside the domain")
        root = tuple(cand[0])
    zeta_c[root] = 0.0

    from collections import deque

    q = deque([root])
    while q:
        j, i = q.popleft()
        z0 = zeta_c[j, i]
        # +x neighbor: crossing the primal edge idx[j, i+1] -- idx[j+1, i+1]
        if i + 1 < nx and cells[j, i + 1] and np.isnan(zeta_c[j, i + 1]):
            zeta_c[j, i + 1] = z0 - (eta[idx[j + 1, i + 1]] - eta[idx[j, i + 1]])
            q.append((j, i + 1))
        if i - 1 >= 0 and cells[j, i - 1] and np.isnan(zeta_c[j, i - 1]):
            zeta_c[j, i - 1] = z0 + (eta[idx[j + 1, i]] - eta[idx[j, i]])
            q.append((j, i - 1))
        # +y neighbor: crossing the primal edge idx[j+1, i] -- idx[j+1, i+1]
        if j + 1 < ny and cells[j + 1, i] and np.isnan(zeta_c[j + 1, i]):
            zeta_c[j + 1, i] = z0 + (eta[idx[j + 1, i + 1]] - eta[idx[j + 1, i]])
            q.append((j + 1, i))
        if j - 1 >= 0 and cells[j - 1, i] and np.isnan(zeta_c[j - 1, i]):
            zeta_c[j - 1, i] = z0 - (eta[idx[j, i + 1]] - eta[idx[j, i]])
            q.append((j - 1, i))

    # cycle defects: plaquette of 4 cells around each node with all 4 cells usable
    defect_max = 0.0
    defect_int = 0.0
    c00 = zeta_c[:-1, :-1]
    c10 = zeta_c[:-1, 1:]
    c11 = zeta_c[1:, 1:]
    c01 = zeta_c[1:, :-1]
    ok4 = ~(np.isnan(c00) | np.isnan(c10) | np.isnan(c11) | np.isnan(c01))
    if np.any(ok4):
        jj, ii = np.nonzero(ok4)
        nodes = idx[jj + 1, ii + 1]
        defect = _plaquette_defects(eta, idx, jj, ii)
        defect_max = float(np.max(np.abs(defect)))
        inner = grid.interior[nodes]
        if np.any(inner):
            defect_int = float(np.max(np.abs(defect[inner])))

    zeta_n = _cells_to_nodes(grid, zeta_c, cells)

    a = np.angle((grid.xs - px + 1j * (grid.ys - py)) * np.exp(1j * (np.pi - cut_angle)))
    a = a - (np.pi - cut_angle)
    v = zeta_n + a
    v[green.p_node] = zeta_n[green.p_node]
    return Conjugate(
        field=ScalarField(grid, v),
        zeta=zeta_n,
        cut_angle=float(cut_angle),
        cycle_defect_max=defect_max,
        cycle_defect_interior=defect_int,
    )


def _plaquette_defects(eta, idx, jj, ii):
    """Conjugate increments summed around the 4-cell loop at node (ii+1, jj+1).

    The loop telescopes to the plain 5-point Laplacian of eta times h^2 at
    the enclosed node, which is the path-independence defect of the dual
    integration there.
    """
    center = eta[idx[jj + 1, ii + 1]]
    return (
        eta[idx[jj, ii + 1]]
        + eta[idx[jj + 1, ii + 2]]
        + eta[idx[jj + 2, ii + 1]]
        + eta[idx[jj + 1, ii]]
        - 4.0 * center
    )


def _cells_to_nodes(grid: Grid, zeta_c: np.ndarray, cells: np.ndarray) -> np.ndarray:
    ny, nx = cells.shape
    acc = np.zeros(grid.n_active)
    cnt = np.zeros(grid.n_active)
    idx = grid.node_index
    jj, ii = np.nonzero(cells)
    vals = zeta_c[jj, ii]
    for dj, di in ((0, 0), (0, 1), (1, 0), (1, 1)):
        nodes = idx[jj + dj, ii + di]
        np.add.at(acc, nodes, vals)
        np.add.at(cnt, nodes, 1.0)
    have = cnt > 0
    out = np.zeros(grid.n_active)
    out[have] = acc[have] / cnt[have]
    if not np.all(have):
        # flood-fill rim nodes with a neighbor average until covered
        missing = np.nonzero(~have)[0]
        guard = 0
        while len(missing) and guard < 64:
            guard += 1
            for n in list(missing):
                nb = grid.nbr[n]
                nb = nb[(nb >= 0)]
                nb = nb[have[nb]] if len(nb) else nb
                if len(nb):
                    out[n] = float(np.mean(out[nb]))
                    have[n] = True
            missing = np.nonzero(~have)[0]
        if len(missing):
            raise InvalidParameters("isolated nodes without conjugate coverage")
    return out


def covering_map(green: GreenFunction, conj: Conjugate) -> ComplexField:
    """Assemble Phi = (z - p) e^{eta + i zeta}; zero of multiplicity 1 at p."""
    grid = green.field.grid
    px, py = green.p
    z = grid.xs + 1j * grid.ys
    phi = (z - (px + 1j * py)) * np.exp(green.eta + 1j * conj.zeta)
    return ComplexField(grid, phi)


def zero_count(phi: ComplexField, p_node: int) -> int:
    """Discrete argument-principle count of zeros of Phi.

    Sums the winding of the four corner values around every complete lattice
    cell.  Cells touching the node where Phi vanishes identically are skipped
    and contribute the known simple zero there.
    """
    grid = phi.grid
    idx = grid.node_index
    cells = _usable_cells(grid)
    jj, ii = np.nonzero(cells)
    corners = np.stack(
        [
            phi.values[idx[jj, ii]],
            phi.values[idx[jj, ii + 1]],
            phi.values[idx[jj + 1, ii + 1]],
            phi.values[idx[jj + 1, ii]],
        ]
    )
    touches_p = np.zeros(len(jj), dtype=bool)
    for c in range(4):
        dj, di = ((0, 0), (0, 1), (1, 1), (1, 0))[c]
        touches_p |= idx[jj + dj, ii + di] == p_node
    a = np.angle(corners)
    w = np.zeros(len(jj))
    for c in range(4):
        d = a[(c + 1) % 4] - a[c]
        d = np.mod(d + np.pi, 2 * np.pi) - np.pi
        w += d
    winds = np.rint(w[~touches_p] / (2 * np.pi)).astype(int)
    return int(np.sum(winds)) + 1


@dataclass
class PullbackReport:
    """Residual of the pullback identity on a probe mask."""

    residual: np.ndarray
    mask: np.ndarray
    sup: float
    l2: float


def pullback_identity_check(
    phi: ComplexField,
    u: ScalarField,
    min_delta: float = 0.1,
) -> PullbackReport:
    """Checks e^{-u} = (1 - |Phi|^2) / (2 |Phi'|) on interior probe nodes.

    Phi' is the centered difference (d/dx - i d/dy)/2 of Phi, available at
    nodes whose four axis neighbors are active.
    """
    grid = phi.grid
    if grid is not u.grid:
        raise InvalidParameters("pullback check needs fields on one grid")
    if not np.iscomplexobj(phi.values) or np.iscomplexobj(u.values):
        raise InvalidParameters("arguments are (complex map, real log-density)")
    h = grid.h
    nbr = grid.nbr
    full = np.all(nbr >= 0, axis=1)
    vals = phi.values
    safe = np.clip(nbr, 0, None)
    dzdx = (vals[safe[:, 0]] - vals[safe[:, 1]]) / (2.0 * h)
    dzdy = (vals[safe[:, 2]] - vals[safe[:, 3]]) / (2.0 * h)
    dphi = 0.5 * (dzdx - 1j * dzdy)
    delta = grid.boundary_distance(include_artificial=True)
    mask = full & (delta >= min_delta)
    mag = np.abs(dphi)
    if np.any(mask & (mag < 1e-8)):
        k = int(np.nonzero(mask & (mag < 1e-8))[0][0])
        raise DerivativeDegenerate(
            f"|Phi'| < 1e-8 at node ({grid.xs[k]:.4f},{grid.ys[k]:.4f})"
        )
    resid = np.zeros(grid.n_active)
    resid[mask] = np.exp(-u.values[mask]) - (1.0 - np.abs(vals[mask]) ** 2) / (
        2.0 * mag[mask]
    )
    r = resid[mask]
    return PullbackReport(
        residual=resid,
        mask=mask,
        sup=float(np.max(np.abs(r))) if len(r) else float("nan"),
        l2=float(np.sqrt(np.mean(r * r))) if len(r) else float("nan"),
    )


def cauchy_riemann_defect(phi: ComplexField) -> np.ndarray:
    """|d Phi/dx + i d Phi/dy| at full-stencil nodes (0 for holomorphic maps)."""
    grid = phi.grid
    nbr = grid.nbr
    full = np.all(nbr >= 0, axis=1)
    safe = np.clip(nbr, 0, None)
    vals = phi.values
    h = grid.h
    dzdx = (vals[safe[:, 0]] - vals[safe[:, 1]]) / (2.0 * h)
    dzdy = (vals[safe[:, 2]] - vals[safe[:, 3]]) / (2.0 * h)
    out = np.zeros(grid.n_active)
    out[full] = np.abs(dzdx + 1j * dzdy)[full]
    return out
