"""Dirichlet solves and blow-up schemes for the curvature equation.

The discrete problem is

    L u - e^{2u} = K0        on active nodes,
    u = g                    on boundary hits,

with L the Shortley-Weller Laplacian.  A damped Newton iteration handles a
single Dirichlet solve; the Jacobian L - 2 e^{2u} I shifts the M-matrix
further into invertibility so steps always exist.  ``blowup_ladder`` chains
solves with increasing boundary constants and warm starts, which is the
workhorse for approximating the maximal (blow-up boundary data) solution.
Certificates accompany every ladder:

  * monotonicity: raising the boundary constant may only raise the
    solution, up to solver tolerance;
  * barrier: e^{2u} delta^2 <= 4 + O(h), delta the distance to the
    boundary of the solved region (the inscribed-disk bound).

``exhaustion_solve`` runs ladders over an increasing window sequence and
records the values at fixed probe points; ``dichotomy_detect`` classifies
the resulting level curve as CONVERGED (the limits exist and the domain
carries a complete metric of curvature -1) or DIVERGING (the probe values
sink without bound, uniformly in space), or stays INCONCLUSIVE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .discrete_ops import (
    BoundaryData,
    LaplacianStencil,
    build_laplacian,
    resolve_boundary_values,
)
from .errors import (
    LadderNotConverged,
    MonotonicityViolated,
    NewtonDiverged,
    WindowSequenceInvalid,
)
from .geometry import DomainSpec, Grid, ScalarField, build_grid

_EXP_CAP = 700.0

CONVERGED = "CONVERGED"
DIVERGING = "DIVERGING"
INCONCLUSIVE = "INCONCLUSIVE"


def _exp2u(u: np.ndarray) -> np.ndarray:
    return np.exp(np.minimum(2.0 * u, _EXP_CAP))


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for the Newton iteration and the blow-up ladder.

    newton_tol          sup-norm residual target
    max_newton_iters    hard iteration cap per Dirichlet solve
    armijo              sufficient-decrease fraction for backtracking
    min_step            smallest damping factor before giving up
    ladder_levels       boundary constants, strictly increasing
    ladder_stop_tol     early stop when the probe set moves less than this
    probe_delta         probe set is the interior at this distance from
                        the boundary
    monotone            use the lagged sub/supersolution sweep instead of
                        Newton (slow, kept as a cross-check fallback)
    converged_decrement   dichotomy: last level decrement below this reads
                          as CONVERGED
    diverging_decrement   dichotomy: last decrements above this, uniformly
                          in space, read as DIVERGING
    uniformity_factor     max/min probe decrement ratio allowed in the
                          DIVERGING verdict
    """

    newton_tol: float = 1e-10
    max_newton_iters: int = 60
    armijo: float = 1e-4
    min_step: float = 2.0**-30
    ladder_levels: tuple = (1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    ladder_stop_tol: float = 0.0
    probe_delta: float = 0.1
    monotone: bool = False
    monotone_iters: int = 4000
    monotone_tol: float = 1e-9
    converged_decrement: float = 5e-2
    diverging_decrement: float = 0.3
    uniformity_factor: float = 4.0


@dataclass
class SolveReport:
    """Everything a single solve or ladder leaves behind."""

    u: ScalarField
    residual_norms: list = field(default_factory=list)
    newton_iters: int = 0
    levels: list = field(default_factory=list)
    level_reports: list = field(default_factory=list)
    snapshot_indices: Optional[np.ndarray] = None
    snapshots: list = field(default_factory=list)
    monotonicity_violation: float = 0.0
    barrier_violation: float = float("nan")
    final_residual: float = float("nan")
    stopped_early: bool = False
    verdict: str = "OK"


def _default_initial_guess(grid: Grid, g: np.ndarray) -> np.ndarray:
    """Constant boundary level clipped by the inscribed-disk barrier."""
    a0 = float(np.max(g)) if len(g) else 0.0
    delta = grid.boundary_distance(include_artificial=True)
    barrier = np.log(2.0 / np.maximum(delta, 1e-300))
    return np.minimum(a0, barrier)


def solve_dirichlet(
    stencil: LaplacianStencil,
    g: BoundaryData,
    k0: Union[float, np.ndarray] = 0.0,
    cfg: SolverConfig = SolverConfig(),
    initial: Optional[np.ndarray] = None,
    artificial_data: Optional[BoundaryData] = None,
) -> SolveReport:
    """Solve L u - e^{2u} = K0 with Dirichlet data g on the boundary hits."""
    grid = stencil.grid
    gv = resolve_boundary_values(grid, g, artificial_data)
    if cfg.monotone:
        return _solve_monotone(stencil, gv, k0, cfg, initial)

    A = stencil.node_matrix
    bg = stencil.hit_matrix @ gv
    k0v = np.broadcast_to(np.asarray(k0, dtype=float), (grid.n_active,))
    u = _default_initial_guess(grid, gv) if initial is None else np.asarray(initial, dtype=float).copy()

    def residual(w):
        return A @ w + bg - _exp2u(w) - k0v

    # Rounding in the stencil rows leaves a residual floor of
    # eps * (row weight) * |u|; row weights grow like 1/theta near grazing
    # hits, so take them from the assembled matrices rather than h alone.
    row_weight = float(np.max(np.abs(A).sum(axis=1))) if A.nnz else 0.0
    bg_weight = float(np.max(np.abs(bg))) if len(bg) else 0.0

    def tol_for(w):
        scale = row_weight * (1.0 + float(np.max(np.abs(w)))) + bg_weight
        return max(cfg.newton_tol, 8.0 * np.finfo(float).eps * scale)

    F = residual(u)
    norm = float(np.max(np.abs(F)))
    norms = [norm]
    iters = 0
    while norm > tol_for(u) and iters < cfg.max_newton_iters:
        J = (A - sp.diags(2.0 * _exp2u(u))).tocsc()
        step = splu(J).solve(-F)
        t = 1.0
        while True:
            u_try = u + t * step
            F_try = residual(u_try)
            norm_try = float(np.max(np.abs(F_try)))
            if norm_try <= (1.0 - cfg.armijo * t) * norm or norm_try <= tol_for(u_try):
                break
            t *= 0.5
            if t < cfg.min_step:
                raise NewtonDiverged(
                    f"no residual decrease at step {iters} (residual {norm:.3e})"
                )
        u, F, norm = u_try, F_try, norm_try
        norms.append(norm)
        iters += 1
    if norm > tol_for(u):
        raise NewtonDiverged(
            f"residual {norm:.3e} above tolerance {tol_for(u):.1e} "
            f"after {iters} iterations"
        )
    return SolveReport(
        u=ScalarField(grid, u),
        residual_norms=norms,
        newton_iters=iters,
        final_residual=norm,
    )


def _solve_monotone(
    stencil: LaplacianStencil,
    gv: np.ndarray,
    k0,
    cfg: SolverConfig,
    initial: Optional[np.ndarray],
) -> SolveReport:
    """Lagged-nonlinearity sweep from a constant supersolution downward.

    Solves (L - lam) u_next = e^{2 u} - lam u + K0 - B g with lam at least
    the slope 2 e^{2 sup u}; each sweep is a single sparse solve and the
    iterates decrease monotonically to the solution.
    """
    grid = stencil.grid
    A = stencil.node_matrix
    bg = stencil.hit_matrix @ gv
    k0v = np.broadcast_to(np.asarray(k0, dtype=float), (grid.n_active,))
    top = float(np.max(gv)) if len(gv) else 0.0
    u = np.full(grid.n_active, top) if initial is None else np.asarray(initial, dtype=float).copy()
    lam = 2.0 * float(np.max(_exp2u(u)))
    lu = splu((A - lam * sp.identity(grid.n_active, format="csr")).tocsc())
    norms = []
    for it in range(cfg.monotone_iters):
        rhs = _exp2u(u) - lam * u + k0v - bg
        u_next = lu.solve(rhs)
        change = float(np.max(np.abs(u_next - u)))
        res = float(np.max(np.abs(A @ u_next + bg - _exp2u(u_next) - k0v)))
        norms.append(res)
        u = u_next
        if change < cfg.monotone_tol:
            break
    else:
        raise NewtonDiverged(
            f"monotone sweep did not settle in {cfg.monotone_iters} iterations"
        )
    return SolveReport(
        u=ScalarField(grid, u),
        residual_norms=norms,
        newton_iters=len(norms),
        final_residual=norms[-1],
    )


def _snapshot_indices(grid: Grid, delta_min: float, cap: int = 512) -> np.ndarray:
    delta = grid.boundary_distance(include_artificial=True)
    idx = np.nonzero(grid.interior & (delta >= delta_min))[0]
    if len(idx) == 0:
        idx = np.nonzero(grid.interior)[0]
    if len(idx) > cap:
        stride = len(idx) // cap + (1 if len(idx) % cap else 0)
        idx = idx[::stride]
    return idx


def blowup_ladder(
    grid_or_stencil,
    cfg: SolverConfig = SolverConfig(),
    k0: Union[float, np.ndarray] = 0.0,
    artificial_data: Optional[BoundaryData] = None,
) -> SolveReport:
    """Chain Dirichlet solves with increasing constant boundary data.

    Natural boundary hits take the ladder constants; truncation hits use
    ``artificial_data`` when provided (closed-form data on cut edges) and
    the ladder constant otherwise.  Monotonicity across levels and the
    inscribed-disk barrier are certified on the way out.
    """
    if isinstance(grid_or_stencil, LaplacianStencil):
        stencil = grid_or_stencil
    else:
        stencil = build_laplacian(grid_or_stencil)
    grid = stencil.grid
    levels = list(cfg.ladder_levels)
    if len(levels) == 0 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise LadderNotConverged("ladder levels must be strictly increasing")

    snap_idx = _snapshot_indices(grid, cfg.probe_delta)
    report = SolveReport(u=None, snapshot_indices=snap_idx)  # type: ignore[arg-type]
    prev = None
    u_prev_vals = None
    mono = 0.0
    for a in levels:
        sub = solve_dirichlet(
            stencil,
            float(a),
            k0=k0,
            cfg=cfg,
            initial=u_prev_vals,
            artificial_data=artificial_data,
        )
        report.levels.append(float(a))
        report.level_reports.append(
            {
                "level": float(a),
                "newton_iters": sub.newton_iters,
                "final_residual": sub.final_residual,
            }
        )
        report.residual_norms.append(sub.residual_norms)
        report.snapshots.append(sub.u.values[snap_idx].copy())
        if u_prev_vals is not None:
            mono = max(mono, float(np.max(u_prev_vals - sub.u.values)))
        if prev is not None and cfg.ladder_stop_tol > 0.0:
            move = float(np.max(np.abs(sub.u.values[snap_idx] - prev)))
            if move < cfg.ladder_stop_tol:
                report.stopped_early = True
                u_prev_vals = sub.u.values
                report.u = sub.u
                break
        prev = sub.u.values[snap_idx].copy()
        u_prev_vals = sub.u.values
        report.u = sub.u
    report.newton_iters = sum(r["newton_iters"] for r in report.level_reports)
    report.final_residual = report.level_reports[-1]["final_residual"]
    report.monotonicity_violation = mono
    report.barrier_violation = barrier_certificate(report.u)
    if mono > 1e-6:
        report.verdict = "MONOTONICITY_VIOLATED"
        raise MonotonicityViolated(
            f"level solutions decreased by {mono:.3e} somewhere"
        )
    return report


def barrier_certificate(u: ScalarField, delta: Optional[np.ndarray] = None) -> float:
    """Scaled inscribed-disk bound: max over nodes of e^{2u} delta^2 - 4.

    Negative or slightly positive (O(h)) values certify that the density
    stays below the inscribed-disk envelope 4 / delta^2.
    """
    grid = u.grid
    if delta is None:
        delta = grid.boundary_distance(include_artificial=True)
    val = _exp2u(u.values) * delta * delta - 4.0
    return float(np.max(val))


def comparison_check(
    u: ScalarField,
    w: np.ndarray,
    mask: Optional[np.ndarray] = None,
    direction: str = "u_below_w",
) -> float:
    """Largest violation of a pointwise comparison on a node mask.

    direction="u_below_w" returns max(u - w); "u_above_w" returns
    max(w - u).  Values <= 0 mean the comparison holds exactly.
    """
    if mask is None:
        mask = np.ones(u.grid.n_active, dtype=bool)
    diff = u.values[mask] - np.asarray(w, dtype=float)[mask]
    if direction == "u_below_w":
        return float(np.max(diff))
    if direction == "u_above_w":
        return float(np.max(-diff))
    raise ValueError(f"unknown direction {direction!r}")


@dataclass
class ExhaustionReport:
    """Ladder results over an increasing window sequence."""

    windows: list
    probe_points: np.ndarray
    probe_values: np.ndarray  # (n_windows, n_probes)
    window_reports: list
    monotonicity_violation: float
    decrements: np.ndarray  # (n_windows - 1, n_probes)
    verdict: str = INCONCLUSIVE
    final_u: Optional[ScalarField] = None


def _check_window_order(domains: Sequence[DomainSpec]):
    kinds = {d.kind for d in domains}
    if len(kinds) != 1:
        raise WindowSequenceInvalid("windows must share one domain kind")
    kind = domains[0].kind
    for a, b in zip(domains, domains[1:]):
        if a.params == b.params:
            continue  # stationary sequences are allowed
        if kind == "disk":
            ok = a.params[:2] == b.params[:2] and b.params[2] >= a.params[2]
        elif kind == "twice_punctured_plane":
            ok = b.params[0] >= a.params[0] and b.params[1] <= a.params[1]
        elif kind == "punctured_disk":
            ok = b.params[0] <= a.params[0]
        elif kind == "annulus":
            ok = b.params[0] >= a.params[0]
        else:
            ok = False
        if not ok:
            raise WindowSequenceInvalid(
                f"window {b.to_dict()} does not contain {a.to_dict()}"
            )


def default_probe_points(domain: DomainSpec, n: int = 16) -> np.ndarray:
    """Probe points well inside a first window, spread deterministically."""
    if domain.kind == "twice_punctured_plane":
        R, eps = domain.params
        radii = (0.45, 0.62, 0.80)
        pts = []
        for rad in radii:
            for k in range(6):
                t = 2.0 * math.pi * (k + 0.5) / 6.0
                pts.append((0.5 + rad * math.cos(t), rad * math.sin(t)))
        pts = [
            p
            for p in pts
            if math.hypot(*p) > 2.5 * eps
            and math.hypot(p[0] - 1.0, p[1]) > 2.5 * eps
            and math.hypot(*p) < 0.8 * R
        ]
        return np.asarray(pts[:n])
    if domain.kind in ("disk", "unit_disk"):
        if domain.kind == "disk":
            cx, cy, R = domain.params
        else:
            cx, cy, R = 0.0, 0.0, 1.0
        pts = [(cx, cy)]
        for k in range(n - 1):
            t = 2.0 * math.pi * k / (n - 1)
            pts.append((cx + 0.45 * R * math.cos(t), cy + 0.45 * R * math.sin(t)))
        return np.asarray(pts)
    g = build_grid(domain, _feature_h(domain))
    idx = _snapshot_indices(g, 0.0, cap=n)
    return np.stack([g.xs[idx], g.ys[idx]], axis=1)


def _feature_h(domain: DomainSpec) -> float:
    return domain._compiled().feature / 8.0


def exhaustion_solve(
    windows: Sequence,
    cfg: SolverConfig = SolverConfig(),
    probe_points: Optional[np.ndarray] = None,
    artificial_data: Optional[Callable] = None,
) -> ExhaustionReport:
    """Run a blow-up ladder on each window of an increasing sequence.

    ``windows`` is a sequence of (DomainSpec, h) pairs.  Probe points must
    lie inside every window; by default they are picked inside the first.
    Blow-up data is imposed on the whole truncated boundary of each window
    unless ``artificial_data`` overrides the cut edges.
    """
    pairs = [(w[0], float(w[1])) for w in windows]
    if len(pairs) == 0:
        raise WindowSequenceInvalid("empty window sequence")
    _check_window_order([d for d, _ in pairs])
    if probe_points is None:
        probe_points = default_probe_points(pairs[0][0])
    probe_points = np.asarray(probe_points, dtype=float)

    values = []
    reports = []
    final_u = None
    for dom, h in pairs:
        grid = build_grid(dom, h)
        rep = blowup_ladder(grid, cfg=cfg, artificial_data=artificial_data)
        vals, ok = grid.interpolate(rep.u.values, probe_points[:, 0], probe_points[:, 1])
        if not np.all(ok):
            bad = probe_points[~ok]
            raise WindowSequenceInvalid(
                f"probe points {bad.tolist()} not interpolable in window {dom.to_dict()}"
            )
        values.append(vals)
        reports.append(rep)
        final_u = rep.u
    V = np.asarray(values)
    decrements = V[:-1] - V[1:] if len(V) > 1 else np.zeros((0, V.shape[1]))
    mono = float(np.max(-decrements)) if decrements.size else 0.0
    report = ExhaustionReport(
        windows=[(d.to_dict(), h) for d, h in pairs],
        probe_points=probe_points,
        probe_values=V,
        window_reports=reports,
        monotonicity_violation=max(0.0, mono),
        decrements=decrements,
        final_u=final_u,
    )
    report.verdict = dichotomy_detect(report, cfg)
    return report


def dichotomy_detect(report: ExhaustionReport, cfg: SolverConfig = SolverConfig()) -> str:
    """Classify an exhaustion level curve.

    With fewer than two decrements the slope is undefined and the verdict
    stays INCONCLUSIVE.  Otherwise the mean probe decrement of the last
    step decides: below ``converged_decrement`` the sequence has settled;
    above ``diverging_decrement`` with spatially uniform decrements (the
    Harnack-style signature of sinking to -infinity) it is DIVERGING.
    """
    D = report.decrements
    if D.shape[0] < 2:
        return INCONCLUSIVE
    last = D[-1]
    mean_last = float(np.mean(last))
    if abs(mean_last) < cfg.converged_decrement:
        return CONVERGED
    if mean_last > cfg.diverging_decrement:
        lo, hi = float(np.min(last)), float(np.max(last))
        prev_mean = float(np.mean(D[-2]))
        steady = prev_mean > cfg.diverging_decrement
        if lo > 0.0 and hi / lo <= cfg.uniformity_factor and steady:
            return DIVERGING
    return INCONCLUSIVE


def remark_limit_certificate(
    u: ScalarField,
    offsets: Sequence[float] = (0.2, 0.1),
    n_samples: int = 64,
) -> float:
    """Linear extrapolation of e^{2u} delta^2 to the boundary.

    For the maximal metric this tends to 1 at smooth boundary points; the
    returned value is the extrapolated limit averaged over boundary
    samples.  Uses the two offsets for a straight-line extrapolation to
    delta = 0.
    """
    from .geometry import boundary_samples

    grid = u.grid
    samples = boundary_samples(
        grid.domain,
        spacing=max(grid.h * 8.0, 0.05),
        natural_only=True,
        corner_margin=4.0 * grid.h,
    )
    if len(samples) > n_samples:
        stride = max(1, len(samples) // n_samples)
        samples = samples[::stride]
    d1, d2 = offsets
    vals = []
    for s in samples:
        p1 = (s.x - d1 * s.normal[0], s.y - d1 * s.normal[1])
        p2 = (s.x - d2 * s.normal[0], s.y - d2 * s.normal[1])
        v1, ok1 = grid.interpolate(u.values, [p1[0]], [p1[1]])
        v2, ok2 = grid.interpolate(u.values, [p2[0]], [p2[1]])
        if not (ok1[0] and ok2[0]):
            continue
        f1 = math.exp(2.0 * v1[0]) * d1 * d1
        f2 = math.exp(2.0 * v2[0]) * d2 * d2
        vals.append(f2 + (f2 - f1) * d2 / (d1 - d2))
    if not vals:
        raise LadderNotConverged("no usable boundary samples for the limit check")
    return float(np.mean(vals))
