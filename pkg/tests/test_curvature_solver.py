"""Dirichlet solves, blow-up ladders, certificates, and the exhaustion verdict."""

import numpy as np
import pytest

from poincare_lab import (
    DomainSpec,
    ExhaustionReport,
    ModelMetric,
    ScalarField,
    SolverConfig,
    barrier_certificate,
    blowup_ladder,
    build_grid,
    build_laplacian,
    comparison_check,
    dichotomy_detect,
    exhaustion_solve,
    remark_limit_certificate,
    solve_dirichlet,
)
from poincare_lab.errors import LadderNotConverged, WindowSequenceInvalid

FULL = (1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)


def _synthetic_report(decrements: np.ndarray) -> ExhaustionReport:
    """Report carrying only the fields dichotomy_detect reads."""
    D = np.asarray(decrements, dtype=float)
    n = D.shape[1] if D.ndim == 2 else 0
    return ExhaustionReport(
        windows=[],
        probe_points=np.zeros((n, 2)),
        probe_values=np.zeros((D.shape[0] + 1, n)),
        window_reports=[],
        monotonicity_violation=0.0,
        decrements=D,
        verdict="",
        final_u=None,
    )


class TestDirichlet:
    def test_residual_below_tolerance(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 16)
        stencil = build_laplacian(grid)
        rep = solve_dirichlet(stencil, 3.0)
        hits = np.full(grid.hit_x.shape, 3.0)
        res = (
            stencil.node_matrix @ rep.u.values
            + stencil.hit_matrix @ hits
            - np.exp(2.0 * rep.u.values)
        )
        assert np.max(np.abs(res)) <= 1e-9
        assert rep.final_residual <= 1e-9
        assert 1 <= rep.newton_iters <= 60

    def test_residual_history_contracts(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 16)
        rep = solve_dirichlet(build_laplacian(grid), 2.0)
        norms = rep.residual_norms
        assert len(norms) >= 2
        assert norms[-1] < 1e-9 < norms[0]
        # once in the quadratic basin each step at least halves the residual
        assert all(b < a for a, b in zip(norms[-3:], norms[-2:]))

    def test_monotone_sweep_matches_newton(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 8)
        newton = blowup_ladder(grid, cfg=SolverConfig(ladder_levels=(1.0, 2.0)))
        sweep = blowup_ladder(
            grid, cfg=SolverConfig(ladder_levels=(1.0, 2.0), monotone=True)
        )
        assert np.max(np.abs(newton.u.values - sweep.u.values)) <= 1e-7


class TestLadder:
    def test_levels_must_increase(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 8)
        for bad in [(2.0, 1.0), (1.0, 1.0), ()]:
            with pytest.raises(LadderNotConverged):
                blowup_ladder(grid, cfg=SolverConfig(ladder_levels=bad))

    def test_monotone_and_certified(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 16)
        rep = blowup_ladder(grid, cfg=SolverConfig(ladder_levels=FULL))
        assert rep.monotonicity_violation <= 1e-10
        assert rep.verdict == "OK"
        assert rep.levels == list(FULL)
        for older, newer in zip(rep.snapshots, rep.snapshots[1:]):
            assert np.min(newer - older) > 0.0

    def test_barrier_slack_shrinks_with_h(self):
        # away from the rim the inscribed-disk slack is O(h); the first
        # off-rim ring carries an O(1) overshoot that never certifies
        masked = {}
        for h in (1.0 / 16, 1.0 / 32):
            grid = build_grid(DomainSpec.unit_disk(), h)
            rep = blowup_ladder(grid, cfg=SolverConfig(ladder_levels=FULL))
            d = grid.boundary_distance(include_artificial=True)
            m = d >= 0.2
            masked[h] = float(np.max(np.exp(2.0 * rep.u.values[m]) * d[m] ** 2 - 4.0))
            assert rep.barrier_violation > masked[h] > 0.0
        assert masked[1.0 / 32] < 0.6 * masked[1.0 / 16] <= 0.3

    def test_per_level_reports(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 16)
        rep = blowup_ladder(grid, cfg=SolverConfig(ladder_levels=(1.0, 2.0, 4.0)))
        assert len(rep.level_reports) == 3
        for lr in rep.level_reports:
            assert lr["final_residual"] <= 1e-9
            assert lr["newton_iters"] >= 1
        assert [lr["level"] for lr in rep.level_reports] == [1.0, 2.0, 4.0]

    def test_early_stop(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 16)
        rep = blowup_ladder(
            grid, cfg=SolverConfig(ladder_levels=FULL, ladder_stop_tol=0.15)
        )
        assert rep.stopped_early
        assert rep.levels[-1] < FULL[-1]
        full = blowup_ladder(grid, cfg=SolverConfig(ladder_levels=FULL))
        assert not full.stopped_early
        assert len(full.level_reports) == len(FULL)

    def test_artificial_data_replaces_window_metric(self):
        # continuation data log(1/y) on the cut edges steers the window
        # solve toward the half-plane metric; bare ladder constants leave
        # the (much larger) window metric behind
        domain = DomainSpec.half_plane_window(-1.0, 1.0, 1.0)
        grid = build_grid(domain, 1.0 / 16)
        cfg = SolverConfig(ladder_levels=(2.0, 4.0, 8.0, 12.0))
        exact = lambda x, y: np.log(1.0 / np.maximum(y, 1e-12))
        with_data = blowup_ladder(grid, cfg=cfg, artificial_data=exact)
        bare = blowup_ladder(grid, cfg=cfg)
        i = grid.nearest_active(0.0, 0.5)
        err_data = abs(with_data.u.values[i] - np.log(2.0))
        err_bare = abs(bare.u.values[i] - np.log(2.0))
        assert err_data <= 0.15
        assert err_bare >= 0.4
        assert err_data < err_bare / 3.0


class TestCertificates:
    def test_barrier_zero_on_round_metric(self):
        # e^{2u} delta^2 - 4 = 4/(1+r)^2 - 4 <= 0 with equality at the center
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 64)
        u = ScalarField(grid, ModelMetric.unit_disk().log_density(grid.xs, grid.ys))
        assert abs(barrier_certificate(u)) <= 1e-12

    def test_barrier_custom_delta(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 8)
        u = ScalarField(grid, np.zeros(grid.n_active))
        assert barrier_certificate(u, delta=np.ones(grid.n_active)) == pytest.approx(-3.0)

    def test_remark_limit_on_round_metric(self):
        grid = build_grid(DomainSpec.unit_disk(), 1.0 / 64)
        u = ScalarField(grid, ModelMetric.unit_disk().log_density(grid.xs, grid.ys))
        assert abs(remark_limit_certificate(u) - 1.0) <= 2e-2

    def test_comparison_directions(self):
        grid = build_grid(DomainSpec.unit_disk(), 0.25)
        u = ScalarField(grid, np.zeros(grid.n_active))
        w = np.full(grid.n_active, 0.5)
        assert comparison_check(u, w, direction="u_below_w") == pytest.approx(-0.5)
        assert comparison_check(u, w, direction="u_above_w") == pytest.approx(0.5)
        mask = np.zeros(grid.n_active, dtype=bool)
        mask[0] = True
        w2 = w.copy()
        w2[0] = -3.0
        assert comparison_check(u, w2, mask=mask, direction="u_below_w") == pytest.approx(3.0)
        with pytest.raises(ValueError):
            comparison_check(u, w, direction="sideways")


class TestDichotomy:
    def test_settled_curve_converges(self):
        rep = _synthetic_report([[0.2] * 4, [0.01] * 4])
        assert dichotomy_detect(rep) == "CONVERGED"

    def test_steady_uniform_sinking_diverges(self):
        rep = _synthetic_report([[0.7] * 4, [0.7] * 4])
        assert dichotomy_detect(rep) == "DIVERGING"

    def test_nonuniform_sinking_is_inconclusive(self):
        rep = _synthetic_report([[0.7] * 4, [0.05, 0.05, 0.05, 2.5]])
        assert dichotomy_detect(rep) == "INCONCLUSIVE"

    def test_unsteady_sinking_is_inconclusive(self):
        rep = _synthetic_report([[0.01] * 4, [0.7] * 4])
        assert dichotomy_detect(rep) == "INCONCLUSIVE"

    def test_single_step_is_inconclusive(self):
        rep = _synthetic_report([[0.7] * 4])
        assert dichotomy_detect(rep) == "INCONCLUSIVE"

    def test_thresholds_come_from_config(self):
        rep = _synthetic_report([[0.7] * 4, [0.7] * 4])
        loose = SolverConfig(converged_decrement=0.8)
        assert dichotomy_detect(rep, loose) == "CONVERGED"


class TestExhaustion:
    def test_window_sequence_validation(self):
        disk = DomainSpec.disk((0.0, 0.0), 1.0)
        bigger = DomainSpec.disk((0.0, 0.0), 2.0)
        with pytest.raises(WindowSequenceInvalid):
            exhaustion_solve([(bigger, 0.25), (disk, 0.25)])
        with pytest.raises(WindowSequenceInvalid):
            exhaustion_solve([(disk, 0.25), (DomainSpec.annulus(1.0), 0.25)])
        with pytest.raises(WindowSequenceInvalid):
            exhaustion_solve([])
        with pytest.raises(WindowSequenceInvalid):
            exhaustion_solve(
                [
                    (DomainSpec.twice_punctured_plane(2.0, 0.1), 0.05),
                    (DomainSpec.twice_punctured_plane(3.0, 0.2), 0.05),
                ]
            )

    def test_growing_disks_shrink_the_metric(self):
        cfg = SolverConfig(ladder_levels=(1.0, 2.0, 4.0))
        rep = exhaustion_solve(
            [
                (DomainSpec.disk((0.0, 0.0), 1.0), 0.125),
                (DomainSpec.disk((0.0, 0.0), 1.25), 0.125),
            ],
            cfg=cfg,
        )
        assert rep.decrements.shape[0] == 1
        assert np.all(rep.decrements > 0.0)
        assert rep.probe_values.shape[0] == 2
        assert rep.verdict == "INCONCLUSIVE"
        assert rep.final_u is not None
        assert rep.final_u.grid.domain.kind == "disk"
