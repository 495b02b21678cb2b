"""Metric graphs, distance growth probes, and the Koebe ratio."""

import numpy as np
import pytest

from poincare_lab import (
    DomainSpec,
    ModelMetric,
    ScalarField,
    build_grid,
    completeness_probe,
    hyperbolic_distance,
    koebe_ratio,
)
from poincare_lab.errors import InvalidParameters, ProbeTooShort
from poincare_lab.hyperbolic_geometry import MetricGraph


def _disk_graph(h=1.0 / 64):
    grid = build_grid(DomainSpec.unit_disk(), h)
    u = ScalarField(grid, ModelMetric.unit_disk().log_density(grid.xs, grid.ys))
    return MetricGraph(u), u


class TestMetricGraph:
    def test_distance_matches_closed_form(self):
        # d(-1/2, 1/2) = 2 artanh(0.8); the geodesic is the x axis, which
        # the lattice contains, so only quadrature error remains
        mg, _ = _disk_graph()
        p = mg.node_at(-0.5, 0.0)
        q = mg.node_at(0.5, 0.0)
        d = hyperbolic_distance(mg, p, q)
        assert d == pytest.approx(2.0 * np.arctanh(0.8), rel=1e-3)

    def test_distance_symmetry(self):
        mg, _ = _disk_graph(1.0 / 32)
        p = mg.node_at(-0.4, 0.1)
        q = mg.node_at(0.3, -0.5)
        assert hyperbolic_distance(mg, p, q) == pytest.approx(
            hyperbolic_distance(mg, q, p), abs=1e-12
        )

    def test_node_at_snaps_to_nearest_active(self):
        mg, u = _disk_graph(1.0 / 32)
        grid = u.grid
        i = mg.node_at(0.26, 0.13)
        assert np.hypot(grid.xs[i] - 0.26, grid.ys[i] - 0.13) <= grid.h


class TestCompletenessProbe:
    def test_rim_growth_is_logarithmic(self):
        mg, _ = _disk_graph()
        curve = completeness_probe(
            mg, mg.node_at(0.0, 0.0), (1.0, 0.0), (0.4, 0.2, 0.1, 0.05, 0.03125)
        )
        # exact growth is log(1/delta) + log 2 - delta/2, so the fitted
        # slope sits slightly above 1 on a window this deep
        assert 1.0 <= curve.slope <= 1.15
        assert np.all(np.diff(curve.distances) > 0.0)

    def test_cusp_growth_is_sublogarithmic(self):
        domain = DomainSpec.punctured_disk(0.05)
        grid = build_grid(domain, 1.0 / 64)
        u = ScalarField(grid, ModelMetric.punctured_disk().log_density(grid.xs, grid.ys))
        mg = MetricGraph(u)
        curve = completeness_probe(
            mg, mg.node_at(0.5, 0.0), (0.0, 0.0), (0.25, 0.125, 0.0625)
        )
        assert curve.slope <= 0.6
        # distance to radius 2^-k grows by log(1 + 1/k) per halving
        inc = np.diff(curve.distances)
        assert inc[0] == pytest.approx(np.log(3.0 / 2.0), abs=5e-3)
        assert inc[1] == pytest.approx(np.log(4.0 / 3.0), abs=5e-3)

    def test_offsets_below_grid_scale_rejected(self):
        mg, _ = _disk_graph()
        with pytest.raises(InvalidParameters):
            completeness_probe(mg, mg.node_at(0.0, 0.0), (1.0, 0.0), (0.4, 0.2, 0.01))

    def test_two_offsets_cannot_fit_a_slope(self):
        mg, _ = _disk_graph()
        with pytest.raises(ProbeTooShort):
            completeness_probe(mg, mg.node_at(0.0, 0.0), (1.0, 0.0), (0.4, 0.2))


class TestKoebeRatio:
    def test_round_metric_range(self):
        # e^{-u}/delta = (1 + r)/2 on the disk: 1/2 at the center, and the
        # default mask delta >= 4h caps the top at (2 - 4h)/2
        _, u = _disk_graph()
        h = u.grid.h
        kr = koebe_ratio(u)
        assert kr.min == pytest.approx(0.5, abs=1e-12)
        assert kr.max == pytest.approx(1.0 - 2.0 * h, abs=1e-12)
        r_argmin = np.hypot(u.grid.xs[kr.argmin], u.grid.ys[kr.argmin])
        assert r_argmin <= 1e-12

    def test_custom_mask(self):
        _, u = _disk_graph()
        r = np.hypot(u.grid.xs, u.grid.ys)
        kr = koebe_ratio(u, mask=r <= 0.5)
        assert kr.min == pytest.approx(0.5, abs=1e-12)
        assert kr.max <= 0.75 + 1e-12
