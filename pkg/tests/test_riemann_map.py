"""Discrete Green's functions, conjugates, and covering-map checks."""

import numpy as np
import pytest

from poincare_lab import (
    DomainSpec,
    ModelMetric,
    ScalarField,
    build_grid,
    cauchy_riemann_defect,
    covering_map,
    green_function,
    harmonic_conjugate,
    pullback_identity_check,
    zero_count,
)
from poincare_lab.errors import InvalidParameters, NotSimplyConnected


@pytest.fixture(scope="module")
def disk64():
    return build_grid(DomainSpec.unit_disk(), 1.0 / 64)


def _map(grid, p):
    green = green_function(grid, p)
    conj = harmonic_conjugate(green)
    return green, covering_map(green, conj)


class TestCoveringMap:
    def test_centered_source_gives_identity(self, disk64):
        green, phi = _map(disk64, (0.0, 0.0))
        z = disk64.xs + 1j * disk64.ys
        mask = disk64.boundary_distance() >= 0.1
        assert np.max(np.abs(phi.values - z)[mask]) <= 1e-12
        assert zero_count(phi, green.p_node) == 1

    def test_offcenter_source_matches_mobius(self, disk64):
        green, phi = _map(disk64, (0.3, 0.0))
        z = disk64.xs + 1j * disk64.ys
        mobius = np.abs((z - 0.3) / (1.0 - 0.3 * z))
        mask = disk64.boundary_distance() >= 0.1
        assert np.max(np.abs(np.abs(phi.values) - mobius)[mask]) <= 1e-2
        assert zero_count(phi, green.p_node) == 1

    def test_image_stays_inside_unit_disk(self, disk64):
        _, phi = _map(disk64, (0.3, 0.0))
        assert np.max(np.abs(phi.values)) <= 1.0 + 1e-3

    def test_cut_angle_only_rotates_the_map(self, disk64):
        green = green_function(disk64, (0.3, 0.0))
        a = covering_map(green, harmonic_conjugate(green))
        b = covering_map(green, harmonic_conjugate(green, cut_angle=1.1))
        assert np.max(np.abs(np.abs(a.values) - np.abs(b.values))) <= 1e-12

    def test_cauchy_riemann_defect_small(self, disk64):
        _, phi = _map(disk64, (0.3, 0.0))
        defect = cauchy_riemann_defect(phi)
        mask = disk64.boundary_distance() >= 0.1
        assert np.max(np.abs(defect[mask])) <= 1e-3

    def test_conjugate_cycle_defect_vanishes(self, disk64):
        green = green_function(disk64, (0.3, 0.0))
        conj = harmonic_conjugate(green)
        assert conj.cycle_defect_max <= 1e-12


class TestGuards:
    def test_multiply_connected_domain_rejected(self):
        grid = build_grid(DomainSpec.annulus(1.0), 1.0 / 64)
        with pytest.raises(NotSimplyConnected):
            green_function(grid, (0.5, 0.0))

    def test_source_near_boundary_rejected(self, disk64):
        with pytest.raises(InvalidParameters):
            green_function(disk64, (0.95, 0.0))

    def test_pullback_argument_order_guard(self, disk64):
        u = ScalarField(
            disk64, ModelMetric.unit_disk().log_density(disk64.xs, disk64.ys)
        )
        _, phi = _map(disk64, (0.0, 0.0))
        with pytest.raises(InvalidParameters):
            pullback_identity_check(u, phi)


class TestPullback:
    def test_exact_metric_pulls_back_exactly(self, disk64):
        # pulling the disk metric back through any of its own covering
        # maps reproduces it; only rounding remains at the centered source
        u = ScalarField(
            disk64, ModelMetric.unit_disk().log_density(disk64.xs, disk64.ys)
        )
        _, phi0 = _map(disk64, (0.0, 0.0))
        assert pullback_identity_check(phi0, u).sup <= 1e-12
        _, phi3 = _map(disk64, (0.3, 0.0))
        assert pullback_identity_check(phi3, u).sup <= 1e-5
