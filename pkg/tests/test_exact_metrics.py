"""Closed-form metric catalogue against independently derived values.

Spot values below were computed by hand (or with a few lines of standalone
arithmetic) from the densities as written in the module docstring; the
finite-difference curvature check is an independent verification that each
formula really solves Delta u = e^{2u}.
"""

import math

import numpy as np
import pytest

from poincare_lab import (
    ModelMetric,
    admissible,
    find_A_star,
    grauert_curvature,
    grauert_density,
    log_density,
    sinh_density,
)
from poincare_lab.errors import InvalidParameters, SingularPoint


def test_spot_values_frozen():
    cases = [
        (ModelMetric.unit_disk(), (0.0, 0.0), math.log(2.0)),
        (ModelMetric.unit_disk(), (0.5, 0.0), 0.9808292530117262),
        (ModelMetric.disk((1.0, 2.0), 3.0), (1.0, 2.0), -0.40546510810816444),
        (ModelMetric.half_plane(), (3.0, 0.5), math.log(2.0)),
        (ModelMetric.punctured_disk(), (math.exp(-1.0), 0.0), 1.0),
        (ModelMetric.strip(), (0.0, math.pi / 2.0), 0.0),
        (ModelMetric.strip(), (1.0, math.pi / 6.0), math.log(2.0)),
        (ModelMetric.annulus(1.0), (math.exp(-math.pi / 2.0), 0.0), math.pi / 2.0),
        (ModelMetric.quarter_plane(), (1.0, 1.0), 0.5 * math.log(2.0)),
        (ModelMetric.quarter_plane(), (3.0, 4.0), -0.8754687373538999),
        (ModelMetric.sinh_family(1.0), (math.exp(-1.0), 0.0), 0.8385606384288045),
    ]
    for metric, (x, y), want in cases:
        got = float(metric.log_density(np.array([x]), np.array([y]))[0])
        assert got == pytest.approx(want, abs=1e-13), metric.name


def _fd_curvature(metric, x, y, h=1e-3):
    pts = [(x, y), (x + h, y), (x - h, y), (x, y + h), (x, y - h)]
    u = [float(metric.log_density(np.array([a]), np.array([b]))[0]) for a, b in pts]
    lap = (u[1] + u[2] + u[3] + u[4] - 4.0 * u[0]) / h**2
    return -lap * math.exp(-2.0 * u[0])


@pytest.mark.parametrize(
    "metric,point",
    [
        (ModelMetric.unit_disk(), (0.3, -0.2)),
        (ModelMetric.disk((0.5, 0.0), 2.0), (1.0, 0.5)),
        (ModelMetric.half_plane(), (0.4, 0.9)),
        (ModelMetric.punctured_disk(), (0.3, 0.1)),
        (ModelMetric.strip(), (0.3, 1.0)),
        (ModelMetric.annulus(2.0), (0.5, 0.1)),
        (ModelMetric.quarter_plane(), (0.7, 1.3)),
        (ModelMetric.sinh_family(0.7), (0.3, 0.1)),
    ],
)
def test_densities_solve_the_curvature_equation(metric, point):
    assert _fd_curvature(metric, *point) == pytest.approx(-1.0, abs=2e-5)
    assert np.all(metric.curvature(np.array([point[0]]), np.array([point[1]])) == -1.0)


def test_singular_loci_are_refused():
    with pytest.raises(SingularPoint):
        log_density(ModelMetric.unit_disk(), 1.0, 0.0)
    with pytest.raises(SingularPoint):
        log_density(ModelMetric.half_plane(), 0.0, 0.0)
    with pytest.raises(SingularPoint):
        log_density(ModelMetric.annulus(1.0), math.exp(-math.pi), 0.0)
    with pytest.raises(SingularPoint):
        log_density(ModelMetric.quarter_plane(), 0.0, 1.0)
    with pytest.raises(SingularPoint):
        log_density(ModelMetric.punctured_disk(), 0.0, 0.0)


def test_sinh_family_degenerates_to_punctured_disk():
    x = np.array([0.3, 0.1, 0.02])
    y = np.zeros(3)
    small = np.log(sinh_density(1e-4, x, y))
    pd = log_density(ModelMetric.punctured_disk(), x, y)
    assert np.max(np.abs(small - pd)) <= 1e-6


def test_constructor_validation():
    with pytest.raises(InvalidParameters):
        ModelMetric.annulus(-1.0)
    with pytest.raises(InvalidParameters):
        ModelMetric.sinh_family(0.0)
    with pytest.raises(InvalidParameters):
        grauert_density(0.0, 1.0, 1.0, 1.0, 0.5, 0.5)


# ---------------------------------------------------------------------------
# two-puncture comparison family
# ---------------------------------------------------------------------------


def test_two_puncture_density_at_the_symmetric_point():
    # r = rho = 1 there, so the density collapses to 2 A
    x, y = 0.5, math.sqrt(3.0) / 2.0
    got = grauert_density(1.0, 1.0 / 3.0, 0.5, 5.0 / 6.0, x, y)
    assert float(got) == pytest.approx(2.0, abs=1e-14)
    k = grauert_curvature(1.0, 1.0 / 3.0, 0.5, 5.0 / 6.0, x, y)
    assert float(k) == pytest.approx(-1.0 / 144.0, abs=1e-15)


def test_two_puncture_curvature_matches_finite_differences():
    m = ModelMetric.grauert(2e-3, 1.0 / 3.0, 0.5, 5.0 / 6.0)
    x, y = 0.3, 0.2
    exact = float(grauert_curvature(2e-3, 1.0 / 3.0, 0.5, 5.0 / 6.0, x, y))
    assert _fd_curvature(m, x, y) == pytest.approx(exact, rel=1e-3)
    assert not m.curvature_is_minus_one()


def test_curvature_scales_inverse_square_in_amplitude():
    pts = (np.array([0.4, -0.2, 2.0]), np.array([0.1, 0.3, 1.0]))
    k1 = grauert_curvature(1e-2, 1.0 / 3.0, 0.5, 5.0 / 6.0, *pts)
    k2 = grauert_curvature(5e-3, 1.0 / 3.0, 0.5, 5.0 / 6.0, *pts)
    assert np.allclose(k2, 4.0 * k1, rtol=1e-12)


def test_admissibility_window():
    assert admissible(1.0 / 3.0, 0.5, 5.0 / 6.0)
    assert not admissible(1.0, 1.0, 0.4)
    with pytest.raises(InvalidParameters):
        admissible(0.0, 1.0, 1.0)


def test_scale_search_is_frozen_and_certified():
    a_star = find_A_star(1.0 / 3.0, 0.5, 5.0 / 6.0)
    assert a_star == pytest.approx(0.0581460938010423, rel=1e-6)
    xs = np.linspace(-10.0, 10.0, 101)
    gx, gy = np.meshgrid(xs, xs)
    keep = (np.hypot(gx, gy) > 1e-6) & (np.hypot(gx - 1.0, gy) > 1e-6)
    k = grauert_curvature(a_star, 1.0 / 3.0, 0.5, 5.0 / 6.0, gx[keep], gy[keep])
    assert np.max(k) <= -1.0 + 1e-9


def test_scale_search_needs_admissible_exponents():
    with pytest.raises(InvalidParameters):
        find_A_star(1.0, 1.0, 0.4)
