"""Shortley-Weller stencil consistency and discrete curvature."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poincare_lab import (
    DomainSpec,
    ModelMetric,
    ScalarField,
    apply_laplacian,
    build_grid,
    build_laplacian,
    gauss_curvature,
    probe_mask,
    resolve_boundary_values,
)
from poincare_lab.errors import CurvatureOverflow, GridMismatch

DISK16 = build_grid(DomainSpec.unit_disk(), 1.0 / 16)
STENCIL16 = build_laplacian(DISK16)


def _field(grid, fn):
    return ScalarField(grid, fn(grid.xs, grid.ys))


def test_affine_functions_are_harmonic_exactly():
    f = lambda x, y: 2.0 + 3.0 * x - y
    lap = apply_laplacian(STENCIL16, _field(DISK16, f), boundary=f)
    assert np.max(np.abs(lap.values)) <= 1e-10


def test_axis_quadratics_are_exact_even_on_short_arms():
    # the 3-point nonuniform second difference reproduces x^2 exactly,
    # so L(x^2 + y^2) = 4 at every node, fractional legs included
    f = lambda x, y: x * x + y * y
    lap = apply_laplacian(STENCIL16, _field(DISK16, f), boundary=f)
    assert np.max(np.abs(lap.values - 4.0)) <= 1e-9
    g = lambda x, y: x * y
    lap2 = apply_laplacian(STENCIL16, _field(DISK16, g), boundary=g)
    assert np.max(np.abs(lap2.values)) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(
    a=st.floats(-2, 2),
    b=st.floats(-2, 2),
    c=st.floats(-2, 2),
    d=st.floats(-2, 2),
)
def test_random_quadratics_have_constant_laplacian(a, b, c, d):
    f = lambda x, y: a * x * x + b * x * y + c * y * y + d * x
    lap = apply_laplacian(STENCIL16, _field(DISK16, f), boundary=f)
    assert np.max(np.abs(lap.values - (2.0 * a + 2.0 * c))) <= 1e-8


def test_m_matrix_sign_pattern():
    A = STENCIL16.node_matrix.tocoo()
    diag = A.row == A.col
    assert np.all(A.data[diag] < 0.0)
    assert np.all(A.data[~diag] > 0.0)
    B = STENCIL16.hit_matrix.tocoo()
    assert np.all(B.data > 0.0)
    # every active row couples to exactly four arms
    arms = np.asarray((STENCIL16.node_matrix != 0).sum(axis=1)).ravel() - 1
    hits = np.asarray((STENCIL16.hit_matrix != 0).sum(axis=1)).ravel()
    assert np.all(arms + hits == 4)


def test_disk_oracle_curvature_is_second_order():
    errs = {}
    for k in (32, 64):
        g = build_grid(DomainSpec.unit_disk(), 1.0 / k)
        u = _field(g, lambda x, y: ModelMetric.unit_disk().log_density(x, y))
        K = gauss_curvature(build_laplacian(g), u)
        mask = probe_mask(g, 0.1)
        errs[k] = float(np.max(np.abs(K.values[mask] + 1.0)))
    assert errs[32] <= 8e-2
    assert errs[64] <= 2e-2
    assert 3.0 <= errs[32] / errs[64] <= 5.0


def test_curvature_vanishes_off_the_interior():
    g = DISK16
    u = _field(g, lambda x, y: ModelMetric.unit_disk().log_density(x, y))
    K = gauss_curvature(STENCIL16, u)
    assert np.all(K.values[~g.interior] == 0.0)


def test_huge_negative_fields_overflow_loudly():
    u = ScalarField(DISK16, np.full(DISK16.n_active, -400.0))
    with pytest.raises(CurvatureOverflow):
        gauss_curvature(STENCIL16, u)


def test_boundary_value_resolution_modes():
    g = DISK16
    nh = len(g.hit_x)
    assert np.all(resolve_boundary_values(g, 3.5) == 3.5)
    vals = resolve_boundary_values(g, lambda x, y: x + y)
    assert np.max(np.abs(vals - (g.hit_x + g.hit_y))) == 0.0
    arr = np.arange(nh, dtype=float)
    assert np.array_equal(resolve_boundary_values(g, arr), arr)
    with pytest.raises(GridMismatch):
        resolve_boundary_values(g, np.zeros(nh + 1))


def test_artificial_hits_take_the_override():
    g = build_grid(DomainSpec.half_plane_window(-1.0, 1.0, 1.0), 1.0 / 16)
    vals = resolve_boundary_values(g, 5.0, artificial_data=lambda x, y: y)
    cut = g.hit_artificial
    assert cut.any() and (~cut).any()
    assert np.array_equal(vals[cut], g.hit_y[cut])
    assert np.all(vals[~cut] == 5.0)


def test_probe_mask_respects_both_distance_notions():
    g = build_grid(DomainSpec.half_plane_window(-1.0, 1.0, 1.0), 1.0 / 16)
    tight = probe_mask(g, 0.3, include_artificial=True)
    loose = probe_mask(g, 0.3, include_artificial=False)
    assert tight.sum() < loose.sum()
    assert not np.any(tight & ~loose)
    assert np.all(g.boundary_distance(True)[tight] >= 0.3)
    d = g.boundary_distance(False)
    assert np.all(d[loose] >= 0.3)


def test_fields_refuse_foreign_grids():
    other = build_grid(DomainSpec.unit_disk(), 1.0 / 8)
    u = ScalarField(other, np.zeros(other.n_active))
    with pytest.raises(GridMismatch):
        apply_laplacian(STENCIL16, u)


def test_interior_rows_scale_like_classic_five_point():
    g = DISK16
    A = STENCIL16.node_matrix
    n = g.nearest_active(0.0, 0.0)
    row = A[n].toarray().ravel()
    h2 = g.h * g.h
    assert row[n] == pytest.approx(-4.0 / h2, rel=1e-14)
    assert np.sum(row) == pytest.approx(0.0, abs=1e-9 / h2)
