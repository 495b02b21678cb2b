"""Shared solved fields for the test suite.

The expensive blow-up ladders are session-scoped: several test modules read
the same fields, and a single 1/256 ellipse solve already takes minutes on
one core.  Fixtures return the full SolveReport so certificate fields stay
available alongside the field itself.
"""

import numpy as np
import pytest

from poincare_lab import (
    DomainSpec,
    SolverConfig,
    blowup_ladder,
    build_grid,
)

FULL_LADDER = (1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
TRIM_LADDER = (2.0, 4.0, 8.0, 12.0)


def run_ladder(domain, h, levels=TRIM_LADDER, artificial_data=None):
    grid = build_grid(domain, h)
    cfg = SolverConfig(ladder_levels=levels)
    return blowup_ladder(grid, cfg=cfg, artificial_data=artificial_data)


@pytest.fixture(scope="session")
def disk128():
    # full ladder: this field also feeds the ladder-correctness criterion
    return run_ladder(DomainSpec.unit_disk(), 1.0 / 128, FULL_LADDER)


@pytest.fixture(scope="session")
def disk256():
    return run_ladder(DomainSpec.unit_disk(), 1.0 / 256)


@pytest.fixture(scope="session")
def ellipse128():
    return run_ladder(DomainSpec.ellipse(2.0, 1.0), 1.0 / 128)


@pytest.fixture(scope="session")
def ellipse256():
    return run_ladder(DomainSpec.ellipse(2.0, 1.0), 1.0 / 256)


@pytest.fixture(scope="session")
def half_disk128():
    return run_ladder(DomainSpec.half_disk(1.0), 1.0 / 128)


@pytest.fixture(scope="session")
def square128():
    dom = DomainSpec.polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    return run_ladder(dom, 1.0 / 128)


@pytest.fixture(scope="session")
def half_plane256():
    """Half-plane window with exact continuation data on the cut edges."""
    dom = DomainSpec.half_plane_window(-1.0, 1.0, 1.0)
    exact = lambda x, y: np.log(1.0 / np.maximum(y, 1e-12))
    return run_ladder(dom, 1.0 / 256, artificial_data=exact)


@pytest.fixture(scope="session")
def annulus256():
    return run_ladder(DomainSpec.annulus(1.0), 1.0 / 256, FULL_LADDER)
