"""Numerical laboratory for complete constant-curvature metrics.

The package solves the curvature equation Delta u = e^{2u} + K0 on planar
domains with boundary data sent to +infinity, producing discrete Poincare
metrics e^{2u} |dx|^2 of Gauss curvature -1, and ships the diagnostics
that certify them: closed-form model metrics, boundary expansions,
graph-metric completeness probes, and discrete conformal maps.
"""

from .errors import (
    CurvatureOverflow,
    CutCrossesNode,
    DerivativeDegenerate,
    Disconnected,
    EmptyDomain,
    FeatureTooFine,
    FitIllConditioned,
    GridMismatch,
    InvalidDomainSpec,
    InvalidParameters,
    LadderNotConverged,
    MonotonicityViolated,
    NewtonDiverged,
    NoAdmissibleScale,
    NotSimplyConnected,
    PoincareLabError,
    ProbeTooShort,
    SingularPoint,
    UndefinedAtCorner,
    WindowSequenceInvalid,
)
from .geometry import (
    BoundarySample,
    DomainSpec,
    Grid,
    ScalarField,
    boundary_curvature,
    boundary_samples,
    build_grid,
    ellipse_boundary_distance,
)
from .exact_metrics import (
    ModelMetric,
    admissible,
    find_A_star,
    grauert_curvature,
    grauert_density,
    log_density,
    sinh_density,
)
from .discrete_ops import (
    LaplacianStencil,
    apply_laplacian,
    build_laplacian,
    gauss_curvature,
    interior_laplacian,
    probe_mask,
    resolve_boundary_values,
)
from .curvature_solver import (
    CONVERGED,
    DIVERGING,
    INCONCLUSIVE,
    ExhaustionReport,
    SolveReport,
    SolverConfig,
    barrier_certificate,
    blowup_ladder,
    comparison_check,
    default_probe_points,
    dichotomy_detect,
    exhaustion_solve,
    remark_limit_certificate,
    solve_dirichlet,
)
from .boundary_asymptotics import (
    ExpansionFit,
    WFieldReport,
    expansion_profile,
    fit_expansion,
    w_field_checks,
)
from .hyperbolic_geometry import (
    GrowthCurve,
    KoebeRange,
    MetricGraph,
    completeness_probe,
    hyperbolic_distance,
    koebe_ratio,
)
from .riemann_map import (
    ComplexField,
    Conjugate,
    GreenFunction,
    PullbackReport,
    cauchy_riemann_defect,
    covering_map,
    green_function,
    harmonic_conjugate,
    pullback_identity_check,
    zero_count,
)

__version__ = "0.1.0"
