"""Deterministic numerical laboratory for the Landau collision operator.

Velocity-space grids and quadratures, the convolution coefficient fields of
the collision operator with their ellipticity spectra, three equivalent
operator discretizations, an explicit conservative time integrator for the
homogeneous relaxation, and a suite of measurement audits (continuation
criterion, Gaussian barrier envelopes, scaling covariance, moment
interpolation).
"""

__version__ = "0.1.0"

from .coefficients import (
    CoefficientFields,
    EllipticityReport,
    KernelTables,
    ModelParams,
    build_kernels,
    compute_coefficients,
    divergence_identity_residual,
    ellipticity_spectrum,
    verify_coeff_bounds,
)
from .collision import (
    CollisionOutput,
    entropy_production,
    q_bilinear,
    q_divergence,
    q_nondivergence,
    three_form_differences,
)
from .diagnostics import (
    BarrierEnvelope,
    BarrierMargin,
    CriterionReport,
    ScalingTransform,
    barrier_margin,
    barrier_params,
    blowup_detector,
    calc_inequality_audit,
    criterion_report,
    crossing_sign_audit,
    cylinder_norms,
    energy_interpolation_check,
    moser_constants_audit,
    rescale,
    scaling_covariance_residual,
)
from .errors import (
    ConfigError,
    ConfigurationError,
    CoverageError,
    DomainTruncationError,
    GridMismatchError,
    InvalidParameterError,
    SnapshotFormatError,
    UnstableStepError,
)
from .findings import AuditFinding
from .grid import (
    Cylinder,
    DistributionState,
    VelocityGrid,
    entropy,
    inf_on_ball,
    lp_norm,
    make_gaussian_mixture,
    make_maxwellian,
    moment,
    momentum,
    random_gaussian_mixture,
)
from .snapshots import read_snapshot, write_snapshot
from .solver import SolverConfig, StepResult, TrajectoryLog, integrate, step
