"""Explicit time integration of the homogeneous relaxation equation df/dt = Q(f, f).

The scheme is fully nonlinear: coefficient fields are refreshed from the
current state every step (no lagging), the conservative divergence form
drives the update, and the step size follows dt = cfl * h^2 / lambda_max
with lambda_max the current largest eigenvalue of the diffusion matrix.
Negative excursions are handled by the configured positivity policy and the
clipped mass is logged separately from the (exactly telescoping) pre-clip
mass balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientFields, KernelTables, ModelParams, build_kernels, compute_coefficients
from .collision import q_divergence
from .diagnostics import CriterionReport, criterion_report
from .errors import InvalidParameterError, UnstableStepError
from .grid import DistributionState, entropy, momentum

SCHEMES = ("explicit-euler", "heun")
POSITIVITY_POLICIES = ("clip-to-zero", "reject-step")


@dataclass(frozen=True)
class SolverConfig:
    """Time-step policy, scheme and positivity handling for a run."""

    params: ModelParams
    t_end: float
    cfl: float = 0.25
    scheme: str = "explicit-euler"
    positivity: str = "clip-to-zero"
    dt_max: float | None = None
    cadence: int = 1
    s_moment: float = 1.0
    delta: float | None = None
    rho: float = 1.0

    def __post_init__(self):
        # Values above ~0.25 exceed the explicit stability margin; they are
        # accepted so the unstable-step machinery stays exercisable.
        if not (self.cfl > 0.0):
            raise InvalidParameterError(f"cfl must be positive, got {self.cfl}")
        if self.t_end < 0:
            raise InvalidParameterError(f"end time must be >= 0, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.positivity not in POSITIVITY_POLICIES:
            raise InvalidParameterError(
                f"positivity policy must be one of {POSITIVITY_POLICIES}, got {self.positivity!r}"
            )
        if self.dt_max is not None and not (self.dt_max > 0):
            raise InvalidParameterError(f"dt_max must be > 0, got {self.dt_max}")
        if self.cadence < 1:
            raise InvalidParameterError("observation cadence must be >= 1")
        if self.delta is None:
            object.__setattr__(self, "delta", self.params.delta)


@dataclass(frozen=True)
class StepResult:
    """One accepted step: the new state plus its bookkeeping."""

    state: DistributionState
    dt: float
    mass_delta_preclip: float
    clipped_mass: float
    retries: int = 0


@dataclass(frozen=True)
class TrajectoryRow:
    """One observation: monitored norms, entropy data and conservation info."""

    time: float
    report: CriterionReport
    entropy: float
    entropy_production: float
    min_f: float
    momentum: tuple
    dt: float
    mass_delta_preclip: float
    clipped_mass: float


CSV_COLUMNS = (
    "time", "mass", "s_moment", "lp_norm", "energy", "sup_f", "inf_ball",
    "entropy", "entropy_production", "min_f", "momentum_x", "momentum_y",
    "momentum_z", "dt", "mass_delta_preclip", "clipped_mass",
)


@dataclass
class TrajectoryLog:
    """Observation sequence of a run; rows are appended in time order."""

    config: SolverConfig
    rows: list = field(default_factory=list)
    failed: bool = False
    failure_message: str = ""

    def append(self, row: TrajectoryRow):
        if self.rows and row.time <= self.rows[-1].time:
            raise InvalidParameterError("trajectory times must be strictly increasing")
        self.rows.append(row)

    def times(self) -> np.ndarray:
        return np.array([row.time for row in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([self._row_value(row, name) for row in self.rows])

    @staticmethod
    def _row_value(row: TrajectoryRow, name: str):
        mapping = {
            "time": row.time,
            "mass": row.report.mass,
            "s_moment": row.report.s_moment,
            "lp_norm": row.report.lp,
            "energy": row.report.energy,
            "sup_f": row.report.sup_f,
            "inf_ball": row.report.inf_ball,
            "entropy": row.entropy,
            "entropy_production": row.entropy_production,
            "min_f": row.min_f,
            "momentum_x": row.momentum[0],
            "momentum_y": row.momentum[1],
            "momentum_z": row.momentum[2],
            "dt": row.dt,
            "mass_delta_preclip": row.mass_delta_preclip,
            "clipped_mass": row.clipped_mass,
        }
        return mapping[name]

    def write_csv(self, stream):
        stream.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            stream.write(",".join(repr(float(self._row_value(row, c))) for c in CSV_COLUMNS) + "\n")


def stable_dt(coeffs: CoefficientFields, config: SolverConfig) -> float:
    """dt = cfl * h^2 / lambda_max from the current diffusion spectrum."""
    lam_max = float(np.linalg.eigvalsh(coeffs.abar)[..., -1].max())
    h2 = coeffs.grid.spacing**2
    if lam_max <= 1e-300:
        dt = math.inf
    else:
        dt = config.cfl * h2 / lam_max
    if config.dt_max is not None:
        dt = min(dt, config.dt_max)
    return dt


def step(f: DistributionState, config: SolverConfig, tables: KernelTables,
         coeffs: CoefficientFields | None = None) -> StepResult:
    """Advance one step of df/dt = Q(f, f) with the configured scheme.

    Raises :class:`UnstableStepError` (naming the offending dt) on
    non-finite updates; under the reject-step policy the step is retried at
    dt/2 up to ten times before giving up.
    """
    if coeffs is None:
        coeffs = compute_coefficients(f, tables)
    dt = stable_dt(coeffs, config)
    remaining = config.t_end - f.time
    if remaining > 0:
        dt = min(dt, remaining)
    if not (dt > 0 and math.isfinite(dt)):
        raise UnstableStepError(f"cannot form a positive finite step (dt = {dt})", dt=dt)

    h3 = f.grid.cell_volume
    q0 = q_divergence(f, f, coeffs).values

    retries = 0
    while True:
        if config.scheme == "explicit-euler":
            new_vals = f.values + dt * q0
        else:  # heun
            predictor = np.clip(f.values + dt * q0, 0.0, None)
            pred_state = DistributionState(f.grid, predictor, f.time + dt)
            q1 = q_divergence(pred_state, pred_state,
                              compute_coefficients(pred_state, tables)).values
            new_vals = f.values + 0.5 * dt * (q0 + q1)

        finite = bool(np.all(np.isfinite(new_vals)))
        negative = float(new_vals.min())
        if config.positivity == "reject-step":
            if finite and negative >= 0.0:
                break
            retries += 1
            if retries > 10:
                raise UnstableStepError(
                    f"step rejected 10 times (last dt = {dt})", dt=dt
                )
            dt *= 0.5
            continue
        if not finite:
            raise UnstableStepError(f"non-finite update at dt = {dt}", dt=dt)
        break

    mass_delta = float(new_vals.sum() * h3 - f.values.sum() * h3)
    clipped = 0.0
    if config.positivity == "clip-to-zero" and negative < 0.0:
        clipped = float(-new_vals[new_vals < 0.0].sum() * h3)
        new_vals = np.clip(new_vals, 0.0, None)
    state = DistributionState(f.grid, new_vals, f.time + dt)
    return StepResult(state, dt, mass_delta, clipped, retries)


def _observe(f: DistributionState, config: SolverConfig, coeffs: CoefficientFields,
             result: StepResult | None) -> TrajectoryRow:
    report = criterion_report(f, config.s_moment, config.delta, config.rho,
                              config.params.gamma)
    q = q_divergence(f, f, coeffs)
    logs = np.log(np.clip(f.values, 1e-300, None))
    prod = float(-np.sum(q.values * logs) * f.grid.cell_volume)
    return TrajectoryRow(
        time=f.time,
        report=report,
        entropy=entropy(f),
        entropy_production=prod,
        min_f=float(f.values.min()),
        momentum=tuple(momentum(f)),
        dt=0.0 if result is None else result.dt,
        mass_delta_preclip=0.0 if result is None else result.mass_delta_preclip,
        clipped_mass=0.0 if result is None else result.clipped_mass,
    )


def integrate(f0: DistributionState, config: SolverConfig,
              tables: KernelTables | None = None, observers=()) -> TrajectoryLog:
    """Run until the configured end time, observing at the configured cadence.

    Deterministic given (f0, config).  On an unstable step the partial log is
    attached to the propagated :class:`UnstableStepError` as ``partial_log``
    with its failure marker set.
    """
    if tables is None:
        tables = build_kernels(f0.grid, config.params)
    log = TrajectoryLog(config)
    f = f0
    coeffs = compute_coefficients(f, tables)
    row = _observe(f, config, coeffs, None)
    log.append(row)
    for obs in observers:
        obs(f, row)

    slack = 1e-12 * max(1.0, config.t_end)
    steps = 0
    while f.time < config.t_end - slack:
        try:
            result = step(f, config, tables, coeffs)
        except UnstableStepError as err:
            log.failed = True
            log.failure_message = str(err)
            raise UnstableStepError(str(err), dt=err.dt, partial_log=log) from err
        f = result.state
        coeffs = compute_coefficients(f, tables)
        steps += 1
        at_end = f.time >= config.t_end - slack
        if steps % config.cadence == 0 or at_end:
            row = _observe(f, config, coeffs, result)
            log.append(row)
            for obs in observers:
                obs(f, row)
    return log
