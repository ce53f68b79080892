import io

import numpy as np
import pytest

from landaulab import (
    DistributionState,
    InvalidParameterError,
    ModelParams,
    SolverConfig,
    UnstableStepError,
    VelocityGrid,
    compute_coefficients,
    integrate,
    make_gaussian_mixture,
    make_maxwellian,
    q_divergence,
    step,
)
from landaulab.grid import directional_second_moments
from landaulab.solver import CSV_COLUMNS, stable_dt

from conftest import cached_tables


def compact_mixture(grid):
    return make_gaussian_mixture(grid, [0.6, 0.4], [[0.5, 0, 0], [-0.5, 0.2, 0]], [0.5, 0.7])


class TestStep:
    def test_maxwellian_near_fixed_point(self, grid32, maxwellian32, tables32_coulomb):
        config = SolverConfig(params=ModelParams(-3.0), t_end=10.0, dt_max=0.05)
        coeffs = compute_coefficients(maxwellian32, tables32_coulomb)
        result = step(maxwellian32, config, tables32_coulomb, coeffs)
        q_sup = np.abs(q_divergence(maxwellian32, maxwellian32, coeffs).values).max()
        drift = np.abs(result.state.values - maxwellian32.values).max()
        assert drift <= result.dt * q_sup * (1 + 1e-12)

    def test_mass_conserved_preclip(self, grid32, tables32_coulomb):
        f = compact_mixture(grid32)
        config = SolverConfig(params=ModelParams(-3.0), t_end=10.0, dt_max=0.0125)
        result = step(f, config, tables32_coulomb)
        assert abs(result.mass_delta_preclip) <= 1e-12

    def test_zero_state_unchanged(self, grid32, tables32_coulomb):
        zero = DistributionState(grid32, np.zeros(grid32.shape))
        config = SolverConfig(params=ModelParams(-3.0), t_end=1.0)
        result = step(zero, config, tables32_coulomb)
        assert not result.state.values.any()
        assert result.state.time == 1.0  # dt capped by the remaining time

    def test_positivity_clip_policy(self, grid32, tables32_coulomb):
        f = compact_mixture(grid32)
        config = SolverConfig(params=ModelParams(-3.0), t_end=10.0, dt_max=0.0125)
        result = step(f, config, tables32_coulomb)
        assert result.state.values.min() >= 0.0
        assert result.clipped_mass >= 0.0

    def test_reject_step_gives_up(self):
        grid = VelocityGrid(6.0, 8)
        tables = cached_tables(6.0, 8, 0.0)
        f = make_gaussian_mixture(grid, [1.0, 0.8], [[1.0, 0, 0], [-1.0, 0, 0]], [0.5, 0.8])
        config = SolverConfig(params=ModelParams(0.0), t_end=5.0, cfl=1.0,
                              positivity="reject-step")
        with pytest.raises(UnstableStepError) as err:
            integrate(f, config, tables)
        assert err.value.dt is not None
        assert err.value.partial_log is not None
        assert err.value.partial_log.failed

    def test_dt_policy_uses_spectral_radius(self, grid32, maxwellian32, tables32_coulomb):
        config = SolverConfig(params=ModelParams(-3.0), t_end=10.0)
        coeffs = compute_coefficients(maxwellian32, tables32_coulomb)
        dt = stable_dt(coeffs, config)
        lam = np.linalg.eigvalsh(coeffs.abar)[..., -1].max()
        assert dt == pytest.approx(config.cfl * grid32.spacing**2 / lam)

    def test_config_validation(self):
        with pytest.raises(InvalidParameterError):
            SolverConfig(params=ModelParams(-3.0), t_end=-1.0)
        with pytest.raises(InvalidParameterError):
            SolverConfig(params=ModelParams(-3.0), t_end=1.0, cfl=0.0)
        with pytest.raises(InvalidParameterError):
            SolverConfig(params=ModelParams(-3.0), t_end=1.0, scheme="rk4")
        with pytest.raises(InvalidParameterError):
            SolverConfig(params=ModelParams(-3.0), t_end=1.0, positivity="wrap")


class TestIntegrate:
    def test_t_zero_single_entry(self, grid32, maxwellian32, tables32_coulomb):
        config = SolverConfig(params=ModelParams(-3.0), t_end=0.0)
        log = integrate(maxwellian32, config, tables32_coulomb)
        assert len(log.rows) == 1
        assert log.rows[0].time == 0.0

    def test_entropy_monotone_and_production_positive(self, grid32, tables32_coulomb):
        f = compact_mixture(grid32)
        config = SolverConfig(params=ModelParams(-3.0), t_end=0.1, dt_max=0.0125)
        log = integrate(f, config, tables32_coulomb)
        ent = log.column("entropy")
        assert np.all(np.diff(ent) <= 1e-10 * np.abs(ent[:-1]))
        assert log.column("entropy_production").min() >= -1e-10

    def test_heun_matches_euler_to_first_order(self, grid32, tables32_coulomb):
        f = compact_mixture(grid32)
        base = dict(params=ModelParams(-3.0), t_end=0.025, dt_max=0.0125)
        log_e = integrate(f, SolverConfig(scheme="explicit-euler", **base), tables32_coulomb)
        log_h = integrate(f, SolverConfig(scheme="heun", **base), tables32_coulomb)
        assert log_h.column("mass")[-1] == pytest.approx(log_e.column("mass")[-1], rel=1e-10)

    def test_isotropization_gamma_zero(self):
        # anisotropic temperatures converge monotonically toward the mean
        grid = VelocityGrid(7.0, 24)
        tables = cached_tables(7.0, 24, 0.0)
        vals = np.ones(grid.shape)
        temps = (1.5, 1.5, 0.5)
        for axis, t in enumerate(temps):
            shape = [1, 1, 1]
            shape[axis] = grid.points_per_axis
            ax = grid.axis.reshape(shape)
            vals = vals * np.exp(-(ax**2) / (2 * t)) / np.sqrt(2 * np.pi * t)
        f0 = DistributionState(grid, vals)
        spreads = []

        def observer(state, row):
            m = directional_second_moments(state)
            spreads.append(m.max() - m.min())

        config = SolverConfig(params=ModelParams(0.0), t_end=0.2, cfl=0.2,
                              dt_max=0.02, cadence=2)
        integrate(f0, config, tables, observers=(observer,))
        assert len(spreads) >= 4
        assert all(b < a for a, b in zip(spreads, spreads[1:]))
        assert spreads[-1] < 0.8 * spreads[0]

    def test_determinism(self, grid32, tables32_coulomb):
        f = compact_mixture(grid32)
        config = SolverConfig(params=ModelParams(-3.0), t_end=0.05, dt_max=0.0125)
        log_a = integrate(f, config, tables32_coulomb)
        log_b = integrate(f, config, tables32_coulomb)
        for col in ("mass", "entropy", "sup_f"):
            assert np.array_equal(log_a.column(col), log_b.column(col))

    def test_csv_round_trip(self, grid32, tables32_coulomb):
        f = compact_mixture(grid32)
        config = SolverConfig(params=ModelParams(-3.0), t_end=0.05, dt_max=0.0125)
        log = integrate(f, config, tables32_coulomb)
        buf = io.StringIO()
        log.write_csv(buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        parsed = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
        assert parsed.shape == (len(log.rows), len(CSV_COLUMNS))
        assert np.array_equal(parsed[:, 0], log.times())
        assert np.all(np.diff(parsed[:, 0]) > 0)
