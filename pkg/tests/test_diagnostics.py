import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landaulab import (
    BarrierEnvelope,
    ConfigurationError,
    CoverageError,
    Cylinder,
    DistributionState,
    InvalidParameterError,
    ModelParams,
    SolverConfig,
    VelocityGrid,
    barrier_margin,
    barrier_params,
    blowup_detector,
    calc_inequality_audit,
    compute_coefficients,
    criterion_report,
    crossing_sign_audit,
    cylinder_norms,
    energy_interpolation_check,
    integrate,
    lp_norm,
    make_gaussian_mixture,
    make_maxwellian,
    moment,
    moser_constants_audit,
    rescale,
    scaling_covariance_residual,
)
from landaulab.diagnostics import ScalingTransform

from conftest import cached_tables


class TestCriterionReport:
    def test_maxwellian_values(self, maxwellian32):
        rep = criterion_report(maxwellian32, s=1.0, delta=0.5, rho=1.0, gamma=-3.0)
        assert rep.mass == pytest.approx(1.0, abs=1e-6)
        # |v| has a cusp at the origin, so the s = 1 moment converges slower
        assert rep.s_moment == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), abs=3e-4)
        assert rep.energy == pytest.approx(3.0, abs=1e-5)
        assert rep.p == pytest.approx(1.5)

    def test_speed_moment_fine_grid(self):
        # closed-form Gaussian |v|-moment at a resolution where the cusp
        # error sits below 1e-5
        g = VelocityGrid(8.0, 96)
        rep = criterion_report(make_maxwellian(g), s=1.0, delta=0.5, rho=1.0, gamma=-3.0)
        assert rep.s_moment == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), abs=1e-5)

    def test_zero_state(self, grid32):
        zero = DistributionState(grid32, np.zeros(grid32.shape))
        rep = criterion_report(zero, s=1.0, delta=0.5, rho=1.0, gamma=-3.0)
        assert rep.mass == rep.s_moment == rep.energy == rep.lp == rep.sup_f == 0.0

    @pytest.mark.parametrize("s", [0.0, 2.0, -1.0])
    def test_s_validation(self, maxwellian32, s):
        with pytest.raises(InvalidParameterError):
            criterion_report(maxwellian32, s=s, delta=0.5, rho=1.0, gamma=-3.0)


class TestBarrierParams:
    def test_direct_arithmetic(self, maxwellian32):
        # pinned constants: K = 2 max{1, 3*2} = 12, log branch 1/(33 ln 120)
        rep = criterion_report(maxwellian32, 1.0, 0.5, 1.0, -3.0)
        rep = type(rep)(**{**rep.__dict__, "sup_f": 2.0, "energy": 3.0})
        env = barrier_params(rep, C0=1.0, mu_prime=1.0, ell=0.1, rho=1.0,
                             c0=0.1, C1=3.0, c1=1.0)
        assert env.K == pytest.approx(12.0)
        assert env.mu == pytest.approx(1.0 / (33.0 * math.log(120.0)), rel=1e-12)
        assert env.mu == pytest.approx(0.0063296, abs=1e-6)
        assert env.active_branch == "log"

    def test_initial_data_branch(self, maxwellian32):
        rep = criterion_report(maxwellian32, 1.0, 0.5, 1.0, -3.0)
        env = barrier_params(rep, C0=1.0, mu_prime=1e-4, ell=0.1, rho=1.0,
                             c0=0.5, C1=2.0, c1=1.0)
        assert env.active_branch == "initial-data"
        assert env.mu == pytest.approx(5e-5)

    @given(scale=st.floats(min_value=1.0, max_value=50.0))
    @settings(max_examples=20, deadline=None)
    def test_mu_monotone_in_energy(self, scale):
        base = dict(C0=1.0, mu_prime=1.0, ell=0.1, rho=1.0, c0=0.1, C1=3.0, c1=1.0)

        class Rep:
            def __init__(self, e0):
                self.mass, self.energy, self.sup_f = 1.0, e0, 2.0

        lo = barrier_params(Rep(3.0), **base)
        hi = barrier_params(Rep(3.0 * scale), **base)
        assert hi.mu <= lo.mu * (1 + 1e-12)

    def test_log_branch_undefined(self, maxwellian32):
        rep = criterion_report(maxwellian32, 1.0, 0.5, 1.0, -3.0)
        with pytest.raises(ConfigurationError):
            barrier_params(rep, C0=1.0, mu_prime=1.0, ell=0.1, rho=1.0,
                           c0=100.0, C1=1.0, c1=1.0)

    def test_overflow_guard(self, maxwellian32):
        rep = criterion_report(maxwellian32, 1.0, 0.5, 1.0, -3.0)
        with pytest.raises(ConfigurationError):
            barrier_params(rep, C0=1.0, mu_prime=1.0, ell=0.1, rho=1.0, c_a=1e-6)


class TestBarrierMargin:
    def test_half_envelope_margin(self, grid32):
        env = BarrierEnvelope(K=2.0, mu=0.05, c0=0.1, C1=1.0, mu_prime=1.0,
                              ell=0.1, rho=1.0, C0=1.0, c1=1.0)
        f = DistributionState(grid32, 0.5 * env.evaluate(grid32))
        res = barrier_margin(f, env)
        assert res.passed
        far = grid32.speed_squared.max()
        assert res.min_margin == pytest.approx(1.0 * math.exp(-0.05 * far), rel=1e-12)
        # witnesses sit at the farthest corners
        witness_r2 = [grid32.speed_squared[w] for w in res.witnesses]
        assert all(r2 == pytest.approx(far) for r2 in witness_r2)

    def test_injected_violation_witnessed(self, grid32):
        env = BarrierEnvelope(K=2.0, mu=0.05, c0=0.1, C1=1.0, mu_prime=1.0,
                              ell=0.1, rho=1.0, C0=1.0, c1=1.0)
        vals = 0.5 * env.evaluate(grid32)
        vals[5, 7, 9] = env.K * 1.5
        res = barrier_margin(DistributionState(grid32, vals), env)
        assert not res.passed
        assert (5, 7, 9) in res.witnesses

    def test_scale_equivariance(self, grid32, maxwellian32):
        env = BarrierEnvelope(K=1.0, mu=0.3, c0=0.1, C1=1.0, mu_prime=1.0,
                              ell=0.1, rho=1.0, C0=0.5, c1=1.0)
        res1 = barrier_margin(maxwellian32, env)
        alpha = 7.5
        env2 = BarrierEnvelope(K=alpha, mu=0.3, c0=0.1, C1=1.0, mu_prime=1.0,
                               ell=0.1, rho=1.0, C0=0.5, c1=1.0)
        res2 = barrier_margin(DistributionState(grid32, alpha * maxwellian32.values), env2)
        assert res1.passed == res2.passed
        assert res2.min_margin == pytest.approx(alpha * res1.min_margin, rel=1e-12)
        assert set(res1.witnesses) == set(res2.witnesses)


class TestCrossingSignAudit:
    def test_trace_identity_spot_check(self):
        # tr[Pi(v-z) v v^T] = |v|^2 |z|^2 sin^2(theta) / |v-z|^2
        v = np.array([2.0, 0.0, 0.0])
        z = np.array([0.0, 1.0, 0.0])
        w = v - z
        pi = np.eye(3) - np.outer(w, w) / (w @ w)
        direct = float(np.trace(pi @ np.outer(v, v)))
        assert direct == pytest.approx(0.8, abs=1e-14)
        cos = (v @ z) / (np.linalg.norm(v) * np.linalg.norm(z))
        formula = (v @ v) * (z @ z) * (1 - cos**2) / (w @ w)
        assert formula == pytest.approx(direct, abs=1e-14)

    def test_aligned_case_vanishes(self):
        v = np.array([2.0, 0.0, 0.0])
        z = np.array([0.5, 0.0, 0.0])
        w = v - z
        pi = np.eye(3) - np.outer(w, w) / (w @ w)
        assert float(np.trace(pi @ np.outer(v, v))) == pytest.approx(0.0, abs=1e-14)

    def test_flat_barrier_limit(self, grid32, maxwellian32, tables32_coulomb):
        coeffs = compute_coefficients(maxwellian32, tables32_coulomb)
        env = BarrierEnvelope(K=1.0, mu=1e-9, c0=0.1, C1=1.0, mu_prime=1.0,
                              ell=0.1, rho=1.0, C0=0.5, c1=1.0)
        finding = crossing_sign_audit(maxwellian32, coeffs, env, (16, 16, 16))
        assert finding.verdict == "informational"
        assert abs(finding.measured["trace_term"]) < 1e-6
        assert finding.measured["reaction_term"] > 0
        assert finding.measured["sign"] == "nonnegative"

    def test_interior_validation(self, maxwellian32, tables32_coulomb):
        coeffs = compute_coefficients(maxwellian32, tables32_coulomb)
        env = BarrierEnvelope(K=1.0, mu=0.1, c0=0.1, C1=1.0, mu_prime=1.0,
                              ell=0.1, rho=1.0, C0=0.5, c1=1.0)
        with pytest.raises(InvalidParameterError):
            crossing_sign_audit(maxwellian32, coeffs, env, (0, 5, 5))


class TestCalcInequality:
    def test_restricted_form_passes(self):
        finding = calc_inequality_audit()
        assert finding.verdict == "pass"
        assert finding.measured["equality_gap_at_s0"] <= 1e-12

    def test_equality_at_half_mu(self):
        # mu = 1/2, s = 1: both sides equal e^{-1/2}
        lhs = 1.0 * math.exp(-0.5)
        rhs = 1.0 * math.exp(-0.5)
        assert lhs == pytest.approx(rhs, abs=1e-15)

    def test_unrestricted_failure_documented(self):
        finding = calc_inequality_audit()
        ex = finding.measured["unrestricted_example"]
        assert ex["mu"] == 0.25 and ex["s"] == pytest.approx(math.sqrt(2.0))
        # recomputed values: sqrt(2) e^{-1/2} and 2 e^{-1}
        assert ex["lhs"] == pytest.approx(math.sqrt(2.0) * math.exp(-0.5), rel=1e-14)
        assert ex["rhs"] == pytest.approx(2.0 * math.exp(-1.0), rel=1e-14)
        assert ex["lhs"] == pytest.approx(0.8578, abs=1e-4)
        assert ex["rhs"] == pytest.approx(0.7358, abs=1e-4)
        assert ex["fails"]

    def test_deep_tail(self):
        mu, s = 1.0, 10.0
        assert s * math.exp(-mu * s * s) < (1 / (2 * mu)) * math.exp(-1 / (4 * mu))

    def test_mu_validation(self):
        with pytest.raises(InvalidParameterError):
            calc_inequality_audit(mu_values=[0.7])


class TestMoserConstants:
    def test_limits_at_ten_thousand_terms(self):
        finding = moser_constants_audit(10_000)
        assert finding.verdict == "pass"
        assert finding.measured["sum_inverse_2q"] == pytest.approx(19.0 / 4.0, abs=1e-10)
        assert finding.measured["sum_weighted"] == pytest.approx(893.0 / 4.0, abs=1e-10)
        assert finding.measured["sigma"] == pytest.approx(42.0 / 19.0)

    def test_single_term_partials(self):
        finding = moser_constants_audit(1)
        assert finding.measured["sum_inverse_2q"] == pytest.approx(19.0 / 42.0, rel=1e-14)
        assert finding.measured["sum_weighted"] == pytest.approx(4.5 * 19.0 / 21.0, rel=1e-14)
        assert finding.measured["sum_inverse_2q"] < 19.0 / 4.0
        assert finding.measured["sum_weighted"] < 893.0 / 4.0

    def test_partial_sums_monotone_bounded(self):
        vals = [moser_constants_audit(n).measured["sum_inverse_2q"] for n in (1, 4, 16, 64)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 19.0 / 4.0


class TestRescale:
    def test_identity(self, maxwellian32):
        tr = ScalingTransform(1.0, 2.0, -3.0)
        out = rescale(maxwellian32, tr)
        assert np.array_equal(out.values, maxwellian32.values)

    def test_mass_change_of_variables(self):
        # compact source keeps the widened image inside the domain
        g = VelocityGrid(8.0, 32)
        f = make_maxwellian(g, temperature=0.5)
        for r in (0.5, 2.0):
            tr = ScalingTransform(r, 2.0, -3.0)
            out = rescale(f, tr)
            want = r ** (tr.alpha + tr.gamma) * moment(f, 0.0)
            assert moment(out, 0.0) == pytest.approx(want, rel=1e-4)

    def test_amplitude_factor_matches_mass_exponent(self, maxwellian32):
        # the amplitude factor r^(alpha+3+gamma) is a pure prefactor: dividing
        # it out must reproduce the exponent-zero transform exactly
        tr = ScalingTransform(0.5, 2.0, -3.0)
        assert tr.mass_exponent == pytest.approx(2.0)  # alpha + 3 + gamma
        out = rescale(maxwellian32, tr)
        neutral = rescale(maxwellian32, ScalingTransform(0.5, 0.0, -3.0))
        assert np.abs(out.values - 0.25 * neutral.values).max() <= 1e-15


class TestScalingCovariance:
    def test_identity_radius_exact_zero(self, maxwellian32, tables32_coulomb):
        res = scaling_covariance_residual(maxwellian32, 1.0, 2.0, tables32_coulomb)
        assert res.max_residual == 0.0

    def test_continuity_near_identity(self, maxwellian32, tables32_coulomb):
        vals = {}
        for r in (0.9, 1.0, 1.1):
            res = scaling_covariance_residual(maxwellian32, r, 2.0, tables32_coulomb)
            vals[r] = max(res.rho_a, res.rho_b, res.rho_c)
        assert vals[1.0] == 0.0
        assert vals[0.9] < 0.05 and vals[1.1] < 0.05

    def test_coulomb_reaction_factor_exact(self, grid32, tables32_coulomb):
        # gamma = -3: cbar = f makes the r^alpha factor exact up to interpolation
        f = make_gaussian_mixture(grid32, [0.7], [[0.25, 0.25, 0.25]], [0.6])
        fr = make_gaussian_mixture(grid32, [0.7 * 0.5 ** (2.0 - 3.0)],
                                   [[0.5, 0.5, 0.5]], [0.6 / 0.25])
        res = scaling_covariance_residual(f, 0.5, 2.0, tables32_coulomb, f_r=fr)
        assert res.factors["c"] == pytest.approx(0.25)
        assert res.rho_c < 5e-4

    def test_maxwellian_operator_residual_documented(self, maxwellian32, tables32_coulomb):
        # structural floor |1 - r^2| r^(2a+3+g): the mismatch of stencil-error
        # fields under rescaling; recorded, not assertable at 1e-3
        res = scaling_covariance_residual(maxwellian32, 0.5, 2.0, tables32_coulomb)
        assert res.rho_q < 0.1


class TestCylinderNorms:
    def _history(self, state, t0, t1):
        first = DistributionState(state.grid, state.values, t0)
        second = DistributionState(state.grid, state.values, t1)
        return [first, second]

    def test_product_measure_for_covering_ball(self, grid16):
        f = make_maxwellian(grid16)
        r = 16.0  # ball covers the whole grid
        cyl = Cylinder(t0=1.0, x0=(0, 0, 0), v0=(0, 0, 0), radius=r)
        hist = self._history(f, 1.0 - r * r, 1.0)
        p = 2.0
        got = cylinder_norms(hist, cyl, p)
        want = (r**2) ** (1 / p) * (2 * r**3) ** (3 / p) * lp_norm(f, p)
        assert got == pytest.approx(want, rel=1e-6)

    def test_unit_cylinder_against_direct_scan(self, grid16):
        f = make_maxwellian(grid16)
        cyl = Cylinder(t0=0.5, x0=(0, 0, 0), v0=(0.3, 0.0, 0.0), radius=1.0)
        hist = self._history(f, -0.5, 0.5)
        got = cylinder_norms(hist, cyl, 2.0)
        # independent direct evaluation
        g = grid16
        mask = ((g.nodes - np.array(cyl.v0)) ** 2).sum(axis=-1) < 1.0
        ball = float(np.sum(f.values[mask] ** 2) * g.cell_volume)
        want = (1.0 * ball * (2 * 1.0) ** 3) ** 0.5
        assert got == pytest.approx(want, rel=1e-12)

    def test_zero_state(self, grid16):
        zero = DistributionState(grid16, np.zeros(grid16.shape))
        cyl = Cylinder(t0=0.0, x0=(0, 0, 0), v0=(0, 0, 0), radius=1.0)
        assert cylinder_norms(self._history(zero, -1.0, 0.0), cyl, 2.0) == 0.0

    def test_coverage_error(self, grid16):
        f = make_maxwellian(grid16)
        cyl = Cylinder(t0=1.0, x0=(0, 0, 0), v0=(0, 0, 0), radius=1.0)
        with pytest.raises(CoverageError) as err:
            cylinder_norms(self._history(f, 0.5, 1.0), cyl, 2.0)
        assert err.value.missing_interval == (0.0, 1.0)


class TestEnergyInterpolation:
    def test_exponent_identity_pinned_example(self):
        s, delta, gamma = 1.0, 1.0, -3.0
        theta = -19.0 * gamma / delta
        q = (2.0 / s) * (2.0 * theta + s + 3.0)
        assert theta == 57.0
        assert q == 236.0
        assert theta / q + (s + 3) / (2 * q) == pytest.approx(0.25, abs=1e-16)

    @given(s=st.floats(min_value=1e-3, max_value=1.999),
           delta=st.floats(min_value=1e-3, max_value=1.0),
           gamma=st.floats(min_value=-3.0, max_value=-2.0))
    @settings(max_examples=100, deadline=None)
    def test_exponent_identity_random(self, s, delta, gamma):
        theta = -19.0 * gamma / delta
        q = (2.0 / s) * (2.0 * theta + s + 3.0)
        assert abs(theta / q + (s + 3) / (2 * q) - s / 4) <= 1e-14

    def test_chain_holds_under_envelope(self, grid32, maxwellian32):
        env = BarrierEnvelope(K=2.0 * maxwellian32.values.max(), mu=0.25,
                              c0=0.1, C1=1.0, mu_prime=1.0, ell=0.1, rho=1.0,
                              C0=maxwellian32.values.max(), c1=1.0)
        finding = energy_interpolation_check(maxwellian32, s=1.0, theta=57.0, env=env)
        assert finding.verdict == "pass"
        assert finding.measured["margin"] > 0

    def test_hypothesis_unmet(self, grid32, maxwellian32):
        env = BarrierEnvelope(K=0.5 * maxwellian32.values.max(), mu=0.4,
                              c0=0.1, C1=1.0, mu_prime=1.0, ell=0.1, rho=1.0,
                              C0=0.2 * maxwellian32.values.max(), c1=1.0)
        finding = energy_interpolation_check(maxwellian32, s=1.0, theta=57.0, env=env)
        assert finding.verdict == "hypothesis-unmet"

    def test_zero_state(self, grid32):
        zero = DistributionState(grid32, np.zeros(grid32.shape))
        env = BarrierEnvelope(K=1.0, mu=0.25, c0=0.1, C1=1.0, mu_prime=1.0,
                              ell=0.1, rho=1.0, C0=0.5, c1=1.0)
        finding = energy_interpolation_check(zero, s=1.0, theta=57.0, env=env)
        assert finding.verdict == "pass"


class TestBlowupDetector:
    def _log_from_columns(self, times, masses, s_moments, lps):
        from landaulab.diagnostics import CriterionReport
        from landaulab.solver import SolverConfig, TrajectoryLog, TrajectoryRow

        config = SolverConfig(params=ModelParams(-3.0), t_end=1.0)
        log = TrajectoryLog(config)
        for t, m, s, p in zip(times, masses, s_moments, lps):
            rep = CriterionReport(mass=m, s_moment=s, s=1.0, energy=1.0, lp=p,
                                  p=1.5, delta=0.5, sup_f=1.0, inf_ball=0.1, rho=1.0)
            log.append(TrajectoryRow(time=t, report=rep, entropy=0.0,
                                     entropy_production=0.0, min_f=0.0,
                                     momentum=(0, 0, 0), dt=0.1,
                                     mass_delta_preclip=0.0, clipped_mass=0.0))
        return log

    def test_constant_columns_unflagged(self):
        t = np.linspace(0, 1, 11)
        log = self._log_from_columns(t, np.ones(11), np.ones(11), np.ones(11))
        finding = blowup_detector(log, window=8)
        assert finding.measured["flagged"] == []

    def test_doubling_lp_flagged(self):
        t = np.linspace(0, 1, 11)
        log = self._log_from_columns(t, np.ones(11), np.ones(11), 2.0 ** np.arange(11))
        finding = blowup_detector(log, window=8, growth_threshold=1.0)
        assert finding.measured["flagged"] == ["P0"]
        assert finding.verdict == "informational"

    def test_equilibrium_run_unflagged(self, grid32, maxwellian32, tables32_coulomb):
        config = SolverConfig(params=ModelParams(-3.0), t_end=0.05, dt_max=0.0125)
        log = integrate(maxwellian32, config, tables32_coulomb)
        finding = blowup_detector(log, window=min(4, len(log.rows)))
        assert finding.measured["flagged"] == []

    def test_window_validation(self):
        t = np.linspace(0, 1, 3)
        log = self._log_from_columns(t, np.ones(3), np.ones(3), np.ones(3))
        with pytest.raises(InvalidParameterError):
            blowup_detector(log, window=5)
