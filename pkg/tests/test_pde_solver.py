import math

import numpy as np
import pytest

from parabolab import mixed_norms as mn
from parabolab import pde_solver as pde
from parabolab.embeddings import B1_MUST_VANISH, ExponentConfig
from parabolab.mixed_norms import INF


def heat_solution_run(nx, T_target=0.2, dt_scale=0.4, boundary="zero-extension"):
    """Separation-of-variables fixture: u = exp(-pi^2 t) sin(pi x) on [0, 1]."""
    field = pde.identity_field(1)
    dx = 1.0 / nx
    dt = dt_scale * dx * dx
    steps = int(round(T_target / dt))
    u0 = pde.spatial_initial_condition(lambda X: np.sin(np.pi * X[..., 0]),
                                       [(0.0, 1.0)], (nx,), boundary)
    u = pde.solve(field, u0, pde.SolverConfig(dt=dt, T=steps * dt))
    t = np.arange(u.nt) * dt
    exact = np.exp(-np.pi**2 * t)[:, None] * np.sin(np.pi * u.x_centers(0))[None, :]
    return u, field, exact


def analytic_bank(u):
    tc, x = u.t_centers(), u.x_centers(0)
    bank = []
    for (ct, cx, wt, wx) in [(0.10, 0.5, 0.06, 0.3), (0.08, 0.6, 0.05, 0.25)]:
        tt, xx = (tc - ct) / wt, (x - cx) / wx
        phi = np.maximum(1 - tt**2, 0)[:, None] ** 3 * np.maximum(1 - xx**2, 0)[None, :] ** 3
        bank.append(u.with_values(phi))
    return bank


class TestEllipticity:
    def test_identity(self):
        field = pde.identity_field(2)
        prof = pde.ellipticity_profiles(field, (0, 0), (0.25, 0.25), (8, 8), [0.0])
        assert np.all(prof.lam == 1.0) and np.all(prof.mu == 1.0)

    def test_diag_4_1_bruteforce(self):
        A = np.diag([4.0, 1.0])
        assert pde.mu_distortion_bruteforce(A, 10000) == pytest.approx(4.0, rel=1e-6)
        field = pde.CoefficientField("diag", 2,
                                     a=lambda t, X: np.broadcast_to(A, X.shape[:-1] + (2, 2)).copy())
        prof = pde.ellipticity_profiles(field, (0, 0), (0.5, 0.5), (4, 4), [0.0],
                                        xi_check=4000)
        assert np.all(prof.lam == pytest.approx(1.0))
        assert np.all(prof.mu == pytest.approx(4.0))

    def test_singular_family_profile_identity(self):
        from parabolab.cutoffs import CutoffFamily

        field = pde.example_61_field(d=3, alpha=0.3, R=2.0, n=4)
        prof = pde.ellipticity_profiles(field, (-1.5,) * 3, (0.5,) * 3, (6,) * 3, [0.0])
        fam = CutoffFamily(2.0, -0.3, 4)
        X = pde._mesh((-1.5,) * 3, (0.5,) * 3, (6,) * 3)
        want = fam.f_n((X**2).sum(axis=-1))
        assert np.allclose(prof.lam, want, rtol=1e-13)
        assert np.allclose(prof.mu, want, rtol=1e-13)

    def test_non_psd_rejected(self):
        field = pde.CoefficientField("bad", 1,
                                     a=lambda t, X: -np.ones(X.shape[:-1] + (1, 1)))
        with pytest.raises(pde.CoefficientError):
            pde.ellipticity_profiles(field, (0,), (0.5,), (4,), [0.0])


class TestHypotheses:
    def test_identity_all_pass(self):
        field = pde.identity_field(3)
        cfg = ExponentConfig(d=3, p0=INF, p1=INF)
        rep = pde.check_hypotheses(field, cfg, (-2,) * 3, (0.5,) * 3, (8,) * 3)
        assert rep.hyp_a_ok and rep.pp0_ok and rep.re01_ok
        assert rep.re1 is True
        assert rep.div_b2_neg_mass == 0.0

    def test_singular_family_mu_integrable(self):
        # window norm of mu is finite for p1 below the integrability threshold
        field = pde.example_61_field(d=3, alpha=0.3, R=2.0, n=8)
        cfg = ExponentConfig(d=3, p0=INF, p1=2.0)  # p1 < d/(2 alpha + 1) = 1.875? no: mu ~ |x|^(-2a)
        rep = pde.check_hypotheses(field, cfg, (-2,) * 3, (0.25,) * 3, (16,) * 3)
        assert math.isfinite(rep.mu_norm)
        assert rep.hyp_a_ok

    def test_rotation_divergence_exactly_zero(self):
        field = pde.rotation_drift_field(pure=True)
        X = pde._mesh((-2, -2), (0.25, 0.25), (16, 16))
        div = pde.discrete_divergence(field.b2(0.0, X), (0.25, 0.25))
        assert np.abs(div).max() == 0.0

    def test_degenerate_lambda_reported_not_raised(self):
        # diagonal-power with raw n = inf vanishes on the axes
        field = pde.diagonal_power_field(2, 0.5, R=1.0, n=INF)
        cfg = ExponentConfig(d=2, p0=2.4, p1=INF)
        rep = pde.check_hypotheses(field, cfg, (-2, -2), (0.25, 0.25), (16, 16))
        assert rep.lam_zero_fraction == 0.0 or not rep.hyp_a_ok or rep.lam_inv_norm > 0


class TestSolve:
    def test_heat_fixture_order(self):
        errs = []
        for nx in (16, 32, 64):
            u, _, exact = heat_solution_run(nx)
            errs.append(np.abs(u.values - exact).max())
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 1.7

    def test_constant_forcing_exact(self):
        field = pde.identity_field(1, forcing=lambda t, X: np.ones(X.shape[:-1]))
        u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                           [(0, 1)], (16,), "periodic")
        u = pde.solve(field, u0, pde.SolverConfig(dt=0.01, T=0.5))
        t = np.arange(u.nt) * 0.01
        assert np.abs(u.values - t[:, None]).max() < 1e-10

    def test_degenerate_run_finite(self):
        field = pde.example_62_field(alpha=0.2, R=1.0, n=4,
                                     forcing=lambda t, X: np.exp(-(X**2).sum(axis=-1)))
        u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                           [(-4, 4)] * 2, (32, 32), "periodic")
        u = pde.solve(field, u0, pde.SolverConfig(dt=0.02, T=0.5))
        assert np.all(np.isfinite(u.values))
        assert np.abs(u.values[-1]).max() < 10.0
        # refinement sanity: halving steps barely moves the endpoint
        u2 = pde.solve(field, u0, pde.SolverConfig(dt=0.01, T=0.5))
        assert np.abs(u2.values[-1] - u.values[-1]).max() < 0.05

    def test_conservation_periodic(self):
        field = pde.diagonal_power_field(1, 0.5, R=1.0, n=4)
        u0 = pde.spatial_initial_condition(
            lambda X: np.exp(-10 * (X[..., 0] - 0.5) ** 2), [(0, 1)], (32,), "periodic")
        u = pde.solve(field, u0, pde.SolverConfig(dt=0.005, T=0.2))
        masses = u.values.sum(axis=1) * u.dx[0]
        assert np.abs(masses - masses[0]).max() < 1e-10

    def test_linearity_exact(self):
        forcing = lambda t, X: np.exp(-(X[..., 0] - 0.4) ** 2 / 0.05)
        field = pde.identity_field(1, forcing=forcing)
        field3 = pde.identity_field(1, forcing=lambda t, X: 3.0 * forcing(t, X))
        u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                           [(0, 1)], (32,), "periodic")
        cfg = pde.SolverConfig(dt=0.01, T=0.3)
        u = pde.solve(field, u0, cfg)
        u3 = pde.solve(field3, u0, cfg)
        assert np.abs(u3.values - 3 * u.values).max() <= 1e-10 * np.abs(u3.values).max() + 1e-13

    def test_nonnegativity_and_comparison(self):
        fl = lambda t, X: np.maximum(0.2 - np.abs(X[..., 0] - 0.3), 0.0)
        field = pde.CoefficientField(
            "drift", 1, a=None, a_diag=lambda t, X: np.ones(X.shape[:-1] + (1,)),
            b2=lambda t, X: 0.5 * np.ones_like(X), forcing=fl)
        u0 = pde.spatial_initial_condition(
            lambda X: np.maximum(0.1 - np.abs(X[..., 0] - 0.5), 0.0), [(0, 1)], (32,),
            "periodic")
        cfg = pde.SolverConfig(dt=0.01, T=0.3)
        u = pde.solve(field, u0, cfg)
        assert u.values.min() >= -1e-13
        bigger = field.with_forcing(lambda t, X: fl(t, X) + 0.05)
        ug = pde.solve(bigger, u0, cfg)
        assert np.all(ug.values >= u.values - 1e-12)

    def test_cfl_guard(self):
        field = pde.CoefficientField(
            "fast", 1, a=None, a_diag=lambda t, X: np.ones(X.shape[:-1] + (1,)),
            b2=lambda t, X: 100.0 * np.ones_like(X))
        u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                           [(0, 1)], (16,), "periodic")
        with pytest.raises(pde.SolverConfigError):
            pde.solve(field, u0, pde.SolverConfig(dt=0.01, T=0.1))

    def test_linear_tol_contract(self):
        with pytest.raises(pde.SolverConfigError):
            pde.SolverConfig(dt=0.01, T=0.1, linear_tol=1e-6)

    def test_anisotropic_constant_matrix_mode(self):
        A = np.array([[1.0, 0.3], [0.3, 0.7]])
        field = pde.CoefficientField(
            "aniso", 2, a=lambda t, X: np.broadcast_to(A, X.shape[:-1] + (2, 2)).copy())
        k = np.array([2 * np.pi, 2 * np.pi])
        u0 = pde.spatial_initial_condition(lambda X: np.sin(X @ k), [(0, 1)] * 2,
                                           (32, 32), "periodic")
        dt = 1e-4
        u = pde.solve(field, u0, pde.SolverConfig(dt=dt, T=0.01))
        rate = float(k @ A @ k)
        X = u.meshgrid()
        exact = math.exp(-rate * 0.01) * np.sin(X @ k)
        scale = np.abs(exact).max()
        assert np.abs(u.values[-1] - exact).max() < 0.05 * scale


class TestWeakResidual:
    def test_zero_solution_zero_residual(self):
        field = pde.identity_field(1)
        u = mn.from_callable(lambda t, X: np.zeros(X.shape[:-1]), (0, 0.2), 16,
                             [(0, 1)], (32,))
        assert pde.weak_residual(u, field, analytic_bank(u)) == 0.0

    def test_refinement_order(self):
        rs = []
        for nx in (32, 64):
            u, field, _ = heat_solution_run(nx)
            rs.append(pde.weak_residual(u, field, analytic_bank(u)))
        assert math.log2(rs[0] / rs[1]) >= 1.0

    def test_corruption_sensitivity(self):
        u, field, _ = heat_solution_run(64)
        bank = analytic_bank(u)
        clean = pde.weak_residual(u, field, bank)
        local = np.random.default_rng(20250809)  # fixed draw for the 10x jump
        noisy = u.with_values(u.values + 1e-2 * local.standard_normal(u.values.shape))
        assert pde.weak_residual(noisy, field, bank) >= 10 * clean

    def test_boundary_touching_test_function_rejected(self):
        u, field, _ = heat_solution_run(16)
        phi = u.with_values(np.ones_like(u.values))
        with pytest.raises(pde.TestBankError):
            pde.weak_residual(u, field, [phi])


class TestSteklov:
    def test_linear_average(self):
        u = mn.from_callable(lambda t, X: t * np.ones(X.shape[:-1]), (0, 1), 100,
                             [(0, 1)], (4,))
        s = pde.steklov_mean(u, 0.1)
        tc = u.t_centers()
        keep = tc < 0.85
        assert np.abs(s.values[keep, 0] - (tc[keep] + 0.05)).max() < 1e-12

    def test_constant_unchanged(self):
        u = mn.from_callable(lambda t, X: 2.5 * np.ones(X.shape[:-1]), (0, 1), 50,
                             [(0, 1)], (4,))
        s = pde.steklov_mean(u, 0.2)
        tc = u.t_centers()
        keep = tc < 0.75
        assert np.abs(s.values[keep] - 2.5).max() < 1e-12

    def test_sine_closed_form(self):
        u = mn.from_callable(lambda t, X: np.sin(t) * np.ones(X.shape[:-1]), (0, 8), 400,
                             [(0, 1)], (4,))
        m = int(round(np.pi / u.dt))
        h = m * u.dt
        s = pde.steklov_mean(u, h)
        tc = u.t_centers()
        keep = tc < 8 - h
        exact = (np.cos(tc) - np.cos(tc + h)) / h
        assert np.abs(s.values[keep, 0] - exact[keep]).max() < 5e-5

    def test_h_below_dt_rejected(self):
        u = mn.from_callable(lambda t, X: np.ones(X.shape[:-1]), (0, 1), 10, [(0, 1)], (4,))
        with pytest.raises(pde.SolverConfigError):
            pde.steklov_mean(u, 0.01)


class TestMaxPrinciple:
    def _run(self, amp=1.0, nx=48, dt=0.02):
        forcing = lambda t, X: amp * np.exp(-(X**2).sum(axis=-1) / 0.32)
        field = pde.example_62_field(alpha=0.2, R=1.0, n=4, forcing=forcing)
        u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                           [(-4, 4)] * 2, (nx, nx), "periodic")
        u = pde.solve(field, u0, pde.SolverConfig(dt=dt, T=0.5))
        cfg = ExponentConfig(d=2, p0=2.4, p4=4.0, q4=INF)
        return pde.max_principle_report(u, field, cfg, 0.5, lattice_step=0.5)

    def test_scaling_invariance(self):
        a = self._run(1.0)
        b = self._run(3.0)
        assert b.ratio == pytest.approx(a.ratio, rel=1e-10)

    def test_constant_forcing_identity(self):
        field = pde.identity_field(2, forcing=lambda t, X: np.ones(X.shape[:-1]))
        u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                           [(-2, 2)] * 2, (16, 16), "periodic")
        u = pde.solve(field, u0, pde.SolverConfig(dt=0.01, T=1.0))
        assert np.abs(u.values[-1] - 1.0).max() < 1e-10

    def test_zero_forcing_flagged(self):
        field = pde.identity_field(1)
        u0 = pde.spatial_initial_condition(lambda X: np.sin(np.pi * X[..., 0]),
                                           [(0, 1)], (16,), "periodic")
        u = pde.solve(field, u0, pde.SolverConfig(dt=0.01, T=0.1))
        cfg = ExponentConfig(d=1, p0=INF, p4=4.0, q4=INF)
        rep = pde.max_principle_report(u, field, cfg, 0.1)
        assert rep.ratio is None


def test_tabulated_field_lookup():
    g = mn.from_callable(lambda t, X: 1.0 + X[..., 0] ** 2, (0, 1), 4, [(-1, 1)], (16,))
    field = pde.tabulated_diagonal_field([g])
    X = pde._mesh((-1.0,), (0.125,), (16,))
    vals = field.a_diagonal(0.5, X)[..., 0]
    assert vals == pytest.approx(1.0 + X[..., 0] ** 2, abs=1e-12)


def test_build_field_catalog():
    assert "example-6.1" in pde.PDE_FIXTURES
    with pytest.raises(pde.CoefficientError):
        pde.build_field("nonsense")
    with pytest.raises(pde.CoefficientError):
        pde.example_61_field(d=3, alpha=0.7)  # above min(d/2-1, 1/2+1/(d-1)) = 1/2
