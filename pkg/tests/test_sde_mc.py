import math

import numpy as np
import pytest
from scipy.special import ndtr

from parabolab import cutoffs as co
from parabolab import mixed_norms as mn
from parabolab import sde_mc as sde
from parabolab.mixed_norms import INF


class TestCutoffFamily:
    @pytest.mark.parametrize("R", [1.0, 2.0, 3.0, 5.0])
    def test_identity_and_plateau(self, R):
        assert co.phi_R(R / 2, R) == R / 2
        assert co.phi_R(3 * R, R) == R + 1.0

    @pytest.mark.parametrize("R", [1.0, 1.7, 2.5, 3.0, 4.0, 8.0])
    def test_monotone_on_samples(self, R):
        r = np.linspace(0.0, 3 * R, 1000)
        assert np.all(np.diff(co.phi_R(r, R)) >= -1e-12)
        assert np.all(co.phi_R_prime(r, R) >= -1e-12)

    @pytest.mark.parametrize("R", [1.0, 2.0, 3.0, 6.0])
    def test_c1_blend(self, R):
        for corner in (R, 2 * R):
            jump = abs(co.phi_R_prime(corner - 1e-9, R) - co.phi_R_prime(corner + 1e-9, R))
            assert jump < 1e-8
        # derivative matches a finite difference mid-blend
        mid = 1.5 * R
        fd = (co.phi_R(mid + 1e-6, R) - co.phi_R(mid - 1e-6, R)) / 2e-6
        assert fd == pytest.approx(co.phi_R_prime(mid, R), abs=1e-6)

    def test_shifted_negative_power_bounded(self):
        # for alpha < 0 the shift caps the power by n^(-alpha) below R
        fam = co.CutoffFamily(2.0, -0.5, 4)
        r = np.linspace(0.0, 2.0 - 1.0 / 4 - 1e-9, 200)
        assert np.all(fam.f_n(r) <= 4**0.5 * (1 + 1e-12))

    def test_invalid_parameters(self):
        with pytest.raises(co.CutoffFamilyError):
            co.phi_R(1.0, 0.5)
        with pytest.raises(co.CutoffFamilyError):
            co.CutoffFamily(2.0, 1.0, 0.5)


class TestBuildCoefficients:
    def test_singular_family_coefficient_identity(self):
        c = sde.build_coefficients("example-6.1", d=3, R=2.0, alpha=0.3, n=5)
        rng = np.random.default_rng(0)
        X = rng.uniform(-2, 2, (50, 3))
        fam = co.CutoffFamily(2.0, -0.3, 5)
        sig = c.sigma_diag(0.0, X)
        a = sig**2
        assert np.allclose(a, fam.f_n((X**2).sum(axis=-1))[:, None], rtol=1e-14)

    def test_planar_family_min_max(self):
        c = sde.build_coefficients("example-6.2", R=1.0, alpha=0.2, n=3)
        rng = np.random.default_rng(1)
        X = rng.uniform(-2, 2, (50, 2))
        fam = co.CutoffFamily(1.0, 0.2, 3)
        a = c.sigma_diag(0.0, X) ** 2
        lam = np.minimum(fam.f_n(X[:, 1] ** 2), fam.f_n(X[:, 0] ** 2))
        assert np.allclose(a.min(axis=1), lam, rtol=1e-14)

    def test_raw_prop61_with_zero_exponents_is_brownian(self):
        c = sde.build_coefficients("prop-6.1", d=3, alpha=0.0, lam=0.0, n=INF)
        ens = sde.euler_maruyama(c, np.zeros(3), 0.0, 0.5, 0.01, 4000, 3)
        m2 = (ens.paths[:, -1, :] ** 2).sum(axis=1)
        se = m2.std(ddof=1) / math.sqrt(len(m2))
        # sqrt(2) * (1/sqrt(2)) dW: plain Brownian motion, E|X_T|^2 = d T
        assert abs(m2.mean() - 3 * 0.5) <= 3 * se

    def test_parameter_ranges_named(self):
        with pytest.raises(sde.SdeParameterError, match="alpha < min"):
            sde.build_coefficients("example-6.1", d=3, alpha=0.7)
        with pytest.raises(sde.SdeParameterError, match="1/4"):
            sde.build_coefficients("example-6.2", alpha=0.3)
        with pytest.raises(sde.SdeParameterError, match="beta"):
            sde.build_coefficients("prop-6.1", d=3, alpha=0.3, beta=0.7, lam=1.0)

    def test_mollified_sigma_cap(self):
        n = 9
        c = sde.build_coefficients("prop-6.1", d=3, alpha=0.3, beta=0.2, lam=1.0,
                                   R=2.0, n=n)
        X = np.zeros((1, 3))
        cap = (1.0 / n) ** (-0.3 / 2) / math.sqrt(2)
        assert c.sigma_diag(0.0, X).max() == pytest.approx(cap)


class TestEulerMaruyama:
    def test_pure_drift_exact(self):
        c = sde.SdeCoefficients(2, "custom", {},
                                sigma=lambda t, X: np.zeros(X.shape[:-1] + (2, 2)),
                                b=lambda t, X: np.broadcast_to(np.array([1.0, -0.5]),
                                                               X.shape).copy())
        ens = sde.euler_maruyama(c, [0.0, 0.0], 0.0, 1.0, 0.01, 20, 9)
        assert np.abs(ens.paths[:, -1, :] - np.array([1.0, -0.5])).max() < 1e-12

    def test_brownian_second_moment(self):
        c = sde.build_coefficients("brownian", d=3)
        ens = sde.euler_maruyama(c, np.zeros(3), 0.0, 1.0, 0.01, 20000, 42)
        m2 = (ens.paths[:, -1, :] ** 2).sum(axis=1)
        se = m2.std(ddof=1) / math.sqrt(len(m2))
        assert abs(m2.mean() - 2 * 3 * 1.0) <= 3 * se

    def test_seed_determinism_bitwise(self):
        c = sde.build_coefficients("brownian", d=2)
        a = sde.euler_maruyama(c, [0.1, 0.2], 0.0, 0.3, 0.01, 400, 7)
        b = sde.euler_maruyama(c, [0.1, 0.2], 0.0, 0.3, 0.01, 400, 7)
        assert np.array_equal(a.paths, b.paths)

    def test_per_path_streams_prefix_invariant(self):
        # streams are keyed (seed, path index): a smaller ensemble is a prefix
        c = sde.build_coefficients("brownian", d=2)
        big = sde.euler_maruyama(c, [0.0, 0.0], 0.0, 0.3, 0.01, 50, 7)
        small = sde.euler_maruyama(c, [0.0, 0.0], 0.0, 0.3, 0.01, 11, 7)
        assert np.array_equal(small.paths, big.paths[:11])

    def test_chunking_invariant(self):
        c = sde.build_coefficients("brownian", d=1)
        a = sde.euler_maruyama(c, [0.0], 0.0, 0.2, 0.01, 100, 3, chunk=7)
        b = sde.euler_maruyama(c, [0.0], 0.0, 0.2, 0.01, 100, 3, chunk=100)
        assert np.array_equal(a.paths, b.paths)

    def test_initial_condition_exact(self):
        c = sde.build_coefficients("brownian", d=3)
        ens = sde.euler_maruyama(c, [1.0, 2.0, -1.0], 0.5, 0.7, 0.01, 10, 1)
        assert np.array_equal(ens.paths[:, 0, :],
                              np.tile([1.0, 2.0, -1.0], (10, 1)))

    def test_nonfinite_paths_frozen_and_reported(self):
        def bad_sigma(t, X):
            out = np.ones(X.shape[:-1] + (1,))
            out[np.abs(X[..., 0]) > 0.5] = np.inf
            return out

        c = sde.SdeCoefficients(1, "custom", {}, sigma_diag=bad_sigma,
                                b=lambda t, X: np.zeros_like(X))
        ens = sde.euler_maruyama(c, [0.0], 0.0, 1.0, 0.01, 200, 11)
        assert np.all(np.isfinite(ens.paths))
        assert 0 < ens.n_frozen <= 200
        m, se = sde.sup_moment(ens)
        assert math.isfinite(m)

    def test_dt_cap(self):
        c = sde.build_coefficients("brownian", d=1)
        with pytest.raises(sde.SdeParameterError):
            sde.euler_maruyama(c, [0.0], 0.0, 1.0, 0.1, 10, 1)


class TestKrylov:
    @pytest.fixture(scope="class")
    def brownian_ens(self):
        c = sde.build_coefficients("brownian", d=3)
        return sde.euler_maruyama(c, np.zeros(3), 0.0, 1.0, 0.01, 20000, 42)

    def test_constant_integrand_exact(self, brownian_ens):
        f = mn.from_callable(lambda t, X: np.ones(X.shape[:-1]), (0, 1), 50,
                             [(-40, 40)] * 3, (10,) * 3)
        est, _ = sde.krylov_functional(brownian_ens, f, 0.0, 1.0)
        assert est == pytest.approx(1.0, abs=1e-12)

    def test_linearity_and_positivity(self, brownian_ens):
        f = mn.from_callable(lambda t, X: ((X**2).sum(axis=-1) <= 1.0).astype(float),
                             (0, 1), 50, [(-1.25, 1.25)] * 3, (20,) * 3)
        e1, _ = sde.krylov_functional(brownian_ens, f, 0.0, 1.0)
        e2, _ = sde.krylov_functional(brownian_ens, f.scaled(2.0), 0.0, 1.0)
        assert e2 == pytest.approx(2 * e1, rel=1e-12)
        assert e1 >= 0

    def test_matches_gaussian_cdf_oracle(self, brownian_ens):
        nx, lo = 40, -1.25
        f = mn.from_callable(lambda t, X: ((X**2).sum(axis=-1) <= 1.0).astype(float),
                             (0, 1), 100, [(lo, -lo)] * 3, (nx,) * 3)
        est, se = sde.krylov_functional(brownian_ens, f, 0.0, 1.0)
        edges = lo + f.dx[0] * np.arange(nx + 1)
        mask = f.values[0]
        oracle, dt = 0.0, 0.01
        for k in range(100):
            t = k * dt
            if t == 0:
                oracle += dt
                continue
            pax = np.diff(ndtr(edges / math.sqrt(2 * t)))
            oracle += dt * float(np.einsum("i,j,k,ijk->", pax, pax, pax, mask))
        assert abs(est - oracle) <= 3 * se

    def test_window_outside_grid(self, brownian_ens):
        f = mn.from_callable(lambda t, X: np.ones(X.shape[:-1]), (0, 1), 10,
                             [(-1, 1)] * 3, (4,) * 3)
        with pytest.raises(sde.SdeParameterError):
            sde.krylov_functional(brownian_ens, f, 5.0, 6.0)


class TestModulus:
    def test_deterministic_drift_exact_half(self):
        c = sde.SdeCoefficients(1, "custom", {},
                                sigma=lambda t, X: np.zeros(X.shape[:-1] + (1, 1)),
                                b=lambda t, X: 2.0 * np.ones_like(X))
        ens = sde.euler_maruyama(c, [0.0], 0.0, 1.0, 0.01, 8, 5)
        rep = sde.modulus_report(ens, np.array([1, 2, 4, 8, 16, 32]) * 0.01)
        assert rep.slope == pytest.approx(0.5, abs=1e-12)

    def test_brownian_quarter_band(self):
        c = sde.build_coefficients("brownian", d=1)
        dt = 1.0 / 1024
        ens = sde.euler_maruyama(c, [0.0], 0.0, 1.0, dt, 2000, 8)
        rep = sde.modulus_report(ens, np.array([1, 2, 4, 8, 16, 32]) * dt)
        assert 0.15 < rep.slope < 0.35

    def test_singular_family_recorded(self):
        c = sde.build_coefficients("example-6.1", d=3, R=2.0, alpha=0.3, n=4)
        dt = 1.0 / 512
        ens = sde.euler_maruyama(c, [0.5, 0.0, 0.0], 0.0, 0.5, dt, 1000, 12)
        rep = sde.modulus_report(ens, np.array([1, 2, 4, 8, 16, 32]) * dt)
        assert 0.0 < rep.slope <= 0.5
        assert math.isfinite(rep.intercept)

    def test_span_and_count_guards(self):
        c = sde.build_coefficients("brownian", d=1)
        ens = sde.euler_maruyama(c, [0.0], 0.0, 0.2, 0.01, 10, 1)
        with pytest.raises(sde.SdeParameterError):
            sde.modulus_report(ens, [0.01, 0.02])
        with pytest.raises(sde.SdeParameterError):
            sde.modulus_report(ens, [0.01, 0.02, 0.04])  # only 0.6 decades


class TestSupMoment:
    def test_frozen_start(self):
        c = sde.SdeCoefficients(2, "custom", {},
                                sigma=lambda t, X: np.zeros(X.shape[:-1] + (2, 2)))
        ens = sde.euler_maruyama(c, [3.0, 4.0], 0.0, 0.2, 0.01, 5, 1)
        m, se = sde.sup_moment(ens)
        assert m == pytest.approx(5.0) and se == 0.0

    def test_brownian_reflection_oracle(self):
        c = sde.build_coefficients("brownian", d=1)
        dt = 1e-3
        ens = sde.euler_maruyama(c, [0.0], 0.0, 1.0, dt, 20000, 77)
        m, se = sde.sup_moment(ens)

        def p_exit(a):
            k = np.arange(-30, 31)
            return 1.0 - float((((-1.0) ** k) * (ndtr((2 * k + 1) * a)
                                                 - ndtr((2 * k - 1) * a))).sum())

        agrid = np.linspace(1e-6, 12, 3001)
        pe = np.array([p_exit(x / math.sqrt(2)) for x in agrid])
        oracle = float(np.trapezoid(pe, agrid))
        # discrete monitoring can only undershoot the continuum supremum;
        # allowance 1.5 x 0.5826 sigma sqrt(dt) for the expected deficit
        allowance = 1.5 * 0.5826 * math.sqrt(2.0) * math.sqrt(dt)
        assert m <= oracle + 3 * se
        assert m >= oracle - allowance - 3 * se


class TestCauchyAndUniqueness:
    def test_identical_laws_zero_distance(self):
        rep = sde.approximation_cauchy_report("brownian", [1, 2, 4], np.zeros(2), 0.2,
                                              0.01, 300, 5, d=2)
        assert rep.distances == [0.0, 0.0]

    def test_noise_floor_shrinks_with_path_count(self):
        rng = np.random.default_rng(6)
        a1 = rng.standard_normal((400, 1))
        b1 = rng.standard_normal((400, 1))
        a2 = rng.standard_normal((1600, 1))
        b2 = rng.standard_normal((1600, 1))
        w_small = sde.sliced_wasserstein1(a1, b1)
        w_big = sde.sliced_wasserstein1(a2, b2)
        assert w_big < w_small  # ~ sqrt(2) shrink at 4x the sample count

    def test_singular_family_decreasing_trend(self):
        rep = sde.approximation_cauchy_report("example-6.1", [1, 2, 4, 8], [1.0, 0, 0],
                                              0.25, 0.005, 4000, 21, d=3, R=1.5,
                                              alpha=0.25)
        assert rep.spearman <= 0.0

    def test_uniqueness_zero_perturbation_exact(self):
        out = sde.uniqueness_perturbation_report([0.1, 0.0], np.zeros(3), 0.2, 0.01,
                                                 100, 4, family_tag="brownian", d=3)
        d0 = [r for r in out["rows"] if r["eps"] == 0.0][0]
        assert d0["divergence"] == 0.0

    def test_brownian_divergence_equals_eps(self):
        out = sde.uniqueness_perturbation_report([0.5, 0.01], np.zeros(2), 0.2, 0.01,
                                                 200, 4, family_tag="brownian", d=2)
        for row in out["rows"]:
            assert row["divergence"] == pytest.approx(row["eps"], rel=1e-12)

    def test_prop61_decreasing_table(self):
        out = sde.uniqueness_perturbation_report(
            [1e-1, 1e-2, 1e-3, 1e-4], np.full(3, 0.5), 0.2, 0.005, 2000, 13,
            family_tag="prop-6.1", d=3, alpha=0.3, beta=0.2, lam=1.0, n=INF)
        divs = [r["divergence"] for r in out["rows"]]
        assert all(a > b for a, b in zip(divs, divs[1:]))
        assert out["spearman_eps_vs_divergence"] >= 0.99


class TestEnsembleExport:
    def test_roundtrip(self, tmp_path):
        c = sde.build_coefficients("example-6.2", R=1.0, alpha=0.2, n=4)
        ens = sde.euler_maruyama(c, [0.3, -0.2], 0.0, 0.1, 0.01, 50, 19)
        sde.export_ensemble(ens, tmp_path / "ens")
        back = sde.load_ensemble(tmp_path / "ens")
        assert np.array_equal(back.paths, ens.paths)
        assert back.family_tag == "example-6.2"
        assert back.seed == 19
