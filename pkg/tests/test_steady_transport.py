import numpy as np
import pytest

from panvein import (
    DivergenceError,
    Grid,
    ModelParams,
    compatibility_residuals,
    contraction_certificate,
    find_equilibrium,
    integrate_ivp,
    picard_linear_part,
    solve_picard,
    solve_shooting,
    uniqueness_bound,
)
from panvein import steady_transport

TABLE1 = ModelParams()
SIGMA = 15.0
GRID = Grid.uniform(TABLE1.L, 1501)


@pytest.fixture(scope="module")
def shooting_profile():
    return solve_shooting(TABLE1, SIGMA, grid=GRID)


@pytest.fixture(scope="module")
def picard_profile():
    return solve_picard(TABLE1, SIGMA, grid=GRID)


class TestIntegrateIvp:
    def test_decoupled_linear_glucose(self):
        # insulin frozen at zero: G' = G_in / c exactly
        prof = integrate_ivp(2.0, 0.0, TABLE1, SIGMA, grid=GRID, freeze="I")
        expected = 2.0 + TABLE1.G_in * GRID.nodes / TABLE1.c
        np.testing.assert_allclose(prof.G, expected, rtol=1e-12)

    def test_frozen_insulin_matches_quadrature_form(self):
        # constant I: the integrating-factor solution is elementary
        I0 = 150.0
        prof = integrate_ivp(30.0, I0, TABLE1, SIGMA, grid=GRID, freeze="I")
        rate = TABLE1.a * I0 / TABLE1.c
        xs = GRID.nodes
        expected = (30.0 * np.exp(-rate * xs)
                    + TABLE1.G_in / (TABLE1.a * I0) * (1.0 - np.exp(-rate * xs)))
        np.testing.assert_allclose(prof.G, expected, atol=1e-8)
        np.testing.assert_array_equal(prof.I, I0)

    def test_frozen_glucose_matches_quadrature_form(self):
        G0 = 12.0
        prof = integrate_ivp(G0, 40.0, TABLE1, SIGMA, grid=GRID, freeze="G")
        s_eff = SIGMA * G0 ** 2 / (TABLE1.b ** 2 + G0 ** 2)
        rate = TABLE1.d_i / TABLE1.c
        xs = GRID.nodes
        expected = (40.0 * np.exp(-rate * xs)
                    + s_eff / TABLE1.d_i * (1.0 - np.exp(-rate * xs)))
        np.testing.assert_allclose(prof.I, expected, atol=1e-8)


class TestShooting:
    def test_periodic_bc_admits_flat_equilibrium(self):
        p = ModelParams(alpha1=1.0, alpha2=1.0)
        eq = find_equilibrium(p, SIGMA)
        prof = solve_shooting(p, SIGMA, guess=(eq.G_star, eq.I_star), grid=GRID)
        np.testing.assert_allclose(prof.G, eq.G_star, rtol=1e-9)
        np.testing.assert_allclose(prof.I, eq.I_star, rtol=1e-9)

    def test_boundary_ratio_enforced(self, shooting_profile):
        prof = shooting_profile
        assert prof.I[-1] / prof.I[0] == pytest.approx(2.0, abs=1e-8)
        assert prof.G[-1] / prof.G[0] == pytest.approx(1.0, abs=1e-8)
        assert np.all(prof.G > 0.0) and np.all(prof.I > 0.0)

    def test_converges_quickly_from_default_guess(self, shooting_profile):
        assert shooting_profile.iterations <= 25

    def test_cross_method_agreement(self, shooting_profile, picard_profile):
        assert shooting_profile.sup_distance(picard_profile) < 1e-6

    def test_grid_convergence_is_high_order(self):
        # slow flow + strong secretion so the RK4 truncation error sits well
        # above the Newton tolerance floor on coarse grids
        p = ModelParams(c=0.5)
        coarse = solve_shooting(p, 45.0, grid=Grid.uniform(p.L, 95), tol=1e-12)
        mid = solve_shooting(p, 45.0, grid=Grid.uniform(p.L, 189), tol=1e-12)
        fine = solve_shooting(p, 45.0, grid=Grid.uniform(p.L, 377), tol=1e-12)
        d1 = np.max(np.abs(coarse.values() - mid.values()[::2]))
        d2 = np.max(np.abs(mid.values() - fine.values()[::2]))
        assert d2 <= d1 / 8.0        # 4th-order would give 16x


class TestPicard:
    def test_linear_part_satisfies_boundary_coupling(self):
        u0, eq, grid = picard_linear_part(TABLE1, SIGMA, GRID)
        coupled = np.array([TABLE1.alpha1 * u0[0, 0], TABLE1.alpha2 * u0[0, 1]])
        np.testing.assert_allclose(u0[-1], coupled, atol=1e-9)

    def test_identity_coupling_gives_flat_equilibrium(self):
        p = ModelParams(alpha1=1.0, alpha2=1.0)
        eq = find_equilibrium(p, SIGMA)
        u0, _, _ = picard_linear_part(p, SIGMA, GRID)
        np.testing.assert_allclose(u0[:, 0], eq.G_star, rtol=1e-12)
        np.testing.assert_allclose(u0[:, 1], eq.I_star, rtol=1e-12)
        prof = solve_picard(p, SIGMA, grid=GRID)
        assert prof.iterations <= 2
        np.testing.assert_allclose(prof.G, eq.G_star, rtol=1e-10)

    def test_warns_when_certificate_invalid(self):
        with pytest.warns(RuntimeWarning, match="certificate invalid"):
            solve_picard(TABLE1, SIGMA, grid=Grid.uniform(TABLE1.L, 301),
                         tol=1e-8)

    def test_divergence_detection(self, monkeypatch):
        # no physiological parameter set we probed actually diverges, so the
        # detector is exercised by amplifying the nonlinear remainder
        original = steady_transport._remainder_table
        monkeypatch.setattr(steady_transport, "_remainder_table",
                            lambda u, eq: 200.0 * original(u, eq))
        with pytest.raises(DivergenceError) as err:
            with pytest.warns(RuntimeWarning):
                solve_picard(TABLE1, SIGMA, grid=Grid.uniform(TABLE1.L, 301))
        assert err.value.certificate is not None
        assert err.value.certificate.factor > 1.0


class TestCompatibility:
    def test_converged_profile_satisfies_identities(self, shooting_profile):
        res_g, res_i = compatibility_residuals(shooting_profile, TABLE1, SIGMA)
        assert res_g <= 1e-6
        assert res_i <= 1e-6

    def test_flat_equilibrium_identity_vanishes(self):
        p = ModelParams(alpha1=1.0, alpha2=1.0)
        eq = find_equilibrium(p, SIGMA)
        prof = solve_shooting(p, SIGMA, guess=(eq.G_star, eq.I_star), grid=GRID)
        res_g, res_i = compatibility_residuals(prof, p, SIGMA)
        # identities vanish analytically; what remains is the trapezoid
        # truncation of the exponential weights (largest on the insulin side)
        assert res_g < 1e-9 and res_i < 1e-7

    def test_detects_perturbed_profile(self, shooting_profile):
        from dataclasses import replace
        bad = replace(shooting_profile, G=shooting_profile.G * 1.1)
        res_g, _ = compatibility_residuals(bad, TABLE1, SIGMA)
        assert res_g > 1e-3

    def test_printed_insulin_variant_does_not_vanish(self, shooting_profile):
        # the textbook variant carries alpha1 and the wrong exponential; on a
        # converged profile it stays O(1) while the corrected one vanishes
        res = compatibility_residuals(shooting_profile, TABLE1, SIGMA,
                                      return_variants=True)
        assert res["res_I0"] <= 1e-6
        assert res["res_I0_printed_alpha1_variant"] > 1.0


class TestContractionCertificate:
    def test_identity_coupling_is_trivially_valid(self):
        p = ModelParams(alpha1=1.0, alpha2=1.0)
        cert = contraction_certificate(p, SIGMA, grid=GRID)
        assert cert.xi0_norm < 1e-12
        assert cert.factor < 1e-10
        assert cert.valid
        assert cert.r == pytest.approx(0.0, abs=1e-10)

    def test_table1_reports_invalid(self):
        cert = contraction_certificate(TABLE1, SIGMA, grid=GRID)
        assert not cert.valid
        assert cert.factor > 1.0
        assert np.isnan(cert.r)

    def test_valid_certificate_bounds_picard_solution(self):
        p = ModelParams(alpha1=1.0 + 1e-6, alpha2=1.0 + 1e-6)
        grid = Grid.uniform(p.L, 601)
        cert = contraction_certificate(p, SIGMA, grid=grid)
        assert cert.valid
        prof = solve_picard(p, SIGMA, tol=1e-13, grid=grid)
        eq = find_equilibrium(p, SIGMA)
        dist = prof.sup_distance(np.tile(eq.u_star, (len(grid.nodes), 1)))
        assert dist <= cert.r + 1e-8
        assert dist <= cert.r_corrected + 1e-8

    def test_lengthening_vein_invalidates_hypothesis(self):
        # the factor grows ~ linearly in L once the boundary inverse has
        # saturated, so doubling L long enough always breaks the hypothesis;
        # the solver is still attempted (with a warning) at that point
        p = ModelParams(alpha1=1.0 + 1e-6, alpha2=1.0 + 1e-6)
        from dataclasses import replace
        assert contraction_certificate(p, SIGMA, grid=Grid.uniform(p.L, 301)).valid
        L = p.L
        factors = []
        for _ in range(24):
            q = replace(p, L=L)
            cert = contraction_certificate(q, SIGMA, grid=Grid.uniform(L, 301))
            factors.append(cert.factor)
            if not cert.valid:
                with pytest.warns(RuntimeWarning):
                    solve_picard(q, SIGMA, grid=Grid.uniform(L, 301), tol=1e-8)
                return
            L *= 2.0
        pytest.fail(f"certificate never invalidated; factors = {factors}")


class TestUniquenessBound:
    def test_vanishing_nonlinearity_limit(self):
        # threshold diverges as sigma -> 0 (like sigma^(-1/3), so slowly)
        values = [uniqueness_bound(TABLE1, s) for s in (15.0, 1e-9, 1e-15)]
        assert values[0] < values[1] < values[2]
        assert values[2] > TABLE1.L       # uniqueness for any physical vein

    def test_table1_is_finite(self):
        value = uniqueness_bound(TABLE1, SIGMA)
        assert np.isfinite(value) and value > 0.0

    def test_monotone_decreasing_in_sigma(self):
        values = [uniqueness_bound(TABLE1, s) for s in (5.0, 15.0, 45.0)]
        assert values[0] > values[1] > values[2]
