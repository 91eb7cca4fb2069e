import math

import numpy as np
import pytest

import extbounds as xb
from extbounds.fields import check_divergence, check_gradient, weighted_norm
from extbounds.fields import log_weighted_norm
from extbounds.problems import CATALOG, perturb, solenoidal_harmonic_gradient
from extbounds.traces import analyze, jump, normal_trace, sobolev_norm

from conftest import random_points_in_annulus


class TestCatalog:
    def test_unknown_name(self):
        with pytest.raises(KeyError, match="unknown problem"):
            xb.builtin("N5_exotic")

    @pytest.mark.parametrize("name", CATALOG)
    def test_closure_consistency(self, name, catalog):
        """-div(A grad u) = f holds pointwise: the flux closure's divergence
        against finite differences, and f + div(flux) identically zero."""
        mp = catalog[name]
        pts = random_points_in_annulus(mp.domain, 100, seed=11)
        assert check_gradient(mp.exact_u, pts, step=1e-6, rtol=1e-6) < 1e-6
        assert check_divergence(mp.exact_flux, pts, step=1e-6, rtol=1e-6) < 1e-6
        res = np.asarray(mp.problem.f.value(pts)) + np.asarray(
            mp.exact_flux.divergence(pts)
        )
        assert np.max(np.abs(res)) == 0.0

    @pytest.mark.parametrize("name", CATALOG)
    def test_flux_is_A_grad_u(self, name, catalog):
        mp = catalog[name]
        pts = random_points_in_annulus(mp.domain, 50, seed=12)
        flux = np.asarray(mp.exact_flux.value(pts))
        agu = np.einsum(
            "mij,mj->mi", np.asarray(mp.problem.A.matrix(pts)),
            np.asarray(mp.exact_u.gradient(pts)),
        )
        assert np.allclose(flux, agu, rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("name", CATALOG)
    def test_solution_space_membership(self, name, catalog):
        """Decay membership: the rho^{-1}-weighted norm is finite for
        N = 3; in 2D the log-weighted decay norm is checked over the tail
        (the weight is not integrable against a nonzero boundary trace
        near the inner circle, so only decay at infinity is meaningful)."""
        mp = catalog[name]
        if mp.domain.dimension >= 3:
            val = weighted_norm(mp.exact_u, -1.0, mp.problem.quads.whole)
        else:
            val = log_weighted_norm(mp.exact_u, "over_rlnr", mp.problem.quads.omega_e)
        assert math.isfinite(val) and val > 0.0

    @pytest.mark.parametrize("name", CATALOG)
    def test_load_membership(self, name, catalog):
        mp = catalog[name]
        if mp.domain.dimension >= 3:
            val = weighted_norm(mp.problem.f, 1.0, mp.problem.quads.whole)
        else:
            val = log_weighted_norm(mp.problem.f, "times_rlnr", mp.problem.quads.whole)
        assert math.isfinite(val)

    @pytest.mark.parametrize("name", CATALOG)
    def test_boundary_data_reproduced(self, name, catalog):
        mp = catalog[name]
        t = analyze(
            mp.exact_u, mp.domain.a, mp.problem.trace_degree, mp.problem.quads.gamma
        )
        assert np.allclose(t.coefficients, mp.problem.g.coefficients, atol=1e-12)

    def test_harmonic_energy_oracle(self, n3_harmonic):
        # closed form: integral over r > 1 of |grad(1/r)|^2 = 4 pi
        from extbounds.fields import gradient_field

        nrm = weighted_norm(
            gradient_field(n3_harmonic.exact_u), 0.0, n3_harmonic.problem.quads.whole
        )
        assert nrm**2 == pytest.approx(4 * math.pi, rel=1e-12)

    def test_harmonic_has_zero_load(self, n3_harmonic):
        pts = random_points_in_annulus(n3_harmonic.domain, 50, seed=13)
        assert np.all(np.asarray(n3_harmonic.problem.f.value(pts)) == 0.0)
        assert np.all(np.asarray(n3_harmonic.exact_flux.divergence(pts)) == 0.0)


class TestTrueError:
    def test_zero_for_exact(self, n3_harmonic):
        assert xb.true_error(n3_harmonic, n3_harmonic.exact_u) == 0.0

    def test_linearity(self, n3_harmonic):
        mp = n3_harmonic
        base_v = perturb(mp, "v", 1.0, "interior_bump", seed=21)
        base = xb.true_error(mp, base_v)
        for eps in (1e-1, 1e-2, 1e-3):
            v = perturb(mp, "v", eps, "interior_bump", seed=21)
            assert xb.true_error(mp, v) == pytest.approx(eps * base, rel=1e-12)

    def test_zero_approximation(self, n3_harmonic):
        zero = xb.ScalarField(
            value=lambda p: np.zeros(len(p)),
            gradient=lambda p: np.zeros_like(np.atleast_2d(p), dtype=float),
            label="0",
        )
        assert xb.true_error(n3_harmonic, zero) == pytest.approx(
            math.sqrt(4 * math.pi), rel=1e-12
        )


class TestPerturb:
    def test_eps_zero_identity(self, n3_harmonic):
        mp = n3_harmonic
        assert perturb(mp, "v", 0.0, "interior_bump", seed=1) is mp.exact_u
        assert perturb(mp, "y", 0.0, "interior_bump", seed=1) is mp.exact_flux
        y_i, y_e = perturb(mp, "y_broken", 0.0, "interface_jump", seed=1)
        assert y_i is mp.exact_flux and y_e is mp.exact_flux

    def test_negative_eps_rejected(self, n3_harmonic):
        with pytest.raises(ValueError):
            perturb(n3_harmonic, "v", -0.1, "interior_bump", seed=1)

    def test_unknown_mode_and_target(self, n3_harmonic):
        with pytest.raises(ValueError, match="mode"):
            perturb(n3_harmonic, "v", 0.1, "nonsense", seed=1)
        with pytest.raises(ValueError):
            perturb(n3_harmonic, "q", 0.1, "interior_bump", seed=1)
        with pytest.raises(ValueError):
            perturb(n3_harmonic, "y", 0.1, "boundary_mode", seed=1)

    def test_deterministic(self, n3_harmonic):
        mp = n3_harmonic
        pts = random_points_in_annulus(mp.domain, 30, seed=2)
        v1 = perturb(mp, "v", 0.1, "interior_bump", seed=9)
        v2 = perturb(mp, "v", 0.1, "interior_bump", seed=9)
        assert np.array_equal(np.asarray(v1.value(pts)), np.asarray(v2.value(pts)))

    def test_interior_bump_keeps_trace(self, n3_harmonic):
        mp = n3_harmonic
        p = mp.problem
        v = perturb(mp, "v", 0.3, "interior_bump", seed=3)
        tv = analyze(v, mp.domain.a, p.trace_degree, p.quads.gamma)
        assert np.allclose(tv.coefficients, p.g.coefficients, atol=1e-13)

    def test_boundary_mode_moves_trace(self, n3_harmonic):
        mp = n3_harmonic
        p = mp.problem
        v = perturb(mp, "v", 0.3, "boundary_mode", seed=3)
        tv = analyze(v, mp.domain.a, p.trace_degree, p.quads.gamma)
        assert not np.allclose(tv.coefficients, p.g.coefficients, atol=1e-6)

    @pytest.mark.parametrize("name", ["N3_harmonic", "N2_log"])
    def test_jump_linear_in_eps(self, name, catalog):
        mp = catalog[name]
        p = mp.problem
        norms = []
        for eps in (0.1, 0.01, 0.001):
            y_i, y_e = perturb(mp, "y_broken", eps, "interface_jump", seed=5)
            t_i = normal_trace(y_i, mp.domain.R, p.trace_degree, p.quads.Gamma)
            t_e = normal_trace(y_e, mp.domain.R, p.trace_degree, p.quads.Gamma)
            norms.append(sobolev_norm(jump(t_i, t_e), -0.5))
        assert norms[0] == pytest.approx(10 * norms[1], rel=1e-10)
        assert norms[1] == pytest.approx(10 * norms[2], rel=1e-10)

    def test_jump_field_is_solenoidal(self, n3_harmonic):
        mp = n3_harmonic
        _, y_e = perturb(mp, "y_broken", 0.5, "interface_jump", seed=6)
        pts = random_points_in_annulus(mp.domain, 20, seed=7) * 1.7  # outside R
        res = np.asarray(mp.problem.f.value(pts)) + np.asarray(y_e.divergence(pts))
        assert np.max(np.abs(res)) == 0.0

    def test_harmonic_gradient_requires_valid_index(self):
        with pytest.raises(ValueError):
            solenoidal_harmonic_gradient(2, 0)
        with pytest.raises(ValueError):
            solenoidal_harmonic_gradient(3, 5)

    def test_harmonic_gradient_closures(self):
        dom = xb.ExteriorDomain(3, 1.0, 2.0)
        pts = random_points_in_annulus(dom, 20, seed=8)
        for idx in range(4):
            y = solenoidal_harmonic_gradient(3, idx)
            assert check_divergence(y, pts, step=1e-6, rtol=1e-6) < 1e-6
