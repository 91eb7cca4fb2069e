"""Manufactured exterior-domain problems with exact solutions and fluxes.

Every catalog entry carries the exact solution, the exact flux A grad u
with an analytic divergence closure, and the load f defined *from* that
closure (f := -div(A grad u)), so the data can never drift out of sync
with the solution.  Perturbation generators produce the test inputs for
the upper/lower bound studies: interior bumps (traces intact), boundary
modes (trace mismatch), and interface jumps (broken normal traces).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import traces
from .fields import (
    Coefficient,
    ScalarField,
    VectorField,
    angular_monomial,
    mollifier_profile,
    radial_scalar,
    ramp_profile,
    separable_field,
)
from .geometry import ExteriorDomain, QuadratureRule, build_quadrature, node_radii


@dataclass(frozen=True)
class QuadratureBundle:
    """All rules one problem needs, built once and shared."""

    omega_i: QuadratureRule
    omega_e: QuadratureRule
    whole: QuadratureRule
    gamma: QuadratureRule
    Gamma: QuadratureRule
    omega_e_refined: QuadratureRule  # doubled radial order, for tail checks


def make_bundle(
    domain: ExteriorDomain,
    radial_order: int = 12,
    angular_order: int = 12,
    shells: int = 16,
) -> QuadratureBundle:
    def build(region, ro=radial_order):
        return build_quadrature(domain, ro, angular_order, shells, region)

    return QuadratureBundle(
        omega_i=build("omega_i"),
        omega_e=build("omega_e"),
        whole=build("whole"),
        gamma=build("sphere_gamma"),
        Gamma=build("sphere_Gamma"),
        omega_e_refined=build("omega_e", ro=2 * radial_order),
    )


@dataclass(frozen=True)
class Problem:
    """Data of one exterior boundary value problem -div(A grad u) = f with
    Dirichlet trace g on the inner sphere."""

    domain: ExteriorDomain
    A: Coefficient
    f: ScalarField
    g: traces.SphereTrace
    quads: QuadratureBundle
    trace_degree: int
    strict: bool = False


@dataclass(frozen=True)
class ManufacturedProblem:
    problem: Problem
    exact_u: ScalarField
    exact_flux: VectorField  # A grad u, with divergence closure -f
    decay_class: str

    @property
    def domain(self) -> ExteriorDomain:
        return self.problem.domain


# ---------------------------------------------------------------------------
# catalog

CATALOG = ("N3_harmonic", "N3_decay", "N3_anisotropic", "N2_log")


def builtin(
    name: str,
    radial_order: int = 12,
    angular_order: int = 12,
    shells: int = 16,
    trace_degree: int = 8,
    strict: bool = False,
) -> ManufacturedProblem:
    """Instantiate a catalog problem at the requested resolution."""
    if name not in CATALOG:
        raise KeyError(f"unknown problem {name!r}; catalog: {CATALOG}")

    if name == "N3_harmonic":
        domain = ExteriorDomain(3, 1.0, 2.0)
        A = Coefficient.identity(3)
        u = radial_scalar(lambda r: 1.0 / r, lambda r: -1.0 / r**2, "1/r")
        flux = VectorField(
            value=lambda pts: -np.atleast_2d(pts) / node_radii(pts)[:, None] ** 3,
            divergence=lambda pts: np.zeros(len(np.atleast_2d(pts))),
            label="grad(1/r)",
        )
        decay = "harmonic r^-1"
    elif name == "N3_decay":
        domain = ExteriorDomain(3, 1.0, 2.0)
        A = Coefficient.constant(2.0 * np.eye(3), label="2I")
        u = radial_scalar(
            lambda r: 1.0 / (1.0 + r**2),
            lambda r: -2.0 * r / (1.0 + r**2) ** 2,
            "1/(1+r^2)",
        )

        def flux_value(pts):
            pts = np.atleast_2d(pts)
            r2 = np.sum(pts**2, axis=1)
            return -4.0 * pts / (1.0 + r2)[:, None] ** 2

        def flux_div(pts):
            r2 = np.sum(np.atleast_2d(pts) ** 2, axis=1)
            return (4.0 * r2 - 12.0) / (1.0 + r2) ** 3

        flux = VectorField(value=flux_value, divergence=flux_div, label="2*grad u")
        decay = "algebraic rho^-2"
    elif name == "N3_anisotropic":
        domain = ExteriorDomain(3, 1.0, 2.0)
        diag = np.array([1.0, 2.0, 4.0])
        A = Coefficient.constant(np.diag(diag), label="diag(1,2,4)")
        u = radial_scalar(lambda r: 1.0 / r, lambda r: -1.0 / r**2, "1/r")

        def aniso_value(pts):
            pts = np.atleast_2d(pts)
            return -(diag * pts) / node_radii(pts)[:, None] ** 3

        def aniso_div(pts):
            pts = np.atleast_2d(pts)
            r = node_radii(pts)
            quad = np.sum(diag * pts**2, axis=1)
            return 3.0 * quad / r**5 - np.sum(diag) / r**3

        flux = VectorField(value=aniso_value, divergence=aniso_div, label="A grad(1/r)")
        decay = "harmonic r^-1, anisotropic"
    else:  # N2_log
        domain = ExteriorDomain(2, 1.0, 2.0)
        A = Coefficient.identity(2)
        u = radial_scalar(lambda r: 1.0 / r, lambda r: -1.0 / r**2, "1/r (2D)")
        flux = VectorField(
            value=lambda pts: -np.atleast_2d(pts) / node_radii(pts)[:, None] ** 3,
            divergence=lambda pts: 1.0 / node_radii(pts) ** 3,
            label="grad(1/r) (2D)",
        )
        decay = "algebraic r^-1 (2D)"

    f = ScalarField(
        value=lambda pts: -flux.divergence(pts), gradient=None, label="-div flux"
    )
    quads = make_bundle(domain, radial_order, angular_order, shells)
    g = traces.analyze(u, domain.a, trace_degree, quads.gamma, strict=strict)
    problem = Problem(
        domain=domain,
        A=A,
        f=f,
        g=g,
        quads=quads,
        trace_degree=trace_degree,
        strict=strict,
    )
    return ManufacturedProblem(
        problem=problem, exact_u=u, exact_flux=flux, decay_class=decay
    )


def true_error(mp: ManufacturedProblem, v: ScalarField) -> float:
    """Exact energy-norm error ||A^{1/2} grad(u - v)|| over the whole domain."""
    from .fields import energy_norm, gradient_field

    diff = gradient_field(mp.exact_u - v)
    return energy_norm(mp.problem.A, diff, "A", mp.problem.quads.whole)


# ---------------------------------------------------------------------------
# perturbation generators

PERTURB_MODES = ("interior_bump", "boundary_mode", "interface_jump")


def _random_interior_bump(mp: ManufacturedProblem, rng) -> ScalarField:
    """Random smooth field with compact support strictly inside the
    annulus: radial mollifier times a random low-degree angular factor.
    The separable form keeps it fully resolved by the tensor quadrature
    (small off-center balls would slip between angular nodes)."""
    dom = mp.domain
    gap = dom.R - dom.a
    center_r = dom.a + gap * rng.uniform(0.35, 0.65)
    width = gap * rng.uniform(0.15, 0.28)
    width = min(width, 0.95 * (center_r - dom.a), 0.95 * (dom.R - center_r))
    p, dp = mollifier_profile(center_r, width)
    ang_v, ang_g = _random_angular(mp, rng)
    return separable_field(p, dp, ang_v, ang_g, label="interior-bump")


def _random_angular(mp: ManufacturedProblem, rng):
    """Random degree <= 1 angular combination (value, gradient closures)."""
    dim = mp.domain.dimension
    coeffs = rng.uniform(-1.0, 1.0, size=dim + 1)

    def value(pts):
        out = coeffs[0] * np.ones(len(np.atleast_2d(pts)))
        for i in range(1, dim + 1):
            v, _ = angular_monomial(dim, i)
            out = out + coeffs[i] * v(pts)
        return out

    def gradient(pts):
        pts2 = np.atleast_2d(pts)
        out = np.zeros_like(pts2, dtype=float)
        for i in range(1, dim + 1):
            _, gr = angular_monomial(dim, i)
            out = out + coeffs[i] * gr(pts)
        return out

    return value, gradient


def solenoidal_harmonic_gradient(dimension: int, index: int) -> VectorField:
    """Gradient of a decaying exterior harmonic; divergence-free, so adding
    it to a flux never disturbs the equilibrium residual.

    index 0 (dimension 3 only): grad(1/r).  index i >= 1: grad(x_i/r^N).
    All of them lie in L^2 outside any positive radius.
    """
    if index == 0:
        if dimension != 3:
            # grad(ln r) fails to be square integrable at infinity in 2D
            raise ValueError("index 0 requires dimension 3")

        def value(pts):
            pts = np.atleast_2d(pts)
            return -pts / node_radii(pts)[:, None] ** 3

    else:
        i = index - 1
        if i >= dimension:
            raise ValueError(f"index {index} out of range for dimension {dimension}")
        n = dimension

        def value(pts):
            pts = np.atleast_2d(pts)
            r = node_radii(pts)
            out = -n * pts * (pts[:, i] / r ** (n + 2))[:, None]
            out[:, i] += 1.0 / r**n
            return out

    return VectorField(
        value=value,
        divergence=lambda pts: np.zeros(len(np.atleast_2d(pts))),
        label=f"harmonic-gradient[{index}]",
    )


def perturb(
    mp: ManufacturedProblem,
    target: str,
    eps: float,
    mode: str,
    seed: int,
):
    """Deterministic perturbation of the exact data.

    target "v": returns a ScalarField approximation; target "y": a
    VectorField flux; target "y_broken": an (interior, exterior) flux
    pair whose normal-trace jump scales linearly in eps.
    """
    if eps < 0.0:
        raise ValueError("eps must be >= 0")
    if mode not in PERTURB_MODES:
        raise ValueError(f"unknown perturbation mode {mode!r}")
    rng = np.random.default_rng(seed)
    dom = mp.domain

    if target == "v":
        if eps == 0.0:
            return mp.exact_u
        if mode == "interior_bump":
            return mp.exact_u + eps * _random_interior_bump(mp, rng)
        if mode == "boundary_mode":
            ang_v, ang_g = _random_angular(mp, rng)
            p, dp = ramp_profile(dom.a, dom.a + 0.5 * (dom.R - dom.a))
            ext = separable_field(p, dp, ang_v, ang_g, label="boundary-mode")
            return mp.exact_u + eps * ext
        raise ValueError("target 'v' supports interior_bump and boundary_mode")

    if target == "y":
        if mode != "interior_bump":
            raise ValueError("target 'y' supports interior_bump only")
        if eps == 0.0:
            return mp.exact_flux
        bump = _random_interior_bump(mp, rng)
        direction = rng.normal(size=dom.dimension)
        direction /= np.linalg.norm(direction)
        grad = bump.gradient
        pert = VectorField(
            value=lambda pts: np.asarray(bump.value(pts))[:, None] * direction,
            divergence=lambda pts: np.asarray(grad(pts)) @ direction,
            label="flux-bump",
        )
        return mp.exact_flux + eps * pert

    if target == "y_broken":
        if mode != "interface_jump":
            raise ValueError("target 'y_broken' supports interface_jump only")
        if eps == 0.0:
            return mp.exact_flux, mp.exact_flux
        # break the exterior side with a random combination of solenoidal
        # harmonic gradients: the residual stays exactly equilibrated and
        # only the normal-trace jump (linear in eps) is exercised
        indices = (
            range(dom.dimension + 1) if dom.dimension == 3
            else range(1, dom.dimension + 1)
        )
        pieces = [solenoidal_harmonic_gradient(dom.dimension, i) for i in indices]
        coeffs = rng.uniform(-1.0, 1.0, size=len(pieces))
        jump_field = coeffs[0] * pieces[0]
        for c, piece in zip(coeffs[1:], pieces[1:]):
            jump_field = jump_field + c * piece
        return mp.exact_flux, mp.exact_flux + eps * jump_field

    raise ValueError(f"unknown perturbation target {target!r}")
