"""Spectral traces on spheres and the fractional norms built on them.

A trace is stored as coefficients with respect to an orthonormal basis of
the surface-measure L^2 space: real spherical harmonics for N = 3,
normalized Fourier modes on the circle for N = 2.  The H^{+1/2} and
H^{-1/2} norms use the Laplace-Beltrami multiplier
``(1 + l(l+N-2)/radius^2)^{+-1/2}``; every boundary/interface constant in
:mod:`extbounds.constants` is computed against this same norm, which keeps
the bound chain consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fields import ScalarField, VectorField
from .geometry import QuadratureRule, node_radii


class TraceError(ValueError):
    """Invalid trace metadata or an insufficient angular rule."""


class BandLimitError(TraceError):
    """Strict mode: too much energy beyond half the cutoff degree."""


def coefficient_count(dimension: int, degree: int) -> int:
    if dimension == 3:
        return (degree + 1) ** 2
    if dimension == 2:
        return 2 * degree + 1
    raise TraceError(f"traces require dimension 2 or 3, got {dimension}")


def degree_of_index(dimension: int, degree: int) -> np.ndarray:
    """Harmonic degree l for each coefficient slot."""
    if dimension == 3:
        return np.repeat(np.arange(degree + 1), 2 * np.arange(degree + 1) + 1)
    out = np.zeros(2 * degree + 1, dtype=int)
    out[1::2] = np.arange(1, degree + 1)
    out[2::2] = np.arange(1, degree + 1)
    return out


@lru_cache(maxsize=None)
def _sph_norms(degree: int) -> np.ndarray:
    """Orthonormalization factors sqrt((2l+1)/(4pi) (l-m)!/(l+m)!) laid out
    per (l, m >= 0)."""
    out = {}
    for l in range(degree + 1):
        for m in range(l + 1):
            ratio = math.factorial(l - m) / math.factorial(l + m)
            out[(l, m)] = math.sqrt((2 * l + 1) / (4 * math.pi) * ratio)
    return out


def basis_matrix(
    dimension: int, degree: int, radius: float, points: np.ndarray
) -> np.ndarray:
    """Evaluate the orthonormal surface basis at points on the sphere.

    Returns an array of shape (n_basis, n_points).  Index layout: for
    N = 3 the slot of (l, m) is l^2 + l + m with real harmonics
    (m < 0 -> sin, m > 0 -> cos); for N = 2 the layout is
    [const, cos th, sin th, cos 2th, sin 2th, ...].
    """
    from scipy.special import lpmv

    pts = np.atleast_2d(points)
    r = node_radii(pts)
    if dimension == 3:
        mu = pts[:, 2] / r
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        norms = _sph_norms(degree)
        rows = np.empty(((degree + 1) ** 2, len(pts)))
        for l in range(degree + 1):
            for m in range(l + 1):
                p = lpmv(m, l, mu) * norms[(l, m)]
                if m == 0:
                    rows[l * l + l] = p
                else:
                    rows[l * l + l + m] = math.sqrt(2.0) * p * np.cos(m * phi)
                    rows[l * l + l - m] = math.sqrt(2.0) * p * np.sin(m * phi)
        # orthonormal w.r.t. the surface measure: divide by radius^{(N-1)/2}
        return rows / radius
    if dimension == 2:
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        rows = np.empty((2 * degree + 1, len(pts)))
        rows[0] = 1.0 / math.sqrt(2.0 * math.pi * radius)
        for k in range(1, degree + 1):
            rows[2 * k - 1] = np.cos(k * theta) / math.sqrt(math.pi * radius)
            rows[2 * k] = np.sin(k * theta) / math.sqrt(math.pi * radius)
        return rows
    raise TraceError(f"traces require dimension 2 or 3, got {dimension}")


@dataclass(frozen=True)
class SphereTrace:
    """Band-limited function on a sphere, stored spectrally."""

    radius: float
    dimension: int
    degree: int
    coefficients: np.ndarray
    tail_fraction: float = field(default=0.0, compare=False)

    def __post_init__(self):
        coeffs = np.ascontiguousarray(self.coefficients, dtype=float)
        expected = coefficient_count(self.dimension, self.degree)
        if coeffs.shape != (expected,):
            raise TraceError(
                f"coefficient count {coeffs.shape} does not match degree "
                f"{self.degree} in dimension {self.dimension} (expected {expected})"
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    def surface_l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coefficients**2)))

    def degrees(self) -> np.ndarray:
        return degree_of_index(self.dimension, self.degree)


def _require_compatible(t1: SphereTrace, t2: SphereTrace) -> None:
    if (
        t1.dimension != t2.dimension
        or t1.degree != t2.degree
        or not math.isclose(t1.radius, t2.radius, rel_tol=1e-14)
    ):
        raise TraceError(
            "trace metadata mismatch: "
            f"(N={t1.dimension}, L={t1.degree}, r={t1.radius}) vs "
            f"(N={t2.dimension}, L={t2.degree}, r={t2.radius})"
        )


def _check_rule(rule: QuadratureRule, radius: float, degree: int) -> None:
    if rule.angular_order < degree + 1:
        raise TraceError(
            f"angular order {rule.angular_order} insufficient for degree "
            f"{degree}: need angular_order >= L + 1 for exact products"
        )
    r = node_radii(rule.nodes)
    if not np.allclose(r, radius, rtol=1e-12):
        raise TraceError("quadrature rule does not live on the requested sphere")


def _finish(radius, dimension, degree, coeffs, strict):
    ell = degree_of_index(dimension, degree)
    total = float(np.sum(coeffs**2))
    tail = float(np.sum(coeffs[ell > degree // 2] ** 2))
    frac = tail / total if total > 0.0 else 0.0
    if strict and frac > 1e-10:
        raise BandLimitError(
            f"energy fraction {frac:.3e} beyond degree {degree // 2} exceeds 1e-10; "
            "increase the trace band limit"
        )
    return SphereTrace(radius, dimension, degree, coeffs, tail_fraction=frac)


def analyze(
    f: ScalarField,
    radius: float,
    degree: int,
    rule: QuadratureRule,
    strict: bool = False,
) -> SphereTrace:
    """Expand ``f`` restricted to the sphere of ``radius`` in the surface
    basis up to ``degree``, by quadrature of the projection integrals."""
    _check_rule(rule, radius, degree)
    basis = basis_matrix(rule.dimension, degree, radius, rule.nodes)
    vals = np.asarray(f.value(rule.nodes), dtype=float) * rule.weights
    coeffs = np.array([math.fsum(row * vals) for row in basis])
    return _finish(radius, rule.dimension, degree, coeffs, strict)


def normal_trace(
    y: VectorField,
    radius: float,
    degree: int,
    rule: QuadratureRule,
    strict: bool = False,
) -> SphereTrace:
    """Expand the outward normal component x/|x| . y on the sphere."""
    _check_rule(rule, radius, degree)
    pts = rule.nodes
    vals = np.asarray(y.value(pts), dtype=float)
    normal = pts / node_radii(pts)[:, None]
    scal = np.sum(vals * normal, axis=1) * rule.weights
    basis = basis_matrix(rule.dimension, degree, radius, pts)
    coeffs = np.array([math.fsum(row * scal) for row in basis])
    return _finish(radius, rule.dimension, degree, coeffs, strict)


def reconstruct(t: SphereTrace) -> ScalarField:
    """Band-limited function whose expansion is ``t`` (values only)."""

    def value(pts):
        basis = basis_matrix(t.dimension, t.degree, t.radius, pts)
        return t.coefficients @ basis

    return ScalarField(value=value, gradient=None, label="trace-reconstruction")


def sobolev_multipliers(t: SphereTrace, exponent: float) -> np.ndarray:
    ell = t.degrees().astype(float)
    base = 1.0 + ell * (ell + t.dimension - 2) / t.radius**2
    return base**exponent


def sobolev_norm(t: SphereTrace, exponent: float) -> float:
    """Spectral H^{+1/2} / H^{-1/2} norm (exponent +0.5 or -0.5)."""
    if exponent not in (0.5, -0.5):
        raise ValueError("exponent must be +0.5 or -0.5")
    mult = sobolev_multipliers(t, exponent)
    return float(np.sqrt(np.sum(mult * t.coefficients**2)))


def difference(t1: SphereTrace, t2: SphereTrace) -> SphereTrace:
    """Coefficient-wise t1 - t2."""
    _require_compatible(t1, t2)
    return SphereTrace(
        t1.radius, t1.dimension, t1.degree, t1.coefficients - t2.coefficients
    )


def jump(t_interior: SphereTrace, t_exterior: SphereTrace) -> SphereTrace:
    """Normal-trace jump across an interface, exterior minus interior."""
    return difference(t_exterior, t_interior)


def duality_pairing(t1: SphereTrace, t2: SphereTrace) -> float:
    _require_compatible(t1, t2)
    return float(np.sum(t1.coefficients * t2.coefficients))
