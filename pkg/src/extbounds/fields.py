"""Analytic scalar/vector fields, the diffusion coefficient, and the
weighted norms used by the error bounds.

Fields carry their derivative closures (gradient for scalars, divergence
for vectors) analytically; nothing in the bound evaluation differentiates
numerically, since the guaranteed character of the bounds would otherwise
be polluted by differencing error.  Finite differences appear only in the
test-time validation helpers at the bottom of this module.

Two radial weights coexist and are never interchanged silently:
``rho = (1 + r^2)^{1/2}`` in the norms (``weighted_norm``), and the plain
radius r (with a logarithm in 2D) in the inequality machinery
(``log_weighted_norm``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import QuadratureRule, exact_dot, node_radii


class CompositionError(TypeError):
    """A field combination needs a derivative closure that is missing."""


def _combine_maybe(fa, fb, op):
    if fa is None or fb is None:
        return None
    return lambda pts: op(fa(pts), fb(pts))


@dataclass(frozen=True)
class ScalarField:
    """Scalar field with vectorized ``value`` (M,N)->(M,) and optional
    analytic ``gradient`` (M,N)->(M,N)."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(
            value=lambda pts: self.value(pts) + other.value(pts),
            gradient=_combine_maybe(self.gradient, other.gradient, np.add),
            label=f"({self.label}+{other.label})",
        )

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(
            value=lambda pts: self.value(pts) - other.value(pts),
            gradient=_combine_maybe(self.gradient, other.gradient, np.subtract),
            label=f"({self.label}-{other.label})",
        )

    def __rmul__(self, c: float) -> "ScalarField":
        c = float(c)
        grad = self.gradient
        return ScalarField(
            value=lambda pts: c * self.value(pts),
            gradient=None if grad is None else (lambda pts: c * grad(pts)),
            label=f"{c}*{self.label}",
        )


@dataclass(frozen=True)
class VectorField:
    """Vector field with vectorized ``value`` (M,N)->(M,N) and optional
    analytic ``divergence`` (M,N)->(M,)."""

    value: Callable[[np.ndarray], np.ndarray]
    divergence: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(
            value=lambda pts: self.value(pts) + other.value(pts),
            divergence=_combine_maybe(self.divergence, other.divergence, np.add),
            label=f"({self.label}+{other.label})",
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(
            value=lambda pts: self.value(pts) - other.value(pts),
            divergence=_combine_maybe(self.divergence, other.divergence, np.subtract),
            label=f"({self.label}-{other.label})",
        )

    def __rmul__(self, c: float) -> "VectorField":
        c = float(c)
        div = self.divergence
        return VectorField(
            value=lambda pts: c * self.value(pts),
            divergence=None if div is None else (lambda pts: c * div(pts)),
            label=f"{c}*{self.label}",
        )


@dataclass(frozen=True)
class Coefficient:
    """Symmetric matrix coefficient with two-sided ellipticity bounds
    ``0 < c_A <= c_A_plus``.

    ``isotropic`` is set when the matrix is a constant multiple of the
    identity; it lets extension energies be evaluated exactly instead of
    through the upper bound ``c_A_plus``.
    """

    matrix: Callable[[np.ndarray], np.ndarray]  # (M,N)->(M,N,N)
    c_A: float
    c_A_plus: float
    label: str = ""
    isotropic: float | None = None

    def __post_init__(self):
        if not 0.0 < self.c_A <= self.c_A_plus:
            raise ValueError(
                f"ellipticity bounds must satisfy 0 < c_A <= c_A_plus, got "
                f"{self.c_A}, {self.c_A_plus}"
            )

    @staticmethod
    def constant(mat: np.ndarray, label: str = "") -> "Coefficient":
        mat = np.asarray(mat, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("constant coefficient must be a square matrix")
        if not np.allclose(mat, mat.T, atol=1e-14):
            raise ValueError("coefficient matrix must be symmetric")
        eigs = np.linalg.eigvalsh(mat)
        iso = float(mat[0, 0]) if np.allclose(mat, mat[0, 0] * np.eye(len(mat))) else None
        mat.flags.writeable = False
        return Coefficient(
            matrix=lambda pts: np.broadcast_to(mat, (len(pts), *mat.shape)),
            c_A=float(eigs[0]),
            c_A_plus=float(eigs[-1]),
            label=label or "const",
            isotropic=iso,
        )

    @staticmethod
    def identity(dimension: int) -> "Coefficient":
        return Coefficient.constant(np.eye(dimension), label="identity")


def gradient_field(v: ScalarField) -> VectorField:
    """The gradient of ``v`` as a vector field (no divergence closure)."""
    if v.gradient is None:
        raise CompositionError(f"field {v.label!r} has no gradient closure")
    return VectorField(value=v.gradient, divergence=None, label=f"grad({v.label})")


def flux_of(A: Coefficient, v: ScalarField) -> VectorField:
    """A * grad v.  Carries no divergence closure (that would need second
    derivatives of v); use it where only values are integrated."""
    if v.gradient is None:
        raise CompositionError(f"field {v.label!r} has no gradient closure")
    grad = v.gradient
    return VectorField(
        value=lambda pts: np.einsum("mij,mj->mi", A.matrix(pts), grad(pts)),
        divergence=None,
        label=f"A*grad({v.label})",
    )


def flux_gap(y: VectorField, A: Coefficient, v: ScalarField) -> VectorField:
    """y - A * grad v, the flux mismatch entering every upper bound."""
    return y - flux_of(A, v)


def residual_field(f: ScalarField, y: VectorField) -> ScalarField:
    """f + div y, the equilibrium residual. Requires the divergence closure."""
    if y.divergence is None:
        raise CompositionError(f"vector field {y.label!r} has no divergence closure")
    div = y.divergence
    return ScalarField(
        value=lambda pts: f.value(pts) + div(pts),
        gradient=None,
        label=f"({f.label}+div {y.label})",
    )


def zero_scalar(label: str = "0") -> ScalarField:
    return ScalarField(
        value=lambda pts: np.zeros(len(pts)),
        gradient=lambda pts: np.zeros_like(np.atleast_2d(pts), dtype=float),
        label=label,
    )


def _squared_magnitude(f: ScalarField | VectorField, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(f.value(pts), dtype=float)
    if vals.ndim == 1:
        return vals**2
    return np.sum(vals**2, axis=1)


def weighted_norm(f: ScalarField | VectorField, s: float, rule: QuadratureRule) -> float:
    """(integral of rho^{2s} |f|^2)^{1/2} with rho = (1 + r^2)^{1/2}."""
    pts = rule.nodes
    rho2 = 1.0 + np.sum(pts**2, axis=1)
    vals = _squared_magnitude(f, pts) * rho2**s
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise QuadratureErrorAt(bad, pts[bad], f.label, f"rho^{2 * s}")
    return math.sqrt(max(exact_dot(vals, rule.weights), 0.0))


def log_weighted_norm(
    f: ScalarField | VectorField, mode: str, rule: QuadratureRule
) -> float:
    """2D logarithmic weights: ``times_rlnr`` gives ||r ln r * f||,
    ``over_rlnr`` gives ||f / (r ln r)||.  The rule must live in
    dimension 2 with all nodes at radius > 1."""
    if rule.dimension != 2:
        raise ValueError("log-weighted norms are defined for dimension 2 only")
    r = node_radii(rule.nodes)
    if np.min(r) <= 1.0:
        raise ValueError("log weight needs all quadrature nodes at radius > 1")
    w = r * np.log(r)
    if mode == "times_rlnr":
        w2 = w**2
    elif mode == "over_rlnr":
        w2 = w**-2
    else:
        raise ValueError(f"unknown log weight mode {mode!r}")
    vals = _squared_magnitude(f, rule.nodes) * w2
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise QuadratureErrorAt(bad, rule.nodes[bad], f.label, mode)
    return math.sqrt(max(exact_dot(vals, rule.weights), 0.0))


def energy_norm(
    A: Coefficient, q: VectorField, mode: str, rule: QuadratureRule
) -> float:
    """||q||_A = (int A q . q)^{1/2} or its dual ||q||_{A^{-1}}.

    The inverse is applied by a direct batched solve of the N x N system
    at every node, never by forming an explicit inverse."""
    pts = rule.nodes
    vals = np.asarray(q.value(pts), dtype=float)
    mats = np.asarray(A.matrix(pts), dtype=float)
    if mode == "A":
        prod = np.einsum("mij,mj->mi", mats, vals)
    elif mode == "A_inverse":
        try:
            prod = np.linalg.solve(mats, vals[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "coefficient matrix singular at a quadrature node "
                "(ellipticity bound violated)"
            ) from exc
    else:
        raise ValueError(f"unknown energy norm mode {mode!r}")
    dens = np.sum(prod * vals, axis=1)
    if not np.all(np.isfinite(dens)):
        bad = int(np.flatnonzero(~np.isfinite(dens))[0])
        raise QuadratureErrorAt(bad, pts[bad], q.label, f"energy:{mode}")
    return math.sqrt(max(exact_dot(dens, rule.weights), 0.0))


class QuadratureErrorAt(ArithmeticError):
    def __init__(self, index, point, label, weight):
        super().__init__(
            f"non-finite integrand for field {label!r} (weight {weight}) "
            f"at node {index}: x={point!r}"
        )
        self.index = index
        self.point = point


# ---------------------------------------------------------------------------
# closure builders for the analytic fields used throughout


def radial_scalar(p, dp, label: str) -> ScalarField:
    """Scalar field p(r) with gradient dp(r) x/r."""

    def value(pts):
        return p(node_radii(pts))

    def gradient(pts):
        pts = np.atleast_2d(pts)
        r = node_radii(pts)
        return (dp(r) / r)[:, None] * pts

    return ScalarField(value=value, gradient=gradient, label=label)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _smoothstep_deriv(t: np.ndarray) -> np.ndarray:
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, -30.0 * t**2 * (1.0 - t) ** 2, 0.0)


def ramp_profile(r_one: float, r_zero: float):
    """C^2 radial ramp: 1 for r <= r_one, 0 for r >= r_zero.
    Returns (p, dp) closures."""
    width = r_zero - r_one

    def p(r):
        return _smoothstep((np.asarray(r, dtype=float) - r_one) / width)

    def dp(r):
        return _smoothstep_deriv((np.asarray(r, dtype=float) - r_one) / width) / width

    return p, dp


def mollifier_profile(center: float, width: float):
    """C-infinity profile exp(-1/(1-t^2)), t = (s - center)/width.
    Returns (p, dp) closures vanishing identically for |t| >= 1."""

    def p(s):
        t = (np.asarray(s, dtype=float) - center) / width
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0 - 1e-14
        ti = t[inside]
        out[inside] = np.exp(-1.0 / (1.0 - ti**2))
        return out

    def dp(s):
        t = (np.asarray(s, dtype=float) - center) / width
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0 - 1e-14
        ti = t[inside]
        out[inside] = (
            np.exp(-1.0 / (1.0 - ti**2)) * (-2.0 * ti / (1.0 - ti**2) ** 2) / width
        )
        return out

    return p, dp


def ball_bump(center: np.ndarray, radius: float, amplitude: float = 1.0) -> ScalarField:
    """Compactly supported C-infinity bump on the ball |x - center| < radius."""
    center = np.asarray(center, dtype=float)

    def value(pts):
        d = np.atleast_2d(pts) - center
        t2 = np.sum(d**2, axis=1) / radius**2
        out = np.zeros(len(d))
        inside = t2 < 1.0 - 1e-14
        out[inside] = amplitude * np.exp(-1.0 / (1.0 - t2[inside]))
        return out

    def gradient(pts):
        d = np.atleast_2d(pts) - center
        t2 = np.sum(d**2, axis=1) / radius**2
        out = np.zeros_like(d)
        inside = t2 < 1.0 - 1e-14
        fac = (
            amplitude
            * np.exp(-1.0 / (1.0 - t2[inside]))
            * (-2.0 / (1.0 - t2[inside]) ** 2)
            / radius**2
        )
        out[inside] = fac[:, None] * d[inside]
        return out

    return ScalarField(value=value, gradient=gradient, label="bump")


def angular_monomial(dimension: int, index: int):
    """Degree <= 1 angular factors with analytic gradients: index 0 is the
    constant 1, index i >= 1 is x_i / r.  Returns (value, gradient)."""
    if index == 0:
        return (
            lambda pts: np.ones(len(np.atleast_2d(pts))),
            lambda pts: np.zeros_like(np.atleast_2d(pts), dtype=float),
        )
    i = index - 1
    if i >= dimension:
        raise ValueError(f"angular index {index} out of range for dimension {dimension}")

    def value(pts):
        pts = np.atleast_2d(pts)
        return pts[:, i] / node_radii(pts)

    def gradient(pts):
        pts = np.atleast_2d(pts)
        r = node_radii(pts)
        out = -pts * (pts[:, i] / r**3)[:, None]
        out[:, i] += 1.0 / r
        return out

    return value, gradient


def separable_field(p, dp, ang_value, ang_gradient, label: str = "separable") -> ScalarField:
    """p(r) * q(x) with q homogeneous of degree zero (so x . grad q = 0)."""

    def value(pts):
        return p(node_radii(pts)) * ang_value(pts)

    def gradient(pts):
        pts = np.atleast_2d(pts)
        r = node_radii(pts)
        radial_part = (dp(r) * ang_value(pts) / r)[:, None] * pts
        return radial_part + p(r)[:, None] * ang_gradient(pts)

    return ScalarField(value=value, gradient=gradient, label=label)


def radial_vector_with_angle(p, dp, ang_value, dimension: int, label: str) -> VectorField:
    """q(x) p(r) x/r with q homogeneous of degree zero; its divergence is
    q (p' + (N-1) p / r) because x . grad q = 0."""

    def value(pts):
        pts = np.atleast_2d(pts)
        r = node_radii(pts)
        return (ang_value(pts) * p(r) / r)[:, None] * pts

    def divergence(pts):
        pts = np.atleast_2d(pts)
        r = node_radii(pts)
        return ang_value(pts) * (dp(r) + (dimension - 1) * p(r) / r)

    return VectorField(value=value, divergence=divergence, label=label)


# ---------------------------------------------------------------------------
# test-time validation helpers (finite differences are a cross-check only)


def check_gradient(
    f: ScalarField, points: np.ndarray, step: float = 1e-5, rtol: float = 1e-6
) -> float:
    """Max deviation between the gradient closure and central differences
    of the value closure, relative to the gradient magnitude over the
    sample; raises if above ``rtol``."""
    points = np.atleast_2d(points)
    grad = np.asarray(f.gradient(points), dtype=float)
    num = np.empty_like(grad)
    for j in range(points.shape[1]):
        hp = points.copy()
        hm = points.copy()
        hp[:, j] += step
        hm[:, j] -= step
        num[:, j] = (np.asarray(f.value(hp)) - np.asarray(f.value(hm))) / (2 * step)
    scale = max(float(np.max(np.abs(grad))), float(np.max(np.abs(num))), 1e-30)
    dev = float(np.max(np.abs(grad - num))) / scale
    if dev > rtol:
        raise AssertionError(
            f"gradient closure of {f.label!r} deviates from finite differences "
            f"by {dev:.3e} (tolerance {rtol:.1e})"
        )
    return dev


def check_divergence(
    y: VectorField, points: np.ndarray, step: float = 1e-5, rtol: float = 1e-6
) -> float:
    """Same cross-check for the divergence closure.  The deviation is
    normalized by the magnitude of the individual directional-derivative
    terms, because the divergence itself may cancel to zero exactly
    (solenoidal fields)."""
    points = np.atleast_2d(points)
    div = np.asarray(y.divergence(points), dtype=float)
    num = np.zeros(len(points))
    term_scale = np.zeros(len(points))
    for j in range(points.shape[1]):
        hp = points.copy()
        hm = points.copy()
        hp[:, j] += step
        hm[:, j] -= step
        term = (
            np.asarray(y.value(hp))[:, j] - np.asarray(y.value(hm))[:, j]
        ) / (2 * step)
        num += term
        term_scale += np.abs(term)
    scale = max(float(np.max(term_scale)), float(np.max(np.abs(div))), 1e-30)
    dev = float(np.max(np.abs(div - num))) / scale
    if dev > rtol:
        raise AssertionError(
            f"divergence closure of {y.label!r} deviates from finite differences "
            f"by {dev:.3e} (tolerance {rtol:.1e})"
        )
    return dev


def check_coefficient(A: Coefficient, points: np.ndarray) -> None:
    """Sampled symmetry and eigenvalue-range check for a coefficient."""
    mats = np.asarray(A.matrix(np.atleast_2d(points)), dtype=float)
    if not np.allclose(mats, np.swapaxes(mats, 1, 2), atol=1e-14):
        raise AssertionError(f"coefficient {A.label!r} not symmetric at samples")
    eigs = np.linalg.eigvalsh(mats)
    if np.min(eigs) < A.c_A - 1e-12 or np.max(eigs) > A.c_A_plus + 1e-12:
        raise AssertionError(
            f"coefficient {A.label!r} eigenvalues [{np.min(eigs)}, {np.max(eigs)}] "
            f"leave the declared range [{A.c_A}, {A.c_A_plus}]"
        )
