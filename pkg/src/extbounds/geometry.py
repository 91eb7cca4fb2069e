"""Spherical exterior domains and deterministic quadrature over them.

The domain is the exterior of a ball of radius ``a`` in R^N (or the half
line ``(a, inf)`` for N = 1), split by an artificial spherical interface
of radius ``R`` into a bounded annulus ``omega_i`` and an unbounded tail
``omega_e``.  Quadrature rules are plain node/weight lists, so consumers
never depend on how a rule was built; the tail is mapped to a finite
interval with the substitution r = R/t, which integrates finite Laurent
series in 1/r exactly.

All reductions use exact (error-free-transform) summation via
``math.fsum``, so integrals are bit-reproducible and independent of node
ordering or any parallel evaluation strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

REGIONS = ("omega_i", "omega_e", "whole", "sphere_gamma", "sphere_Gamma")


class QuadratureError(ValueError):
    """Raised for invalid rule parameters or non-finite integrand values."""


@dataclass(frozen=True)
class ExteriorDomain:
    """Exterior of the ball of radius ``inner_radius`` with interface at
    ``interface_radius``.  For dimension 1 the domain is the half line
    ``(inner_radius, inf)``."""

    dimension: int
    inner_radius: float
    interface_radius: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if not 0.0 < self.inner_radius < self.interface_radius:
            raise ValueError(
                "radii must satisfy 0 < inner_radius < interface_radius, got "
                f"a={self.inner_radius}, R={self.interface_radius}"
            )
        if self.dimension == 2 and self.inner_radius < 1.0:
            # The two-dimensional bounds need the complement of the domain
            # to contain the unit ball (the log weight requires ln r > 0).
            raise ValueError("dimension 2 requires inner_radius >= 1")

    @property
    def a(self) -> float:
        return self.inner_radius

    @property
    def R(self) -> float:
        return self.interface_radius

    def shell_volume(self) -> float:
        """Volume (length for N = 1) of the annulus omega_i."""
        n = self.dimension
        return _unit_sphere_area(n) * (self.R**n - self.a**n) / n

    def sphere_area(self, radius: float) -> float:
        return _unit_sphere_area(self.dimension) * radius ** (self.dimension - 1)


def _unit_sphere_area(n: int) -> float:
    # surface measure of S^{n-1}; the N = 1 "sphere" is a single point
    return {1: 1.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[n]


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _composite_interval(lo: float, hi: float, order: int, panels: int,
                        edges: np.ndarray | None = None):
    """Composite Gauss-Legendre nodes/weights on [lo, hi], fixed ordering."""
    x, w = _gauss_legendre(order)
    if edges is None:
        edges = np.linspace(lo, hi, panels + 1)
    nodes = []
    weights = []
    for k in range(len(edges) - 1):
        mid = 0.5 * (edges[k] + edges[k + 1])
        half = 0.5 * (edges[k + 1] - edges[k])
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _tail_edges(panels: int) -> np.ndarray:
    # geometric grading toward t = 0: the mapped tail integrand may carry
    # ln(1/t) factors (2D log weights), which uniform panels resolve only
    # algebraically while a graded mesh resolves them geometrically
    return np.concatenate([[0.0], 0.5 ** np.arange(panels - 1, -1.0, -1.0)])


def _unit_sphere_rule(dimension: int, angular_order: int):
    """Directions and weights integrating over the unit sphere S^{N-1}.

    N = 3: Gauss-Legendre in the polar cosine tensored with an offset
    uniform (trapezoid) rule in azimuth; exact for spherical polynomials
    of degree <= 2*angular_order - 1.  N = 2: offset uniform rule on the
    circle with 2*angular_order points; exact for trigonometric degree
    <= 2*angular_order - 1.
    """
    if dimension == 3:
        mu, wmu = _gauss_legendre(angular_order)
        nphi = 2 * angular_order
        phi = 2.0 * math.pi * (np.arange(nphi) + 0.5) / nphi
        wphi = 2.0 * math.pi / nphi
        smu = np.sqrt(1.0 - mu**2)
        dirs = np.empty((angular_order * nphi, 3))
        wts = np.empty(angular_order * nphi)
        k = 0
        for i in range(angular_order):
            dirs[k : k + nphi, 0] = smu[i] * np.cos(phi)
            dirs[k : k + nphi, 1] = smu[i] * np.sin(phi)
            dirs[k : k + nphi, 2] = mu[i]
            wts[k : k + nphi] = wmu[i] * wphi
            k += nphi
        return dirs, wts
    if dimension == 2:
        n = 2 * angular_order
        theta = 2.0 * math.pi * (np.arange(n) + 0.5) / n
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        wts = np.full(n, 2.0 * math.pi / n)
        return dirs, wts
    raise QuadratureError(f"no angular rule for dimension {dimension}")


@dataclass(frozen=True)
class QuadratureRule:
    """Immutable node/weight list over one region of an exterior domain."""

    region: str
    nodes: np.ndarray  # (M, N)
    weights: np.ndarray  # (M,)
    radial_order: int
    angular_order: int
    shell_count: int
    tail_map: str  # "r=R/t" for mapped tails, "none" otherwise

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.atleast_2d(self.nodes), dtype=float)
        weights = np.ascontiguousarray(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0]:
            raise QuadratureError("node and weight counts differ")
        if np.any(weights <= 0.0):
            raise QuadratureError("all quadrature weights must be positive")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return self.nodes.shape[0]


def node_radii(points: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.atleast_2d(points) ** 2, axis=1))


def build_quadrature(
    domain: ExteriorDomain,
    radial_order: int,
    angular_order: int,
    shells: int,
    region: str,
) -> QuadratureRule:
    """Build a rule over one region of the domain.

    omega_i splits [a, R] into ``shells`` radial panels, each carrying a
    Gauss-Legendre rule of ``radial_order`` points, tensored with the
    angular rule.  omega_e applies the same construction in the mapped
    variable t = R/r on (0, 1], with the Jacobian folded into the
    weights.  Sphere regions carry the pure angular rule scaled by the
    surface measure.
    """
    if region not in REGIONS:
        raise QuadratureError(f"unknown region {region!r}; expected one of {REGIONS}")
    if radial_order < 1 or angular_order < 1 or shells < 1:
        raise QuadratureError("radial_order, angular_order and shells must be >= 1")

    n = domain.dimension
    if region == "whole":
        inner = build_quadrature(domain, radial_order, angular_order, shells, "omega_i")
        outer = build_quadrature(domain, radial_order, angular_order, shells, "omega_e")
        return QuadratureRule(
            region="whole",
            nodes=np.vstack([inner.nodes, outer.nodes]),
            weights=np.concatenate([inner.weights, outer.weights]),
            radial_order=radial_order,
            angular_order=angular_order,
            shell_count=shells,
            tail_map=outer.tail_map,
        )

    if region in ("sphere_gamma", "sphere_Gamma"):
        if n == 1:
            raise QuadratureError("sphere rules are not defined for dimension 1")
        radius = domain.a if region == "sphere_gamma" else domain.R
        dirs, wts = _unit_sphere_rule(n, angular_order)
        return QuadratureRule(
            region=region,
            nodes=radius * dirs,
            weights=radius ** (n - 1) * wts,
            radial_order=radial_order,
            angular_order=angular_order,
            shell_count=shells,
            tail_map="none",
        )

    if region == "omega_i":
        r, wr = _composite_interval(domain.a, domain.R, radial_order, shells)
        tail = "none"
    else:  # omega_e via r = R/t, dr = -R/t^2 dt, t in (0, 1]
        t, wt = _composite_interval(
            0.0, 1.0, radial_order, shells, edges=_tail_edges(shells)
        )
        r = domain.R / t
        wr = wt * domain.R / t**2
        tail = "r=R/t,geometric"

    if n == 1:
        nodes = r[:, None]
        weights = wr.copy()
    else:
        dirs, wang = _unit_sphere_rule(n, angular_order)
        nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
        weights = (wr[:, None] * r[:, None] ** (n - 1) * wang[None, :]).reshape(-1)
    return QuadratureRule(
        region=region,
        nodes=nodes,
        weights=weights,
        radial_order=radial_order,
        angular_order=angular_order,
        shell_count=shells,
        tail_map=tail,
    )


def integrate(rule: QuadratureRule, integrand) -> float:
    """Weighted sum of ``integrand`` over the rule's nodes.

    ``integrand`` is vectorized: it maps an (M, N) array of points to
    an (M,) array of values.  The reduction is Shewchuk exact summation
    (``math.fsum``), so the result is the correctly rounded sum of the
    weighted values and does not depend on evaluation order.
    """
    values = np.asarray(integrand(rule.nodes), dtype=float)
    if values.shape != (len(rule),):
        raise QuadratureError(
            f"integrand returned shape {values.shape}, expected ({len(rule)},)"
        )
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise QuadratureError(
            f"integrand non-finite at node {bad}: x={rule.nodes[bad]!r}, "
            f"value={values[bad]!r}"
        )
    return math.fsum(values * rule.weights)


def exact_dot(values: np.ndarray, weights: np.ndarray) -> float:
    """Exactly rounded weighted sum for pre-evaluated values."""
    return math.fsum(np.asarray(values, dtype=float) * weights)
