"""Guaranteed lower bounds for the squared energy-norm error.

The bound maximizes the quadratic functional

    M(w) = 2 (f, w) - (A grad(2v + w), grad w)

over a finite-dimensional space of test functions with zero trace on the
inner boundary.  M never exceeds the squared error, and it attains it
when u - v lies in the span, so enlarging the basis can only help.  When
the approximation violates the Dirichlet data the bound still holds for
the interior part of the error; the report flags that caveat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import traces
from .fields import ScalarField, VectorField, angular_monomial, separable_field
from .geometry import exact_dot
from .problems import Problem
from .majorant import MajorantReport, estimate_I

ZERO_TRACE_TOL = 1e-13
GRAM_EIG_RTOL = 1e-12


class SingularGramError(np.linalg.LinAlgError):
    """The test functions are (numerically) linearly dependent."""


@dataclass(frozen=True)
class TestBasis:
    """Test functions with zero trace on the inner boundary."""

    __test__ = False  # not a pytest collection target

    fields: tuple[ScalarField, ...]

    def __len__(self) -> int:
        return len(self.fields)

    def extended(self, extra: ScalarField) -> "TestBasis":
        return TestBasis(fields=self.fields + (extra,))


def validate_zero_traces(p: Problem, basis: TestBasis) -> None:
    """Check every basis function has vanishing trace on the inner sphere."""
    for k, w in enumerate(basis.fields):
        t = traces.analyze(w, p.domain.a, p.trace_degree, p.quads.gamma)
        norm = traces.sobolev_norm(t, +0.5)
        if norm >= ZERO_TRACE_TOL:
            raise ValueError(
                f"basis function {k} ({w.label!r}) has trace norm {norm:.3e} "
                f"on the inner boundary (must be < {ZERO_TRACE_TOL})"
            )


def default_basis(domain, n_radial: int = 4, degree: int = 1) -> TestBasis:
    """Radial C^2 bump profiles on sub-annuli of (a, R), tensored with
    angular factors of degree <= ``degree``."""
    if n_radial < 1:
        raise ValueError("n_radial must be >= 1")
    edges = np.linspace(domain.a, domain.R, n_radial + 1)
    fields = []
    n_ang = 1 + (domain.dimension if degree >= 1 else 0)
    for k in range(n_radial):
        center = 0.5 * (edges[k] + edges[k + 1])
        half = 0.5 * (edges[k + 1] - edges[k])

        def p(r, c=center, h=half):
            t = (np.asarray(r, dtype=float) - c) / h
            t2 = np.clip(t**2, None, 1.0)
            return (1.0 - t2) ** 3

        def dp(r, c=center, h=half):
            t = (np.asarray(r, dtype=float) - c) / h
            inside = np.abs(t) < 1.0
            return np.where(inside, -6.0 * t * (1.0 - t**2) ** 2 / h, 0.0)

        for j in range(n_ang):
            ang_v, ang_g = angular_monomial(domain.dimension, j)
            fields.append(
                separable_field(p, dp, ang_v, ang_g, label=f"basis[r{k},a{j}]")
            )
    return TestBasis(fields=tuple(fields))


@dataclass(frozen=True)
class MinorantReport:
    value: float  # lower bound for the squared error, clamped at 0
    coefficients: np.ndarray
    direct_value: float  # M(w*) evaluated by quadrature at the maximizer
    gram_min_eig: float
    basis_size: int
    boundary_caveat: bool  # true when the approximation misses the data

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "direct_value": self.direct_value,
            "gram_min_eig": self.gram_min_eig,
            "basis_size": self.basis_size,
            "boundary_caveat": self.boundary_caveat,
            "coefficients": [float(c) for c in self.coefficients],
        }


def minorant_report(p: Problem, v: ScalarField, basis: TestBasis) -> MinorantReport:
    """Maximize M over the span of the basis and report the details."""
    if len(basis) == 0:
        raise ValueError("basis must be nonempty")
    rule = p.quads.whole
    pts = rule.nodes
    wts = rule.weights
    mats = np.asarray(p.A.matrix(pts), dtype=float)
    fvals = np.asarray(p.f.value(pts), dtype=float)
    gv = np.asarray(v.gradient(pts), dtype=float)
    a_gv = np.einsum("mij,mj->mi", mats, gv)

    n = len(basis)
    vals = [np.asarray(w.value(pts), dtype=float) for w in basis.fields]
    grads = [np.asarray(w.gradient(pts), dtype=float) for w in basis.fields]
    a_grads = [np.einsum("mij,mj->mi", mats, g) for g in grads]

    gram = np.empty((n, n))
    rhs = np.empty(n)
    for j in range(n):
        for k in range(j, n):
            gram[j, k] = gram[k, j] = exact_dot(
                np.sum(a_grads[j] * grads[k], axis=1), wts
            )
        rhs[j] = exact_dot(fvals * vals[j], wts) - exact_dot(
            np.sum(a_gv * grads[j], axis=1), wts
        )

    eigs = scipy.linalg.eigvalsh(gram)
    if eigs[0] <= GRAM_EIG_RTOL * max(eigs[-1], 1.0):
        raise SingularGramError(
            f"Gram matrix of the basis energies is numerically singular "
            f"(eigenvalues in [{eigs[0]:.3e}, {eigs[-1]:.3e}])"
        )
    coeff = scipy.linalg.solve(gram, rhs, assume_a="pos")
    value = float(rhs @ coeff)

    # evaluate M(w*) directly by quadrature as a consistency cross-check
    w_vals = np.zeros(len(pts))
    w_grads = np.zeros_like(gv)
    for c, val, grad in zip(coeff, vals, grads):
        w_vals += c * val
        w_grads += c * grad
    a_mixed = np.einsum("mij,mj->mi", mats, 2.0 * gv + w_grads)
    direct = 2.0 * exact_dot(fvals * w_vals, wts) - exact_dot(
        np.sum(a_mixed * w_grads, axis=1), wts
    )

    tv = traces.analyze(v, p.domain.a, p.trace_degree, p.quads.gamma)
    mismatch = traces.sobolev_norm(traces.difference(p.g, tv), +0.5)

    return MinorantReport(
        value=max(value, 0.0),
        coefficients=coeff,
        direct_value=float(direct),
        gram_min_eig=float(eigs[0]),
        basis_size=n,
        boundary_caveat=bool(mismatch >= ZERO_TRACE_TOL),
    )


def minorant(p: Problem, v: ScalarField, basis: TestBasis) -> float:
    """Lower bound for the squared energy error (0 is always admissible)."""
    return minorant_report(p, v, basis).value


def sandwich(
    p: Problem,
    v: ScalarField,
    y: VectorField,
    basis: TestBasis,
    **estimate_kwargs,
) -> tuple[float, float]:
    """(sqrt of the lower bound, upper bound): the true energy error lies
    between the two."""
    lower = math.sqrt(minorant(p, v, basis))
    upper: MajorantReport = estimate_I(p, v, y, **estimate_kwargs)
    return lower, upper.total
