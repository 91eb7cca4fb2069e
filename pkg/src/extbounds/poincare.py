"""Numerical verification of the weighted Poincare/Hardy inequalities the
error bounds rest on, over randomized compactly supported test functions.

Each inequality is checked by high-order quadrature of both sides on
smooth bumps.  The partial-integration identities behind the proofs are
checked directly as well (they are exact for the continuum integrals, so
any discrepancy beyond quadrature error flags a broken derivation).

One deliberate correction: the chain that connects the rho-weighted norm
to the (1+r)-weighted norm needs the factor sqrt(2), because
rho = (1+r^2)^{1/2} <= 1+r <= sqrt(2) rho with the right inequality sharp
at r = 1.  The unit-factor comparison fails for every nonzero function
(the weights are ordered the other way), so the chain link here carries
the provable sqrt(2).  All headline constants are unaffected: they flow
through the weight r, and rho >= r holds pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ExteriorDomain, _gauss_legendre

# sup (1+r)/sqrt(1+r^2) over r >= 0, attained at r = 1
WEIGHT_EQUIV = math.sqrt(2.0)
PASS_RTOL = 1e-10
IDENTITY_RTOL = 1e-9


class VerificationFailure(AssertionError):
    """An inequality that must hold was violated beyond tolerance."""


def sphere_surface_area(dimension: int) -> float:
    if dimension == 1:
        return 1.0  # half-line: no angular factor
    return 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)


# ---------------------------------------------------------------------------
# test functions


def _mollifier(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0 - 1e-14
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti**2))
    return out


def _mollifier_deriv(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0 - 1e-14
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti**2)) * (-2.0 * ti / (1.0 - ti**2) ** 2)
    return out


@dataclass(frozen=True)
class BumpFunction:
    """C-infinity bump supported on the ball |x - center| < radius."""

    center: tuple
    radius: float
    amplitude: float = 1.0

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def center_radius(self) -> float:
        return float(np.linalg.norm(self.center))

    def min_support_radius(self) -> float:
        return self.center_radius - self.radius

    def check_inside(self, domain: ExteriorDomain) -> None:
        if self.dimension != domain.dimension:
            raise ValueError("bump dimension does not match domain")
        if self.min_support_radius() <= domain.a:
            raise ValueError(
                f"bump support reaches inside radius {domain.a}: "
                f"|center| - radius = {self.min_support_radius():.4f}"
            )


@dataclass(frozen=True)
class RadialBump:
    """Radially symmetric shell bump prof((r - center_radius)/radius); works
    in any dimension because its integrals reduce to one dimension."""

    dimension: int
    center_radius: float
    radius: float
    amplitude: float = 1.0

    def min_support_radius(self) -> float:
        return self.center_radius - self.radius


@dataclass(frozen=True)
class HalfLineBump:
    """One-sided profile on [0, width) with a nonzero value at the origin;
    extended by zero to the rest of the line."""

    width: float
    amplitude: float = 1.0

    @property
    def dimension(self) -> int:
        return 1

    def value_at_zero(self) -> float:
        return self.amplitude * math.exp(-1.0)


def _panel_nodes(lo: float, hi: float, panels: int, order: int):
    x, w = _gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + halfs[:, None] * x[None, :]).ravel()
    weights = (halfs[:, None] * w[None, :]).ravel()
    return nodes, weights


def samples(
    u, panels: int = 48, order: int = 12, angular: int = 24
) -> dict:
    """Quadrature samples of (r, u, radial derivative, gradient magnitude,
    weight) over the support of a test function.

    Off-center ball bumps reduce to a 2D (distance, angle) integral by
    axial symmetry around the center direction; radial bumps and the
    one-dimensional cases reduce to 1D.
    """
    if isinstance(u, HalfLineBump):
        x, w = _panel_nodes(0.0, u.width, panels, order)
        t = x / u.width
        val = u.amplitude * _mollifier(t)
        der = u.amplitude * _mollifier_deriv(t) / u.width
        return {
            "r": x,
            "u": val,
            "du_r": der,
            "grad": np.abs(der),
            "w": w,
            "u0": u.value_at_zero(),
            "dimension": 1,
        }

    if isinstance(u, RadialBump):
        lo = u.center_radius - u.radius
        hi = u.center_radius + u.radius
        if lo <= 0.0:
            raise ValueError("radial bump support must stay at positive radius")
        r, wr = _panel_nodes(lo, hi, panels, order)
        t = (r - u.center_radius) / u.radius
        val = u.amplitude * _mollifier(t)
        der = u.amplitude * _mollifier_deriv(t) / u.radius
        w = sphere_surface_area(u.dimension) * r ** (u.dimension - 1) * wr
        return {
            "r": r,
            "u": val,
            "du_r": der,
            "grad": np.abs(der),
            "w": w,
            "u0": 0.0,
            "dimension": u.dimension,
        }

    if not isinstance(u, BumpFunction):
        raise TypeError(f"unsupported test function type {type(u).__name__}")

    n = u.dimension
    c = u.center_radius
    s, ws = _panel_nodes(0.0, u.radius, panels, order)
    t = s / u.radius
    val_s = u.amplitude * _mollifier(t)
    der_s = u.amplitude * _mollifier_deriv(t) / u.radius

    if n == 1:
        x, wx = _panel_nodes(u.center[0] - u.radius, u.center[0] + u.radius,
                             panels, order)
        if np.min(x) <= 0.0:
            raise ValueError("1D bump support must stay on the positive axis")
        t = (x - u.center[0]) / u.radius
        val = u.amplitude * _mollifier(t)
        der = u.amplitude * _mollifier_deriv(t) / u.radius
        return {
            "r": x,
            "u": val,
            "du_r": der,
            "grad": np.abs(der),
            "w": wx,
            "u0": 0.0,
            "dimension": 1,
        }

    if n == 3:
        mu, wmu = _gauss_legendre(angular)
        cos = mu
        wang = 2.0 * math.pi * wmu
        jac = s[:, None] ** 2
    elif n == 2:
        m = 2 * angular
        theta = 2.0 * math.pi * (np.arange(m) + 0.5) / m
        cos = np.cos(theta)
        wang = np.full(m, 2.0 * math.pi / m)
        jac = s[:, None]
    else:
        raise ValueError("off-center bumps support dimensions 1-3")

    r = np.sqrt(c**2 + s[:, None] ** 2 + 2.0 * c * s[:, None] * cos[None, :])
    # radial derivative of u at x = center + s*omega:
    #   (x/r) . grad u = u'(s) * (s + c cos) / r
    du_r = der_s[:, None] * (s[:, None] + c * cos[None, :]) / r
    weight = jac * ws[:, None] * wang[None, :]
    return {
        "r": r.ravel(),
        "u": np.broadcast_to(val_s[:, None], r.shape).ravel(),
        "du_r": du_r.ravel(),
        "grad": np.broadcast_to(np.abs(der_s)[:, None], r.shape).ravel(),
        "w": weight.ravel(),
        "u0": 0.0,
        "dimension": n,
    }


def _norm(sm: dict, density: np.ndarray) -> float:
    return math.sqrt(max(math.fsum(density * sm["w"]), 0.0))


def _gather(u_or_list, **kw):
    """Samples for a single test function or a disjoint sum of them."""
    if isinstance(u_or_list, (list, tuple)):
        parts = [samples(b, **kw) for b in u_or_list]
        dims = {p["dimension"] for p in parts}
        if len(dims) != 1:
            raise ValueError("summands live in different dimensions")
        _check_disjoint(u_or_list)
        return {
            "r": np.concatenate([p["r"] for p in parts]),
            "u": np.concatenate([p["u"] for p in parts]),
            "du_r": np.concatenate([p["du_r"] for p in parts]),
            "grad": np.concatenate([p["grad"] for p in parts]),
            "w": np.concatenate([p["w"] for p in parts]),
            "u0": math.fsum(p["u0"] for p in parts),
            "dimension": dims.pop(),
        }
    return samples(u_or_list, **kw)


def _check_disjoint(bumps) -> None:
    # sums are integrated support-by-support, which needs disjoint supports
    for i in range(len(bumps)):
        for j in range(i + 1, len(bumps)):
            bi, bj = bumps[i], bumps[j]
            if isinstance(bi, BumpFunction) and isinstance(bj, BumpFunction):
                dist = float(
                    np.linalg.norm(np.asarray(bi.center) - np.asarray(bj.center))
                )
                if dist <= bi.radius + bj.radius:
                    raise ValueError("summed bumps must have disjoint supports")


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class VerificationRecord:
    inequality_id: str
    dimension: int
    beta: float
    descriptor: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= -PASS_RTOL * self.rhs


def records_to_csv(records, path) -> None:
    lines = ["id,N,beta,lhs,rhs,margin,pass"]
    for r in records:
        lines.append(
            f"{r.inequality_id},{r.dimension},{r.beta:.17g},{r.lhs:.17g},"
            f"{r.rhs:.17g},{r.margin:.17g},{'true' if r.passed else 'false'}"
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# the inequalities


def radial_derivative(f):
    """Pointwise x/|x| . grad f as a scalar field (no gradient closure)."""
    from .fields import ScalarField
    from .geometry import node_radii

    if f.gradient is None:
        raise ValueError(f"field {f.label!r} has no gradient closure")
    grad = f.gradient

    def value(pts):
        pts = np.atleast_2d(pts)
        r = node_radii(pts)
        if np.any(r == 0.0):
            raise ZeroDivisionError("radial derivative undefined at the origin")
        return np.sum(pts * np.asarray(grad(pts)), axis=1) / r

    return ScalarField(value=value, gradient=None, label=f"radial_d({f.label})")


def verify_power_weight(domain: ExteriorDomain | None, u, beta: float,
                        **sample_kw) -> VerificationRecord:
    """(2b + N - 2) ||r^{b-1} u|| <= 2 ||r^b du/dr|| for b > 1 - N/2."""
    sm = _gather(u, **sample_kw)
    n = sm["dimension"]
    if beta <= 1.0 - n / 2.0:
        raise ValueError(f"beta must exceed 1 - N/2 = {1 - n / 2}, got {beta}")
    if domain is not None:
        _check_support(domain, u)
    const = 2.0 * beta + n - 2.0
    lhs = const * _norm(sm, sm["r"] ** (2 * beta - 2) * sm["u"] ** 2)
    rhs = 2.0 * _norm(sm, sm["r"] ** (2 * beta) * sm["du_r"] ** 2)
    return VerificationRecord("power_weight", n, beta, _describe(u), lhs, rhs)


def verify_log_weight(domain: ExteriorDomain | None, u, beta: float,
                      **sample_kw) -> VerificationRecord:
    """|2b + N - 3| ||r^{b-1} u / ln r|| <= 2 ||r^b du/dr|| for supports at
    radius > 1 and b outside the band (1 - N/2, (3 - N)/2)."""
    sm = _gather(u, **sample_kw)
    n = sm["dimension"]
    lo, hi = 1.0 - n / 2.0, (3.0 - n) / 2.0
    if lo < beta < hi:
        raise ValueError(
            f"beta = {beta} lies in the forbidden band ({lo}, {hi}) for N = {n}"
        )
    if domain is not None:
        if domain.a < 1.0:
            raise ValueError("log-weight inequality needs inner radius >= 1")
        _check_support(domain, u)
    if np.min(sm["r"]) <= 1.0:
        raise ValueError("log-weight inequality needs support at radius > 1")
    const = abs(2.0 * beta + n - 3.0)
    logs = np.log(sm["r"])
    lhs = const * _norm(sm, sm["r"] ** (2 * beta - 2) / logs**2 * sm["u"] ** 2)
    rhs = 2.0 * _norm(sm, sm["r"] ** (2 * beta) * sm["du_r"] ** 2)
    return VerificationRecord("log_weight", n, beta, _describe(u), lhs, rhs)


def verify_halfline(u, beta: float, **sample_kw) -> VerificationRecord:
    """|2b - 1| ||(1+r)^{b-1} u|| <= 2 ||(1+r)^b u'|| + |2 min(0, 2b-1)|^{1/2} |u(0)|
    on the half line, u extended by zero."""
    sm = _gather(u, **sample_kw)
    if sm["dimension"] != 1:
        raise ValueError("half-line inequality is one-dimensional")
    gamma_hat = 2.0 * beta - 1.0
    opr = 1.0 + sm["r"]
    lhs = abs(gamma_hat) * _norm(sm, opr ** (2 * beta - 2) * sm["u"] ** 2)
    rhs = 2.0 * _norm(sm, opr ** (2 * beta) * sm["du_r"] ** 2)
    rhs += math.sqrt(abs(2.0 * min(0.0, gamma_hat))) * abs(sm["u0"])
    return VerificationRecord("halfline", 1, beta, _describe(u), lhs, rhs)


def verify_corollary_chain(domain_or_dimension, u, case: str,
                           **sample_kw) -> list[VerificationRecord]:
    """Check every link of the norm chains implied by the inequalities at
    beta = 0, one record per link.

    case "i" (N >= 3): rho-weighted <= sqrt(2) (1+r)-weighted <= sqrt(2)
    r-weighted <= sqrt(2) c_N radial derivative <= ... full gradient; the
    four links are recorded with the sqrt(2) on the first.
    case "ii" (N = 2): log-weighted <= 2 radial <= 2 full.
    case "iii" (N = 1): rho-weighted <= sqrt(2) (1+r)-weighted
    <= 2 |u'| (+ sqrt(2)|u(0)| when the origin value is nonzero) <= ... .
    """
    if isinstance(domain_or_dimension, ExteriorDomain):
        _check_support(domain_or_dimension, u)
    sm = _gather(u, **sample_kw)
    n = sm["dimension"]
    desc = _describe(u)
    records = []

    if case == "i":
        if n < 3:
            raise ValueError("chain case 'i' needs dimension >= 3")
        c_n = 2.0 / (n - 2.0)
        n_rho = _norm(sm, sm["u"] ** 2 / (1.0 + sm["r"] ** 2))
        n_opr = _norm(sm, sm["u"] ** 2 / (1.0 + sm["r"]) ** 2)
        n_r = _norm(sm, sm["u"] ** 2 / sm["r"] ** 2)
        n_dr = _norm(sm, sm["du_r"] ** 2)
        n_gr = _norm(sm, sm["grad"] ** 2)
        records.append(
            VerificationRecord("chain_i_rho_vs_1plusr", n, 0.0, desc,
                               n_rho, WEIGHT_EQUIV * n_opr)
        )
        records.append(
            VerificationRecord("chain_i_1plusr_vs_r", n, 0.0, desc, n_opr, n_r)
        )
        records.append(
            VerificationRecord("chain_i_r_vs_radial", n, 0.0, desc,
                               n_r, c_n * n_dr)
        )
        records.append(
            VerificationRecord("chain_i_radial_vs_gradient", n, 0.0, desc,
                               c_n * n_dr, c_n * n_gr)
        )
        return records

    if case == "ii":
        if n != 2:
            raise ValueError("chain case 'ii' needs dimension 2")
        if np.min(sm["r"]) <= 1.0:
            raise ValueError("chain case 'ii' needs support at radius > 1")
        logs = np.log(sm["r"])
        n_log = _norm(sm, sm["u"] ** 2 / (sm["r"] * logs) ** 2)
        n_dr = _norm(sm, sm["du_r"] ** 2)
        n_gr = _norm(sm, sm["grad"] ** 2)
        records.append(
            VerificationRecord("chain_ii_log_vs_radial", n, 0.0, desc,
                               n_log, 2.0 * n_dr)
        )
        records.append(
            VerificationRecord("chain_ii_radial_vs_gradient", n, 0.0, desc,
                               2.0 * n_dr, 2.0 * n_gr)
        )
        return records

    if case == "iii":
        if n != 1:
            raise ValueError("chain case 'iii' is one-dimensional")
        n_rho = _norm(sm, sm["u"] ** 2 / (1.0 + sm["r"] ** 2))
        n_opr = _norm(sm, sm["u"] ** 2 / (1.0 + sm["r"]) ** 2)
        n_dr = _norm(sm, sm["du_r"] ** 2)
        n_gr = _norm(sm, sm["grad"] ** 2)
        origin = math.sqrt(2.0) * abs(sm["u0"])
        records.append(
            VerificationRecord("chain_iii_rho_vs_1plusr", n, 0.0, desc,
                               n_rho, WEIGHT_EQUIV * n_opr)
        )
        records.append(
            VerificationRecord("chain_iii_1plusr_vs_radial", n, 0.0, desc,
                               n_opr, 2.0 * n_dr + origin)
        )
        records.append(
            VerificationRecord("chain_iii_radial_vs_derivative", n, 0.0, desc,
                               2.0 * n_dr, 2.0 * n_gr)
        )
        return records

    raise ValueError(f"unknown chain case {case!r}; expected 'i', 'ii' or 'iii'")


# ---------------------------------------------------------------------------
# proof identities (partial integration, before the triangle inequality)


@dataclass(frozen=True)
class IdentityRecord:
    variant: str
    dimension: int
    beta: float
    gamma_hat: float
    lhs: float
    rhs: float

    @property
    def rel_deviation(self) -> float:
        return abs(self.lhs - self.rhs) / max(abs(self.lhs), abs(self.rhs), 1e-300)

    @property
    def passed(self) -> bool:
        return self.rel_deviation <= IDENTITY_RTOL


def partial_integration_identity(
    u, beta: float, variant: str, gamma_hat: float | None = None, **sample_kw
) -> IdentityRecord:
    """Quadrature check of the exact expansion of
    ||w^b du/dr + gamma_hat w^{b-1} u||^2 used to prove each inequality
    (weight w = r, r with a log, or 1 + r)."""
    sm = _gather(u, **sample_kw)
    n = sm["dimension"]
    r, uu, dur, w = sm["r"], sm["u"], sm["du_r"], sm["w"]

    if variant == "power":
        gh = 2.0 * beta + n - 2.0 if gamma_hat is None else gamma_hat
        combo = r**beta * dur + gh * r ** (beta - 1) * uu
        lhs = math.fsum(combo**2 * w)
        rhs = math.fsum(r ** (2 * beta) * dur**2 * w) + gh * (
            gh - 2.0 * beta - n + 2.0
        ) * math.fsum(r ** (2 * beta - 2) * uu**2 * w)
    elif variant == "log":
        if np.min(r) <= 1.0:
            raise ValueError("log identity needs support at radius > 1")
        gh = 2.0 * beta + n - 3.0 if gamma_hat is None else gamma_hat
        logs = np.log(r)
        combo = r**beta * dur + gh * r ** (beta - 1) / logs * uu
        lhs = math.fsum(combo**2 * w)
        rhs = (
            math.fsum(r ** (2 * beta) * dur**2 * w)
            + gh * (gh + 1.0) * math.fsum(r ** (2 * beta - 2) / logs**2 * uu**2 * w)
            - gh
            * (n + 2.0 * beta - 2.0)
            * math.fsum(r ** (2 * beta - 2) / logs * uu**2 * w)
        )
    elif variant == "halfline":
        if n != 1:
            raise ValueError("half-line identity is one-dimensional")
        gh = 2.0 * beta - 1.0 if gamma_hat is None else gamma_hat
        opr = 1.0 + r
        combo = opr**beta * dur + gh * opr ** (beta - 1) * uu
        lhs = math.fsum(combo**2 * w)
        # the boundary coefficient is -gh |u(0)|^2 per half line; the
        # two-sided whole-line form doubles it, but our test functions
        # live on [0, inf) extended by zero
        rhs = (
            math.fsum(opr ** (2 * beta) * dur**2 * w)
            + gh * (gh - 2.0 * beta + 1.0)
            * math.fsum(opr ** (2 * beta - 2) * uu**2 * w)
            - gh * sm["u0"] ** 2
        )
    else:
        raise ValueError(f"unknown identity variant {variant!r}")
    return IdentityRecord(variant, n, beta, gh, lhs, rhs)


# ---------------------------------------------------------------------------
# scans and random suites


@dataclass(frozen=True)
class ScanResult:
    best_ratio: float
    best_descriptor: str
    records: tuple


def rayleigh_scan(
    domain: ExteriorDomain,
    inequality: str,
    beta: float,
    center_radii,
    radii,
    **sample_kw,
) -> ScanResult:
    """Probe the tightness of one inequality over a bump family; the best
    observed lhs/rhs ratio must stay below 1 (plus roundoff)."""
    center_radii = list(center_radii)
    radii = list(radii)
    if not center_radii or not radii:
        raise ValueError("scan family must be nonempty")
    verify = {
        "power_weight": lambda u: verify_power_weight(domain, u, beta, **sample_kw),
        "log_weight": lambda u: verify_log_weight(domain, u, beta, **sample_kw),
    }
    if inequality not in verify:
        raise ValueError(f"unknown inequality {inequality!r} for scans")
    records = []
    for cr in center_radii:
        for rad in radii:
            if cr - rad <= domain.a:
                continue
            axis = np.zeros(domain.dimension)
            axis[0] = cr
            rec = verify[inequality](BumpFunction(tuple(axis), rad))
            records.append(rec)
    if not records:
        raise ValueError("scan family left no admissible bumps")
    ratios = [r.lhs / r.rhs if r.rhs > 0.0 else 0.0 for r in records]
    best = int(np.argmax(ratios))
    if ratios[best] > 1.0 + PASS_RTOL:
        raise VerificationFailure(
            f"{inequality} ratio {ratios[best]} exceeds 1 for {records[best].descriptor}"
        )
    return ScanResult(
        best_ratio=float(ratios[best]),
        best_descriptor=records[best].descriptor,
        records=tuple(records),
    )


def random_bumps(
    domain: ExteriorDomain,
    count: int,
    seed: int,
    outer_factor: float = 2.5,
) -> list[BumpFunction]:
    """Deterministic random bumps strictly inside the domain, with centers
    up to ``outer_factor`` times the interface radius."""
    rng = np.random.default_rng(seed)
    out = []
    r_hi = outer_factor * domain.R
    for _ in range(count):
        cr = rng.uniform(1.05 * domain.a + 0.05, r_hi)
        rad = rng.uniform(0.05, 0.45) * (cr - domain.a)
        direction = rng.normal(size=domain.dimension)
        direction /= np.linalg.norm(direction)
        out.append(BumpFunction(tuple(cr * direction), rad))
    return out


def _describe(u) -> str:
    if isinstance(u, (list, tuple)):
        return "+".join(_describe(b) for b in u)
    if isinstance(u, BumpFunction):
        return f"bump(c={u.center_radius:.3f},rad={u.radius:.3f})"
    if isinstance(u, RadialBump):
        return f"radial(c={u.center_radius:.3f},rad={u.radius:.3f},N={u.dimension})"
    if isinstance(u, HalfLineBump):
        return f"halfopen(width={u.width:.3f})"
    return type(u).__name__


def _check_support(domain: ExteriorDomain, u) -> None:
    if isinstance(u, (list, tuple)):
        for b in u:
            _check_support(domain, b)
        return
    if isinstance(u, BumpFunction):
        u.check_inside(domain)
    elif isinstance(u, RadialBump):
        if u.min_support_radius() <= domain.a:
            raise ValueError("radial bump support reaches inside the domain boundary")
