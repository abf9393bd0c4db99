"""Abelian integrals over the upper and lower level-oval branches.

The integrals are

    I_{i,j}(h) = int_{Gamma_h^+} x^(i+o) y^j dx,    J_{i,j}(h) = int_{Gamma_h^-} x^(i+o) y^j dx,

with o = -4 for LV and o = 0 for BT; Gamma_h^+ runs from x_a to x_b and
Gamma_h^- back from x_b to x_a (clockwise orbits). Internally everything is
written with the plain x-exponent p = i + o.

On the branch we substitute x = c + r sin(theta), theta in [-pi/2, pi/2]. Since
y^2 = (x - x_a)(x_b - x) q(x) = r^2 cos^2(theta) q(x), the branch is
y = r cos(theta) sqrt(q(x)) and every integrand, including y^-1 dx, becomes
analytic in theta. Gauss-Legendre with order doubling then converges
geometrically.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .errors import AccuracyError, PreconditionError
from .systems import (
    LV,
    OvalEndpoints,
    Perturbation,
    Side,
    SystemId,
    branch_factor,
    endpoint_derivatives,
    oval_endpoints,
)

DEFAULT_TOL = 1e-10
MAX_NODES = 2**14
_PANEL_ORDER = 512


@lru_cache(maxsize=None)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _rule(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int, panels: int):
    x, w = _gauss_legendre(n)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    total_abs = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        vals = fn(0.5 * (hi + lo) + half * x)
        total += half * np.dot(w, vals)
        total_abs += half * np.dot(w, np.abs(vals))
    return total, total_abs


def integrate(fn: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float = DEFAULT_TOL,
              max_nodes: int = MAX_NODES) -> float:
    """Integrate a smooth vectorised ``fn`` on [a, b] by Gauss-Legendre order doubling.

    Orders 16..512 use a single panel, beyond that 512-point panels are
    doubled until the node count would exceed ``max_nodes``. Converged when
    successive estimates differ by at most tol * int |fn|.
    """
    schedule = []
    n = 16
    while n <= _PANEL_ORDER:
        schedule.append((n, 1))
        n *= 2
    panels = 2
    while panels * _PANEL_ORDER <= max_nodes:
        schedule.append((_PANEL_ORDER, panels))
        panels *= 2
    prev = None
    for n, panels in schedule:
        est, scale = _rule(fn, a, b, n, panels)
        if prev is not None:
            err = abs(est - prev)
            if err <= tol * max(scale, 1e-300):
                return est
        prev = est
    raise AccuracyError(f"quadrature did not converge with {max_nodes} nodes (estimate {est!r}, change {err:.3e})",
                        estimate=est, error=err)


def x_exponent(sys: SystemId, i: int) -> int:
    return i + sys.x_power_offset


def _require_interior(sys: SystemId, h: float, oval: OvalEndpoints | None) -> OvalEndpoints:
    return oval if oval is not None else oval_endpoints(sys, h)


def _branch_terms(sys: SystemId, oval: OvalEndpoints, theta: np.ndarray):
    s = np.sin(theta)
    co = np.cos(theta)
    x = oval.center + oval.radius * s
    q = branch_factor(sys, oval, x)
    return s, co, x, q


def _power_integrand(sys: SystemId, p: int, j: int, oval: OvalEndpoints):
    r = oval.radius

    def fn(theta):
        _, co, x, q = _branch_terms(sys, oval, theta)
        return x**p * (r * co) ** (j + 1) * q ** (0.5 * j)

    return fn


def _power_integrand_dh(sys: SystemId, p: int, j: int, oval: OvalEndpoints):
    """h-derivative of the theta-integrand of x^p y^j dx (the theta limits are fixed)."""
    r = oval.radius
    d = endpoint_derivatives(sys, oval)
    c_h = 0.5 * (d["x_a'"] + d["x_b'"])
    r_h = 0.5 * (d["x_b'"] - d["x_a'"])
    xc_h = d["x_c'"]

    def fn(theta):
        s, co, x, q = _branch_terms(sys, oval, theta)
        x_h = c_h + r_h * s
        if sys is LV:
            q_h = -2.0 * (x - oval.x_c) - 2.0 * oval.h * (x_h - xc_h)
        else:
            q_h = (2.0 / 3.0) * (xc_h - x_h)
        rc = r * co
        out = 0.5 * j * x**p * rc ** (j + 1) * q ** (0.5 * j - 1.0) * q_h
        if j + 1:
            out = out + (j + 1) * x**p * rc**j * r_h * co * q ** (0.5 * j)
        if p:
            out = out + p * x ** (p - 1) * x_h * rc ** (j + 1) * q ** (0.5 * j)
        return out

    return fn


def _closed_power(p: int, xa: float, xb: float) -> float:
    if p == -1:
        return math.log(xb / xa)
    return (xb ** (p + 1) - xa ** (p + 1)) / (p + 1)


def power_integral(sys: SystemId, p: int, j: int, h: float, tol: float = DEFAULT_TOL,
                   oval: OvalEndpoints | None = None) -> float:
    """int over the upper branch of x^p y^j dx; j = -1 is allowed (convergent)."""
    if j < -1:
        raise PreconditionError(f"y^{j} is not integrable at the oval endpoints")
    oval = _require_interior(sys, h, oval)
    if j == 0:
        return _closed_power(p, oval.x_a, oval.x_b)
    return integrate(_power_integrand(sys, p, j, oval), -0.5 * math.pi, 0.5 * math.pi, tol)


def power_integral_dh(sys: SystemId, p: int, j: int, h: float, tol: float = DEFAULT_TOL,
                      oval: OvalEndpoints | None = None) -> float:
    """d/dh of :func:`power_integral`, by differentiating the theta-integrand."""
    oval = _require_interior(sys, h, oval)
    if j == 0:
        d = endpoint_derivatives(sys, oval)
        return oval.x_b**p * d["x_b'"] - oval.x_a**p * d["x_a'"]
    return integrate(_power_integrand_dh(sys, p, j, oval), -0.5 * math.pi, 0.5 * math.pi, tol)


def _shift(sys: SystemId) -> int:
    # dy/dh = x^3 / y for LV and 1 / y for BT
    return 3 if sys is LV else 0


def abelian_integral(sys: SystemId, i: int, j: int, h: float, tol: float = DEFAULT_TOL,
                     oval: OvalEndpoints | None = None) -> float:
    """I_{i,j}(h) over the upper branch; j = 0 uses the closed-form antiderivative."""
    return power_integral(sys, x_exponent(sys, i), j, h, tol, oval)


def lower_abelian_integral(sys: SystemId, i: int, j: int, h: float, tol: float = DEFAULT_TOL,
                           oval: OvalEndpoints | None = None) -> float:
    """J_{i,j}(h): the lower branch y < 0 traversed from x_b back to x_a.

    Evaluated by its own quadrature (x = c - r sin(t), y = -r cos(t) sqrt(q)),
    never through the reflection identity.
    """
    if j < 0:
        raise PreconditionError("lower-branch integrals are defined for j >= 0")
    oval = _require_interior(sys, h, oval)
    p = x_exponent(sys, i)
    r = oval.radius

    def fn(t):
        co = np.cos(t)
        x = oval.center - r * np.sin(t)
        y = -r * co * np.sqrt(branch_factor(sys, oval, x))
        return x**p * y**j * (-r * co)

    return integrate(fn, -0.5 * math.pi, 0.5 * math.pi, tol)


def abelian_derivative(sys: SystemId, i: int, j: int, h: float, order: int = 1, tol: float = DEFAULT_TOL,
                       oval: OvalEndpoints | None = None) -> float:
    """d^order I_{i,j} / dh^order for order 1, 2 or 3.

    Uses I'_{i,j} = j I_{i+3,j-2} (LV) or j I_{i,j-2} (BT) wherever the index
    stays integrable, the endpoint formula for j = 0 and theta-differentiation
    of the y^-1 integral otherwise.
    """
    p = x_exponent(sys, i)
    return _power_derivative(sys, p, j, h, order, tol, _require_interior(sys, h, oval))


def _power_derivative(sys, p, j, h, order, tol, oval):
    if order == 0:
        return power_integral(sys, p, j, h, tol, oval)
    if order not in (1, 2, 3):
        raise PreconditionError("derivatives of order 1 to 3 are supported")
    s = _shift(sys)
    if j >= 1:
        return j * _power_derivative(sys, p + s, j - 2, h, order - 1, tol, oval)
    if j == 0:
        return _endpoint_power_derivative(p, order, oval, endpoint_derivatives(sys, oval))
    if j == -1 and order == 1:
        return power_integral_dh(sys, p, -1, h, tol, oval)
    raise PreconditionError(f"derivative of order {order} of an x^{p} y^{j} integral is not integrable")


def _endpoint_power_derivative(p: int, order: int, oval: OvalEndpoints, d: dict) -> float:
    # d^k/dh^k of (x_b^(p+1) - x_a^(p+1)) / (p+1) by the chain rule on x(h)
    out = 0.0
    for name, x, sign in (("b", oval.x_b, 1.0), ("a", oval.x_a, -1.0)):
        x1, x2, x3 = d[f"x_{name}'"], d[f"x_{name}''"], d[f"x_{name}'''"]
        f0 = x**p
        f1 = p * x ** (p - 1) if p else 0.0
        f2 = p * (p - 1) * x ** (p - 2) if p not in (0, 1) else 0.0
        if order == 1:
            term = f0 * x1
        elif order == 2:
            term = f0 * x2 + f1 * x1 * x1
        else:
            term = f0 * x3 + 3.0 * f1 * x1 * x2 + f2 * x1**3
        out += sign * term
    return out


def finite_difference(fn: Callable[[float], float], h: float, step: float, order: int = 1) -> float:
    """Five-point central difference with one Richardson extrapolation (step, step/2)."""

    def stencil(d):
        f = [fn(h + k * d) for k in (-2, -1, 0, 1, 2)]
        if order == 1:
            return (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * d)
        if order == 2:
            return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * d * d)
        raise ValueError("order must be 1 or 2")

    coarse = stencil(step)
    fine = stencil(0.5 * step)
    return fine + (fine - coarse) / 15.0


def fd_step(sys: SystemId, h: float, rel: float = 1e-3) -> float:
    """Finite-difference step: interval width times ``rel``, clamped by the distance to the ends."""
    lo, hi = (float(v) for v in sys.energy_interval)
    return min(rel * (hi - lo), 0.2 * (h - lo), 0.2 * (hi - h))


def melnikov_direct(sys: SystemId, p: Perturbation, h: float, tol: float = DEFAULT_TOL,
                    method: str = "line", oval: OvalEndpoints | None = None) -> float:
    """First-order Melnikov function by direct quadrature of the piecewise line integral.

    method="line" integrates mu (g dx - f dy) along both parametrised branches
    as written; method="green" first rewrites each f-monomial's dy-integral as
    a dx-integral by integration by parts and integrates upper and lower
    branches separately.
    """
    oval = _require_interior(sys, h, oval)
    if method == "line":
        return _melnikov_line(sys, p, oval, tol)
    if method == "green":
        return _melnikov_green(sys, p, oval, tol)
    raise ValueError(f"unknown method {method!r}")


def _melnikov_line(sys, pert, oval, tol):
    r = oval.radius
    q_x = -2.0 * oval.h if sys is LV else -2.0 / 3.0

    def branch(side: Side):
        sign = 1.0 if side is Side.UPPER else -1.0

        def fn(t):
            s, co = np.sin(t), np.cos(t)
            x = oval.center + sign * r * s
            q = branch_factor(sys, oval, x)
            sq = np.sqrt(q)
            y = sign * r * co * sq
            x_t = sign * r * co
            y_t = sign * (-r * s * sq + r * co * q_x * x_t / (2.0 * sq))
            mu = sys.integrating_factor(x)
            return mu * (pert.g(side, x, y) * x_t - pert.f(side, x, y) * y_t)

        return fn

    upper = integrate(branch(Side.UPPER), -0.5 * math.pi, 0.5 * math.pi, tol)
    lower = integrate(branch(Side.LOWER), -0.5 * math.pi, 0.5 * math.pi, tol)
    return upper + lower


def _melnikov_green(sys, pert, oval, tol):
    o = sys.x_power_offset
    total = 0.0
    for upper, (a, b) in ((True, (pert.a_plus, pert.b_plus)), (False, (pert.a_minus, pert.b_minus))):
        integral = abelian_integral if upper else lower_abelian_integral
        for (i, j), c in b.items():
            total += float(c) * integral(sys, i, j, oval.h, tol, oval)
        for (i, j), c in a.items():
            # -int x^(i+o) y^j dy = (i+o)/(j+1) int x^(i+o-1) y^(j+1) dx
            k = i + o
            if k:
                total += float(c) * k / (j + 1) * integral(sys, i - 1, j + 1, oval.h, tol, oval)
    return total


@lru_cache(maxsize=65536)
def _basis_values_cached(sys: SystemId, h: float, tol: float) -> tuple[tuple[tuple[int, int], float], ...]:
    from .reduction import BASIS

    oval = oval_endpoints(sys, h)
    return tuple((e, abelian_integral(sys, e[0], e[1], h, tol, oval)) for e in BASIS[sys])


def basis_values(sys: SystemId, h: float, tol: float = 1e-12) -> dict[tuple[int, int], float]:
    """Quadrature values of the basis integrals at h (memoised per (system, h, tol))."""
    return dict(_basis_values_cached(sys, float(h), float(tol)))
