"""The two unperturbed systems, their level ovals and the piecewise perturbed fields.

LV is the reduced generic Lotka-Volterra system

    x' = x y,   y' = 3/2 y^2 - 9/8 x^2 + 3/2 x - 3/8,

with first integral H = x^-3 (y^2/2 - 9/8 x^2 + 3/4 x - 1/8) and integrating
factor x^-4; its period annulus is h in (-1/2, 0). BT is the Bogdanov-Takens
system x' = y, y' = -1 + x^2 with H = y^2/2 + x - x^3/3 on (-2/3, 2/3).

Every level oval of either system is symmetric about y = 0 and meets the
switching line at x_a < x_b. On the upper branch the cubic radicand factors as

    y^2 = (x - x_a) (x_b - x) q(x),

with q linear in x and strictly positive on [x_a, x_b]; ``q`` is built from
the third root x_c of H(x, 0) = h.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateOvalError, DomainError, EnergyRangeError, PreconditionError
from .polynomials import as_fraction

#: Width of the band around the interval ends where ovals count as degenerate.
DEGENERATE_BAND = 1e-12


class SystemId(enum.Enum):
    LV = "LV"
    BT = "BT"

    @classmethod
    def parse(cls, value) -> "SystemId":
        if isinstance(value, SystemId):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"unknown system {value!r}; expected LV or BT") from None

    @property
    def energy_interval(self) -> tuple[Fraction, Fraction]:
        if self is SystemId.LV:
            return Fraction(-1, 2), Fraction(0)
        return Fraction(-2, 3), Fraction(2, 3)

    @property
    def center(self) -> tuple[float, float]:
        return (1.0, 0.0) if self is SystemId.LV else (-1.0, 0.0)

    @property
    def saddle(self) -> tuple[float, float]:
        return (1.0 / 3.0, 0.0) if self is SystemId.LV else (1.0, 0.0)

    @property
    def x_power_offset(self) -> int:
        """I_{i,j} integrates x**(i + offset) y**j dx: -4 for LV, 0 for BT."""
        return -4 if self is SystemId.LV else 0

    def integrating_factor(self, x, y=0.0):
        if self is SystemId.LV:
            return np.asarray(x, dtype=float) ** -4
        return np.ones_like(np.asarray(x, dtype=float))

    def guarded_interval(self, fraction: float) -> tuple[float, float]:
        """Energy interval shrunk by ``fraction`` of its width at both ends."""
        lo, hi = (float(v) for v in self.energy_interval)
        w = hi - lo
        return lo + fraction * w, hi - fraction * w

    def sample_energies(self, count: int, guard: float = 0.02) -> np.ndarray:
        lo, hi = self.guarded_interval(guard)
        return np.linspace(lo, hi, count)


LV = SystemId.LV
BT = SystemId.BT


@dataclass(frozen=True)
class OvalEndpoints:
    """Crossings of the level oval H = h with y = 0, plus the third real root.

    ``x_c`` is the root of H(x, 0) = h not on the oval (LV: just left of x_a,
    BT: beyond the saddle at x = 1); it fixes the positive linear factor q.
    """

    x_a: float
    x_b: float
    h: float
    x_c: float

    @property
    def center(self) -> float:
        return 0.5 * (self.x_a + self.x_b)

    @property
    def radius(self) -> float:
        return 0.5 * (self.x_b - self.x_a)


class Side(enum.Enum):
    UPPER = "upper"
    LOWER = "lower"
    ON_SECTION = "on-section"


@dataclass(frozen=True)
class PlanarState:
    x: float
    y: float
    side: Side = Side.ON_SECTION

    def __post_init__(self):
        if self.side is Side.UPPER and self.y < 0 or self.side is Side.LOWER and self.y > 0:
            raise ValueError(f"side {self.side.value} inconsistent with y = {self.y}")

    @classmethod
    def at(cls, x: float, y: float) -> "PlanarState":
        side = Side.UPPER if y > 0 else Side.LOWER if y < 0 else Side.ON_SECTION
        return cls(x, y, side)


def hamiltonian(sys: SystemId, x, y):
    """First integral H(x, y); LV requires x > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if sys is LV:
        if np.any(x <= 0):
            raise DomainError("LV Hamiltonian is defined for x > 0 only")
        out = (0.5 * y * y - 1.125 * x * x + 0.75 * x - 0.125) / x**3
    else:
        out = 0.5 * y * y + x - x**3 / 3.0
    return out[()] if out.ndim == 0 else out


def section_energy(sys: SystemId, x):
    """H(x, 0), written in factored form for LV to avoid cancellation."""
    x = np.asarray(x, dtype=float)
    if sys is LV:
        return -((3.0 * x - 1.0) ** 2) / (8.0 * x**3)
    return x - x**3 / 3.0


def section_energy_dx(sys: SystemId, x):
    """d/dx H(x, 0)."""
    x = np.asarray(x, dtype=float)
    if sys is LV:
        return 3.0 * (3.0 * x - 1.0) * (x - 1.0) / (8.0 * x**4)
    return 1.0 - x * x


def section_energy_dxx(sys: SystemId, x):
    x = np.asarray(x, dtype=float)
    if sys is LV:
        return 0.375 * (-6.0 / x**3 + 12.0 / x**4 - 4.0 / x**5)
    return -2.0 * x


def section_energy_dxxx(sys: SystemId, x):
    x = np.asarray(x, dtype=float)
    if sys is LV:
        return 0.375 * (18.0 / x**4 - 48.0 / x**5 + 20.0 / x**6)
    return np.full_like(x, -2.0)


def check_energy(sys: SystemId, h: float, band: float = DEGENERATE_BAND) -> float:
    lo, hi = (float(v) for v in sys.energy_interval)
    h = float(h)
    if not (lo < h < hi):
        raise EnergyRangeError(f"h = {h!r} outside the {sys.value} energy interval ({lo}, {hi})")
    if h - lo < band or hi - h < band:
        raise DegenerateOvalError(f"h = {h!r} within {band:g} of an end of the {sys.value} interval")
    return h


def oval_endpoints(sys: SystemId, h: float) -> OvalEndpoints:
    """Abscissae x_a < x_b where the oval H = h crosses y = 0.

    Brent's method on the polynomial form of H(x, 0) = h over the brackets
    (1/3, 1), (1, 9/(8|h|)) for LV and (-2, -1), (-1, 1) for BT.
    """
    h = check_energy(sys, h)
    kw = dict(xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    if sys is LV:
        # 8 h x^3 + (3x - 1)^2 vanishes on the oval's crossings
        phi = lambda x: 8.0 * h * x**3 + (3.0 * x - 1.0) ** 2  # noqa: E731
        x_a = brentq(phi, 1.0 / 3.0, 1.0, **kw)
        x_b = brentq(phi, 1.0, -9.0 / (8.0 * h), **kw)
        x_c = -1.0 / (8.0 * h * x_a * x_b)
    else:
        phi = lambda x: x - x**3 / 3.0 - h  # noqa: E731
        x_a = brentq(phi, -2.0, -1.0, **kw)
        x_b = brentq(phi, -1.0, 1.0, **kw)
        x_c = -(x_a + x_b)
    return OvalEndpoints(x_a, x_b, h, x_c)


def endpoint_derivatives(sys: SystemId, oval: OvalEndpoints) -> dict[str, float]:
    """h-derivatives (orders 1 to 3) of x_a, x_b and the first derivative of x_c."""
    out = {}
    for name, x in (("a", oval.x_a), ("b", oval.x_b)):
        g = float(section_energy_dx(sys, x))
        gp = float(section_energy_dxx(sys, x))
        gpp = float(section_energy_dxxx(sys, x))
        out[f"x_{name}'"] = 1.0 / g
        out[f"x_{name}''"] = -gp / g**3
        out[f"x_{name}'''"] = -gpp / g**4 + 3.0 * gp * gp / g**5
    if sys is LV:
        out["x_c'"] = 9.0 / (8.0 * oval.h**2) - out["x_a'"] - out["x_b'"]
    else:
        out["x_c'"] = -(out["x_a'"] + out["x_b'"])
    return out


def branch_factor(sys: SystemId, oval: OvalEndpoints, x):
    """The positive linear factor q(x) of y^2 on the oval."""
    x = np.asarray(x, dtype=float)
    if sys is LV:
        return -2.0 * oval.h * (x - oval.x_c)
    return (2.0 / 3.0) * (oval.x_c - x)


def upper_branch(sys: SystemId, x, h: float, oval: OvalEndpoints | None = None, tol: float = 1e-12):
    """y >= 0 on the level curve H = h above abscissa x in [x_a, x_b]."""
    if oval is None:
        oval = oval_endpoints(sys, h)
    x = np.asarray(x, dtype=float)
    slack = tol * max(1.0, abs(oval.x_b), abs(oval.x_a))
    if np.any(x < oval.x_a - slack) or np.any(x > oval.x_b + slack):
        raise DomainError(f"x outside the oval span [{oval.x_a}, {oval.x_b}]")
    xc = np.clip(x, oval.x_a, oval.x_b)
    y = np.sqrt((xc - oval.x_a) * (oval.x_b - xc) * branch_factor(sys, oval, xc))
    return y[()] if y.ndim == 0 else y


@dataclass
class Perturbation:
    """Coefficients of f(+/-) = sum a_ij x^i y^j and g(+/-) = sum b_ij x^i y^j, i + j <= n.

    Each array is a mapping (i, j) -> Fraction; absent keys are zero.
    """

    n: int
    a_plus: dict = field(default_factory=dict)
    a_minus: dict = field(default_factory=dict)
    b_plus: dict = field(default_factory=dict)
    b_minus: dict = field(default_factory=dict)

    ARRAYS = ("a_plus", "a_minus", "b_plus", "b_minus")

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("degree must be nonnegative")
        for name in self.ARRAYS:
            clean = {}
            for key, value in dict(getattr(self, name)).items():
                i, j = (int(k) for k in key)
                if i < 0 or j < 0 or i + j > self.n:
                    raise ValueError(f"{name}[{i},{j}] outside the triangle i + j <= {self.n}")
                v = as_fraction(value)
                if v != 0:
                    clean[(i, j)] = v
            setattr(self, name, clean)

    @classmethod
    def zero(cls, n: int) -> "Perturbation":
        return cls(n)

    @classmethod
    def random(cls, n: int, rng: Random, denominator: int = 2**16) -> "Perturbation":
        """Coefficients uniform on [-1, 1] with the given denominator, drawn in a fixed order."""
        arrays = {}
        for name in cls.ARRAYS:
            arrays[name] = {
                (i, j): Fraction(rng.randint(-denominator, denominator), denominator)
                for i, j in triangle(n)
            }
        return cls(n, **arrays)

    def __add__(self, other: "Perturbation") -> "Perturbation":
        out = {}
        for name in self.ARRAYS:
            a, b = getattr(self, name), getattr(other, name)
            out[name] = {k: a.get(k, 0) + b.get(k, 0) for k in set(a) | set(b)}
        return Perturbation(max(self.n, other.n), **out)

    def scaled(self, factor) -> "Perturbation":
        s = as_fraction(factor)
        return Perturbation(self.n, **{name: {k: s * v for k, v in getattr(self, name).items()} for name in self.ARRAYS})

    def is_zero(self) -> bool:
        return not any(getattr(self, name) for name in self.ARRAYS)

    def evaluate(self, name: str, x, y):
        """Numeric value of the polynomial stored under ``name`` at (x, y)."""
        coeffs: Mapping = getattr(self, name)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (i, j), c in coeffs.items():
            out = out + float(c) * x**i * y**j
        return out[()] if out.ndim == 0 else out

    def f(self, side: Side, x, y):
        return self.evaluate("a_plus" if side is Side.UPPER else "a_minus", x, y)

    def g(self, side: Side, x, y):
        return self.evaluate("b_plus" if side is Side.UPPER else "b_minus", x, y)


def triangle(n: int):
    """Index pairs (i, j) with i, j >= 0 and i + j <= n, in a fixed order."""
    return [(i, d - i) for d in range(n + 1) for i in range(d, -1, -1)]


def unperturbed_field(sys: SystemId, x, y):
    if sys is LV:
        return x * y, 1.5 * y * y - 1.125 * x * x + 1.5 * x - 0.375
    return y, -1.0 + x * x


def vector_field(sys: SystemId, state: PlanarState, eps: float, p: Perturbation) -> tuple[float, float]:
    """(x', y') of the half-plane subsystem selected by ``state.side``."""
    if state.side is Side.ON_SECTION:
        raise PreconditionError("resolve the side of a state on y = 0 before evaluating the field")
    dx, dy = unperturbed_field(sys, state.x, state.y)
    if eps:
        dx = dx + eps * p.f(state.side, state.x, state.y)
        dy = dy + eps * p.g(state.side, state.x, state.y)
    return float(dx), float(dy)
