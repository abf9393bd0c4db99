"""Numerical zero counting for Melnikov functions."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import InvariantViolation
from .quadrature import abelian_integral, basis_values
from .reduction import BASIS, MelnikovRepresentation, evaluate_representation
from .systems import BT, Perturbation, SystemId, endpoint_derivatives, oval_endpoints

ODD = "odd-simple"
EVEN = "even-suspected"

DEFAULT_GRID = 512
GUARD_FRACTION = 1e-3


def theoretical_bound(sys: SystemId, n: int) -> int:
    """Upper bound on the number of limit cycles from the first-order Melnikov function."""
    if n < 1:
        raise ValueError("degree must be at least 1")
    if sys is BT:
        return 12 * n + 6
    return {1: 37, 2: 57, 3: 93}.get(n, 36 * n - 65)


@dataclass(frozen=True)
class ZeroBracket:
    h_lo: float
    h_hi: float
    root: float
    multiplicity: str
    value: float


@dataclass
class ZeroReport:
    system: str
    n: int
    grid: int
    tol: float
    bound: int
    brackets: list[ZeroBracket] = field(default_factory=list)
    max_abs: float = 0.0
    identically_zero: bool = False

    @property
    def odd_count(self) -> int:
        return sum(1 for b in self.brackets if b.multiplicity == ODD)

    @property
    def even_count(self) -> int:
        return sum(1 for b in self.brackets if b.multiplicity == EVEN)

    @property
    def within_bound(self) -> bool:
        return self.odd_count <= self.bound

    def to_json(self) -> str:
        data = {
            "system": self.system,
            "n": self.n,
            "grid": self.grid,
            "tol": self.tol,
            "bound": self.bound,
            "odd_simple": self.odd_count,
            "even_suspected": self.even_count,
            "within_bound": self.within_bound,
            "identically_zero": self.identically_zero,
            "max_abs": self.max_abs,
            "brackets": [asdict(b) for b in self.brackets],
        }
        return json.dumps(data, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h_lo", "h_hi", "root", "multiplicity", "value"])
        for b in self.brackets:
            w.writerow([repr(b.h_lo), repr(b.h_hi), repr(b.root), b.multiplicity, repr(b.value)])
        return buf.getvalue()


def energy_grid(sys: SystemId, grid: int, guard: float = GUARD_FRACTION) -> np.ndarray:
    lo, hi = sys.guarded_interval(guard)
    return np.linspace(lo, hi, grid)


def grid_basis(sys: SystemId, hs: np.ndarray) -> dict[tuple[int, int], np.ndarray]:
    """Basis integral values along an energy grid (cached per energy)."""
    cols = {e: np.empty(len(hs)) for e in BASIS[sys]}
    for k, h in enumerate(hs):
        for e, v in basis_values(sys, float(h)).items():
            cols[e][k] = v
    return cols


def evaluate_on_grid(rep: MelnikovRepresentation, hs: np.ndarray, cols=None) -> np.ndarray:
    dec = rep.decomposition
    if cols is None:
        cols = grid_basis(rep.sys, hs)
    total = np.zeros(len(hs))
    for e, p in dec.coeffs.items():
        if p:
            total += p(hs) * cols[e]
    if dec.denom_power:
        total /= hs**dec.denom_power
    return total


def isolate_zeros(rep: MelnikovRepresentation, grid: int = DEFAULT_GRID, tol: float = 1e-10,
                  even_tol: float = 1e-8, guard: float = GUARD_FRACTION) -> ZeroReport:
    """Bracket and refine the zeros of M(h) on a uniform energy grid.

    ``tol`` and ``even_tol`` are relative to the largest |M| on the grid:
    roots are refined until |M| < tol * (1 + max|M|) where possible, and a
    local minimum of |M| without a sign change is reported as even-suspected
    when its refined value drops below even_tol * max|M|.
    """
    if grid < 64:
        raise ValueError("grid must have at least 64 points")
    sys = rep.sys
    report = ZeroReport(sys.value, rep.n, grid, tol, theoretical_bound(sys, rep.n))
    if rep.decomposition.is_zero():
        report.identically_zero = True
        return report
    hs = energy_grid(sys, grid, guard)
    vals = evaluate_on_grid(rep, hs)
    scale = float(np.max(np.abs(vals)))
    report.max_abs = scale
    M = lambda h: evaluate_representation(rep, h)  # noqa: E731

    brackets = []
    for k in range(grid - 1):
        a, b = vals[k], vals[k + 1]
        if a == 0.0:
            brackets.append(ZeroBracket(float(hs[k]), float(hs[k]), float(hs[k]), ODD, 0.0))
            continue
        if a * b < 0:
            root = brentq(M, hs[k], hs[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            brackets.append(ZeroBracket(float(hs[k]), float(hs[k + 1]), float(root), ODD, float(M(root))))
    absv = np.abs(vals)
    for k in range(1, grid - 1):
        if absv[k] <= absv[k - 1] and absv[k] <= absv[k + 1] and vals[k - 1] * vals[k + 1] > 0 and vals[k] * vals[k - 1] > 0:
            if absv[k] > 1e-2 * scale:
                continue
            sign = np.sign(vals[k])
            res = minimize_scalar(lambda h: sign * M(h), bounds=(hs[k - 1], hs[k + 1]), method="bounded",
                                  options={"xatol": 1e-14})
            if abs(res.fun) < even_tol * scale:
                brackets.append(ZeroBracket(float(hs[k - 1]), float(hs[k + 1]), float(res.x), EVEN, float(sign * res.fun)))
    report.brackets = sorted(brackets, key=lambda b: b.root)
    return report


def bt_second_derivative(h: float) -> float:
    """I_{0,0}''(h) for BT in closed form: x_b'' - x_a'' with x'' = 2x / (1 - x^2)^3."""
    oval = oval_endpoints(BT, h)
    d = endpoint_derivatives(BT, oval)
    return d["x_b''"] - d["x_a''"]


def bt_second_derivative_zero(grid: int = 512, guard: float = GUARD_FRACTION) -> tuple[float, tuple[float, float]]:
    """The unique energy where BT's I_{0,0}'' vanishes, with its bracket.

    Raises InvariantViolation unless exactly one sign change is seen on the
    guarded energy interval.
    """
    hs = energy_grid(BT, grid, guard)
    vals = np.array([bt_second_derivative(h) for h in hs])
    changes = [k for k in range(grid - 1) if vals[k] * vals[k + 1] <= 0]
    if len(changes) != 1:
        raise InvariantViolation(f"I_00'' has {len(changes)} sign changes on the guarded interval, expected 1")
    k = changes[0]
    root = brentq(bt_second_derivative, hs[k], hs[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return float(root), (float(hs[k]), float(hs[k + 1]))


def one_zero_perturbation(sys: SystemId, h_star: float, max_denominator: int = 2**20):
    """Perturbation with M = 2 (I_{1,0} - r I_{0,0}), r a rational close to I_{1,0}/I_{0,0} at h_star.

    g+ = x - r on the upper half-plane and g- = -(x - r) on the lower one, so
    the Melnikov function vanishes (to rounding of r) at h_star.
    """
    r = Fraction(abelian_integral(sys, 1, 0, h_star) / abelian_integral(sys, 0, 0, h_star)).limit_denominator(max_denominator)
    b = {(0, 0): -r, (1, 0): Fraction(1)}
    return Perturbation(n=1, b_plus=b, b_minus={k: -v for k, v in b.items()})
