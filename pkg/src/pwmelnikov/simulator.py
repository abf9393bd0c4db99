"""Direct simulation of the perturbed piecewise systems and their return map.

The section is y = 0 at the left crossing x_a, where the unperturbed field
points into the upper half-plane. One revolution runs along the upper
subsystem to the right crossing and back along the lower subsystem.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import PreconditionError, SimulationError
from .systems import LV, Perturbation, PlanarState, Side, SystemId, oval_endpoints, section_energy, unperturbed_field

RTOL = 1e-12
ATOL = 1e-13
LV_ESCAPE_GUARD = 1e-6
MAX_EPS = 0.1
SECTION_GUARD = 0.05


@dataclass(frozen=True)
class Crossing:
    t: float
    x: float
    y: float
    from_side: Side
    to_side: Side


@dataclass
class Trajectory:
    t: list[float] = field(default_factory=list)
    x: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    side: list[Side] = field(default_factory=list)
    events: list[Crossing] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "side"])
        for row in zip(self.t, self.x, self.y, self.side):
            w.writerow([repr(row[0]), repr(row[1]), repr(row[2]), row[3].value])
        return buf.getvalue()


def _rhs(sys: SystemId, p: Perturbation, eps: float, side: Side):
    def f(_t, z):
        x, y = z
        dx, dy = unperturbed_field(sys, x, y)
        if eps:
            dx += eps * p.f(side, x, y)
            dy += eps * p.g(side, x, y)
        return [dx, dy]

    return f


def _phase(sys, p, eps, side, z0, t0, t_max, record):
    def crossing(_t, z):
        return z[1]

    crossing.terminal = True
    crossing.direction = -1.0 if side is Side.UPPER else 1.0
    events = [crossing]
    if sys is LV:
        def escape(_t, z):
            return z[0] - (1.0 / 3.0 + LV_ESCAPE_GUARD)

        escape.terminal = True
        events.append(escape)
    sol = solve_ivp(_rhs(sys, p, eps, side), (t0, t0 + t_max), z0, method="DOP853", rtol=RTOL, atol=ATOL,
                    events=events, dense_output=False)
    if sol.status == -1:
        raise SimulationError(f"integration failed: {sol.message}")
    if sys is LV and len(sol.t_events[1]):
        raise SimulationError("trajectory left the period annulus (x reached 1/3)")
    if not len(sol.t_events[0]):
        raise SimulationError(f"no return to y = 0 within t = {t_max}")
    if record is not None:
        record.t.extend(sol.t.tolist())
        record.x.extend(sol.y[0].tolist())
        record.y.extend(sol.y[1].tolist())
        record.side.extend([side] * len(sol.t))
    te = float(sol.t_events[0][0])
    xe, ye = (float(v) for v in sol.y_events[0][0])
    return te, xe, ye


def integrate_piecewise(sys: SystemId, p: Perturbation, eps: float, start: PlanarState, max_events: int = 2,
                        t_max: float = 1e3, record: bool = True) -> Trajectory:
    """Integrate across y = 0, switching between the half-plane subsystems at each crossing."""
    if abs(eps) > MAX_EPS:
        raise PreconditionError(f"|eps| must not exceed {MAX_EPS}")
    side = start.side
    if side is Side.ON_SECTION:
        dy = unperturbed_field(sys, start.x, 0.0)[1] + eps * p.g(Side.UPPER, start.x, 0.0)
        if dy == 0:
            raise PreconditionError("start is a tangency of the field with the section")
        side = Side.UPPER if dy > 0 else Side.LOWER
    traj = Trajectory()
    z = [float(start.x), float(start.y)]
    t = 0.0
    for _ in range(max_events):
        t, x, y = _phase(sys, p, eps, side, z, t, t_max, traj if record else None)
        nxt = Side.LOWER if side is Side.UPPER else Side.UPPER
        traj.events.append(Crossing(t, x, y, side, nxt))
        side = nxt
        z = [x, 0.0]
    return traj


@dataclass(frozen=True)
class ReturnMapSample:
    x_start: float
    x_return: float
    h_start: float
    h_return: float
    x_right: float

    @property
    def displacement(self) -> float:
        return self.x_return - self.x_start

    @property
    def energy_change(self) -> float:
        return self.h_return - self.h_start


def poincare_return(sys: SystemId, p: Perturbation, eps: float, x_start: float, t_max: float = 1e3) -> ReturnMapSample:
    """One revolution from (x_start, 0): upper subsystem, then lower subsystem."""
    traj = integrate_piecewise(sys, p, eps, PlanarState(x_start, 0.0, Side.UPPER), 2, t_max, record=False)
    right, back = traj.events
    return ReturnMapSample(
        float(x_start), back.x,
        float(section_energy(sys, x_start)), float(section_energy(sys, back.x)),
        right.x,
    )


@dataclass(frozen=True)
class LimitCycleFinding:
    eps: float
    fixed_x: float
    h_cycle: float
    residual: float


def section_interval(sys: SystemId, guard: float = SECTION_GUARD) -> tuple[float, float]:
    """Left-crossing abscissae spanned by the guarded period annulus."""
    lo, hi = sys.guarded_interval(guard)
    a = oval_endpoints(sys, lo).x_a
    b = oval_endpoints(sys, hi).x_a
    return (min(a, b), max(a, b))


def find_limit_cycles(sys: SystemId, p: Perturbation, eps: float, x_interval: tuple[float, float] | None = None,
                      samples: int = 40, xtol: float = 1e-12) -> list[LimitCycleFinding]:
    """Fixed points of the return map from sign changes of x_return - x_start.

    Samples whose orbit escapes the period annulus are skipped.
    """
    if eps == 0:
        raise PreconditionError("eps must be nonzero to search for limit cycles")
    if x_interval is None:
        x_interval = section_interval(sys)
    xs = np.linspace(x_interval[0], x_interval[1], samples)
    disp = lambda x: poincare_return(sys, p, eps, float(x)).displacement  # noqa: E731

    def sampled(x):
        # starts whose orbit leaves the annulus carry no fixed point
        try:
            return disp(x)
        except SimulationError:
            return None

    d = [sampled(x) for x in xs]
    out = []
    for k in range(samples - 1):
        if d[k] is None or d[k + 1] is None:
            continue
        if d[k] == 0.0 or d[k] * d[k + 1] < 0:
            root = float(xs[k]) if d[k] == 0.0 else brentq(disp, xs[k], xs[k + 1], xtol=xtol)
            sample = poincare_return(sys, p, eps, root)
            out.append(LimitCycleFinding(eps, root, sample.h_start, abs(sample.displacement)))
    return out
