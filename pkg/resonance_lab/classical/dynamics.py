# resonance_lab/classical/dynamics.py
# Classical flow of p = ξ² + V(x), interface classification, diam_E(Y) and the
# resonance-free strip predictor.

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from resonance_lab.errors import (
    FlowUniquenessError,
    GapConsistencyError,
    TrappingError,
    WindowAdmissibilityError,
)
from resonance_lab.model.potential import Potential, Side
from resonance_lab.semiclassical.quadrature import period, travel_time

GLANCING_TOL = 1e-12
FLOW_RTOL = 1e-12
FLOW_ATOL = 1e-13


class PointType(str, Enum):
    HYPERBOLIC = "hyperbolic"
    GLANCING = "glancing"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class InterfaceClass:
    y: float
    energy: float
    left: PointType
    right: PointType

    @property
    def kind(self) -> PointType:
        sides = (self.left, self.right)
        if PointType.ELLIPTIC in sides:
            return PointType.ELLIPTIC
        if PointType.GLANCING in sides:
            return PointType.GLANCING
        return PointType.HYPERBOLIC


def _point_type(E: float, v: float) -> PointType:
    gap = E - v
    if abs(gap) <= GLANCING_TOL * max(1.0, abs(E)):
        return PointType.GLANCING
    return PointType.HYPERBOLIC if gap > 0 else PointType.ELLIPTIC


def classify_interface(V: Potential, y: float, E: float) -> InterfaceClass:
    """Per-side classification at y ∈ Y from r = E - V(y∓)."""
    if not V.is_interface(y):
        raise ValueError(f"x={y} is not an interface of V (Y = {V.interfaces}).")
    return InterfaceClass(
        y=y,
        energy=E,
        left=_point_type(E, V.eval(y, 0, Side.LEFT)),
        right=_point_type(E, V.eval(y, 0, Side.RIGHT)),
    )


# --- Hamilton flow ---

@dataclass(frozen=True)
class FlowState:
    x: float
    xi: float
    t: float = 0.0


def energy(V: Potential, state: FlowState) -> float:
    """p = ξ² + V(x); at an interface V is taken on the side the motion enters."""
    if V.is_interface(state.x):
        side = Side.RIGHT if state.xi >= 0 else Side.LEFT
        return state.xi ** 2 + V.eval(state.x, 0, side)
    return state.xi ** 2 + V.eval(state.x)


def _region(V: Potential, x: float, moving_right: bool):
    """(lo, hi, shape or None) of the smooth region the motion enters from x."""
    L = V.support_right
    if x < 0.0 or (x == 0.0 and not moving_right):
        return -math.inf, 0.0, None
    if x > L or (x == L and moving_right):
        return L, math.inf, None
    for piece in V.pieces:
        inside = piece.left <= x < piece.right if moving_right else piece.left < x <= piece.right
        if inside:
            return piece.left, piece.right, piece.shape
    piece = V.pieces[-1]
    return piece.left, piece.right, piece.shape


def _boundary_event(boundary: float, direction: int):
    def crossing(_, y):
        return y[0] - boundary
    crossing.terminal = True
    crossing.direction = direction
    return crossing


def _check_crossing(V: Potential, state: FlowState) -> None:
    order = V.interface_order(state.x)
    if order < 2:
        raise FlowUniquenessError(
            f"Trajectory reaches interface x={state.x} with interface order {order} < 2; "
            "the flow is not unique past it. Use travel-time quadrature instead.",
            state,
        )
    logging.debug(f"Flow crosses interface x={state.x} at t={state.t:.12g}")


def _advance(V: Potential, state: FlowState, duration: float, stop_at: float | None = None
             ) -> tuple[FlowState, bool]:
    """
    Flows for ``duration`` (forward in time), crossing interfaces only where the
    field stays Lipschitz. Returns the end state and whether ``stop_at`` was hit.
    """
    x, xi, t = state.x, state.xi, state.t
    t_end = t + duration
    while t < t_end:
        lo, hi, shape = _region(V, x, xi >= 0)
        if shape is None:
            # free flight
            ahead = [y for y in (0.0, V.support_right, stop_at)
                     if y is not None and xi != 0 and (y - x) / (2 * xi) > 0]
            target = min(ahead, key=lambda y: (y - x) / (2 * xi), default=None)
            if target is None or (target - x) / (2 * xi) >= t_end - t:
                x, t = x + 2 * xi * (t_end - t), t_end
                break
            t, x = t + (target - x) / (2 * xi), target
        else:
            def rhs(_, y, shape=shape):
                return [2 * y[1], -float(shape.derivative(y[0], 1))]

            # leaving lo means moving down through it, leaving hi means moving up
            events = [_boundary_event(lo, -1), _boundary_event(hi, +1)]
            if stop_at is not None and lo < stop_at < hi:
                events.append(_boundary_event(stop_at, 0))
            solution = solve_ivp(rhs, (t, t_end), [x, xi], method="DOP853", rtol=FLOW_RTOL, atol=FLOW_ATOL,
                                 events=events)
            fired = [i for i, times in enumerate(solution.t_events) if len(times)]
            if not fired:
                x, xi, t = float(solution.y[0, -1]), float(solution.y[1, -1]), t_end
                break
            index = fired[0]
            t, xi = float(solution.t_events[index][0]), float(solution.y_events[index][0][1])
            x = float((lo, hi, stop_at)[index])
        if stop_at is not None and x == stop_at:
            return FlowState(x, xi, t), True
        _check_crossing(V, FlowState(x, xi, t))
    return FlowState(x, xi, t), False


def flow(V: Potential, state: FlowState, t: float) -> FlowState:
    """exp(t H_p) applied to ``state``: x' = 2ξ, ξ' = -V'(x)."""
    if t < 0:
        mirrored = FlowState(state.x, -state.xi, state.t)
        end, _ = _advance(V, mirrored, -t)
        return FlowState(end.x, -end.xi, state.t + t)
    return _advance(V, state, t)[0]


def traversal_time_by_flow(V: Potential, E: float, y_from: float, y_to: float) -> float:
    """Time for the trajectory of energy E leaving y_from towards y_to to reach it."""
    moving_right = y_to > y_from
    side = Side.RIGHT if moving_right else Side.LEFT
    gap = E - V.eval(y_from, 0, side)
    if gap <= 0:
        raise WindowAdmissibilityError(f"E={E} does not exceed V({y_from}) on the {side.value} side.")
    xi = math.sqrt(gap) * (1 if moving_right else -1)
    budget = 10.0 * (travel_time(V, E, y_from, y_to) + 1.0)
    end, reached = _advance(V, FlowState(y_from, xi), budget, stop_at=y_to)
    if not reached:
        raise TrappingError(f"Trajectory from {y_from} at E={E} never reached {y_to}.")
    return end.t


# --- diam_E(Y) ---

def turning_point(V: Potential, E: float, y: float, direction: int, samples: int = 257) -> float | None:
    """First x beyond y (direction ±1) where V(x) >= E, or None if the trajectory escapes."""
    pieces = V.pieces if direction > 0 else tuple(reversed(V.pieces))
    for piece in pieces:
        a, b = (max(piece.left, y), piece.right) if direction > 0 else (min(piece.right, y), piece.left)
        if (b - a) * direction <= 0:
            continue
        grid = np.linspace(a, b, samples)
        values = piece.shape(grid)
        if values[0] >= E:
            return float(a)
        above = np.flatnonzero(values >= E)
        if above.size:
            i = int(above[0])
            return float(brentq(lambda s: float(piece.shape(s)) - E, grid[i - 1], grid[i], xtol=1e-14))
    return None


def diam(V: Potential, E: float, Y: tuple[float, ...] | None = None) -> float:
    """
    Longest affine time between hyperbolic points of Y along one trajectory of energy E.

    Each hyperbolic y and each direction of departure gives one orbit; a turning
    point on the way sends it back through y. Orbits blocked on both sides are trapped.
    """
    Y = V.interfaces if Y is None else tuple(Y)
    hyperbolic = sorted(y for y in Y if classify_interface(V, y, E).kind == PointType.HYPERBOLIC)
    if len(hyperbolic) == 0:
        return 0.0
    best = 0.0
    for y in hyperbolic:
        for direction in (+1, -1):
            ahead = turning_point(V, E, y, direction)
            behind = turning_point(V, E, y, -direction)
            if ahead is not None and behind is not None:
                raise TrappingError(f"Energy {E} is trapped between {min(ahead, behind)} and {max(ahead, behind)}.")
            if ahead is None:
                reachable = [p for p in hyperbolic if (p - y) * direction >= 0]
                far = max(reachable, key=lambda p: abs(p - y))
                best = max(best, travel_time(V, E, y, far))
                continue
            # out to the turning point and back, then off the other way
            reachable = [p for p in hyperbolic if (p - y) * direction <= 0]
            far = max(reachable, key=lambda p: abs(p - y))
            time = 2 * travel_time(V, E, y, ahead) + travel_time(V, E, y, far)
            best = max(best, time)
    return best


# --- Resonance-free strip ---

@dataclass(frozen=True)
class GapReport:
    window: tuple[float, float]
    alpha: int
    orders: tuple[int, int]
    diam: float
    argmax_energy: float
    nu0_bound: float
    band_top: float
    samples: list[dict] = field(default_factory=list)
    consistent: bool = True

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "alpha": self.alpha,
            "orders": list(self.orders),
            "diam": self.diam,
            "argmax_energy": self.argmax_energy,
            "nu0_bound": self.nu0_bound if math.isfinite(self.nu0_bound) else None,
            "band_top": self.band_top,
            "consistent": self.consistent,
            "samples": self.samples,
        }


def gap_report(V: Potential, window: tuple[float, float], samples: int = 33, strict: bool = True) -> GapReport:
    """
    diam_I(Y) over I = window, the strip bound α/diam_I and the band top
    min_I (l+k)/(2T(E)). Some sampled E with (l+k)/(2T(E)) < α/diam_E raises
    GapConsistencyError when ``strict``; otherwise the report is marked inconsistent.
    """
    lo, hi = window
    top = V.sup()
    if not lo > top:
        raise WindowAdmissibilityError(f"Gap window [{lo}, {hi}] must lie above sup V = {top}.")
    k, l = V.vanishing_orders()
    alpha = min(k, l)
    energies = np.linspace(lo, hi, samples)
    table = []
    for E in energies:
        E = float(E)
        T = period(V, E)
        d = diam(V, E)
        band = (l + k) / (2 * T)
        bound = alpha / d if d > 0 else math.inf
        table.append({"E": E, "T": T, "diam": d, "band": band, "bound": bound})

    i = int(np.argmax([row["diam"] for row in table]))
    best_E, best = table[i]["E"], table[i]["diam"]
    left, right = energies[max(i - 1, 0)], energies[min(i + 1, samples - 1)]
    if right > left:
        polished = minimize_scalar(lambda E: -diam(V, E), bounds=(left, right), method="bounded",
                                   options={"xatol": 1e-10})
        if -polished.fun > best:
            best_E, best = float(polished.x), float(-polished.fun)

    violations = [row for row in table if row["band"] < row["bound"] - 1e-9 * max(1.0, row["band"])]
    if violations:
        worst = violations[0]
        message = f"(l+k)/(2T) = {worst['band']:.6g} < α/diam = {worst['bound']:.6g} at E={worst['E']:.6g}."
        if strict:
            raise GapConsistencyError(message)
        logging.warning(f"Gap report inconsistent: {message}")
    report = GapReport(
        window=(lo, hi),
        alpha=alpha,
        orders=(k, l),
        diam=best,
        argmax_energy=best_E,
        nu0_bound=alpha / best if best > 0 else math.inf,
        band_top=min(row["band"] for row in table),
        samples=table,
        consistent=not violations,
    )
    logging.info(f"Gap on [{lo}, {hi}]: diam={best:.6g}, ν0 bound={report.nu0_bound:.6g}, band top={report.band_top:.6g}")
    return report


def empirical_band_top(computed, h: float) -> float | None:
    """min_n (-Im z_n) / (h log(1/h)) over computed roots (anything with a .z)."""
    if not computed:
        return None
    return min(-root.z.imag for root in computed) / (h * math.log(1.0 / h))


if __name__ == '__main__':
    well = Potential.constant(1.0)
    T = diam(well, 2.0)
    print(f"{'✅' if abs(T - 0.5) < 1e-10 else '❌'} diam for V≡1 at E=2: {T}")
