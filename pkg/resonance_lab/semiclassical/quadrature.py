# resonance_lab/semiclassical/quadrature.py
# Action, period and complex phase integrals over [0, L], piece by piece.

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from resonance_lab import config
from resonance_lab.errors import (
    BranchCutError,
    NoConvergenceError,
    OutOfRangeError,
    WindowAdmissibilityError,
)
from resonance_lab.model.potential import Potential


def _quad_real(f, a: float, b: float) -> float:
    value, _ = quad(f, a, b, epsabs=config.QUAD_EPSABS, epsrel=config.QUAD_EPSABS, limit=config.QUAD_LIMIT)
    return value


def _quad_complex(f, a: float, b: float) -> complex:
    re = _quad_real(lambda s: f(s).real, a, b)
    im = _quad_real(lambda s: f(s).imag, a, b)
    return complex(re, im)


def _over_pieces(V: Potential, integrand, lo: float, hi: float, integrate=_quad_real):
    """Sum of integrals over [lo, hi] ∩ each piece; quadrature never straddles an interface."""
    total = 0.0
    for piece in V.pieces:
        a, b = max(lo, piece.left), min(hi, piece.right)
        if b > a:
            shape = piece.shape
            total += integrate(lambda s, shape=shape: integrand(shape(s)), a, b)
    return total


def _require_above_sup(V: Potential, E: float) -> None:
    top = V.sup()
    if not E > top:
        raise WindowAdmissibilityError(f"Energy {E} must lie strictly above sup V = {top}.")


def action(V: Potential, E: float) -> float:
    """S(E) = ∫_0^L (E - V(s))^{1/2} ds."""
    _require_above_sup(V, E)
    return _over_pieces(V, lambda v: np.sqrt(E - v), 0.0, V.support_right)


def period(V: Potential, E: float) -> float:
    """T(E) = ∫_0^L ds / (2 (E - V(s))^{1/2}) = dS/dE."""
    _require_above_sup(V, E)
    return _over_pieces(V, lambda v: 0.5 / np.sqrt(E - v), 0.0, V.support_right)


def travel_time(V: Potential, E: float, lo: float, hi: float) -> float:
    """
    Affine travel time ∫_lo^hi ds / (2 (E - V(s))^{1/2}) at energy E.

    The endpoints may be turning points; E must exceed V strictly inside.
    """
    lo, hi = min(lo, hi), max(lo, hi)
    if E <= 0:
        raise WindowAdmissibilityError(f"Travel times need E > 0, got {E}.")
    L = V.support_right
    total = 0.0
    inner_lo, inner_hi = max(lo, 0.0), min(hi, L)
    if inner_hi > inner_lo:
        total += _over_pieces(V, lambda v: 0.5 / np.sqrt(E - v), inner_lo, inner_hi)
    # free flight outside the support
    outside = max(0.0, min(hi, 0.0) - lo) + max(0.0, hi - max(lo, L))
    total += outside * 0.5 / np.sqrt(E)
    if not np.isfinite(total):
        raise BranchCutError(f"E={E} does not exceed V on ({lo}, {hi}); travel time undefined.")
    return float(total)


def _complex_integral(V: Potential, x: float, z: complex, integrand) -> complex:
    z = complex(z)
    L = V.support_right
    inside = min(max(x, 0.0), L)
    if inside > 0.0:
        top = V.sup_on(0.0, inside)
        if not z.real > top:
            raise BranchCutError(f"Re z = {z.real} does not exceed max V = {top} on [0, {inside}].")
    total = _over_pieces(V, integrand, 0.0, inside, integrate=_quad_complex) if inside > 0.0 else 0j
    # V vanishes outside [0, L]
    exterior = x - inside
    if exterior != 0.0:
        total += integrand(0.0) * exterior
    return complex(total)


def complex_phase(V: Potential, x: float, z: complex) -> complex:
    """φ(x) = ∫_0^x (z - V(s))^{1/2} ds, principal branch."""
    return _complex_integral(V, x, z, lambda v: np.sqrt(complex(z) - v))


def complex_period(V: Potential, x: float, z: complex) -> complex:
    """∂_z φ(x) = ∫_0^x ds / (2 (z - V(s))^{1/2})."""
    return _complex_integral(V, x, z, lambda v: 0.5 / np.sqrt(complex(z) - v))


def invert_action(V: Potential, s: float, window: tuple[float, float], seed: float | None = None) -> float:
    """
    Solves S(E) = s for E in [a, b].

    Newton on S(E) - s with derivative T(E), kept inside a shrinking bisection
    bracket so a wild step falls back to the midpoint.
    """
    a, b = window
    Sa, Sb = action(V, a), action(V, b)
    if not (Sa - config.ACTION_TOL <= s <= Sb + config.ACTION_TOL):
        raise OutOfRangeError(f"Action {s} outside [S(a), S(b)] = [{Sa}, {Sb}].")
    lo, hi = a, b
    E = seed if seed is not None and a <= seed <= b else a + (s - Sa) / (Sb - Sa) * (b - a)
    residual = action(V, E) - s
    for iteration in range(60):
        if abs(residual) <= 0.5 * config.ACTION_TOL:
            break
        if residual > 0:
            hi = E
        else:
            lo = E
        candidate = E - residual / period(V, E)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)
        if abs(candidate - E) <= 1e-16 * max(1.0, abs(E)):
            E = candidate
            break
        E = candidate
        residual = action(V, E) - s
        logging.debug(f"invert_action iteration {iteration}: E={E:.16g}, residual={residual:.3e}")
    residual = action(V, E) - s
    if abs(residual) > config.ACTION_TOL:
        raise NoConvergenceError(
            f"invert_action did not reach |S(E) - s| <= {config.ACTION_TOL}",
            {"s": s, "E": E, "residual": residual},
        )
    return E


@dataclass(frozen=True)
class ActionTable:
    """Cached (E, S(E), T(E)) nodes on [a, b]; S is inverted by monotone cubic interpolation."""

    window: tuple[float, float]
    energies: np.ndarray
    actions: np.ndarray
    periods: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.actions) <= 0):
            raise ValueError("Action table is not strictly increasing.")
        if np.any(self.periods <= 0):
            raise ValueError("Period must be positive on the window.")

    @property
    def action_range(self) -> tuple[float, float]:
        return float(self.actions[0]), float(self.actions[-1])

    def invert(self, s):
        """Approximate S^{-1}(s); exact callers polish with invert_action."""
        return PchipInterpolator(self.actions, self.energies)(s)


def build_action_table(V: Potential, window: tuple[float, float], nodes: int = 65) -> ActionTable:
    a, b = window
    energies = np.linspace(a, b, nodes)
    logging.info(f"Building action table on [{a}, {b}] with {nodes} nodes")
    return ActionTable(
        window=(a, b),
        energies=energies,
        actions=np.array([action(V, E) for E in energies]),
        periods=np.array([period(V, E) for E in energies]),
    )
