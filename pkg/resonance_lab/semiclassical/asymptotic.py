# resonance_lab/semiclassical/asymptotic.py
# Closed-form resonance asymptotics, the Bohr-Sommerfeld index set and the
# quantization-condition solvers (simplified and full WKB).

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from resonance_lab import config
from resonance_lab.errors import DegenerateOrderError, IndexNotInSetError, NoConvergenceError
from resonance_lab.model.potential import Potential, Side
from resonance_lab.semiclassical.quadrature import (
    ActionTable,
    action,
    complex_period,
    complex_phase,
    invert_action,
    period,
)
from resonance_lab.semiclassical.wkb import (
    default_order,
    phase_corrections,
    reflection_factors,
    require_endpoint_interfaces,
)


class Tier(str, Enum):
    CLOSED_FORM = "closed_form"
    QC_NEWTON = "qc_newton"
    QC_WKB = "qc_wkb"


@dataclass(frozen=True)
class ResonancePrediction:
    n: int
    E_n: float
    w_n: complex
    z_n: complex
    tier: Tier
    h: float


def log_inverse(h: float) -> float:
    """log(1/h), natural logarithm."""
    return math.log(1.0 / h)


def endpoint_product(V: Potential) -> float:
    """V^(k)(0+) * V^(l)(L-)."""
    require_endpoint_interfaces(V)
    k, l = V.vanishing_orders()
    product = V.eval(0.0, k, Side.RIGHT) * V.eval(V.support_right, l, Side.LEFT)
    if product == 0.0:
        raise DegenerateOrderError("V^(k)(0+) * V^(l)(L-) vanishes; the phase shift is undefined.")
    return product


def phase_shift(V: Potential) -> float:
    """φ = arg(V^(k)(0+) V^(l)(L-)) / 2π, principal argument: 0 or 1/2 for real V."""
    return float(np.angle(endpoint_product(V))) / (2 * math.pi)


def index_offset(V: Potential) -> float:
    """
    (k-l)/4 + φ. The phase of i^{l-k} V^(k)(0+)V^(l)(L-) e^{2iS/h} is then a
    multiple of 2π, so F(w_n, E_n, h) = 0 for every n in N(h). For l-k odd the
    reading (l-k)/4 + φ would move every E_n by half a lattice step.
    """
    k, l = V.vanishing_orders()
    return (k - l) / 4 + phase_shift(V)


def index_set(V: Potential, window: tuple[float, float], h: float,
              table: ActionTable | None = None) -> list[int]:
    """N(h) = {n : πh(n + offset) ∈ [S(a), S(b)]}, offset from index_offset."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}.")
    a, b = window
    Sa, Sb = table.action_range if table is not None else (action(V, a), action(V, b))
    offset = index_offset(V)
    first = math.ceil(Sa / (math.pi * h) - offset)
    last = math.floor(Sb / (math.pi * h) - offset)
    indices = list(range(first, last + 1))
    if not indices:
        logging.warning(f"Index set N(h) is empty for h={h} on window [{a}, {b}].")
    return indices


def quantized_action(V: Potential, n: int, h: float) -> float:
    return math.pi * h * (n + index_offset(V))


def predict(V: Potential, n: int, h: float, window: tuple[float, float],
            table: ActionTable | None = None) -> ResonancePrediction:
    """
    z_n = E_n + w_n with E_n = S^{-1}(πh(n + offset)) and

        w_n = -i(l+k) h log(1/h) / (2T) + i h (log|V^(k)(0+)V^(l)(L-)| - (l+k+4)/2 log(4E_n)) / (2T)
    """
    if n not in index_set(V, window, h, table):
        raise IndexNotInSetError(f"n={n} is not in N(h) for h={h} on window {window}.")
    k, l = V.vanishing_orders()
    s = quantized_action(V, n, h)
    seed = float(table.invert(s)) if table is not None else None
    E = invert_action(V, s, window, seed=seed)
    T = period(V, E)
    magnitude = abs(endpoint_product(V))
    w = (
        -1j * (l + k) * h * log_inverse(h) / (2 * T)
        + 1j * h * (math.log(magnitude) - 0.5 * (l + k + 4) * math.log(4 * E)) / (2 * T)
    )
    return ResonancePrediction(n=n, E_n=E, w_n=w, z_n=E + w, tier=Tier.CLOSED_FORM, h=h)


def predict_all(V: Potential, window: tuple[float, float], h: float, tier: Tier | str = Tier.CLOSED_FORM,
                table: ActionTable | None = None, K: int | None = None) -> list[ResonancePrediction]:
    tier = Tier(tier)
    predictions = [predict(V, n, h, window, table) for n in index_set(V, window, h, table)]
    if tier == Tier.QC_NEWTON:
        predictions = [solve_qc(V, h, p) for p in predictions]
    elif tier == Tier.QC_WKB:
        predictions = [solve_qc_full(V, h, p, K) for p in predictions]
    logging.info(f"Predicted {len(predictions)} resonances at h={h} (tier {tier.value})")
    return predictions


def localizer(V: Potential, w: complex, E: float, h: float) -> complex:
    """F(w,E,h) = i^{l-k} h^{l+k} (2E^{1/2})^{-l-k-4} V^(k)(0+)V^(l)(L-) e^{2i(S(E)+wT(E))/h} - 1."""
    k, l = V.vanishing_orders()
    prefactor = 1j ** (l - k) * h ** (l + k) * (2 * math.sqrt(E)) ** (-l - k - 4) * endpoint_product(V)
    return complex(prefactor * np.exp(2j * (action(V, E) + w * period(V, E)) / h) - 1)


def localizer_derivative(V: Potential, w: complex, E: float, h: float) -> complex:
    """∂_w F = (F + 1) 2i T(E) / h."""
    return (localizer(V, w, E, h) + 1) * 2j * period(V, E) / h


def qc_function(V: Potential, z: complex, h: float) -> tuple[complex, complex]:
    """
    G(z) = i^{l-k} h^{l+k} (2z^{1/2})^{-l-k-4} V^(k)(0+)V^(l)(L-) e^{2iφ(L;z)/h} - 1 and G'(z).
    """
    k, l = V.vanishing_orders()
    z = complex(z)
    L = V.support_right
    root = np.sqrt(z)
    power = l + k + 4
    prefactor = 1j ** (l - k) * h ** (l + k) * (2 * root) ** (-power) * endpoint_product(V)
    value = prefactor * np.exp(2j * complex_phase(V, L, z) / h)
    derivative = value * (-power / (2 * z) + 2j * complex_period(V, L, z) / h)
    return complex(value - 1), complex(derivative)


def _newton(function, z0: complex, tol: float, max_iter: int, label: str) -> tuple[complex, int, float]:
    z = complex(z0)
    history = []
    for iteration in range(1, max_iter + 1):
        value, derivative = function(z)
        history.append(abs(value))
        if abs(value) <= tol:
            return z, iteration - 1, abs(value)
        step = value / derivative
        z = z - step
        logging.debug(f"{label} Newton {iteration}: z={z:.14g}, |G|={abs(value):.3e}")
        if abs(step) <= 1e-13 * max(1.0, abs(z)):
            value, _ = function(z)
            return z, iteration, abs(value)
    raise NoConvergenceError(
        f"{label}: Newton did not converge in {max_iter} iterations",
        {"z0": z0, "z": z, "residual_history": history},
    )


def _noise_floor(V: Potential, z: complex, h: float, tol: float) -> float:
    # exp(2iφ/h) carries the quadrature error of φ amplified by 2/h
    return tol * max(1.0, abs(complex_phase(V, V.support_right, z)) / h)


def solve_qc(V: Potential, h: float, seed: ResonancePrediction, tol: float = config.ZERO_TOL,
             max_iter: int = config.NEWTON_MAX_ITER) -> ResonancePrediction:
    """Newton refinement of a prediction on the simplified quantization condition G(z) = 0."""
    floor = _noise_floor(V, seed.z_n, h, tol)
    z, iterations, residual = _newton(lambda z: qc_function(V, z, h), seed.z_n, floor, max_iter,
                                      f"qc n={seed.n}")
    logging.debug(f"solve_qc n={seed.n}: {iterations} iterations, |G|={residual:.3e}")
    return replace(seed, z_n=z, w_n=z - seed.E_n, tier=Tier.QC_NEWTON)


def full_qc_function(V: Potential, z: complex, h: float, K: int | None = None) -> complex:
    """R_+(z) R_-(z) e^{i(φ_+(L) + φ_-(L))/h} - 1 with psi_± truncated at order K."""
    K = default_order(V) if K is None else K
    reflect_plus, reflect_minus = reflection_factors(V, z, h, K)
    integrals = phase_corrections(V, z, K)
    powers = h ** np.arange(K + 1)
    total_phase = np.dot(powers, integrals[+1] + integrals[-1])
    return complex(reflect_plus * reflect_minus * np.exp(1j * total_phase / h) - 1)


def solve_qc_full(V: Potential, h: float, seed: ResonancePrediction, K: int | None = None,
                  tol: float = config.ZERO_TOL, max_iter: int = config.NEWTON_MAX_ITER) -> ResonancePrediction:
    """Newton on the unsimplified quantization condition; derivative by central differences in z."""

    def with_derivative(z):
        step = 1e-7 * max(1.0, abs(z))
        value = full_qc_function(V, z, h, K)
        forward = full_qc_function(V, z + step, h, K)
        backward = full_qc_function(V, z - step, h, K)
        return value, (forward - backward) / (2 * step)

    floor = _noise_floor(V, seed.z_n, h, tol)
    z, iterations, residual = _newton(with_derivative, seed.z_n, floor, max_iter, f"full qc n={seed.n}")
    logging.debug(f"solve_qc_full n={seed.n}: {iterations} iterations, |Q|={residual:.3e}")
    return replace(seed, z_n=z, w_n=z - seed.E_n, tier=Tier.QC_WKB)


def spacing_constant(predictions: list) -> float:
    """min over m != n of |z_n - z_m| / (h |n - m|); predictions need .n, .z_n and .h."""
    best = math.inf
    for i, first in enumerate(predictions):
        for second in predictions[i + 1:]:
            gap = abs(first.n - second.n)
            if gap:
                best = min(best, abs(first.z_n - second.z_n) / (first.h * gap))
    return best


def depth_band(V: Potential, window: tuple[float, float], samples: int = 33) -> tuple[float, float]:
    """Range of ν(E) = (l+k)/(2T(E)) over the window."""
    k, l = V.vanishing_orders()
    nus = [(l + k) / (2 * period(V, E)) for E in np.linspace(*window, samples)]
    return min(nus), max(nus)


def default_depth_multiplier(V: Potential, window: tuple[float, float], h: float) -> float:
    """
    M such that Ω_M(h) covers the predicted band with margin:
    (l+k)/(2 min T) + 1 plus the O(h) term of z_n measured in units of h log(1/h).
    """
    k, l = V.vanishing_orders()
    a, b = window
    magnitude = abs(endpoint_product(V))
    base = (l + k) / (2 * min(period(V, a), period(V, b))) + 1.0
    offset = 0.0
    for E in np.linspace(a, b, 17):
        correction = -(math.log(magnitude) - 0.5 * (l + k + 4) * math.log(4 * E)) / (2 * period(V, E))
        offset = max(offset, correction / log_inverse(h))
    return base + offset
