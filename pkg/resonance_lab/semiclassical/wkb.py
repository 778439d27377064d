# resonance_lab/semiclassical/wkb.py
# Exponential-form WKB series psi_{±,j}, evaluated through endpoint jets.

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from resonance_lab.errors import BranchCutError, JetDepthError, PotentialError
from resonance_lab.model.potential import Potential, Side
from resonance_lab.semiclassical.jets import Jet
from resonance_lab.semiclassical.quadrature import complex_phase

SIGNS = (+1, -1)


def require_endpoint_interfaces(V: Potential) -> None:
    """The endpoint-jet machinery needs Y = {0, L}."""
    if len(V.pieces) != 1:
        raise PotentialError(
            f"Interior interfaces {V.interfaces[1:-1]} are not supported here; "
            "resonance asymptotics need a single smooth piece on [0, L]."
        )


def default_order(V: Potential) -> int:
    k, l = V.vanishing_orders()
    return max(k, l) + 1


def _psi0_jet(V: Potential, z: complex, x0: float, side: Side, depth: int) -> Jet:
    z = complex(z)
    v_jet = Jet(x0, side.value, V.jet(x0, side, depth))
    if not (z - v_jet.value).real > 0:
        raise BranchCutError(f"Re(z - V({x0}{side.value[0]})) <= 0 for z={z}; psi_0 would vanish or cross the cut.")
    return (z - v_jet).sqrt()


def wkb_jets(V: Potential, z: complex, x0: float, side: Side | str, K: int,
             sign: int = +1, depth: int | None = None) -> list[Jet]:
    """
    Jets of psi_{sign,j} at x0 (one-sided), j = 0..K.

        psi_k = sign * i/(2 psi_0) d/dx psi_{k-1} - 1/(2 psi_0) sum_{j=1}^{k-1} psi_j psi_{k-j}

    V is expanded to degree ``depth`` (default 2K); psi_j comes back with degree depth - j.
    """
    side = Side(side)
    depth = 2 * K if depth is None else depth
    if K < 0:
        raise ValueError(f"Truncation order must be nonnegative, got {K}.")
    if depth < K:
        raise JetDepthError(f"V jet of degree {depth} cannot support {K} recursion levels.")
    psi0 = _psi0_jet(V, z, x0, side, depth)
    inverse = (2 * psi0).reciprocal()
    psis = [psi0]
    for k in range(1, K + 1):
        term = sign * 1j * inverse * psis[k - 1].derivative()
        if k > 1:
            convolution = sum((psis[j] * psis[k - j] for j in range(2, k)), psis[1] * psis[k - 1])
            term = term - inverse * convolution
        psis.append(term)
    return psis


def interior_jets(V: Potential, z: complex, x: float, K: int, sign: int = +1) -> list[Jet]:
    if V.is_interface(x):
        raise ValueError(f"x={x} is an interface; use wkb_jets with an explicit side.")
    return wkb_jets(V, z, x, Side.RIGHT, K, sign)


@dataclass(frozen=True)
class WkbSeries:
    """Per-order endpoint values psi_{±,j}(0+), psi_{±,j}(L-), j = 0..K."""

    z: complex
    order: int
    plus_at_0: np.ndarray
    plus_at_L: np.ndarray
    minus_at_0: np.ndarray
    minus_at_L: np.ndarray
    orders: tuple[int, int] = field(default=(0, 0))

    @staticmethod
    def _assemble(values: np.ndarray, h: float) -> complex:
        return complex(np.polynomial.polynomial.polyval(h, values))

    def psi_plus_L(self, h: float) -> complex:
        return self._assemble(self.plus_at_L, h)

    def psi_minus_0(self, h: float) -> complex:
        return self._assemble(self.minus_at_0, h)


def endpoint_values(V: Potential, z: complex, K: int | None = None) -> WkbSeries:
    """Endpoint coefficients; the h-polynomial is assembled by callers."""
    require_endpoint_interfaces(V)
    k, l = V.vanishing_orders()
    K = default_order(V) if K is None else K
    if K < max(k, l):
        raise ValueError(f"Truncation order K={K} is below max(k, l)={max(k, l)}.")
    L = V.support_right

    def values(x0, side, sign):
        return np.array([jet.value for jet in wkb_jets(V, z, x0, side, K, sign)])

    return WkbSeries(
        z=complex(z),
        order=K,
        plus_at_0=values(0.0, Side.RIGHT, +1),
        plus_at_L=values(L, Side.LEFT, +1),
        minus_at_0=values(0.0, Side.RIGHT, -1),
        minus_at_L=values(L, Side.LEFT, -1),
        orders=(k, l),
    )


@dataclass(frozen=True)
class VanishingReport:
    endpoint: float
    order: int
    computed: tuple[complex, complex]
    predicted: tuple[complex, complex]
    relative_error: float
    lower_orders_max: float
    # False for order 0, where the closed form is only the leading term in V/z.
    exact: bool


def predicted_endpoint_value(z: complex, order: int, derivative: float, sign: int) -> complex:
    """-i^{±k} (2 z^{1/2})^{-k-1} V^{(k)}(x0)."""
    return -(1j ** (sign * order)) * (2 * np.sqrt(complex(z))) ** (-order - 1) * derivative


def verify_psiatvanishing(V: Potential, z: complex, endpoint: str | float) -> VanishingReport:
    """Compares the recursion at an endpoint against the closed form for its vanishing order."""
    L = V.support_right
    at_left = endpoint in ("left", 0, 0.0)
    x0, side = (0.0, Side.RIGHT) if at_left else (L, Side.LEFT)
    k, l = V.vanishing_orders()
    order = k if at_left else l
    derivative = V.eval(x0, order, side)
    computed, predicted, lower = [], [], 0.0
    for sign in SIGNS:
        jets = wkb_jets(V, z, x0, side, max(order, 1), sign)
        if order == 0:
            computed.append(jets[0].value - np.sqrt(complex(z)))
        else:
            computed.append(jets[order].value)
            lower = max([lower] + [abs(jets[j].value) for j in range(1, order)])
        predicted.append(predicted_endpoint_value(z, order, derivative, sign))
    error = max(abs(c - p) / abs(p) for c, p in zip(computed, predicted))
    logging.debug(f"psi at vanishing point x0={x0}, order {order}: relative error {error:.3e}")
    return VanishingReport(
        endpoint=x0,
        order=order,
        computed=tuple(computed),
        predicted=tuple(predicted),
        relative_error=float(error),
        lower_orders_max=float(lower),
        exact=order > 0,
    )


def phase_corrections(V: Potential, z: complex, K: int, nodes: int = 48) -> dict[int, np.ndarray]:
    """
    ∫_0^L psi_{±,j}, j = 0..K, keyed by sign.

    j = 0 is the complex phase, j = 1 is ±(i/2) log(psi_0(L-)/psi_0(0+)),
    higher orders use Gauss-Legendre on interior jets.
    """
    require_endpoint_interfaces(V)
    z = complex(z)
    L = V.support_right
    phase = complex_phase(V, L, z)
    log_ratio = np.log(np.sqrt(z - V.eval(L, 0, Side.LEFT)) / np.sqrt(z - V.eval(0.0, 0, Side.RIGHT)))
    out = {}
    if K >= 2:
        t, w = leggauss(nodes)
        panels = max(1, math.ceil(L / 0.25))
        edges = np.linspace(0.0, L, panels + 1)
    for sign in SIGNS:
        integrals = np.zeros(K + 1, dtype=complex)
        integrals[0] = phase
        if K >= 1:
            integrals[1] = sign * 0.5j * log_ratio
        if K >= 2:
            for a, b in zip(edges, edges[1:]):
                xs = 0.5 * (b - a) * t + 0.5 * (a + b)
                weights = 0.5 * (b - a) * w
                for x, weight in zip(xs, weights):
                    jets = wkb_jets(V, z, float(x), Side.RIGHT, K, sign, depth=K)
                    for j in range(2, K + 1):
                        integrals[j] += weight * jets[j].value
        out[sign] = integrals
    return out


def reflection_factors(V: Potential, z: complex, h: float, K: int | None = None) -> tuple[complex, complex]:
    """((psi_+(L) - z^{1/2})/(psi_+(L) + z^{1/2}), (psi_-(0) - z^{1/2})/(psi_-(0) + z^{1/2}))."""
    series = endpoint_values(V, z, K)
    root = np.sqrt(complex(z))
    plus, minus = series.psi_plus_L(h), series.psi_minus_0(h)
    return complex((plus - root) / (plus + root)), complex((minus - root) / (minus + root))
