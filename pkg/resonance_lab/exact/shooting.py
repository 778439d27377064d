# resonance_lab/exact/shooting.py
# Exact outgoing solutions of (P - z)u = 0 by shooting across [0, L].
#
# State is (u, v) with v = h u', so hD u = v/i and the system is
#     u' = v/h,   v' = (V - z) u / h,
# integrated together with its z-variation (du, dv) for Newton derivatives.

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from resonance_lab import config
from resonance_lab.errors import IntegrationBudgetError, NoConvergenceError, WindowAdmissibilityError
from resonance_lab.model.potential import Potential


@dataclass(frozen=True)
class ShootState:
    """Solution data at x; true values are stored values times exp(log_scale)."""

    x: float
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    log_scale: np.ndarray
    evaluations: int = 0


@dataclass(frozen=True)
class OutgoingResidual:
    """
    (hD u(L) - z^{1/2} u(L)) for the outgoing-left solution, divided by
    exp(log_scale) * max(|u(L)|, |v(L)|). The divisor is positive, so zeros and
    the argument are those of the holomorphic residual.
    """

    z: complex
    value: complex
    derivative_dz: complex
    scale_exponent: complex


def _check_inputs(V: Potential, zs: np.ndarray, h: float, tol: float) -> None:
    low, high = config.H_RANGE
    if not low <= h <= high:
        raise ValueError(f"h={h} outside the supported range [{low}, {high}].")
    if tol < 1e-13:
        raise ValueError(f"Integration tolerance {tol} is below 1e-13.")
    top = V.sup()
    if np.any(zs.real <= top):
        raise WindowAdmissibilityError(f"Every Re z must exceed sup V = {top}; got min Re z = {zs.real.min()}.")


def _chunk_edges(V: Potential, h: float) -> list[float]:
    """Piece boundaries are mandatory nodes; long pieces are chunked for renormalization."""
    edges = [0.0]
    span = config.RENORM_INTERVAL * h
    for piece in V.pieces:
        count = max(1, math.ceil((piece.right - piece.left) / span))
        edges.extend(np.linspace(piece.left, piece.right, count + 1)[1:].tolist())
    return edges


def integrate_batch(V: Potential, zs, h: float, tol: float = config.SHOOT_RTOL,
                    initial: tuple | None = None,
                    threshold: float = config.RENORM_THRESHOLD,
                    budget: int = config.MAX_RHS_EVALUATIONS) -> ShootState:
    """
    Integrates the batch of solutions for all z in ``zs`` with a shared step sequence.

    ``initial`` is (u0, v0, du0, dv0); the default is the outgoing-left data
    u(0) = 1, hD u(0) = -z^{1/2} and its z-derivative.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    _check_inputs(V, zs, h, tol)
    n = zs.size
    roots = np.sqrt(zs)
    if initial is None:
        initial = (np.ones(n), -1j * roots, np.zeros(n), -0.5j / roots)
    y = np.concatenate([np.broadcast_to(np.asarray(c, dtype=complex), (n,)) for c in initial])
    log_scale = np.zeros(n, dtype=complex)
    evaluations = 0
    edges = _chunk_edges(V, h)

    for start, stop in zip(edges, edges[1:]):
        shape = V.pieces[0].shape
        for piece in V.pieces:
            if piece.left <= 0.5 * (start + stop) <= piece.right:
                shape = piece.shape
                break

        def rhs(x, y, shape=shape):
            u, v, du, dv = y.reshape(4, n)
            gap = shape(x) - zs
            return np.concatenate([v / h, gap * u / h, dv / h, (gap * du - u) / h])

        solution = solve_ivp(rhs, (start, stop), y, method="DOP853", rtol=tol, atol=config.SHOOT_ATOL)
        evaluations += solution.nfev
        if not solution.success:
            raise NoConvergenceError(f"ODE integration failed on [{start}, {stop}]: {solution.message}")
        if evaluations > budget:
            raise IntegrationBudgetError(h, tol, evaluations)
        y = solution.y[:, -1]

        size = np.abs(y[:n]) + np.abs(y[n:2 * n])
        grown = size > threshold
        if grown.any():
            factors = np.where(grown, size, 1.0)
            y = y / np.tile(factors, 4)
            log_scale = log_scale + np.log(factors)
            logging.debug(f"Renormalized {int(grown.sum())} solution(s) at x={stop:.6g}")

    u, v, du, dv = y.reshape(4, n)
    return ShootState(x=V.support_right, u=u, v=v, du=du, dv=dv, log_scale=log_scale, evaluations=evaluations)


def integrate_out(V: Potential, z: complex, h: float, tol: float = config.SHOOT_RTOL,
                  threshold: float = config.RENORM_THRESHOLD) -> ShootState:
    """Outgoing-left solution carried to x = L."""
    return integrate_batch(V, [z], h, tol, threshold=threshold)


def outgoing_residuals(V: Potential, zs, h: float, tol: float = config.SHOOT_RTOL,
                       threshold: float = config.RENORM_THRESHOLD) -> tuple[np.ndarray, np.ndarray]:
    """Normalized residual values and z-derivatives for a batch of energies."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    state = integrate_batch(V, zs, h, tol, threshold=threshold)
    roots = np.sqrt(zs)
    scale = np.maximum(np.abs(state.u), np.abs(state.v))
    value = -1j * state.v - roots * state.u
    derivative = -1j * state.dv - state.u / (2 * roots) - roots * state.du
    return value / scale, derivative / scale


def outgoing_residual(V: Potential, z: complex, h: float, tol: float = config.SHOOT_RTOL,
                      threshold: float = config.RENORM_THRESHOLD) -> OutgoingResidual:
    state = integrate_batch(V, [z], h, tol, threshold=threshold)
    root = np.sqrt(complex(z))
    scale = max(abs(state.u[0]), abs(state.v[0]))
    value = -1j * state.v[0] - root * state.u[0]
    derivative = -1j * state.dv[0] - state.u[0] / (2 * root) - root * state.du[0]
    return OutgoingResidual(
        z=complex(z),
        value=complex(value / scale),
        derivative_dz=complex(derivative / scale),
        scale_exponent=complex(state.log_scale[0] + math.log(scale)),
    )


def wronskian(V: Potential, z: complex, h: float, tol: float = config.SHOOT_RTOL) -> tuple[complex, complex]:
    """
    Semiclassical Wronskian u1 (h u2') - (h u1') u2 of the outgoing-left solution and
    the solution with u(0) = 0, h u'(0) = 1, at x = 0 and at x = L.
    """
    root = np.sqrt(complex(z))
    initial = (np.array([1.0, 0.0]), np.array([-1j * root, 1.0]), np.zeros(2), np.zeros(2))
    state = integrate_batch(V, [z, z], h, tol, initial=initial)
    at_zero = initial[0][0] * initial[1][1] - initial[1][0] * initial[0][1]
    at_end = (state.u[0] * state.v[1] - state.v[0] * state.u[1]) * np.exp(state.log_scale[0] + state.log_scale[1])
    return complex(at_zero), complex(at_end)


# --- Closed-form oracle for a single constant piece ---

def _plane_wave_data(V0: float, L: float, z: complex, h: float):
    z = complex(z)
    root, kappa = np.sqrt(z), np.sqrt(z - V0)
    A = 0.5 * (1 - root / kappa)
    B = 0.5 * (1 + root / kappa)
    grow, decay = np.exp(1j * kappa * L / h), np.exp(-1j * kappa * L / h)
    return root, kappa, A, B, grow, decay


def transfer_matrix_constant(V0: float, L: float, z: complex, h: float) -> OutgoingResidual:
    """
    Exact residual for V = V0 on [0, L] by matching plane waves e^{±iκx/h}, κ = (z - V0)^{1/2}.
    Zeros are the roots of r² e^{2iκL/h} = 1 with r = (z^{1/2} - κ)/(z^{1/2} + κ).
    """
    root, kappa, A, B, grow, decay = _plane_wave_data(V0, L, z, h)
    u = A * grow + B * decay
    v = 1j * kappa * (A * grow - B * decay)

    d_root, d_kappa = 0.5 / root, 0.5 / kappa
    dA = -0.5 * (d_root * kappa - root * d_kappa) / kappa ** 2
    dB = -dA
    d_grow = 1j * L / h * d_kappa * grow
    d_decay = -1j * L / h * d_kappa * decay
    du = dA * grow + A * d_grow + dB * decay + B * d_decay
    dv = 1j * d_kappa * (A * grow - B * decay) + 1j * kappa * (dA * grow + A * d_grow - dB * decay - B * d_decay)

    value = -1j * v - root * u
    derivative = -1j * dv - d_root * u - root * du
    scale = max(abs(u), abs(v))
    return OutgoingResidual(
        z=complex(z),
        value=complex(value / scale),
        derivative_dz=complex(derivative / scale),
        scale_exponent=complex(math.log(scale)),
    )


def constant_well_roots(V0: float, L: float, h: float, window: tuple[float, float], depth: float) -> list[complex]:
    """
    Roots of r² e^{2iκL/h} = 1 in [a, b] - i[0, depth], from Newton on
    2iκL/h + 2 log r - 2πi n = 0 in κ, seeded at κ = πhn/L.
    """
    a, b = window
    first = math.floor(L * math.sqrt(max(a - V0, 0.0)) / (math.pi * h)) - 2
    last = math.ceil(L * math.sqrt(b - V0) / (math.pi * h)) + 2
    roots = []
    for n in range(max(first, 1), last + 1):
        kappa = complex(math.pi * h * n / L)
        for _ in range(60):
            s = np.sqrt(kappa ** 2 + V0)
            r = (s - kappa) / (s + kappa)
            if r == 0:
                break
            g = 2j * kappa * L / h + 2 * np.log(r) - 2j * math.pi * n
            ds = kappa / s
            dg = 2j * L / h + 2 * ((ds - 1) / (s - kappa) - (ds + 1) / (s + kappa))
            step = g / dg
            kappa -= step
            if abs(step) <= 1e-15 * max(1.0, abs(kappa)):
                break
        z = complex(kappa ** 2 + V0)
        if V0 != 0 and a <= z.real <= b and -depth <= z.imag <= 0:
            roots.append(z)
    roots.sort(key=lambda z: z.real)
    logging.debug(f"Constant-well oracle: {len(roots)} roots for V0={V0}, h={h}")
    return roots


if __name__ == '__main__':
    print("Running shooting.py in standalone mode: V≡1 against the transfer matrix...")
    well = Potential.constant(1.0)
    for z in constant_well_roots(1.0, 1.0, 0.05, (2.0, 3.0), 1.0):
        value = outgoing_residual(well, z, 0.05).value
        print(f"{'✅' if abs(value) <= 1e-10 else '❌'} z = {z:.10f}  |residual| = {abs(value):.2e}")
