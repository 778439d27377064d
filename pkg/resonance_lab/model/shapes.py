# resonance_lab/model/shapes.py
# Closed-form smooth pieces. Each one evaluates its m-th derivative exactly,
# so endpoint jets are exact rather than finite-difference limited.

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite import hermval


class Shape:
    """A smooth function on the whole line with exact derivatives of any order."""

    kind = "abstract"

    def derivative(self, x, m: int = 0):
        raise NotImplementedError

    def __call__(self, x):
        return self.derivative(x, 0)

    def critical_points(self, lo: float, hi: float) -> np.ndarray | None:
        """Interior critical points in (lo, hi), or None if no closed form exists."""
        return None

    def taylor(self, x0: float, degree: int) -> np.ndarray:
        """Taylor coefficients c_j = f^(j)(x0)/j!, j = 0..degree."""
        return np.array(
            [float(self.derivative(x0, j)) / math.factorial(j) for j in range(degree + 1)]
        )

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class PolynomialShape(Shape):
    """sum_j coefficients[j] * x**j (powers of the global coordinate)."""

    coefficients: tuple[float, ...]
    kind = "polynomial"
    _poly: Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coefficients = tuple(float(c) for c in self.coefficients) or (0.0,)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "_poly", Polynomial(coefficients))

    def derivative(self, x, m: int = 0):
        if m >= len(self.coefficients):
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        return self._poly.deriv(m)(x) if m else self._poly(x)

    def critical_points(self, lo, hi):
        if len(self.coefficients) <= 2:
            return np.array([])
        roots = self._poly.deriv(1).roots()
        real = roots[np.abs(roots.imag) <= 1e-12 * max(1.0, np.abs(roots).max())].real
        return np.sort(real[(real > lo) & (real < hi)])

    def to_dict(self):
        return {"kind": self.kind, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class TrigonometricShape(Shape):
    """amplitude * sin(frequency * x + phase) + offset."""

    amplitude: float
    frequency: float
    phase: float = 0.0
    offset: float = 0.0
    kind = "trigonometric"

    def derivative(self, x, m: int = 0):
        value = (
            self.amplitude
            * self.frequency ** m
            * np.sin(self.frequency * np.asarray(x, dtype=float) + self.phase + m * np.pi / 2)
        )
        if m == 0:
            value = value + self.offset
        return value if np.ndim(value) else float(value)

    def critical_points(self, lo, hi):
        if self.frequency == 0.0 or self.amplitude == 0.0:
            return np.array([])
        w = self.frequency
        # w*x + phase = pi/2 + j*pi
        ends = sorted(((w * lo + self.phase - np.pi / 2) / np.pi, (w * hi + self.phase - np.pi / 2) / np.pi))
        js = np.arange(math.floor(ends[0]), math.ceil(ends[1]) + 1)
        xs = (np.pi / 2 + js * np.pi - self.phase) / w
        return np.sort(xs[(xs > lo) & (xs < hi)])

    def to_dict(self):
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "frequency": self.frequency,
            "phase": self.phase,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class GaussianShape(Shape):
    """amplitude * exp(-beta * (x - center)**2)."""

    amplitude: float
    beta: float
    center: float = 0.0
    kind = "gaussian"

    def derivative(self, x, m: int = 0):
        # d^m/dy^m exp(-y^2) = (-1)^m H_m(y) exp(-y^2), y = sqrt(beta) (x - center)
        root_beta = math.sqrt(self.beta)
        y = root_beta * (np.asarray(x, dtype=float) - self.center)
        basis = np.zeros(m + 1)
        basis[m] = 1.0
        value = self.amplitude * (-root_beta) ** m * hermval(y, basis) * np.exp(-y * y)
        return value if np.ndim(value) else float(value)

    def critical_points(self, lo, hi):
        if self.amplitude == 0.0 or not lo < self.center < hi:
            return np.array([])
        return np.array([self.center])

    def to_dict(self):
        return {"kind": self.kind, "amplitude": self.amplitude, "beta": self.beta, "center": self.center}


SHAPE_KINDS = {
    PolynomialShape.kind: PolynomialShape,
    TrigonometricShape.kind: TrigonometricShape,
    GaussianShape.kind: GaussianShape,
}


def shape_from_dict(data: dict) -> Shape:
    """Builds a shape from its config/JSON description (the 'kind' key selects the class)."""
    params = dict(data)
    kind = params.pop("kind", None)
    if kind not in SHAPE_KINDS:
        raise ValueError(f"Unknown piece kind '{kind}'. Expected one of {sorted(SHAPE_KINDS)}.")
    if kind == PolynomialShape.kind:
        return PolynomialShape(tuple(params["coefficients"]))
    return SHAPE_KINDS[kind](**params)
