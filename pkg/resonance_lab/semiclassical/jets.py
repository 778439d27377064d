# resonance_lab/semiclassical/jets.py
"""
Truncated Taylor ("jet") arithmetic at a base point.

A Jet of degree K holds c_0..c_K with f(x0 + t) = sum_j c_j t**j + O(t**(K+1)).
Binary operations truncate to the smaller degree, so every coefficient of a
result is exact given exact inputs.
"""

from dataclasses import dataclass

import numpy as np

from resonance_lab.errors import JetDepthError


@dataclass(frozen=True, eq=False)
class Jet:
    base: float
    side: str
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("A jet needs a non-empty 1-D coefficient array.")
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    @property
    def value(self) -> complex:
        return complex(self.coefficients[0])

    def derivative_value(self, m: int) -> complex:
        """f^(m)(x0) = m! c_m."""
        return complex(self.coefficients[m] * np.prod(np.arange(1, m + 1, dtype=float)))

    def _like(self, coefficients) -> "Jet":
        return Jet(self.base, self.side, coefficients)

    def _pair(self, other: "Jet") -> tuple[np.ndarray, np.ndarray]:
        if other.base != self.base or other.side != self.side:
            raise ValueError("Jets at different base points cannot be combined.")
        n = min(self.order, other.order) + 1
        return self.coefficients[:n], other.coefficients[:n]

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return self._like(a + b)
        c = self.coefficients.copy()
        c[0] += other
        return self._like(c)

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coefficients)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return self._like(np.convolve(a, b)[: a.size])
        return self._like(other * self.coefficients)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        c = self.coefficients
        if c[0] == 0:
            raise ZeroDivisionError("Leading jet coefficient vanishes; reciprocal undefined.")
        out = np.zeros_like(c)
        out[0] = 1.0 / c[0]
        for n in range(1, c.size):
            out[n] = -np.dot(c[1 : n + 1], out[n - 1 :: -1][:n]) / c[0]
        return self._like(out)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self._like(self.coefficients / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def sqrt(self) -> "Jet":
        """Principal-branch square root (s_0 = sqrt(c_0) with the principal cut)."""
        c = self.coefficients
        if c[0] == 0:
            raise ZeroDivisionError("Square root jet undefined at a zero of the base value.")
        s = np.zeros_like(c)
        s[0] = np.sqrt(c[0])
        for n in range(1, c.size):
            s[n] = (c[n] - np.dot(s[1:n], s[n - 1 : 0 : -1])) / (2 * s[0])
        return self._like(s)

    def derivative(self) -> "Jet":
        """Coefficient shift: d/dt costs one degree."""
        if self.order == 0:
            raise JetDepthError("Cannot differentiate a degree-0 jet.")
        c = self.coefficients
        return self._like(c[1:] * np.arange(1, c.size))

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetDepthError(f"Jet has degree {self.order}, cannot keep degree {order}.")
        return self._like(self.coefficients[: order + 1])

    def __call__(self, t):
        """Evaluates the truncated series at offset t = x - x0."""
        return np.polynomial.polynomial.polyval(t, self.coefficients)

    def __repr__(self):
        return f"Jet(base={self.base}, side={self.side!r}, order={self.order})"
