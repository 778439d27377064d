# resonance_lab/tests/conftest.py

import math

import pytest

from resonance_lab.model import Piece, PolynomialShape, Potential, TrigonometricShape


@pytest.fixture
def constant_well():
    return Potential.constant(1.0)


@pytest.fixture
def parabola():
    # x(1 - x): orders (1, 1), sup 1/4
    return Potential.single(PolynomialShape((0.0, 1.0, -1.0)), 1.0, (1, 1), name="parabola")


@pytest.fixture
def quintic():
    # x²(1 - x)³: orders (2, 3), sup at x = 2/5
    return Potential.single(PolynomialShape((0.0, 0.0, 1.0, -3.0, 3.0, -1.0)), 1.0, (2, 3), name="quintic")


@pytest.fixture
def cubic_right():
    # x(1 - x)³: orders (1, 3)
    return Potential.single(PolynomialShape((0.0, 1.0, -3.0, 3.0, -1.0)), 1.0, (1, 3), name="cubic_right")


@pytest.fixture
def sine():
    return Potential.single(TrigonometricShape(1.0, math.pi), 1.0, (1, 1), name="sine")


@pytest.fixture
def steps():
    """Factory: piecewise-constant potential with equal-width pieces at the given levels."""

    def build(*levels, L=1.0):
        width = L / len(levels)
        pieces = tuple(
            Piece(i * width, L if i == len(levels) - 1 else (i + 1) * width, PolynomialShape((level,)))
            for i, level in enumerate(levels)
        )
        return Potential(L, pieces)

    return build
