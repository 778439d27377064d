# resonance_lab/tests/test_quadrature.py

import math

import numpy as np
import pytest

from resonance_lab.errors import BranchCutError, OutOfRangeError, WindowAdmissibilityError
from resonance_lab.semiclassical.quadrature import (
    action,
    build_action_table,
    complex_period,
    complex_phase,
    invert_action,
    period,
    travel_time,
)

TOL = 1e-12
TOL_FD = 1e-7


def assert_allclose(arr1, arr2, atol=TOL):
    np.testing.assert_allclose(arr1, arr2, rtol=0., atol=atol)


def simpson(f, a, b, eps=1e-13, depth=50):
    """Adaptive Simpson reference rule."""

    def step(a, fa, b, fb, m, fm, whole, eps, depth):
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        if depth <= 0 or abs(left + right - whole) <= 15 * eps:
            return left + right + (left + right - whole) / 15
        return (step(a, fa, m, fm, lm, flm, left, eps / 2, depth - 1)
                + step(m, fm, b, fb, rm, frm, right, eps / 2, depth - 1))

    fa, fb, m = f(a), f(b), 0.5 * (a + b)
    fm = f(m)
    return step(a, fa, b, fb, m, fm, (b - a) / 6 * (fa + 4 * fm + fb), eps, depth)


def test_constant_well_closed_forms(constant_well):
    assert_allclose(action(constant_well, 2.0), 1.0)
    assert_allclose(period(constant_well, 2.0), 0.5)
    assert_allclose(action(constant_well, 5.0), 2.0)


@pytest.mark.parametrize("E", [0.5, 1.0, 2.5])
def test_action_against_simpson(parabola, E):
    expected = simpson(lambda s: math.sqrt(E - s * (1 - s)), 0.0, 1.0)
    assert_allclose(action(parabola, E), expected, atol=1e-11)


@pytest.mark.parametrize("E", [0.6, 1.0, 2.0])
def test_period_is_action_derivative(parabola, quintic, E):
    step = 1e-4
    for V in (parabola, quintic):
        difference = (action(V, E + step) - action(V, E - step)) / (2 * step)
        assert_allclose(period(V, E), difference, atol=TOL_FD)


def test_action_needs_energy_above_sup(parabola):
    with pytest.raises(WindowAdmissibilityError):
        action(parabola, 0.25)
    with pytest.raises(WindowAdmissibilityError):
        period(parabola, 0.1)


def test_invert_action(parabola):
    window = (1.0, 3.0)
    for E in (1.0, 1.7, 3.0):
        assert_allclose(invert_action(parabola, action(parabola, E), window), E, atol=1e-10)
    with pytest.raises(OutOfRangeError):
        invert_action(parabola, action(parabola, 3.5), window)


def test_complex_phase_on_real_axis(parabola):
    assert_allclose(complex_phase(parabola, 1.0, 1.5), action(parabola, 1.5))
    assert_allclose(complex_period(parabola, 1.0, 1.5), period(parabola, 1.5))


def test_complex_phase_exterior_is_free(constant_well):
    z = 2.0 - 0.1j
    inside = complex_phase(constant_well, 1.0, z)
    assert_allclose(complex_phase(constant_well, 1.5, z), inside + 0.5 * np.sqrt(z))
    assert_allclose(inside, np.sqrt(z - 1.0))


def test_complex_period_is_phase_derivative(quintic):
    z, step = 1.3 - 0.05j, 1e-5
    difference = (complex_phase(quintic, 1.0, z + step) - complex_phase(quintic, 1.0, z - step)) / (2 * step)
    assert_allclose(complex_period(quintic, 1.0, z), difference, atol=TOL_FD)


def test_complex_phase_branch_cut(parabola):
    with pytest.raises(BranchCutError):
        complex_phase(parabola, 1.0, 0.2 - 0.01j)


def test_travel_time(constant_well, parabola):
    assert_allclose(travel_time(constant_well, 2.0, 0.0, 1.0), 0.5)
    assert_allclose(travel_time(constant_well, 2.0, 1.0, 0.25), 0.375)
    # one unit of free flight at speed 2 sqrt(E)
    assert_allclose(travel_time(constant_well, 2.0, 0.0, 2.0), 0.5 + 1 / (2 * math.sqrt(2.0)))
    assert_allclose(travel_time(parabola, 1.5, 0.0, 1.0), period(parabola, 1.5))
    with pytest.raises(WindowAdmissibilityError):
        travel_time(constant_well, 0.0, 0.0, 1.0)


def test_action_table(parabola):
    table = build_action_table(parabola, (1.0, 2.0), nodes=33)
    assert_allclose(table.action_range, (action(parabola, 1.0), action(parabola, 2.0)))
    s = action(parabola, 1.4)
    assert abs(float(table.invert(s)) - 1.4) < 1e-4
    assert_allclose(table.periods[[0, -1]], [period(parabola, 1.0), period(parabola, 2.0)])


def test_complex_phase_is_holomorphic(quintic):
    step = 1e-5
    for re in (0.5, 1.2, 2.0):
        for im in (-0.01, -0.1, -0.3):
            z = complex(re, im)
            d_re = (complex_phase(quintic, 1.0, z + step) - complex_phase(quintic, 1.0, z - step)) / (2 * step)
            d_im = (complex_phase(quintic, 1.0, z + 1j * step)
                    - complex_phase(quintic, 1.0, z - 1j * step)) / (2 * step)
            assert abs(d_re + 1j * d_im) <= 1e-6
