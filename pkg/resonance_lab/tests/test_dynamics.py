# resonance_lab/tests/test_dynamics.py

import math

import numpy as np
import pytest

from resonance_lab.classical import dynamics
from resonance_lab.classical.dynamics import (
    FlowState,
    PointType,
    classify_interface,
    diam,
    empirical_band_top,
    energy,
    flow,
    gap_report,
    traversal_time_by_flow,
    turning_point,
)
from resonance_lab.errors import (
    FlowUniquenessError,
    GapConsistencyError,
    TrappingError,
    WindowAdmissibilityError,
)
from resonance_lab.exact.rootfind import ComputedResonance, Rectangle
from resonance_lab.model import PolynomialShape, Potential
from resonance_lab.semiclassical.quadrature import period

TOL = 1e-12
TOL_FLOW = 1e-9


def assert_allclose(arr1, arr2, atol=TOL):
    np.testing.assert_allclose(arr1, arr2, rtol=0., atol=atol)


def test_classify_constant_well_endpoints(constant_well):
    at_zero = classify_interface(constant_well, 0.0, 2.0)
    assert (at_zero.left, at_zero.right) == (PointType.HYPERBOLIC, PointType.HYPERBOLIC)
    assert at_zero.kind == PointType.HYPERBOLIC
    assert classify_interface(constant_well, 1.0, 1.0).kind == PointType.GLANCING
    below = classify_interface(constant_well, 0.0, 0.5)
    assert below.right == PointType.ELLIPTIC
    assert below.left == PointType.HYPERBOLIC
    assert below.kind == PointType.ELLIPTIC


def test_classify_rejects_interior_points(parabola):
    with pytest.raises(ValueError):
        classify_interface(parabola, 0.3, 1.0)


def test_free_flight(constant_well):
    end = flow(constant_well, FlowState(-5.0, 0.5), 2.0)
    assert_allclose((end.x, end.xi, end.t), (-3.0, 0.5, 2.0))
    # constant field inside the support
    end = flow(constant_well, FlowState(0.2, 0.1), 1.0)
    assert_allclose((end.x, end.xi), (0.4, 0.1), atol=TOL_FLOW)


def test_flow_crosses_into_free_flight(constant_well):
    # V jumps at L, so the interface order there is 0
    with pytest.raises(FlowUniquenessError) as info:
        flow(constant_well, FlowState(0.5, 1.0), 1.0)
    assert info.value.state.x == 1.0


def test_flow_needs_lipschitz_interfaces(parabola):
    with pytest.raises(FlowUniquenessError):
        flow(parabola, FlowState(0.5, 1.0), 1.0)


def test_energy_conservation_across_smooth_endpoint(quintic):
    E = 1.0
    start = FlowState(0.5, math.sqrt(E - 0.25 * 0.125))
    assert energy(quintic, start) == pytest.approx(E)
    end = flow(quintic, start, 1.0)
    assert end.x > 1.0
    assert abs(energy(quintic, end) - E) <= 1e-10
    assert_allclose(end.xi, math.sqrt(E), atol=1e-10)


def test_flow_reverses(quintic):
    start = FlowState(0.3, 0.4)
    there = flow(quintic, start, 0.2)
    back = flow(quintic, there, -0.2)
    assert_allclose((back.x, back.xi), (start.x, start.xi), atol=TOL_FLOW)


@pytest.mark.parametrize("E", np.linspace(0.5, 3.0, 6))
def test_traversal_time_is_period(quintic, E):
    assert abs(traversal_time_by_flow(quintic, E, 0.0, 1.0) - period(quintic, E)) <= 1e-8
    assert abs(traversal_time_by_flow(quintic, E, 1.0, 0.0) - period(quintic, E)) <= 1e-8


def test_turning_points(steps):
    V = steps(0.5, 2.0)
    assert turning_point(V, 1.0, 0.0, +1) == 0.5
    assert turning_point(V, 1.0, 0.0, -1) is None
    assert turning_point(V, 3.0, 0.0, +1) is None

    bump = Potential.single(PolynomialShape((0.0, 4.0, -4.0)))
    x = turning_point(bump, 0.75, 0.0, +1)
    assert_allclose(x, 0.25)


def test_diam_constant_well(constant_well):
    assert_allclose(diam(constant_well, 2.0), 0.5)
    assert_allclose(diam(constant_well, 5.0), 0.25)


def test_diam_is_period_for_single_well(parabola):
    for E in (0.5, 1.0, 2.0):
        assert_allclose(diam(parabola, E), period(parabola, E), atol=1e-10)


def test_diam_single_hyperbolic_point(constant_well):
    assert diam(constant_well, 2.0, Y=(0.0,)) == 0.0
    assert diam(constant_well, 0.5) == 0.0


def test_diam_counts_the_return_trip(steps):
    # from 0 the orbit reflects off the step at 1/2 and comes back
    assert_allclose(diam(steps(0.5, 2.0), 1.0), 1 / math.sqrt(2.0))


def test_diam_trapped_energy(steps):
    with pytest.raises(TrappingError):
        diam(steps(2.0, 0.5, 0.5, 2.0), 1.0)


def test_gap_report_smooth_well(parabola):
    report = gap_report(parabola, (1.5, 2.5))
    assert report.alpha == 1
    assert report.orders == (1, 1)
    assert_allclose(report.diam, period(parabola, 1.5), atol=1e-10)
    assert report.nu0_bound == pytest.approx(1 / period(parabola, 1.5), rel=1e-9)
    assert report.band_top == pytest.approx(report.nu0_bound, rel=1e-9)
    assert report.consistent


def test_gap_report_constant_well(constant_well):
    report = gap_report(constant_well, (2.0, 3.0))
    assert report.alpha == 0
    assert report.nu0_bound == 0.0
    assert report.band_top == 0.0
    assert_allclose(report.diam, 0.5)
    assert report.argmax_energy == pytest.approx(2.0)


def test_gap_report_mixed_orders():
    V = Potential.single(PolynomialShape((1.0, -1.0)), 1.0, (0, 1))
    report = gap_report(V, (1.5, 2.5))
    assert report.alpha == 0
    assert report.nu0_bound == 0.0
    assert report.band_top == pytest.approx(1 / (2 * period(V, 1.5)), rel=1e-9)
    assert report.to_dict()["orders"] == [0, 1]


def test_gap_report_window_above_sup(parabola):
    with pytest.raises(WindowAdmissibilityError):
        gap_report(parabola, (0.2, 1.0))


def test_empirical_band_top():
    assert empirical_band_top([], 0.01) is None
    roots = [ComputedResonance(z, 0.0, Rectangle.around(z, 1e-8), 2) for z in (1.5 - 0.1j, 1.8 - 0.05j)]
    assert empirical_band_top(roots, 0.01) == pytest.approx(0.05 / (0.01 * math.log(100.0)))


def test_gap_report_inconsistent_band(parabola, monkeypatch):
    # a diameter shorter than the period puts α/diam above (l+k)/(2T)
    monkeypatch.setattr(dynamics, "diam", lambda V, E: 0.25 * period(V, E))
    with pytest.raises(GapConsistencyError):
        gap_report(parabola, (1.5, 2.5))
    report = gap_report(parabola, (1.5, 2.5), strict=False)
    assert not report.consistent
    assert report.to_dict()["consistent"] is False
