# resonance_lab/tests/test_rootfind.py

import math

import numpy as np
import pytest

from resonance_lab.errors import ContourError, WindowAdmissibilityError
from resonance_lab.exact.rootfind import (
    ComputedResonance,
    Rectangle,
    ResidualEvaluator,
    SpectralWindow,
    count_zeros,
    locate_all,
    match_predictions,
    subdivide,
)
from resonance_lab.exact.shooting import constant_well_roots
from resonance_lab.semiclassical.asymptotic import (
    ResonancePrediction,
    Tier,
    default_depth_multiplier,
    predict_all,
)

TOL_ROOT = 1e-9

UNIT = Rectangle(0.0, 1.0, 0.0, 1.0)


def polynomial_evaluator(zeros):
    """Values and derivatives of prod (z - z_j), batched."""
    zeros = np.asarray(zeros, dtype=complex)

    def evaluate(zs):
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        factors = zs[:, None] - zeros[None, :]
        values = np.prod(factors, axis=1)
        derivatives = values * np.sum(1.0 / factors, axis=1)
        return values, derivatives

    return evaluate


@pytest.mark.parametrize("zeros, expected", [
    ([0.5 + 0.5j], 1),
    ([0.3 + 0.4j, 0.7 + 0.2j], 2),
    ([0.5 + 0.5j, 2.0 + 0.5j], 1),
    ([1.5 + 1.5j], 0),
    ([0.5 + 0.5j, 0.5 + 0.5j, 0.2 + 0.9j], 3),
])
def test_winding_counts(zeros, expected):
    assert count_zeros(UNIT, polynomial_evaluator(zeros)) == expected


def test_contour_through_a_zero_is_perturbed():
    # the zero sits on the bottom edge; growing the rectangle captures it
    assert count_zeros(UNIT, polynomial_evaluator([0.5 + 0.0j])) == 1


def test_contour_on_vanishing_function():
    def zero(zs):
        zs = np.atleast_1d(zs)
        return np.zeros(zs.size, dtype=complex), np.zeros(zs.size, dtype=complex)

    with pytest.raises(ContourError):
        count_zeros(UNIT, zero)


def test_fast_phase_needs_refinement():
    # exp(120 i z) turns by more than π/2 between neighbouring samples on the long edges
    zero = 0.4 + 0.02j

    def oscillating(zs):
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        values = np.exp(120j * zs) * (zs - zero)
        return values, values * (120j + 1.0 / (zs - zero))

    assert count_zeros(Rectangle(0.0, 1.0, 0.0, 0.05), oscillating) == 1


@pytest.mark.parametrize("along_real", [True, False])
def test_subdivision_conserves_count(along_real):
    evaluator = polynomial_evaluator([0.2 + 0.2j, 0.8 + 0.3j, 0.6 + 0.9j])
    children = subdivide(UNIT, 3, evaluator, along_real)
    assert len(children) == 2
    assert sum(count for _, count in children) == 3


def test_subdivision_shifts_split_through_a_zero():
    evaluator = polynomial_evaluator([0.5 + 0.5j, 0.2 + 0.2j])
    children = subdivide(UNIT, 2, evaluator, along_real=True)
    assert [count for _, count in children] == [1, 1]
    assert children[0][0].re_hi == pytest.approx(0.439)


def test_locate_all_with_synthetic_zeros():
    zeros = [1.3 - 0.1j, 1.7 - 0.05j, 1.71 - 0.05j, 1.9 - 0.2j]
    window = SpectralWindow(1.0, 2.0, 1.0, 0.1)
    result = locate_all(window, evaluator=polynomial_evaluator(zeros))
    assert result.complete
    assert result.total_count == 4
    found = [r.z for r in result.roots]
    np.testing.assert_allclose(found, sorted(zeros, key=lambda z: z.real), rtol=0., atol=TOL_ROOT)
    for root in result.roots:
        assert root.residual_norm <= 1e-10
        assert root.winding_cell.contains(root.z)
        assert root.search_cell.contains(root.z)


def test_locate_all_with_depth_levels():
    zeros = [1.25 - 0.05j, 1.75 - 0.2j]
    window = SpectralWindow(1.0, 2.0, 1.0, 0.1, levels=(0.5,))
    result = locate_all(window, evaluator=polynomial_evaluator(zeros))
    assert len(result.roots) == 2
    assert result.complete


# depth 1: the window is [0, 1] - i[0, 1]
UNIT_DEPTH = 1.0 / (0.1 * math.log(10.0))


def test_polish_halves_cell_when_newton_converges_outside():
    # Newton from the center is pulled to the zero just below the window
    inside, outside = 0.02 - 0.02j, 0.5 - 1.05j
    window = SpectralWindow(0.0, 1.0, UNIT_DEPTH, 0.1)
    result = locate_all(window, evaluator=polynomial_evaluator([inside, outside]))
    assert result.complete
    assert abs(result.roots[0].z - inside) <= TOL_ROOT
    cell = result.roots[0].search_cell
    assert cell.width * cell.height <= 0.5 + 1e-9


def test_polish_starts_from_seeds():
    inside, outside = 0.02 - 0.02j, 0.5 - 1.05j
    window = SpectralWindow(0.0, 1.0, UNIT_DEPTH, 0.1)
    result = locate_all(window, evaluator=polynomial_evaluator([inside, outside]), seeds=[0.03 - 0.03j, 5.0])
    assert result.complete
    assert abs(result.roots[0].z - inside) <= TOL_ROOT
    assert result.roots[0].search_cell.re_hi == pytest.approx(1.0)


def test_zeros_outside_window_are_ignored():
    window = SpectralWindow(1.0, 2.0, 1.0, 0.1)
    result = locate_all(window, evaluator=polynomial_evaluator([2.5 - 0.1j, 1.5 + 0.1j]))
    assert result.total_count == 0
    assert result.roots == []


def test_window_validation(parabola):
    with pytest.raises(WindowAdmissibilityError):
        SpectralWindow(2.0, 1.0, 1.0, 0.1)
    with pytest.raises(WindowAdmissibilityError):
        SpectralWindow(1.0, 2.0, -1.0, 0.1)
    with pytest.raises(WindowAdmissibilityError):
        locate_all(SpectralWindow(0.2, 1.0, 1.0, 0.05), parabola)
    assert SpectralWindow(1.0, 2.0, 2.0, 0.1).depth == pytest.approx(2.0 * 0.1 * math.log(10.0))


@pytest.mark.parametrize("h", [
    0.05,
    pytest.param(0.02, marks=pytest.mark.slow),
    pytest.param(0.01, marks=pytest.mark.slow),
])
def test_constant_well_against_oracle(constant_well, h):
    window = SpectralWindow(2.0, 3.0, 3.0, h)
    evaluator = ResidualEvaluator(constant_well, h)
    result = locate_all(window, constant_well, h, evaluator)
    exact = constant_well_roots(1.0, 1.0, h, (2.0, 3.0), window.depth)
    assert result.complete
    assert len(result.roots) == len(exact)
    for computed, expected in zip(result.roots, exact):
        assert abs(computed.z - expected) <= TOL_ROOT
        assert computed.residual_norm <= 1e-10
    assert evaluator.points > 0
    assert result.evaluations == evaluator.points


def test_constant_well_count_matches_index_set(constant_well):
    h = 0.02
    window = SpectralWindow(2.0, 3.0, 3.0, h)
    assert count_zeros(window.rectangle, ResidualEvaluator(constant_well, h), h) == 7


def _prediction(n, z, h=0.05):
    return ResonancePrediction(n=n, E_n=z.real, w_n=1j * z.imag, z_n=z, tier=Tier.CLOSED_FORM, h=h)


def _computed(z):
    return ComputedResonance(z=z, residual_norm=0.0, winding_cell=Rectangle.around(z, 1e-8), newton_iters=3)


def test_match_predictions():
    zs = [1.1 - 0.1j, 1.4 - 0.12j, 1.7 - 0.15j]
    predicted = [_prediction(n, z + 1e-4) for n, z in zip((7, 8, 9), zs)]
    report, tagged = match_predictions([_computed(z) for z in reversed(zs)], predicted)
    assert not report.mismatch
    assert [pair["n"] for pair in report.pairs] == [7, 8, 9]
    assert report.max_error == pytest.approx(1e-4)
    assert report.max_normalized == pytest.approx(1e-4 / (0.05 ** 2 * math.log(20.0) ** 2))
    assert sorted(c.paired_index for c in tagged) == [7, 8, 9]
    assert report.unmatched_computed == [] and report.unmatched_predicted == []


def test_match_predictions_one_extra_root():
    zs = [1.1 - 0.1j, 1.4 - 0.12j]
    computed = [_computed(z) for z in zs] + [_computed(1.9 - 0.3j)]
    report, tagged = match_predictions(computed, [_prediction(n, z) for n, z in zip((1, 2), zs)])
    assert not report.mismatch
    assert report.unmatched_computed == [1.9 - 0.3j]
    assert [c.paired_index for c in tagged] == [1, 2, None]


def test_match_predictions_mismatch():
    computed = [_computed(z) for z in (1.1 - 0.1j, 1.2 - 0.1j, 1.3 - 0.1j)]
    report, _ = match_predictions(computed, [_prediction(1, 1.1 - 0.1j)])
    assert report.mismatch
    # displacements of half the spacing make the pairing ambiguous
    report, _ = match_predictions(computed, [_prediction(n, c.z + 0.06) for n, c in enumerate(computed)])
    assert report.mismatch


@pytest.mark.slow
def test_parabola_small_h_is_complete(parabola):
    h, interval = 0.005, (1.5, 2.5)
    window = SpectralWindow(*interval, default_depth_multiplier(parabola, interval, h), h)
    predictions = predict_all(parabola, interval, h)
    result = locate_all(window, parabola, h, ResidualEvaluator(parabola, h), [p.z_n for p in predictions])
    assert result.complete
    assert abs(len(result.roots) - len(predictions)) <= 1
    report, _ = match_predictions(result.roots, predictions, h)
    assert not report.mismatch
    assert report.unmatched_predicted == []
