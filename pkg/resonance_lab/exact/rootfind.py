# resonance_lab/exact/rootfind.py
# Certified location of residual zeros in Ω_M(h) = [a, b] - i[0, M h log(1/h)]:
# winding numbers by phase tracking, count-conserving subdivision, Newton polish.

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from resonance_lab import config
from resonance_lab.errors import ContourError, WindowAdmissibilityError
from resonance_lab.exact.shooting import outgoing_residuals
from resonance_lab.model.potential import Potential

# zs -> (values, z-derivatives); must be holomorphic and safe to call repeatedly
Evaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Rectangle:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    @property
    def width(self) -> float:
        return self.re_hi - self.re_lo

    @property
    def height(self) -> float:
        return self.im_hi - self.im_lo

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    def contains(self, z: complex) -> bool:
        return self.re_lo < z.real < self.re_hi and self.im_lo < z.imag < self.im_hi

    def grown(self, amount: float) -> "Rectangle":
        return Rectangle(self.re_lo - amount, self.re_hi + amount, self.im_lo - amount, self.im_hi + amount)

    @classmethod
    def around(cls, z: complex, radius: float) -> "Rectangle":
        return cls(z.real - radius, z.real + radius, z.imag - radius, z.imag + radius)

    def boundary(self, points_per_side: int) -> np.ndarray:
        """Counterclockwise closed-loop samples (the first point is not repeated)."""
        t = np.linspace(0.0, 1.0, points_per_side, endpoint=False)
        bottom = self.re_lo + t * self.width + 1j * self.im_lo
        right = self.re_hi + 1j * (self.im_lo + t * self.height)
        top = self.re_hi - t * self.width + 1j * self.im_hi
        left = self.re_lo + 1j * (self.im_hi - t * self.height)
        return np.concatenate([bottom, right, top, left])

    def to_dict(self) -> dict:
        return {"re_lo": self.re_lo, "re_hi": self.re_hi, "im_lo": self.im_lo, "im_hi": self.im_hi}


@dataclass(frozen=True)
class SpectralWindow:
    """[a, b] - i[0, M h log(1/h)], optionally pre-split at depths ν h log(1/h)."""

    a: float
    b: float
    M: float
    h: float
    levels: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.b > self.a:
            raise WindowAdmissibilityError(f"Window needs b > a, got [{self.a}, {self.b}].")
        if not (self.M > 0 and 0 < self.h < 1):
            raise WindowAdmissibilityError(f"Window depth must be positive (M={self.M}, h={self.h}).")

    @property
    def depth(self) -> float:
        return self.M * self.h * math.log(1.0 / self.h)

    @property
    def rectangle(self) -> Rectangle:
        return Rectangle(self.a, self.b, -self.depth, 0.0)

    def validate(self, V: Potential) -> None:
        top = V.sup()
        if not self.a > top:
            raise WindowAdmissibilityError(f"Window start a={self.a} must exceed sup V = {top}.")


@dataclass(frozen=True)
class ComputedResonance:
    z: complex
    residual_norm: float
    winding_cell: Rectangle
    newton_iters: int
    paired_index: int | None = None
    search_cell: Rectangle | None = None


@dataclass(frozen=True)
class UnresolvedCell:
    cell: Rectangle
    winding: int
    reason: str


@dataclass(frozen=True)
class LocateResult:
    roots: list[ComputedResonance]
    unresolved: list[UnresolvedCell]
    total_count: int
    evaluations: int = 0

    @property
    def complete(self) -> bool:
        return not self.unresolved and len(self.roots) == self.total_count


class ResidualEvaluator:
    """Batched outgoing-residual evaluator with call accounting."""

    def __init__(self, V: Potential, h: float, tol: float = config.SHOOT_RTOL,
                 threshold: float = config.RENORM_THRESHOLD):
        self.V = V
        self.h = h
        self.tol = tol
        self.threshold = threshold
        self.points = 0

    def __call__(self, zs):
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        self.points += zs.size
        return outgoing_residuals(self.V, zs, self.h, self.tol, self.threshold)


class _ContourTouch(Exception):
    """Phase tracking could not be certified: the contour runs (nearly) through a zero."""


# --- Winding numbers ---

def _winding(rect: Rectangle, evaluator: Evaluator, points_per_side: int) -> int:
    points = rect.boundary(points_per_side)
    values = np.asarray(evaluator(points)[0], dtype=complex)
    for refinement in range(config.MAX_CONTOUR_REFINEMENTS + 1):
        magnitudes = np.abs(values)
        if magnitudes.min() <= 1e-10 * magnitudes.max() or magnitudes.min() == 0.0:
            raise _ContourTouch(f"|f| nearly vanishes on the contour ({magnitudes.min():.3e}).")
        increments = np.angle(np.roll(values, -1) / values)
        bad = np.flatnonzero(np.abs(increments) >= math.pi / 2)
        if bad.size == 0:
            total = increments.sum() / (2 * math.pi)
            winding = int(round(total))
            if abs(total - winding) > 1e-6:
                raise _ContourTouch(f"Non-integer phase total {total}.")
            return winding
        if refinement == config.MAX_CONTOUR_REFINEMENTS:
            break
        following = np.roll(points, -1)[bad]
        midpoints = 0.5 * (points[bad] + following)
        new_values = np.asarray(evaluator(midpoints)[0], dtype=complex)
        points = np.insert(points, bad + 1, midpoints)
        values = np.insert(values, bad + 1, new_values)
        logging.debug(f"Contour refinement {refinement + 1}: {bad.size} segments bisected, {points.size} points")
    raise _ContourTouch(f"Phase increments still >= π/2 after {config.MAX_CONTOUR_REFINEMENTS} refinements.")


def certified_count(rect: Rectangle, evaluator: Evaluator, perturbation: float,
                    points_per_side: int = config.CONTOUR_POINTS_PER_SIDE) -> tuple[int, Rectangle]:
    """Winding count, growing the rectangle by ``perturbation`` whenever the contour touches a zero."""
    current = rect
    for attempt in range(config.CONTOUR_PERTURBATIONS + 1):
        try:
            return _winding(current, evaluator, points_per_side), current
        except _ContourTouch as touch:
            logging.warning(f"Contour through a zero ({touch}); perturbing rectangle (attempt {attempt + 1})")
            current = current.grown(perturbation)
    raise ContourError(f"Contour kept meeting a zero after {config.CONTOUR_PERTURBATIONS} perturbations of {rect}.")


def count_zeros(rect: Rectangle, evaluator: Evaluator, h: float | None = None) -> int:
    """Number of zeros inside ``rect`` (argument principle by phase tracking)."""
    perturbation = 1e-3 * (h if h is not None else min(rect.width, rect.height))
    return certified_count(rect, evaluator, perturbation)[0]


# --- Subdivision ---

def subdivide(rect: Rectangle, count: int, evaluator: Evaluator, along_real: bool) -> list[tuple[Rectangle, int]]:
    """
    Splits ``rect`` in two and counts the halves. The children must conserve the
    parent's count; a split line through a zero is shifted and retried.
    """
    for attempt in range(config.CONTOUR_PERTURBATIONS + 1):
        fraction = 0.5 + 0.061 * attempt * (-1) ** attempt
        if along_real:
            cut = rect.re_lo + fraction * rect.width
            children = [replace(rect, re_hi=cut), replace(rect, re_lo=cut)]
        else:
            cut = rect.im_lo + fraction * rect.height
            children = [replace(rect, im_hi=cut), replace(rect, im_lo=cut)]
        try:
            counts = [_winding(child, evaluator, config.CONTOUR_POINTS_PER_SIDE) for child in children]
        except _ContourTouch as touch:
            logging.debug(f"Split line through a zero ({touch}); shifting")
            continue
        if sum(counts) != count:
            raise ContourError(f"Count not conserved on split of {rect}: {count} -> {counts}.")
        return list(zip(children, counts))
    raise ContourError(f"Could not split {rect} without meeting a zero.")


# --- Polishing ---

def _newton_in_cell(z0: complex, cell: Rectangle, evaluator: Evaluator) -> tuple[complex, int] | None:
    """Newton from z0; the iterate may leave the cell by NEWTON_SLACK but the root may not."""
    roam = cell.grown(config.NEWTON_SLACK * max(cell.width, cell.height))
    z = complex(z0)
    for iteration in range(1, config.NEWTON_MAX_ITER + 1):
        values, derivatives = evaluator(np.array([z]))
        value, derivative = complex(values[0]), complex(derivatives[0])
        if abs(value) <= 1e-13:
            iterations = iteration - 1
            break
        if derivative == 0:
            return None
        step = value / derivative
        z -= step
        if not roam.contains(z):
            logging.debug(f"Newton escaped {cell} at iteration {iteration}")
            return None
        if abs(step) <= 1e-12 * max(1.0, abs(z)):
            iterations = iteration
            break
    else:
        return None
    if not cell.contains(z):
        logging.debug(f"Newton converged to {z:.12g}, outside {cell}")
        return None
    return z, iterations


def _muller_in_cell(cell: Rectangle, evaluator: Evaluator) -> tuple[complex, int] | None:
    """Quadratic-interpolation iteration kept inside the cell."""
    c = cell.center
    offset = 0.25 * complex(cell.width, cell.height)
    zs = [c - offset, c + offset.conjugate(), c]
    fs = list(np.asarray(evaluator(np.array(zs))[0], dtype=complex))
    for iteration in range(1, config.NEWTON_MAX_ITER + 1):
        z0, z1, z2 = zs
        f0, f1, f2 = fs
        h1, h2 = z1 - z0, z2 - z1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            return None
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        root = np.sqrt(b * b - 4 * f2 * a)
        denominator = b + root if abs(b + root) > abs(b - root) else b - root
        if denominator == 0:
            return None
        z3 = z2 - 2 * f2 / denominator
        if not cell.contains(z3):
            return None
        f3 = complex(evaluator(np.array([z3]))[0][0])
        zs, fs = [z1, z2, z3], [f1, f2, f3]
        if abs(f3) <= 1e-13 or abs(z3 - z2) <= 1e-12 * max(1.0, abs(z3)):
            return z3, iteration
    return None


def _polish(cell: Rectangle, evaluator: Evaluator, seeds=(), depth: int = 0) -> ComputedResonance | UnresolvedCell:
    """
    Polishes the single zero of a winding-1 cell: Newton from any seed inside
    the cell and from the center, then quadratic interpolation. When both fail
    the cell is halved and the child that keeps the zero is polished instead.
    """
    found = None
    for start in [z for z in seeds if cell.contains(z)] + [cell.center]:
        found = _newton_in_cell(start, cell, evaluator)
        if found is not None:
            break
    if found is None:
        logging.debug(f"Falling back to quadratic interpolation in {cell}")
        found = _muller_in_cell(cell, evaluator)
    if found is None:
        if depth >= config.POLISH_SUBDIVISIONS:
            return UnresolvedCell(cell, 1, f"root polish escaped the cell after {depth} halvings")
        try:
            children = subdivide(cell, 1, evaluator, along_real=cell.width >= cell.height)
        except ContourError as e:
            return UnresolvedCell(cell, 1, f"root polish escaped the cell and halving failed: {e}")
        keeper = next((child for child, count in children if count == 1), None)
        if keeper is None:
            return UnresolvedCell(cell, 1, f"halving gave counts {[count for _, count in children]}")
        logging.debug(f"Polish failed in {cell}; retrying in half {keeper}")
        return _polish(keeper, evaluator, seeds, depth + 1)
    z, iterations = complex(found[0]), found[1]
    residual = abs(complex(evaluator(np.array([z]))[0][0]))
    if residual > config.RESIDUAL_TOL:
        return UnresolvedCell(cell, 1, f"residual {residual:.3e} above {config.RESIDUAL_TOL}")
    box = Rectangle.around(z, config.CERTIFY_RADIUS * max(1.0, abs(z)))
    try:
        winding = _winding(box, evaluator, 8)
    except _ContourTouch as touch:
        return UnresolvedCell(cell, 1, f"certification failed: {touch}")
    if winding != 1:
        return UnresolvedCell(cell, 1, f"certification box has winding {winding}")
    return ComputedResonance(z=z, residual_norm=residual, winding_cell=box, newton_iters=iterations, search_cell=cell)


def locate_all(window: SpectralWindow, V: Potential | None = None, h: float | None = None,
               evaluator: Evaluator | None = None, seeds=()) -> LocateResult:
    """
    All zeros in the window: count, subdivide until each cell winds at most once,
    polish each simple cell and certify the root with a small winding-1 box.
    ``seeds`` (e.g. predicted resonances) are tried first as Newton starts.
    """
    seeds = [complex(z) for z in seeds]
    h = window.h if h is None else h
    if V is not None:
        window.validate(V)
    if evaluator is None:
        if V is None:
            raise ValueError("locate_all needs a potential or an evaluator.")
        evaluator = ResidualEvaluator(V, h)

    total, rect = certified_count(window.rectangle, evaluator, 1e-3 * h)
    logging.info(f"Window {rect} winds {total} time(s) at h={h}")
    cells = [(rect, total)]
    for nu in sorted(window.levels):
        level = -nu * h * math.log(1.0 / h)
        split = []
        for cell, count in cells:
            if cell.im_lo < level < cell.im_hi and count:
                split.extend(_split_at(cell, count, evaluator, level))
            else:
                split.append((cell, count))
        cells = split

    roots, unresolved = [], []
    scale_re, scale_im = rect.width, rect.height
    stack = list(reversed(cells))
    while stack:
        cell, count = stack.pop()
        if count == 0:
            continue
        if count < 0:
            unresolved.append(UnresolvedCell(cell, count, "negative winding (pole inside?)"))
            continue
        if count == 1:
            outcome = _polish(cell, evaluator, seeds)
            (roots if isinstance(outcome, ComputedResonance) else unresolved).append(outcome)
            continue
        if max(cell.width, cell.height) <= 1e-10 * max(1.0, abs(cell.center)):
            unresolved.append(UnresolvedCell(cell, count, "cluster below resolution"))
            continue
        along_real = cell.width / scale_re >= cell.height / scale_im
        children = subdivide(cell, count, evaluator, along_real)
        stack.extend(reversed(children))

    roots.sort(key=lambda r: (r.z.real, r.z.imag))
    for cell in unresolved:
        logging.warning(f"Unresolved cell {cell.cell}: {cell.reason}")
    accounted = len(roots) + sum(max(c.winding, 0) for c in unresolved)
    if accounted != total:
        raise ContourError(f"Certified completeness failed: {accounted} accounted for, window count {total}.")
    evaluations = getattr(evaluator, "points", 0)
    logging.info(f"Located {len(roots)} root(s), {len(unresolved)} unresolved cell(s), {evaluations} residual evaluations")
    return LocateResult(roots=roots, unresolved=unresolved, total_count=total, evaluations=evaluations)


def _split_at(cell: Rectangle, count: int, evaluator: Evaluator, level: float) -> list[tuple[Rectangle, int]]:
    lower, upper = replace(cell, im_hi=level), replace(cell, im_lo=level)
    try:
        counts = [_winding(lower, evaluator, config.CONTOUR_POINTS_PER_SIDE),
                  _winding(upper, evaluator, config.CONTOUR_POINTS_PER_SIDE)]
    except _ContourTouch:
        logging.warning(f"Depth level {level:.4g} passes through a zero; keeping the cell whole")
        return [(cell, count)]
    if sum(counts) != count:
        raise ContourError(f"Count not conserved on depth split of {cell}: {count} -> {counts}.")
    return [(lower, counts[0]), (upper, counts[1])]


# --- Pairing with predictions ---

@dataclass(frozen=True)
class MatchReport:
    h: float
    pairs: list[dict] = field(default_factory=list)
    max_error: float = 0.0
    median_error: float = 0.0
    max_normalized: float = 0.0
    median_normalized: float = 0.0
    unmatched_computed: list[complex] = field(default_factory=list)
    unmatched_predicted: list[int] = field(default_factory=list)
    mismatch: bool = False


def match_predictions(computed: list[ComputedResonance], predicted: list, h: float | None = None
                      ) -> tuple[MatchReport, list[ComputedResonance]]:
    """
    Pairs computed roots with predictions (nearest in z, scanning by Re z) and
    reports |Δz| and |Δz| / (h² log²(1/h)). Returns the report and the computed
    roots with ``paired_index`` filled in.
    """
    if h is None:
        if not predicted:
            raise ValueError("h is required when there are no predictions.")
        h = predicted[0].h
    scale = h ** 2 * math.log(1.0 / h) ** 2
    if not computed and not predicted:
        return MatchReport(h=h), []
    if abs(len(computed) - len(predicted)) > 1 or not computed or not predicted:
        logging.warning(f"Cardinality mismatch: {len(computed)} computed vs {len(predicted)} predicted")
        return MatchReport(
            h=h,
            unmatched_computed=[c.z for c in computed],
            unmatched_predicted=[p.n for p in predicted],
            mismatch=True,
        ), list(computed)

    ordered = sorted(predicted, key=lambda p: p.z_n.real)
    available = sorted(range(len(computed)), key=lambda i: computed[i].z.real)
    pairs, paired = [], {}
    for prediction in ordered:
        if not available:
            break
        best = min(available, key=lambda i: abs(computed[i].z - prediction.z_n))
        available.remove(best)
        dz = abs(computed[best].z - prediction.z_n)
        paired[best] = prediction.n
        pairs.append({
            "n": prediction.n,
            "z_computed": computed[best].z,
            "z_predicted": prediction.z_n,
            "abs_dz": dz,
            "normalized": dz / scale,
        })

    # Uniqueness: every displacement must sit well inside half the minimum spacing.
    zs = sorted((c.z for c in computed), key=lambda z: z.real)
    spacing = min((abs(p - q) for p, q in zip(zs, zs[1:])), default=math.inf)
    mismatch = any(pair["abs_dz"] >= 0.5 * spacing for pair in pairs)
    if mismatch:
        logging.warning(f"Pairing ambiguous: displacement reaches half the minimum spacing {spacing:.3e}")
    errors = [pair["abs_dz"] for pair in pairs]
    report = MatchReport(
        h=h,
        pairs=pairs,
        max_error=max(errors),
        median_error=float(np.median(errors)),
        max_normalized=max(errors) / scale,
        median_normalized=float(np.median(errors)) / scale,
        unmatched_computed=[computed[i].z for i in available],
        unmatched_predicted=[p.n for p in ordered if p.n not in paired.values()],
        mismatch=mismatch,
    )
    tagged = [replace(c, paired_index=paired.get(i)) for i, c in enumerate(computed)]
    return report, tagged
