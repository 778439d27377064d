# resonance_lab/model/potential.py

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from resonance_lab.errors import (
    DegenerateOrderError,
    InterfaceAmbiguityError,
    OrderValidationError,
    PotentialError,
)
from resonance_lab.model.shapes import PolynomialShape, Shape, shape_from_dict

VANISHING_TOL = 1e-12
MAX_INFERRED_ORDER = 24


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    TWO_SIDED = "two-sided"


@dataclass(frozen=True)
class Piece:
    left: float
    right: float
    shape: Shape

    def contains(self, x: float) -> bool:
        return self.left <= x <= self.right

    def to_dict(self) -> dict:
        return {"interval": [self.left, self.right], **self.shape.to_dict()}


@dataclass(frozen=True)
class Potential:
    """
    Compactly supported, piecewise-smooth real potential with supp V in [0, L].

    Pieces tile [0, L] in order; V vanishes identically outside. The declared
    orders (k, l) are the vanishing orders of V at 0+ and L-; when omitted they
    are inferred from the derivative oracle.
    """

    support_right: float
    pieces: tuple[Piece, ...]
    declared_orders: tuple[int, int] | None = None
    name: str = ""

    def __post_init__(self):
        L = float(self.support_right)
        if not L > 0:
            raise PotentialError(f"support_right must be positive, got {self.support_right}.")
        if not self.pieces:
            raise PotentialError("A potential needs at least one piece.")
        pieces = tuple(sorted(self.pieces, key=lambda p: p.left))
        if abs(pieces[0].left) > 1e-14 or abs(pieces[-1].right - L) > 1e-14 * max(1.0, L):
            raise PotentialError(f"Pieces must tile [0, {L}] exactly.")
        for before, after in zip(pieces, pieces[1:]):
            if abs(before.right - after.left) > 1e-14 * max(1.0, L):
                raise PotentialError(
                    f"Pieces are not contiguous: gap/overlap between {before.right} and {after.left}."
                )
        for piece in pieces:
            if not piece.right > piece.left:
                raise PotentialError(f"Empty piece [{piece.left}, {piece.right}].")
        if self.declared_orders is not None:
            k, l = self.declared_orders
            if k < 0 or l < 0:
                raise PotentialError(f"Declared orders must be nonnegative, got {self.declared_orders}.")
            object.__setattr__(self, "declared_orders", (int(k), int(l)))
        object.__setattr__(self, "support_right", L)
        object.__setattr__(self, "pieces", pieces)

    # --- Construction helpers ---

    @classmethod
    def single(cls, shape: Shape, L: float = 1.0, orders=None, name: str = "") -> "Potential":
        return cls(L, (Piece(0.0, L, shape),), orders, name)

    @classmethod
    def constant(cls, V0: float, L: float = 1.0) -> "Potential":
        return cls.single(PolynomialShape((V0,)), L, (0, 0) if V0 else None, name=f"constant({V0})")

    @classmethod
    def from_dict(cls, data: dict) -> "Potential":
        L = float(data["support_right"])
        pieces = []
        for entry in data["pieces"]:
            entry = dict(entry)
            left, right = entry.pop("interval", (0.0, L))
            pieces.append(Piece(float(left), float(right), shape_from_dict(entry)))
        orders = data.get("declared_orders")
        if isinstance(orders, dict):
            orders = (orders["left"], orders["right"])
        return cls(L, tuple(pieces), tuple(orders) if orders is not None else None, data.get("name", ""))

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "support_right": self.support_right,
            "pieces": [p.to_dict() for p in self.pieces],
        }
        if self.declared_orders is not None:
            data["declared_orders"] = {"left": self.declared_orders[0], "right": self.declared_orders[1]}
        return data

    # --- Geometry ---

    @property
    def interfaces(self) -> tuple[float, ...]:
        """Y: 0, L and every interior piece boundary."""
        return (0.0,) + tuple(p.right for p in self.pieces)

    def is_interface(self, x: float) -> bool:
        return any(abs(x - y) <= 1e-14 * max(1.0, self.support_right) for y in self.interfaces)

    def _piece_for(self, x: float, side: Side) -> Piece | None:
        """Piece whose one-sided limit is taken at x, or None for the exterior."""
        L = self.support_right
        if x < 0.0 or x > L:
            return None
        if side == Side.LEFT and x <= 0.0:
            return None
        if side == Side.RIGHT and x >= L:
            return None
        for piece in self.pieces:
            if side == Side.LEFT and piece.left < x <= piece.right:
                return piece
            if side != Side.LEFT and piece.left <= x < piece.right:
                return piece
        return self.pieces[-1]

    # --- Derivative oracle ---

    def one_sided(self, x: float, m: int = 0, side: Side = Side.RIGHT) -> float:
        piece = self._piece_for(x, Side(side))
        if piece is None:
            return 0.0
        return float(piece.shape.derivative(x, m))

    def eval(self, x: float, m: int = 0, side: Side | str = Side.TWO_SIDED) -> float:
        """V^(m)(x); one-sided at interfaces when side is LEFT/RIGHT."""
        side = Side(side)
        if m < 0:
            raise ValueError(f"Derivative order must be nonnegative, got {m}.")
        if side != Side.TWO_SIDED:
            return self.one_sided(x, m, side)
        if not self.is_interface(x):
            return self.one_sided(x, m, Side.RIGHT)
        left = self.one_sided(x, m, Side.LEFT)
        right = self.one_sided(x, m, Side.RIGHT)
        if abs(left - right) > VANISHING_TOL * max(1.0, abs(left), abs(right)):
            raise InterfaceAmbiguityError(
                f"V^({m}) is discontinuous at interface x={x}: left {left}, right {right}. Pass side='left' or 'right'."
            )
        return right

    def values(self, xs) -> np.ndarray:
        """Vectorized V(x) on interior points; zero outside [0, L]."""
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        for piece in self.pieces:
            mask = (xs >= piece.left) & (xs < piece.right)
            if mask.any():
                out[mask] = piece.shape(xs[mask])
        at_end = xs == self.support_right
        if at_end.any():
            out[at_end] = self.pieces[-1].shape(xs[at_end])
        return out

    def jet(self, x0: float, side: Side, degree: int) -> np.ndarray:
        """One-sided Taylor coefficients V^(j)(x0±)/j!, j = 0..degree."""
        piece = self._piece_for(x0, Side(side))
        if piece is None:
            return np.zeros(degree + 1)
        return piece.shape.taylor(x0, degree)

    # --- Vanishing orders ---

    def _value_scale(self, piece: Piece) -> float:
        """Rough sup |V| on a piece, sampled."""
        grid = np.linspace(piece.left, piece.right, 257)
        return float(np.max(np.abs(piece.shape(grid))))

    def is_identically_zero(self) -> bool:
        return all(self._value_scale(piece) == 0.0 for piece in self.pieces)

    def _endpoint_order(self, x0: float, side: Side, declared: int | None) -> int:
        """
        Vanishing order at an endpoint. V^(j)(x0) counts as zero when it is below
        VANISHING_TOL * sup|V| * j! / length^j on the piece that touches x0.
        """
        piece = self._piece_for(x0, side)
        scale = self._value_scale(piece)
        if scale == 0.0:
            raise DegenerateOrderError(f"V vanishes identically near x={x0}; vanishing order undefined.")
        length = piece.right - piece.left
        top = MAX_INFERRED_ORDER if declared is None else max(declared, MAX_INFERRED_ORDER)
        derivs = [self.one_sided(x0, j, side) for j in range(top + 1)]
        vanishes = [abs(d) <= VANISHING_TOL * scale * math.factorial(j) / length ** j for j, d in enumerate(derivs)]
        if declared is None:
            for j, zero in enumerate(vanishes):
                if not zero:
                    return j
            raise DegenerateOrderError(
                f"V vanishes to every order up to {MAX_INFERRED_ORDER} at x={x0}; vanishing order undefined."
            )
        for j in range(declared):
            if not vanishes[j]:
                raise OrderValidationError(
                    f"Declared order {declared} at x={x0} but V^({j})={derivs[j]:.3e} does not vanish."
                )
        if vanishes[declared]:
            raise OrderValidationError(f"Declared order {declared} at x={x0} but V^({declared}) vanishes.")
        return declared

    def vanishing_orders(self) -> tuple[int, int]:
        """(k, l), verified against the derivative oracle."""
        if self.is_identically_zero():
            raise DegenerateOrderError("V vanishes identically; vanishing orders are undefined.")
        k_decl, l_decl = self.declared_orders if self.declared_orders is not None else (None, None)
        k = self._endpoint_order(0.0, Side.RIGHT, k_decl)
        l = self._endpoint_order(self.support_right, Side.LEFT, l_decl)
        return k, l

    def infer_orders(self) -> tuple[int, int]:
        return (
            self._endpoint_order(0.0, Side.RIGHT, None),
            self._endpoint_order(self.support_right, Side.LEFT, None),
        )

    @property
    def alpha(self) -> int:
        return min(self.vanishing_orders())

    def interface_order(self, y: float) -> float:
        """Smallest j with V^(j)(y-) != V^(j)(y+); inf when V is smooth across y."""
        if abs(y) <= 1e-14:
            return self.vanishing_orders()[0]
        if abs(y - self.support_right) <= 1e-14 * max(1.0, self.support_right):
            return self.vanishing_orders()[1]
        for j in range(MAX_INFERRED_ORDER + 1):
            left = self.one_sided(y, j, Side.LEFT)
            right = self.one_sided(y, j, Side.RIGHT)
            if abs(left - right) > VANISHING_TOL * max(1.0, abs(left), abs(right)):
                return j
        return math.inf

    # --- Maximum ---

    def argmax_on(self, lo: float, hi: float) -> tuple[float, float]:
        """(max V, argmax) over [lo, hi] ∩ [0, L], one-sided limits included."""
        best_value, best_x = -math.inf, lo
        for piece in self.pieces:
            a, b = max(lo, piece.left), min(hi, piece.right)
            if a > b:
                continue
            shape = piece.shape
            candidates = [a, b]
            critical = shape.critical_points(a, b)
            if critical is None:
                critical = [_bounded_argmax(shape, a, b)]
            candidates.extend(critical)
            for x in candidates:
                value = float(shape(x))
                if value > best_value:
                    best_value, best_x = value, float(x)
        if best_value == -math.inf:
            raise PotentialError(f"[{lo}, {hi}] does not meet the support [0, {self.support_right}].")
        return best_value, best_x

    def sup(self) -> float:
        return self.argmax_on(0.0, self.support_right)[0]

    def sup_on(self, lo: float, hi: float) -> float:
        return self.argmax_on(lo, hi)[0]


def _bounded_argmax(shape: Shape, a: float, b: float, samples: int = 257) -> float:
    """Grid search then bounded Brent polish for shapes without closed-form critical points."""
    grid = np.linspace(a, b, samples)
    i = int(np.argmax(shape(grid)))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, samples - 1)]
    if hi <= lo:
        return float(grid[i])
    result = minimize_scalar(lambda x: -float(shape(x)), bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-12})
    logging.debug(f"Bounded maximization on [{lo:.6g}, {hi:.6g}] -> x={result.x:.12g}")
    return float(result.x)


def vanishing_orders(V: Potential) -> tuple[int, int]:
    return V.vanishing_orders()


def sup_V(V: Potential) -> float:
    return V.sup()
