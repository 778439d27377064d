# resonance_lab/model/__init__.py
from resonance_lab.model.potential import Piece, Potential, Side, sup_V, vanishing_orders
from resonance_lab.model.shapes import GaussianShape, PolynomialShape, TrigonometricShape

__all__ = [
    "GaussianShape",
    "Piece",
    "PolynomialShape",
    "Potential",
    "Side",
    "TrigonometricShape",
    "sup_V",
    "vanishing_orders",
]
