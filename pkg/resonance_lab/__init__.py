# resonance_lab/__init__.py
"""Resonances of 1D semiclassical Schrödinger operators with compactly supported potentials."""

__version__ = "0.3.0"
