# resonance_lab/tests/__init__.py
