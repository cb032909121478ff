"""Tightness of max-type recursive distributional equations: numerics and simulation."""
__version__ = "0.1.0"
