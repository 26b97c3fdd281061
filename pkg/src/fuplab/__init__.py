"""Numerical laboratory for hyperbolic flows, porous sets, and
fractal-uncertainty experiments on masked transforms."""

__version__ = "0.1.0"
