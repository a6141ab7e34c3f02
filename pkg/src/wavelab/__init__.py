"""Numerical laboratory for semilinear wave systems with quadratic
derivative nonlinearities."""

__version__ = "0.1.0"
