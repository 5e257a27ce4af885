"""Heisenberg-group calculus, metrics, and monotone solvers for
semilinear parabolic and Hamilton-Jacobi equations."""

from . import ccmetric, doubling, hcalc, hgroup, hopflax, oracles, regularity, solver
from .errors import HviscError

__all__ = [
    "HviscError",
    "ccmetric",
    "doubling",
    "hcalc",
    "hgroup",
    "hopflax",
    "oracles",
    "regularity",
    "solver",
]

__version__ = "0.1.0"
