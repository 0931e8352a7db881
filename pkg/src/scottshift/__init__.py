"""Relativistic Scott correction toolkit.

Momentum-space partial-wave discretization of the Brown-Ravenhall,
Chandrasekhar and Schroedinger hydrogenic operators, the spectral shift
s(kappa) between them, a Thomas-Fermi solver and the Scott-corrected
atomic energy.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConvergenceError,
    DomainError,
    GridResolutionError,
    QuadratureError,
    ScottShiftError,
    SupercriticalError,
    TailFitError,
)
