"""Solvers for vector multibang optimal control.

Convex-relaxed penalties drive distributed controls toward a finite set
of admissible vectors; the regularized optimality systems are solved by
semismooth Newton methods with continuation in the regularization
parameter.  Two model problems are provided: pulse design for the Bloch
equation and distributed force control for linearized elasticity.
"""

from ._accel import HAVE_NUMBA, accel_mode
from .sets import AdmissibleSet, ConcentricSet, PenaltyParams, RadialSet, SubgradientSet

__all__ = [
    "HAVE_NUMBA",
    "accel_mode",
    "AdmissibleSet",
    "ConcentricSet",
    "PenaltyParams",
    "RadialSet",
    "SubgradientSet",
]

__version__ = "0.1.0"
