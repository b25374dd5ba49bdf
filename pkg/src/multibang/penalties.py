"""Geometry-agnostic nodewise penalty interface for the Newton drivers.

A PenaltyModel binds an admissible geometry and the cost weight alpha;
drivers supply gamma per continuation level.  Labels are integer arrays
suitable for exact active-set comparison across iterates.
"""

from dataclasses import dataclass

import numpy as np

from . import concentric, oracles, radial
from .sets import ConcentricSet, PenaltyParams, RadialSet


@dataclass(frozen=True)
class PenaltyModel:
    geometry: object  # RadialSet or ConcentricSet
    alpha: float

    def __post_init__(self):
        if not isinstance(self.geometry, (RadialSet, ConcentricSet)):
            raise TypeError("geometry must be a RadialSet or ConcentricSet")

    @property
    def is_radial(self):
        return isinstance(self.geometry, RadialSet)

    def params(self, gamma):
        return PenaltyParams(self.alpha, gamma)

    def admissible(self):
        return self.geometry.admissible(self.alpha)

    def min_cost(self):
        return float(self.admissible().costs.min())

    def yosida(self, Q, gamma):
        if self.is_radial:
            return radial.yosida_batch(Q, self.geometry, self.params(gamma))
        return concentric.yosida_batch(Q, self.params(gamma))

    def prox(self, Q, gamma):
        if self.is_radial:
            return radial.prox_batch(Q, self.geometry, self.params(gamma))
        return concentric.prox_batch(Q, self.params(gamma))

    def newton_deriv(self, Q, gamma):
        if self.is_radial:
            return radial.newton_deriv_batch(Q, self.geometry, self.params(gamma))
        return concentric.newton_deriv_batch(Q, self.params(gamma))

    def labels(self, Q, gamma):
        """(n, 2) or (n, 3) int array identifying each node's region."""
        if self.is_radial:
            code, idx, _ = radial.classify_batch(Q, self.geometry, self.params(gamma))
            return np.stack([code, np.where(code == radial.Q0, 0, idx)], axis=1)
        i, j, k = concentric.classify_batch(Q, self.params(gamma))
        return np.stack([i, j, k], axis=1)

    def pure_mask(self, labels):
        """Nodes whose region maps onto a single admissible vertex."""
        if self.is_radial:
            return np.isin(labels[:, 0], radial.PURE_CODES)
        return np.all(labels != 0, axis=1)

    def penalty_values(self, U):
        aset = self.admissible()
        return np.array([oracles.penalty_value(u, aset) for u in np.atleast_2d(U)])

    def nearest_vertex(self, U):
        pts = self.admissible().points
        U = np.atleast_2d(np.asarray(U, dtype=float))
        d = ((U[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        return np.argmin(d, axis=1)
