"""Admissible control sets and shared penalty parameters.

Two geometries are supported: a radial set (the origin plus M vectors of
equal magnitude omega0, phases strictly increasing with gaps below pi)
and the fixed concentric-corner set with the eight points k*(i, j) for
i, j in {-1, 1} and k in {1, 2}.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class PenaltyParams:
    """Control cost weight alpha and Yosida regularization parameter gamma."""

    alpha: float
    gamma: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class AdmissibleSet:
    """Finite set of admissible control vectors with their weighted costs.

    costs[i] = alpha * |points[i]|^2 / 2; points are pairwise distinct.
    """

    points: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (n, 2) array")
        d = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((d**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        if dist.min() == 0.0:
            raise ValueError("points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "costs", np.asarray(self.costs, dtype=float))

    @property
    def max_norm(self):
        return float(np.linalg.norm(self.points, axis=1).max())


def admissible_set(points, alpha):
    pts = np.asarray(points, dtype=float)
    return AdmissibleSet(pts, alpha * (pts**2).sum(axis=1) / 2.0)


@dataclass(frozen=True)
class RadialSet:
    """Radial admissible geometry: origin plus M phases of magnitude omega0.

    vertices[0] is the origin, vertices[i] = omega0*(cos t_i, sin t_i) for
    the phases sorted into [0, 2*pi).  midpoints[i] is the normalized
    bisector between consecutive phase directions (periodic).
    """

    omega0: float
    thetas: np.ndarray
    vertices: np.ndarray = field(init=False)
    midpoints: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        th = np.mod(np.asarray(self.thetas, dtype=float), 2.0 * np.pi)
        th = np.sort(th)
        m = th.size
        if m < 3:
            raise ValueError("need at least 3 phases")
        if np.any(np.diff(th) == 0.0):
            raise ValueError("phases must be distinct")
        gaps = np.diff(np.concatenate([th, [th[0] + 2.0 * np.pi]]))
        if np.any(gaps >= np.pi):
            raise ValueError("consecutive phase gaps must stay below pi")
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        verts = np.vstack([np.zeros((1, 2)), self.omega0 * dirs])
        mids = dirs + np.roll(dirs, -1, axis=0)
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "midpoints", mids)

    @property
    def n_phases(self):
        return self.thetas.size

    def admissible(self, alpha):
        return admissible_set(self.vertices, alpha)


_CONCENTRIC_VERTICES = np.array(
    [
        [1.0, 1.0],
        [1.0, -1.0],
        [-1.0, 1.0],
        [-1.0, -1.0],
        [2.0, 2.0],
        [2.0, -2.0],
        [-2.0, 2.0],
        [-2.0, -2.0],
    ]
)


@dataclass(frozen=True)
class ConcentricSet:
    """Concentric-corner geometry: two magnitudes of the four sign patterns.

    The closed forms downstream hardcode the magnitudes 1 and 2, so they
    are fixed here.
    """

    inner: float = 1.0
    outer: float = 2.0
    vertices: np.ndarray = field(init=False)

    def __post_init__(self):
        if (self.inner, self.outer) != (1.0, 2.0):
            raise ValueError("concentric set is fixed to magnitudes 1 and 2")
        object.__setattr__(self, "vertices", _CONCENTRIC_VERTICES.copy())

    def admissible(self, alpha):
        return admissible_set(self.vertices, alpha)


@dataclass(frozen=True)
class SubgradientSet:
    """Generators whose convex hull is the conjugate's subdifferential."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] == 0 or v.shape[1] != 2:
            raise ValueError("need at least one 2-vector generator")
        object.__setattr__(self, "vertices", v)
