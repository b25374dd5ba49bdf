"""Closed forms for the concentric-corner admissible set.

The eight admissible points are k*(i, j) with i, j in {-1, 1} and
k in {1, 2}; the conjugate is max(|q|_1 - a, 2|q|_1 - 4a).  Dual points
are classified by a sign triple (i, j, k) in {-1, 0, 1}^3 where a zero
entry marks a lower-dimensional stratum.
"""

from dataclasses import dataclass

import numpy as np

from .sets import ConcentricSet, PenaltyParams, SubgradientSet


@dataclass(frozen=True)
class ConcentricRegion:
    i: int
    j: int
    k: int

    @property
    def is_pure(self):
        return self.i != 0 and self.j != 0 and self.k != 0


def conjugate(q, alpha):
    q = np.asarray(q, dtype=float)
    l1 = abs(q[0]) + abs(q[1])
    return max(l1 - alpha, 2.0 * l1 - 4.0 * alpha)


def subdifferential(q, cset: ConcentricSet, alpha) -> SubgradientSet:
    """Generators via the maximum rule over the eight points."""
    q = np.asarray(q, dtype=float)
    vals = cset.vertices @ q - alpha * (cset.vertices**2).sum(axis=1) / 2.0
    top = vals.max()
    tol = 1e-12 * max(1.0, abs(top))
    active = np.flatnonzero(vals >= top - tol)
    return SubgradientSet(cset.vertices[active])


def _eta(x, alpha, gamma):
    lo, hi = 3.0 * alpha + gamma, 3.0 * alpha + 2.0 * gamma
    return np.where(x < lo, gamma, np.where(x > hi, 2.0 * gamma, x - 3.0 * alpha))


def classify_batch(Q, params: PenaltyParams):
    """Sign triples (i, j, k) for each dual point, vectorized."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    alpha, gamma = params.alpha, params.gamma
    a1, a2 = np.abs(Q[:, 0]), np.abs(Q[:, 1])
    l1 = a1 + a2
    linf = np.maximum(a1, a2)

    i = np.where(a1 <= _eta(a2, alpha, gamma), 0, np.sign(Q[:, 0])).astype(np.int64)
    j = np.where(a2 <= _eta(a1, alpha, gamma), 0, np.sign(Q[:, 1])).astype(np.int64)

    k = np.zeros(Q.shape[0], dtype=np.int64)
    inner = (linf < 3.0 * alpha + gamma) & (l1 < 3.0 * alpha + 2.0 * gamma)
    outer = (linf > 3.0 * alpha + 2.0 * gamma) | (l1 > 3.0 * alpha + 4.0 * gamma)
    k[inner] = -1
    k[~inner & outer] = 1
    return i, j, k


def _masks(i, j, k):
    nz = (i != 0) & (j != 0) & (k != 0)
    low = (np.abs(i) + np.abs(j) + np.abs(k)) <= 1
    axis_j = (i == 0) & (j != 0) & (k != 0)
    axis_i = (i != 0) & (j == 0) & (k != 0)
    ring = (i != 0) & (j != 0) & (k == 0)
    return nz, low, axis_j, axis_i, ring


def prox_batch_from_labels(Q, i, j, k, params: PenaltyParams):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    alpha, gamma = params.alpha, params.gamma
    out = np.empty_like(Q)
    nz, low, axis_j, axis_i, ring = _masks(i, j, k)
    mag = (k + 3) / 2.0  # 1 on the inner ring, 2 on the outer

    if nz.any():
        out[nz, 0] = Q[nz, 0] - gamma * mag[nz] * i[nz]
        out[nz, 1] = Q[nz, 1] - gamma * mag[nz] * j[nz]
    if low.any():
        out[low, 0] = 3.0 * alpha * i[low]
        out[low, 1] = 3.0 * alpha * j[low]
    if axis_j.any():
        out[axis_j, 0] = 0.0
        out[axis_j, 1] = Q[axis_j, 1] - gamma * mag[axis_j] * j[axis_j]
    if axis_i.any():
        out[axis_i, 0] = Q[axis_i, 0] - gamma * mag[axis_i] * i[axis_i]
        out[axis_i, 1] = 0.0
    if ring.any():
        lam = (np.abs(Q[ring]).sum(axis=1) - 3.0 * alpha) / 2.0
        out[ring, 0] = Q[ring, 0] - lam * i[ring]
        out[ring, 1] = Q[ring, 1] - lam * j[ring]
    return out


def yosida_batch_from_labels(Q, i, j, k, params: PenaltyParams):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    alpha, gamma = params.alpha, params.gamma
    out = np.empty_like(Q)
    nz, low, axis_j, axis_i, ring = _masks(i, j, k)
    mag = (k + 3) / 2.0

    if nz.any():
        out[nz, 0] = mag[nz] * i[nz]
        out[nz, 1] = mag[nz] * j[nz]
    if low.any():
        out[low, 0] = (Q[low, 0] - 3.0 * alpha * i[low]) / gamma
        out[low, 1] = (Q[low, 1] - 3.0 * alpha * j[low]) / gamma
    if axis_j.any():
        out[axis_j, 0] = Q[axis_j, 0] / gamma
        out[axis_j, 1] = mag[axis_j] * j[axis_j]
    if axis_i.any():
        out[axis_i, 0] = mag[axis_i] * i[axis_i]
        out[axis_i, 1] = Q[axis_i, 1] / gamma
    if ring.any():
        coef = (np.abs(Q[ring]).sum(axis=1) - 3.0 * alpha) / (2.0 * gamma)
        out[ring, 0] = coef * i[ring]
        out[ring, 1] = coef * j[ring]
    return out


def newton_deriv_batch_from_labels(Q, i, j, k, params: PenaltyParams):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    gamma = params.gamma
    out = np.zeros((Q.shape[0], 2, 2))
    _, low, axis_j, axis_i, ring = _masks(i, j, k)

    out[low] = np.eye(2) / gamma
    out[axis_j, 0, 0] = 1.0 / gamma
    out[axis_i, 1, 1] = 1.0 / gamma
    if ring.any():
        d = np.stack([i[ring], j[ring]], axis=1).astype(float)
        out[ring] = d[:, :, None] * d[:, None, :] / (2.0 * gamma)
    return out


def classify(q, params: PenaltyParams) -> ConcentricRegion:
    i, j, k = classify_batch(q, params)
    return ConcentricRegion(int(i[0]), int(j[0]), int(k[0]))


def prox(q, params: PenaltyParams):
    i, j, k = classify_batch(q, params)
    return prox_batch_from_labels(q, i, j, k, params)[0]


def prox_batch(Q, params):
    i, j, k = classify_batch(Q, params)
    return prox_batch_from_labels(Q, i, j, k, params)


def yosida(q, params: PenaltyParams):
    i, j, k = classify_batch(q, params)
    return yosida_batch_from_labels(q, i, j, k, params)[0]


def yosida_batch(Q, params):
    i, j, k = classify_batch(Q, params)
    return yosida_batch_from_labels(Q, i, j, k, params)


def newton_derivative(q, params: PenaltyParams):
    i, j, k = classify_batch(q, params)
    return newton_deriv_batch_from_labels(q, i, j, k, params)[0]


def newton_deriv_batch(Q, params):
    i, j, k = classify_batch(Q, params)
    return newton_deriv_batch_from_labels(Q, i, j, k, params)


def classification_margin(Q, params: PenaltyParams):
    """Distance of the decisive inequalities to their thresholds (tests)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    alpha, gamma = params.alpha, params.gamma
    a1, a2 = np.abs(Q[:, 0]), np.abs(Q[:, 1])
    l1, linf = a1 + a2, np.maximum(a1, a2)
    margins = np.stack(
        [
            np.abs(a1 - _eta(a2, alpha, gamma)),
            np.abs(a2 - _eta(a1, alpha, gamma)),
            np.abs(linf - (3.0 * alpha + gamma)),
            np.abs(linf - (3.0 * alpha + 2.0 * gamma)),
            np.abs(l1 - (3.0 * alpha + 2.0 * gamma)),
            np.abs(l1 - (3.0 * alpha + 4.0 * gamma)),
            a1,
            a2,
        ],
        axis=1,
    )
    return margins.min(axis=1)
