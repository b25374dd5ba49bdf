"""Closed forms for the radial admissible set.

Conjugate, subdifferential, dual-point classification, proximal map,
Yosida regularization and Newton derivative.  Sector membership is
decided through dot/cross products (argmax of <q, u_i>), never through
angle arithmetic, with ties resolved to the lower index.

Region codes: 0 zero cone, 1 pure sector i, 2 zero/sector-i stratum,
3 sector-pair stratum (i, i+1), 4 triple stratum (0, i, i+1).
"""

from dataclasses import dataclass

import numpy as np

from .sets import PenaltyParams, RadialSet, SubgradientSet

Q0, QI, Q0I, QII1, Q0II1 = 0, 1, 2, 3, 4
PURE_CODES = (Q0, QI)

_KIND_NAMES = {Q0: "Q0", QI: "Qi", Q0I: "Q0i", QII1: "Qii1", Q0II1: "Q0ii1"}


@dataclass(frozen=True)
class RadialRegion:
    """Classification of a dual point, with the classifier intermediates."""

    code: int
    i: int  # 1-based sector index (0 for the zero cone)
    i_q: int
    j_q: int
    k_q: int
    rho_q: float
    sigma_q: float

    @property
    def kind(self):
        return _KIND_NAMES[self.code]

    def __repr__(self):
        return f"RadialRegion({self.kind}, i={self.i})"


def _sector(Q, verts):
    # argmax of <q, u_i> over the nonzero vertices; first max = lowest index
    return np.argmax(Q @ verts[1:].T, axis=1)


def classify_batch(Q, rset: RadialSet, params: PenaltyParams):
    """Vectorized classifier; returns (code, idx, aux) with 0-based idx.

    aux carries (i_q, j_q, k_q, rho, sigma) as arrays, 0-based indices.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    U = rset.vertices[1:]
    m = rset.n_phases
    w0sq = rset.omega0**2
    alpha, gamma = params.alpha, params.gamma
    n = Q.shape[0]

    iq = _sector(Q, rset.vertices)
    rho = np.take_along_axis(Q @ U.T, iq[:, None], axis=1)[:, 0]
    jq = _sector(Q - gamma * U[iq], rset.vertices)
    lam = rho / w0sq - alpha / 2.0
    kq = _sector(Q - lam[:, None] * U[iq], rset.vertices)
    s = U[iq] + U[jq]
    sigma = np.sum((Q - 0.5 * gamma * s) * s, axis=1)

    cross = U[iq, 0] * Q[:, 1] - U[iq, 1] * Q[:, 0]
    step = np.where(cross >= 0.0, 1, -1)  # sign(0) treated as +1
    partner = (iq + step) % m
    pair_base = np.where(step == 1, iq, partner)

    code = np.full(n, -1, dtype=np.int64)
    idx = np.zeros(n, dtype=np.int64)

    free = code == -1
    mask = free & (rho < alpha * w0sq / 2.0)
    code[mask] = Q0

    free = code == -1
    mask = free & (rho > (alpha / 2.0 + gamma) * w0sq) & (iq == jq)
    code[mask], idx[mask] = QI, iq[mask]

    free = code == -1
    mask = (
        free
        & (rho >= alpha * w0sq / 2.0)
        & (rho <= (alpha / 2.0 + gamma) * w0sq)
        & (iq == kq)
    )
    code[mask], idx[mask] = Q0I, iq[mask]

    free = code == -1
    adjacent = jq == (iq + 1) % m
    adj_base = np.where(adjacent, iq, jq)
    adjacent |= iq == (jq + 1) % m
    mask = free & adjacent & (sigma > alpha * w0sq)
    code[mask], idx[mask] = QII1, adj_base[mask]

    free = code == -1
    mask = free & (kq != iq) & (sigma <= alpha * w0sq)
    code[mask], idx[mask] = Q0II1, pair_base[mask]

    leftover = np.flatnonzero(code == -1)
    for r in leftover:
        code[r], idx[r] = _resolve_by_objective(Q[r], iq[r], pair_base[r], rset, params)

    return code, idx, (iq, jq, kq, rho, sigma)


def _resolve_by_objective(q, iq, base, rset, params):
    # measure-zero numerical gaps: pick the candidate whose prox minimizes
    # the Moreau-Yosida objective among all five formulas
    candidates = [
        (Q0, 0),
        (QI, iq),
        (Q0I, iq),
        (QII1, base),
        (Q0II1, base),
    ]
    best, out = np.inf, candidates[0]
    for code, i in candidates:
        w = _prox_formula(q, code, i, rset, params)
        f = ((w - q) ** 2).sum() / (2.0 * params.gamma) + conjugate(w, rset, params.alpha)
        if f < best:
            best, out = f, (code, i)
    return out


def _pair_vectors(idx, rset):
    m = rset.n_phases
    ui = rset.vertices[1:][idx]
    ui1 = rset.vertices[1:][(idx + 1) % m]
    return ui, ui1


def _prox_formula(q, code, idx, rset, params):
    return prox_batch_from_labels(
        np.asarray(q, dtype=float)[None, :],
        np.array([code]),
        np.array([idx]),
        rset,
        params,
    )[0]


def prox_batch_from_labels(Q, code, idx, rset, params):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    alpha, gamma = params.alpha, params.gamma
    w0sq = rset.omega0**2
    U = rset.vertices[1:]
    out = Q.copy()

    mask = code == QI
    if mask.any():
        out[mask] = Q[mask] - gamma * U[idx[mask]]

    mask = code == Q0I
    if mask.any():
        ui = U[idx[mask]]
        lam = np.sum(Q[mask] * ui, axis=1) / w0sq - alpha / 2.0
        out[mask] = Q[mask] - lam[:, None] * ui

    mask = code == QII1
    if mask.any():
        ui, ui1 = _pair_vectors(idx[mask], rset)
        d = ui - ui1
        coef = np.sum(Q[mask] * d, axis=1) / np.sum(d * d, axis=1)
        out[mask] = Q[mask] - 0.5 * gamma * (ui + ui1) - coef[:, None] * d

    mask = code == Q0II1
    if mask.any():
        ui, ui1 = _pair_vectors(idx[mask], rset)
        s = ui + ui1
        out[mask] = alpha * (w0sq / np.sum(s * s, axis=1))[:, None] * s

    return out


def yosida_batch_from_labels(Q, code, idx, rset, params):
    """Piecewise Yosida formulas; exact vertex values on pure regions."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    alpha, gamma = params.alpha, params.gamma
    w0sq = rset.omega0**2
    U = rset.vertices[1:]
    out = np.zeros_like(Q)

    mask = code == QI
    if mask.any():
        out[mask] = U[idx[mask]]

    mask = code == Q0I
    if mask.any():
        ui = U[idx[mask]]
        coef = np.sum(Q[mask] * ui, axis=1) / (gamma * w0sq) - alpha / (2.0 * gamma)
        out[mask] = coef[:, None] * ui

    mask = code == QII1
    if mask.any():
        ui, ui1 = _pair_vectors(idx[mask], rset)
        d = ui - ui1
        coef = np.sum(Q[mask] * d, axis=1) / (gamma * np.sum(d * d, axis=1))
        out[mask] = 0.5 * (ui + ui1) + coef[:, None] * d

    mask = code == Q0II1
    if mask.any():
        ui, ui1 = _pair_vectors(idx[mask], rset)
        s = ui + ui1
        coef = alpha / gamma * w0sq / np.sum(s * s, axis=1)
        out[mask] = Q[mask] / gamma - coef[:, None] * s

    return out


def newton_deriv_batch_from_labels(Q, code, idx, rset, params):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    gamma = params.gamma
    w0sq = rset.omega0**2
    out = np.zeros((Q.shape[0], 2, 2))

    mask = code == Q0I
    if mask.any():
        ui = rset.vertices[1:][idx[mask]]
        out[mask] = ui[:, :, None] * ui[:, None, :] / (gamma * w0sq)

    mask = code == QII1
    if mask.any():
        ui, ui1 = _pair_vectors(idx[mask], rset)
        d = ui - ui1
        den = gamma * np.sum(d * d, axis=1)
        out[mask] = d[:, :, None] * d[:, None, :] / den[:, None, None]

    mask = code == Q0II1
    if mask.any():
        out[mask] = np.eye(2) / gamma

    return out


def classify(q, rset: RadialSet, params: PenaltyParams) -> RadialRegion:
    code, idx, (iq, jq, kq, rho, sigma) = classify_batch(q, rset, params)
    i = int(idx[0]) + 1 if code[0] != Q0 else 0
    return RadialRegion(
        code=int(code[0]),
        i=i,
        i_q=int(iq[0]) + 1,
        j_q=int(jq[0]) + 1,
        k_q=int(kq[0]) + 1,
        rho_q=float(rho[0]),
        sigma_q=float(sigma[0]),
    )


def prox(q, rset: RadialSet, params: PenaltyParams):
    code, idx, _ = classify_batch(q, rset, params)
    return prox_batch_from_labels(q, code, idx, rset, params)[0]


def prox_batch(Q, rset, params):
    code, idx, _ = classify_batch(Q, rset, params)
    return prox_batch_from_labels(Q, code, idx, rset, params)


def yosida(q, rset: RadialSet, params: PenaltyParams):
    code, idx, _ = classify_batch(q, rset, params)
    return yosida_batch_from_labels(q, code, idx, rset, params)[0]


def yosida_batch(Q, rset, params):
    code, idx, _ = classify_batch(Q, rset, params)
    return yosida_batch_from_labels(Q, code, idx, rset, params)


def newton_derivative(q, rset: RadialSet, params: PenaltyParams):
    code, idx, _ = classify_batch(q, rset, params)
    return newton_deriv_batch_from_labels(q, code, idx, rset, params)[0]


def newton_deriv_batch(Q, rset, params):
    code, idx, _ = classify_batch(Q, rset, params)
    return newton_deriv_batch_from_labels(Q, code, idx, rset, params)


def conjugate(q, rset: RadialSet, alpha):
    """Piecewise-affine conjugate: 0 on the polar cone of the zero vertex."""
    q = np.asarray(q, dtype=float)
    dots = rset.vertices[1:] @ q
    top = float(dots.max())
    thresh = alpha * rset.omega0**2 / 2.0
    if top <= thresh:
        return 0.0
    return top - thresh


def subdifferential(q, rset: RadialSet, alpha) -> SubgradientSet:
    """Generators of the conjugate subdifferential at q (maximum rule)."""
    q = np.asarray(q, dtype=float)
    vals = rset.vertices @ q - alpha * (rset.vertices**2).sum(axis=1) / 2.0
    top = vals.max()
    tol = 1e-12 * max(1.0, abs(top))
    active = np.flatnonzero(vals >= top - tol)
    return SubgradientSet(rset.vertices[active])


def classification_margin(Q, rset: RadialSet, params: PenaltyParams):
    """Distance of the decisive classifier quantities to their thresholds.

    Used by tests to exclude stratum-boundary points from stability and
    finite-difference checks.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    _, _, (iq, jq, kq, rho, sigma) = classify_batch(Q, rset, params)
    alpha, gamma = params.alpha, params.gamma
    w0sq = rset.omega0**2

    def sector_gap(P):
        dots = P @ rset.vertices[1:].T
        part = np.partition(dots, -2, axis=1)
        return part[:, -1] - part[:, -2]

    U = rset.vertices[1:]
    lam = rho / w0sq - alpha / 2.0
    margins = np.stack(
        [
            np.abs(rho - alpha * w0sq / 2.0),
            np.abs(rho - (alpha / 2.0 + gamma) * w0sq),
            np.abs(sigma - alpha * w0sq),
            sector_gap(Q),
            sector_gap(Q - gamma * U[iq]),
            sector_gap(Q - lam[:, None] * U[iq]),
            np.abs(U[iq, 0] * Q[:, 1] - U[iq, 1] * Q[:, 0]),
        ],
        axis=1,
    )
    return margins.min(axis=1)
