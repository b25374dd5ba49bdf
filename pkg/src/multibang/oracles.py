"""Brute-force convex-analysis oracles.

These evaluate the conjugate, the proximal map, the penalty itself and
subdifferential inclusions without using any of the closed forms, so the
geometry modules can be validated against them.  The prox oracle is a
plain grid search with shrinking refinement; its accuracy is limited by
float resolution of objective differences (roughly sqrt(gamma * 1e-15)),
far below the 1e-6 comparisons it backs.
"""

import itertools

import numpy as np

from ._accel import HAVE_NUMBA, njit, prange
from .sets import AdmissibleSet, PenaltyParams, SubgradientSet

# grid-search schedule: initial coarse grid, then shrink-by-half rounds on a
# smaller grid until the cell diameter is below the localization target
_N_INIT = 201
_N_REFINE = 25
_MAX_ROUNDS = 40
_CELL_TOL = 1e-9
_SQRT2 = float(np.sqrt(2.0))


def conjugate_oracle(q, aset: AdmissibleSet):
    """Exact Fenchel conjugate: max over the finite set of <v,q> - cost."""
    q = np.asarray(q, dtype=float)
    return float(np.max(aset.points @ q - aset.costs))


@njit(cache=True)
def _objective(wx, wy, qx, qy, pts, costs, gamma):
    conj = -np.inf
    for k in range(pts.shape[0]):
        val = wx * pts[k, 0] + wy * pts[k, 1] - costs[k]
        if val > conj:
            conj = val
    return ((wx - qx) ** 2 + (wy - qy) ** 2) / (2.0 * gamma) + conj


@njit(cache=True)
def _grid_prox_point(qx, qy, pts, costs, gamma, margin):
    cx, cy = qx, qy
    half = margin
    bx, by = qx, qy
    for r in range(_MAX_ROUNDS + 1):
        n = _N_INIT if r == 0 else _N_REFINE
        step = 2.0 * half / (n - 1)
        fbest = np.inf
        for i in range(n):
            wx = cx - half + i * step
            for j in range(n):
                wy = cy - half + j * step
                f = _objective(wx, wy, qx, qy, pts, costs, gamma)
                if f < fbest:
                    fbest = f
                    bx = wx
                    by = wy
        cx, cy = bx, by
        if step * _SQRT2 <= _CELL_TOL:
            break
        half *= 0.5
    return bx, by


@njit(cache=True)
def _max_piece(wx, wy, pts, costs):
    conj = -np.inf
    for k in range(pts.shape[0]):
        val = wx * pts[k, 0] + wy * pts[k, 1] - costs[k]
        if val > conj:
            conj = val
    return conj


@njit(cache=True)
def _kkt_polish_point(qx, qy, wx, wy, pts, costs, gamma):
    # Value comparisons cannot localize the argmin along kink lines of the
    # conjugate better than ~sqrt(gamma * eps), so after the grid phase we
    # enumerate every candidate stationary point of the max-of-affine
    # objective: unconstrained points of single pieces, restricted minima
    # on two-piece equal-value lines, and three-piece intersection points.
    # The strictly convex objective has a unique minimizer, always of one
    # of these forms; a candidate whose multipliers lie in the simplex and
    # whose pieces attain the max is it (up to the check tolerances), so
    # certified candidates take precedence over the noisy grid value.
    n = pts.shape[0]
    tol = 1e-9
    fbest = _objective(wx, wy, qx, qy, pts, costs, gamma)
    bx, by = wx, wy
    fcert = np.inf
    cx_cert, cy_cert = wx, wy
    have_cert = False

    for a in range(n):
        cx = qx - gamma * pts[a, 0]
        cy = qy - gamma * pts[a, 1]
        f = _objective(cx, cy, qx, qy, pts, costs, gamma)
        if f < fbest:
            fbest, bx, by = f, cx, cy
        av = cx * pts[a, 0] + cy * pts[a, 1] - costs[a]
        top = _max_piece(cx, cy, pts, costs)
        if av >= top - tol * (1.0 + abs(top)):
            if f < fcert:
                fcert, cx_cert, cy_cert = f, cx, cy
                have_cert = True
    for a in range(n):
        for b in range(a + 1, n):
            dx = pts[a, 0] - pts[b, 0]
            dy = pts[a, 1] - pts[b, 1]
            dd = dx * dx + dy * dy
            if dd == 0.0:
                continue
            lam = ((qx - gamma * pts[b, 0]) * dx + (qy - gamma * pts[b, 1]) * dy
                   - (costs[a] - costs[b])) / (gamma * dd)
            vx = lam * pts[a, 0] + (1.0 - lam) * pts[b, 0]
            vy = lam * pts[a, 1] + (1.0 - lam) * pts[b, 1]
            cx = qx - gamma * vx
            cy = qy - gamma * vy
            f = _objective(cx, cy, qx, qy, pts, costs, gamma)
            if f < fbest:
                fbest, bx, by = f, cx, cy
            if -tol <= lam <= 1.0 + tol:
                av = cx * pts[a, 0] + cy * pts[a, 1] - costs[a]
                top = _max_piece(cx, cy, pts, costs)
                if av >= top - tol * (1.0 + abs(top)):
                    if f < fcert:
                        fcert, cx_cert, cy_cert = f, cx, cy
                        have_cert = True
            for c in range(b + 1, n):
                ex = pts[a, 0] - pts[c, 0]
                ey = pts[a, 1] - pts[c, 1]
                det = dx * ey - dy * ex
                scale = max(abs(dx), abs(dy), abs(ex), abs(ey))
                if abs(det) <= 1e-14 * scale * scale:
                    continue
                r1 = costs[a] - costs[b]
                r2 = costs[a] - costs[c]
                cx = (r1 * ey - r2 * dy) / det
                cy = (dx * r2 - ex * r1) / det
                f = _objective(cx, cy, qx, qy, pts, costs, gamma)
                if f < fbest:
                    fbest, bx, by = f, cx, cy
                # multipliers for (q - w)/gamma over {a, b, c}
                sx = (qx - cx) / gamma
                sy = (qy - cy) / gamma
                d2 = (pts[b, 0] - pts[a, 0]) * (pts[c, 1] - pts[a, 1]) - (
                    pts[b, 1] - pts[a, 1]
                ) * (pts[c, 0] - pts[a, 0])
                if abs(d2) <= 1e-14 * scale * scale:
                    continue
                lb = ((sx - pts[a, 0]) * (pts[c, 1] - pts[a, 1])
                      - (sy - pts[a, 1]) * (pts[c, 0] - pts[a, 0])) / d2
                lc = ((pts[b, 0] - pts[a, 0]) * (sy - pts[a, 1])
                      - (pts[b, 1] - pts[a, 1]) * (sx - pts[a, 0])) / d2
                la = 1.0 - lb - lc
                if la >= -tol and lb >= -tol and lc >= -tol:
                    av = cx * pts[a, 0] + cy * pts[a, 1] - costs[a]
                    top = _max_piece(cx, cy, pts, costs)
                    if av >= top - tol * (1.0 + abs(top)):
                        if f < fcert:
                            fcert, cx_cert, cy_cert = f, cx, cy
                            have_cert = True
    if have_cert:
        return cx_cert, cy_cert
    return bx, by


@njit(cache=True, parallel=True)
def _grid_prox_batch_numba(Q, pts, costs, gamma, margin):
    out = np.empty_like(Q)
    for i in prange(Q.shape[0]):
        x, y = _grid_prox_point(Q[i, 0], Q[i, 1], pts, costs, gamma, margin)
        x, y = _kkt_polish_point(Q[i, 0], Q[i, 1], x, y, pts, costs, gamma)
        out[i, 0] = x
        out[i, 1] = y
    return out


def _grid_prox_point_numpy(q, pts, costs, gamma, margin):
    center = q.copy()
    half = margin
    best = q.copy()
    for r in range(_MAX_ROUNDS + 1):
        n = _N_INIT if r == 0 else _N_REFINE
        ax = np.linspace(center[0] - half, center[0] + half, n)
        ay = np.linspace(center[1] - half, center[1] + half, n)
        W = np.stack(np.meshgrid(ax, ay, indexing="ij"), axis=-1).reshape(-1, 2)
        conj = np.max(W @ pts.T - costs, axis=1)
        f = ((W - q) ** 2).sum(axis=1) / (2.0 * gamma) + conj
        best = W[np.argmin(f)]
        center = best
        step = 2.0 * half / (n - 1)
        if step * _SQRT2 <= _CELL_TOL:
            break
        half *= 0.5
    return best


def prox_oracle(q, aset: AdmissibleSet, params: PenaltyParams):
    """Proximal map of gamma*g^* found by refined grid search."""
    return prox_oracle_batch(np.asarray(q, dtype=float)[None, :], aset, params)[0]


def prox_oracle_batch(Q, aset: AdmissibleSet, params: PenaltyParams):
    Q = np.ascontiguousarray(Q, dtype=float)
    margin = 3.0 * params.gamma * aset.max_norm
    if HAVE_NUMBA:
        return _grid_prox_batch_numba(Q, aset.points, aset.costs, params.gamma, margin)
    out = np.empty_like(Q)
    for i in range(Q.shape[0]):
        w = _grid_prox_point_numpy(Q[i], aset.points, aset.costs, params.gamma, margin)
        out[i] = _kkt_polish_point(
            Q[i, 0], Q[i, 1], w[0], w[1], aset.points, aset.costs, params.gamma
        )
    return out


_BARY_TOL = -1e-12


def _triangle_barycentric(u, p1, p2, p3):
    a = np.array(
        [
            [p1[0], p2[0], p3[0]],
            [p1[1], p2[1], p3[1]],
            [1.0, 1.0, 1.0],
        ]
    )
    det = np.linalg.det(a)
    if abs(det) < 1e-14 * max(1.0, abs(a).max() ** 3):
        return None
    lam = np.linalg.solve(a, np.array([u[0], u[1], 1.0]))
    if np.all(lam >= _BARY_TOL):
        return np.clip(lam, 0.0, None)
    return None


def penalty_value(u, aset: AdmissibleSet):
    """Relaxed penalty g(u) by enumeration of vertex triples.

    Any point of the lower convex envelope over a finite planar set is a
    combination of at most three of its vertices, so triples suffice;
    degenerate (collinear) triples are skipped.  Returns +inf outside the
    convex hull.
    """
    u = np.asarray(u, dtype=float)
    pts, costs = aset.points, aset.costs
    best = np.inf
    n = pts.shape[0]
    if n < 3:
        raise ValueError("admissible set needs at least 3 points")
    for i, j, k in itertools.combinations(range(n), 3):
        lam = _triangle_barycentric(u, pts[i], pts[j], pts[k])
        if lam is None:
            continue
        val = lam[0] * costs[i] + lam[1] * costs[j] + lam[2] * costs[k]
        if val < best:
            best = val
    return float(best)


def hull_distance(r, vertices):
    """Euclidean distance from r to the convex hull of up to ~8 2-vectors."""
    r = np.asarray(r, dtype=float)
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    best = np.min(np.linalg.norm(verts - r, axis=1))
    n = verts.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            d = verts[i] - verts[j]
            den = d @ d
            if den == 0.0:
                continue
            t = np.clip(((r - verts[j]) @ d) / den, 0.0, 1.0)
            best = min(best, float(np.linalg.norm(verts[j] + t * d - r)))
    if n >= 3:
        for i, j, k in itertools.combinations(range(n), 3):
            if _triangle_barycentric(r, verts[i], verts[j], verts[k]) is not None:
                return 0.0
    return float(best)


def subgradient_inclusion_distance(q, w, sub: SubgradientSet, params: PenaltyParams):
    """Distance of (q - w)/gamma to the convex hull of the subdifferential."""
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    return hull_distance((q - w) / params.gamma, sub.vertices)
