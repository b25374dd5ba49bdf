"""Closed forms for the concentric-corner geometry."""

import numpy as np
import pytest

from multibang import concentric, oracles
from multibang.sets import ConcentricSet, PenaltyParams


@pytest.fixture(scope="module")
def params():
    return PenaltyParams(1e-3, 1e-2)


def test_vertices_fixed(cset):
    assert cset.vertices.shape == (8, 2)
    with pytest.raises(ValueError):
        ConcentricSet(inner=1.0, outer=3.0)


def test_conjugate_values(cset):
    alpha = 1e-3
    assert concentric.conjugate([0.0, 0.0], alpha) == pytest.approx(-alpha)
    assert concentric.conjugate([3 * alpha, 0.0], alpha) == pytest.approx(2 * alpha)
    assert concentric.conjugate([10.0, 10.0], alpha) == pytest.approx(39.996)


def test_conjugate_matches_oracle(cset, rng):
    alpha = 1e-3
    aset = cset.admissible(alpha)
    for q in rng.uniform(-5, 5, (500, 2)):
        assert concentric.conjugate(q, alpha) == pytest.approx(
            oracles.conjugate_oracle(q, aset), abs=1e-12
        )


def test_subdifferential_cases(cset):
    alpha = 1e-3
    sub = concentric.subdifferential([10.0, 10.0], cset, alpha)
    assert np.allclose(sub.vertices, [[2.0, 2.0]])
    sub = concentric.subdifferential([0.0, 2 * alpha], cset, alpha)
    got = {tuple(v) for v in sub.vertices}
    assert got == {(-1.0, 1.0), (1.0, 1.0)}
    sub = concentric.subdifferential([1.5 * alpha, 1.5 * alpha], cset, alpha)
    got = {tuple(v) for v in sub.vertices}
    assert got == {(1.0, 1.0), (2.0, 2.0)}


def test_classify_examples(params):
    assert concentric.classify([0.0, 0.0], params) == concentric.ConcentricRegion(0, 0, -1)
    assert concentric.classify([10.0, 10.0], params) == concentric.ConcentricRegion(1, 1, 1)
    alpha, gamma = params.alpha, params.gamma
    assert concentric.classify([3 * alpha + 1.5 * gamma, 0.0], params) == (
        concentric.ConcentricRegion(1, 0, 0)
    )


def test_prox_examples(params):
    assert np.allclose(concentric.prox([0.0, 0.0], params), 0.0)
    assert np.allclose(concentric.prox([10.0, 10.0], params), [9.98, 9.98])


def test_prox_oracle_sweep(cset, rng):
    for alpha, gamma in [(1e-3, 1e-2), (0.1, 0.1)]:
        params = PenaltyParams(alpha, gamma)
        aset = cset.admissible(alpha)
        Q = rng.uniform(-5, 5, (2000, 2))
        diff = np.abs(
            concentric.prox_batch(Q, params) - oracles.prox_oracle_batch(Q, aset, params)
        )
        assert diff.max() <= 1e-6


def test_yosida_examples_and_identity(params, rng):
    assert np.allclose(concentric.yosida([0.0, 0.0], params), 0.0)
    assert np.array_equal(concentric.yosida([10.0, 10.0], params), [2.0, 2.0])
    Q = rng.uniform(-5, 5, (3000, 2))
    h = concentric.yosida_batch(Q, params)
    hdiv = (Q - concentric.prox_batch(Q, params)) / params.gamma
    assert np.abs(h - hdiv).max() <= 1e-10


def test_yosida_ring_case_consistency(params):
    alpha, gamma = params.alpha, params.gamma
    q = np.array([3 * alpha + 3 * gamma, 1e-5])
    reg = concentric.classify(q, params)
    h = concentric.yosida(q, params)
    hdiv = (q - concentric.prox(q, params)) / gamma
    assert np.allclose(h, hdiv, atol=1e-12)
    if reg.k == 0 and reg.i != 0 and reg.j != 0:
        coef = (np.abs(q).sum() - 3 * alpha) / (2 * gamma)
        assert np.allclose(h, coef * np.array([reg.i, reg.j]))


def test_firm_nonexpansive_monotone_lipschitz(params, rng):
    Q = rng.uniform(-5, 5, (400, 2))
    W = concentric.prox_batch(Q, params)
    H = concentric.yosida_batch(Q, params)
    for a in range(0, 400, 2):
        dq = Q[a] - Q[a + 1]
        dw = W[a] - W[a + 1]
        dh = H[a] - H[a + 1]
        assert float(dw @ dw) <= float(dw @ dq) + 1e-10
        assert float(dh @ dq) >= -1e-10
        assert np.linalg.norm(dh) <= (1.0 / params.gamma + 1e-8) * np.linalg.norm(dq)


def test_yosida_range_in_hull(cset, params, rng):
    Q = rng.uniform(-5, 5, (400, 2))
    H = concentric.yosida_batch(Q, params)
    for h in H:
        assert oracles.hull_distance(h, cset.vertices) <= 1e-10


def test_inclusion_consistency(cset, params, rng):
    Q = rng.uniform(-5, 5, (200, 2))
    W = concentric.prox_batch(Q, params)
    for q, w in zip(Q, W):
        sub = concentric.subdifferential(w, cset, params.alpha)
        assert oracles.subgradient_inclusion_distance(q, w, sub, params) <= 1e-8


def test_newton_derivative_cases(params):
    gamma = params.gamma
    assert np.array_equal(
        concentric.newton_derivative([10.0, 10.0], params), np.zeros((2, 2))
    )
    assert np.array_equal(concentric.newton_derivative([0.0, 0.0], params), np.eye(2) / gamma)


def test_newton_derivative_finite_difference(params, rng):
    Q = rng.uniform(-5, 5, (3000, 2))
    margin = concentric.classification_margin(Q, params)
    Qint = Q[margin > 1e-6][:300]
    dn = concentric.newton_deriv_batch(Qint, params)
    h = 1e-7
    for k, q in enumerate(Qint):
        fd = np.empty((2, 2))
        for c, e in enumerate(np.eye(2)):
            fd[:, c] = (
                concentric.yosida(q + h * e, params) - concentric.yosida(q - h * e, params)
            ) / (2 * h)
        scale = max(1.0, np.abs(dn[k]).max())
        assert np.abs(fd - dn[k]).max() / scale <= 1e-5


def _symmetry_group():
    mats = []
    for swap in (False, True):
        base = np.array([[0.0, 1.0], [1.0, 0.0]]) if swap else np.eye(2)
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                mats.append(np.diag([sx, sy]) @ base)
    return mats


def test_yosida_square_symmetry(params, rng):
    Q = rng.uniform(-5, 5, (200, 2))
    H = concentric.yosida_batch(Q, params)
    for g in _symmetry_group():
        Hg = concentric.yosida_batch(Q @ g.T, params)
        assert np.array_equal(Hg, H @ g.T)


def test_continuity_across_strata(params, rng):
    # one-sided limits from adjacent strata agree on the seams
    alpha, gamma = params.alpha, params.gamma
    eps = 1e-12
    seams = []
    t = rng.uniform(3 * alpha + gamma, 3 * alpha + 2 * gamma, 250)
    s = rng.uniform(0.5, 4.0, 250)
    # vertical eta boundary: |q1| = eta(|q2|), far outer branch
    seams.append(np.stack([np.full(250, 2 * gamma), s + 3 * alpha + 2 * gamma], axis=1))
    # ring boundaries |q|_inf thresholds along a diagonal band
    seams.append(np.stack([t, rng.uniform(0.0, gamma / 2, 250)], axis=1))
    for S in seams:
        for d in (np.array([eps, 0.0]), np.array([0.0, eps])):
            h_plus = concentric.yosida_batch(S + d, params)
            h_minus = concentric.yosida_batch(S - d, params)
            assert np.abs(h_plus - h_minus).max() <= 1e-9
