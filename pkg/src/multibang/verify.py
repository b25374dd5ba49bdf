"""Self-contained verification routines backing the CLI `verify` command.

Each routine checks a production code path against an independent
reference: the prox closed forms against the grid/enumeration oracle,
the adjoint gradient against central differences, and the sparse FEM
assembly against a dense midpoint-quadrature assembler.
"""

import numpy as np

from . import bloch, elasticity, oracles
from .sets import PenaltyParams


def dense_assembly_reference(mesh, material):
    """Dense mass/strain/div-div matrices from 3-point edge-midpoint
    quadrature, with hat gradients obtained by plane interpolation."""
    n = mesh.n_nodes
    M = np.zeros((2 * n, 2 * n))
    L = np.zeros((2 * n, 2 * n))
    K = np.zeros((2 * n, 2 * n))
    for tri in mesh.triangles:
        p = mesh.vertices[tri]
        area = 0.5 * abs(np.linalg.det(np.column_stack([p[1] - p[0], p[2] - p[0]])))
        vander = np.column_stack([p, np.ones(3)])
        grads = np.zeros((3, 2))
        for i in range(3):
            coef = np.linalg.solve(vander, np.eye(3)[i])
            grads[i] = coef[:2]
        mids = 0.5 * (p[[0, 1, 2]] + p[[1, 2, 0]])
        hat_at_mid = np.zeros((3, 3))  # hat_at_mid[i, k] = psi_i(midpoint k)
        for i in range(3):
            coef = np.linalg.solve(vander, np.eye(3)[i])
            hat_at_mid[i] = mids @ coef[:2] + coef[2]
        for i in range(3):
            for j in range(3):
                mass_ij = area / 3.0 * float(hat_at_mid[i] @ hat_at_mid[j])
                for c in range(2):
                    M[2 * tri[i] + c, 2 * tri[j] + c] += mass_ij
                for c in range(2):
                    for d in range(2):
                        eps_ij = 0.5 * (
                            (c == d) * float(grads[i] @ grads[j]) + grads[i, d] * grads[j, c]
                        )
                        L[2 * tri[i] + c, 2 * tri[j] + d] += area * eps_ij
                        K[2 * tri[i] + c, 2 * tri[j] + d] += area * grads[i, c] * grads[j, d]
    A = 2.0 * material.mu * L + material.lam * K
    return M, L, K, A


def check_assembly(nx=3, ny=3, material=None, tol=1e-12):
    """Sparse assembly against the dense reference on a small mesh."""
    material = material or elasticity.ElasticMaterial()
    mesh = elasticity.StructuredMesh(nx, ny)
    system = elasticity.assemble(mesh, material)
    Mr, Lr, Kr, Ar = dense_assembly_reference(mesh, material)
    worst = 0.0
    for sparse_mat, ref in [
        (system.mass, Mr),
        (system.strain, Lr),
        (system.divdiv, Kr),
        (system.operator, Ar),
    ]:
        worst = max(worst, float(np.abs(sparse_mat.toarray() - ref).max()))
    return worst <= tol, f"max assembly deviation {worst:.3e}"


def check_prox_sweep(penalty, gammas=(1e-1, 1e-2, 1e-5), n_points=10_000, seed=0, tol=1e-6):
    """Closed-form prox against the brute-force oracle on random duals."""
    rng = np.random.default_rng(seed)
    Q = rng.uniform(-5.0, 5.0, (n_points, 2))
    aset = penalty.admissible()
    worst = 0.0
    for gamma in gammas:
        params = PenaltyParams(penalty.alpha, gamma)
        ref = oracles.prox_oracle_batch(Q, aset, params)
        got = penalty.prox(Q, gamma)
        worst = max(worst, float(np.abs(ref - got).max()))
    return worst <= tol, f"max prox deviation {worst:.3e} over {n_points} points"


def check_bloch_gradient(problem, n_dirs=10, eps=1e-5, seed=0, tol=1e-6):
    """Adjoint gradient against central finite differences."""
    rng = np.random.default_rng(seed)
    u = 0.3 * rng.standard_normal((problem.n_steps, 2))
    p = bloch.reduced_gradient(problem, u)
    dt = problem.dt
    worst = 0.0
    for _ in range(n_dirs):
        phi = rng.standard_normal((problem.n_steps, 2))
        fd = (
            bloch.objective(problem, u + eps * phi) - bloch.objective(problem, u - eps * phi)
        ) / (2.0 * eps)
        adj = -dt * float(np.sum(p * phi))
        worst = max(worst, abs(fd - adj) / max(1.0, abs(adj)))
    return worst <= tol, f"max relative gradient deviation {worst:.3e}"
