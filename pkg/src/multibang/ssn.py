"""Semismooth Newton drivers with continuation in the Yosida parameter.

The Bloch problem is solved in reduced form (control-space fixed point
u = h_gamma(-F'(u))) with a matrix-free Newton operator inverted by full
GMRES; elasticity is solved in the full (state, dual) saddle form with a
sparse direct factorization per step.  Both use a backtracking line
search on the residual norm and warm-start each continuation level from
the previous solution.
"""

from dataclasses import dataclass, field

import numpy as np

from . import bloch as bloch_mod
from . import elasticity as fem
from .penalties import PenaltyModel


@dataclass(frozen=True)
class ContinuationSchedule:
    gamma0: float = 1e2
    factor: float = 0.5
    gamma_min: float = 1e-10

    def __post_init__(self):
        if not (self.gamma0 > self.gamma_min > 0.0):
            raise ValueError("need gamma0 > gamma_min > 0")
        if not 0.0 < self.factor < 1.0:
            raise ValueError("reduction factor must lie in (0, 1)")

    def levels(self):
        out = []
        g = self.gamma0
        while g >= self.gamma_min:
            out.append(g)
            g *= self.factor
        return out


@dataclass(frozen=True)
class NewtonConfig:
    tol_abs: float = 1e-7
    tol_rel: float = 1e-7
    max_iter: int = 500
    krylov_tol: float = 1e-10
    krylov_max: int = 1000
    ls_factor: float = 0.5
    ls_max: int = 30

    def __post_init__(self):
        if min(self.tol_abs, self.tol_rel, self.krylov_tol) <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("need at least one Newton iteration")

    @classmethod
    def bloch_default(cls, **kw):
        return cls(**{"max_iter": 500, **kw})

    @classmethod
    def elasticity_default(cls, **kw):
        return cls(**{"max_iter": 50, **kw})


@dataclass
class LevelRecord:
    gamma: float
    newton_iters: int
    avg_krylov_iters: float
    line_search_count: int
    nonmultibang_count: int
    final_residual: float
    converged: bool
    initial_residual: float = np.nan


@dataclass
class SolveReport:
    levels: list = field(default_factory=list)
    status: str = "complete"
    last_converged_gamma: float = np.nan

    @property
    def complete(self):
        return self.status == "complete"

    def rows(self):
        return [
            (
                rec.gamma,
                rec.newton_iters,
                rec.avg_krylov_iters,
                rec.line_search_count,
                rec.nonmultibang_count,
                rec.final_residual,
            )
            for rec in self.levels
        ]


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    relres: float
    converged: bool


def gmres(apply, rhs, tol, max_iter):
    """Full (non-restarted) GMRES with modified Gram-Schmidt."""
    b = np.asarray(rhs, dtype=float).ravel()
    n = b.size
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return GmresResult(np.zeros(n), 0, 0.0, True)
    steps = min(int(max_iter), n)
    V = np.empty((steps + 1, n))
    H = np.zeros((steps + 1, steps))
    cs = np.zeros(steps)
    sn = np.zeros(steps)
    g = np.zeros(steps + 1)
    V[0] = b / bnorm
    g[0] = bnorm
    relres = 1.0
    k = 0
    ok = True
    for k in range(steps):
        w = np.array(apply(V[k]), dtype=float).ravel()  # copy: MGS mutates w
        if not np.all(np.isfinite(w)):
            ok = False
            k -= 1
            break
        for i in range(k + 1):
            H[i, k] = V[i] @ w
            w -= H[i, k] * V[i]
        H[k + 1, k] = np.linalg.norm(w)
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
            H[i, k] = t
        denom = np.hypot(H[k, k], H[k + 1, k])
        if denom == 0.0:
            ok = False
            k -= 1
            break
        cs[k] = H[k, k] / denom
        sn[k] = H[k + 1, k] / denom
        lucky = H[k + 1, k] <= 1e-300
        H[k, k] = denom
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        relres = abs(g[k + 1]) / bnorm
        if relres <= tol or lucky:
            break
        if H[k + 1, k] > 1e-300:
            V[k + 1] = w / H[k + 1, k]
    m = k + 1
    if m == 0:
        return GmresResult(np.zeros(n), 0, 1.0, False)
    y = np.zeros(m)
    for i in range(m - 1, -1, -1):
        y[i] = (g[i] - H[i, i + 1 : m] @ y[i + 1 : m]) / H[i, i]
    x = V[:m].T @ y
    return GmresResult(x, m, relres, ok and relres <= tol)


def line_search(eval_norm, base_norm, config: NewtonConfig):
    """Largest step factor^k, k <= ls_max, strictly decreasing the norm.

    Returns (step, trials); step is None when no tried step decreases.
    """
    sigma = 1.0
    for trial in range(config.ls_max + 1):
        val = eval_norm(sigma)
        if np.isfinite(val) and val < base_norm:
            return sigma, trial + 1
        sigma *= config.ls_factor
    return None, config.ls_max + 1


def count_nonmultibang(duals, penalty: PenaltyModel, gamma):
    """Nodes whose dual lands outside the pure single-vertex regions."""
    labels = penalty.labels(np.atleast_2d(duals), gamma)
    return int(np.count_nonzero(~penalty.pure_mask(labels)))


def ssn_solve_bloch(problem, penalty: PenaltyModel, schedule, config: NewtonConfig):
    """Reduced semismooth Newton with GMRES, continued over gamma levels.

    Returns the control of the last converged level and the per-level
    report; continuation stops at the first level where Newton fails.
    """
    if not penalty.is_radial:
        raise ValueError("the pulse design problem uses the radial penalty")
    nt = problem.n_steps
    dt = problem.dt
    sqrt_dt = np.sqrt(dt)

    def residual_state(u, gamma):
        traj = bloch_mod.forward_solve(problem, u)
        adj = bloch_mod.adjoint_solve(problem, u, traj)
        p = bloch_mod.reduced_gradient(problem, u, traj, adj)
        r = u - penalty.yosida(p, gamma)
        return r, p, traj, adj

    u = np.zeros((nt, 2))
    u_best = u.copy()
    report = SolveReport()
    for gamma in schedule.levels():
        r, p, traj, adj = residual_state(u, gamma)
        res = sqrt_dt * np.linalg.norm(r)
        res0 = res
        iters = 0
        ls_count = 0
        krylov_counts = []
        converged = False
        while True:
            if res <= max(config.tol_abs, config.tol_rel * res0):
                converged = True
                break
            if iters >= config.max_iter:
                break
            dn = penalty.newton_deriv(p, gamma)

            def matvec(vec):
                w = vec.reshape(nt, 2)
                hw = bloch_mod.hessian_apply(problem, u, w, traj, adj)
                return (w + np.einsum("nij,nj->ni", dn, hw)).ravel()

            km = gmres(matvec, -r.ravel(), config.krylov_tol, config.krylov_max)
            krylov_counts.append(km.iterations)
            du = km.x.reshape(nt, 2)
            cache = {}

            def eval_norm(sigma):
                state = residual_state(u + sigma * du, gamma)
                cache[sigma] = state
                return sqrt_dt * np.linalg.norm(state[0])

            sigma, _ = line_search(eval_norm, res, config)
            iters += 1
            if sigma is None:
                break
            if sigma < 1.0:
                ls_count += 1
            u = u + sigma * du
            r, p, traj, adj = cache[sigma]
            res = sqrt_dt * np.linalg.norm(r)
        report.levels.append(
            LevelRecord(
                gamma=gamma,
                newton_iters=iters,
                avg_krylov_iters=float(np.mean(krylov_counts)) if krylov_counts else 0.0,
                line_search_count=ls_count,
                nonmultibang_count=count_nonmultibang(p, penalty, gamma),
                final_residual=res,
                converged=converged,
                initial_residual=res0,
            )
        )
        if not converged:
            report.status = f"stalled at gamma={gamma:.6g}"
            break
        u_best = u.copy()
        report.last_converged_gamma = gamma
    return u_best, report


def ssn_solve_elasticity(system, penalty: PenaltyModel, schedule, config: NewtonConfig):
    """Full-space saddle-point Newton iteration for the elasticity model.

    Termination per level: nodewise region labels of the dual coincide
    for two consecutive iterates, or the residual tolerances are met, or
    the iteration cap is hit (failure).  Returns nodal fields over all
    mesh nodes (the clamped nodes carry the zero dual).
    """
    nfree = system.n_free
    y = np.zeros(nfree)
    p = np.zeros(nfree)

    def full_duals(p_vec):
        return system.to_full(p_vec)

    def res_norm(y_vec, p_vec, gamma):
        r1, r2 = fem.residual(system, y_vec, p_vec, penalty, gamma)
        return float(np.sqrt(np.dot(r1, r1) + np.dot(r2, r2)))

    snapshot = (y.copy(), p.copy(), schedule.gamma0)
    report = SolveReport()
    for gamma in schedule.levels():
        res = res_norm(y, p, gamma)
        res0 = res
        iters = 0
        ls_count = 0
        converged = False
        failed = False
        labels_prev = None
        while True:
            labels = penalty.labels(full_duals(p), gamma)
            if labels_prev is not None and np.array_equal(labels, labels_prev):
                converged = True
                break
            if res <= max(config.tol_abs, config.tol_rel * res0):
                converged = True
                break
            if iters >= config.max_iter:
                break
            try:
                dy, dp = fem.newton_step(system, y, p, penalty, gamma)
            except fem.SolverError:
                failed = True
                break
            sigma, _ = line_search(
                lambda s: res_norm(y + s * dy, p + s * dp, gamma), res, config
            )
            iters += 1
            if sigma is None:
                break
            if sigma < 1.0:
                ls_count += 1
            y = y + sigma * dy
            p = p + sigma * dp
            labels_prev = labels
            res = res_norm(y, p, gamma)
        report.levels.append(
            LevelRecord(
                gamma=gamma,
                newton_iters=iters,
                avg_krylov_iters=0.0,
                line_search_count=ls_count,
                nonmultibang_count=count_nonmultibang(full_duals(p), penalty, gamma),
                final_residual=res,
                converged=converged and not failed,
                initial_residual=res0,
            )
        )
        if not (converged and not failed):
            report.status = f"stalled at gamma={gamma:.6g}"
            break
        snapshot = (y.copy(), p.copy(), gamma)
        report.last_converged_gamma = gamma
    y, p, gamma = snapshot
    duals = full_duals(p)
    control = penalty.yosida(duals, gamma)
    return (system.to_full(y), duals, control), report
