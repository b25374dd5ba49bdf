"""Bloch equation solvers: forward, adjoint, linearized and second-order.

Time stepping is Crank-Nicolson with the control frozen per interval, so
every step is a Cayley transform of a skew-symmetric generator and hence
an exact rotation (unit norms are preserved to rounding).  The adjoint
uses the transpose of the discrete step, which makes the reduced
gradient the exact derivative of the discrete objective, and the
linearized/linearized-adjoint sweeps are the exact derivatives of the
forward/adjoint recursions (Hessian products are exact as well).

Controls are stored unscaled; the physical scaling gyro*field is applied
inside the system matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from ._accel import HAVE_NUMBA, njit

# constant pairing matrices of the gradient formula
B1_PAIR = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
B2_PAIR = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class BlochProblem:
    """Pulse design setup for a list of isochromats."""

    omegas: np.ndarray
    duration: float
    n_steps: int
    targets: np.ndarray
    m0: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    gyro: float = 267.51
    field_strength: float = 1e-2

    def __post_init__(self):
        om = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        tg = np.atleast_2d(np.asarray(self.targets, dtype=float))
        m0 = np.asarray(self.m0, dtype=float)
        if self.n_steps < 1:
            raise ValueError("need at least one control interval")
        if tg.shape != (om.size, 3):
            raise ValueError("targets must be (n_isochromats, 3)")
        if abs(np.linalg.norm(m0) - 1.0) > 1e-12:
            raise ValueError("initial magnetization must have unit norm")
        if np.any(np.abs(np.linalg.norm(tg, axis=1) - 1.0) > 1e-12):
            raise ValueError("targets must have unit norm")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "targets", tg)
        object.__setattr__(self, "m0", m0)

    @property
    def n_isochromats(self):
        return self.omegas.size

    @property
    def dt(self):
        return self.duration / self.n_steps

    @property
    def scale(self):
        return self.gyro * self.field_strength


@dataclass(frozen=True)
class AdjointSolution:
    """Piecewise-constant interval values and the nodal backward states."""

    intervals: np.ndarray  # (n_steps, J, 3)
    nodes: np.ndarray  # (n_steps + 1, J, 3)


def bloch_matrix(u, omega, scale=1.0):
    """Skew-symmetric generator for control u (unscaled) and offset omega."""
    ux, uy = scale * u[0], scale * u[1]
    return np.array([[0.0, omega, -uy], [-omega, 0.0, ux], [uy, -ux, 0.0]])


# ---------------------------------------------------------------------------
# numba kernels (scalar loops)


@njit(cache=True)
def _forward_kernel(u, omegas, m0, dt, scale):
    n = u.shape[0]
    nj = omegas.shape[0]
    h = 0.5 * dt
    M = np.empty((n + 1, nj, 3))
    for j in range(nj):
        M[0, j, 0] = m0[0]
        M[0, j, 1] = m0[1]
        M[0, j, 2] = m0[2]
    for m in range(n):
        bx = scale * u[m, 0]
        by = scale * u[m, 1]
        for j in range(nj):
            bz = omegas[j]
            px, py, pz = M[m, j, 0], M[m, j, 1], M[m, j, 2]
            vx = px - h * (by * pz - bz * py)
            vy = py - h * (bz * px - bx * pz)
            vz = pz - h * (bx * py - by * px)
            bv = bx * vx + by * vy + bz * vz
            den = 1.0 + h * h * (bx * bx + by * by + bz * bz)
            M[m + 1, j, 0] = (vx - h * (by * vz - bz * vy) + h * h * bx * bv) / den
            M[m + 1, j, 1] = (vy - h * (bz * vx - bx * vz) + h * h * by * bv) / den
            M[m + 1, j, 2] = (vz - h * (bx * vy - by * vx) + h * h * bz * bv) / den
    return M


@njit(cache=True)
def _adjoint_kernel(u, omegas, dt, scale, terminal):
    n = u.shape[0]
    nj = omegas.shape[0]
    h = 0.5 * dt
    P = np.empty((n, nj, 3))
    Pn = np.empty((n + 1, nj, 3))
    for j in range(nj):
        Pn[n, j, 0] = terminal[j, 0]
        Pn[n, j, 1] = terminal[j, 1]
        Pn[n, j, 2] = terminal[j, 2]
    for m in range(n - 1, -1, -1):
        bx = scale * u[m, 0]
        by = scale * u[m, 1]
        for j in range(nj):
            bz = omegas[j]
            px, py, pz = Pn[m + 1, j, 0], Pn[m + 1, j, 1], Pn[m + 1, j, 2]
            bp = bx * px + by * py + bz * pz
            den = 1.0 + h * h * (bx * bx + by * by + bz * bz)
            yx = (px + h * (by * pz - bz * py) + h * h * bx * bp) / den
            yy = (py + h * (bz * px - bx * pz) + h * h * by * bp) / den
            yz = (pz + h * (bx * py - by * px) + h * h * bz * bp) / den
            P[m, j, 0] = yx
            P[m, j, 1] = yy
            P[m, j, 2] = yz
            Pn[m, j, 0] = yx + h * (by * yz - bz * yy)
            Pn[m, j, 1] = yy + h * (bz * yx - bx * yz)
            Pn[m, j, 2] = yz + h * (bx * yy - by * yx)
    return P, Pn


@njit(cache=True)
def _linearized_kernel(u, phi, omegas, dt, scale, M):
    n = u.shape[0]
    nj = omegas.shape[0]
    h = 0.5 * dt
    dM = np.zeros((n + 1, nj, 3))
    for m in range(n):
        bx = scale * u[m, 0]
        by = scale * u[m, 1]
        wx = scale * phi[m, 0]
        wy = scale * phi[m, 1]
        for j in range(nj):
            bz = omegas[j]
            ax = 0.5 * (M[m, j, 0] + M[m + 1, j, 0])
            ay = 0.5 * (M[m, j, 1] + M[m + 1, j, 1])
            az = 0.5 * (M[m, j, 2] + M[m + 1, j, 2])
            cx = -wy * az
            cy = wx * az
            cz = wy * ax - wx * ay
            px, py, pz = dM[m, j, 0], dM[m, j, 1], dM[m, j, 2]
            vx = px - h * (by * pz - bz * py) + dt * cx
            vy = py - h * (bz * px - bx * pz) + dt * cy
            vz = pz - h * (bx * py - by * px) + dt * cz
            bv = bx * vx + by * vy + bz * vz
            den = 1.0 + h * h * (bx * bx + by * by + bz * bz)
            dM[m + 1, j, 0] = (vx - h * (by * vz - bz * vy) + h * h * bx * bv) / den
            dM[m + 1, j, 1] = (vy - h * (bz * vx - bx * vz) + h * h * by * bv) / den
            dM[m + 1, j, 2] = (vz - h * (bx * vy - by * vx) + h * h * bz * bv) / den
    return dM


@njit(cache=True)
def _linearized_adjoint_kernel(u, phi, omegas, dt, scale, P, terminal):
    n = u.shape[0]
    nj = omegas.shape[0]
    h = 0.5 * dt
    dP = np.empty((n, nj, 3))
    cur = np.empty((nj, 3))
    for j in range(nj):
        cur[j, 0] = terminal[j, 0]
        cur[j, 1] = terminal[j, 1]
        cur[j, 2] = terminal[j, 2]
    for m in range(n - 1, -1, -1):
        bx = scale * u[m, 0]
        by = scale * u[m, 1]
        wx = scale * phi[m, 0]
        wy = scale * phi[m, 1]
        for j in range(nj):
            bz = omegas[j]
            den = 1.0 + h * h * (bx * bx + by * by + bz * bz)
            px, py, pz = cur[j, 0], cur[j, 1], cur[j, 2]
            bp = bx * px + by * py + bz * pz
            yx = (px + h * (by * pz - bz * py) + h * h * bx * bp) / den
            yy = (py + h * (bz * px - bx * pz) + h * h * by * bp) / den
            yz = (pz + h * (bx * py - by * px) + h * h * bz * bp) / den
            cx = -wy * P[m, j, 2]
            cy = wx * P[m, j, 2]
            cz = wy * P[m, j, 0] - wx * P[m, j, 1]
            bc = bx * cx + by * cy + bz * cz
            zx = (cx + h * (by * cz - bz * cy) + h * h * bx * bc) / den
            zy = (cy + h * (bz * cx - bx * cz) + h * h * by * bc) / den
            zz = (cz + h * (bx * cy - by * cx) + h * h * bz * bc) / den
            dpx = yx - h * zx
            dpy = yy - h * zy
            dpz = yz - h * zz
            dP[m, j, 0] = dpx
            dP[m, j, 1] = dpy
            dP[m, j, 2] = dpz
            cur[j, 0] = dpx + h * (by * dpz - bz * dpy) - h * cx
            cur[j, 1] = dpy + h * (bz * dpx - bx * dpz) - h * cy
            cur[j, 2] = dpz + h * (bx * dpy - by * dpx) - h * cz
    return dP


@njit(cache=True)
def _gradient_pair_kernel(M, P, scale):
    n = P.shape[0]
    nj = P.shape[1]
    out = np.zeros((n, 2))
    for m in range(n):
        gx = 0.0
        gy = 0.0
        for j in range(nj):
            ax = 0.5 * (M[m, j, 0] + M[m + 1, j, 0])
            ay = 0.5 * (M[m, j, 1] + M[m + 1, j, 1])
            az = 0.5 * (M[m, j, 2] + M[m + 1, j, 2])
            gx -= az * P[m, j, 1] - ay * P[m, j, 2]
            gy += az * P[m, j, 0] - ax * P[m, j, 2]
        out[m, 0] = scale * gx
        out[m, 1] = scale * gy
    return out


@njit(cache=True)
def _hessian_pair_kernel(M, P, dM, dP, scale):
    n = P.shape[0]
    nj = P.shape[1]
    out = np.zeros((n, 2))
    for m in range(n):
        gx = 0.0
        gy = 0.0
        for j in range(nj):
            ax = 0.5 * (M[m, j, 0] + M[m + 1, j, 0])
            ay = 0.5 * (M[m, j, 1] + M[m + 1, j, 1])
            az = 0.5 * (M[m, j, 2] + M[m + 1, j, 2])
            dax = 0.5 * (dM[m, j, 0] + dM[m + 1, j, 0])
            day = 0.5 * (dM[m, j, 1] + dM[m + 1, j, 1])
            daz = 0.5 * (dM[m, j, 2] + dM[m + 1, j, 2])
            gx += daz * P[m, j, 1] - day * P[m, j, 2]
            gx += az * dP[m, j, 1] - ay * dP[m, j, 2]
            gy -= daz * P[m, j, 0] - dax * P[m, j, 2]
            gy -= az * dP[m, j, 0] - ax * dP[m, j, 2]
        out[m, 0] = scale * gx
        out[m, 1] = scale * gy
    return out


# ---------------------------------------------------------------------------
# pure-numpy fallbacks (vectorized over isochromats)


def _cross(b, v):
    return np.stack(
        [
            b[:, 1] * v[:, 2] - b[:, 2] * v[:, 1],
            b[:, 2] * v[:, 0] - b[:, 0] * v[:, 2],
            b[:, 0] * v[:, 1] - b[:, 1] * v[:, 0],
        ],
        axis=1,
    )


def _solve_minus(b, v, h, den):
    # (I - h B)^{-1} v with B v = -b x v
    bv = np.sum(b * v, axis=1, keepdims=True)
    return (v - h * _cross(b, v) + h * h * b * bv) / den


def _solve_plus(b, v, h, den):
    bv = np.sum(b * v, axis=1, keepdims=True)
    return (v + h * _cross(b, v) + h * h * b * bv) / den


def _step_fields(u_m, omegas, scale):
    nj = omegas.size
    b = np.empty((nj, 3))
    b[:, 0] = scale * u_m[0]
    b[:, 1] = scale * u_m[1]
    b[:, 2] = omegas
    return b


def _forward_numpy(u, omegas, m0, dt, scale):
    n = u.shape[0]
    h = 0.5 * dt
    M = np.empty((n + 1, omegas.size, 3))
    M[0] = m0
    for m in range(n):
        b = _step_fields(u[m], omegas, scale)
        den = 1.0 + h * h * np.sum(b * b, axis=1, keepdims=True)
        v = M[m] - h * _cross(b, M[m])
        M[m + 1] = _solve_minus(b, v, h, den)
    return M


def _adjoint_numpy(u, omegas, dt, scale, terminal):
    n = u.shape[0]
    h = 0.5 * dt
    P = np.empty((n, omegas.size, 3))
    Pn = np.empty((n + 1, omegas.size, 3))
    Pn[n] = terminal
    for m in range(n - 1, -1, -1):
        b = _step_fields(u[m], omegas, scale)
        den = 1.0 + h * h * np.sum(b * b, axis=1, keepdims=True)
        y = _solve_plus(b, Pn[m + 1], h, den)
        P[m] = y
        Pn[m] = y + h * _cross(b, y)
    return P, Pn


def _dB_apply(w, v):
    # derivative of the generator with respect to the control, applied to v
    return np.stack(
        [-w[1] * v[:, 2], w[0] * v[:, 2], w[1] * v[:, 0] - w[0] * v[:, 1]],
        axis=1,
    )


def _linearized_numpy(u, phi, omegas, dt, scale, M):
    n = u.shape[0]
    h = 0.5 * dt
    dM = np.zeros((n + 1, omegas.size, 3))
    for m in range(n):
        b = _step_fields(u[m], omegas, scale)
        den = 1.0 + h * h * np.sum(b * b, axis=1, keepdims=True)
        c = _dB_apply(scale * phi[m], 0.5 * (M[m] + M[m + 1]))
        v = dM[m] - h * _cross(b, dM[m]) + dt * c
        dM[m + 1] = _solve_minus(b, v, h, den)
    return dM


def _linearized_adjoint_numpy(u, phi, omegas, dt, scale, P, terminal):
    n = u.shape[0]
    h = 0.5 * dt
    dP = np.empty((n, omegas.size, 3))
    cur = terminal.copy()
    for m in range(n - 1, -1, -1):
        b = _step_fields(u[m], omegas, scale)
        den = 1.0 + h * h * np.sum(b * b, axis=1, keepdims=True)
        c = _dB_apply(scale * phi[m], P[m])
        y = _solve_plus(b, cur, h, den)
        z = _solve_plus(b, c, h, den)
        dP[m] = y - h * z
        cur = dP[m] + h * _cross(b, dP[m]) - h * c
    return dP


def _gradient_pair_numpy(M, P, scale):
    Mb = 0.5 * (M[:-1] + M[1:])
    gx = -np.sum(Mb[:, :, 2] * P[:, :, 1] - Mb[:, :, 1] * P[:, :, 2], axis=1)
    gy = np.sum(Mb[:, :, 2] * P[:, :, 0] - Mb[:, :, 0] * P[:, :, 2], axis=1)
    return scale * np.stack([gx, gy], axis=1)


def _hessian_pair_numpy(M, P, dM, dP, scale):
    Mb = 0.5 * (M[:-1] + M[1:])
    dMb = 0.5 * (dM[:-1] + dM[1:])
    gx = np.sum(dMb[:, :, 2] * P[:, :, 1] - dMb[:, :, 1] * P[:, :, 2], axis=1)
    gx += np.sum(Mb[:, :, 2] * dP[:, :, 1] - Mb[:, :, 1] * dP[:, :, 2], axis=1)
    gy = -np.sum(dMb[:, :, 2] * P[:, :, 0] - dMb[:, :, 0] * P[:, :, 2], axis=1)
    gy -= np.sum(Mb[:, :, 2] * dP[:, :, 0] - Mb[:, :, 0] * dP[:, :, 2], axis=1)
    return scale * np.stack([gx, gy], axis=1)


# ---------------------------------------------------------------------------
# public API


def _as_control(problem, u):
    u = np.ascontiguousarray(u, dtype=float)
    if u.shape != (problem.n_steps, 2):
        raise ValueError(f"control must have shape ({problem.n_steps}, 2)")
    return u


def forward_solve(problem: BlochProblem, u):
    """Nodal magnetizations, shape (n_steps + 1, n_isochromats, 3)."""
    u = _as_control(problem, u)
    if HAVE_NUMBA:
        return _forward_kernel(u, problem.omegas, problem.m0, problem.dt, problem.scale)
    return _forward_numpy(u, problem.omegas, problem.m0, problem.dt, problem.scale)


def objective(problem: BlochProblem, u, trajectory=None):
    """Tracking objective 0.5 * sum_j |M_j(T) - target_j|^2."""
    if trajectory is None:
        trajectory = forward_solve(problem, u)
    res = trajectory[-1] - problem.targets
    return 0.5 * float(np.sum(res**2))


def adjoint_solve(problem: BlochProblem, u, trajectory) -> AdjointSolution:
    """Backward sweep with the transposed discrete propagator."""
    u = _as_control(problem, u)
    terminal = np.ascontiguousarray(trajectory[-1] - problem.targets)
    if HAVE_NUMBA:
        P, Pn = _adjoint_kernel(u, problem.omegas, problem.dt, problem.scale, terminal)
    else:
        P, Pn = _adjoint_numpy(u, problem.omegas, problem.dt, problem.scale, terminal)
    return AdjointSolution(P, Pn)


def reduced_gradient(problem: BlochProblem, u, trajectory=None, adjoint=None):
    """p = -F'(u) per control interval (exact discrete gradient)."""
    u = _as_control(problem, u)
    if trajectory is None:
        trajectory = forward_solve(problem, u)
    if adjoint is None:
        adjoint = adjoint_solve(problem, u, trajectory)
    if HAVE_NUMBA:
        return _gradient_pair_kernel(trajectory, adjoint.intervals, problem.scale)
    return _gradient_pair_numpy(trajectory, adjoint.intervals, problem.scale)


def linearized_solve(problem: BlochProblem, u, phi, trajectory=None):
    """Directional state derivative for control direction phi."""
    u = _as_control(problem, u)
    phi = _as_control(problem, phi)
    if trajectory is None:
        trajectory = forward_solve(problem, u)
    if HAVE_NUMBA:
        return _linearized_kernel(u, phi, problem.omegas, problem.dt, problem.scale, trajectory)
    return _linearized_numpy(u, phi, problem.omegas, problem.dt, problem.scale, trajectory)


def linearized_adjoint_solve(problem: BlochProblem, u, phi, adjoint, delta_m):
    """Directional derivative of the interval adjoint values."""
    u = _as_control(problem, u)
    phi = _as_control(problem, phi)
    terminal = np.ascontiguousarray(delta_m[-1])
    if HAVE_NUMBA:
        return _linearized_adjoint_kernel(
            u, phi, problem.omegas, problem.dt, problem.scale, adjoint.intervals, terminal
        )
    return _linearized_adjoint_numpy(
        u, phi, problem.omegas, problem.dt, problem.scale, adjoint.intervals, terminal
    )


def hessian_apply(problem: BlochProblem, u, phi, trajectory=None, adjoint=None):
    """F''(u) phi per control interval (exact derivative of the gradient)."""
    u = _as_control(problem, u)
    phi = _as_control(problem, phi)
    if trajectory is None:
        trajectory = forward_solve(problem, u)
    if adjoint is None:
        adjoint = adjoint_solve(problem, u, trajectory)
    dM = linearized_solve(problem, u, phi, trajectory)
    dP = linearized_adjoint_solve(problem, u, phi, adjoint, dM)
    if HAVE_NUMBA:
        return _hessian_pair_kernel(trajectory, adjoint.intervals, dM, dP, problem.scale)
    return _hessian_pair_numpy(trajectory, adjoint.intervals, dM, dP, problem.scale)


def export_trajectory_csv(path, problem: BlochProblem, trajectory):
    times = np.linspace(0.0, problem.duration, problem.n_steps + 1)
    with open(path, "w") as fh:
        fh.write("t,j,Mx,My,Mz\n")
        for m, t in enumerate(times):
            for j in range(problem.n_isochromats):
                mx, my, mz = (float(v) for v in trajectory[m, j])
                fh.write(f"{float(t)!r},{j + 1},{mx!r},{my!r},{mz!r}\n")
