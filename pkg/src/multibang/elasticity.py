"""P1 vector finite elements for the clamped-beam elasticity operator.

Structured triangulation of a rectangle (bottom edge clamped), exact
quadrature for the mass and stiffness matrices, and the saddle-point
residual/Jacobian used by the semismooth Newton driver.  Dirichlet
conditions are imposed by row/column elimination; dof ordering is
node-major with interleaved components (dof = 2*node + component).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass(frozen=True)
class ElasticMaterial:
    modulus: float = 20.0
    poisson: float = 0.3

    def __post_init__(self):
        if not self.modulus > 0:
            raise ValueError("elastic modulus must be positive")
        if not 0.0 < self.poisson < 0.5:
            raise ValueError("Poisson ratio must lie in (0, 0.5)")

    @property
    def mu(self):
        return self.modulus / (2.0 * (1.0 + self.poisson))

    @property
    def lam(self):
        nu = self.poisson
        return self.modulus * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))


@dataclass(frozen=True)
class StructuredMesh:
    """Uniform triangulation of [0, lx] x [0, ly], diagonals all
    bottom-left to top-right; the bottom row y = 0 is clamped."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 2.0
    vertices: np.ndarray = field(init=False)
    triangles: np.ndarray = field(init=False)
    dirichlet_nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need at least 2 vertices per direction")
        xs = np.linspace(0.0, self.lx, self.nx)
        ys = np.linspace(0.0, self.ly, self.ny)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        verts = np.stack([X.ravel(), Y.ravel()], axis=1)  # node = iy*nx + ix
        ix, iy = np.meshgrid(np.arange(self.nx - 1), np.arange(self.ny - 1), indexing="xy")
        v00 = (iy * self.nx + ix).ravel()
        v10 = v00 + 1
        v01 = v00 + self.nx
        v11 = v01 + 1
        tris = np.vstack(
            [np.stack([v00, v10, v11], axis=1), np.stack([v00, v11, v01], axis=1)]
        )
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "dirichlet_nodes", np.arange(self.nx))

    @property
    def n_nodes(self):
        return self.vertices.shape[0]

    @property
    def free_nodes(self):
        return np.arange(self.nx, self.n_nodes)

    @property
    def top_nodes(self):
        return np.arange((self.ny - 1) * self.nx, self.ny * self.nx)


def _element_geometry(mesh):
    tri = mesh.triangles
    p = mesh.vertices[tri]  # (nt, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(np.abs(det) < 1e-15):
        raise ValueError("degenerate triangle in mesh")
    area = 0.5 * det
    # gradients of the three barycentric hats, shape (nt, 3, 2)
    g = np.empty((tri.shape[0], 3, 2))
    g[:, 0, 0] = p[:, 1, 1] - p[:, 2, 1]
    g[:, 0, 1] = p[:, 2, 0] - p[:, 1, 0]
    g[:, 1, 0] = p[:, 2, 1] - p[:, 0, 1]
    g[:, 1, 1] = p[:, 0, 0] - p[:, 2, 0]
    g[:, 2, 0] = p[:, 0, 1] - p[:, 1, 1]
    g[:, 2, 1] = p[:, 1, 0] - p[:, 0, 0]
    g /= (2.0 * area)[:, None, None]
    return area, g


@dataclass(frozen=True)
class AssembledSystem:
    mesh: StructuredMesh
    material: ElasticMaterial
    mass: sp.csr_matrix  # full 2n x 2n matrices, before elimination
    strain: sp.csr_matrix
    divdiv: sp.csr_matrix
    operator: sp.csr_matrix
    free_dofs: np.ndarray
    Mh: sp.csr_matrix  # eliminated (free x free) blocks
    Lh: sp.csr_matrix
    Kh: sp.csr_matrix
    Ah: sp.csr_matrix
    Zh: np.ndarray
    target: np.ndarray  # nodal target field, (n_nodes, 2)

    @property
    def n_free(self):
        return self.free_dofs.size

    def to_free(self, full_field):
        return np.asarray(full_field, dtype=float).ravel()[self.free_dofs]

    def to_full(self, free_vec):
        out = np.zeros(2 * self.mesh.n_nodes)
        out[self.free_dofs] = free_vec
        return out.reshape(-1, 2)


def assemble(mesh: StructuredMesh, material: ElasticMaterial, target=None) -> AssembledSystem:
    """Exact P1 assembly of mass, strain and div-div matrices."""
    area, g = _element_geometry(mesh)
    nt = mesh.triangles.shape[0]
    n = mesh.n_nodes

    # 6x6 element blocks, dof order (node0 x, node0 y, node1 x, ...)
    me = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    Me = np.zeros((nt, 6, 6))
    Le = np.zeros((nt, 6, 6))
    Ke = np.zeros((nt, 6, 6))
    gg = np.einsum("tid,tjd->tij", g, g)  # grad_i . grad_j
    for i in range(3):
        for j in range(3):
            for c in range(2):
                for d in range(2):
                    le = 0.5 * ((c == d) * gg[:, i, j] + g[:, i, d] * g[:, j, c])
                    Le[:, 2 * i + c, 2 * j + d] = area * le
                    Ke[:, 2 * i + c, 2 * j + d] = area * g[:, i, c] * g[:, j, d]
            Me[:, 2 * i, 2 * j] = area * me[i, j]
            Me[:, 2 * i + 1, 2 * j + 1] = area * me[i, j]

    dofs = np.empty((nt, 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()

    def build(blocks):
        mat = sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(2 * n, 2 * n))
        return mat.tocsr()

    M = build(Me)
    L = build(Le)
    K = build(Ke)
    A = (2.0 * material.mu * L + material.lam * K).tocsr()

    dir_dofs = np.concatenate([2 * mesh.dirichlet_nodes, 2 * mesh.dirichlet_nodes + 1])
    mask = np.ones(2 * n, dtype=bool)
    mask[dir_dofs] = False
    free = np.flatnonzero(mask)

    if target is None:
        target_nodal = np.zeros((n, 2))
    elif callable(target):
        target_nodal = np.array([target(x) for x in mesh.vertices], dtype=float)
    else:
        target_nodal = np.asarray(target, dtype=float).reshape(n, 2)
    Zh = (M @ target_nodal.ravel())[free]

    return AssembledSystem(
        mesh=mesh,
        material=material,
        mass=M,
        strain=L,
        divdiv=K,
        operator=A,
        free_dofs=free,
        Mh=M[np.ix_(free, free)].tocsr(),
        Lh=L[np.ix_(free, free)].tocsr(),
        Kh=K[np.ix_(free, free)].tocsr(),
        Ah=A[np.ix_(free, free)].tocsr(),
        Zh=Zh,
        target=target_nodal,
    )


class SolverError(RuntimeError):
    pass


def solve_state(system: AssembledSystem, load, rtol=1e-12):
    """Displacement y with Ah y = Mh load (load given on free dofs)."""
    load = np.asarray(load, dtype=float).ravel()
    rhs = system.Mh @ load
    y = spla.spsolve(system.Ah.tocsc(), rhs)
    res = np.linalg.norm(system.Ah @ y - rhs)
    if res > rtol * max(1.0, np.linalg.norm(rhs)):
        raise SolverError(f"state solve residual {res:.3e} above tolerance")
    return y


def apply_yosida_free(system, p_free, penalty, gamma):
    return penalty.yosida(p_free.reshape(-1, 2), gamma).ravel()


def residual(system: AssembledSystem, y, p, penalty, gamma):
    """Both blocks of the discrete regularized optimality system."""
    hp = apply_yosida_free(system, p, penalty, gamma)
    r1 = system.Ah.T @ p + system.Mh @ y - system.Zh
    r2 = system.Ah @ y - system.Mh @ hp
    return r1, r2


def _blockdiag_2x2(blocks):
    n = blocks.shape[0]
    base = 2 * np.arange(n, dtype=np.int64)
    rows = np.stack([base, base, base + 1, base + 1], axis=1).ravel()
    cols = np.stack([base, base + 1, base, base + 1], axis=1).ravel()
    return sp.coo_matrix((blocks.reshape(n, 4).ravel(), (rows, cols)), shape=(2 * n, 2 * n)).tocsr()


def newton_step(system: AssembledSystem, y, p, penalty, gamma, rtol=1e-10):
    """Solve the saddle-point Newton system by sparse direct factorization."""
    dn = penalty.newton_deriv(p.reshape(-1, 2), gamma)
    D = _blockdiag_2x2(dn)
    r1, r2 = residual(system, y, p, penalty, gamma)
    J = sp.bmat(
        [[system.Mh, system.Ah.T], [system.Ah, -(system.Mh @ D)]], format="csc"
    )
    rhs = -np.concatenate([r1, r2])
    try:
        sol = spla.splu(J).solve(rhs)
    except RuntimeError as exc:  # singular factorization
        raise SolverError(f"Newton step factorization failed: {exc}") from exc
    res = np.linalg.norm(J @ sol - rhs)
    if not np.all(np.isfinite(sol)) or res > rtol * max(1.0, np.linalg.norm(rhs)):
        raise SolverError(f"Newton step residual {res:.3e} above tolerance")
    nfree = system.n_free
    return sol[:nfree], sol[nfree:]


def make_rotation_target(mesh: StructuredMesh, angle):
    """Displacement of a rigid rotation of the solid about its center."""
    center = np.array([0.5 * mesh.lx, 0.5 * mesh.ly])
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    rel = mesh.vertices - center
    return rel @ (R - np.eye(2)).T


def make_deadload_target(system: AssembledSystem, magnitude, noise=0.0, rng=None):
    """Displacement induced by a leftward traction on the top edge.

    Optional uniform nodal noise in [-noise, +noise] per component
    reproduces the perturbed variant; pass a seeded generator for
    reproducibility.
    """
    mesh = system.mesh
    traction = np.array([-float(magnitude), 0.0])
    f = np.zeros((mesh.n_nodes, 2))
    top = mesh.top_nodes
    seg = np.linalg.norm(np.diff(mesh.vertices[top], axis=0), axis=1)
    for k in range(top.size - 1):
        f[top[k]] += 0.5 * seg[k] * traction
        f[top[k + 1]] += 0.5 * seg[k] * traction
    y = spla.spsolve(system.Ah.tocsc(), f.ravel()[system.free_dofs])
    z = system.to_full(y)
    if noise > 0.0:
        if rng is None:
            raise ValueError("noise requires a seeded generator")
        z = z + rng.uniform(-noise, noise, z.shape)
    return z


def export_field_csv(path, mesh: StructuredMesh, values, header=("v1", "v2")):
    values = np.asarray(values, dtype=float).reshape(mesh.n_nodes, -1)
    cols = ",".join(header)
    with open(path, "w") as fh:
        fh.write(f"x,y,{cols}\n")
        for (x, y), row in zip(mesh.vertices, values):
            vals = ",".join(repr(float(v)) for v in row)
            fh.write(f"{float(x)!r},{float(y)!r},{vals}\n")


def export_mesh_csv(vertex_path, triangle_path, mesh: StructuredMesh):
    with open(vertex_path, "w") as fh:
        fh.write("x,y\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r},{float(y)!r}\n")
    with open(triangle_path, "w") as fh:
        fh.write("v1,v2,v3\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{int(a)},{int(b)},{int(c)}\n")
