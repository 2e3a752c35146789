"""P1 finite elements for the winding-reduced Laplace operator.

The bilinear form is

    a(u, v) = sum_regions eps * int grad(v) . K(x, omega) grad(u) dx + beta * oint u v ds

with K = I + omega^2 t t^T, t = (y, -x).  K is quadratic in the coordinates, so
the element integrals use the three-point edge-midpoint rule, which is exact
for quadratics; P1 gradients are constant per triangle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DomainError, NonConvergenceError, SingularSystemError

# barycentric coordinates of the edge midpoints
MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])

# 7-point degree-5 rule (Radon), used for error norms
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
DEG5_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
DEG5_WEIGHTS = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def anisotropy_tensor(x, y, omega):
    """K(x, y) = [[1 + w^2 y^2, -w^2 x y], [-w^2 x y, 1 + w^2 x^2]]; broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w2 = omega * omega
    k = np.empty(np.broadcast(x, y).shape + (2, 2))
    k[..., 0, 0] = 1.0 + w2 * y * y
    k[..., 1, 1] = 1.0 + w2 * x * x
    k[..., 0, 1] = k[..., 1, 0] = -w2 * x * y
    return k


def p1_gradients(mesh):
    """Per-triangle areas (M,) and basis gradients (M, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    # gradient of basis i is ( y_j - y_k, x_k - x_j ) / (2A) for (i, j, k) cyclic
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    two_area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.stack([b, c], axis=-1) / two_area[:, None, None]
    return 0.5 * two_area, grads


def quadrature_points(mesh, bary=MIDPOINT_BARY):
    """Physical coordinates (M, Q, 2) of barycentric quadrature points."""
    p = mesh.nodes[mesh.triangles]
    return np.einsum("qi,mid->mqd", bary, p)


def element_permittivity(mesh, eps):
    """Map region tags to permittivities via the dict ``eps``; None means 1."""
    if eps is None:
        return np.ones(mesh.n_triangles)
    unknown = set(np.unique(mesh.tags).tolist()) - set(eps)
    if unknown:
        raise ConfigError(f"no permittivity for region tag(s) {sorted(unknown)}")
    lut = np.zeros(max(max(eps), int(mesh.tags.max())) + 1)
    for tag, value in eps.items():
        lut[tag] = value
    return lut[mesh.tags]


def element_stiffness(mesh, omega, eps=None):
    """Stacked element matrices (M, 3, 3), exactly symmetric."""
    area, grads = p1_gradients(mesh)
    qp = quadrature_points(mesh)
    kbar = anisotropy_tensor(qp[..., 0], qp[..., 1], omega).mean(axis=1)
    scale = area * element_permittivity(mesh, eps)
    ke = np.einsum("mid,mde,mje->mij", grads, kbar, grads) * scale[:, None, None]
    return 0.5 * (ke + ke.transpose(0, 2, 1))


@dataclass
class LinearSystem:
    """CSR matrix with Dirichlet rows already eliminated, plus the rhs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constraints: dict = field(default_factory=dict)

    @property
    def n_dofs(self):
        return self.matrix.shape[0]


@dataclass
class ScalarField:
    values: np.ndarray
    mesh: object

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ValueError("field length must equal the node count")


def assemble_matrix(mesh, omega, eps=None, beta=0.0, robin_edges=None):
    """Global stiffness (+ Robin mass on ``robin_edges``) before constraints."""
    n = mesh.n_nodes
    ke = element_stiffness(mesh, omega, eps)
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    vals = ke.ravel()
    if beta and robin_edges is not None and len(robin_edges):
        e = np.asarray(robin_edges)
        length = np.linalg.norm(mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1)
        # 2-point Gauss on a linear edge gives the exact P1 edge mass L/6 [[2,1],[1,2]]
        me = beta * length[:, None, None] / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        rows = np.concatenate([rows, np.repeat(e, 2, axis=1).ravel()])
        cols = np.concatenate([cols, np.tile(e, (1, 2)).ravel()])
        vals = np.concatenate([vals, me.ravel()])
    a = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    # duplicate summation order is not guaranteed; averaging with the
    # transpose makes the result bitwise symmetric
    a = ((a + a.T) * 0.5).tocsr()
    a.sort_indices()
    return a


def assemble_load(mesh, f):
    """Load vector int f v dx with the midpoint rule; f(x, y) takes arrays."""
    b = np.zeros(mesh.n_nodes)
    if f is None:
        return b
    area, _ = p1_gradients(mesh)
    qp = quadrature_points(mesh)
    fq = np.broadcast_to(f(qp[..., 0], qp[..., 1]), qp.shape[:2])
    # basis i takes 1/2 at the two midpoints adjacent to vertex i
    be = (fq @ MIDPOINT_BARY) * (area / 3.0)[:, None]
    np.add.at(b, mesh.triangles.ravel(), be.ravel())
    return b


def apply_dirichlet(matrix, rhs, constraints):
    """Symmetric elimination: known columns to the rhs, unit diagonal rows."""
    n = matrix.shape[0]
    if not constraints:
        return LinearSystem(matrix.tocsr(), rhs.copy(), {})
    dofs = np.fromiter(constraints.keys(), dtype=np.int64)
    vals = np.fromiter(constraints.values(), dtype=float)
    known = np.zeros(n)
    known[dofs] = vals
    free = np.ones(n)
    free[dofs] = 0.0
    b = rhs - matrix @ known
    b[dofs] = vals
    keep = sp.diags(free)
    a = (keep @ matrix @ keep + sp.diags(1.0 - free)).tocsr()
    a.eliminate_zeros()
    a.sort_indices()
    return LinearSystem(a, b, dict(zip(dofs.tolist(), vals.tolist())))


def assemble(mesh, marking=None, omega=0.0, eps=None, beta=0.0, f=None,
             plate_voltages=(0.5, -0.5), constraints=None):
    """Assemble a(u, v) = L(v) with plate Dirichlet data from ``marking``.

    ``constraints`` (dof -> value) may be given instead of, or in addition
    to, a marking.
    """
    if beta < 0:
        raise ConfigError("Robin coefficient must be non-negative")
    edges = marking.outer_edges if marking is not None else mesh.boundary_edges
    a = assemble_matrix(mesh, omega, eps, beta, edges)
    b = assemble_load(mesh, f)
    fixed = {}
    if marking is not None:
        top, bottom = plate_voltages
        fixed.update({int(i): float(top) for i in marking.top_nodes})
        fixed.update({int(i): float(bottom) for i in marking.bottom_nodes})
    if constraints:
        fixed.update({int(k): float(v) for k, v in constraints.items()})
    return apply_dirichlet(a, b, fixed)


@dataclass
class CGInfo:
    iterations: int
    residual: float
    history: list


def solve_spd(system, rel_tol=1e-10, max_iter=None, x0=None, mesh=None, info=None):
    """Jacobi-preconditioned conjugate gradients.

    Returns a ScalarField when ``mesh`` is given, else the value array.
    ``info`` (a list) receives a CGInfo record.
    """
    a, b = system.matrix, system.rhs
    n = a.shape[0]
    diag = a.diagonal()
    if np.any(diag <= 0):
        raise SingularSystemError(f"non-positive diagonal at dof {int(np.argmax(diag <= 0))}")
    if max_iter is None:
        max_iter = max(100, int(50 * math.sqrt(n)))
    inv_d = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if system.constraints:
        idx = np.fromiter(system.constraints.keys(), dtype=np.int64)
        x[idx] = np.fromiter(system.constraints.values(), dtype=float)
    bnorm = np.linalg.norm(b)
    r = b - a @ x
    history = [np.linalg.norm(r) / bnorm if bnorm else 0.0]
    it = 0
    if bnorm == 0.0:
        x[:] = 0.0
    else:
        z = inv_d * r
        p = z.copy()
        rz = r @ z
        while history[-1] > rel_tol:
            if it >= max_iter:
                raise NonConvergenceError(f"CG hit the iteration cap {max_iter}", history[-1])
            ap = a @ p
            pap = p @ ap
            if pap <= 0:
                raise SingularSystemError("matrix is not positive definite")
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            z = inv_d * r
            rz_new = r @ z
            p *= rz_new / rz
            p += z
            rz = rz_new
            it += 1
            history.append(np.linalg.norm(r) / bnorm)
    if system.constraints:
        x[idx] = np.fromiter(system.constraints.values(), dtype=float)
    if info is not None:
        info.append(CGInfo(it, history[-1], history))
    return ScalarField(x, mesh) if mesh is not None else x


class PointLocator:
    """Bucket grid over triangle bounding boxes for point location."""

    def __init__(self, mesh, cells_per_axis=None):
        self.mesh = mesh
        p = mesh.nodes[mesh.triangles]
        self.lo_tri = p.min(axis=1)
        self.hi_tri = p.max(axis=1)
        self.lo = mesh.nodes.min(axis=0)
        self.hi = mesh.nodes.max(axis=0)
        m = mesh.n_triangles
        self.nc = cells_per_axis or max(1, int(math.sqrt(m / 4)))
        self.h = (self.hi - self.lo) / self.nc
        self.h[self.h == 0] = 1.0
        i0 = self._cell(self.lo_tri)
        i1 = self._cell(self.hi_tri)
        buckets = {}
        for t in range(m):
            for i in range(i0[t, 0], i1[t, 0] + 1):
                for j in range(i0[t, 1], i1[t, 1] + 1):
                    buckets.setdefault((i, j), []).append(t)
        self.buckets = {key: np.array(v) for key, v in buckets.items()}

    def _cell(self, pts):
        return np.clip(((pts - self.lo) / self.h).astype(int), 0, self.nc - 1)

    def locate(self, x, y, tol=1e-12):
        """Containing triangle and barycentric weights (3,)."""
        if not (self.lo[0] - tol <= x <= self.hi[0] + tol and self.lo[1] - tol <= y <= self.hi[1] + tol):
            raise DomainError(f"point ({x}, {y}) is outside the mesh")
        i, j = self._cell(np.array([[x, y]]))[0]
        cand = self.buckets.get((int(i), int(j)))
        if cand is not None:
            lam = barycentric(self.mesh, cand, x, y)
            inside = lam.min(axis=1) >= -tol
            if inside.any():
                k = int(np.argmax(inside))
                return int(cand[k]), lam[k]
        raise DomainError(f"point ({x}, {y}) is outside the mesh")


def barycentric(mesh, tris, x, y):
    p = mesh.nodes[mesh.triangles[tris]]
    x0, y0 = p[:, 0, 0], p[:, 0, 1]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    l1 = ((x - x0) * d2[:, 1] - (y - y0) * d2[:, 0]) / det
    l2 = (d1[:, 0] * (y - y0) - d1[:, 1] * (x - x0)) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=1)


def evaluate(field, point, locator=None):
    """P1 interpolation of ``field`` at ``point``; DomainError outside the mesh."""
    locator = locator or PointLocator(field.mesh)
    t, lam = locator.locate(float(point[0]), float(point[1]))
    nodes = field.mesh.triangles[t]
    # exact nodal value when the point is a vertex
    hit = np.flatnonzero(np.isclose(lam, 1.0, rtol=0, atol=1e-14))
    if len(hit):
        return float(field.values[nodes[hit[0]]])
    return float(lam @ field.values[nodes])


def l2_error(field, exact, bary=DEG5_BARY, weights=DEG5_WEIGHTS):
    """||u_h - exact||_L2 with a degree-5 triangle rule."""
    mesh = field.mesh
    area, _ = p1_gradients(mesh)
    qp = quadrature_points(mesh, bary)
    uh = np.einsum("qi,mi->mq", bary, field.values[mesh.triangles])
    ue = exact(qp[..., 0], qp[..., 1])
    return float(math.sqrt(np.sum(area[:, None] * weights[None, :] * (uh - ue) ** 2)))
