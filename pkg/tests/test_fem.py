import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from spiralcap import fem
from spiralcap.errors import ConfigError, DomainError, NonConvergenceError, SingularSystemError
from spiralcap.mesh import OUT, Mesh2D, find_boundary_edges, generate_annulus_mesh
from spiralcap.oracle import manufactured_source


def square_mesh(n, size=1.0):
    """n x n cells on [0, size]^2, each split along its diagonal."""
    g = np.linspace(0.0, size, n + 1)
    xx, yy = np.meshgrid(g, g, indexing="xy")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    tris = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b, c, d = a + 1, a + n + 2, a + n + 1
            tris += [(a, b, c), (a, c, d)]
    tris = np.array(tris)
    return Mesh2D(nodes, tris, np.full(len(tris), OUT), find_boundary_edges(tris))


def boundary_nodes(mesh):
    return np.unique(mesh.boundary_edges)


def test_tensor_examples():
    k = fem.anisotropy_tensor(1.0, 0.0, 2.0)
    assert np.array_equal(k, [[1.0, 0.0], [0.0, 5.0]])
    k = fem.anisotropy_tensor(1.0, 1.0, 1.0)
    assert np.array_equal(k, [[2.0, -1.0], [-1.0, 2.0]])
    assert np.array_equal(fem.anisotropy_tensor(0.3, -0.7, 0.0), np.eye(2))


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-5, 5), y=st.floats(-5, 5), w=st.floats(0, 20))
def test_tensor_spectrum(x, y, w):
    k = fem.anisotropy_tensor(x, y, w)
    lam = np.linalg.eigvalsh(k)
    big = 1.0 + w * w * (x * x + y * y)
    assert lam[0] == pytest.approx(1.0, rel=1e-9)
    assert lam[1] == pytest.approx(big, rel=1e-9)
    assert np.linalg.det(k) == pytest.approx(big, rel=1e-9)
    assert np.array_equal(k, k.T)


def test_unit_triangle_stiffness():
    mesh = Mesh2D(np.array([[0.0, 0], [1, 0], [0, 1]]), np.array([[0, 1, 2]]), np.array([OUT]),
                  np.array([[0, 1], [1, 2], [2, 0]]))
    ke = fem.element_stiffness(mesh, 0.0)[0]
    assert np.allclose(ke, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)
    area, grads = fem.p1_gradients(mesh)
    assert area[0] == 0.5


@pytest.mark.parametrize("omega", [0.0, 1.0, 6.0])
def test_global_matrix_properties(omega, rng):
    mesh = generate_annulus_mesh(0.5, 2.0, 6, 32)
    a = fem.assemble_matrix(mesh, omega)
    assert (a != a.T).nnz == 0
    # constants are in the kernel without Robin terms
    assert np.abs(a @ np.ones(mesh.n_nodes)).max() < 1e-12 * abs(a).max()
    for _ in range(100):
        v = rng.standard_normal(mesh.n_nodes)
        v -= v.mean()
        assert v @ (a @ v) > 0


def test_robin_mass_exact():
    mesh = square_mesh(1)
    a0 = fem.assemble_matrix(mesh, 0.0)
    a1 = fem.assemble_matrix(mesh, 0.0, beta=2.0, robin_edges=mesh.boundary_edges)
    # beta * perimeter equals the quadratic form on constants
    ones = np.ones(4)
    assert ones @ ((a1 - a0) @ ones) == pytest.approx(2.0 * 4.0)


def test_single_free_dof():
    mesh = square_mesh(2)
    fixed = {int(i): 0.0 for i in boundary_nodes(mesh)}
    system = fem.assemble(mesh, constraints=fixed, f=lambda x, y: np.ones_like(x))
    u = fem.solve_spd(system)
    # one interior node: 5-point stencil, diagonal 4 on a uniform grid
    a = system.matrix[4, 4]
    assert a == pytest.approx(4.0)
    assert u[4] == pytest.approx(system.rhs[4] / 4.0)


def test_linear_field_reproduced():
    mesh = square_mesh(6)
    exact = lambda x, y: 0.3 + 2.0 * x - 1.5 * y
    fixed = {int(i): exact(*mesh.nodes[i]) for i in boundary_nodes(mesh)}
    u = fem.solve_spd(fem.assemble(mesh, constraints=fixed))
    assert np.abs(u - exact(mesh.nodes[:, 0], mesh.nodes[:, 1])).max() < 1e-10


@pytest.mark.parametrize("omega", [0.0, 2.5])
def test_cg_matches_dense(omega, rng):
    mesh = square_mesh(10, size=2.0)
    fixed = {int(i): float(rng.uniform(-1, 1)) for i in boundary_nodes(mesh)}
    system = fem.assemble(mesh, omega=omega, constraints=fixed, f=lambda x, y: x - y)
    u = fem.solve_spd(system)
    dense = np.linalg.solve(system.matrix.toarray(), system.rhs)
    assert np.abs(u - dense).max() < 1e-8


def test_discrete_maximum_principle(rng):
    mesh = square_mesh(12)
    fixed = {int(i): float(rng.uniform(-1, 1)) for i in boundary_nodes(mesh)}
    u = fem.solve_spd(fem.assemble(mesh, constraints=fixed))
    lo, hi = min(fixed.values()), max(fixed.values())
    assert lo - 1e-12 <= u.min() and u.max() <= hi + 1e-12


def test_robin_only_gives_zero():
    mesh = generate_annulus_mesh(0.5, 2.0, 4, 32)
    u = fem.solve_spd(fem.assemble(mesh, omega=1.0, beta=0.7))
    assert np.array_equal(u, np.zeros(mesh.n_nodes))


def test_cg_residual_history_and_energy_norm_decrease():
    mesh = generate_annulus_mesh(0.5, 2.0, 8, 64)
    fixed = {int(i): float(mesh.nodes[i, 0]) for i in boundary_nodes(mesh)}
    system = fem.assemble(mesh, omega=1.0, constraints=fixed)
    info = []
    u = fem.solve_spd(system, info=info)
    assert info[0].residual <= 1e-10
    assert info[0].iterations == len(info[0].history) - 1
    # CG minimises the A-norm of the error over growing Krylov spaces
    errs = []
    a = system.matrix
    for k in (5, 10, 20, 40):
        xk = _cg_partial(system, k)
        e = xk - u
        errs.append(e @ (a @ e))
    assert all(b <= a_ + 1e-14 for a_, b in zip(errs, errs[1:]))


def _cg_partial(system, k):
    """Iterate after exactly k preconditioned CG steps (same recurrence as the solver)."""
    a, b = system.matrix, system.rhs
    inv_d = 1.0 / a.diagonal()
    x = np.zeros_like(b)
    idx = np.array(list(system.constraints))
    x[idx] = list(system.constraints.values())
    r = b - a @ x
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    for _ in range(k):
        ap = a @ p
        alpha = rz / (p @ ap)
        x += alpha * p
        r -= alpha * ap
        z = inv_d * r
        rz_new = r @ z
        p = z + rz_new / rz * p
        rz = rz_new
    return x


def test_solver_errors():
    mesh = generate_annulus_mesh(0.5, 2.0, 8, 64)
    fixed = {int(i): float(mesh.nodes[i, 0]) for i in boundary_nodes(mesh)}
    system = fem.assemble(mesh, omega=1.0, constraints=fixed)
    with pytest.raises(NonConvergenceError) as exc:
        fem.solve_spd(system, max_iter=2)
    assert exc.value.residual > 1e-10
    bad = fem.LinearSystem(sp.csr_matrix(np.diag([1.0, 0.0])), np.ones(2))
    with pytest.raises(SingularSystemError):
        fem.solve_spd(bad)
    with pytest.raises(ConfigError):
        fem.assemble(mesh, beta=-1.0)
    with pytest.raises(ConfigError):
        fem.element_permittivity(mesh, {2: 1.0})


def test_evaluate():
    mesh = square_mesh(4)
    vals = 1.0 + mesh.nodes[:, 0] * 3.0 - mesh.nodes[:, 1]
    field = fem.ScalarField(vals, mesh)
    loc = fem.PointLocator(mesh)
    assert fem.evaluate(field, mesh.nodes[7], loc) == vals[7]
    c = mesh.nodes[mesh.triangles[3]].mean(axis=0)
    assert fem.evaluate(field, c, loc) == pytest.approx(vals[mesh.triangles[3]].mean())
    assert fem.evaluate(field, (0.37, 0.81), loc) == pytest.approx(1 + 1.11 - 0.81)
    with pytest.raises(DomainError):
        fem.evaluate(field, (1.5, 0.5), loc)
    with pytest.raises(ValueError):
        fem.ScalarField(np.zeros(3), mesh)


@pytest.mark.parametrize("omega", [0.5, 2.0])
def test_manufactured_convergence(omega):
    exact, f = manufactured_source(omega)
    errors = []
    for level in range(3):
        n, s = 4 * 2 ** level, 32 * 2 ** level
        mesh = generate_annulus_mesh(0.5, 2.0, n, s)
        fixed = {int(i): float(exact(*mesh.nodes[i])) for i in boundary_nodes(mesh)}
        field = fem.solve_spd(fem.assemble(mesh, omega=omega, f=f, constraints=fixed), mesh=mesh)
        errors.append(fem.l2_error(field, exact))
    rates = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    assert all(r > 1.8 for r in rates), (errors, rates)
