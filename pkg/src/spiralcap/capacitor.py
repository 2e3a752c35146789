"""Spiral-electrode sensor: problem setup, solve, energies and figures of merit.

Energies are per unit cylinder length and drop the Gaussian 1/(8 pi) factor;
multiply by 1/(8 pi) for physical Gaussian units.  With V = 1 the capacitance
is C = 2 E.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import fem
from .errors import ConfigError, SpiralCapError
from .mesh import IN, OUT, WALL, MeshGeometry, generate_disk_mesh, mark_boundaries, plate_angle
from .specfun import robin_coefficient


ENERGY_SIGNS = {"equation": -1.0, "listing": 1.0}


@dataclass(frozen=True)
class CapacitorConfig:
    """Physical and discretization parameters.

    omega is radians of spiral rotation per unit length.  d is the width
    along the stripe, or the cross-section footprint when
    ``fixed_cross_section`` is set.  The size fields of ``mesh`` are replaced
    by r_cyl, wall and R when the mesh is built.

    ``energy_convention`` selects the azimuthal energy term: "equation" uses
    (y u_x - x u_y)^2, the chain-rule result; "listing" uses
    (y u_x + x u_y)^2, a sign variant that is not rotation invariant, kept
    for comparison.
    """

    omega: float = 0.0
    d: float = 0.2
    r_cyl: float = 1.0
    wall: float = 0.1
    R: float = 5.0
    eps_in: float = 1.0
    eps_wall: float = 10.0
    eps_out: float = 1.0
    plate_voltages: tuple = (0.5, -0.5)
    fixed_cross_section: bool = False
    mesh: MeshGeometry = MeshGeometry()
    energy_convention: str = "equation"
    plate_tol: float = 1e-3
    rel_tol: float = 1e-10
    max_iter: int | None = None

    def validate(self):
        if not self.omega >= 0:
            raise ConfigError(f"omega must be >= 0, got {self.omega}")
        if not self.d > 0:
            raise ConfigError(f"plate width must be positive, got {self.d}")
        if not self.R > self.r_cyl > 0:
            raise ConfigError("need R > r_cyl > 0")
        if self.energy_convention not in ENERGY_SIGNS:
            raise ConfigError(f"energy_convention must be one of {sorted(ENERGY_SIGNS)}")
        for name in ("eps_in", "eps_wall", "eps_out"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        alpha = plate_angle(self.r_cyl, self.d, self.omega, self.fixed_cross_section)
        if alpha > math.pi * (1 + 1e-12):
            raise ConfigError(f"plate angle {alpha:.6g} exceeds pi at omega={self.omega}, d={self.d}")
        self.geometry().validate()

    def geometry(self):
        return replace(self.mesh, cyl_size=self.r_cyl, wall_size=self.wall, boundary_size=self.R)

    @property
    def permittivity(self):
        return {OUT: self.eps_out, IN: self.eps_in, WALL: self.eps_wall}

    @property
    def voltage(self):
        return self.plate_voltages[0] - self.plate_voltages[1]


@lru_cache(maxsize=8)
def cached_mesh(geom):
    return generate_disk_mesh(geom)


@dataclass
class Solution:
    field: fem.ScalarField
    mesh: object
    marking: object
    config: CapacitorConfig
    iterations: int = 0

    @property
    def values(self):
        return self.field.values


@dataclass
class EnergyReport:
    E_in: float
    E_wall: float
    E_out: float
    E_total: float
    C_total: float
    C_in: float
    sensitivity: float

    def as_dict(self):
        return dict(self.__dict__)


def solve_potential(config, mesh=None):
    """Discrete 2D potential for ``config`` (mesh generated and cached if not given)."""
    config.validate()
    if mesh is None:
        mesh = cached_mesh(config.geometry())
    beta = robin_coefficient(config.omega, config.R)
    marking = mark_boundaries(mesh, config.r_cyl, config.d, config.omega,
                              config.fixed_cross_section, config.plate_tol)
    system = fem.assemble(mesh, marking, config.omega, config.permittivity, beta,
                          None, config.plate_voltages)
    info = []
    field = fem.solve_spd(system, config.rel_tol, config.max_iter, mesh=mesh, info=info)
    return Solution(field, mesh, marking, config, info[0].iterations)


def element_energy_density(mesh, values, omega, convention="equation"):
    """Per-triangle mean of |grad u|^2 + omega^2 (y u_x - x u_y)^2 over the midpoint rule."""
    sign = ENERGY_SIGNS[convention]
    _, grads = fem.p1_gradients(mesh)
    g = np.einsum("mid,mi->md", grads, values[mesh.triangles])
    qp = fem.quadrature_points(mesh)
    azim = qp[..., 1] * g[:, None, 0] + sign * qp[..., 0] * g[:, None, 1]
    return (g * g).sum(axis=1) + omega * omega * (azim * azim).mean(axis=1)


def region_energies(mesh, values, omega, eps=None, convention="equation"):
    """{tag: sum over triangles of eps * area * energy density}."""
    area, _ = fem.p1_gradients(mesh)
    e = area * fem.element_permittivity(mesh, eps) * \
        element_energy_density(mesh, values, omega, convention)
    return {int(t): float(e[mesh.tags == t].sum()) for t in np.unique(mesh.tags)}


def energy_report(sol):
    cfg = sol.config
    parts = region_energies(sol.mesh, sol.values, cfg.omega, cfg.permittivity,
                            cfg.energy_convention)
    e_in, e_wall, e_out = (parts.get(t, 0.0) for t in (IN, WALL, OUT))
    total = e_in + e_wall + e_out
    v2 = cfg.voltage ** 2
    return EnergyReport(e_in, e_wall, e_out, total, 2 * total / v2, 2 * e_in / v2,
                        e_in / total if total > 0 else 0.0)


def nodal_energy_density(sol):
    """Area-weighted nodal average of eps * energy density (for visualisation)."""
    mesh = sol.mesh
    area, _ = fem.p1_gradients(mesh)
    dens = fem.element_permittivity(mesh, sol.config.permittivity) * \
        element_energy_density(mesh, sol.values, sol.config.omega, sol.config.energy_convention)
    num = np.zeros(mesh.n_nodes)
    den = np.zeros(mesh.n_nodes)
    np.add.at(num, mesh.triangles.ravel(), np.repeat(area * dens, 3))
    np.add.at(den, mesh.triangles.ravel(), np.repeat(area, 3))
    return num / den


def omega_max(d, r):
    """Winding frequency at which the two plates meet (plate angle = pi)."""
    if not d > 0 or not r > 0:
        raise ConfigError("need d > 0 and r > 0")
    if d >= math.pi * r:
        raise ConfigError(f"d={d} >= pi*r: plates overlap even without winding")
    return math.sqrt((math.pi / d) ** 2 - 1.0 / r ** 2)


def loops_to_omega(nu, r_cyl):
    """Loops per cylinder radius -> radians per unit length."""
    return 2.0 * math.pi * nu / r_cyl


@dataclass
class SweepRow:
    nu: float
    C_total: float = float("nan")
    C_in: float = float("nan")
    sensitivity: float = float("nan")
    error: str = ""

    @property
    def ok(self):
        return not self.error


def _sweep_point(config, nu):
    try:
        cfg = replace(config, omega=loops_to_omega(nu, config.r_cyl))
        rep = energy_report(solve_potential(cfg))
        return SweepRow(nu, rep.C_total, rep.C_in, rep.sensitivity)
    except SpiralCapError as exc:
        return SweepRow(nu, error=f"{type(exc).__name__}: {exc}")


def sweep_omega(config, grid, jobs=1):
    """One row per winding frequency in ``grid`` (loops per radius), in grid order."""
    grid = [float(nu) for nu in grid]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda nu: _sweep_point(config, nu), grid))
    return [_sweep_point(config, nu) for nu in grid]


def profile_along_y(sol, n=201):
    """Potential sampled at (0, y) on n cell-centred points of (-R, R)."""
    if n < 2:
        raise ValueError("need at least two samples")
    R = sol.config.R
    y = -R + (np.arange(n) + 0.5) * (2 * R / n)
    loc = fem.PointLocator(sol.mesh)
    return [(float(yy), fem.evaluate(sol.field, (0.0, yy), loc)) for yy in y]
