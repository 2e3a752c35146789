"""Design tools for spiral-electrode capacitive water-level sensors."""
from .capacitor import (CapacitorConfig, EnergyReport, Solution, energy_report, omega_max,
                        profile_along_y, solve_potential, sweep_omega)
from .mesh import MeshGeometry, generate_disk_mesh, import_msh, export_msh
from .optimizer import optimize_sensitivity
from .specfun import bessel_i, bessel_k, robin_coefficient

__version__ = "0.1.0"
