"""Derivative-free search for the most water-sensitive winding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .capacitor import energy_report, loops_to_omega, solve_potential
from .errors import ConfigError, OptimizationError, SpiralCapError

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5

# reference run: loops-per-radius and cross-section width
INITIAL_SIMPLEX = ((0.6, 0.025), (1.4, 0.025), (1.0, 0.6))
MIN_WIDTH = 0.02


@dataclass
class SimplexState:
    vertices: np.ndarray
    values: np.ndarray
    iteration: int = 0


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    reason: str
    n_evaluations: int
    best_history: list = field(default_factory=list)


def _diameter(v):
    return max(np.linalg.norm(a - b) for i, a in enumerate(v) for b in v[i + 1:])


def nelder_mead(objective, initial_simplex, tol_x=1e-3, tol_f=1e-6, max_iter=200, callback=None):
    """Minimise ``objective`` with the classical simplex moves.

    Stops when the simplex diameter drops below ``tol_x``, the spread of
    vertex values below ``tol_f``, or after ``max_iter`` iterations.
    """
    v = np.array(initial_simplex, dtype=float)
    npts, dim = v.shape
    if npts != dim + 1:
        raise ConfigError(f"simplex in {dim}D needs {dim + 1} vertices, got {npts}")
    edges = v[1:] - v[0]
    if abs(np.linalg.det(edges)) <= 1e-14 * max(1.0, np.abs(edges).max()) ** dim:
        raise ConfigError("initial simplex is degenerate")
    n_eval = 0

    def f(x):
        nonlocal n_eval
        n_eval += 1
        return float(objective(x))

    fv = np.array([f(x) for x in v])
    state = SimplexState(v, fv)
    history = []
    reason = "max_iter"
    converged = False
    while True:
        order = np.argsort(state.values, kind="stable")
        state.vertices, state.values = state.vertices[order], state.values[order]
        history.append(float(state.values[0]))
        if callback is not None:
            callback(state)
        if state.values[-1] - state.values[0] < tol_f:
            reason, converged = "tol_f", True
            break
        if _diameter(state.vertices) < tol_x:
            reason, converged = "tol_x", True
            break
        if state.iteration >= max_iter:
            break
        state.iteration += 1
        v, fv = state.vertices, state.values
        centroid = v[:-1].mean(axis=0)
        xr = centroid + REFLECT * (centroid - v[-1])
        fr = f(xr)
        if fr < fv[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = f(xe)
            v[-1], fv[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < fv[-2]:
            v[-1], fv[-1] = xr, fr
            continue
        if fr < fv[-1]:
            xc = centroid + CONTRACT * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                v[-1], fv[-1] = xc, fc
                continue
        else:
            xc = centroid + CONTRACT * (v[-1] - centroid)
            fc = f(xc)
            if fc < fv[-1]:
                v[-1], fv[-1] = xc, fc
                continue
        for i in range(1, npts):
            v[i] = v[0] + SHRINK * (v[i] - v[0])
            fv[i] = f(v[i])
    return NelderMeadResult(state.vertices[0].copy(), float(state.values[0]), state.iteration,
                            converged, reason, n_eval, history)


@dataclass
class Evaluation:
    nu: float
    d: float
    sensitivity: float
    solved: bool
    error: str = ""


@dataclass
class OptimizationReport:
    nu_star: float
    d_star_cross_section: float
    d_star_along_stripe: float
    sensitivity_star: float
    iterations: int
    converged: bool
    reason: str
    evaluations: list

    def as_dict(self):
        out = dict(self.__dict__)
        out["evaluations"] = [e.__dict__ for e in self.evaluations]
        return out


class SensitivityObjective:
    """-sensitivity(nu, d) with guard regions and a memo keyed on rounded inputs."""

    def __init__(self, base):
        self.base = base
        self.cache = {}
        self.evaluations = []
        self.solves = 0

    def sensitivity(self, nu, d):
        key = (round(nu, 9), round(d, 9))
        if key in self.cache:
            return self.cache[key]
        r = self.base.r_cyl
        if d <= MIN_WIDTH or d / r > math.pi or nu < 0:
            value, solved, err = 0.0, False, "guard"
        else:
            cfg = replace(self.base, omega=loops_to_omega(nu, r), d=d, fixed_cross_section=True)
            try:
                self.solves += 1
                value, solved, err = energy_report(solve_potential(cfg)).sensitivity, True, ""
            except SpiralCapError as exc:
                value, solved, err = 0.0, False, f"{type(exc).__name__}: {exc}"
        self.cache[key] = value
        self.evaluations.append(Evaluation(float(nu), float(d), value, solved, err))
        return value

    def __call__(self, x):
        return -self.sensitivity(float(x[0]), float(x[1]))


def optimize_sensitivity(base, initial_simplex=INITIAL_SIMPLEX, tol_x=1e-2, tol_f=1e-6, max_iter=200):
    """Maximise E_in / E_total over (loops per radius, cross-section width).

    tol_x defaults to 1e-2: plate marking quantises the width to the angular
    grid, so finer steps only chase mesh noise.
    """
    obj = SensitivityObjective(base)
    res = nelder_mead(obj, initial_simplex, tol_x, tol_f, max_iter)
    if not any(e.solved for e in obj.evaluations):
        raise OptimizationError("every objective evaluation failed or was guarded")
    nu, d = (float(c) for c in res.x)
    omega = loops_to_omega(nu, base.r_cyl)
    along = d / math.sqrt(1.0 + (omega * base.r_cyl) ** 2)
    return OptimizationReport(nu, d, along, -res.fun, res.iterations, res.converged,
                              res.reason, obj.evaluations)
