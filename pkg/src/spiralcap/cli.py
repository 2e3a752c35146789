"""spiralcap command line: mesh, solve, sweep, optimize, profile.

    spiralcap <command> [--config PATH] [--set key=value ...] [--out DIR] [--jobs N]

The config is a JSON document (see README for the schema); ``--set`` takes
dotted keys (``mesh.sectors=360``) with JSON values and wins over the file.
Exit codes: 0 ok, 1 config error, 2 mesh error, 3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import io
from .capacitor import (CapacitorConfig, energy_report, loops_to_omega, nodal_energy_density,
                        profile_along_y, solve_potential, sweep_omega)
from .errors import ConfigError, MeshError, SolverError
from .mesh import MeshGeometry, export_msh, generate_disk_mesh, read_msh, validate_mesh
from .optimizer import INITIAL_SIMPLEX, optimize_sensitivity

log = logging.getLogger("spiralcap")

COMMANDS = ("mesh", "solve", "sweep", "optimize", "profile")

_MESH_KEYS = {f.name for f in fields(MeshGeometry)} - {"cyl_size", "wall_size", "boundary_size"}

DEFAULTS = {
    "omega_loops": 1.0,
    "d": 0.2,
    "r_cyl": 1.0,
    "wall": 0.1,
    "R": 5.0,
    "eps_in": 1.0,
    "eps_wall": 10.0,
    "eps_out": 1.0,
    "plate_voltages": [0.5, -0.5],
    "fixed_cross_section": False,
    "energy_convention": "equation",
    "mesh_file": None,
    "mesh": {k: getattr(MeshGeometry(), k) for k in sorted(_MESH_KEYS)},
    "solver": {"rel_tol": 1e-10, "max_iter": None},
    "sweep": {"grid": [0.1, 0.25, 0.5, 1.0, 1.5, 2.0]},
    "optimize": {"tol_x": 1e-2, "tol_f": 1e-6, "max_iter": 200,
                 "initial_simplex": [list(p) for p in INITIAL_SIMPLEX]},
    "profile": {"n": 201},
}

_POSITIVE = ("d", "r_cyl", "wall", "R", "eps_in", "eps_wall", "eps_out")


@dataclass
class RunConfig:
    capacitor: CapacitorConfig
    omega_loops: float
    mesh_file: str | None
    sweep_grid: list
    optimize: dict
    profile_n: int
    effective: dict


def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got '{item}'")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    nested = value
    for part in reversed(key.strip().split(".")):
        nested = {part: nested}
    return nested


def _number(doc, key, where=None):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{where or key}' must be a number")
    return float(value)


def parse_config(text=None, overrides=()):
    """Validated RunConfig from JSON ``text`` (None or blank -> defaults) plus overrides."""
    doc = copy.deepcopy(DEFAULTS)
    if text is not None and text.strip():
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config document must be a JSON object")
        _merge(doc, user)
    for item in overrides:
        _merge(doc, _parse_override(item))

    for key in _POSITIVE:
        if not _number(doc, key) > 0:
            raise ConfigError(f"config key '{key}' must be positive")
    if not _number(doc, "omega_loops") >= 0:
        raise ConfigError("config key 'omega_loops' must be >= 0")
    pv = doc["plate_voltages"]
    if not (isinstance(pv, list) and len(pv) == 2 and all(isinstance(v, (int, float)) for v in pv)):
        raise ConfigError("config key 'plate_voltages' must be [top, bottom]")
    if pv[0] == pv[1]:
        raise ConfigError("config key 'plate_voltages' needs distinct values")
    if not isinstance(doc["fixed_cross_section"], bool):
        raise ConfigError("config key 'fixed_cross_section' must be true or false")
    for key, value in doc["mesh"].items():
        if key == "sectors":
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError("config key 'mesh.sectors' must be an integer")
        elif not _number(doc["mesh"], key, f"mesh.{key}") > 0:
            raise ConfigError(f"config key 'mesh.{key}' must be positive")
    grid = doc["sweep"]["grid"]
    if not isinstance(grid, list) or not grid:
        raise ConfigError("config key 'sweep.grid' must be a non-empty list")
    for v in grid:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
            raise ConfigError("config key 'sweep.grid' entries must be numbers >= 0")
    n = doc["profile"]["n"]
    if not isinstance(n, int) or n < 2:
        raise ConfigError("config key 'profile.n' must be an integer >= 2")

    cap = CapacitorConfig(
        omega=loops_to_omega(doc["omega_loops"], doc["r_cyl"]),
        d=float(doc["d"]), r_cyl=float(doc["r_cyl"]), wall=float(doc["wall"]), R=float(doc["R"]),
        eps_in=float(doc["eps_in"]), eps_wall=float(doc["eps_wall"]), eps_out=float(doc["eps_out"]),
        plate_voltages=(float(pv[0]), float(pv[1])),
        fixed_cross_section=doc["fixed_cross_section"],
        mesh=MeshGeometry(**doc["mesh"]),
        energy_convention=doc["energy_convention"],
        rel_tol=float(doc["solver"]["rel_tol"]),
        max_iter=doc["solver"]["max_iter"],
    )
    cap.validate()
    return RunConfig(cap, float(doc["omega_loops"]), doc["mesh_file"], [float(v) for v in grid],
                     dict(doc["optimize"]), n, doc)


def _load_mesh(run):
    if run.mesh_file:
        return read_msh(run.mesh_file)
    return None


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def run(command, config, out_dir=".", jobs=1):
    """Execute ``command``; returns the exit status."""
    out = Path(out_dir)
    eff = config.effective
    tag = f"spiralcap {command} config_hash={io.config_hash(eff)}"
    try:
        if command == "mesh":
            mesh = _load_mesh(config) or generate_disk_mesh(config.capacitor.geometry())
            diag = validate_mesh(mesh)
            print(f"mesh: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles, {diag.summary()}")
            config_lines = [json.dumps(eff, sort_keys=True, separators=(",", ":"))]
            _write(out / "mesh.msh", export_msh(mesh, {"SpiralcapConfig": config_lines}))
            if not diag.ok:
                return 2
        elif command in ("solve", "profile"):
            sol = solve_potential(config.capacitor, _load_mesh(config))
            if command == "solve":
                rep = energy_report(sol)
                _write(out / "potential.vtk", io.vtk_text(
                    sol.mesh, {"potential": sol.values, "energy_density": nodal_energy_density(sol)},
                    title=tag, cell_data={"region": sol.mesh.tags}))
                _write(out / "energy.json", io.dumps({"config": eff, "config_hash": io.config_hash(eff),
                                                      "cg_iterations": sol.iterations, **rep.as_dict()}))
                print(f"sensitivity={io.fmt(rep.sensitivity)} C_total={io.fmt(rep.C_total)}")
            else:
                rows = profile_along_y(sol, config.profile_n)
                _write(out / "profile.csv", io.csv_text(["y", "u"], rows, eff))
        elif command == "sweep":
            rows = sweep_omega(config.capacitor, config.sweep_grid, jobs=jobs)
            table = [(r.nu, r.C_total, r.C_in, r.sensitivity, r.error) for r in rows]
            _write(out / "sweep.csv", io.csv_text(
                ["nu_loops_per_radius", "c_total", "c_in", "sensitivity", "error"], table, eff))
            failed = [r for r in rows if not r.ok]
            for r in failed:
                log.warning("sweep point nu=%s failed: %s", r.nu, r.error)
            if len(failed) == len(rows):
                return 3
        elif command == "optimize":
            opt = config.optimize
            rep = optimize_sensitivity(config.capacitor, opt["initial_simplex"], opt["tol_x"],
                                       opt["tol_f"], opt["max_iter"])
            doc = {"config": eff, "config_hash": io.config_hash(eff), **rep.as_dict()}
            _write(out / "optimize.json", io.dumps(doc))
            print(f"nu*={io.fmt(rep.nu_star)} d*={io.fmt(rep.d_star_cross_section)} "
                  f"sensitivity*={io.fmt(rep.sensitivity_star)}")
        else:
            raise ConfigError(f"unknown command '{command}'")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="spiralcap", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file (defaults when omitted)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = Path(args.config).read_text() if args.config else None
        config = parse_config(text, args.overrides)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return run(args.command, config, args.out, max(1, args.jobs))


if __name__ == "__main__":
    sys.exit(main())
