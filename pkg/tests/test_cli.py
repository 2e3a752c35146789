import json
import subprocess
import sys

import pytest

from spiralcap.cli import DEFAULTS, main, parse_config, run
from spiralcap.errors import ConfigError
from spiralcap.mesh import import_msh, validate_mesh

# quarter-resolution mesh keeps CLI round trips fast
FAST = ["--set", "mesh.sectors=240", "--set", "mesh.cyl_density=0.03",
        "--set", "mesh.near_cyl_density=0.06", "--set", "mesh.out_density=0.5",
        "--set", "mesh.center_density=0.2"]


def data_rows(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


@pytest.mark.parametrize("text", [None, "", "{}"])
def test_defaults(text):
    cfg = parse_config(text).capacitor
    assert (cfg.r_cyl, cfg.R, cfg.wall) == (1.0, 5.0, 0.1)
    assert (cfg.eps_in, cfg.eps_wall, cfg.eps_out) == (1.0, 10.0, 1.0)
    assert cfg.energy_convention == "equation"


def test_negative_omega_rejected():
    with pytest.raises(ConfigError, match="omega_loops"):
        parse_config('{"omega_loops": -1}')
    assert main(["solve", "--set", "omega_loops=-1"]) == 1


@pytest.mark.parametrize("doc, key", [
    ('{"wal": 0.1}', "wal"), ('{"mesh": {"sector": 12}}', "mesh.sector"),
    ('{"d": "wide"}', "d"), ('{"R": 0}', "R"), ('{"mesh": {"sectors": 30}}', "sectors"),
    ('{"plate_voltages": [1, 1]}', "plate_voltages"), ('[1, 2]', "object"),
])
def test_schema_errors_name_the_key(doc, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert key in str(exc.value)


def test_override_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"wall": 0.1, "mesh": {"sectors": 360}}')
    run_cfg = parse_config(cfg.read_text(), ["wall=0.025", "mesh.sectors=480"])
    assert run_cfg.capacitor.wall == 0.025
    assert run_cfg.capacitor.mesh.sectors == 480
    assert run_cfg.effective["wall"] == 0.025


def test_missing_config_file_is_error(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 1


def test_solve_outputs(tmp_path):
    assert main(["solve", "--out", str(tmp_path), *FAST]) == 0
    doc = json.loads((tmp_path / "energy.json").read_text())
    assert 0 < doc["sensitivity"] < 1
    assert abs(doc["E_in"] + doc["E_wall"] + doc["E_out"] - doc["E_total"]) <= 1e-12 * doc["E_total"]
    assert doc["config"]["mesh"]["sectors"] == 240
    vtk = (tmp_path / "potential.vtk").read_text().splitlines()
    assert vtk[0] == "# vtk DataFile Version 3.0"
    assert doc["config_hash"] in vtk[1]
    assert "SCALARS potential double 1" in vtk and "CELL_TYPES" in " ".join(vtk)


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--out", str(out), *FAST]) == 0
        assert main(["sweep", "--out", str(out), "--set", "sweep.grid=[0.5]", *FAST]) == 0
    for name in ("energy.json", "potential.vtk", "sweep.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_one_point(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--set", "sweep.grid=[1.0]", *FAST]) == 0
    text = (tmp_path / "sweep.csv").read_text()
    assert text.startswith("# config_hash: ")
    rows = data_rows(tmp_path / "sweep.csv")
    assert rows[0] == "nu_loops_per_radius,c_total,c_in,sensitivity,error"
    assert len(rows) == 2 and rows[1].startswith("1,")
    embedded = json.loads(text.splitlines()[1][len("# config: "):])
    assert embedded["sweep"]["grid"] == [1.0]


def test_sweep_partial_failure_still_ok(tmp_path):
    assert main(["sweep", "--out", str(tmp_path), "--set", "sweep.grid=[0.5, 3.0]", *FAST]) == 0
    rows = data_rows(tmp_path / "sweep.csv")[1:]
    assert rows[0].endswith(",") and "ConfigError" in rows[1]
    assert main(["sweep", "--out", str(tmp_path), "--set", "sweep.grid=[3.0]", *FAST]) == 3


def test_profile(tmp_path):
    assert main(["profile", "--out", str(tmp_path), "--set", "profile.n=11", *FAST]) == 0
    rows = data_rows(tmp_path / "profile.csv")
    assert rows[0] == "y,u" and len(rows) == 12
    middle = rows[6].split(",")
    assert float(middle[0]) == 0.0 and abs(float(middle[1])) < 1e-6


def test_mesh_command_and_reuse(tmp_path):
    assert main(["mesh", "--out", str(tmp_path), *FAST]) == 0
    text = (tmp_path / "mesh.msh").read_text()
    assert "$SpiralcapConfig" in text
    mesh = import_msh(text)
    assert validate_mesh(mesh).ok
    out = tmp_path / "solve"
    assert main(["solve", "--out", str(out), "--set", f'mesh_file="{tmp_path / "mesh.msh"}"', *FAST]) == 0


def test_bad_mesh_file_exit_2(tmp_path):
    bad = tmp_path / "bad.msh"
    bad.write_text("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
    assert main(["solve", "--out", str(tmp_path), "--set", f'mesh_file="{bad}"']) == 2


def test_non_convergence_exit_3(tmp_path):
    assert main(["solve", "--out", str(tmp_path), "--set", "solver.max_iter=3", *FAST]) == 3


def test_defaults_document_is_complete():
    assert set(DEFAULTS["mesh"]) == {"center_size", "d_size", "sectors", "center_density",
                                     "cyl_density", "out_density", "near_cyl_density"}


def test_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spiralcap", "solve", "--out", str(tmp_path), *FAST],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("sensitivity=")
