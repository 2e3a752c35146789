"""Writers for the CLI artifacts: VTK legacy ASCII, CSV tables, JSON documents.

CSV and VTK numbers are printed with 12 significant digits.  JSON keeps the
shortest round-trip repr, so report identities (parts summing to the total)
survive serialization.  Both are deterministic, so identical runs give
byte-identical files.
"""
import hashlib
import json
import math


def fmt(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(float(x), ".12g")


def _finite(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def dumps(obj):
    """Sorted, indented JSON; non-finite floats become null."""
    return json.dumps(_finite(obj), indent=2, sort_keys=True) + "\n"


def config_hash(config_dict):
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def csv_text(header, rows, config_dict):
    out = [f"# config_hash: {config_hash(config_dict)}",
           "# config: " + json.dumps(config_dict, sort_keys=True, separators=(",", ":")),
           ",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(out) + "\n"


def vtk_text(mesh, point_data, title="spiralcap", cell_data=None):
    """Legacy ASCII UNSTRUCTURED_GRID with triangle cells (VTK type 5)."""
    n, m = mesh.n_nodes, mesh.n_triangles
    out = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {n} double"]
    out += [f"{fmt(x)} {fmt(y)} 0" for x, y in mesh.nodes]
    out.append(f"CELLS {m} {4 * m}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {m}")
    out += ["5"] * m
    if cell_data:
        out.append(f"CELL_DATA {m}")
        for name, values in cell_data.items():
            out += [f"SCALARS {name} int 1", "LOOKUP_TABLE default"]
            out += [str(int(v)) for v in values]
    if point_data:
        out.append(f"POINT_DATA {n}")
        for name, values in point_data.items():
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [fmt(v) for v in values]
    return "\n".join(out) + "\n"
