"""Tagged triangulations of the sensor cross-section.

The native generator builds a structured polar mesh: concentric rings whose
radii include every material interface exactly, a uniform angular grid, and a
central fan around the origin.  Quad cells between rings are split along a
diagonal whose direction flips between quadrants, which makes the connectivity
(not only the node set) mirror-symmetric in both axes.

Region tags follow the MSH physical surfaces of the reference geometry:
1 outside the cylinder, 2 inside, 3 the wall.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MeshError, MshParseError

OUT, IN, WALL = 1, 2, 3
REGION_TAGS = (OUT, IN, WALL)
REGION_NAMES = {OUT: "out", IN: "in", WALL: "wall"}


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Immutable triangle mesh.

    nodes: (N, 2) float coordinates; triangles: (M, 3) int node ids, CCW;
    tags: (M,) region tags; boundary_edges: (B, 2) node ids of the edges owned
    by exactly one triangle.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    tags: np.ndarray
    boundary_edges: np.ndarray

    def __post_init__(self):
        for name, dtype in (("nodes", float), ("triangles", np.int64),
                            ("tags", np.int64), ("boundary_edges", np.int64)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def signed_areas(self):
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))

    def total_area(self):
        return float(self.signed_areas().sum())


@dataclass(frozen=True)
class MeshGeometry:
    """Sizes of the reference geometry plus target radial spacings.

    The densities are the characteristic lengths at the centre, on the
    cylinder surface, at the outer circle and at the two rings just inside and
    outside the cylinder; spacing is graded geometrically between them.
    """

    center_size: float = 0.2
    cyl_size: float = 1.0
    wall_size: float = 0.1
    d_size: float = 0.1
    boundary_size: float = 5.0
    sectors: int = 720
    center_density: float = 0.1
    cyl_density: float = 0.01
    out_density: float = 0.25
    near_cyl_density: float = 0.02

    def validate(self):
        if not 0 < self.wall_size < self.cyl_size:
            raise ConfigError(f"need 0 < wall_size < cyl_size, got wall_size={self.wall_size}")
        if not 0 < self.center_size < self.cyl_size - self.wall_size:
            raise ConfigError("need 0 < center_size < cyl_size - wall_size")
        if not self.d_size > 0 or not self.cyl_size + self.d_size < self.boundary_size:
            raise ConfigError("need cyl_size + d_size < boundary_size")
        if int(self.sectors) != self.sectors or self.sectors < 16 or self.sectors % 4:
            raise ConfigError(f"sectors must be an integer >= 16 divisible by 4, got {self.sectors}")
        for name in ("center_density", "cyl_density", "out_density", "near_cyl_density"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    def refined(self, factor=2):
        """Same geometry with `factor` times the sectors and 1/factor the spacings."""
        return MeshGeometry(
            self.center_size, self.cyl_size, self.wall_size, self.d_size,
            self.boundary_size, int(self.sectors * factor),
            self.center_density / factor, self.cyl_density / factor,
            self.out_density / factor, self.near_cyl_density / factor)


@dataclass(frozen=True)
class BoundaryMarking:
    top_nodes: np.ndarray
    bottom_nodes: np.ndarray
    outer_edges: np.ndarray

    def __post_init__(self):
        for name in ("top_nodes", "bottom_nodes", "outer_edges"):
            arr = np.array(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def graded_points(a, b, h_a, h_b):
    """Points a < p_1 < ... < p_m = b whose spacing grades geometrically from h_a to h_b."""
    length = b - a
    if math.isclose(h_a, h_b):
        m = max(1, math.ceil(length / h_a - 1e-9))
        return a + length * np.arange(1, m + 1) / m
    # number of cells from integrating ds / h(s) with h linear in s
    m = max(1, math.ceil(length / (h_b - h_a) * math.log(h_b / h_a) - 1e-9))
    q = np.arange(1, m + 1) / m
    h = h_a * (h_b / h_a) ** q
    pts = a + length * (h - h_a) / (h_b - h_a)
    pts[-1] = b
    return pts


def ring_radii(geom):
    g = geom
    r_wall_in = g.cyl_size - g.wall_size
    r_near = g.cyl_size + g.d_size
    bands = [
        (0.0, g.center_size, g.center_density, g.center_density),
        (g.center_size, r_wall_in, g.center_density, g.near_cyl_density),
        (r_wall_in, g.cyl_size, g.near_cyl_density, g.cyl_density),
        (g.cyl_size, r_near, g.cyl_density, g.near_cyl_density),
        (r_near, g.boundary_size, g.near_cyl_density, g.out_density),
    ]
    radii = np.concatenate([graded_points(*band) for band in bands])
    # interface radii are set exactly, they are the band end points
    for exact in (g.center_size, r_wall_in, g.cyl_size, r_near, g.boundary_size):
        radii[np.argmin(np.abs(radii - exact))] = exact
    return radii


def polar_mesh(radii, sectors, tag_of_radius, center=True):
    """Structured polar triangulation on the given increasing ring radii.

    With ``center`` the origin is a node and the first ring is fanned around
    it; otherwise the first ring is an inner boundary (annulus).
    ``tag_of_radius(r_mid)`` assigns a region to the cells between two rings.
    """
    radii = np.asarray(radii, dtype=float)
    n_rings = len(radii)
    theta = 2.0 * np.pi * np.arange(sectors) / sectors
    ct, st = np.cos(theta), np.sin(theta)
    # snap the quadrant angles so the mirror images coincide bit-for-bit
    q = sectors // 4
    ct[q], st[q] = 0.0, 1.0
    ct[2 * q], st[2 * q] = -1.0, 0.0
    ct[3 * q], st[3 * q] = 0.0, -1.0
    for k in range(1, q):
        ct[sectors // 2 - k] = -ct[k]
        st[sectors // 2 - k] = st[k]
        ct[sectors // 2 + k] = -ct[k]
        st[sectors // 2 + k] = -st[k]
        ct[sectors - k] = ct[k]
        st[sectors - k] = -st[k]

    offset = 1 if center else 0
    ring_nodes = np.stack([np.outer(radii, ct), np.outer(radii, st)], axis=-1).reshape(-1, 2)
    nodes = np.vstack([[[0.0, 0.0]], ring_nodes]) if center else ring_nodes

    def nid(i, k):
        return offset + i * sectors + (k % sectors)

    k = np.arange(sectors)
    kn = (k + 1) % sectors
    tris, tags = [], []
    if center:
        fan = np.stack([np.zeros(sectors, dtype=np.int64), nid(0, k), nid(0, kn)], axis=1)
        tris.append(fan)
        tags.append(np.full(sectors, tag_of_radius(0.5 * radii[0])))
    # diagonal direction flips between quadrants: A in Q1/Q3, B in Q2/Q4
    diag_a = ((k // q) % 2) == 0
    for i in range(n_rings - 1):
        a, b = nid(i, k), nid(i, kn)
        c, d = nid(i + 1, kn), nid(i + 1, k)
        t1 = np.where(diag_a[:, None], np.stack([a, b, c], 1), np.stack([a, b, d], 1))
        t2 = np.where(diag_a[:, None], np.stack([a, c, d], 1), np.stack([b, c, d], 1))
        tag = tag_of_radius(0.5 * (radii[i] + radii[i + 1]))
        tris += [t1, t2]
        tags.append(np.full(2 * sectors, tag))
    triangles = np.vstack(tris)
    tags = np.concatenate(tags)
    _orient_ccw(nodes, triangles)
    return Mesh2D(nodes, triangles, tags, find_boundary_edges(triangles))


def _orient_ccw(nodes, tris):
    p = nodes[tris]
    area = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]


def find_boundary_edges(triangles):
    """Edges used by exactly one triangle, oriented as in that triangle."""
    tri = np.asarray(triangles)
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    once = counts[inverse.ravel()] == 1
    return edges[once]


def generate_disk_mesh(geom=MeshGeometry()):
    """Graded structured mesh of the disk r <= boundary_size with region tags."""
    geom.validate()
    radii = ring_radii(geom)
    r_wall_in = geom.cyl_size - geom.wall_size

    def tag(r):
        if r < r_wall_in:
            return IN
        if r <= geom.cyl_size:
            return WALL
        return OUT

    return polar_mesh(radii, geom.sectors, tag, center=True)


def generate_annulus_mesh(r_inner, r_outer, n_radial, sectors, tag=OUT):
    """Uniform structured annulus, used for convergence studies."""
    if not 0 < r_inner < r_outer:
        raise ConfigError("need 0 < r_inner < r_outer")
    if sectors < 16 or sectors % 4:
        raise ConfigError("sectors must be >= 16 and divisible by 4")
    radii = np.linspace(r_inner, r_outer, n_radial + 1)
    return polar_mesh(radii, sectors, lambda r: tag, center=False)


def plate_angle(r, d, omega, fixed_cross_section=False):
    """Angle subtended in cross-section by a stripe of width d wound at frequency omega."""
    if fixed_cross_section:
        return d / r
    return d / r * math.sqrt(1.0 + (omega * r) ** 2)


def plate_half_width(r, d, omega, fixed_cross_section=False):
    """Largest |x| covered by a plate centred on the y axis: r*sin(alpha/2)."""
    if not r > 0 or not d > 0:
        raise ConfigError(f"plate needs r > 0 and d > 0, got r={r}, d={d}")
    alpha = plate_angle(r, d, omega, fixed_cross_section)
    if alpha > math.pi * (1 + 1e-12):
        raise ConfigError(f"plate angle {alpha:.6g} exceeds pi: plates overlap")
    return r * math.sin(min(alpha, math.pi) / 2.0)


def mark_boundaries(mesh, r, d, omega, fixed_cross_section=False, tol=1e-3):
    """Dirichlet plate node sets on the circle of radius r, and the Robin edges."""
    max_x = plate_half_width(r, d, omega, fixed_cross_section)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    on_circle = np.abs(np.hypot(x, y) - r) <= tol
    # tiny slack so the alpha = pi limit keeps the nodes at |x| = r
    in_band = np.abs(x) <= max_x + 1e-12 * r
    top = np.flatnonzero(on_circle & (y > 0) & in_band)
    bottom = np.flatnonzero(on_circle & (y < 0) & in_band)
    if len(top) == 0 or len(bottom) == 0:
        raise ConfigError(f"no mesh nodes on the plates for d={d}: mesh too coarse")
    return BoundaryMarking(top, bottom, mesh.boundary_edges)


@dataclass
class MeshDiagnostics:
    orientation: list = field(default_factory=list)
    duplicate_nodes: list = field(default_factory=list)
    bad_tags: list = field(default_factory=list)
    non_manifold_edges: list = field(default_factory=list)
    dangling: list = field(default_factory=list)

    @property
    def ok(self):
        return not (self.orientation or self.duplicate_nodes or self.bad_tags
                    or self.non_manifold_edges or self.dangling)

    def summary(self):
        parts = [f"{name}={len(getattr(self, name))}" for name in
                 ("orientation", "duplicate_nodes", "bad_tags", "non_manifold_edges", "dangling")]
        return ("pass" if self.ok else "fail") + " (" + ", ".join(parts) + ")"


def validate_mesh(mesh, dup_tol=1e-12):
    diag = MeshDiagnostics()
    tri = mesh.triangles
    if len(tri) and (tri.min() < 0 or tri.max() >= mesh.n_nodes):
        diag.dangling = np.flatnonzero((tri < 0).any(1) | (tri >= mesh.n_nodes).any(1)).tolist()
        return diag
    diag.orientation = np.flatnonzero(mesh.signed_areas() <= 0).tolist()
    diag.bad_tags = np.flatnonzero(~np.isin(mesh.tags, REGION_TAGS)).tolist()
    # duplicates: sort lexicographically on rounded coordinates, compare neighbours
    order = np.lexsort((mesh.nodes[:, 1], mesh.nodes[:, 0]))
    p = mesh.nodes[order]
    close = np.all(np.abs(np.diff(p, axis=0)) <= dup_tol, axis=1)
    diag.duplicate_nodes = [(int(order[i]), int(order[i + 1])) for i in np.flatnonzero(close)]
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    diag.non_manifold_edges = [tuple(e) for e in uniq[counts > 2].tolist()]
    return diag


# --- MSH 2.2 ASCII -----------------------------------------------------------

def export_msh(mesh, extra_sections=None):
    """Serialize to MSH 2.2 ASCII; coordinates use repr so re-import is exact.

    ``extra_sections`` maps a section name to text lines; readers skip them.
    """
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_nodes)]
    out += [f"{i + 1} {float(x)!r} {float(y)!r} 0" for i, (x, y) in enumerate(mesh.nodes)]
    out += ["$EndNodes", "$Elements", str(len(mesh.boundary_edges) + mesh.n_triangles)]
    eid = 0
    for a, b in mesh.boundary_edges:
        eid += 1
        out.append(f"{eid} 1 2 {OUT} 1 {a + 1} {b + 1}")
    for (a, b, c), t in zip(mesh.triangles, mesh.tags):
        eid += 1
        out.append(f"{eid} 2 2 {t} {t} {a + 1} {b + 1} {c + 1}")
    out.append("$EndElements")
    for name, lines in (extra_sections or {}).items():
        out += [f"${name}", *lines, f"$End{name}"]
    return "\n".join(out) + "\n"


def import_msh(text):
    """Parse MSH 2.2 ASCII text into a Mesh2D.

    Triangles (type 2) take their first tag as region.  Line elements (type 1)
    are read but the boundary edge set is recomputed from the triangles, so it
    always matches the edges owned by a single triangle.  Unknown sections
    are skipped.
    """
    lines = text.splitlines()
    pos = 0
    nodes = ids = None
    elements = None
    seen_format = False

    def next_line():
        nonlocal pos
        if pos >= len(lines):
            raise MshParseError("unexpected end of file", pos)
        pos += 1
        return lines[pos - 1].strip()

    def read_count(section):
        ln = next_line()
        try:
            return int(ln)
        except ValueError:
            raise MshParseError(f"bad {section} count {ln!r}", pos) from None

    def expect_end(name):
        ln = next_line()
        if ln != f"$End{name}":
            raise MshParseError(f"expected $End{name}, got {ln!r}", pos)

    while pos < len(lines):
        header = next_line()
        if not header:
            continue
        if not header.startswith("$"):
            raise MshParseError(f"expected a section header, got {header!r}", pos)
        name = header[1:]
        if name == "MeshFormat":
            parts = next_line().split()
            if len(parts) != 3:
                raise MshParseError("malformed $MeshFormat line", pos)
            if parts[0] not in ("2.2", "2.2.0"):
                raise MshParseError(f"unsupported MSH version {parts[0]}", pos)
            if parts[1] != "0":
                raise MshParseError("binary MSH is not supported", pos)
            seen_format = True
            expect_end(name)
        elif name == "Nodes":
            if not seen_format:
                raise MshParseError("$Nodes before $MeshFormat", pos)
            count = read_count("node")
            ids = np.empty(count, dtype=np.int64)
            nodes = np.empty((count, 2))
            for i in range(count):
                parts = next_line().split()
                if len(parts) != 4:
                    raise MshParseError("node line needs 'id x y z'", pos)
                try:
                    ids[i] = int(parts[0])
                    x, y, z = map(float, parts[1:])
                except ValueError:
                    raise MshParseError(f"bad node line {lines[pos - 1]!r}", pos) from None
                if abs(z) > 1e-9:
                    raise MshParseError(f"non-planar node {ids[i]} (z={z})", pos)
                nodes[i] = x, y
            expect_end(name)
        elif name == "Elements":
            if nodes is None:
                raise MshParseError("$Elements before $Nodes", pos)
            count = read_count("element")
            elements = []
            for _ in range(count):
                parts = next_line().split()
                try:
                    vals = [int(v) for v in parts]
                    etype, ntags = vals[1], vals[2]
                    tags, conn = vals[3:3 + ntags], vals[3 + ntags:]
                except (ValueError, IndexError):
                    raise MshParseError(f"bad element line {lines[pos - 1]!r}", pos) from None
                expected = {1: 2, 2: 3}.get(etype)
                if expected is None:
                    continue
                if len(conn) != expected:
                    raise MshParseError(f"element type {etype} needs {expected} nodes", pos)
                elements.append((etype, tags, conn, pos))
            expect_end(name)
        else:
            # skip unknown section
            while next_line() != f"$End{name}":
                pass
    if nodes is None or elements is None:
        raise MshParseError("missing $Nodes or $Elements section", pos)

    index = {int(v): i for i, v in enumerate(ids)}
    if len(index) != len(ids):
        raise MshParseError("duplicate node ids")
    tris, tags = [], []
    for etype, etags, conn, line in elements:
        try:
            idx = [index[c] for c in conn]
        except KeyError as e:
            raise MshParseError(f"element references missing node {e.args[0]}", line) from None
        if etype == 2:
            if not etags:
                raise MshParseError("triangle without a physical tag", line)
            tris.append(idx)
            tags.append(etags[0])
    if not tris:
        raise MshParseError("no triangles in file")
    tris = np.array(tris, dtype=np.int64)
    _orient_ccw(nodes, tris)
    return Mesh2D(nodes, tris, np.array(tags), find_boundary_edges(tris))


def read_msh(path):
    with open(path) as fh:
        return import_msh(fh.read())


def region_tag_counts(mesh):
    return Counter(mesh.tags.tolist())
