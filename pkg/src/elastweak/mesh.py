"""Structured triangulations of the unit square and the Cook membrane.

Meshes are immutable after construction.  Boundary edges are stored with
the domain on their left (counterclockwise traversal), a tag naming the
polygon side they belong to, the outward unit normal and the unit tangent,
and the index of the owning triangle.
"""

from dataclasses import dataclass, field

import numpy as np

SQUARE_SIDES = ("bottom", "right", "top", "left")
COOK_SIDES = ("CB", "AB", "DA", "CD")

# Cook membrane corners: clamped side CD at x=0, loaded side AB at x=48.
_COOK_C = (0.0, 0.0)
_COOK_B = (48.0, 44.0)
_COOK_A = (48.0, 60.0)
_COOK_D = (0.0, 44.0)


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray        # (nv, 2)
    triangles: np.ndarray       # (nt, 3), counterclockwise
    edge_vertices: np.ndarray   # (ne, 2) boundary edges, domain on the left
    edge_tag: np.ndarray        # (ne,) index into side_tags
    edge_normal: np.ndarray     # (ne, 2) outward unit normal
    edge_tangent: np.ndarray    # (ne, 2) unit tangent
    edge_owner: np.ndarray      # (ne,) owning triangle index
    side_tags: tuple = field(default=SQUARE_SIDES)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def num_boundary_edges(self):
        return self.edge_vertices.shape[0]

    def tag_index(self, side_tag):
        try:
            return self.side_tags.index(side_tag)
        except ValueError:
            raise KeyError(f"unknown side tag {side_tag!r}; "
                           f"known tags: {self.side_tags}") from None

    def edges_of_side(self, side_tag):
        """Indices of the boundary edges carrying `side_tag`."""
        return np.flatnonzero(self.edge_tag == self.tag_index(side_tag))

    def triangle_corners(self):
        """Vertex coordinates per triangle, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    def triangle_areas(self):
        p = self.triangle_corners()
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def triangle_diameters(self):
        """Longest edge per triangle (the element size h_K)."""
        p = self.triangle_corners()
        e0 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        e1 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        e2 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return np.maximum(e0, np.maximum(e1, e2))

    def triangle_inradii(self):
        p = self.triangle_corners()
        e0 = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        e1 = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
        e2 = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
        return 2.0 * self.triangle_areas() / (e0 + e1 + e2)

    def edge_lengths(self):
        p0 = self.vertices[self.edge_vertices[:, 0]]
        p1 = self.vertices[self.edge_vertices[:, 1]]
        return np.linalg.norm(p1 - p0, axis=1)

    def unique_edges(self):
        """All mesh edges as sorted vertex pairs, lexicographically ordered."""
        t = self.triangles
        pairs = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [0, 2]]])
        pairs = np.sort(pairs, axis=1)
        return np.unique(pairs, axis=0)

    def centroid(self):
        """Area centroid of the meshed domain."""
        areas = self.triangle_areas()
        mids = self.triangle_corners().mean(axis=1)
        return (areas[:, None] * mids).sum(axis=0) / areas.sum()


@dataclass(frozen=True)
class MeshQuality:
    h_max: float
    h_min: float
    shape_regularity: float  # max over triangles of diameter / inradius


def mesh_quality(mesh):
    h = mesh.triangle_diameters()
    rho = mesh.triangle_inradii()
    return MeshQuality(h_max=float(h.max()), h_min=float(h.min()),
                       shape_regularity=float((h / rho).max()))


def _square_connectivity(n):
    """Vertices, triangles and tagged boundary edges of the n x n split square.

    Each grid cell is split along its bottom-left to top-right diagonal; the
    lower triangle owns the cell's bottom and right edges, the upper one the
    top and left edges.
    """
    idx = lambda i, j: j * (n + 1) + i
    xs = np.linspace(0.0, 1.0, n + 1)
    xv, yv = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xv.ravel(), yv.ravel()])

    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    for j in range(n):
        for i in range(n):
            c = j * n + i
            v00, v10 = idx(i, j), idx(i + 1, j)
            v11, v01 = idx(i + 1, j + 1), idx(i, j + 1)
            tris[2 * c] = (v00, v10, v11)
            tris[2 * c + 1] = (v00, v11, v01)

    edges, tags, owners = [], [], []
    for i in range(n):                       # bottom, left to right
        edges.append((idx(i, 0), idx(i + 1, 0)))
        tags.append(0)
        owners.append(2 * i)
    for j in range(n):                       # right, upwards
        edges.append((idx(n, j), idx(n, j + 1)))
        tags.append(1)
        owners.append(2 * (j * n + n - 1))
    for i in range(n - 1, -1, -1):           # top, right to left
        edges.append((idx(i + 1, n), idx(i, n)))
        tags.append(2)
        owners.append(2 * ((n - 1) * n + i) + 1)
    for j in range(n - 1, -1, -1):           # left, downwards
        edges.append((idx(0, j + 1), idx(0, j)))
        tags.append(3)
        owners.append(2 * (j * n) + 1)
    return (vertices, tris, np.asarray(edges, dtype=np.int64),
            np.asarray(tags, dtype=np.int64), np.asarray(owners, dtype=np.int64))


def _finish_mesh(vertices, tris, edges, tags, owners, side_tags):
    p0 = vertices[edges[:, 0]]
    p1 = vertices[edges[:, 1]]
    tau = p1 - p0
    tau /= np.linalg.norm(tau, axis=1)[:, None]
    # Domain on the left of the edge direction: outward normal is tau rotated
    # clockwise by 90 degrees.
    normal = np.column_stack([tau[:, 1], -tau[:, 0]])
    return Mesh(vertices=vertices, triangles=tris, edge_vertices=edges,
                edge_tag=tags, edge_normal=normal, edge_tangent=tau,
                edge_owner=owners, side_tags=tuple(side_tags))


def build_unit_square_mesh(n):
    """Structured triangulation of [0,1]^2 with n subdivisions per side."""
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    return _finish_mesh(*_square_connectivity(n), SQUARE_SIDES)


def cook_map(xi, eta):
    """Bilinear map of the unit square onto the Cook membrane quadrilateral."""
    corners = np.array([_COOK_C, _COOK_B, _COOK_A, _COOK_D])
    w = np.stack([(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta,
                  (1 - xi) * eta], axis=-1)
    return w @ corners


def build_cook_mesh(n):
    """Mapped structured triangulation of the Cook membrane.

    Corners: C=(0,0), B=(48,44), A=(48,60), D=(0,44).  Side tags: CD is the
    clamped side x=0, AB the loaded side x=48, CB the bottom, DA the top.
    """
    if n < 1:
        raise ValueError("subdivision count must be >= 1")
    vertices, tris, edges, tags, owners = _square_connectivity(n)
    mapped = cook_map(vertices[:, 0], vertices[:, 1])
    return _finish_mesh(mapped, tris, edges, tags, owners, COOK_SIDES)


def dump_mesh(mesh, path):
    """Write a mesh as plain text (17 significant digits, round-trip safe)."""
    lines = [f"VERTICES {mesh.num_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"TRIANGLES {mesh.num_triangles}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"BOUNDARY_EDGES {mesh.num_boundary_edges}")
    for k in range(mesh.num_boundary_edges):
        v0, v1 = mesh.edge_vertices[k]
        nx, ny = mesh.edge_normal[k]
        tx, ty = mesh.edge_tangent[k]
        lines.append(f"{v0} {v1} {mesh.side_tags[mesh.edge_tag[k]]} "
                     f"{mesh.edge_owner[k]} "
                     f"{nx:.17g} {ny:.17g} {tx:.17g} {ty:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path):
    """Read a mesh written by dump_mesh."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    pos = 0

    def expect(section):
        nonlocal pos
        name, count = tokens[pos].split()
        if name != section:
            raise ValueError(f"expected section {section}, found {name}")
        pos += 1
        return int(count)

    nv = expect("VERTICES")
    vertices = np.array([[float(v) for v in tokens[pos + i].split()]
                         for i in range(nv)])
    pos += nv
    nt = expect("TRIANGLES")
    tris = np.array([[int(v) for v in tokens[pos + i].split()]
                     for i in range(nt)], dtype=np.int64)
    pos += nt
    ne = expect("BOUNDARY_EDGES")
    edges = np.empty((ne, 2), dtype=np.int64)
    owners = np.empty(ne, dtype=np.int64)
    tag_names = []
    normals = np.empty((ne, 2))
    tangents = np.empty((ne, 2))
    for i in range(ne):
        parts = tokens[pos + i].split()
        edges[i] = (int(parts[0]), int(parts[1]))
        if parts[2] not in tag_names:
            tag_names.append(parts[2])
        owners[i] = int(parts[3])
        normals[i] = (float(parts[4]), float(parts[5]))
        tangents[i] = (float(parts[6]), float(parts[7]))
    tags = np.array([tag_names.index(tokens[pos + i].split()[2])
                     for i in range(ne)], dtype=np.int64)
    return Mesh(vertices=vertices, triangles=tris, edge_vertices=edges,
                edge_tag=tags, edge_normal=normals, edge_tangent=tangents,
                edge_owner=owners, side_tags=tuple(tag_names))
