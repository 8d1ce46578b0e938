"""Continuous Lagrange P1/P2 spaces on triangle meshes.

Degrees of freedom are nodal: vertex values for P1, vertex plus edge-midpoint
values for P2.  Scalar DOFs are numbered vertices first (mesh order), then
edges in lexicographic order of their sorted endpoint indices.  Vector spaces
interleave components per node: scalar DOF d becomes (2d, 2d+1).
"""

import numpy as np

from .quadrature import edge_rule, triangle_rule


def basis_values(order, points):
    """Values and reference gradients of the Lagrange basis.

    points: (np, 2) reference coordinates.  Returns (N, dN) with shapes
    (np, nsb) and (np, nsb, 2).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    if order == 1:
        N = np.stack([1.0 - x - y, x, y], axis=1)
        dN = np.stack([
            np.stack([-one, -one], axis=1),
            np.stack([one, zero], axis=1),
            np.stack([zero, one], axis=1),
        ], axis=1)
        return N, dN
    if order == 2:
        lam0 = 1.0 - x - y
        N = np.stack([
            lam0 * (2.0 * lam0 - 1.0),
            x * (2.0 * x - 1.0),
            y * (2.0 * y - 1.0),
            4.0 * x * lam0,
            4.0 * x * y,
            4.0 * y * lam0,
        ], axis=1)
        g0 = -3.0 + 4.0 * x + 4.0 * y
        dN = np.stack([
            np.stack([g0, g0], axis=1),
            np.stack([4.0 * x - 1.0, zero], axis=1),
            np.stack([zero, 4.0 * y - 1.0], axis=1),
            np.stack([4.0 - 8.0 * x - 4.0 * y, -4.0 * x], axis=1),
            np.stack([4.0 * y, 4.0 * x], axis=1),
            np.stack([-4.0 * y, 4.0 - 4.0 * x - 8.0 * y], axis=1),
        ], axis=1)
        return N, dN
    raise ValueError(f"unsupported polynomial order {order}")


def basis_hessians(order):
    """Constant reference Hessians of the basis, shape (nsb, 2, 2)."""
    if order == 1:
        return np.zeros((3, 2, 2))
    if order == 2:
        return np.array([
            [[4.0, 4.0], [4.0, 4.0]],
            [[4.0, 0.0], [0.0, 0.0]],
            [[0.0, 0.0], [0.0, 4.0]],
            [[-8.0, -4.0], [-4.0, 0.0]],
            [[0.0, 4.0], [4.0, 0.0]],
            [[0.0, -4.0], [-4.0, -8.0]],
        ])
    raise ValueError(f"unsupported polynomial order {order}")


# Local edges of the triangle in the order matching the P2 bubble functions.
_LOCAL_EDGES = ((0, 1), (1, 2), (0, 2))


class FESpace:
    """A P1 or P2 Lagrange space (scalar or 2-vector) on a Mesh."""

    def __init__(self, mesh, order, components=1):
        if order not in (1, 2):
            raise ValueError(f"unsupported polynomial order {order}")
        if components not in (1, 2):
            raise ValueError(f"components must be 1 or 2, got {components}")
        self.mesh = mesh
        self.order = order
        self.components = components
        self.scalar_basis_size = (order + 1) * (order + 2) // 2

        nv = mesh.num_vertices
        tris = mesh.triangles
        if order == 1:
            scalar_cell = tris.copy()
            self.scalar_dof_count = nv
            self.dof_points = mesh.vertices.copy()
            self._edge_index = None
        else:
            edges = mesh.unique_edges()
            self._edge_index = {(int(a), int(b)): k
                                for k, (a, b) in enumerate(edges)}
            scalar_cell = np.empty((mesh.num_triangles, 6), dtype=np.int64)
            scalar_cell[:, :3] = tris
            for loc, (a, b) in enumerate(_LOCAL_EDGES):
                for c in range(mesh.num_triangles):
                    key = tuple(sorted((int(tris[c, a]), int(tris[c, b]))))
                    scalar_cell[c, 3 + loc] = nv + self._edge_index[key]
            self.scalar_dof_count = nv + len(edges)
            mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
            self.dof_points = np.vstack([mesh.vertices, mids])
        self._scalar_cell_dofs = scalar_cell

        if components == 1:
            self.cell_dofs = scalar_cell
        else:
            nloc = scalar_cell.shape[1]
            cd = np.empty((mesh.num_triangles, 2 * nloc), dtype=np.int64)
            cd[:, 0::2] = 2 * scalar_cell
            cd[:, 1::2] = 2 * scalar_cell + 1
            self.cell_dofs = cd
        self.dof_count = components * self.scalar_dof_count

        self._geometry = None
        self._interior_cache = {}
        self._boundary_cache = {}

    # -- geometry -----------------------------------------------------------

    def geometry(self):
        """Per-triangle affine map data (J, Jinv, detJ), cached."""
        if self._geometry is None:
            p = self.mesh.triangle_corners()
            J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
            detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            Jinv = np.empty_like(J)
            Jinv[:, 0, 0] = J[:, 1, 1] / detJ
            Jinv[:, 0, 1] = -J[:, 0, 1] / detJ
            Jinv[:, 1, 0] = -J[:, 1, 0] / detJ
            Jinv[:, 1, 1] = J[:, 0, 0] / detJ
            self._geometry = (J, Jinv, detJ)
        return self._geometry

    def scalar_side_dofs(self, side_tag):
        """Scalar DOFs supported on the boundary side `side_tag`."""
        mesh = self.mesh
        edge_ids = mesh.edges_of_side(side_tag)
        dofs = set()
        for e in edge_ids:
            v0, v1 = (int(v) for v in mesh.edge_vertices[e])
            dofs.update((v0, v1))
            if self.order == 2:
                key = tuple(sorted((v0, v1)))
                dofs.add(mesh.num_vertices + self._edge_index[key])
        return np.array(sorted(dofs), dtype=np.int64)

    def boundary_scalar_dofs(self):
        dofs = set()
        for tag in self.mesh.side_tags:
            dofs.update(self.scalar_side_dofs(tag).tolist())
        return np.array(sorted(dofs), dtype=np.int64)

    def expand_dofs(self, scalar_dofs):
        """Vector DOF indices for the given scalar DOFs (all components)."""
        scalar_dofs = np.asarray(scalar_dofs, dtype=np.int64)
        if self.components == 1:
            return scalar_dofs
        return np.sort(np.concatenate([2 * scalar_dofs, 2 * scalar_dofs + 1]))

    @property
    def boundary_dofs(self):
        return self.expand_dofs(self.boundary_scalar_dofs())

    # -- tabulation ---------------------------------------------------------

    def interior_tables(self, degree, symmetrize=True):
        key = (degree, symmetrize)
        if key not in self._interior_cache:
            rule = triangle_rule(degree, symmetrize)
            N, dN = basis_values(self.order, rule.points)
            self._interior_cache[key] = InteriorTables(self, rule, N, dN)
        return self._interior_cache[key]

    def boundary_tables(self, degree, side_tags=None):
        tags = (tuple(self.mesh.side_tags) if side_tags is None
                else tuple(side_tags))
        key = (degree, tags)
        if key not in self._boundary_cache:
            self._boundary_cache[key] = BoundaryTables(self, degree, tags)
        return self._boundary_cache[key]


class InteriorTables:
    """Shared reference tables plus per-cell geometry for volume integrals."""

    def __init__(self, space, rule, N, dN):
        self.space = space
        self.rule = rule
        self.N = N            # (nq, nsb)
        self.dN_ref = dN      # (nq, nsb, 2)
        _, self.Jinv, detJ = space.geometry()
        self.wdet = np.abs(detJ)[:, None] * rule.weights[None, :]  # (nt, nq)

    def physical_points(self, cells=slice(None)):
        mesh = self.space.mesh
        p0 = mesh.vertices[mesh.triangles[cells, 0]]
        J = self.space.geometry()[0][cells]
        return p0[:, None, :] + np.einsum("cab,qb->cqa", J, self.rule.points)

    def physical_gradients(self, cells=slice(None)):
        """Basis gradients per cell and point, shape (m, nq, nsb, 2)."""
        return np.einsum("qib,cba->cqia", self.dN_ref, self.Jinv[cells])

    def cell_chunks(self, chunk=4096):
        nt = self.space.mesh.num_triangles
        for start in range(0, nt, chunk):
            yield slice(start, min(start + chunk, nt))


class BoundaryTables:
    """Basis traces and fluxes on selected boundary edges."""

    def __init__(self, space, degree, side_tags):
        mesh = space.mesh
        rule = edge_rule(degree)
        ids = np.concatenate([mesh.edges_of_side(t) for t in side_tags]) \
            if side_tags else np.array([], dtype=np.int64)
        ids = np.sort(ids)
        self.space = space
        self.rule = rule
        self.edge_ids = ids
        self.owner = mesh.edge_owner[ids]
        self.normal = mesh.edge_normal[ids]
        self.length = mesh.edge_lengths()[ids]
        self.h_owner = mesh.triangle_diameters()[self.owner]
        self.cell_dofs = space.cell_dofs[self.owner]

        s = rule.points[:, 0]
        p0 = mesh.vertices[mesh.edge_vertices[ids, 0]]
        p1 = mesh.vertices[mesh.edge_vertices[ids, 1]]
        # (ne, nq, 2) physical quadrature points along each edge
        self.x = p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]
        self.w = self.length[:, None] * rule.weights[None, :]   # (ne, nq)

        _, Jinv, _ = space.geometry()
        a = mesh.vertices[mesh.triangles[self.owner, 0]]
        # Reference coordinates of the edge points inside the owner triangle.
        ref = np.einsum("eab,eqb->eqa", Jinv[self.owner],
                        self.x - a[:, None, :])
        flat = ref.reshape(-1, 2)
        N, dN = basis_values(space.order, flat)
        nq = rule.num_points
        nsb = space.scalar_basis_size
        self.N = N.reshape(len(ids), nq, nsb)
        dN = dN.reshape(len(ids), nq, nsb, 2)
        self.dN = np.einsum("eqib,eba->eqia", dN, Jinv[self.owner])


# -- fields ------------------------------------------------------------------


class AnalyticField:
    """A closed-form scalar or vector field with optional derivatives.

    value(x, y) is vectorized: scalar fields return an array shaped like x,
    vector fields return shape x.shape + (2,).  gradient(x, y), if given,
    returns x.shape + (2,) for scalars and x.shape + (2, 2) for vectors with
    entry [i, j] = d u_i / d x_j.
    """

    def __init__(self, value, gradient=None, components=1):
        self.value = value
        self.gradient = gradient
        self.components = components

    @classmethod
    def scalar(cls, value, gradient=None):
        return cls(value, gradient, components=1)

    @classmethod
    def vector(cls, value, gradient=None):
        return cls(value, gradient, components=2)

    @classmethod
    def constant_vector(cls, vx, vy):
        def val(x, y):
            z = np.zeros(np.shape(x) + (2,))
            z[..., 0] = vx
            z[..., 1] = vy
            return z

        def grad(x, y):
            return np.zeros(np.shape(x) + (2, 2))

        return cls(val, grad, components=2)

    def __call__(self, x, y):
        return self.value(x, y)


class DiscreteField:
    """Coefficient vector over an FESpace."""

    def __init__(self, space, coefficients):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (space.dof_count,):
            raise ValueError("coefficient length does not match the space")
        self.space = space
        self.coefficients = coefficients

    def cell_coefficients(self, cells=slice(None)):
        """Coefficients gathered per cell: (m, nsb) or (m, nsb, 2)."""
        gathered = self.coefficients[self.space.cell_dofs[cells]]
        if self.space.components == 2:
            m, nloc = gathered.shape
            gathered = gathered.reshape(m, nloc // 2, 2)
        return gathered

    def eval_in_cells(self, cells, points):
        """Values at physical points known to lie in the given cells."""
        cells = np.asarray(cells, dtype=np.int64)
        points = np.asarray(points, dtype=float)
        mesh = self.space.mesh
        _, Jinv, _ = self.space.geometry()
        a = mesh.vertices[mesh.triangles[cells, 0]]
        ref = np.einsum("pab,pb->pa", Jinv[cells], points - a)
        N, _ = basis_values(self.space.order, ref)
        coef = self.cell_coefficients(cells)
        if self.space.components == 1:
            return np.einsum("pi,pi->p", N, coef)
        return np.einsum("pi,pic->pc", N, coef)


def build_space(mesh, order, components=1):
    return FESpace(mesh, order, components)


def interpolate(space, analytic):
    """Nodal interpolation of an analytic field onto the space."""
    if analytic.components != space.components:
        raise ValueError("component mismatch between field and space")
    x, y = space.dof_points[:, 0], space.dof_points[:, 1]
    vals = analytic.value(x, y)
    if space.components == 1:
        return DiscreteField(space, np.asarray(vals, dtype=float))
    coeffs = np.empty(space.dof_count)
    coeffs[0::2] = vals[..., 0]
    coeffs[1::2] = vals[..., 1]
    return DiscreteField(space, coeffs)


def integrate_field(mesh_or_space, integrand, quadrature_degree=10):
    """Integral over the mesh of a pointwise function (x, y) -> scalar."""
    space = mesh_or_space
    if not isinstance(space, FESpace):
        space = FESpace(mesh_or_space, 1, 1)
    tab = space.interior_tables(quadrature_degree, symmetrize=False)
    fn = integrand.value if isinstance(integrand, AnalyticField) else integrand
    total = 0.0
    for cells in tab.cell_chunks():
        x = tab.physical_points(cells)
        total += float(np.sum(tab.wdet[cells] * fn(x[..., 0], x[..., 1])))
    return total
