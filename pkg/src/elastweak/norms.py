"""Mesh-dependent norms, error measures and numerical stability diagnostics.

The triple norms weight boundary traces by the owning element's diameter;
the boundary seminorm projects a field onto its componentwise mean over each
whole polygon side.  Stability diagnostics (inf-sup constant, discrete Korn
constant, rigid-motion Gram) densify and are limited to DENSE_CAP unknowns.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .compressible import (MaterialParams, assemble_boundary_flux,
                           assemble_elasticity_stiffness, assemble_flux_load)
from .solvers import (DENSE_CAP, SizeCapError,
                      smallest_generalized_singular_value)
from .spaces import AnalyticField, DiscreteField, FESpace

ERROR_DEGREE = 16


@dataclass(frozen=True)
class ErrorReport:
    l2_error: float
    h1_semi_error: float
    triple_norm_error: float
    h_max: float
    pressure_l2_error: float = None


@dataclass(frozen=True)
class StabilityReport:
    beta_h: float
    korn_const_h: float
    h_max: float
    parameters: dict


# -- pointwise field evaluation helpers ---------------------------------------


def _discrete_tables(field, tab, cells):
    coef = field.cell_coefficients(cells)
    if field.space.components == 1:
        vals = np.einsum("qi,ci->cq", tab.N, coef)
        grads = np.einsum("cqia,ci->cqa", tab.physical_gradients(cells), coef)
    else:
        vals = np.einsum("qi,cie->cqe", tab.N, coef)
        grads = np.einsum("cqia,cie->cqea", tab.physical_gradients(cells), coef)
    return vals, grads


def _boundary_values(field, bt):
    if isinstance(field, DiscreteField):
        coef = field.coefficients[bt.cell_dofs]
        if field.space.components == 2:
            coef = coef.reshape(coef.shape[0], -1, 2)
            return np.einsum("eqi,eic->eqc", bt.N, coef)
        return np.einsum("eqi,ei->eq", bt.N, coef)
    return field.value(bt.x[..., 0], bt.x[..., 1])


def _interior_eval(field, tab, cells, need_grads=True):
    if isinstance(field, DiscreteField):
        return _discrete_tables(field, tab, cells)
    x = tab.physical_points(cells)
    vals = field.value(x[..., 0], x[..., 1])
    grads = None
    if need_grads:
        if field.gradient is None:
            raise ValueError("analytic field lacks a derivative contract")
        grads = field.gradient(x[..., 0], x[..., 1])
    return vals, grads


# -- norms ---------------------------------------------------------------------


def _tabulation_space(field, mesh):
    """The field's own space, or a throwaway P1 space for analytic input."""
    if isinstance(field, DiscreteField):
        return field.space
    if mesh is None:
        raise ValueError("analytic fields need an explicit mesh")
    return FESpace(mesh, 1, 1)


def _triple_norm_parts(field, degree=ERROR_DEGREE, mesh=None):
    """Squared contributions (grad, div, trace, normal trace) of a field."""
    space = _tabulation_space(field, mesh)
    tab = space.interior_tables(degree, symmetrize=False)
    grad_sq = div_sq = 0.0
    for cells in tab.cell_chunks():
        _, g = _interior_eval(field, tab, cells)
        w = tab.wdet[cells]
        grad_sq += float(np.einsum("cq,cqea->", w, g ** 2))
        div = g[..., 0, 0] + g[..., 1, 1]
        div_sq += float(np.sum(w * div ** 2))
    bt = space.boundary_tables(degree)
    vals = _boundary_values(field, bt)
    winv = bt.w / bt.h_owner[:, None]
    trace_sq = float(np.einsum("eq,eqa->", winv, vals ** 2))
    vn = np.einsum("eqa,ea->eq", vals, bt.normal)
    normal_sq = float(np.sum(winv * vn ** 2))
    return grad_sq, div_sq, trace_sq, normal_sq


def triple_norm_compressible(field, params, degree=ERROR_DEGREE, mesh=None):
    """mu(|grad w|^2 + |h^-1/2 w|^2_bnd) + lam(|div w|^2 + |h^-1/2 w.n|^2_bnd)."""
    g2, d2, t2, n2 = _triple_norm_parts(field, degree, mesh)
    return float(np.sqrt(params.mu * (g2 + t2) + params.lam * (d2 + n2)))


def triple_norm_incompressible(vfield, pfield, params, degree=ERROR_DEGREE,
                               mesh=None):
    """mu(|grad w|^2 + |h^-1/2 w|^2_bnd) + (1/mu)|h grad rho|^2."""
    g2, _, t2, _ = _triple_norm_parts(vfield, degree, mesh)
    pspace = _tabulation_space(pfield, mesh)
    tab = pspace.interior_tables(degree, symmetrize=False)
    hK = pspace.mesh.triangle_diameters()
    p2 = 0.0
    for cells in tab.cell_chunks():
        _, gp = _interior_eval(pfield, tab, cells)
        w = tab.wdet[cells] * (hK[cells] ** 2)[:, None]
        p2 += float(np.einsum("cq,cqa->", w, gp ** 2))
    return float(np.sqrt(params.mu * (g2 + t2) + p2 / params.mu))


def error_norms(u_h, exact_u, params, p_h=None, exact_p=None,
                degree=ERROR_DEGREE):
    """L2/H1-seminorm/triple-norm errors (and pressure L2 when mixed)."""
    if exact_u.gradient is None:
        raise ValueError("exact field needs a derivative contract")
    space = u_h.space
    mesh = space.mesh
    tab = space.interior_tables(degree, symmetrize=False)
    l2 = h1 = div_sq = 0.0
    for cells in tab.cell_chunks():
        vals, grads = _discrete_tables(u_h, tab, cells)
        x = tab.physical_points(cells)
        ev = vals - exact_u.value(x[..., 0], x[..., 1])
        eg = grads - exact_u.gradient(x[..., 0], x[..., 1])
        w = tab.wdet[cells]
        l2 += float(np.einsum("cq,cqe->", w, ev ** 2))
        h1 += float(np.einsum("cq,cqea->", w, eg ** 2))
        div = eg[..., 0, 0] + eg[..., 1, 1]
        div_sq += float(np.sum(w * div ** 2))
    bt = space.boundary_tables(degree)
    ev_b = _boundary_values(u_h, bt) - exact_u.value(bt.x[..., 0], bt.x[..., 1])
    winv = bt.w / bt.h_owner[:, None]
    trace_sq = float(np.einsum("eq,eqa->", winv, ev_b ** 2))
    vn = np.einsum("eqa,ea->eq", ev_b, bt.normal)
    normal_sq = float(np.sum(winv * vn ** 2))

    p_l2 = None
    if p_h is not None:
        ptab = p_h.space.interior_tables(degree, symmetrize=False)
        hK = mesh.triangle_diameters()
        pl2 = pg2 = 0.0
        for cells in ptab.cell_chunks():
            pv, pg = _discrete_tables(p_h, ptab, cells)
            x = ptab.physical_points(cells)
            epv = pv - exact_p.value(x[..., 0], x[..., 1])
            epg = pg - exact_p.gradient(x[..., 0], x[..., 1])
            w = ptab.wdet[cells]
            pl2 += float(np.sum(w * epv ** 2))
            pg2 += float(np.einsum("cq,cqa->", w * (hK[cells] ** 2)[:, None],
                                   epg ** 2))
        p_l2 = float(np.sqrt(pl2))
        triple = float(np.sqrt(params.mu * (h1 + trace_sq) + pg2 / params.mu))
    else:
        triple = float(np.sqrt(params.mu * (h1 + trace_sq)
                               + params.lam * (div_sq + normal_sq)))
    return ErrorReport(l2_error=float(np.sqrt(l2)),
                       h1_semi_error=float(np.sqrt(h1)),
                       triple_norm_error=triple,
                       h_max=float(mesh.triangle_diameters().max()),
                       pressure_l2_error=p_l2)


# -- boundary seminorm and rigid motions --------------------------------------


def _side_means(mesh, field, degree=8):
    """Componentwise mean of a vector field over each whole polygon side."""
    means = np.zeros((len(mesh.side_tags), 2))
    lengths = np.zeros(len(mesh.side_tags))
    if isinstance(field, DiscreteField):
        bt = field.space.boundary_tables(degree)
        vals = _boundary_values(field, bt)
        tags = mesh.edge_tag[bt.edge_ids]
        w = bt.w
    else:
        space = FESpace(mesh, 1, 1)
        bt = space.boundary_tables(degree)
        vals = field.value(bt.x[..., 0], bt.x[..., 1])
        tags = mesh.edge_tag[bt.edge_ids]
        w = bt.w
    for t in range(len(mesh.side_tags)):
        sel = tags == t
        lengths[t] = w[sel].sum()
        means[t] = np.einsum("eq,eqa->a", w[sel], vals[sel]) / lengths[t]
    return means, lengths


def korn_boundary_seminorm(mesh, field, degree=8):
    """sqrt of sum over sides of |side mean of the field|^2 * side length."""
    means, lengths = _side_means(mesh, field, degree)
    return float(np.sqrt(np.sum(lengths * np.einsum("ia,ia->i", means, means))))


def rigid_motion_basis(mesh):
    """Two translations and the rotation about the domain centroid."""
    cx, cy = mesh.centroid()

    def rot(x, y):
        return np.stack([y - cy, -(x - cx)], axis=-1)

    return (AnalyticField.constant_vector(1.0, 0.0),
            AnalyticField.constant_vector(0.0, 1.0),
            AnalyticField.vector(rot))


def rigid_motion_gram(mesh, degree=8):
    """Gram of the rigid-motion basis in the side-mean inner product.

    Returns (3x3 Gram matrix, smallest eigenvalue); a positive eigenvalue
    certifies that the boundary seminorm is a norm on rigid motions.
    """
    basis = rigid_motion_basis(mesh)
    means = []
    for b in basis:
        m, lengths = _side_means(mesh, b, degree)
        means.append(m)
    G = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            G[a, b] = np.sum(lengths * np.einsum("ia,ia->i",
                                                 means[a], means[b]))
    return G, float(sla.eigvalsh(G)[0])


# -- Gram matrices for diagnostics ---------------------------------------------


def _vector_gram(space, kind):
    """Assemble (grad u, grad v), (u, v) or (div u, div v) for a vector space."""
    degree = 2 * space.order + 2
    tab = space.interior_tables(degree)
    nloc = 2 * space.scalar_basis_size
    eye = np.eye(2)
    blocks, dof_blocks = [], []
    for cells in tab.cell_chunks():
        w = tab.wdet[cells]
        if kind == "mass":
            nn = np.einsum("cq,qi,qj->cij", w, tab.N, tab.N)
            loc = np.einsum("cij,ab->ciajb", nn, eye)
        else:
            g = tab.physical_gradients(cells)
            if kind == "grad":
                gg = np.einsum("cqia,cqja,cq->cij", g, g, w)
                loc = np.einsum("cij,ab->ciajb", gg, eye)
            elif kind == "div":
                loc = np.einsum("cqia,cqjb,cq->ciajb", g, g, w)
            else:
                raise ValueError(kind)
        blocks.append(loc.reshape(-1, nloc, nloc))
        dof_blocks.append(space.cell_dofs[cells])
    local = np.concatenate(blocks)
    dofs = np.concatenate(dof_blocks)
    rows = np.broadcast_to(dofs[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], local.shape).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)),
                         shape=(space.dof_count, space.dof_count)).tocsr()


def _boundary_gram(space, normal_weighted):
    """h_K^-1-weighted boundary mass, full trace or normal component only."""
    degree = 2 * space.order + 2
    bt = space.boundary_tables(degree)
    nloc = 2 * space.scalar_basis_size
    winv = bt.w / bt.h_owner[:, None]
    nn = np.einsum("eq,eqi,eqj->eij", winv, bt.N, bt.N)
    if normal_weighted:
        loc = np.einsum("eij,ec,ed->eicjd", nn, bt.normal, bt.normal)
    else:
        loc = np.einsum("eij,cd->eicjd", nn, np.eye(2))
    loc = loc.reshape(-1, nloc, nloc)
    rows = np.broadcast_to(bt.cell_dofs[:, :, None], loc.shape).ravel()
    cols = np.broadcast_to(bt.cell_dofs[:, None, :], loc.shape).ravel()
    return sp.coo_matrix((loc.ravel(), (rows, cols)),
                         shape=(space.dof_count, space.dof_count)).tocsr()


def _pressure_h2_gram(pspace):
    degree = 2 * pspace.order + 2
    tab = pspace.interior_tables(degree)
    hK = pspace.mesh.triangle_diameters()
    rows, cols, vals = [], [], []
    for cells in tab.cell_chunks():
        gp = tab.physical_gradients(cells)
        w = tab.wdet[cells] * (hK[cells] ** 2)[:, None]
        loc = np.einsum("cq,cqia,cqja->cij", w, gp, gp)
        pd = pspace.cell_dofs[cells]
        rows.append(np.broadcast_to(pd[:, :, None], loc.shape).ravel())
        cols.append(np.broadcast_to(pd[:, None, :], loc.shape).ravel())
        vals.append(loc.ravel())
    return sp.coo_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(pspace.dof_count, pspace.dof_count)).tocsr()


def triple_norm_gram_compressible(space, params):
    return (params.mu * (_vector_gram(space, "grad") + _boundary_gram(space, False))
            + params.lam * (_vector_gram(space, "div") + _boundary_gram(space, True)))


def triple_norm_gram_incompressible(vspace, pspace, params):
    Nv = params.mu * (_vector_gram(vspace, "grad") + _boundary_gram(vspace, False))
    Np = (1.0 / params.mu) * _pressure_h2_gram(pspace)
    return sp.bmat([[Nv, None], [None, Np]], format="csr")


def side_mean_gram(space, degree=8):
    """Dense Gram of the boundary seminorm on a vector space's DOFs."""
    mesh = space.mesh
    bt = space.boundary_tables(degree)
    tags = mesh.edge_tag[bt.edge_ids]
    n = space.dof_count
    S = np.zeros((n, n))
    for t in range(len(mesh.side_tags)):
        sel = np.flatnonzero(tags == t)
        length = bt.w[sel].sum()
        wN = np.einsum("eq,eqi->ei", bt.w[sel], bt.N[sel]) / length
        for comp in range(2):
            row = np.zeros(n)
            dofs = bt.cell_dofs[sel][:, comp::2]
            np.add.at(row, dofs.ravel(), wN.ravel())
            S += length * np.outer(row, row)
    return S


# -- stability diagnostics ------------------------------------------------------


def discrete_korn_constant(mesh, vspace):
    """sqrt of the smallest eigenvalue of |eps(u)|^2 + |u|_bnd^2 vs |u|_H1^2."""
    if vspace.dof_count > DENSE_CAP:
        raise SizeCapError(f"dense diagnostic limited to {DENSE_CAP} unknowns, "
                           f"got {vspace.dof_count}")
    eps_gram = assemble_elasticity_stiffness(vspace, MaterialParams(mu=0.5))
    A = eps_gram.toarray() + side_mean_gram(vspace)
    H = (_vector_gram(vspace, "mass") + _vector_gram(vspace, "grad")).toarray()
    ev = sla.eigh(A, H, eigvals_only=True, subset_by_index=[0, 0])
    return float(np.sqrt(max(ev[0], 0.0)))


def discrete_infsup_constant(system_matrix, norm_gram):
    """Inf-sup constant of a system in the norm induced by norm_gram."""
    return smallest_generalized_singular_value(system_matrix, norm_gram)


def compressible_infsup(mesh, space, params):
    K = assemble_elasticity_stiffness(space, params)
    B = assemble_boundary_flux(space, params)
    A = (K - B + B.T).tocsr()
    N = triple_norm_gram_compressible(space, params)
    return discrete_infsup_constant(A, N)


def _mean_free_pressure_basis(nU, pressure_integrals):
    m = np.concatenate([np.zeros(nU), pressure_integrals])
    return sla.null_space(m[None, :])


def incompressible_infsup(mesh, vspace, pspace, params):
    """Inf-sup constant over velocity x mean-zero pressure."""
    from .incompressible import (assemble_mixed_boundary_flux,
                                 assemble_mixed_volume,
                                 assemble_pressure_stabilization,
                                 pressure_integral_vector)
    n = vspace.dof_count + pspace.dof_count
    if n > DENSE_CAP:
        raise SizeCapError(f"dense diagnostic limited to {DENSE_CAP} unknowns, "
                           f"got {n}")
    A = (assemble_mixed_volume(vspace, pspace, params)
         + assemble_mixed_boundary_flux(vspace, pspace, params)
         + assemble_pressure_stabilization(vspace, pspace, params))
    N = triple_norm_gram_incompressible(vspace, pspace, params)
    Z = _mean_free_pressure_basis(vspace.dof_count,
                                  pressure_integral_vector(pspace))
    Ar = Z.T @ (A @ Z)
    Nr = Z.T @ (N @ Z)
    return discrete_infsup_constant(Ar, Nr)


# -- Galerkin orthogonality -----------------------------------------------------


def _exact_volume_rows(space, params, exact_u, degree):
    """Rows of (2 mu eps(u), eps(v)) + lam (div u, div v) for exact u."""
    tab = space.interior_tables(degree, symmetrize=False)
    vec = np.zeros(space.dof_count)
    for cells in tab.cell_chunks():
        x = tab.physical_points(cells)
        ge = exact_u.gradient(x[..., 0], x[..., 1])
        eps = 0.5 * (ge + np.swapaxes(ge, -1, -2))
        div = ge[..., 0, 0] + ge[..., 1, 1]
        g = tab.physical_gradients(cells)
        w = tab.wdet[cells]
        loc = (2.0 * params.mu * np.einsum("cq,cqea,cqia->cie", w, eps, g)
               + params.lam * np.einsum("cq,cq,cqie->cie", w, div, g))
        np.add.at(vec, space.cell_dofs[cells].ravel(),
                  loc.reshape(loc.shape[0], -1).ravel())
    return vec


def _exact_flux_rows(space, params, exact_u, side_tags, degree):
    """Rows of <2 mu eps(u).n, v> + <lam div u, v.n> for exact u."""
    bt = space.boundary_tables(degree, side_tags)
    vec = np.zeros(space.dof_count)
    if len(bt.edge_ids) == 0:
        return vec
    ge = exact_u.gradient(bt.x[..., 0], bt.x[..., 1])
    eps = 0.5 * (ge + np.swapaxes(ge, -1, -2))
    div = ge[..., 0, 0] + ge[..., 1, 1]
    flux = 2.0 * params.mu * np.einsum("eqca,ea->eqc", eps, bt.normal)
    loc = (np.einsum("eq,eqc,eqi->eic", bt.w, flux, bt.N)
           + params.lam * np.einsum("eq,eqi,ec->eic", bt.w * div, bt.N,
                                    bt.normal))
    np.add.at(vec, bt.cell_dofs.ravel(), loc.reshape(len(bt.edge_ids), -1).ravel())
    return vec


def galerkin_orthogonality_residual(mesh, space, params, exact_u, u_h,
                                    dirichlet_sides=None, degree=ERROR_DEGREE):
    """max_i |A_h(u - u_h, v_i)| scaled by matrix row norms.

    A_h(u, v_i) is evaluated with high-order quadrature from the exact
    derivatives; A_h(u_h, v_i) from the assembled matrix.
    """
    sides = tuple(dirichlet_sides or mesh.side_tags)
    K = assemble_elasticity_stiffness(space, params)
    B = assemble_boundary_flux(space, params, sides)
    A = (K - B + B.T).tocsr()
    exact_rows = (_exact_volume_rows(space, params, exact_u, degree)
                  - _exact_flux_rows(space, params, exact_u, sides, degree)
                  + assemble_flux_load(space, params, exact_u, sides, degree))
    x = u_h.coefficients if isinstance(u_h, DiscreteField) else np.asarray(u_h)
    r = exact_rows - A @ x
    return _scaled_max(r, A, x)


def _scaled_max(residual, matrix, x):
    row_norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
    scale = row_norms[:len(residual)] * max(np.linalg.norm(x), 1.0) + 1e-300
    return float(np.max(np.abs(residual) / scale))


def galerkin_orthogonality_residual_mixed(mesh, vspace, pspace, params,
                                          exact_u, exact_p, f, solution,
                                          dirichlet_sides=None,
                                          degree=ERROR_DEGREE):
    """Mixed-form orthogonality residual for the incompressible system.

    The exact rows insert (u, p) into the volume, boundary and stabilization
    terms; the element residual inside the stabilization reduces to f for
    the exact solution.  `solution` is the full solved vector, multiplier
    included.
    """
    from .incompressible import (_stab_h, _stabilized_load,
                                 assemble_incompressible_system)
    sides = tuple(dirichlet_sides or mesh.side_tags)
    mixed = assemble_incompressible_system(mesh, vspace, pspace, params, f,
                                           exact_u, dirichlet_sides=sides)
    A = mixed.system.matrix
    x = np.asarray(solution, dtype=float)
    if x.shape != (A.shape[0],):
        raise ValueError("solution length does not match the system")
    mu_only = MaterialParams(params.mu)

    # velocity-test rows: (2 mu eps(u), eps(v)) - (p, div v) - b(u, v, p)
    # + the flux of the test function against the exact trace
    vel = _exact_volume_rows(vspace, mu_only, exact_u, degree)
    tab = vspace.interior_tables(degree, symmetrize=False)
    extra = np.zeros(vspace.dof_count)
    for cells in tab.cell_chunks():
        xq = tab.physical_points(cells)
        pe = exact_p.value(xq[..., 0], xq[..., 1])
        g = tab.physical_gradients(cells)
        loc = -np.einsum("cq,cq,cqie->cie", tab.wdet[cells], pe, g)
        np.add.at(extra, vspace.cell_dofs[cells].ravel(),
                  loc.reshape(loc.shape[0], -1).ravel())
    vel += extra
    vel -= _exact_flux_rows(vspace, mu_only, exact_u, sides, degree)
    bt = vspace.boundary_tables(degree, sides)
    pe_b = exact_p.value(bt.x[..., 0], bt.x[..., 1])
    loc = np.einsum("eq,eqi,ec->eic", bt.w * pe_b, bt.N, bt.normal)
    pn = np.zeros(vspace.dof_count)
    np.add.at(pn, bt.cell_dofs.ravel(), loc.reshape(len(bt.edge_ids), -1).ravel())
    vel += pn
    vel += assemble_flux_load(vspace, mu_only, exact_u, sides, degree)

    # pressure-test rows: (div u, q) - <q n, u> + stabilization with f
    ptab = pspace.interior_tables(degree, symmetrize=False)
    prs = np.zeros(pspace.dof_count)
    for cells in ptab.cell_chunks():
        xq = ptab.physical_points(cells)
        ge = exact_u.gradient(xq[..., 0], xq[..., 1])
        div = ge[..., 0, 0] + ge[..., 1, 1]
        loc = np.einsum("cq,qi->ci", ptab.wdet[cells] * div, ptab.N)
        np.add.at(prs, pspace.cell_dofs[cells].ravel(), loc.ravel())
    pb = pspace.boundary_tables(degree, sides)
    ue_b = exact_u.value(pb.x[..., 0], pb.x[..., 1])
    un = np.einsum("eqa,ea->eq", ue_b, pb.normal)
    loc = -np.einsum("eq,eqi->ei", pb.w * un, pb.N)
    np.add.at(prs, pb.cell_dofs.ravel(), loc.ravel())
    prs += _stabilized_load(pspace, params, f, _stab_h(mesh, "element"),
                            degree)

    n = vspace.dof_count + pspace.dof_count
    r = np.concatenate([vel, prs]) - (A @ x)[:n]
    return _scaled_max(r, A, x)
