import math

import numpy as np
import pytest
import scipy.linalg as sla

from elastweak.compressible import (MaterialParams, assemble_boundary_flux,
                                    assemble_elasticity_stiffness,
                                    assemble_neumann_load,
                                    assemble_strong_system,
                                    assemble_weak_system)
from elastweak.mesh import Mesh, build_cook_mesh, build_unit_square_mesh
from elastweak.norms import triple_norm_compressible
from elastweak.solvers import lu_solve
from elastweak.spaces import AnalyticField, DiscreteField, FESpace, interpolate


def reference_triangle_mesh():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2]])
    edges = np.array([[0, 1], [1, 2], [2, 0]])
    s = 1.0 / math.sqrt(2.0)
    normals = np.array([[0.0, -1.0], [s, s], [-1.0, 0.0]])
    tangents = np.array([[1.0, 0.0], [-s, s], [0.0, -1.0]])
    return Mesh(vertices=verts, triangles=tris, edge_vertices=edges,
                edge_tag=np.array([0, 1, 2]), edge_normal=normals,
                edge_tangent=tangents, edge_owner=np.array([0, 0, 0]),
                side_tags=("bottom", "diag", "left"))


def field_x0():
    return AnalyticField.vector(
        lambda x, y: np.stack([x, 0 * y], axis=-1),
        lambda x, y: np.broadcast_to(
            np.array([[1.0, 0.0], [0.0, 0.0]]), np.shape(x) + (2, 2)).copy())


def rotation_field():
    return AnalyticField.vector(lambda x, y: np.stack([y, -x], axis=-1))


ZERO = AnalyticField.constant_vector(0.0, 0.0)


def test_reference_triangle_energy():
    V = FESpace(reference_triangle_mesh(), 1, 2)
    K = assemble_elasticity_stiffness(V, MaterialParams(1.0, 1.0))
    u = interpolate(V, field_x0()).coefficients
    assert u @ (K @ u) == pytest.approx(1.5, rel=1e-13)


def test_rigid_motions_have_zero_energy():
    mesh = build_unit_square_mesh(3)
    V = FESpace(mesh, 1, 2)
    K = assemble_elasticity_stiffness(V, MaterialParams(1.0, 2.0))
    scale = np.abs(K.data).max()
    for field in (AnalyticField.constant_vector(1.0, 0.0),
                  AnalyticField.constant_vector(0.0, 1.0),
                  rotation_field()):
        r = interpolate(V, field).coefficients
        assert abs(r @ (K @ r)) <= 1e-10 * scale


def test_scalar_space_rejected():
    mesh = build_unit_square_mesh(1)
    with pytest.raises(ValueError):
        assemble_elasticity_stiffness(FESpace(mesh, 1, 1), MaterialParams(1.0))


def test_volume_matrix_has_three_rigid_modes():
    mesh = build_unit_square_mesh(2)
    V = FESpace(mesh, 1, 2)
    K = assemble_elasticity_stiffness(V, MaterialParams(1.0, 1.0)).toarray()
    ev = np.sort(np.abs(sla.eigvalsh(K)))
    assert ev[2] <= 1e-10 * ev[-1]
    assert ev[3] > 1e-6 * ev[-1]


def test_boundary_flux_hand_values():
    mesh = build_unit_square_mesh(1)
    V = FESpace(mesh, 1, 2)
    pars = MaterialParams(1.0, 1.0)
    u = interpolate(V, field_x0()).coefficients
    v = interpolate(V, AnalyticField.constant_vector(1.0, 0.0)).coefficients
    B_right = assemble_boundary_flux(V, pars, side_tags=("right",))
    assert v @ (B_right @ u) == pytest.approx(3.0, rel=1e-13)
    B_bottom = assemble_boundary_flux(V, pars, side_tags=("bottom",))
    assert v @ (B_bottom @ u) == pytest.approx(0.0, abs=1e-14)


def test_flux_of_constant_field_vanishes():
    mesh = build_unit_square_mesh(2)
    V = FESpace(mesh, 1, 2)
    B = assemble_boundary_flux(V, MaterialParams(2.0, 3.0))
    c = interpolate(V, AnalyticField.constant_vector(0.7, -1.2)).coefficients
    assert np.abs(B @ c).max() < 1e-13


def test_unknown_side_tag_raises():
    mesh = build_unit_square_mesh(2)
    V = FESpace(mesh, 1, 2)
    with pytest.raises(KeyError):
        assemble_boundary_flux(V, MaterialParams(1.0), side_tags=("north",))
    with pytest.raises(KeyError):
        assemble_neumann_load(V, "north", ZERO)


def test_weak_system_antisymmetric_boundary_part():
    mesh = build_unit_square_mesh(4)
    V = FESpace(mesh, 1, 2)
    pars = MaterialParams(1.0, 1.0)
    system = assemble_weak_system(mesh, V, pars, ZERO, ZERO)
    K = assemble_elasticity_stiffness(V, pars)
    S = (system.matrix - K).toarray()
    assert np.abs(S + S.T).max() < 1e-12


def test_weak_system_zero_data_zero_solution():
    mesh = build_unit_square_mesh(3)
    V = FESpace(mesh, 2, 2)
    system = assemble_weak_system(mesh, V, MaterialParams(1.0, 1.0), ZERO, ZERO)
    x, report = lu_solve(system.matrix, system.rhs)
    assert np.abs(x).max() == 0.0
    assert report.residual_norm == 0.0


@pytest.mark.parametrize("n", [2, 4, 8])
def test_weak_matrix_nonsingular(n):
    mesh = build_unit_square_mesh(n)
    V = FESpace(mesh, 1, 2)
    system = assemble_weak_system(mesh, V, MaterialParams(1.0, 1.0), ZERO, ZERO)
    rng = np.random.default_rng(n)
    b = rng.standard_normal(system.dof_count)
    x, report = lu_solve(system.matrix, b)
    assert report.residual_norm <= 1e-9


def linear_field():
    G = np.array([[0.7, -0.2], [0.4, 0.9]])

    def val(x, y):
        return np.stack([0.3 + 0.7 * x - 0.2 * y, -0.1 + 0.4 * x + 0.9 * y],
                        axis=-1)

    def grad(x, y):
        return np.broadcast_to(G, np.shape(x) + (2, 2)).copy()

    return AnalyticField.vector(val, grad)


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("mode", ["strong", "weak"])
def test_patch_test_linear_reproduction(order, mode, lam=3.7):
    mesh = build_unit_square_mesh(3)
    V = FESpace(mesh, order, 2)
    pars = MaterialParams(mu=2.1, lam=lam)
    lin = linear_field()
    if mode == "strong":
        system = assemble_strong_system(mesh, V, pars, ZERO, lin)
    else:
        system = assemble_weak_system(mesh, V, pars, ZERO, lin)
    x, _ = lu_solve(system.matrix, system.rhs)
    exact = interpolate(V, lin).coefficients
    assert np.abs(x - exact).max() <= 1e-10


def test_strong_system_fixes_boundary_values():
    mesh = build_unit_square_mesh(2)
    V = FESpace(mesh, 1, 2)
    system = assemble_strong_system(mesh, V, MaterialParams(1.0), ZERO, ZERO)
    x, _ = lu_solve(system.matrix, system.rhs)
    assert np.abs(x[V.boundary_dofs]).max() == 0.0


def test_weak_and_strong_solutions_approach_each_other():
    from elastweak.experiments import manufactured_compressible
    pars = MaterialParams(1.0, 1.0)
    exact, f, g = manufactured_compressible(pars)
    dists = []
    for n in (4, 8, 16):
        mesh = build_unit_square_mesh(n)
        V = FESpace(mesh, 1, 2)
        sw = assemble_weak_system(mesh, V, pars, f, g)
        ss = assemble_strong_system(mesh, V, pars, f, g)
        xw, _ = lu_solve(sw.matrix, sw.rhs)
        xs, _ = lu_solve(ss.matrix, ss.rhs)
        diff = DiscreteField(V, xw - xs)
        dists.append(triple_norm_compressible(diff, pars))
    assert dists[0] > dists[1] > dists[2]
    assert dists[2] < 0.5 * dists[0]


def test_neumann_load_totals():
    mesh = build_cook_mesh(4)
    V = FESpace(mesh, 1, 2)
    traction = AnalyticField.constant_vector(0.0, 100.0)
    load = assemble_neumann_load(V, "AB", traction)
    ey = interpolate(V, AnalyticField.constant_vector(0.0, 1.0)).coefficients
    ex = interpolate(V, AnalyticField.constant_vector(1.0, 0.0)).coefficients
    assert ey @ load == pytest.approx(1600.0, rel=1e-12)
    assert ex @ load == pytest.approx(0.0, abs=1e-12)
    zero_load = assemble_neumann_load(V, "AB", ZERO)
    assert np.abs(zero_load).max() == 0.0


def test_weak_system_consistency_with_exact_solution():
    # inserting the exact manufactured field into the discrete operator
    # reproduces the right-hand side at quadrature precision
    from elastweak.experiments import manufactured_compressible
    from elastweak.norms import _exact_flux_rows, _exact_volume_rows
    from elastweak.compressible import assemble_flux_load, assemble_load
    pars = MaterialParams(1.0, 1.0)
    exact, f, g = manufactured_compressible(pars)
    mesh = build_unit_square_mesh(4)
    V = FESpace(mesh, 2, 2)
    sides = tuple(mesh.side_tags)
    lhs = (_exact_volume_rows(V, pars, exact, 16)
           - _exact_flux_rows(V, pars, exact, sides, 16)
           + assemble_flux_load(V, pars, exact, sides, 16))
    rhs = (assemble_load(V, f, 16)
           + assemble_flux_load(V, pars, g, sides, 16))
    scale = np.abs(rhs).max()
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(scale, 1.0)


def test_material_params_validation():
    with pytest.raises(ValueError):
        MaterialParams(mu=0.0)
    with pytest.raises(ValueError):
        MaterialParams(mu=1.0, lam=-1.0)
