import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixfem import (DirichletBC, Function, MixedFunctionSpace, build_function_space, build_mapping,
                    collect_bc_dofs, create_submesh, interpolate, mark_entities, transfer_cell_dofs,
                    unit_cube_mesh, unit_interval_mesh, unit_square_mesh)
from mixfem.element import MAX_DEGREE
from mixfem.errors import AbsentMappingError, DimensionMismatchError, UnsupportedElementError
from mixfem.reference import reference_vertices

EPS = 1e-10


def test_dof_counts():
    m = unit_square_mesh(2)
    assert build_function_space(m, "lagrange", 1).num_dofs == 9
    assert build_function_space(m, "lagrange", 2).num_dofs == 25
    assert build_function_space(m, "lagrange", 2, value_size=2).num_dofs == 50
    assert build_function_space(m, "lagrange", 3).num_dofs == 9 + 2 * 16 + 8
    assert build_function_space(unit_cube_mesh(1), "lagrange", 2).num_dofs == 27


def test_unsupported_space():
    with pytest.raises(UnsupportedElementError):
        build_function_space(unit_square_mesh(1), "nedelec", 1)


def test_transfer_between_halves():
    mesh = unit_square_mesh(2)
    lower = create_submesh(mark_entities(mesh, 2, lambda p: p[1] < 0.5), 1)
    left = create_submesh(mark_entities(mesh, 2, lambda p: p[0] < 0.5), 1)
    assert mesh.cells[4].tolist() == [6, 4, 7]
    V_lower = build_function_space(lower)
    V_left = build_function_space(left)
    assert transfer_cell_dofs(V_lower, build_mapping(mesh, lower), 4).tolist() == [3, 1, 4]
    assert transfer_cell_dofs(V_left, build_mapping(mesh, left), 4).tolist() == [4, 3, 5]
    # the same geometric cell, reached from the other submesh
    c_left = build_mapping(mesh, left).cell_map[4]
    assert transfer_cell_dofs(V_lower, build_mapping(left, lower), c_left).tolist() == [3, 1, 4]
    # cells outside the lower half have no counterpart
    upper_cell = int(np.flatnonzero(mesh.entity_midpoints(2)[:, 1] > 0.5)[0])
    with pytest.raises(AbsentMappingError):
        transfer_cell_dofs(V_lower, build_mapping(mesh, lower), upper_cell)


def test_transfer_identity_view():
    mesh = unit_square_mesh(3)
    full = create_submesh(mark_entities(mesh, 2, lambda p: True), 1)
    V = build_function_space(mesh, "lagrange", 2)
    cells = np.arange(full.num_cells)
    got = transfer_cell_dofs(V, full.parent_view, cells)
    assert np.array_equal(got, V.dofmap.cell_dofs)


def test_boundary_dofs():
    V = build_function_space(unit_square_mesh(2))
    bc = DirichletBC(V, 0.0, lambda p: p[0] < EPS or p[0] > 1 - EPS)
    dofs, vals = collect_bc_dofs(bc)
    assert len(dofs) == 6 and np.all(vals == 0)
    assert np.all(np.isin(V.dofmap.dof_coords[dofs, 0], (0.0, 1.0)))
    assert len(collect_bc_dofs(DirichletBC(V, 1.0, lambda p: False))[0]) == 0
    assert bc.dofs_and_values()[0].max() < V.num_dofs


def test_boundary_dofs_vector_p2():
    V = build_function_space(unit_square_mesh(2), "lagrange", 2, value_size=2)
    dofs, vals = collect_bc_dofs(DirichletBC(V, lambda x: x, lambda p: p[1] < EPS))
    # 5 nodes on the bottom edge, two components each
    assert len(dofs) == 10
    assert np.allclose(vals, V.dofmap.dof_coords[dofs, dofs % 2])


def test_dofmap_determinism_and_gapless():
    for k in (1, 2, 3):
        a = build_function_space(unit_square_mesh(3), "lagrange", k, value_size=2)
        b = build_function_space(unit_square_mesh(3), "lagrange", k, value_size=2)
        assert np.array_equal(a.dofmap.cell_dofs, b.dofmap.cell_dofs)
        assert np.array_equal(np.unique(a.dofmap.cell_dofs), np.arange(a.num_dofs))


@pytest.mark.parametrize("make,kind", [(unit_square_mesh, "triangle"), (unit_cube_mesh, "tetrahedron")])
def test_continuity_across_interior_facets(make, kind):
    mesh = make(2)
    for k in range(1, MAX_DEGREE[kind] + 1):
        V = build_function_space(mesh, "lagrange", k)
        coords = V.dofmap.dof_coords
        # every global dof sits at one location, so shared nodes share an index
        assert len(np.unique(np.round(coords, 12), axis=0)) == V.num_dofs
        phys = mesh.cell_coordinates()
        ref = V.element.dof_points
        lam = np.column_stack([1 - ref.sum(axis=1), ref])
        expect = np.einsum("nv,cvg->cng", lam, phys)
        assert np.allclose(coords[V.dofmap.cell_dofs], expect)


def _poly(k, gdim, seed):
    rng = np.random.default_rng(seed)
    exps = [e for e in np.ndindex(*(k + 1,) * gdim) if sum(e) <= k]
    coef = rng.uniform(-1, 1, len(exps))

    def f(x):
        return sum(c * np.prod(x ** np.array(e), axis=1) for c, e in zip(coef, exps))
    return f


@settings(max_examples=20)
@given(st.sampled_from([("interval", unit_interval_mesh), ("triangle", unit_square_mesh),
                        ("tetrahedron", unit_cube_mesh)]), st.integers(1, 3), st.integers(0, 999))
def test_interpolation_exact(kind_make, k, seed):
    kind, make = kind_make
    k = min(k, MAX_DEGREE[kind])
    mesh = make(2)
    f = _poly(k, mesh.gdim, seed)
    uh = interpolate(build_function_space(mesh, "lagrange", k), f)
    rng = np.random.default_rng(seed)
    for cell in rng.integers(0, mesh.num_cells, 3):
        lam = rng.dirichlet(np.ones(mesh.tdim + 1), size=4)
        ref = lam @ reference_vertices(kind)
        phys = lam @ mesh.cell_coordinates([cell])[0]
        assert np.allclose(uh.eval_reference(cell, ref)[:, 0], f(phys), atol=1e-12, rtol=0)


def test_vector_interpolation_layout():
    V = build_function_space(unit_square_mesh(2), "lagrange", 1, value_size=2)
    uh = interpolate(V, lambda x: np.column_stack([x[:, 0], -x[:, 1]]))
    xy = V.dofmap.dof_coords
    assert np.allclose(uh.coefficients[0::2], xy[0::2, 0])
    assert np.allclose(uh.coefficients[1::2], -xy[1::2, 1])


def test_mixed_space_offsets():
    mesh = unit_square_mesh(2)
    gamma = create_submesh(mark_entities(mesh, 1, lambda p: abs(p[0] - 0.5) < EPS), 1)
    W = MixedFunctionSpace(build_function_space(mesh), build_function_space(gamma))
    assert W.offsets.tolist() == [0, 9, 12] and W.num_dofs == 12 and len(W) == 2
    assert W.block_sizes() == [9, 3]


def test_function_length_checked(tmp_path):
    V = build_function_space(unit_square_mesh(1))
    with pytest.raises(DimensionMismatchError):
        Function(V, np.zeros(3))
    path = tmp_path / "u.csv"
    Function(V, np.arange(4.0)).to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["dof_index", "x", "y", "value"]
    assert len(rows) == 5 and float(rows[4][3]) == 3.0
