"""Acceptance checks; each test carries the number of the criterion it covers."""

import time

import numpy as np
import pytest

from mixfem import (Measure, MixedFunctionSpace, TestFunctions, TrialFunctions, assemble_matrix,
                    build_function_space, convert_to_monolithic, create_submesh,
                    extract_blocks, grad, inner, mark_entities, solve_direct, solve_krylov,
                    unit_square_mesh)
from mixfem.assembly import assemble_block
from mixfem.linalg import BlockNestMatrix
from mixfem.problems import least_squares_rate, poisson_lm, run_poisson_lm, run_stokes_brinkman

import oracle


@pytest.fixture(scope="module")
def poisson_runs():
    out = {}
    t0 = time.perf_counter()
    out[2] = run_poisson_lm(2, (4, 8, 16, 32), 1)[1]
    out[3] = run_poisson_lm(3, (2, 4, 8, 16), 1)[1]
    out["seconds"] = time.perf_counter() - t0
    return out


def _slope(sols, var, norm):
    return least_squares_rate([s.n for s in sols], [s.errors[var][norm] for s in sols])


@pytest.mark.acceptance(1, "Poisson-LM P1 rates: L2 in [1.85, 2.3], H1 in [0.9, 1.3], 2D and 3D, < 2 min")
@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_1_poisson_rates(poisson_runs, dim):
    sols = poisson_runs[dim]
    l2, h1 = _slope(sols, "u", "L2"), _slope(sols, "u", "H1")
    print(f"dim={dim}: L2 slope {l2:.4f}, H1 slope {h1:.4f}")
    assert 1.85 <= l2 <= 2.3
    assert 0.9 <= h1 <= 1.3
    assert poisson_runs["seconds"] < 120


@pytest.mark.acceptance(2, "Poisson-LM constraint: max |u_h - 0.25| on Gamma <= 1e-8")
@pytest.mark.parametrize("dim", [2, 3])
def test_criterion_2_constraint(poisson_runs, dim):
    for sol in poisson_runs[dim]:
        assert sol.info["gamma_deviation"] <= 1e-8, (dim, sol.n, sol.info["gamma_deviation"])


@pytest.mark.acceptance(3, "Stokes-Brinkman rates for P2/P1/P1 and P3/P2/P2, < 5 min")
def test_criterion_3_stokes_rates():
    t0 = time.perf_counter()
    low = run_stokes_brinkman((8, 16, 32, 64), 1)[1]
    high = run_stokes_brinkman((8, 16, 32), 2)[1]
    elapsed = time.perf_counter() - t0
    rates = {k: (_slope(s, "u", "L2"), _slope(s, "u", "H1"), _slope(s, "p", "L2"))
             for k, s in ((1, low), (2, high))}
    print(f"rates {rates}, {elapsed:.1f}s")
    for k, (ul2, uh1, pl2) in rates.items():
        shift = k - 1
        assert ul2 >= 2.8 + shift
        assert uh1 >= 1.9 + shift
        assert pl2 >= 1.7 + shift
    assert elapsed < 300


def _interface(n, which):
    mesh = unit_square_mesh(n, name="Omega")
    if which == "midline":
        pred = lambda p: abs(p[0] - 0.5) < 1e-10
    else:
        # main diagonal y = x
        pred = lambda p: abs(p[0] - p[1]) < 1e-10
    gamma = create_submesh(mark_entities(mesh, 1, pred), 1, name="Gamma")
    return mesh, gamma


def _poisson_lm_form(mesh, gamma):
    W = MixedFunctionSpace(build_function_space(mesh), build_function_space(gamma))
    u, lam = TrialFunctions(W)
    v, eta = TestFunctions(W)
    return (inner(grad(u), grad(v)) * Measure("dx", mesh) + v * lam * Measure("dx", gamma)
            + u * eta * Measure("dx", gamma))


@pytest.mark.acceptance(4, "block assembly equals a dense brute-force assembler within 1e-12")
@pytest.mark.parametrize("n,which", [(1, "diagonal"), (2, "midline"), (2, "diagonal")])
def test_criterion_4_dense_oracle(n, which):
    mesh, gamma = _interface(n, which)
    a = _poisson_lm_form(mesh, gamma)
    grid = extract_blocks(a)
    blocks = [[None if sub.empty else assemble_block(sub) for sub in row] for row in grid]
    nest = BlockNestMatrix(blocks, [r[0].spaces[0].num_dofs for r in grid],
                           [s.spaces[1].num_dofs for s in grid[0]])
    mono = convert_to_monolithic(nest).to_dense()
    ref = oracle.poisson_lm_matrix(mesh, gamma)
    assert mono.shape == ref.shape
    assert np.max(np.abs(mono - ref)) <= 1e-12


@pytest.mark.acceptance(5, "midline submesh of unit_square_mesh(2): vertex map {0:1,1:4,2:7}, cell map {0:4,1:11}")
def test_criterion_5_mapping_values():
    mesh, gamma = _interface(2, "midline")
    view = gamma.parent_view
    assert view.vertex_map.tolist() == [1, 4, 7]
    assert view.cell_map.tolist() == [4, 11]
    assert np.array_equal(gamma.coords, mesh.coords[view.vertex_map])
    facet_coords = mesh.coords[mesh.entity_vertices(1)[view.cell_map]]
    assert np.array_equal(facet_coords, gamma.coords[gamma.cells])


@pytest.mark.acceptance(6, "interface coupling counted once: entries and row sums exact within 1e-13")
@pytest.mark.parametrize("n", [2, 4])
def test_criterion_6_single_count(n):
    mesh, gamma = _interface(n, "midline")
    a = _poisson_lm_form(mesh, gamma)
    A12 = assemble_matrix(a)[0, 1].to_dense()
    h = 1.0 / n
    V = mesh.coords
    G = gamma.coords
    expected = np.zeros_like(A12)
    for i in range(mesh.num_vertices):
        if abs(V[i, 0] - 0.5) > 1e-12:
            continue
        for k in range(gamma.num_vertices):
            if abs(V[i, 1] - G[k, 1]) < 1e-12:
                ends = int(G[k, 1] in (0.0, 1.0))
                expected[i, k] = (2 - ends) * h / 3
            elif abs(abs(V[i, 1] - G[k, 1]) - h) < 1e-12:
                expected[i, k] = h / 6
    assert np.max(np.abs(A12 - expected)) <= 1e-13
    # row sums: the integral of each parent hat over Gamma
    on = np.abs(V[:, 0] - 0.5) < 1e-12
    ends = np.isin(V[:, 1], (0.0, 1.0))
    hat_integrals = np.where(on, np.where(ends, h / 2, h), 0.0)
    assert np.max(np.abs(A12.sum(axis=1) - hat_integrals)) <= 1e-13


@pytest.mark.acceptance(7, "A^{1,2} equals the transpose of A^{2,1} within 1e-13")
@pytest.mark.parametrize("n", [2, 4, 8])
def test_criterion_7_transpose(n):
    mesh, gamma = _interface(n, "midline")
    A = assemble_matrix(_poisson_lm_form(mesh, gamma))
    assert np.max(np.abs(A[0, 1].to_dense() - A[1, 0].to_dense().T)) <= 1e-13


@pytest.mark.acceptance(8, "direct and MINRES (tol 1e-12) solutions agree within 1e-7 at n=8")
def test_criterion_8_direct_vs_minres():
    sol = poisson_lm(8)
    b = sol.rhs.to_array()
    x_direct = solve_direct(sol.monolithic, b)
    x_minres, its, converged = solve_krylov(sol.monolithic, b, "minres", tol=1e-12)
    assert converged
    rel = np.linalg.norm(x_minres - x_direct) / np.linalg.norm(x_direct)
    print(f"MINRES iterations {its}, relative difference {rel:.2e}")
    assert rel <= 1e-7
