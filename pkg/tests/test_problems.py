import math

import numpy as np
import pytest

from mixfem.problems import (convergence_table, least_squares_rate, poisson_lm, run_poisson_lm,
                             stokes_brinkman, stokes_forcing, stokes_pressure, stokes_pressure_grad,
                             stokes_traction, stokes_velocity, stokes_velocity_grad)


@pytest.mark.parametrize("dim,n", [(2, 4), (3, 2)])
def test_quadratic_solution_reproduced(dim, n):
    sol = poisson_lm(n, dim=dim, degree=2)
    assert sol.errors["u"]["L2"] <= 1e-10 and sol.errors["u"]["H1"] <= 1e-10
    assert sol.info["gamma_deviation"] <= 1e-10


@pytest.mark.parametrize("n", [2, 4, 8])
def test_multiplier_size(n):
    sol = poisson_lm(n)
    assert sol.functions["lambda"].space.num_dofs == n + 1
    assert sol.matrix.row_sizes == [(n + 1) ** 2, n + 1]


def test_rates_between_rows():
    rows, _ = run_poisson_lm(2, (8, 16))
    by = {(r.norm, r.n): r for r in rows}
    assert by[("L2", 8)].rate is None
    assert abs(by[("L2", 16)].rate - 2.0) < 0.1
    assert abs(by[("H1semi", 16)].rate - 1.0) < 0.1
    assert [r.n for r in rows if r.norm == "L2"] == [8, 16]


def test_multiplier_matches_flux_jump():
    # lambda equals the jump of the normal flux; u'' = -2 gives a zero jump across x = 1/2
    sol = poisson_lm(8)
    assert np.max(np.abs(sol.functions["lambda"].coefficients)) < 1e-10


def test_least_squares_rate():
    ns = [4, 8, 16]
    errs = [3.0 * (1 / n) ** 2 for n in ns]
    assert abs(least_squares_rate(ns, errs) - 2.0) < 1e-12


def test_convergence_table_order():
    class S:
        def __init__(self, n, e):
            self.n, self.errors = n, {"u": {"L2": e}}
    rows = convergence_table([S(8, 0.25), S(4, 1.0)], ["u"], norms=("L2",))
    assert [r.n for r in rows] == [4, 8] and rows[0].rate is None
    assert rows[1].rate == pytest.approx(2.0)
    assert rows[1].as_dict()["h"] == 0.125


def test_manufactured_stokes_data():
    rng = np.random.default_rng(0)
    x = rng.random((20, 2))
    u = stokes_velocity(x)
    g = stokes_velocity_grad(x)
    # divergence free
    assert np.allclose(g[:, 0, 0] + g[:, 1, 1], 0)
    h = 1e-5
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        fd = (stokes_velocity(x + e) - stokes_velocity(x - e)) / (2 * h)
        assert np.allclose(g[:, :, d], fd, atol=1e-7)
        fp = (stokes_pressure(x + e) - stokes_pressure(x - e)) / (2 * h)
        assert np.allclose(stokes_pressure_grad(x)[:, d], fp, atol=1e-6)
    assert np.allclose(stokes_forcing(x), (2 * math.pi ** 2 + 1) * u - stokes_pressure_grad(x))
    t = stokes_traction(x)
    assert np.allclose(t[:, 0], g[:, 0, 0] + stokes_pressure(x))


def test_stokes_divergence_decreases():
    coarse = stokes_brinkman(4, 1)
    fine = stokes_brinkman(8, 1)
    assert fine.info["div_l2"] < coarse.info["div_l2"]
    assert fine.errors["u"]["L2"] < coarse.errors["u"]["L2"]
    assert fine.matrix.row_sizes[2] == 2 * (8 + 1)


def test_stokes_krylov_matches_direct():
    direct = stokes_brinkman(4, 1)
    gm = stokes_brinkman(4, 1, solver="gmres", tol=1e-12)
    a = direct.functions["u"].coefficients
    b = gm.functions["u"].coefficients
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(a)


def test_constraint_deviation_small():
    _, sols = run_poisson_lm(2, (4, 8, 16))
    assert all(s.info["gamma_deviation"] <= 1e-8 for s in sols)
