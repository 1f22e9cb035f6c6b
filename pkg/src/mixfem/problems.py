"""Manufactured-solution demo problems and convergence studies."""

import math
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_scalar, assemble_system
from .errors import SolverError
from .forms import (AnalyticCoefficient, Coefficient, Measure, TestFunctions, TrialFunctions,
                    div, grad, inner)
from .linalg import BlockVector, convert_to_monolithic, solve_direct, solve_krylov
from .mesh import mark_entities, unit_cube_mesh, unit_square_mesh
from .meshview import create_submesh
from .space import DirichletBC, Function, MixedFunctionSpace, build_function_space

EPS = 1e-10
PI = math.pi


@dataclass
class ConvergenceRow:
    n: int
    h: float
    var: str
    norm: str
    error: float
    rate: float = None

    def as_dict(self):
        return {"n": self.n, "h": self.h, "var": self.var, "norm": self.norm,
                "error": self.error, "rate": self.rate}


@dataclass
class Solution:
    n: int
    functions: dict
    errors: dict
    matrix: object = None
    rhs: object = None
    monolithic: object = None
    info: dict = field(default_factory=dict)


def solve_system(nest, vec, solver="direct", tol=1e-10, maxit=None):
    """Solve the monolithic form of a block system; returns (x, monolithic, info)."""
    mono = convert_to_monolithic(nest)
    b = vec.to_array()
    if solver == "direct":
        return solve_direct(mono, b), mono, {"solver": "direct"}
    x, its, ok = solve_krylov(mono, b, solver, tol, maxit)
    if not ok:
        raise SolverError(f"{solver} did not reach tol={tol:g} in {its} iterations")
    return x, mono, {"solver": solver, "iterations": its}


def _split(x, spaces, names):
    segments = BlockVector.from_array(x, [V.num_dofs for V in spaces]).segments
    return {name: Function(V, seg, name=name) for name, V, seg in zip(names, spaces, segments)}


def error_norms(uh, exact, exact_grad, degree=None):
    """L2, H1-seminorm and H1 errors of ``uh`` against analytic callables."""
    space = uh.space
    q = 2 * space.degree + 2 if degree is None else degree
    shape = () if space.value_size == 1 else (space.value_size,)
    gdim = space.mesh.gdim
    dx = Measure("dx", space.mesh, degree=q)
    e = Coefficient(uh) - AnalyticCoefficient(exact, shape, name="u_exact")
    ge = grad(Coefficient(uh)) - AnalyticCoefficient(exact_grad, shape + (gdim,), name="grad_u_exact")
    l2 = math.sqrt(max(assemble_scalar(inner(e, e) * dx), 0.0))
    semi = math.sqrt(max(assemble_scalar(inner(ge, ge) * dx), 0.0))
    return {"L2": l2, "H1semi": semi, "H1": math.hypot(l2, semi)}


# ------------------------------------------------------------------ Poisson

def poisson_exact(x):
    return x[:, 0] * (1.0 - x[:, 0])


def poisson_exact_grad(x):
    g = np.zeros_like(x)
    g[:, 0] = 1.0 - 2.0 * x[:, 0]
    return g


def poisson_lm(n, dim=2, degree=1, solver="direct", tol=1e-10, maxit=None,
               quadrature_degree=None):
    """Poisson problem with u = 0.25 on the midplane x = 0.5 enforced by a multiplier."""
    mesh = (unit_square_mesh if dim == 2 else unit_cube_mesh)(n, name="Omega")
    marker = mark_entities(mesh, mesh.tdim - 1, lambda p: abs(p[0] - 0.5) < EPS)
    gamma = create_submesh(marker, 1, name="Gamma")
    V = build_function_space(mesh, "lagrange", degree)
    Q = build_function_space(gamma, "lagrange", degree)
    W = MixedFunctionSpace(V, Q)
    u, lam = TrialFunctions(W)
    v, eta = TestFunctions(W)
    dx = Measure("dx", mesh)
    dG = Measure("dx", gamma)
    a = inner(grad(u), grad(v)) * dx + v * lam * dG + u * eta * dG
    L = 2.0 * v * dx + 0.25 * eta * dG
    bc = DirichletBC(V, 0.0, lambda p: p[0] < EPS or p[0] > 1.0 - EPS)
    nest, vec = assemble_system(a, L, [bc], quadrature_degree)
    x, mono, info = solve_system(nest, vec, solver, tol, maxit)
    funcs = _split(x, W.subspaces, ("u", "lambda"))
    errors = {"u": error_norms(funcs["u"], poisson_exact, poisson_exact_grad)}
    on_gamma = np.flatnonzero(np.abs(V.dofmap.dof_coords[:, 0] - 0.5) < EPS)
    info["gamma_deviation"] = float(np.max(np.abs(funcs["u"].coefficients[on_gamma] - 0.25)))
    info["forms"] = (a, L)
    return Solution(n, funcs, errors, nest, vec, mono, info)


# ------------------------------------------------------------ Stokes-Brinkman

def stokes_velocity(x):
    X, Y = x[:, 0], x[:, 1]
    return np.stack([np.cos(PI * Y) * np.sin(PI * X), -np.cos(PI * X) * np.sin(PI * Y)], axis=1)


def stokes_velocity_grad(x):
    X, Y = x[:, 0], x[:, 1]
    g = np.empty((len(x), 2, 2))
    g[:, 0, 0] = PI * np.cos(PI * Y) * np.cos(PI * X)
    g[:, 0, 1] = -PI * np.sin(PI * Y) * np.sin(PI * X)
    g[:, 1, 0] = PI * np.sin(PI * X) * np.sin(PI * Y)
    g[:, 1, 1] = -PI * np.cos(PI * X) * np.cos(PI * Y)
    return g


def stokes_pressure(x):
    return PI * np.cos(PI * x[:, 0]) * np.cos(PI * x[:, 1])


def stokes_pressure_grad(x):
    X, Y = x[:, 0], x[:, 1]
    return np.stack([-PI ** 2 * np.sin(PI * X) * np.cos(PI * Y),
                     -PI ** 2 * np.cos(PI * X) * np.sin(PI * Y)], axis=1)


def stokes_forcing(x):
    # f = -lap(u) + u - grad(p) with -lap(u) = 2 pi^2 u
    return (2 * PI ** 2 + 1) * stokes_velocity(x) - stokes_pressure_grad(x)


def stokes_traction(x, normal=(1.0, 0.0)):
    n = np.asarray(normal, dtype=float)
    return stokes_velocity_grad(x) @ n + stokes_pressure(x)[:, None] * n


def stokes_brinkman(n, k=1, solver="direct", tol=1e-10, maxit=None, quadrature_degree=None):
    """Stokes-Brinkman flow with inlet velocity imposed through a boundary multiplier."""
    mesh = unit_square_mesh(n, name="Omega")
    fdim = mesh.tdim - 1
    inlet = create_submesh(mark_entities(mesh, fdim, lambda p: p[0] < EPS), 1, name="Gamma_in")
    outlet = mark_entities(mesh, fdim, lambda p: p[0] > 1.0 - EPS)
    U = build_function_space(mesh, "lagrange", k + 1, value_size=2)
    P = build_function_space(mesh, "lagrange", k)
    L = build_function_space(inlet, "lagrange", k, value_size=2)
    W = MixedFunctionSpace(U, P, L)
    u, p, lam = TrialFunctions(W)
    v, q, eta = TestFunctions(W)
    dx = Measure("dx", mesh)
    ds_out = Measure("ds", mesh, subdomain_data=outlet, tag=1)
    dG = Measure("dx", inlet)
    data_degree = k + 2
    f = AnalyticCoefficient(stokes_forcing, (2,), degree=data_degree, name="f")
    h = AnalyticCoefficient(stokes_traction, (2,), degree=data_degree, name="h")
    g = AnalyticCoefficient(stokes_velocity, (2,), degree=data_degree, name="g")
    a = ((inner(grad(u), grad(v)) + inner(u, v) + p * div(v) + q * div(u)) * dx
         + (inner(lam, v) + inner(eta, u)) * dG)
    rhs = inner(f, v) * dx + inner(h, v) * ds_out + inner(eta, g) * dG
    nest, vec = assemble_system(a, rhs, [], quadrature_degree)
    x, mono, info = solve_system(nest, vec, solver, tol, maxit)
    funcs = _split(x, W.subspaces, ("u", "p", "lambda"))
    errors = {"u": error_norms(funcs["u"], stokes_velocity, stokes_velocity_grad),
              "p": error_norms(funcs["p"], stokes_pressure, stokes_pressure_grad)}
    div_form = div(Coefficient(funcs["u"])) * div(Coefficient(funcs["u"])) * Measure(
        "dx", mesh, degree=2 * (k + 1))
    info["div_l2"] = math.sqrt(max(assemble_scalar(div_form), 0.0))
    info["forms"] = (a, rhs)
    return Solution(n, funcs, errors, nest, vec, mono, info)


# ------------------------------------------------------------------ studies

def convergence_table(solutions, variables, norms=("L2", "H1semi", "H1")):
    rows = []
    for var in variables:
        for norm in norms:
            prev = None
            for sol in sorted(solutions, key=lambda s: s.n):
                err = sol.errors[var][norm]
                rate = None
                if prev is not None and prev[1] > 0 and err > 0:
                    rate = math.log(prev[1] / err) / math.log(sol.n / prev[0])
                rows.append(ConvergenceRow(sol.n, 1.0 / sol.n, var, norm, err, rate))
                prev = (sol.n, err)
    return rows


def least_squares_rate(ns, errors):
    """Slope of log(error) against log(h) over all rows."""
    h = 1.0 / np.asarray(ns, dtype=float)
    slope, _ = np.polyfit(np.log(h), np.log(np.asarray(errors, dtype=float)), 1)
    return float(slope)


def run_poisson_lm(dim=2, resolutions=(4, 8, 16, 32), degree=1, **options):
    sols = [poisson_lm(n, dim, degree, **options) for n in sorted(resolutions)]
    return convergence_table(sols, ["u"]), sols


def run_stokes_brinkman(resolutions=(8, 16, 32, 64), k=1, **options):
    sols = [stokes_brinkman(n, k, **options) for n in sorted(resolutions)]
    return convergence_table(sols, ["u", "p"]), sols


PROBLEMS = {"poisson-lm": run_poisson_lm, "stokes-brinkman": run_stokes_brinkman}
