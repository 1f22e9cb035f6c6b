"""Time the numba and numpy kernel backends on assembly-sized inputs.

    python3 benchmarks/bench_kernels.py [--n 64] [--repeat 5]
"""

import argparse
import time

import numpy as np

from mixfem.kernels import get_backend
from mixfem.mesh import unit_square_mesh
from mixfem.space import build_function_space


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation for numba
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workload(n):
    """COO triplets of a vector P2 matrix on an n x n square."""
    V = build_function_space(unit_square_mesh(n), degree=2, value_size=2)
    dofs = V.dofmap.cell_dofs
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    vals = np.random.default_rng(0).random(rows.size)
    return V.num_dofs, rows, cols, vals, dofs


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=64, help="cells per side")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    ndofs, rows, cols, vals, dofs = workload(args.n)
    rng = np.random.default_rng(1)
    x = rng.random(ndofs)
    star_dofs = rng.integers(0, ndofs // 4, size=(20000, 2, 6))
    star_vals = rng.random((20000, 2, 6, 6))
    print(f"n={args.n}: {ndofs} dofs, {rows.size} COO entries")
    print(f"{'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    results = {}
    for name in ("numba", "numpy"):
        kb = get_backend(name)
        csr = kb.coo_to_csr(rows, cols, vals, ndofs, ndofs)
        target = np.zeros(ndofs)
        results[name] = {
            "coo_to_csr": best_of(lambda: kb.coo_to_csr(rows, cols, vals, ndofs, ndofs), args.repeat),
            "csr_matvec": best_of(lambda: kb.csr_matvec(*csr, x), args.repeat),
            "scatter_add_vector": best_of(
                lambda: kb.scatter_add_vector(target, dofs, vals[: dofs.size]), args.repeat),
            "zero_duplicate_rows": best_of(
                lambda: kb.zero_duplicate_rows(star_vals.copy(), star_dofs), args.repeat),
        }
    for kernel in results["numba"]:
        a, b = results["numba"][kernel], results["numpy"][kernel]
        print(f"{kernel:<22}{a * 1e3:>12.2f}{b * 1e3:>12.2f}{b / a:>10.1f}x")


if __name__ == "__main__":
    main()
