import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from mixfem import (BlockNestMatrix, BlockVector, CsrMatrix, convert_to_monolithic, read_matrix_market,
                    solve_direct, solve_krylov, write_matrix_market)
from mixfem.errors import DimensionMismatchError, InvalidArgumentError, SingularMatrixError
from mixfem.linalg import read_vector, write_vector
from mixfem.problems import poisson_lm


def random_csr(rng, shape, density=0.3):
    return CsrMatrix.from_scipy(sp.random(*shape, density=density, random_state=rng))


def test_csr_basics():
    A = CsrMatrix.from_coo([0, 0, 1, 0], [1, 0, 1, 1], [1.0, 2.0, 3.0, 4.0], (2, 2))
    assert A.indices.tolist() == [0, 1, 1] and A.data.tolist() == [2.0, 5.0, 3.0]
    assert np.allclose(A.matvec(np.array([1.0, 1.0])), [7, 3])
    assert np.allclose(A.T.to_dense(), A.to_dense().T)
    assert np.allclose(A.row_sums(), [7, 3])
    with pytest.raises(DimensionMismatchError):
        A.matvec(np.ones(3))


def test_one_by_one_nest():
    rng = np.random.default_rng(0)
    A = random_csr(rng, (5, 5))
    mono = convert_to_monolithic(BlockNestMatrix([[A]], [5], [5]))
    assert np.array_equal(mono.to_dense(), A.to_dense())


def test_block_diagonal_nest():
    rng = np.random.default_rng(1)
    A, B = random_csr(rng, (3, 3)), random_csr(rng, (2, 2))
    mono = convert_to_monolithic(BlockNestMatrix([[A, None], [None, B]], [3, 2], [3, 2])).to_dense()
    assert np.array_equal(mono[:3, :3], A.to_dense()) and np.array_equal(mono[3:, 3:], B.to_dense())
    assert not mono[:3, 3:].any() and not mono[3:, :3].any()


def test_nest_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        BlockNestMatrix([[CsrMatrix.zeros((2, 2))]], [3], [2])
    with pytest.raises(DimensionMismatchError):
        BlockVector.from_array(np.zeros(4), [2, 3])


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_monolithic_preserves_frobenius(nr, nc, seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(1, 6, nr)
    cols = rng.integers(1, 6, nc)
    blocks = [[random_csr(rng, (r, c)) if rng.random() < 0.7 else None for c in cols] for r in rows]
    nest = BlockNestMatrix(blocks, rows, cols)
    mono = convert_to_monolithic(nest)
    total = sum(b.frobenius_norm() ** 2 for row in blocks for b in row if b is not None)
    assert abs(mono.frobenius_norm() ** 2 - total) <= 1e-12 * max(total, 1.0)
    dense = mono.to_dense()
    ro, co = nest.row_offsets, nest.col_offsets
    for i in range(nr):
        for j in range(nc):
            assert np.array_equal(dense[ro[i]:ro[i + 1], co[j]:co[j + 1]], nest[i, j].to_dense())


def test_direct_examples():
    x = solve_direct(CsrMatrix.from_dense(np.eye(3)), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(x, [1, 2, 3])
    x = solve_direct(CsrMatrix.from_dense([[2.0, 1.0], [1.0, 3.0]]), np.array([3.0, 4.0]))
    assert np.allclose(x, [1, 1], atol=1e-15)
    with pytest.raises(SingularMatrixError):
        solve_direct(CsrMatrix.from_dense([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 0.0]))


def test_saddle_point_needs_pivoting():
    sol = poisson_lm(4)
    A = sol.monolithic
    b = sol.rhs.to_array()
    x = solve_direct(A, b)
    dense = A.to_dense()
    assert np.allclose(x, np.linalg.solve(dense, b), atol=1e-12)
    n_lam = sol.functions["lambda"].space.num_dofs
    assert not dense[-n_lam:, -n_lam:].any()


def test_krylov_examples():
    D = CsrMatrix.from_dense(np.diag([1.0, 2.0, 5.0, 9.0]))
    x, its, ok = solve_krylov(D, np.ones(4), "cg", tol=1e-12)
    assert ok and its <= 4 and np.allclose(x, 1 / np.array([1, 2, 5, 9]))
    S = CsrMatrix.from_dense([[1.0, 2.0], [2.0, -1.0]])
    x, _, ok = solve_krylov(S, np.array([3.0, 1.0]), "minres", tol=1e-12)
    assert ok and np.allclose(x, [1, 1])
    x, _, ok = solve_krylov(S, np.array([3.0, 1.0]), "gmres", tol=1e-12)
    assert ok and np.allclose(x, [1, 1])
    x, its, ok = solve_krylov(CsrMatrix.from_dense(np.eye(2)), np.zeros(2))
    assert ok and its == 0 and not x.any()
    with pytest.raises(InvalidArgumentError):
        solve_krylov(D, np.ones(4), "bicg")


def test_krylov_reports_nonconvergence():
    sol = poisson_lm(8)
    x, its, ok = solve_krylov(sol.monolithic, sol.rhs.to_array(), "minres", tol=1e-12, maxit=3)
    assert not ok and its <= 3


def test_cg_on_poisson_stiffness():
    sol = poisson_lm(8)
    K = sol.matrix[0, 0]
    b = sol.rhs[0]
    x, _, ok = solve_krylov(K, b, "cg", tol=1e-10)
    assert ok
    y = solve_direct(K, b)
    x12, _, ok12 = solve_krylov(K, b, "cg", tol=1e-12)
    assert ok12 and np.linalg.norm(x12 - y) <= 1e-8 * np.linalg.norm(y)


def test_matrix_market_and_vector_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    A = random_csr(rng, (6, 4))
    path = tmp_path / "a.mtx"
    write_matrix_market(A, path, comment="test")
    B = read_matrix_market(path)
    assert B.shape == A.shape and np.array_equal(B.to_dense(), A.to_dense())
    v = rng.normal(size=5)
    write_vector(v, tmp_path / "v.txt")
    assert np.array_equal(read_vector(tmp_path / "v.txt"), v)
