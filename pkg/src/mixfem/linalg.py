"""CSR and block-nest matrices, monolithic conversion and linear solvers."""

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import DimensionMismatchError, InvalidArgumentError, SingularMatrixError, SolverError


class CsrMatrix:
    """Compressed sparse row matrix with sorted, unique column indices per row."""

    def __init__(self, shape, indptr, indices, data):
        self.shape = (int(shape[0]), int(shape[1]))
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        if len(self.indptr) != self.shape[0] + 1:
            raise DimensionMismatchError("row pointer length does not match the row count")

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        indptr, indices, data = kernels.coo_to_csr(rows, cols, vals, shape[0], shape[1])
        return cls(shape, indptr, indices, data)

    @classmethod
    def zeros(cls, shape):
        return cls(shape, np.zeros(shape[0] + 1, dtype=np.int64), [], [])

    @classmethod
    def from_scipy(cls, mat):
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(mat.shape, mat.indptr, mat.indices, mat.data)

    @classmethod
    def from_dense(cls, array):
        return cls.from_scipy(sp.csr_matrix(np.asarray(array, dtype=float)))

    @property
    def n_rows(self):
        return self.shape[0]

    @property
    def n_cols(self):
        return self.shape[1]

    @property
    def nnz(self):
        return len(self.data)

    def to_scipy(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def to_dense(self):
        return self.to_scipy().toarray()

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_cols,):
            raise DimensionMismatchError(f"vector of length {len(x)} for {self.shape} matrix")
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    __matmul__ = matvec

    def transpose(self):
        return CsrMatrix.from_scipy(self.to_scipy().T)

    @property
    def T(self):
        return self.transpose()

    def frobenius_norm(self):
        return float(np.sqrt(np.sum(self.data ** 2)))

    def row_sums(self):
        return np.asarray(self.to_scipy().sum(axis=1)).ravel()

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


class BlockNestMatrix:
    """Grid of optional CSR blocks; ``None`` blocks are zero."""

    def __init__(self, blocks, row_sizes, col_sizes):
        self.blocks = [list(row) for row in blocks]
        self.row_sizes = [int(n) for n in row_sizes]
        self.col_sizes = [int(n) for n in col_sizes]
        if len(self.blocks) != len(self.row_sizes):
            raise DimensionMismatchError("block row count does not match row sizes")
        for i, row in enumerate(self.blocks):
            if len(row) != len(self.col_sizes):
                raise DimensionMismatchError(f"block row {i} has {len(row)} blocks")
            for j, block in enumerate(row):
                if block is not None and block.shape != (self.row_sizes[i], self.col_sizes[j]):
                    raise DimensionMismatchError(
                        f"block ({i},{j}) has shape {block.shape}, expected "
                        f"{(self.row_sizes[i], self.col_sizes[j])}")

    @property
    def shape(self):
        return (sum(self.row_sizes), sum(self.col_sizes))

    @property
    def row_offsets(self):
        return np.concatenate([[0], np.cumsum(self.row_sizes)]).astype(np.int64)

    @property
    def col_offsets(self):
        return np.concatenate([[0], np.cumsum(self.col_sizes)]).astype(np.int64)

    def block(self, i, j):
        b = self.blocks[i][j]
        return b if b is not None else CsrMatrix.zeros((self.row_sizes[i], self.col_sizes[j]))

    def __getitem__(self, ij):
        return self.block(*ij)


class BlockVector:
    def __init__(self, segments):
        self.segments = [np.asarray(s, dtype=float) for s in segments]

    @classmethod
    def zeros(cls, sizes):
        return cls([np.zeros(n) for n in sizes])

    @classmethod
    def from_array(cls, array, sizes):
        offsets = np.cumsum([0] + list(sizes))
        if offsets[-1] != len(array):
            raise DimensionMismatchError("array length does not match block sizes")
        return cls([np.array(array[offsets[k]:offsets[k + 1]]) for k in range(len(sizes))])

    @property
    def sizes(self):
        return [len(s) for s in self.segments]

    def __len__(self):
        return len(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    def to_array(self):
        return np.concatenate(self.segments) if self.segments else np.zeros(0)


def convert_to_monolithic(nest, row_offsets=None, col_offsets=None):
    """Single CSR matrix with block (i, j) placed at (row_offsets[i], col_offsets[j])."""
    row_offsets = nest.row_offsets if row_offsets is None else np.asarray(row_offsets)
    col_offsets = nest.col_offsets if col_offsets is None else np.asarray(col_offsets)
    if len(row_offsets) < len(nest.row_sizes) or len(col_offsets) < len(nest.col_sizes):
        raise DimensionMismatchError("not enough offsets for the block grid")
    rows, cols, vals = [], [], []
    for i, row in enumerate(nest.blocks):
        for j, block in enumerate(row):
            if block is None or block.nnz == 0:
                continue
            r = np.repeat(np.arange(block.n_rows), np.diff(block.indptr))
            rows.append(r + row_offsets[i])
            cols.append(block.indices + col_offsets[j])
            vals.append(block.data)
    shape = nest.shape
    if not rows:
        return CsrMatrix.zeros(shape)
    return CsrMatrix.from_coo(np.concatenate(rows), np.concatenate(cols),
                              np.concatenate(vals), shape)


def _as_scipy(A):
    return A.to_scipy() if isinstance(A, CsrMatrix) else sp.csr_matrix(A)


def solve_direct(A, b):
    """Sparse LU with partial pivoting and a COLAMD column ordering."""
    mat = _as_scipy(A)
    b = np.asarray(b, dtype=float)
    if mat.shape[0] != mat.shape[1]:
        raise DimensionMismatchError(f"matrix is not square: {mat.shape}")
    if b.shape != (mat.shape[0],):
        raise DimensionMismatchError("right-hand side length does not match the matrix")
    try:
        lu = spla.splu(mat.tocsc(), permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from None
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("LU produced non-finite values")
    res = np.linalg.norm(mat @ x - b)
    bound = 1e-10 * (spla.norm(mat) * np.linalg.norm(x) + np.linalg.norm(b))
    if res > bound:
        raise SingularMatrixError(f"LU residual {res:.3e} exceeds {bound:.3e}")
    return x


_KRYLOV = {"cg": spla.cg, "minres": spla.minres, "gmres": spla.gmres}


def solve_krylov(A, b, method="minres", tol=1e-10, maxit=None):
    """Unpreconditioned Krylov solve; returns (x, iterations, converged).

    ``converged`` means the true relative residual ``|b - Ax| / |b|`` is at
    most ``tol``.  Hitting ``maxit`` is reported, not raised.
    """
    if method not in _KRYLOV:
        raise InvalidArgumentError(f"unknown Krylov method {method!r}")
    mat = _as_scipy(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    maxit = 10 * n if maxit is None else int(maxit)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, True
    count = [0]

    def callback(*_):
        count[0] += 1

    x = np.zeros(n)
    rtol = tol
    # restart from the current iterate while the solver's own stopping test
    # is satisfied but the true residual is not
    for _ in range(5):
        remaining = maxit - count[0]
        if remaining <= 0:
            break
        kwargs = {"rtol": rtol, "maxiter": remaining, "callback": callback, "x0": x}
        if method == "gmres":
            kwargs["callback_type"] = "pr_norm"
            kwargs["restart"] = min(n, 200)
            kwargs["maxiter"] = max(1, remaining // kwargs["restart"])
        try:
            x, info = _KRYLOV[method](mat, b, **kwargs)
        except (ValueError, ArithmeticError) as exc:
            raise SolverError(str(exc)) from None
        rel = np.linalg.norm(b - mat @ x) / bnorm
        if rel <= tol:
            return x, count[0], True
        if info != 0:
            break
        rtol = max(rtol * tol / rel, 1e-16)
    return x, count[0], False


def write_matrix_market(A, path, comment=""):
    # scipy's writer does not report a missing directory, so open the file here
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, _as_scipy(A).tocoo(), comment=comment)


def read_matrix_market(path):
    return CsrMatrix.from_scipy(scipy.io.mmread(path))


def write_vector(x, path):
    np.savetxt(path, np.asarray(x, dtype=float), fmt="%.17g")


def read_vector(path):
    return np.loadtxt(path, ndmin=1)
