"""Compiled loop implementations of the sparse kernels."""

import numpy as np
from numba import njit


@njit(cache=True)
def _coo_to_csr(rows, cols, vals, n_rows):
    nnz = rows.size
    counts = np.zeros(n_rows + 1, np.int64)
    for k in range(nnz):
        counts[rows[k] + 1] += 1
    for i in range(n_rows):
        counts[i + 1] += counts[i]
    fill = counts[:-1].copy()
    bcols = np.empty(nnz, np.int64)
    bvals = np.empty(nnz, np.float64)
    for k in range(nnz):
        p = fill[rows[k]]
        bcols[p] = cols[k]
        bvals[p] = vals[k]
        fill[rows[k]] += 1
    indptr = np.zeros(n_rows + 1, np.int64)
    indices = np.empty(nnz, np.int64)
    data = np.empty(nnz, np.float64)
    pos = 0
    for i in range(n_rows):
        lo, hi = counts[i], counts[i + 1]
        if hi > lo:
            seg = bcols[lo:hi]
            order = np.argsort(seg, kind="mergesort")
            last = -1
            for t in range(hi - lo):
                c = seg[order[t]]
                v = bvals[lo + order[t]]
                if c == last:
                    data[pos - 1] += v
                else:
                    indices[pos] = c
                    data[pos] = v
                    pos += 1
                    last = c
        indptr[i + 1] = pos
    return indptr, indices[:pos].copy(), data[:pos].copy()


def coo_to_csr(rows, cols, vals, n_rows, n_cols):
    """Sum duplicate (row, col) entries; columns come out sorted within each row."""
    return _coo_to_csr(np.ascontiguousarray(rows, dtype=np.int64),
                       np.ascontiguousarray(cols, dtype=np.int64),
                       np.ascontiguousarray(vals, dtype=np.float64), int(n_rows))


@njit(cache=True)
def _csr_matvec(indptr, indices, data, x):
    n = indptr.size - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        y[i] = acc
    return y


def csr_matvec(indptr, indices, data, x):
    return _csr_matvec(indptr, indices, data, np.ascontiguousarray(x, dtype=np.float64))


@njit(cache=True)
def _scatter_add_vector(target, dofs, values):
    for k in range(dofs.size):
        target[dofs[k]] += values[k]


def scatter_add_vector(target, dofs, values):
    _scatter_add_vector(target, np.ascontiguousarray(dofs, dtype=np.int64).ravel(),
                        np.ascontiguousarray(values, dtype=np.float64).ravel())


@njit(cache=True)
def _zero_duplicate_rows(tensors, row_dofs):
    n_k, n_members, n_rows = row_dofs.shape
    for k in range(n_k):
        for s in range(1, n_members):
            for r in range(n_rows):
                d = row_dofs[k, s, r]
                if d < 0:
                    continue
                dup = False
                for t in range(s):
                    for q in range(n_rows):
                        if row_dofs[k, t, q] == d:
                            dup = True
                            break
                    if dup:
                        break
                if dup:
                    tensors[k, s, r, :] = 0.0


def zero_duplicate_rows(tensors, row_dofs):
    """Zero rows of star member ``s`` whose dof already appears in members ``< s``."""
    _zero_duplicate_rows(tensors, np.ascontiguousarray(row_dofs, dtype=np.int64))
    return tensors
