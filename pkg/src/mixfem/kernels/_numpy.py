"""Vectorised numpy implementations of the sparse kernels."""

import numpy as np


def coo_to_csr(rows, cols, vals, n_rows, n_cols):
    """Sum duplicate (row, col) entries; columns come out sorted within each row."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    if rows.size == 0:
        return indptr, np.zeros(0, dtype=np.int64), np.zeros(0)
    keys = rows * n_cols + cols
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    data = np.add.reduceat(vals[order], starts)
    ukeys = keys[starts]
    urows = ukeys // n_cols
    np.add.at(indptr, urows + 1, 1)
    return np.cumsum(indptr), ukeys % n_cols, data


def csr_matvec(indptr, indices, data, x):
    n_rows = len(indptr) - 1
    row_of = np.repeat(np.arange(n_rows), np.diff(indptr))
    return np.bincount(row_of, weights=data * x[indices], minlength=n_rows)


def scatter_add_vector(target, dofs, values):
    np.add.at(target, np.asarray(dofs).ravel(), np.asarray(values).ravel())


def zero_duplicate_rows(tensors, row_dofs):
    """Zero rows of star member ``s`` whose dof already appears in members ``< s``.

    ``tensors`` has shape (n_K, n_members, n_rows, n_cols) and is modified in
    place; ``row_dofs`` has shape (n_K, n_members, n_rows), with -1 marking
    absent members.
    """
    n_members = row_dofs.shape[1]
    for s in range(1, n_members):
        earlier = row_dofs[:, :s, :].reshape(len(row_dofs), 1, -1)
        seen = np.any(row_dofs[:, s, :, None] == earlier, axis=2) & (row_dofs[:, s, :] >= 0)
        tensors[:, s][seen] = 0.0
    return tensors
