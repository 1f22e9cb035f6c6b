"""Reference simplices: vertex coordinates, measures and local sub-entity numbering.

Local facet ``i`` of a triangle or tetrahedron is the one opposite local vertex ``i``;
the facets of an interval are its vertices in order.  Edges
of the tetrahedron follow the same convention pairwise (edge ``i`` is the
complement of edge ``5 - i``).
"""

import math

import numpy as np

from .errors import InvalidArgumentError

CELL_KINDS = ("point", "interval", "triangle", "tetrahedron")

_LOCAL_ENTITIES = {
    (1, 0): ((0,), (1,)),
    (2, 0): ((0,), (1,), (2,)),
    (2, 1): ((1, 2), (0, 2), (0, 1)),
    (3, 0): ((0,), (1,), (2,), (3,)),
    (3, 1): ((2, 3), (1, 3), (1, 2), (0, 3), (0, 2), (0, 1)),
    (3, 2): ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)),
}


def cell_kind(tdim):
    try:
        return CELL_KINDS[tdim]
    except (IndexError, TypeError):
        raise InvalidArgumentError(f"no simplex of topological dimension {tdim}") from None


def cell_tdim(kind):
    if kind not in CELL_KINDS:
        raise InvalidArgumentError(f"unknown cell kind {kind!r}")
    return CELL_KINDS.index(kind)


def reference_vertices(kind):
    tdim = cell_tdim(kind)
    verts = np.zeros((tdim + 1, tdim))
    for i in range(tdim):
        verts[i + 1, i] = 1.0
    return verts


def reference_volume(kind):
    return 1.0 / math.factorial(cell_tdim(kind))


def local_entities(tdim, dim):
    """Tuples of local vertex indices for every sub-entity of dimension ``dim``."""
    if not 0 <= dim <= tdim:
        raise InvalidArgumentError(f"entity dimension {dim} outside [0, {tdim}]")
    if dim == tdim:
        return (tuple(range(tdim + 1)),)
    return _LOCAL_ENTITIES[(tdim, dim)]


def num_local_entities(tdim, dim):
    return len(local_entities(tdim, dim))


def barycentric(kind, points):
    """Barycentric coordinates of reference points, shape (n, tdim + 1)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.hstack([1.0 - points.sum(axis=1, keepdims=True), points])


def contains(kind, points, tol=1e-12):
    if cell_tdim(kind) == 0:
        return np.ones(len(np.atleast_2d(points)), dtype=bool)
    return np.all(barycentric(kind, points) >= -tol, axis=1)
