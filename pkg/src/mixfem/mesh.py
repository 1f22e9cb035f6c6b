"""Simplicial meshes: geometry, topology, connectivity, markers and generators."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import reference
from .errors import InvalidArgumentError

_mesh_ids = itertools.count()


class Adjacency:
    """Ragged adjacency list stored as ``offsets``/``indices`` arrays."""

    def __init__(self, offsets, indices):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array, dtype=np.int64)
        n, k = array.shape
        return cls(np.arange(n + 1) * k, array.ravel())

    def __len__(self):
        return len(self.offsets) - 1

    def links(self, i):
        return self.indices[self.offsets[i]:self.offsets[i + 1]]

    def num_links(self):
        return np.diff(self.offsets)

    def as_array(self):
        """Dense (n, k) view; only valid when every node has ``k`` links."""
        counts = self.num_links()
        if len(counts) and np.any(counts != counts[0]):
            raise InvalidArgumentError("adjacency is not uniform")
        k = int(counts[0]) if len(counts) else 0
        return self.indices.reshape(len(self), k)

    def transpose(self, n_targets):
        """Reverse relation; the sources listed per target are sorted ascending."""
        sources = np.repeat(np.arange(len(self)), self.num_links())
        order = np.argsort(self.indices, kind="stable")
        counts = np.bincount(self.indices, minlength=n_targets)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return Adjacency(offsets, sources[order])

    def __eq__(self, other):
        if not isinstance(other, Adjacency):
            return NotImplemented
        return (np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"Adjacency(n={len(self)}, links={len(self.indices)})"


@dataclass(eq=False)
class MeshGeometry:
    coords: np.ndarray

    @property
    def gdim(self):
        return self.coords.shape[1]


@dataclass(eq=False)
class MeshTopology:
    tdim: int
    cells: np.ndarray
    num_vertices: int
    connectivity: dict = field(default_factory=dict)
    mesh_views: dict = field(default_factory=dict)
    # sorted-vertex tuples of entities of intermediate dimension
    _entities: dict = field(default_factory=dict)

    def mapping(self):
        return self.mesh_views


def _entity_keys(tuples, base):
    keys = np.zeros(len(tuples), dtype=np.int64)
    for col in range(tuples.shape[1]):
        keys = keys * base + tuples[:, col]
    return keys


class Mesh:
    """An immutable simplicial mesh.

    Vertex coordinates live in ``geometry.coords`` (shape ``(n_v, gdim)``),
    cell-to-vertex lists in ``topology.cells``.  Entities of intermediate
    dimension are numbered by lexicographic order of their sorted vertex
    tuples, so numbering is independent of cell order.
    """

    def __init__(self, coords, cells, name=None):
        coords = np.array(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        cells = np.array(cells, dtype=np.int64)
        if cells.ndim != 2 or cells.shape[1] < 1 or cells.shape[1] > 4:
            raise InvalidArgumentError(f"bad cell array shape {cells.shape}")
        tdim = cells.shape[1] - 1
        if tdim > coords.shape[1]:
            raise InvalidArgumentError("topological dimension exceeds geometric dimension")
        if cells.size and (cells.min() < 0 or cells.max() >= len(coords)):
            raise InvalidArgumentError("cell references a missing vertex")
        coords.setflags(write=False)
        cells.setflags(write=False)
        self.id = next(_mesh_ids)
        self.name = name
        self.geometry = MeshGeometry(coords)
        self.topology = MeshTopology(tdim, cells, len(coords))

    # -- basic accessors -------------------------------------------------
    @property
    def tdim(self):
        return self.topology.tdim

    @property
    def gdim(self):
        return self.geometry.gdim

    @property
    def cell_kind(self):
        return reference.cell_kind(self.tdim)

    @property
    def coords(self):
        return self.geometry.coords

    @property
    def cells(self):
        return self.topology.cells

    @property
    def num_vertices(self):
        return self.topology.num_vertices

    @property
    def num_cells(self):
        return len(self.topology.cells)

    def num_entities(self, dim):
        self._check_dim(dim)
        if dim == 0:
            return self.num_vertices
        if dim == self.tdim:
            return self.num_cells
        return len(self.entity_vertices(dim))

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (f"<Mesh{label} id={self.id} {self.cell_kind} gdim={self.gdim} "
                f"vertices={self.num_vertices} cells={self.num_cells}>")

    def _check_dim(self, dim):
        if not isinstance(dim, (int, np.integer)) or not 0 <= dim <= self.tdim:
            raise InvalidArgumentError(f"dimension {dim} outside [0, {self.tdim}]")

    # -- entities and connectivity ---------------------------------------
    def entity_vertices(self, dim):
        """Vertex lists of all entities of ``dim`` (cells keep their local order)."""
        self._check_dim(dim)
        if dim == self.tdim:
            return self.cells
        if dim == 0:
            return np.arange(self.num_vertices)[:, None]
        if dim not in self.topology._entities:
            self._build_entities(dim)
        return self.topology._entities[dim]

    def _build_entities(self, dim):
        local = np.array(reference.local_entities(self.tdim, dim))
        nloc = len(local)
        tuples = np.sort(self.cells[:, local].reshape(-1, dim + 1), axis=1)
        if len(tuples):
            unique, inverse = np.unique(tuples, axis=0, return_inverse=True)
        else:
            unique = np.zeros((0, dim + 1), dtype=np.int64)
            inverse = np.zeros(0, dtype=np.int64)
        unique.setflags(write=False)
        self.topology._entities[dim] = unique
        self.topology.connectivity[(self.tdim, dim)] = Adjacency.from_array(
            inverse.reshape(-1, nloc))

    def entity_index(self, dim, vertex_tuples):
        """Look up entity indices from (unsorted) vertex tuples; -1 where absent."""
        vertex_tuples = np.sort(np.atleast_2d(np.asarray(vertex_tuples, dtype=np.int64)), axis=1)
        if dim == self.tdim:
            table = np.sort(self.cells, axis=1)
            order = np.lexsort(table.T[::-1])
            table = table[order]
        else:
            table = self.entity_vertices(dim)
            order = None
        base = self.num_vertices + 1
        if base ** table.shape[1] >= 2 ** 62:
            lookup = {tuple(row): i for i, row in enumerate(table.tolist())}
            hits = np.array([lookup.get(tuple(row), -1) for row in vertex_tuples.tolist()],
                            dtype=np.int64)
            if order is None:
                return hits
            return np.where(hits >= 0, order[np.maximum(hits, 0)], -1)
        keys = _entity_keys(table, base)
        query = _entity_keys(vertex_tuples, base)
        if len(keys) == 0:
            return np.full(len(query), -1, dtype=np.int64)
        pos = np.minimum(np.searchsorted(keys, query), len(keys) - 1)
        found = keys[pos] == query
        idx = pos if order is None else order[pos]
        return np.where(found, idx, -1)

    def connectivity(self, d1, d2):
        return compute_connectivity(self, d1, d2)

    def exterior_facets(self):
        """Indices of facets adjacent to exactly one cell."""
        f2c = self.connectivity(self.tdim - 1, self.tdim)
        return np.flatnonzero(f2c.num_links() == 1)

    # -- geometry --------------------------------------------------------
    def cell_coordinates(self, cells=None):
        """Vertex coordinates per cell, shape (n, tdim + 1, gdim)."""
        idx = self.cells if cells is None else self.cells[cells]
        return self.coords[idx]

    def entity_midpoints(self, dim):
        return self.coords[self.entity_vertices(dim)].mean(axis=1)

    # -- mesh views ------------------------------------------------------
    @property
    def parent_view(self):
        """The child-to-parent view this mesh was created with, or None."""
        return getattr(self, "_parent_view", None)

    @property
    def parent(self):
        view = self.parent_view
        return None if view is None else view.target

    @property
    def depth(self):
        return 0 if self.parent is None else self.parent.depth + 1

    # -- serialization ---------------------------------------------------
    def to_dict(self):
        return {
            "tdim": int(self.tdim),
            "gdim": int(self.gdim),
            "vertices": self.coords.tolist(),
            "cells": self.cells.tolist(),
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data, name=None):
        coords = np.asarray(data["vertices"], dtype=float).reshape(-1, data["gdim"])
        cells = np.asarray(data["cells"], dtype=np.int64).reshape(-1, data["tdim"] + 1)
        return cls(coords, cells, name=name)

    @classmethod
    def from_json(cls, text, name=None):
        return cls.from_dict(json.loads(text), name=name)


def compute_connectivity(mesh, d1, d2):
    """Return (and cache) the ``d1 -> d2`` relation of ``mesh``.

    Downward relations list sub-entities in reference-local order, so the
    position of a facet in the ``tdim -> tdim-1`` list is its local facet
    index.  Upward relations list entities in ascending index order.
    """
    mesh._check_dim(d1)
    mesh._check_dim(d2)
    conn = mesh.topology.connectivity
    key = (d1, d2)
    if key in conn:
        return conn[key]
    tdim = mesh.tdim
    if d1 == d2:
        n = mesh.num_entities(d1)
        rel = Adjacency(np.arange(n + 1), np.arange(n))
    elif d2 == 0:
        rel = Adjacency.from_array(mesh.entity_vertices(d1))
    elif d1 == tdim:
        mesh.entity_vertices(d2)
        rel = conn[key]
    elif d1 > d2:
        verts = mesh.entity_vertices(d1)
        local = np.array(reference.local_entities(d1, d2))
        sub = verts[:, local].reshape(-1, d2 + 1)
        idx = mesh.entity_index(d2, sub)
        rel = Adjacency.from_array(idx.reshape(len(verts), len(local)))
    else:
        rel = compute_connectivity(mesh, d2, d1).transpose(mesh.num_entities(d2))
    conn[key] = rel
    return rel


@dataclass(eq=False)
class MeshFunction:
    """One unsigned integer tag per mesh entity of dimension ``dim``."""

    mesh: Mesh
    dim: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint64)
        expected = self.mesh.num_entities(self.dim)
        if self.values.shape != (expected,):
            raise InvalidArgumentError(
                f"MeshFunction needs {expected} values for dimension {self.dim}, "
                f"got {self.values.shape}")

    @classmethod
    def constant(cls, mesh, dim, value=0):
        return cls(mesh, dim, np.full(mesh.num_entities(dim), value, dtype=np.uint64))

    def where(self, tag):
        return np.flatnonzero(self.values == tag)


def entity_midpoint(mesh, dim, index):
    n = mesh.num_entities(dim)
    if not 0 <= index < n:
        raise InvalidArgumentError(f"entity {index} out of range for dimension {dim} ({n})")
    return mesh.coords[mesh.entity_vertices(dim)[index]].mean(axis=0)


def mark_entities(mesh, dim, predicate, tag=1):
    """Tag entities of ``dim`` whose midpoint satisfies ``predicate``."""
    mids = mesh.entity_midpoints(dim)
    values = np.fromiter((tag if predicate(p) else 0 for p in mids),
                         dtype=np.uint64, count=len(mids))
    return MeshFunction(mesh, dim, values)


# -- structured generators ---------------------------------------------------

def _check_resolution(n):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"resolution must be a positive integer, got {n!r}")


def unit_interval_mesh(n, name=None):
    _check_resolution(n)
    coords = (np.arange(n + 1) / n)[:, None]
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(coords, cells, name=name)


def unit_square_mesh(n, name=None):
    """Right-diagonal triangulation of the unit square.

    Vertex rows are numbered from the top edge (y = 1) downwards, left to
    right within a row.  Each square is split along its lower-left to
    upper-right diagonal into ``(bl, tr, br)`` and ``(bl, tr, tl)``.
    """
    _check_resolution(n)
    rows, cols = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    coords = np.column_stack([cols.ravel() / n, (n - rows.ravel()) / n])
    r, c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    tl = (r * (n + 1) + c).ravel()
    tr = tl + 1
    bl = tl + n + 1
    br = bl + 1
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    cells[0::2] = np.column_stack([bl, tr, br])
    cells[1::2] = np.column_stack([bl, tr, tl])
    return Mesh(coords, cells, name=name)


def unit_cube_mesh(n, name=None):
    """Kuhn triangulation of the unit cube: 6 tetrahedra per sub-cube, all
    sharing the cube diagonal from (0,0,0) to (1,1,1)."""
    _check_resolution(n)
    k, j, i = np.meshgrid(np.arange(n + 1), np.arange(n + 1), np.arange(n + 1), indexing="ij")
    coords = np.column_stack([i.ravel(), j.ravel(), k.ravel()]) / n
    stride = np.array([1, n + 1, (n + 1) ** 2])
    kk, jj, ii = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    origin = (ii.ravel() * stride[0] + jj.ravel() * stride[1] + kk.ravel() * stride[2])
    tets = []
    for perm in itertools.permutations(range(3)):
        path = [0]
        for axis in perm:
            path.append(path[-1] + stride[axis])
        tets.append(path)
    offsets = np.array(tets)
    cells = (origin[:, None, None] + offsets[None]).reshape(-1, 4)
    return Mesh(coords, cells, name=name)
