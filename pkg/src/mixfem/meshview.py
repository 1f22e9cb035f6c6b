"""Submeshes carved out of a parent mesh, and entity maps between related meshes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptySelectionError, InvalidArgumentError, NestingDepthError,
                     NoCommonParentError, UnsupportedCodimensionError)
from .mesh import Mesh

ABSENT = -1
MAX_DEPTH = 2


@dataclass(eq=False)
class MeshViewMapping:
    """Entity maps from the mesh owning this view into ``target``.

    ``cell_map[c]`` is the index of the target entity matching cell ``c``:
    a target cell for same-dimension views, a target facet for codimension
    one.  Cells without a counterpart hold ``ABSENT``.  ``vertex_map`` is
    only filled for child-to-parent views.
    """

    target: Mesh
    cell_map: np.ndarray
    vertex_map: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.cell_map = np.asarray(self.cell_map, dtype=np.int64)
        self.vertex_map = np.asarray(self.vertex_map, dtype=np.int64)

    @property
    def target_mesh_id(self):
        return self.target.id

    @property
    def is_empty(self):
        return not np.any(self.cell_map != ABSENT)

    @property
    def num_mapped(self):
        return int(np.count_nonzero(self.cell_map != ABSENT))

    def to_dict(self):
        return {"cell_map": self.cell_map.tolist(), "vertex_map": self.vertex_map.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict())


def create_submesh(marker, tag, name=None):
    """Build the submesh made of the entities of ``marker`` carrying ``tag``.

    Child vertices are numbered by ascending parent vertex index and child
    cells by ascending parent entity index; each child cell keeps the vertex
    order of its parent entity (sorted, for facets).
    """
    parent = marker.mesh
    dim = marker.dim
    if dim not in (parent.tdim, parent.tdim - 1) or dim < 0:
        raise UnsupportedCodimensionError(
            f"submeshes of dimension {dim} from a {parent.tdim}D mesh are not supported")
    if parent.depth >= MAX_DEPTH:
        raise NestingDepthError(f"cannot nest submeshes deeper than {MAX_DEPTH} levels")
    entities = marker.where(tag)
    if len(entities) == 0:
        raise EmptySelectionError(f"no entity of dimension {dim} carries tag {tag}")

    entity_vertices = parent.entity_vertices(dim)[entities]
    vertex_map, local_cells = np.unique(entity_vertices, return_inverse=True)
    local_cells = local_cells.reshape(entity_vertices.shape)
    child = Mesh(parent.coords[vertex_map], local_cells, name=name)
    view = MeshViewMapping(parent, entities, vertex_map)
    child.topology.mesh_views[parent.id] = view
    child._parent_view = view
    return child


def _root_relation(mesh):
    """(root, vertex map into root, cell -> root entity map) for ``mesh``."""
    if mesh.parent is None:
        return mesh, np.arange(mesh.num_vertices), np.arange(mesh.num_cells)
    view = mesh.parent_view
    root, parent_vertices, _ = _root_relation(view.target)
    vertex_map = parent_vertices[view.vertex_map]
    if view.target is root:
        return root, vertex_map, view.cell_map
    entities = root.entity_index(mesh.tdim, vertex_map[mesh.cells])
    return root, vertex_map, entities


def build_mapping(mesh_i, mesh_j):
    """Return the view from ``mesh_i`` cells into ``mesh_j`` entities.

    The view is cached in ``mesh_i``'s topology; repeated calls return the
    same object.  Both meshes must descend from the same root mesh and
    ``mesh_i`` must have the same topological dimension as ``mesh_j`` or
    one less.
    """
    views = mesh_i.topology.mesh_views
    if mesh_j.id in views:
        return views[mesh_j.id]

    root_i, vmap_i, ent_i = _root_relation(mesh_i)
    root_j, vmap_j, ent_j = _root_relation(mesh_j)
    if root_i is not root_j:
        raise NoCommonParentError(f"{mesh_i!r} and {mesh_j!r} do not share a parent mesh")
    root = root_i
    di, dj = mesh_i.tdim, mesh_j.tdim

    inverse_j = np.full(root.num_entities(dj), ABSENT, dtype=np.int64)
    inverse_j[ent_j] = np.arange(len(ent_j))

    if di == dj:
        cell_map = inverse_j[ent_i]
    elif di == dj - 1:
        cell_map = _codim1_cell_map(root, mesh_i, ent_i, vmap_i, mesh_j, vmap_j, inverse_j)
    else:
        raise UnsupportedCodimensionError(
            f"cannot map {di}D cells into a {dj}D mesh")

    view = MeshViewMapping(mesh_j, cell_map)
    views[mesh_j.id] = view
    return view


def _codim1_cell_map(root, mesh_i, ent_i, vmap_i, mesh_j, vmap_j, inverse_j):
    di, dj = mesh_i.tdim, mesh_j.tdim
    up = root.connectivity(di, dj)
    cell_facets = mesh_j.connectivity(dj, dj - 1)
    facet_vertices_j = mesh_j.entity_vertices(dj - 1)
    root_cells_i = np.sort(vmap_i[mesh_i.cells], axis=1)
    cell_map = np.full(mesh_i.num_cells, ABSENT, dtype=np.int64)
    for c, entity in enumerate(ent_i):
        if entity == ABSENT:
            continue
        target = root_cells_i[c]
        for root_cell in up.links(entity):
            cj = inverse_j[root_cell]
            if cj == ABSENT:
                continue
            for fj in cell_facets.links(cj):
                if np.array_equal(np.sort(vmap_j[facet_vertices_j[fj]]), target):
                    cell_map[c] = fj
                    break
            if cell_map[c] != ABSENT:
                break
    return cell_map


def inverse_cell_map(view, n_target):
    """Dense inverse of ``view.cell_map`` over ``n_target`` target entities."""
    if n_target < 0:
        raise InvalidArgumentError("negative target size")
    inverse = np.full(n_target, ABSENT, dtype=np.int64)
    mapped = view.cell_map != ABSENT
    inverse[view.cell_map[mapped]] = np.flatnonzero(mapped)
    return inverse
