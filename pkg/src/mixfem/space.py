"""Lagrange function spaces, dof maps, discrete functions and Dirichlet conditions."""

import csv
from dataclasses import dataclass

import numpy as np

from .element import element as make_element
from .errors import (AbsentMappingError, DimensionMismatchError, InvalidArgumentError,
                     UnsupportedElementError)
from .meshview import ABSENT
from .reference import barycentric, local_entities


@dataclass(frozen=True, eq=False)
class DofMap:
    """Cell-to-global dof table.

    ``cell_dofs[c, i]`` is the global index of local dof ``i`` on cell ``c``.
    ``dof_coords`` holds the physical node location of every global dof.
    """

    cell_dofs: np.ndarray
    global_dim: int
    dof_coords: np.ndarray
    value_size: int = 1

    @property
    def num_cells(self):
        return len(self.cell_dofs)

    def cell(self, c):
        return self.cell_dofs[c]


def _build_dofmap(mesh, elem):
    tdim = mesh.tdim
    ncells = mesh.num_cells
    vs = elem.value_size
    scalar_dofs = np.empty((ncells, elem.n_scalar), dtype=np.int64)
    offset = 0
    for dim in range(tdim + 1):
        per = elem.num_entity_dofs(dim)
        if per == 0:
            continue
        if dim == tdim:
            entities = np.arange(ncells)[:, None]
        else:
            entities = mesh.connectivity(tdim, dim).as_array()
        for e, local in enumerate(elem.entity_dofs[dim]):
            base = offset + entities[:, e] * per
            slots = np.tile(np.arange(per), (ncells, 1))
            if dim == 1 and tdim > 1 and per > 1:
                # orient edge-interior dofs from the lower to the higher global vertex
                a, b = local_entities(tdim, 1)[e]
                flip = mesh.cells[:, a] > mesh.cells[:, b]
                slots[flip] = slots[flip, ::-1]
            scalar_dofs[:, local] = base[:, None] + slots
        offset += per * (mesh.num_entities(dim) if dim < tdim else ncells)
    n_scalar_global = offset

    node_coords = np.empty((n_scalar_global, mesh.gdim))
    verts = mesh.cell_coordinates()
    jac = verts[:, 1:, :] - verts[:, :1, :]
    phys = verts[:, None, 0, :] + np.einsum("nk,ckg->cng", elem.dof_points, jac)
    node_coords[scalar_dofs.ravel()] = phys.reshape(-1, mesh.gdim)

    cell_dofs = (scalar_dofs[:, :, None] * vs + np.arange(vs)).reshape(ncells, -1)
    dof_coords = np.repeat(node_coords, vs, axis=0)
    for arr in (cell_dofs, dof_coords):
        arr.setflags(write=False)
    return DofMap(cell_dofs, n_scalar_global * vs, dof_coords, vs)


class FunctionSpace:
    def __init__(self, mesh, element, dofmap, name=None):
        if element.cell_kind != mesh.cell_kind:
            raise UnsupportedElementError(
                f"{element!r} does not match {mesh.cell_kind} cells of {mesh!r}")
        self.mesh = mesh
        self.element = element
        self.dofmap = dofmap
        self.name = name

    @property
    def degree(self):
        return self.element.degree

    @property
    def value_size(self):
        return self.element.value_size

    @property
    def num_dofs(self):
        return self.dofmap.global_dim

    def __repr__(self):
        return f"FunctionSpace({self.mesh.name!r}, P{self.degree}, value_size={self.value_size})"


def build_function_space(mesh, family="lagrange", degree=1, value_size=1, name=None):
    if family.lower() not in ("lagrange", "cg", "p"):
        raise UnsupportedElementError(f"unsupported element family {family!r}")
    elem = make_element(mesh.cell_kind, degree, value_size)
    return FunctionSpace(mesh, elem, _build_dofmap(mesh, elem), name=name)


class MixedFunctionSpace:
    """Ordered tuple of spaces; the position of a space is its block index."""

    def __init__(self, *spaces):
        if len(spaces) == 1 and isinstance(spaces[0], (list, tuple)):
            spaces = tuple(spaces[0])
        if not spaces:
            raise InvalidArgumentError("a mixed space needs at least one subspace")
        self.subspaces = tuple(spaces)
        self.offsets = np.concatenate([[0], np.cumsum([V.num_dofs for V in spaces])]).astype(np.int64)

    def __len__(self):
        return len(self.subspaces)

    def __getitem__(self, i):
        return self.subspaces[i]

    def __iter__(self):
        return iter(self.subspaces)

    @property
    def num_dofs(self):
        return int(self.offsets[-1])

    def block_sizes(self):
        return [V.num_dofs for V in self.subspaces]


class Function:
    def __init__(self, space, coefficients=None, name=None):
        self.space = space
        if coefficients is None:
            coefficients = np.zeros(space.num_dofs)
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (space.num_dofs,):
            raise DimensionMismatchError(
                f"expected {space.num_dofs} coefficients, got shape {coefficients.shape}")
        self.coefficients = coefficients
        self.name = name

    def eval_reference(self, cell, ref_points):
        """Values at reference points of one cell, shape (n_points, value_size)."""
        dofs = self.space.dofmap.cell_dofs[cell]
        return np.einsum("pnv,n->pv", self.space.element.tabulate(ref_points),
                         self.coefficients[dofs])

    def to_csv(self, path):
        coords = self.space.dofmap.dof_coords
        header = ["dof_index"] + ["x", "y", "z"][: coords.shape[1]] + ["value"]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, (x, v) in enumerate(zip(coords, self.coefficients)):
                writer.writerow([i, *(repr(float(c)) for c in x), repr(float(v))])


def _evaluate_values(value, points, value_size):
    """Evaluate a constant or vectorised callable at points; returns (n, value_size)."""
    n = len(points)
    if callable(value):
        out = np.asarray(value(points), dtype=float)
    else:
        out = np.asarray(value, dtype=float)
    if out.ndim == 0:
        out = np.full((n, value_size), float(out))
    elif value_size > 1 and out.shape == (value_size,):
        out = np.broadcast_to(out, (n, value_size))
    return np.asarray(out, dtype=float).reshape(n, value_size)


def interpolate(space, value, name=None):
    """Nodal interpolant of a constant or vectorised ``value(x[n, gdim])``."""
    vs = space.value_size
    nodes = space.dofmap.dof_coords[::vs]
    vals = _evaluate_values(value, nodes, vs)
    return Function(space, vals.reshape(-1), name=name)


class DirichletBC:
    """Prescribed values on the closure of exterior facets whose midpoint satisfies ``region``."""

    def __init__(self, space, value, region=None):
        self.space = space
        self.value = value
        self.region = region if region is not None else (lambda x: True)
        self._cache = None

    def dofs_and_values(self):
        if self._cache is None:
            self._cache = collect_bc_dofs(self)
        return self._cache


def _facet_closure_nodes(elem):
    tdim = elem.tdim
    lam = barycentric(elem.cell_kind, elem.dof_points)
    support = lam > 1e-12
    out = []
    for facet in local_entities(tdim, tdim - 1):
        outside = np.ones(tdim + 1, dtype=bool)
        outside[list(facet)] = False
        out.append(np.flatnonzero(~np.any(support[:, outside], axis=1)))
    return out


def collect_bc_dofs(bc):
    """Sorted constrained dofs and their prescribed values."""
    space = bc.space
    mesh = space.mesh
    tdim = mesh.tdim
    elem = space.element
    vs = elem.value_size
    facets = mesh.exterior_facets()
    if len(facets):
        mids = mesh.entity_midpoints(tdim - 1)[facets]
        facets = facets[np.fromiter((bool(bc.region(p)) for p in mids), dtype=bool, count=len(facets))]
    if len(facets) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    f2c = mesh.connectivity(tdim - 1, tdim)
    c2f = mesh.connectivity(tdim, tdim - 1).as_array()
    closure = _facet_closure_nodes(elem)
    nodes = []
    for f in facets:
        c = f2c.links(f)[0]
        local_facet = int(np.flatnonzero(c2f[c] == f)[0])
        local = closure[local_facet]
        nodes.append(space.dofmap.cell_dofs[c].reshape(-1, vs)[local, 0] // vs)
    nodes = np.unique(np.concatenate(nodes))
    vals = _evaluate_values(bc.value, space.dofmap.dof_coords[nodes * vs], vs)
    dofs = (nodes[:, None] * vs + np.arange(vs)).ravel()
    return dofs, vals.ravel()


def transfer_cell_dofs(space_i, view, foreign_cell):
    """Global dofs of ``space_i`` on the cell that ``view`` assigns to ``foreign_cell``.

    ``view`` must map the foreign mesh's cells onto cells of ``space_i.mesh``.
    Accepts a single index or an array of indices.
    """
    if view.target is not space_i.mesh:
        raise InvalidArgumentError("view does not target the mesh of the space")
    cells = view.cell_map[np.asarray(foreign_cell)]
    if np.any(cells == ABSENT):
        raise AbsentMappingError(f"cell {foreign_cell} has no counterpart in {space_i.mesh!r}")
    return space_i.dofmap.cell_dofs[cells]
