"""Block assembly of forms over meshes related through views.

Every integral is evaluated on "integration rows": one row per integration
entity, or one per (entity, star member) when an argument lives on the mesh
one dimension above the integration mesh.  For each mesh that appears in the
integrand, a placement records which of its cells holds the quadrature points
of each row and the points' reference coordinates in that cell.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .element import (MAX_QUADRATURE_DEGREE, facet_embedding, facet_kind, quadrature_rule)
from .errors import (AbsentMappingError, DegenerateCellError, DimensionMismatchError,
                     InconsistentViewError, InvalidArgumentError, InvalidMeasureError,
                     UnsupportedCodimensionError)
from .forms import (AnalyticCoefficient, Argument, Coefficient, ComponentMul, Constant,
                    Div, Form, Grad, Inner, Product, SpatialCoordinate, Sum, check,
                    estimate_degree, extract_blocks)
from .linalg import BlockNestMatrix, BlockVector, CsrMatrix, write_matrix_market
from .meshview import ABSENT, build_mapping
from .reference import cell_tdim, local_entities, num_local_entities

CHUNK_ENTRIES = 1 << 22


# ---------------------------------------------------------------- geometry

def _affine(coords):
    """Origin, Jacobian, pseudo-determinant and pseudo-inverse of affine simplices.

    ``coords`` has shape (n, tdim + 1, gdim).  The pseudo-inverse maps physical
    offsets back to reference coordinates.
    """
    v0 = coords[:, 0, :]
    jac = np.transpose(coords[:, 1:, :] - v0[:, None, :], (0, 2, 1))
    tdim = jac.shape[2]
    if tdim == 0:
        return v0, jac, np.ones(len(coords)), np.zeros((len(coords), 0, coords.shape[2]))
    jtj = np.einsum("ngi,ngj->nij", jac, jac)
    det = np.sqrt(np.abs(np.linalg.det(jtj)))
    scale = np.max(np.linalg.norm(jac, axis=1), axis=1) ** tdim
    if np.any(det < 1e-14 * scale) or np.any(scale == 0):
        raise DegenerateCellError("degenerate cell: vanishing Jacobian determinant")
    pinv = np.linalg.solve(jtj, np.transpose(jac, (0, 2, 1)))
    return v0, jac, det, pinv


def _pullback(x, v0, pinv):
    return np.einsum("rqg,rtg->rqt", x - v0[:, None, :], pinv)


# --------------------------------------------------------------- placements

class _Placement:
    """Cells of one mesh holding the quadrature points of each row."""

    def __init__(self, mesh, cells, pinv, shared=None, lf=None, facet_ref=None, ref=None):
        self.mesh = mesh
        self.cells = cells
        self.pinv = pinv
        self.shared = shared
        self.lf = lf
        self.facet_ref = facet_ref
        self.ref = ref
        self._tabs = {}

    def take(self, idx):
        return _Placement(self.mesh, self.cells[idx], self.pinv[idx], self.shared,
                          None if self.lf is None else self.lf[idx], self.facet_ref,
                          None if self.ref is None else self.ref[idx])

    def scalar_basis(self, elem):
        """Scalar values (R|1, Q, ns) and reference gradients (R|1, Q, ns, tdim)."""
        key = (elem.cell_kind, elem.degree)
        if key in self._tabs:
            return self._tabs[key]
        if self.shared is not None:
            vals = elem.tabulate_scalar(self.shared)[None]
            grads = elem.tabulate_scalar_gradient(self.shared)[None]
        elif self.facet_ref is not None:
            per_facet = [(elem.tabulate_scalar(p), elem.tabulate_scalar_gradient(p))
                         for p in self.facet_ref]
            vals = np.stack([v for v, _ in per_facet])[self.lf]
            grads = np.stack([g for _, g in per_facet])[self.lf]
        else:
            r, q, t = self.ref.shape
            flat = self.ref.reshape(-1, t)
            vals = elem.tabulate_scalar(flat).reshape(r, q, -1)
            grads = elem.tabulate_scalar_gradient(flat).reshape(r, q, -1, t)
        self._tabs[key] = (vals, grads)
        return vals, grads


def _blocked(scalar, vs, trailing=0):
    """Interleave components: (..., ns, *t) -> (..., ns*vs, vs, *t)."""
    if vs == 1:
        return scalar
    lead = scalar.shape[: scalar.ndim - trailing - 1]
    ns = scalar.shape[scalar.ndim - trailing - 1]
    tail = scalar.shape[scalar.ndim - trailing:]
    out = np.zeros(lead + (ns, vs, vs) + tail)
    index = (Ellipsis, slice(None)) + (None, None) + (slice(None),) * trailing
    for c in range(vs):
        out[index[:2] + (c, c) + index[4:]] = scalar
    return out.reshape(lead + (ns * vs, vs) + tail)


# ---------------------------------------------------------------- stars

@dataclass(frozen=True)
class Star:
    """Cells of the higher-dimensional mesh around one lower-dimensional cell."""

    cell: int
    members: tuple
    local_facets: tuple


def build_stars(lower, higher, cells=None):
    """Star members of ``lower`` cells in ``higher``.

    Returns (members, local_facets), both of shape (n, 2) and padded with -1
    where a cell has a single neighbour.
    """
    if higher.tdim != lower.tdim + 1:
        raise UnsupportedCodimensionError("stars need a mesh exactly one dimension higher")
    cells = np.arange(lower.num_cells) if cells is None else np.asarray(cells)
    facets = build_mapping(lower, higher).cell_map[cells]
    if np.any(facets == ABSENT):
        bad = cells[facets == ABSENT][0]
        raise InconsistentViewError(f"cell {bad} of {lower!r} is not a facet of {higher!r}")
    d = lower.tdim
    f2c = higher.connectivity(d, d + 1)
    c2f = higher.connectivity(d + 1, d).as_array()
    members = np.full((len(cells), 2), -1, dtype=np.int64)
    local = np.full((len(cells), 2), -1, dtype=np.int64)
    counts = np.diff(f2c.offsets)[facets]
    if np.any(counts == 0):
        raise InconsistentViewError("a facet has no adjacent cell in the higher-dimensional mesh")
    for s in range(2):
        has = counts > s
        members[has, s] = f2c.indices[f2c.offsets[facets[has]] + s]
        local[has, s] = np.argmax(c2f[members[has, s]] == facets[has, None], axis=1)
    return members, local


def stars(lower, higher):
    members, local = build_stars(lower, higher)
    return [Star(k, tuple(int(c) for c in m if c >= 0), tuple(int(f) for f in lf if f >= 0))
            for k, (m, lf) in enumerate(zip(members, local))]


# ------------------------------------------------------------ evaluation

class _Context:
    def __init__(self, arity, x, placements, default=None):
        self.arity = arity
        self.x = x
        self.placements = placements
        self.default = default
        self._cache = {}

    def placement(self, mesh):
        p = self.placements.get(mesh.id, self.default)
        if p is None:
            raise InvalidArgumentError(f"{mesh!r} is not placed in this integral")
        return p

    def _pad_arg(self, arr, number):
        if self.arity == 2:
            return arr[:, :, :, None] if number == 0 else arr[:, :, None, :]
        return arr

    def _pad(self, arr):
        return arr.reshape(arr.shape[:2] + (1,) * self.arity + arr.shape[2:])

    def basis(self, space):
        """Values (R|1, Q, N, *shape) and physical gradients (R, Q, N, *shape, gdim)."""
        key = id(space)
        if key not in self._cache:
            pl = self.placement(space.mesh)
            vals, rgrads = pl.scalar_basis(space.element)
            rgrads = np.broadcast_to(rgrads, (len(pl.pinv),) + rgrads.shape[1:])
            pgrads = np.einsum("rqnt,rtg->rqng", rgrads, pl.pinv)
            vs = space.value_size
            self._cache[key] = (_blocked(vals, vs), _blocked(pgrads, vs, trailing=1))
        return self._cache[key]

    def coefficient(self, node):
        key = ("w", id(node.function))
        if key not in self._cache:
            space = node.function.space
            vals, grads = self.basis(space)
            pl = self.placement(space.mesh)
            c = node.function.coefficients[space.dofmap.cell_dofs[pl.cells]]
            v = np.einsum("rqn...,rn->rq...", np.broadcast_to(vals, (len(c),) + vals.shape[1:]), c)
            g = np.einsum("rqn...,rn->rq...", grads, c)
            self._cache[key] = (v, g)
        return self._cache[key]

    def eval(self, e):
        if isinstance(e, Argument):
            return self._pad_arg(self.basis(e.space)[0], e.number)
        if isinstance(e, Coefficient):
            return self._pad(self.coefficient(e)[0])
        if isinstance(e, Constant):
            return e.value.reshape((1, 1) + (1,) * self.arity + e.shape)
        if isinstance(e, AnalyticCoefficient):
            r, q, g = self.x.shape
            vals = np.asarray(e.fn(self.x.reshape(-1, g)), dtype=float)
            return self._pad(np.broadcast_to(vals.reshape((r, q) + e.shape), (r, q) + e.shape))
        if isinstance(e, SpatialCoordinate):
            return self._pad(self.x)
        if isinstance(e, Grad):
            return self.grad(e.children[0])
        if isinstance(e, Div):
            g = self.grad(e.children[0])
            return np.trace(g, axis1=-2, axis2=-1)
        if isinstance(e, Inner):
            a, b = (self.eval(c) for c in e.children)
            nval = len(e.children[0].shape)
            return np.sum(a * b, axis=tuple(range(-nval, 0)))
        if isinstance(e, Product):
            a, b = (self.eval(c) for c in e.children)
            return a * b
        if isinstance(e, ComponentMul):
            s, v = (self.eval(c) for c in e.children)
            return s.reshape(s.shape + (1,) * len(e.children[1].shape)) * v
        if isinstance(e, Sum):
            a, b = (self.eval(c) for c in e.children)
            return a + b
        raise InvalidArgumentError(f"cannot evaluate {type(e).__name__}")

    def grad(self, e):
        if isinstance(e, Argument):
            return self._pad_arg(self.basis(e.space)[1], e.number)
        if isinstance(e, Coefficient):
            return self._pad(self.coefficient(e)[1])
        if isinstance(e, Constant):
            g = self.x.shape[2]
            return np.zeros((1, 1) + (1,) * self.arity + e.shape + (g,))
        if isinstance(e, SpatialCoordinate):
            g = self.x.shape[2]
            return np.eye(g).reshape((1, 1) + (1,) * self.arity + (g, g))
        if isinstance(e, Sum):
            return self.grad(e.children[0]) + self.grad(e.children[1])
        if isinstance(e, Product):
            a, b = e.children
            return self.eval(a)[..., None] * self.grad(b) + self.eval(b)[..., None] * self.grad(a)
        if isinstance(e, ComponentMul):
            s, v = e.children
            sv, ga = self.eval(s), self.grad(s)
            nv = len(v.shape)
            term1 = sv.reshape(sv.shape + (1,) * (nv + 1)) * self.grad(v)
            vv = self.eval(v)
            term2 = vv[..., None] * ga.reshape(ga.shape[:-1] + (1,) * nv + ga.shape[-1:])
            return term1 + term2
        raise InvalidArgumentError(f"gradient of {type(e).__name__} is not supported")


# ---------------------------------------------------------- integration rows

class _Rows:
    """Quadrature geometry and placements for the rows of one integral."""

    def __init__(self, x, wdet, placements, group=None, slot=None, star_mesh=None, n_groups=0):
        self.x = x
        self.wdet = wdet
        self.placements = placements
        self.group = group
        self.slot = slot
        self.star_mesh = star_mesh
        self.n_groups = n_groups

    def __len__(self):
        return len(self.x)

    def take(self, idx):
        return _Rows(self.x[idx], self.wdet[idx],
                     {k: p.take(idx) for k, p in self.placements.items()})


def _cell_entities(measure):
    mesh = measure.domain
    if measure.tag is None:
        return np.arange(mesh.num_cells)
    return measure.subdomain_data.where(measure.tag)


def _facet_entities(measure):
    mesh = measure.domain
    facets = mesh.exterior_facets()
    if measure.tag is not None:
        tagged = measure.subdomain_data.values[facets] == measure.tag
        facets = facets[tagged]
    return facets


def _measure_meshes(integrand):
    args, coefs = [], []
    for node in integrand.traverse():
        if isinstance(node, Argument) and all(m is not node.mesh for m in args):
            args.append(node.mesh)
        elif isinstance(node, Coefficient) and all(m is not node.mesh for m in coefs):
            coefs.append(node.mesh)
    return args, coefs


def _build_rows(measure, integrand, degree):
    mk = measure.domain
    tdim = mk.tdim
    arg_meshes, coef_meshes = _measure_meshes(integrand)
    if measure.kind == "cell":
        rule = quadrature_rule(mk.cell_kind, degree)
        ents = _cell_entities(measure)
        v0, jac, det, pinv = _affine(mk.cell_coordinates(ents))
        x = v0[:, None, :] + np.einsum("qt,rgt->rqg", rule.points, jac)
        wdet = rule.weights[None, :] * det[:, None]
        base = _Placement(mk, ents, pinv, shared=rule.points)
    elif measure.kind == "exterior_facet":
        if tdim == 0:
            raise InvalidMeasureError("a point mesh has no facets")
        rule = quadrature_rule(facet_kind(mk.cell_kind), degree)
        facets = _facet_entities(measure)
        f2c = mk.connectivity(tdim - 1, tdim)
        cells = f2c.indices[f2c.offsets[facets]]
        c2f = mk.connectivity(tdim, tdim - 1).as_array()
        lf = np.argmax(c2f[cells] == facets[:, None], axis=1)
        facet_ref = np.stack([facet_embedding(mk.cell_kind, k)(rule.points)
                              for k in range(num_local_entities(tdim, tdim - 1))])
        v0, jac, _, pinv = _affine(mk.cell_coordinates(cells))
        x = v0[:, None, :] + np.einsum("rqt,rgt->rqg", facet_ref[lf], jac)
        fverts = mk.coords[mk.entity_vertices(tdim - 1)[facets]]
        fdet = _affine(fverts)[2]
        wdet = rule.weights[None, :] * fdet[:, None]
        base = _Placement(mk, cells, pinv, lf=lf, facet_ref=facet_ref)
        ents = cells
    else:
        raise InvalidMeasureError(f"unknown measure kind {measure.kind!r}")

    placements = {mk.id: base}
    n = len(ents)
    star_meshes = [m for m in arg_meshes if m.tdim == tdim + 1]
    if len(star_meshes) > 1:
        raise UnsupportedCodimensionError("at most one argument may live one dimension up")
    rows = _Rows(x, wdet, placements)
    members = None
    if star_meshes:
        if measure.kind != "cell":
            raise InvalidMeasureError("couplings across dimensions need a cell measure")
        ms = star_meshes[0]
        members, _ = build_stars(mk, ms, ents)
        group, slot = np.nonzero(members >= 0)
        rows = _Rows(x[group], wdet[group], {mk.id: base.take(group)},
                     group=group, slot=slot, star_mesh=ms, n_groups=n)
        cells = members[group, slot]
        rows.placements[ms.id] = _placement_by_pullback(ms, cells, rows.x)
        ents = ents[group]
    for m in arg_meshes + coef_meshes:
        if m.id in rows.placements:
            continue
        if m.tdim == tdim:
            view = build_mapping(mk, m)
            cells = view.cell_map[rows.placements[mk.id].cells]
            if np.any(cells == ABSENT):
                raise AbsentMappingError(
                    f"integration over {mk!r} leaves the overlap with {m!r}")
        elif m.tdim == tdim + 1:
            # coefficient one dimension up without a star argument: first star member
            mem, _ = build_stars(mk, m, rows.placements[mk.id].cells)
            cells = mem[:, 0]
        else:
            raise UnsupportedCodimensionError(f"cannot evaluate {m!r} on {mk!r}")
        rows.placements[m.id] = _placement_by_pullback(m, cells, rows.x)
    return rows


def _placement_by_pullback(mesh, cells, x):
    v0, _, _, pinv = _affine(mesh.cell_coordinates(cells))
    ref = _pullback(x, v0, pinv)
    ref[np.abs(ref) < 1e-15] = 0.0
    return _Placement(mesh, cells, pinv, ref=ref)


# ---------------------------------------------------------------- integrals

def _integral_degree(integral, override=None):
    if integral.measure.degree is not None:
        q = integral.measure.degree
    elif override is not None:
        q = override
    else:
        q = estimate_degree(integral.integrand)
    return int(min(max(q, 0), MAX_QUADRATURE_DEGREE))


def _arguments_by_number(integrand):
    args = {}
    for a in integrand.arguments():
        args.setdefault(a.number, a)
    return args


def _chunks(n, per_row):
    size = max(1, CHUNK_ENTRIES // max(per_row, 1))
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def _local_tensors(integrand, rows, arity, spaces):
    """Yield (row slice, local tensors (R, N0[, N1]), per-argument dofs)."""
    q = rows.x.shape[1]
    dims = [V.element.n_local for V in spaces]
    width = int(np.prod(dims)) if dims else 1
    vmax = max([V.value_size for V in spaces] + [1])
    gdim = rows.x.shape[2]
    for sl in _chunks(len(rows), q * width * (vmax * gdim) ** 2):
        sub = rows.take(sl)
        ctx = _Context(arity, sub.x, sub.placements)
        vals = ctx.eval(integrand)
        vals = np.broadcast_to(vals, (len(sub), q) + tuple(dims))
        local = np.einsum("rq,rq...->r...", sub.wdet, vals)
        dofs = [V.dofmap.cell_dofs[sub.placements[V.mesh.id].cells] for V in spaces]
        yield sl, local, dofs


def _integrate(integral, spaces, degree=None):
    """Assemble one integral; spaces are the argument spaces by number.

    Returns COO triplets for bilinear forms, a dense vector for linear forms
    and a float for functionals.
    """
    arity = len(spaces)
    integrand = integral.integrand
    present = _arguments_by_number(integrand)
    for n, V in enumerate(spaces):
        if n in present and present[n].space is not V:
            raise InvalidArgumentError("argument space does not match the block")
    q = _integral_degree(integral, degree)
    rows = _build_rows(integral.measure, integrand, q)

    star_number = None
    if rows.star_mesh is not None:
        star_number = next(n for n, V in enumerate(spaces) if V.mesh is rows.star_mesh)

    if arity == 0:
        return float(sum(local.sum() for _, local, _ in _local_tensors(integrand, rows, 0, [])))

    parts = list(_local_tensors(integrand, rows, arity, list(spaces)))
    if star_number is not None:
        locals_ = np.concatenate([p[1] for p in parts])
        dofs = [np.concatenate([p[2][n] for p in parts]) for n in range(arity)]
        locals_, dofs = _zero_star_duplicates(locals_, dofs, rows, star_number)
        parts = [(None, locals_, dofs)]

    if arity == 1:
        vec = np.zeros(spaces[0].num_dofs)
        for _, local, dofs in parts:
            kernels.scatter_add_vector(vec, dofs[0], local)
        return vec
    r, c, v = [], [], []
    for _, local, (d0, d1) in parts:
        r.append(np.broadcast_to(d0[:, :, None], local.shape).ravel())
        c.append(np.broadcast_to(d1[:, None, :], local.shape).ravel())
        v.append(local.ravel())
    return np.concatenate(r), np.concatenate(c), np.concatenate(v)


def _zero_star_duplicates(local, dofs, rows, star_number):
    """Zero star-member contributions to dofs already scattered for the same cell."""
    arity = local.ndim - 1
    if arity == 2 and star_number == 1:
        local = np.swapaxes(local, 1, 2)
    if arity == 1:
        local = local[:, :, None]
    ng = rows.n_groups
    shape = local.shape[1:]
    grid = np.zeros((ng, 2) + shape)
    grid[rows.group, rows.slot] = local
    star_dofs = np.full((ng, 2, shape[0]), -1, dtype=np.int64)
    star_dofs[rows.group, rows.slot] = dofs[star_number]
    kernels.zero_duplicate_rows(grid, star_dofs)
    local = grid[rows.group, rows.slot]
    if arity == 1:
        local = local[:, :, 0]
    if arity == 2 and star_number == 1:
        local = np.swapaxes(local, 1, 2)
    return np.ascontiguousarray(local), dofs


def _kind_of(integral, spaces):
    mk = integral.measure.domain
    if integral.measure.kind == "exterior_facet":
        return "exterior_facet"
    if any(V.mesh.tdim == mk.tdim + 1 for V in spaces):
        return "codim1"
    return "same_dim"


# ------------------------------------------------------------ block level

def _block_spaces(subform):
    if subform.spaces is not None:
        return list(subform.spaces)
    args = _arguments_by_number_form(subform)
    return [args[n].space for n in sorted(args)]


def _arguments_by_number_form(form):
    out = {}
    for a in form.arguments():
        out.setdefault(a.number, a)
    return out


def assemble_block(subform, quadrature_degree=None, kinds=None):
    """Assemble a (sub)form whose arguments each come from a single space.

    Bilinear forms give a ``CsrMatrix``, linear forms a vector and functionals
    a float.  ``kinds`` restricts the integrals to the named assembly paths.
    """
    spaces = _block_spaces(subform)
    arity = len(spaces)
    for integral in subform.integrals:
        kind = _kind_of(integral, spaces)
        if kinds is not None and kind not in kinds:
            raise InvalidArgumentError(f"integral needs the {kind} assembler")
    if arity == 0:
        return sum(_integrate(i, [], quadrature_degree) for i in subform.integrals)
    if arity == 1:
        vec = np.zeros(spaces[0].num_dofs)
        for integral in subform.integrals:
            vec += _integrate(integral, spaces, quadrature_degree)
        return vec
    shape = (spaces[0].num_dofs, spaces[1].num_dofs)
    triplets = [_integrate(i, spaces, quadrature_degree) for i in subform.integrals]
    if not triplets:
        return CsrMatrix.zeros(shape)
    r, c, v = (np.concatenate(t) for t in zip(*triplets))
    return CsrMatrix.from_coo(r, c, v, shape)


def assemble_block_same_dim(subform, quadrature_degree=None):
    return assemble_block(subform, quadrature_degree, kinds=("same_dim",))


def assemble_block_codim1(subform, quadrature_degree=None):
    return assemble_block(subform, quadrature_degree, kinds=("codim1",))


def assemble_exterior_facet(subform, quadrature_degree=None):
    spaces = _block_spaces(subform)
    if len(spaces) == 2 and spaces[0].mesh is not spaces[1].mesh:
        raise InvalidMeasureError("facet integrals are only assembled on diagonal blocks")
    return assemble_block(subform, quadrature_degree, kinds=("exterior_facet",))


def assemble_scalar(form, quadrature_degree=None):
    return float(assemble_block(form, quadrature_degree))


def assemble_matrix(form, quadrature_degree=None, validate=True):
    """Assemble a bilinear form into a ``BlockNestMatrix``."""
    if validate:
        check(form)
    grid = extract_blocks(form)
    rows = [sub[0].spaces[0].num_dofs for sub in grid]
    cols = [sub.spaces[1].num_dofs for sub in grid[0]]
    blocks = [[None if sub.empty else assemble_block(sub, quadrature_degree) for sub in row]
              for row in grid]
    return BlockNestMatrix(blocks, rows, cols)


def assemble_vector(form, quadrature_degree=None, validate=True):
    if validate:
        check(form)
    return BlockVector([np.zeros(sub.spaces[0].num_dofs) if sub.empty
                        else assemble_block(sub, quadrature_degree)
                        for sub in extract_blocks(form)])


# ----------------------------------------------------------- boundary data

def _bc_block(bc, spaces):
    for i, V in enumerate(spaces):
        if V is bc.space:
            return i
    raise InvalidArgumentError("boundary condition space is not a block of the system")


def apply_bcs(nest, vec, bcs, spaces):
    """Symmetric elimination of Dirichlet dofs, in place; idempotent."""
    n = len(spaces)
    for bc in bcs:
        i = _bc_block(bc, spaces)
        dofs, values = bc.dofs_and_values()
        if len(dofs) == 0:
            continue
        g = np.zeros(spaces[i].num_dofs)
        g[dofs] = values
        mask = np.zeros(spaces[i].num_dofs, dtype=bool)
        mask[dofs] = True
        for k in range(n):
            blk = nest.blocks[k][i]
            if blk is None:
                continue
            mat = blk.to_scipy()
            vec.segments[k] = vec.segments[k] - mat @ g
            coo = mat.tocoo()
            keep = ~mask[coo.col]
            if k == i:
                keep &= ~mask[coo.row]
            nest.blocks[k][i] = CsrMatrix.from_coo(coo.row[keep], coo.col[keep],
                                                   coo.data[keep], mat.shape)
        for j in range(n):
            blk = nest.blocks[i][j]
            if blk is None or j == i:
                continue
            coo = blk.to_scipy().tocoo()
            keep = ~mask[coo.row]
            nest.blocks[i][j] = CsrMatrix.from_coo(coo.row[keep], coo.col[keep],
                                                   coo.data[keep], blk.shape)
        diag = nest.blocks[i][i]
        shape = (spaces[i].num_dofs, spaces[i].num_dofs)
        coo = (diag if diag is not None else CsrMatrix.zeros(shape)).to_scipy().tocoo()
        nest.blocks[i][i] = CsrMatrix.from_coo(
            np.concatenate([coo.row, dofs]), np.concatenate([coo.col, dofs]),
            np.concatenate([coo.data, np.ones(len(dofs))]), shape)
        vec.segments[i][dofs] = values
    return nest, vec


def assemble_system(bilinear, linear, bcs=(), quadrature_degree=None):
    """Block matrix and right-hand side with Dirichlet conditions applied."""
    nest = assemble_matrix(bilinear, quadrature_degree)
    vec = assemble_vector(linear, quadrature_degree)
    if nest.row_sizes != vec.sizes:
        raise DimensionMismatchError("bilinear and linear forms have different test spaces")
    spaces = [row[0].spaces[0] for row in extract_blocks(bilinear)]
    apply_bcs(nest, vec, bcs, spaces)
    return nest, vec


# ------------------------------------------------------ single-cell tensors

class QuadraturePlan:
    """Rule and tabulated scalar bases for evaluating one integrand on single cells.

    Cell plans hold one tabulation per element; facet plans hold one per
    local facet, at the facet rule points embedded in the cell.
    """

    def __init__(self, integrand, cell_kind, kind="cell", degree=None):
        self.integrand = integrand
        self.kind = "exterior_facet" if kind in ("ds", "exterior_facet") else "cell"
        self.cell_kind = cell_kind
        self.degree = estimate_degree(integrand) if degree is None else degree
        base = cell_kind if self.kind == "cell" else facet_kind(cell_kind)
        self.rule = quadrature_rule(base, self.degree)
        args = _arguments_by_number(integrand)
        self.spaces = [args[n].space for n in sorted(args)]
        if self.kind == "cell":
            self.points = [self.rule.points]
        else:
            tdim = cell_tdim(cell_kind)
            self.points = [facet_embedding(cell_kind, k)(self.rule.points)
                           for k in range(num_local_entities(tdim, tdim - 1))]
        self.tabulations = [
            {(V.element.cell_kind, V.element.degree):
             (V.element.tabulate_scalar(p)[None], V.element.tabulate_scalar_gradient(p)[None])
             for V in self.spaces}
            for p in self.points]


def assemble_local_tensor(plan, coords, local_facet=None):
    """Element tensor of ``plan`` on one affine cell with vertex coordinates ``coords``."""
    coords = np.asarray(coords, dtype=float)[None]
    v0, jac, det, pinv = _affine(coords)
    if plan.kind == "cell":
        k = 0
        wdet = plan.rule.weights[None] * det[:, None]
    else:
        if local_facet is None or not 0 <= local_facet < len(plan.points):
            raise InvalidArgumentError("facet plans need a valid local facet")
        k = local_facet
        tdim = coords.shape[1] - 1
        fverts = coords[:, list(local_entities(tdim, tdim - 1)[k]), :]
        wdet = plan.rule.weights[None] * _affine(fverts)[2][:, None]
    pts = plan.points[k]
    placement = _Placement(None, np.zeros(1, dtype=np.int64), pinv, shared=pts)
    placement._tabs = dict(plan.tabulations[k])
    x = v0[:, None, :] + np.einsum("qt,rgt->rqg", pts, jac)
    ctx = _Context(len(plan.spaces), x, {}, default=placement)
    vals = ctx.eval(plan.integrand)
    dims = tuple(V.element.n_local for V in plan.spaces)
    vals = np.broadcast_to(vals, (1, len(pts)) + dims)
    return np.einsum("rq,rq...->r...", wdet, vals)[0]


# ------------------------------------------------------------------ output

def dump_blocks(nest, directory, prefix="A"):
    """Write every present block as Matrix Market ``{prefix}_{i}{j}.mtx``."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, row in enumerate(nest.blocks):
        for j, blk in enumerate(row):
            if blk is None:
                continue
            path = os.path.join(directory, f"{prefix}_{i}{j}.mtx")
            write_matrix_market(blk, path, comment=f"block ({i},{j})")
            paths.append(path)
    return paths
