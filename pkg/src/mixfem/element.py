"""Continuous Lagrange elements on reference simplices, quadrature and facet maps."""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import InvalidArgumentError, UnsupportedDegreeError, UnsupportedElementError
from .reference import (cell_tdim, contains, local_entities, reference_vertices,
                        reference_volume)

MAX_DEGREE = {"interval": 3, "triangle": 3, "tetrahedron": 2}
MAX_QUADRATURE_DEGREE = 40


def _monomial_exponents(tdim, degree):
    exps = [e for e in itertools.product(range(degree + 1), repeat=tdim) if sum(e) <= degree]
    return np.array(sorted(exps, key=lambda e: (sum(e), tuple(-x for x in e))), dtype=np.int64)


def _lattice_nodes(kind, degree):
    """Equispaced nodes grouped by owning sub-entity: vertices, edges, faces, interior."""
    tdim = cell_tdim(kind)
    verts = reference_vertices(kind)
    nodes, owners = [], []
    for dim in range(tdim + 1):
        for e, ent in enumerate(local_entities(tdim, dim)):
            # interior lattice points of the sub-simplex, in lexicographic order
            for combo in itertools.product(range(1, degree), repeat=dim):
                if dim and sum(combo) >= degree:
                    continue
                if dim == 0:
                    lam = np.zeros(1)
                    lam[0] = 1.0
                else:
                    tail = np.array(combo, dtype=float) / degree
                    lam = np.concatenate([[1.0 - tail.sum()], tail])
                nodes.append(lam @ verts[list(ent)])
                owners.append((dim, e))
    return np.array(nodes).reshape(-1, tdim), owners


class ReferenceElement:
    """Nodal P_k Lagrange element; vector elements interleave components per node."""

    def __init__(self, cell_kind, degree, value_size=1):
        if cell_kind not in MAX_DEGREE:
            raise UnsupportedElementError(f"no Lagrange element on {cell_kind!r}")
        if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= MAX_DEGREE[cell_kind]:
            raise UnsupportedDegreeError(
                f"Lagrange degree {degree} unsupported on {cell_kind} (1..{MAX_DEGREE[cell_kind]})")
        if value_size < 1:
            raise UnsupportedElementError("value_size must be positive")
        self.cell_kind = cell_kind
        self.tdim = cell_tdim(cell_kind)
        self.degree = int(degree)
        self.value_size = int(value_size)
        self.dof_points, self.dof_entity = _lattice_nodes(cell_kind, self.degree)
        self.n_scalar = len(self.dof_points)
        self.n_local = self.n_scalar * self.value_size
        self._exponents = _monomial_exponents(self.tdim, self.degree)
        vander = self._monomials(self.dof_points)
        self._coeffs = np.linalg.inv(vander)
        # scalar node indices owned by each (dim, local entity)
        self.entity_dofs = {d: [[] for _ in local_entities(self.tdim, d)]
                            for d in range(self.tdim + 1)}
        for node, (d, e) in enumerate(self.dof_entity):
            self.entity_dofs[d][e].append(node)

    def __repr__(self):
        vec = f", value_size={self.value_size}" if self.value_size > 1 else ""
        return f"ReferenceElement({self.cell_kind!r}, {self.degree}{vec})"

    def __eq__(self, other):
        return (isinstance(other, ReferenceElement) and self.cell_kind == other.cell_kind
                and self.degree == other.degree and self.value_size == other.value_size)

    def __hash__(self):
        return hash((self.cell_kind, self.degree, self.value_size))

    def num_entity_dofs(self, dim):
        """Scalar nodes per sub-entity of dimension ``dim``."""
        return len(self.entity_dofs[dim][0]) if self.entity_dofs[dim] else 0

    def _monomials(self, points):
        return np.prod(points[:, None, :] ** self._exponents[None, :, :], axis=2)

    def _check(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.tdim:
            raise InvalidArgumentError(
                f"expected points with {self.tdim} coordinates, got shape {points.shape}")
        if not np.all(contains(self.cell_kind, points)):
            raise InvalidArgumentError("tabulation point outside the reference cell")
        return points

    def tabulate_scalar(self, points):
        """Scalar basis values, shape (n_points, n_scalar)."""
        points = self._check(points)
        return self._monomials(points) @ self._coeffs

    def tabulate_scalar_gradient(self, points):
        """Scalar basis reference gradients, shape (n_points, n_scalar, tdim)."""
        points = self._check(points)
        out = np.empty((len(points), self.n_scalar, self.tdim))
        for k in range(self.tdim):
            exps = self._exponents.copy()
            factor = exps[:, k].astype(float)
            exps[:, k] = np.maximum(exps[:, k] - 1, 0)
            dmono = factor * np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
            out[:, :, k] = dmono @ self._coeffs
        return out

    def tabulate(self, points):
        """Basis values, shape (n_points, n_local, value_size)."""
        return self._blocked(self.tabulate_scalar(points))

    def tabulate_gradient(self, points):
        """Reference gradients, shape (n_points, n_local, value_size, tdim)."""
        return self._blocked(self.tabulate_scalar_gradient(points))

    def _blocked(self, scalar):
        vs = self.value_size
        npts, ns = scalar.shape[:2]
        out = np.zeros((npts, ns, vs, vs) + scalar.shape[2:])
        for c in range(vs):
            out[:, :, c, c] = scalar
        return out.reshape((npts, ns * vs, vs) + scalar.shape[2:])


@lru_cache(maxsize=None)
def element(cell_kind, degree, value_size=1):
    return ReferenceElement(cell_kind, degree, value_size)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def num_points(self):
        return len(self.weights)


def _gauss_jacobi01(m, alpha):
    """Gauss-Jacobi rule for weight (1 - x)^alpha on [0, 1]."""
    t, w = roots_jacobi(m, alpha, 0.0)
    return (t + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def _rule(cell_kind, degree):
    tdim = cell_tdim(cell_kind)
    if tdim == 0:
        return QuadratureRule(np.zeros((1, 0)), np.ones(1), degree)
    m = max(1, math.ceil((degree + 1) / 2))
    # collapsed coordinates: x_0 = u_0, x_k = u_k * prod_{l<k} (1 - u_l)
    factors = [_gauss_jacobi01(m, float(tdim - 1 - k)) for k in range(tdim)]
    grids = np.meshgrid(*[f[0] for f in factors], indexing="ij")
    wgrids = np.meshgrid(*[f[1] for f in factors], indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    points = np.empty_like(u)
    scale = np.ones(len(u))
    for k in range(tdim):
        points[:, k] = u[:, k] * scale
        scale = scale * (1.0 - u[:, k])
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


def quadrature_rule(cell_kind, degree):
    """Rule on the reference ``cell_kind`` exact for polynomials of total degree <= ``degree``."""
    cell_tdim(cell_kind)
    if degree < 0:
        raise InvalidArgumentError("quadrature degree must be non-negative")
    if degree > MAX_QUADRATURE_DEGREE:
        raise UnsupportedDegreeError(
            f"quadrature degree {degree} exceeds the maximum {MAX_QUADRATURE_DEGREE}")
    return _rule(cell_kind, int(degree))


@dataclass(frozen=True)
class FacetEmbedding:
    """Affine map x = origin + matrix @ xi from facet to cell reference coordinates."""

    origin: np.ndarray
    matrix: np.ndarray
    vertices: tuple

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        fdim = self.matrix.shape[1]
        if points.ndim < 2:
            points = points.reshape(-1, fdim) if fdim else np.zeros((1, 0))
        return self.origin + points @ self.matrix.T


def facet_embedding(cell_kind, local_facet):
    tdim = cell_tdim(cell_kind)
    if tdim == 0:
        raise InvalidArgumentError("a point has no facets")
    facets = local_entities(tdim, tdim - 1)
    if not 0 <= local_facet < len(facets):
        raise InvalidArgumentError(f"{cell_kind} has no local facet {local_facet}")
    verts = reference_vertices(cell_kind)[list(facets[local_facet])]
    origin = verts[0]
    matrix = (verts[1:] - origin).T
    return FacetEmbedding(origin, matrix.reshape(tdim, tdim - 1), facets[local_facet])


def facet_kind(cell_kind):
    return ("point", "interval", "triangle")[cell_tdim(cell_kind) - 1]


def reference_measure(cell_kind):
    return reference_volume(cell_kind)
