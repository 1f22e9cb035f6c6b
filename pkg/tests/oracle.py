"""Brute-force reference integrals built without the element and assembly modules.

Only P1 on straight simplices: a global hat function is evaluated at a point
by finding a cell that contains it and reading the barycentric coordinate of
its vertex.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss


def barycentric_in(verts, x):
    """Barycentric coordinates of x in a simplex given by vertex rows (tdim == gdim)."""
    T = (verts[1:] - verts[0]).T
    lam = np.linalg.solve(T, x - verts[0])
    return np.concatenate([[1 - lam.sum()], lam])


def barycentric_gradients(verts):
    T = (verts[1:] - verts[0]).T
    inv = np.linalg.inv(T)
    g = np.vstack([-inv.sum(axis=0), inv])
    return g


def hat(mesh, i, x, tol=1e-12):
    """Value and gradient of the P1 hat of vertex i at x (gradient from one containing cell)."""
    coords, cells = mesh.coords, mesh.cells
    for cell in cells:
        lam = barycentric_in(coords[cell], x)
        if np.all(lam >= -tol):
            where = np.flatnonzero(cell == i)
            if len(where) == 0:
                return 0.0, np.zeros(mesh.gdim)
            g = barycentric_gradients(coords[cell])
            return float(lam[where[0]]), g[where[0]]
    raise ValueError("point outside mesh")


def triangle_points(verts, m=6):
    """Collapsed Gauss-Legendre points and weights on a physical triangle."""
    t, w = leggauss(m)
    t = (t + 1) / 2
    w = w / 2
    pts, wts = [], []
    area = abs(np.linalg.det(verts[1:] - verts[0])) / 2
    for a, wa in zip(t, w):
        for b, wb in zip(t, w):
            xi, eta = a, b * (1 - a)
            pts.append(verts[0] + xi * (verts[1] - verts[0]) + eta * (verts[2] - verts[0]))
            wts.append(wa * wb * (1 - a) * 2 * area)
    return np.array(pts), np.array(wts)


def segment_points(a, b, m=6):
    t, w = leggauss(m)
    t = (t + 1) / 2
    length = np.linalg.norm(b - a)
    return a + t[:, None] * (b - a), w / 2 * length


def stiffness(mesh):
    n = mesh.num_vertices
    A = np.zeros((n, n))
    for cell in mesh.cells:
        pts, wts = triangle_points(mesh.coords[cell])
        # interior points lie in exactly one cell, so the hat search is unambiguous
        for x, w in zip(pts, wts):
            grads = [hat(mesh, i, x)[1] for i in range(n)]
            for i in range(n):
                for j in range(n):
                    A[i, j] += w * grads[i] @ grads[j]
    return A


def coupling(parent, gamma):
    """Trace coupling int_Gamma phi_i psi_m over all parent/interface vertex pairs."""
    n, m = parent.num_vertices, gamma.num_vertices
    B = np.zeros((n, m))
    for seg in gamma.cells:
        a, b = gamma.coords[seg[0]], gamma.coords[seg[1]]
        pts, wts = segment_points(a, b)
        for x, w in zip(pts, wts):
            for i in range(n):
                phi = hat(parent, i, x)[0]
                if phi == 0.0:
                    continue
                for k in range(m):
                    # P1 on the segment: linear interpolation between its two vertices
                    if k in seg:
                        s = np.linalg.norm(x - gamma.coords[k]) / np.linalg.norm(b - a)
                        B[i, k] += w * phi * (1 - s)
    return B


def poisson_lm_matrix(parent, gamma):
    A = stiffness(parent)
    B = coupling(parent, gamma)
    m = gamma.num_vertices
    return np.block([[A, B], [B.T, np.zeros((m, m))]])
