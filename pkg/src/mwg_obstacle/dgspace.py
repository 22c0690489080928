"""Piecewise-linear discontinuous fields and the discrete weak gradient.

A :class:`DgField` stores ``v0`` by its three vertex values per triangle, in
the local vertex order of ``mesh.triangles``; coefficient ``3*T + k`` is the
value of ``v0|_T`` at local vertex ``k``.  The edge trace ``v_b`` is never
stored: on interior edges it is the two-sided mean of ``v0``; on boundary
edges it is either the one-sided value (``boundary="trace"``, the space
V_h^w) or prescribed data (``boundary="zero"`` or a callable, V_h^{0w}).

Most operations are exposed both as sparse operators acting on the flat
coefficient vector and as convenience functions on fields.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class QuadRules:
    tri_points: np.ndarray  # (nq, 3) barycentric
    tri_weights: np.ndarray  # (nq,), sum 1
    edge_points: np.ndarray  # (ne,) in [0, 1]
    edge_weights: np.ndarray  # (ne,), sum 1


def _dunavant4():
    a1, b1, w1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
    a2, b2, w2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
    pts = [
        (a1, a1, b1), (a1, b1, a1), (b1, a1, a1),
        (a2, a2, b2), (a2, b2, a2), (b2, a2, a2),
    ]
    wts = [w1] * 3 + [w2] * 3
    return np.array(pts), np.array(wts)


def _gauss3():
    x, w = np.polynomial.legendre.leggauss(3)
    return 0.5 * (x + 1.0), 0.5 * w


QUAD = QuadRules(*_dunavant4(), *_gauss3())


def tri_quad_points(mesh, rule=QUAD):
    """Physical quadrature points (nt, nq, 2) and weights (nt, nq)."""
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    pts = np.einsum("qk,tkd->tqd", rule.tri_points, p)
    wts = mesh.areas[:, None] * rule.tri_weights[None, :]
    return pts, wts


def edge_quad_points(mesh, rule=QUAD):
    """Points (ne, nq, 2) along each edge from ``edges[:,0]`` to ``edges[:,1]``, and weights."""
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    s = rule.edge_points
    pts = a[:, None, :] * (1.0 - s)[None, :, None] + b[:, None, :] * s[None, :, None]
    wts = mesh.edge_lengths[:, None] * rule.edge_weights[None, :]
    return pts, wts


def subdivided_rule(level):
    """Composite triangle rule: the degree-4 rule on 4**level congruent sub-triangles."""
    pts, wts = QUAD.tri_points, QUAD.tri_weights
    for _ in range(level):
        # corner maps of the 4 midpoint-subdivision children, barycentric
        e = np.eye(3)
        m = 0.5 * (e[[0, 1, 2]] + e[[1, 2, 0]])  # m01, m12, m20
        kids = [
            (e[0], m[0], m[2]),
            (m[0], e[1], m[1]),
            (m[2], m[1], e[2]),
            (m[1], m[2], m[0]),
        ]
        pts = np.vstack([pts @ np.array(k) for k in kids])
        wts = np.tile(wts, 4) / 4.0
    return QuadRules(pts, wts, QUAD.edge_points, QUAD.edge_weights)


def evaluate(fn, pts):
    """Evaluate a vectorised scalar field ``fn(x, y)`` at (..., 2) points."""
    out = fn(pts[..., 0], pts[..., 1])
    return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1])


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------
class DgField:
    """Piecewise-linear discontinuous function, three vertex values per element."""

    def __init__(self, mesh, values=None):
        self.mesh = mesh
        n = 3 * mesh.n_triangles
        if values is None:
            values = np.zeros(n)
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != (n,):
            raise ValueError(f"expected {n} coefficients, got {values.size}")
        self.values = values

    @classmethod
    def interpolate(cls, mesh, fn):
        return cls(mesh, evaluate(fn, mesh.vertices[mesh.triangles]).ravel())

    @property
    def local(self):
        return self.values.reshape(-1, 3)

    def gradients(self):
        """Elementwise gradient of v0, (nt, 2)."""
        return np.einsum("tkd,tk->td", barycentric_gradients(self.mesh), self.local)

    def __add__(self, other):
        return DgField(self.mesh, self.values + other.values)

    def __sub__(self, other):
        return DgField(self.mesh, self.values - other.values)

    def __mul__(self, alpha):
        return DgField(self.mesh, alpha * self.values)

    __rmul__ = __mul__


class ElementConstants:
    """One value per triangle (multipliers, projections, indicators, oscillation)."""

    KINDS = ("multiplier", "projection", "indicator", "oscillation", "generic")

    def __init__(self, mesh, values=None, kind="generic"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        self.mesh = mesh
        if values is None:
            values = np.zeros(mesh.n_triangles)
        values = np.asarray(values, dtype=float).ravel()
        if values.shape != (mesh.n_triangles,):
            raise ValueError(f"expected {mesh.n_triangles} values, got {values.size}")
        self.values = values
        self.kind = kind

    def __len__(self):
        return len(self.values)


def barycentric_gradients(mesh):
    """(nt, 3, 2) gradients of the three barycentric coordinates."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.n_triangles, 3, 2))
    for k in range(3):
        a = p[:, (k + 1) % 3]
        b = p[:, (k + 2) % 3]
        # rotate the opposite edge inwards and scale by 1 / (2|T|)
        out[:, k, 0] = -(b[:, 1] - a[:, 1])
        out[:, k, 1] = b[:, 0] - a[:, 0]
    return out / (2.0 * mesh.areas[:, None, None])


# ---------------------------------------------------------------------------
# weak gradient
# ---------------------------------------------------------------------------
def weak_gradient_operator(mesh, boundary="trace"):
    """Sparse (Gx, Gy), each (nt, 3 nt), mapping coefficients to ∇_w v.

    ``boundary="trace"`` uses the one-sided value of v0 on boundary edges;
    ``boundary="zero"`` sets the trace to zero there (affine data enters
    through :func:`boundary_gradient_offset`).
    """
    if boundary not in ("trace", "zero"):
        raise ValueError("boundary must be 'trace' or 'zero'")
    nt = mesh.n_triangles
    rows, cols, vx, vy = [], [], [], []
    ids = np.arange(nt)
    n_out = mesh.outward_normals()  # (nt, 3, 2)
    for k in range(3):
        e = mesh.tri_edges[:, k]
        scale = mesh.edge_lengths[e] / mesh.areas  # ∫_e {v} n / |T|
        nrm = n_out[:, k]
        interior = mesh.interior_edges[e]
        own_w = np.where(interior, 0.25, 0.5 if boundary == "trace" else 0.0)
        # own endpoints: local vertices k+1, k+2 ; mean value on e = (v1 + v2) / 2
        for j in ((k + 1) % 3, (k + 2) % 3):
            rows.append(ids)
            cols.append(3 * ids + j)
            vx.append(own_w * scale * nrm[:, 0])
            vy.append(own_w * scale * nrm[:, 1])
        # neighbour endpoints on interior edges
        nb_t = np.where(mesh.edge_tris[e, 0] == ids, mesh.edge_tris[e, 1], mesh.edge_tris[e, 0])
        nb_k = np.where(mesh.edge_tris[e, 0] == ids, mesh.edge_local[e, 1], mesh.edge_local[e, 0])
        sel = interior
        for shift in (1, 2):
            rows.append(ids[sel])
            cols.append(3 * nb_t[sel] + (nb_k[sel] + shift) % 3)
            vx.append(0.25 * scale[sel] * nrm[sel, 0])
            vy.append(0.25 * scale[sel] * nrm[sel, 1])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    shape = (nt, 3 * nt)
    Gx = sp.csr_matrix((np.concatenate(vx), (rows, cols)), shape=shape)
    Gy = sp.csr_matrix((np.concatenate(vy), (rows, cols)), shape=shape)
    Gx.sum_duplicates()
    Gy.sum_duplicates()
    return Gx, Gy


def boundary_gradient_offset(mesh, data):
    """(nt, 2): (1/|T|) Σ_{e ⊂ ∂T ∩ ∂Ω} ∫_e g n ds for boundary data ``g``."""
    out = np.zeros((mesh.n_triangles, 2))
    if data is None:
        return out
    be = np.flatnonzero(mesh.boundary_edges)
    pts, wts = edge_quad_points(mesh)
    integral = (evaluate(data, pts[be]) * wts[be]).sum(axis=1)
    T = mesh.edge_tris[be, 0]
    np.add.at(out, T, integral[:, None] * mesh.edge_normals[be])
    return out / mesh.areas[:, None]


def weak_gradients(field, boundary="trace"):
    """∇_w v on every element, (nt, 2).

    ``boundary`` is ``"trace"``, ``"zero"``, or a callable ``g(x, y)``
    prescribing the trace on ∂Ω.
    """
    mode = boundary if isinstance(boundary, str) else "zero"
    Gx, Gy = weak_gradient_operator(field.mesh, mode)
    g = np.column_stack([Gx @ field.values, Gy @ field.values])
    if callable(boundary):
        g += boundary_gradient_offset(field.mesh, boundary)
    return g


def weak_gradient(field, T, boundary="trace"):
    """∇_w v restricted to triangle ``T`` (a constant 2-vector)."""
    return weak_gradients(field, boundary)[T]


# ---------------------------------------------------------------------------
# jumps
# ---------------------------------------------------------------------------
def jump_operator(mesh):
    """Sparse (2 ne, 3 nt) map to scalar jumps at edge endpoints.

    Row ``2e + i`` gives ``v0|_T1 - v0|_T2`` (or ``v0|_T1`` on ∂Ω) at
    ``edges[e, i]``; the vector jump is that value times ``edge_normals[e]``.
    """
    ne = mesh.n_edges
    rows, cols, vals = [], [], []
    t = mesh.triangles
    for side, sign in ((0, 1.0), (1, -1.0)):
        T = mesh.edge_tris[:, side]
        ok = T >= 0
        e = np.flatnonzero(ok)
        Te = T[ok]
        for i in range(2):
            v = mesh.edges[e, i]
            loc = np.argmax(t[Te] == v[:, None], axis=1)
            rows.append(2 * e + i)
            cols.append(3 * Te + loc)
            vals.append(np.full(len(e), sign))
    J = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * ne, 3 * mesh.n_triangles))
    return J


def edge_jump(field, e):
    """⟦v0⟧ on edge ``e`` as a (2, 2) array: vector jump at both endpoints."""
    mesh = field.mesh
    J = jump_operator(mesh)
    s = (J @ field.values)[2 * e: 2 * e + 2]
    return s[:, None] * mesh.edge_normals[e][None, :]


def jump_energy_weights(mesh, scale=None):
    """Block-diagonal matrix M with Σ_e w_e ∫_e |⟦v⟧|² ds = (Jv)ᵀ M (Jv).

    ``scale`` defaults to 1/h_e; the edge integral of a product of linears is
    h_e/6 [[2, 1], [1, 2]] in the endpoint values.
    """
    h = mesh.edge_lengths
    w = (1.0 / h if scale is None else np.asarray(scale)) * h / 6.0
    ne = mesh.n_edges
    i = np.arange(ne)
    rows = np.concatenate([2 * i, 2 * i + 1, 2 * i, 2 * i + 1])
    cols = np.concatenate([2 * i, 2 * i + 1, 2 * i + 1, 2 * i])
    vals = np.concatenate([2 * w, 2 * w, w, w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * ne, 2 * ne))


def edge_jump_sq(mesh, values):
    """Per-edge ∫_e |⟦v0⟧|² ds (exact), shape (ne,)."""
    s = (jump_operator(mesh) @ values).reshape(-1, 2)
    return mesh.edge_lengths * (s[:, 0] ** 2 + s[:, 0] * s[:, 1] + s[:, 1] ** 2) / 3.0


# ---------------------------------------------------------------------------
# projections and conforming part
# ---------------------------------------------------------------------------
def project_pi0(field):
    """Elementwise mean of v0 (the centroid value for linear v0)."""
    v = field.local
    # offset form keeps the mean of equal values exact
    mean = v[:, 0] + ((v[:, 1] - v[:, 0]) + (v[:, 2] - v[:, 0])) / 3.0
    return ElementConstants(field.mesh, mean, kind="projection")


def lift_pi_inverse(w):
    """Right inverse of :func:`project_pi0`: v0 = w_T on each element."""
    return DgField(w.mesh, np.repeat(w.values, 3))


def vertex_average_operator(mesh):
    """Sparse (nv, 3 nt) nodal averaging over incident elements."""
    t = mesh.triangles.ravel()
    counts = np.bincount(t, minlength=mesh.n_vertices).astype(float)
    return sp.csr_matrix((1.0 / counts[t], (t, np.arange(t.size))), shape=(mesh.n_vertices, t.size))


def conforming_part(field, boundary=None):
    """Continuous P1 field obtained by nodal averaging.

    Interior vertex values are the mean of the incident element values;
    boundary vertex values are 0, or ``boundary(x, y)`` when a callable is
    given.
    """
    mesh = field.mesh
    nodal = vertex_average_operator(mesh) @ field.values
    bv = mesh.boundary_vertices
    if boundary is None:
        nodal[bv] = 0.0
    else:
        nodal[bv] = evaluate(boundary, mesh.vertices[bv])
    return DgField(mesh, nodal[mesh.triangles].ravel())


def nodal_values(field):
    """Vertex values of a conforming field (first incident element wins)."""
    mesh = field.mesh
    out = np.zeros(mesh.n_vertices)
    out[mesh.triangles[::-1].ravel()] = field.local[::-1].ravel()
    return out
