"""Discrete system of the modified weak Galerkin obstacle problem.

    a_h(u, v) = Σ_T ∫_T ∇_w u · ∇_w v dx + Σ_e h_e⁻¹ ∫_e ⟦u0⟧ · ⟦v0⟧ ds

over the space with zero edge trace on ∂Ω.  Optional Dirichlet data ``g``
replaces that zero trace; its contribution is affine in the unknowns and is
moved into the load vector, so ``A`` never depends on ``g``.

Constraints are ``c_T(u) = ∫_T u0 dx >= g_T = ∫_T ψ dx`` for every triangle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .dgspace import (
    DgField,
    QUAD,
    boundary_gradient_offset,
    edge_quad_points,
    evaluate,
    jump_energy_weights,
    jump_operator,
    subdivided_rule,
    tri_quad_points,
    weak_gradient_operator,
)


@dataclass
class SparseSystem:
    mesh: object
    A: sp.csr_matrix
    b: np.ndarray
    obstacle: np.ndarray  # g_T = ∫_T ψ
    A_volume: sp.csr_matrix = field(repr=False)
    A_stab: sp.csr_matrix = field(repr=False)
    Gx: sp.csr_matrix = field(repr=False)
    Gy: sp.csr_matrix = field(repr=False)
    gradient_offset: np.ndarray = field(repr=False)  # ∇_w contribution of Dirichlet data
    dirichlet: object = None

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def constraint_coefficients(self):
        """(nt, 3): c_T weights, |T|/3 for each local coefficient."""
        return np.repeat(self.mesh.areas[:, None] / 3.0, 3, axis=1)

    def constraint_matrix(self):
        """Sparse C with (C v)_T = ∫_T v0 dx."""
        nt = self.mesh.n_triangles
        rows = np.repeat(np.arange(nt), 3)
        return sp.csr_matrix((np.repeat(self.mesh.areas / 3.0, 3), (rows, np.arange(3 * nt))), shape=(nt, 3 * nt))

    def constraint_values(self, u):
        return self.mesh.areas * np.asarray(u).reshape(-1, 3).mean(axis=1)

    def weak_gradients(self, u):
        """∇_w u including Dirichlet data, (nt, 2)."""
        return np.column_stack([self.Gx @ u, self.Gy @ u]) + self.gradient_offset

    def write_matrix_market(self, path):
        scipy.io.mmwrite(str(Path(path)), self.A, symmetry="symmetric")


def load_vector(mesh, f, rule=QUAD):
    """b_i = ∫_T f φ_i for the local vertex basis functions."""
    pts, wts = tri_quad_points(mesh, rule)
    fv = evaluate(f, pts) * wts
    return (fv @ rule.tri_points).ravel()


def assemble(mesh, f, psi, dirichlet=None):
    """Assemble stiffness, load and obstacle data on a conforming mesh."""
    mesh.check_conforming()
    Gx, Gy = weak_gradient_operator(mesh, boundary="zero")
    W = sp.diags(mesh.areas)
    A_vol = (Gx.T @ W @ Gx + Gy.T @ W @ Gy).tocsr()
    J = jump_operator(mesh)
    A_stab = (J.T @ jump_energy_weights(mesh) @ J).tocsr()
    A = (A_vol + A_stab).tocsr()
    A = (0.5 * (A + A.T)).tocsr()

    b = load_vector(mesh, f)
    offset = boundary_gradient_offset(mesh, dirichlet)
    if dirichlet is not None:
        b -= Gx.T @ (mesh.areas * offset[:, 0]) + Gy.T @ (mesh.areas * offset[:, 1])
        # penalty h_e⁻¹ ∫_e g v0 ds on boundary edges
        be = np.flatnonzero(mesh.boundary_edges)
        pts, wts = edge_quad_points(mesh)
        gw = evaluate(dirichlet, pts[be]) * wts[be] / mesh.edge_lengths[be, None]
        s = QUAD.edge_points
        T = mesh.edge_tris[be, 0]
        for i, shape in ((0, 1.0 - s), (1, s)):
            v = mesh.edges[be, i]
            loc = np.argmax(mesh.triangles[T] == v[:, None], axis=1)
            np.add.at(b, 3 * T + loc, gw @ shape)

    pts, wts = tri_quad_points(mesh)
    obstacle = (evaluate(psi, pts) * wts).sum(axis=1)
    return SparseSystem(mesh, A, b, obstacle, A_vol, A_stab, Gx, Gy, offset, dirichlet)


def energy_norm(system, v):
    """sqrt(a_h(v, v)) for a field or coefficient vector."""
    x = v.values if isinstance(v, DgField) else np.asarray(v)
    return float(np.sqrt(max(x @ (system.A @ x), 0.0)))


def stabilization_energy(system, v):
    x = v.values if isinstance(v, DgField) else np.asarray(v)
    return float(x @ (system.A_stab @ x))


def energy_error(mesh, exact_grad, u_h, exact_value=None, dirichlet=None, quad_level=3):
    """Energy-norm distance between an exact solution and a discrete one.

    sqrt( Σ_T ∫_T |∇u − ∇_w u_h|² + Σ_e h_e⁻¹ ∫_e |⟦u_h0 − u⟧|² ).  The exact
    solution is continuous, so it only enters the jumps on ∂Ω, through
    ``exact_value`` (zero if omitted).  ``dirichlet`` is the trace used in
    ∇_w u_h on ∂Ω.  Volume integrals use the degree-4 rule on 4**quad_level
    sub-triangles.
    """
    x = u_h.values if isinstance(u_h, DgField) else np.asarray(u_h)
    Gx, Gy = weak_gradient_operator(mesh, boundary="zero")
    gw = np.column_stack([Gx @ x, Gy @ x]) + boundary_gradient_offset(mesh, dirichlet)
    rule = subdivided_rule(quad_level)
    P = mesh.vertices[mesh.triangles]
    chunk = max(1, 2_000_000 // len(rule.tri_weights))
    total = 0.0
    for lo in range(0, mesh.n_triangles, chunk):
        part = slice(lo, lo + chunk)
        pts = np.einsum("qk,tkd->tqd", rule.tri_points, P[part])
        gx, gy = exact_grad(pts[..., 0], pts[..., 1])
        d2 = (np.asarray(gx) - gw[part, None, 0]) ** 2 + (np.asarray(gy) - gw[part, None, 1]) ** 2
        total += float((d2 @ rule.tri_weights) @ mesh.areas[part])

    s = (jump_operator(mesh) @ x).reshape(-1, 2)
    h = mesh.edge_lengths
    inner = mesh.interior_edges
    total += (h[inner] * (s[inner, 0] ** 2 + s[inner, 0] * s[inner, 1] + s[inner, 1] ** 2) / 3.0 / h[inner]).sum()
    be = mesh.boundary_edges
    epts, ew = edge_quad_points(mesh)
    q = QUAD.edge_points
    uh_b = s[be, 0][:, None] * (1.0 - q) + s[be, 1][:, None] * q
    u_b = evaluate(exact_value, epts[be]) if exact_value is not None else 0.0
    total += (((uh_b - u_b) ** 2) * ew[be] / h[be, None]).sum()
    return float(np.sqrt(total))
