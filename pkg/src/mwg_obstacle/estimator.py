"""Residual a posteriori error estimator for the MWG obstacle discretisation.

    η² = η₁² + η₂² + η₃² + ‖∇(ψ − u_c)⁺‖² − Σ_{T ∈ C_h} ∫_T λ_h (u_c − ψ)⁺

with u_c the nodal average of u_h0.  Because ∇_w u_h is constant on each
element its divergence vanishes, and the element residual reduces to
f − λ_h.  Interior edge terms are split evenly between the two neighbours
when forming local indicators, so the local indicators sum to η².
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dgspace import (
    ElementConstants,
    barycentric_gradients,
    conforming_part,
    edge_jump_sq,
    edge_quad_points,
    evaluate,
    jump_operator,
    QUAD,
    tri_quad_points,
)


@dataclass
class EstimatorBreakdown:
    eta1_sq: float
    eta2_sq: float
    eta3_sq: float
    pospart_sq: float
    contact_term: float
    local: ElementConstants
    osc: ElementConstants

    @property
    def eta_total(self):
        return float(np.sqrt(self.eta1_sq + self.eta2_sq + self.eta3_sq + self.pospart_sq + self.contact_term))

    def components(self):
        return {
            "eta1": float(np.sqrt(self.eta1_sq)),
            "eta2": float(np.sqrt(self.eta2_sq)),
            "eta3": float(np.sqrt(self.eta3_sq)),
            "pospart": float(np.sqrt(self.pospart_sq)),
            "contact": float(np.sqrt(max(self.contact_term, 0.0))),
        }


def element_residual_sq(mesh, f, lam):
    """Per element h_T² ∫_T (f − λ_T)² dx."""
    pts, wts = tri_quad_points(mesh)
    r = evaluate(f, pts) - np.asarray(lam)[:, None]
    return mesh.diameters**2 * (r**2 * wts).sum(axis=1)


def gradient_jump_sq(mesh, grads):
    """Per interior edge h_e ∫_e ⟦∇_w u⟧² ds for elementwise-constant gradients (zero on ∂Ω)."""
    out = np.zeros(mesh.n_edges)
    e = np.flatnonzero(mesh.interior_edges)
    t1, t2 = mesh.edge_tris[e, 0], mesh.edge_tris[e, 1]
    jump = np.einsum("ij,ij->i", grads[t1] - grads[t2], mesh.edge_normals[e])
    out[e] = mesh.edge_lengths[e] ** 2 * jump**2
    return out


def trace_jump_sq(mesh, values, dirichlet=None):
    """Per edge h_e⁻¹ ∫_e |⟦u0⟧|² ds, with u0 − g on ∂Ω when data is given."""
    if dirichlet is None:
        return edge_jump_sq(mesh, values) / mesh.edge_lengths
    out = edge_jump_sq(mesh, values) / mesh.edge_lengths
    be = np.flatnonzero(mesh.boundary_edges)
    s = (jump_operator(mesh) @ values).reshape(-1, 2)[be]
    pts, wts = edge_quad_points(mesh)
    q = QUAD.edge_points
    trace = s[:, 0:1] * (1.0 - q) + s[:, 1:2] * q
    diff = trace - evaluate(dirichlet, pts[be])
    out[be] = (diff**2 * wts[be]).sum(axis=1) / mesh.edge_lengths[be]
    return out


def obstacle_terms(mesh, u_c, psi, psi_grad, lam, active):
    """Per element ‖∇(ψ − u_c)⁺‖² and −∫_T λ_T (u_c − ψ)⁺ (the latter on contact elements only)."""
    pts, wts = tri_quad_points(mesh)
    lamb = QUAD.tri_points  # (nq, 3)
    uc_q = u_c.local @ lamb.T  # (nt, nq)
    grad_uc = np.einsum("tkd,tk->td", barycentric_gradients(mesh), u_c.local)
    psi_q = evaluate(psi, pts)
    gx, gy = psi_grad(pts[..., 0], pts[..., 1])
    gx = np.broadcast_to(gx, psi_q.shape)
    gy = np.broadcast_to(gy, psi_q.shape)
    pos = psi_q - uc_q > 0.0
    dgx = gx - grad_uc[:, None, 0]
    dgy = gy - grad_uc[:, None, 1]
    pospart = ((dgx**2 + dgy**2) * pos * wts).sum(axis=1)
    contact = -np.minimum(np.asarray(lam), 0.0) * (np.maximum(uc_q - psi_q, 0.0) * wts).sum(axis=1)
    mask = np.zeros(mesh.n_triangles, dtype=bool)
    mask[list(active)] = True
    contact[~mask] = 0.0
    return pospart, contact


def oscillation(mesh, f):
    """Osc(f, T)² = h_T² ‖f − f̄_T‖²_{L²(T)} with f̄_T from the same rule."""
    pts, wts = tri_quad_points(mesh)
    fv = evaluate(f, pts)
    fbar = (fv * wts).sum(axis=1) / mesh.areas
    osc = mesh.diameters**2 * (((fv - fbar[:, None]) ** 2) * wts).sum(axis=1)
    return ElementConstants(mesh, osc, kind="oscillation")


def split_edges_to_elements(mesh, edge_values):
    """Assign each edge quantity half to each neighbour, fully on ∂Ω."""
    out = np.zeros(mesh.n_triangles)
    t1, t2 = mesh.edge_tris[:, 0], mesh.edge_tris[:, 1]
    inner = t2 >= 0
    np.add.at(out, t1, np.where(inner, 0.5, 1.0) * edge_values)
    np.add.at(out, t2[inner], 0.5 * edge_values[inner])
    return out


def estimate(mesh, system, solution, f, psi, psi_grad, dirichlet=None):
    """Full estimator breakdown and local indicators of a solved state."""
    u = solution.u_h
    lam = solution.lambda_h.values
    r1 = element_residual_sq(mesh, f, lam)
    grads = system.weak_gradients(u.values)
    e2 = gradient_jump_sq(mesh, grads)
    e3 = trace_jump_sq(mesh, u.values, dirichlet)
    u_c = conforming_part(u, boundary=dirichlet)
    pos, contact = obstacle_terms(mesh, u_c, psi, psi_grad, lam, solution.active)
    local = r1 + split_edges_to_elements(mesh, e2 + e3) + pos + contact
    return EstimatorBreakdown(
        eta1_sq=float(r1.sum()),
        eta2_sq=float(e2.sum()),
        eta3_sq=float(e3.sum()),
        pospart_sq=float(pos.sum()),
        contact_term=float(contact.sum()),
        local=ElementConstants(mesh, local, kind="indicator"),
        osc=oscillation(mesh, f),
    )
