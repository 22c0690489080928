"""Primal-dual active set solver for the elementwise-mean obstacle constraint.

Each constraint ``∫_T u0 >= ∫_T ψ`` only involves the three coefficients of
``T``.  Writing those coefficients as ``u_T = Q z_T`` with ``z_T[0]`` the
element mean turns every active constraint into a fixed variable, so each
active-set step is a single sparse SPD solve on the remaining unknowns.
The multiplier of ``T`` is read off the eliminated row.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import pyamg
from scipy.sparse.linalg import splu

from .dgspace import DgField, ElementConstants

log = logging.getLogger(__name__)

# u_T = Q z_T, mean(u_T) = z_T[0]; columns 2 and 3 have zero sum
_Q = np.array([[1.0, -1.0, -1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0]])


class SolverError(RuntimeError):
    def __init__(self, message, last=None, kkt_residual=np.nan):
        super().__init__(message)
        self.last = last
        self.kkt_residual = kkt_residual


@dataclass
class ViSolution:
    u_h: DgField
    lambda_h: ElementConstants
    active: frozenset
    iterations: int
    kkt_residual: float

    @property
    def contact_count(self):
        return len(self.active)


def _transform(nt):
    return sp.block_diag([_Q] * nt, format="csr") if nt else sp.csr_matrix((0, 0))


# above this many unknowns LU fill-in gets too costly for one core / a few GB
DIRECT_LIMIT = 60000


def _solve_spd(M, rhs, x0=None, near_null=None):
    n = M.shape[0]
    if n == 0:
        return np.zeros(0)
    if n <= DIRECT_LIMIT:
        lu = splu(M.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
        return lu.solve(rhs)
    ml = pyamg.smoothed_aggregation_solver(M.tocsr(), B=near_null, symmetry="symmetric", max_coarse=500)
    return ml.solve(rhs, x0=x0, tol=1e-14, accel="cg", maxiter=1000)


def kkt_residuals(system, u, mu):
    """(stationarity, infeasibility, complementarity), all relatively scaled."""
    mesh = system.mesh
    areas = mesh.areas
    r = system.A @ u - system.b - np.repeat(mu * areas / 3.0, 3)
    scale = 1.0 + np.abs(system.b).max(initial=0.0)
    gap = system.constraint_values(u) - system.obstacle
    infeas = np.maximum(-gap, 0.0) / (areas * (1.0 + np.abs(system.obstacle / areas)))
    comp = np.abs(mu * gap) / (areas * (1.0 + np.abs(system.obstacle / areas)))
    return float(np.abs(r).max(initial=0.0) / scale), float(infeas.max(initial=0.0)), float(comp.max(initial=0.0))


def solve_vi(system, initial_active=None, max_iter=200, tol=1e-9):
    """Minimise ½uᵀAu − bᵀu subject to ∫_T u0 >= ∫_T ψ for every T.

    Returns a :class:`ViSolution` with ``lambda_h = −μ`` (non-positive).
    Raises :class:`SolverError` if the active set does not settle within
    ``max_iter`` updates.
    """
    mesh = system.mesh
    nt = mesh.n_triangles
    areas = mesh.areas
    P = _transform(nt)
    Ap = (P.T @ system.A @ P).tocsr()
    bp = P.T @ system.b
    target = system.obstacle / areas  # required element means
    mean_idx = 3 * np.arange(nt)

    active = np.zeros(nt, dtype=bool)
    if initial_active is not None:
        active[list(initial_active)] = True
    feas_tol = tol * (1.0 + np.abs(target))

    seen = set()
    monotone = False
    u = np.zeros(3 * nt)
    mu = np.zeros(nt)
    z_prev = np.zeros(3 * nt)
    for it in range(1, max_iter + 1):
        fixed = mean_idx[active]
        free_mask = np.ones(3 * nt, dtype=bool)
        free_mask[fixed] = False
        free = np.flatnonzero(free_mask)
        z = np.zeros(3 * nt)
        z[fixed] = target[active]
        rhs = bp[free] - Ap[free][:, fixed] @ z[fixed]
        near_null = np.zeros((3 * nt, 1))
        near_null[mean_idx] = 1.0
        z[free] = _solve_spd(Ap[free][:, free], rhs, x0=z_prev[free], near_null=near_null[free])
        z_prev = z
        u = P @ z
        mu = np.zeros(nt)
        mu[active] = (Ap[fixed] @ z - bp[fixed]) / areas[active]

        means = u.reshape(-1, 3).mean(axis=1)
        violated = ~active & (means < target - feas_tol)
        keep = active & (mu >= -tol)
        if monotone:
            # drop at most the single worst multiplier per step
            drop = active & ~keep
            keep = active.copy()
            if drop.any():
                worst = np.flatnonzero(drop)[np.argmin(mu[drop])]
                keep[worst] = False
        new_active = keep | violated
        if np.array_equal(new_active, active):
            stat, infeas, comp = kkt_residuals(system, u, mu)
            log.debug("PDAS converged in %d iterations, %d active", it, active.sum())
            lam = ElementConstants(mesh, -mu, kind="multiplier")
            return ViSolution(DgField(mesh, u), lam, frozenset(np.flatnonzero(active).tolist()), it, max(stat, infeas, comp))
        key = new_active.tobytes()
        if key in seen and not monotone:
            log.info("PDAS active set repeated at iteration %d; switching to monotone updates", it)
            monotone = True
        seen.add(key)
        active = new_active

    stat, infeas, comp = kkt_residuals(system, u, mu)
    last = ViSolution(DgField(mesh, u), ElementConstants(mesh, -mu, kind="multiplier"),
                      frozenset(np.flatnonzero(active).tolist()), max_iter, max(stat, infeas, comp))
    raise SolverError(f"active set did not converge in {max_iter} iterations", last, last.kkt_residual)


def multiplier_crosscheck(system, u_h, lambda_h):
    """Relative mismatch between λ_h and [L(q_T) − a_h(u_h, q_T)] / |T|.

    ``q_T`` is the lift of the indicator of ``T``: one on its three
    coefficients, zero elsewhere.
    """
    u = u_h.values if isinstance(u_h, DgField) else np.asarray(u_h)
    lam = lambda_h.values if isinstance(lambda_h, ElementConstants) else np.asarray(lambda_h)
    r = (system.b - system.A @ u).reshape(-1, 3).sum(axis=1)
    lam_hat = r / system.mesh.areas
    return float(np.max(np.abs(lam_hat - lam) / (1.0 + np.abs(lam)), initial=0.0))


def hat_functions(mesh):
    """Sparse (n_interior_vertices, 3 nt) conforming nodal hat functions."""
    t = mesh.triangles.ravel()
    interior = np.flatnonzero(~mesh.boundary_vertices)
    row_of = -np.ones(mesh.n_vertices, dtype=np.int64)
    row_of[interior] = np.arange(len(interior))
    sel = row_of[t] >= 0
    return sp.csr_matrix((np.ones(sel.sum()), (row_of[t][sel], np.flatnonzero(sel))), shape=(len(interior), t.size))


def conforming_residual(system, solution, u_override=None):
    """max over interior hats φ_p of |L(φ) − a_h(u_h, φ) − (λ_h, φ)| / ‖φ‖."""
    u = solution.u_h.values if u_override is None else np.asarray(u_override)
    lam = solution.lambda_h.values
    r = system.b - system.A @ u - np.repeat(lam * system.mesh.areas / 3.0, 3)
    H = hat_functions(system.mesh)
    if H.shape[0] == 0:
        return 0.0
    num = np.abs(H @ r)
    norms = np.sqrt(np.asarray((H @ system.A).multiply(H).sum(axis=1)).ravel())
    return float(np.max(num / norms))
