"""SOLVE -> ESTIMATE -> MARK -> REFINE loop."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assembly import assemble, energy_error
from .estimator import estimate
from .mesh import bisect, build_initial_mesh
from .solver import SolverError, solve_vi

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    level: int
    ndof: int
    eta1: float
    eta2: float
    eta3: float
    pospart: float
    contact: float
    eta_total: float
    energy_error: Optional[float]
    efficiency_index: Optional[float]
    contact_count: int
    solver_iterations: int
    wall_time: float


@dataclass(frozen=True)
class StopRule:
    """Stop after ``max_levels`` levels, once ndof >= ``max_dof``, or once η <= ``eta_below``."""
    max_levels: Optional[int] = None
    max_dof: Optional[int] = None
    eta_below: Optional[float] = None
    level_cap: int = 60

    def done(self, record):
        if self.max_levels is not None and record.level + 1 >= self.max_levels:
            return True
        if self.max_dof is not None and record.ndof >= self.max_dof:
            return True
        if self.eta_below is not None and record.eta_total <= self.eta_below:
            return True
        return record.level + 1 >= self.level_cap


@dataclass
class LevelState:
    """Everything computed on one level; handed to the ``on_level`` hook."""
    mesh: object
    system: object
    solution: object
    estimate: object
    record: RunRecord
    marked: np.ndarray = field(default=None)


class AdaptiveRunError(RuntimeError):
    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


def dorfler_mark(local, theta):
    """Smallest set of elements whose indicators sum to at least theta * total.

    Elements are taken greedily by descending indicator, ties by lower id.
    Returns a sorted int array; empty if every indicator is zero.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    eta = np.asarray(getattr(local, "values", local), dtype=float)
    if np.any(eta < 0):
        raise ValueError("indicators must be non-negative")
    total = eta.sum()
    if total <= 0.0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(eta.size), -eta))
    csum = np.cumsum(eta[order])
    k = int(np.searchsorted(csum, theta * total * (1.0 - 1e-14), side="left")) + 1
    return np.sort(order[: min(k, eta.size)])


def run_adaptive(problem, theta=0.4, stop=StopRule(max_levels=10), uniform=False, mesh=None, on_level=None):
    """Run the adaptive loop and return one RunRecord per level.

    Each solve is warm started from the previous contact set, children
    inheriting the state of their parent.  Solver failure raises
    :class:`AdaptiveRunError` carrying the records produced so far.
    """
    mesh = build_initial_mesh(problem.domain) if mesh is None else mesh
    records = []
    warm = None
    level = 0
    while True:
        t0 = time.perf_counter()
        system = assemble(mesh, problem.f, problem.psi, problem.dirichlet)
        try:
            sol = solve_vi(system, initial_active=warm)
        except SolverError as exc:
            raise AdaptiveRunError(f"solver failed on level {level}: {exc}", records) from exc
        est = estimate(mesh, system, sol, problem.f, problem.psi, problem.psi_grad, problem.dirichlet)
        err = eff = None
        if problem.exact is not None:
            err = energy_error(mesh, problem.exact.grad, sol.u_h, exact_value=problem.exact.u, dirichlet=problem.dirichlet)
            eff = est.eta_total / err if err > 0 else None
            if eff is None:
                err = None
        comps = est.components()
        rec = RunRecord(
            level=level, ndof=mesh.ndof, eta_total=est.eta_total,
            energy_error=err, efficiency_index=eff, contact_count=sol.contact_count,
            solver_iterations=sol.iterations, wall_time=0.0, **comps,
        )
        stop_now = stop.done(rec)
        marked = None
        if not stop_now:
            marked = np.arange(mesh.n_triangles) if uniform else dorfler_mark(est.local, theta)
            if marked.size == 0:
                stop_now = True
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
        log.info("level %d ndof %d eta %.4e err %s its %d", level, rec.ndof, rec.eta_total, err, sol.iterations)
        if on_level is not None:
            on_level(LevelState(mesh, system, sol, est, rec, marked))
        if stop_now:
            return records
        mesh, parents = bisect(mesh, marked, return_parents=True)
        was_active = np.zeros(len(parents) and parents.max() + 1, dtype=bool)
        was_active[list(sol.active)] = True
        warm = set(np.flatnonzero(was_active[parents]).tolist())
        level += 1


def loglog_slope(ndof, values, last=8):
    """Least-squares slope of log10(values) against log10(ndof) over the last rows."""
    x = np.log10(np.asarray(ndof, dtype=float))[-last:]
    y = np.log10(np.asarray(values, dtype=float))[-last:]
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])
