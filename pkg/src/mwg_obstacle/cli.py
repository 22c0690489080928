"""Command line entry point: ``mwg-obstacle --problem example2 --max-levels 10 --out run``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .adapt import AdaptiveRunError, StopRule, loglog_slope, run_adaptive
from .io import CsvLog, write_summary, write_vtk
from .problems import PROBLEMS, get_problem

log = logging.getLogger("mwg_obstacle")

EXIT_USAGE = 2
EXIT_OUTPUT = 3
EXIT_SOLVER = 4


@dataclass
class RunConfig:
    problem: str
    theta: float = 0.4
    stop: str = "max_levels"
    stop_value: float = 10
    uniform: bool = False
    out: str = "out"
    export_vtk: bool = False
    dump_matrices: bool = False
    seed: int = 0

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"--theta must lie in the open interval (0, 1), got {self.theta}")
        if not self.stop_value > 0:
            raise ValueError("stop value must be positive")

    def stop_rule(self):
        if self.stop == "max_levels":
            return StopRule(max_levels=int(self.stop_value))
        if self.stop == "max_dof":
            return StopRule(max_dof=int(self.stop_value))
        return StopRule(eta_below=float(self.stop_value))


def build_parser():
    p = argparse.ArgumentParser(prog="mwg-obstacle", description="Adaptive MWG solver for obstacle problems.")
    p.add_argument("--problem", required=True, help=f"one of: {', '.join(PROBLEMS)}")
    p.add_argument("--theta", type=float, default=0.4, help="Dörfler bulk parameter in (0, 1)")
    stop = p.add_mutually_exclusive_group()
    stop.add_argument("--max-dof", type=int)
    stop.add_argument("--max-levels", type=int)
    stop.add_argument("--eta-below", type=float)
    p.add_argument("--uniform", action="store_true", help="refine every element each level")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--export-vtk", action="store_true", help="write level_k.vtk per level")
    p.add_argument("--dump-matrices", action="store_true", help="write level_k.mtx per level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns):
    if ns.max_dof is not None:
        stop, value = "max_dof", ns.max_dof
    elif ns.eta_below is not None:
        stop, value = "eta_below", ns.eta_below
    else:
        stop, value = "max_levels", ns.max_levels if ns.max_levels is not None else 10
    return RunConfig(ns.problem, ns.theta, stop, value, ns.uniform, ns.out, ns.export_vtk, ns.dump_matrices, ns.seed)


def _slopes(records):
    n = len(records)
    last = min(8, n - 2)
    if last < 2:
        return {"eta_total": None, "energy_error": None, "rows": max(last, 0)}
    ndof = [r.ndof for r in records]
    out = {"eta_total": loglog_slope(ndof, [r.eta_total for r in records], last), "rows": last}
    errs = [r.energy_error for r in records]
    out["energy_error"] = loglog_slope(ndof, errs, last) if all(e is not None for e in errs[-last:]) else None
    return out


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    cfg = config_from_args(ns)
    try:
        cfg.validate()
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"mwg-obstacle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    np.random.seed(cfg.seed)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_log = CsvLog(out / "run.csv")
    except OSError as exc:
        print(f"mwg-obstacle: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_OUTPUT

    def on_level(state):
        csv_log.write(state.record)
        k = state.record.level
        if cfg.export_vtk:
            write_vtk(out / f"level_{k}.vtk", state.mesh, {
                "indicator": state.estimate.local,
                "multiplier": state.solution.lambda_h,
                "mean_u": state.solution.u_h.local.mean(axis=1),
            })
        if cfg.dump_matrices:
            state.system.write_matrix_market(out / f"level_{k}.mtx")

    problem = get_problem(cfg.problem)
    code = 0
    try:
        records = run_adaptive(problem, cfg.theta, cfg.stop_rule(), uniform=cfg.uniform, on_level=on_level)
    except AdaptiveRunError as exc:
        print(f"mwg-obstacle: {exc}", file=sys.stderr)
        records, code = exc.records, EXIT_SOLVER
    finally:
        csv_log.close()
    write_summary(out / "summary.json", asdict(cfg), records, _slopes(records))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
