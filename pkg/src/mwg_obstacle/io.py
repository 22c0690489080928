"""Output artifacts: run CSV, JSON summary and legacy VTK meshes."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

CSV_COLUMNS = (
    "level", "ndof", "eta1", "eta2", "eta3", "pospart", "contact", "eta_total",
    "energy_error", "eff_index", "contact_count", "pdas_iters", "wall_s",
)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    # repr gives the shortest round-trip decimal, always with a dot
    return repr(float(value))


def record_row(rec):
    return [
        _fmt(rec.level), _fmt(rec.ndof), _fmt(rec.eta1), _fmt(rec.eta2), _fmt(rec.eta3),
        _fmt(rec.pospart), _fmt(rec.contact), _fmt(rec.eta_total), _fmt(rec.energy_error),
        _fmt(rec.efficiency_index), _fmt(rec.contact_count), _fmt(rec.solver_iterations),
        _fmt(rec.wall_time),
    ]


class CsvLog:
    """Append one row per level, flushing so partial runs keep their rows."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="", encoding="ascii")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(CSV_COLUMNS)
        self._fh.flush()

    def write(self, rec):
        self._writer.writerow(record_row(rec))
        self._fh.flush()

    def close(self):
        self._fh.close()


def read_csv(path):
    with open(path, newline="", encoding="ascii") as fh:
        return list(csv.DictReader(fh))


def write_summary(path, config, records, slopes):
    final = records[-1].__dict__ if records else None
    payload = {"config": config, "levels": len(records), "final": final, "slopes": slopes}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="ascii")


def write_vtk(path, mesh, cell_data=None, title="mwg_obstacle mesh"):
    """Legacy ASCII VTK unstructured grid of triangles with optional cell scalars."""
    cell_data = cell_data or {}
    nv, nt = mesh.n_vertices, mesh.n_triangles
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {nv} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist()]
    lines.append(f"CELLS {nt} {4 * nt}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {nt}")
    lines += ["5"] * nt
    if cell_data:
        lines.append(f"CELL_DATA {nt}")
        for name, values in cell_data.items():
            values = np.asarray(getattr(values, "values", values), dtype=float)
            if values.shape != (nt,):
                raise ValueError(f"cell field {name!r} has wrong length")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [repr(v) for v in values.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_vtk_cells(path):
    """Parse back points, triangles and cell scalars from :func:`write_vtk` output."""
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    i = 0
    pts, tris, data = None, None, {}
    while i < len(tokens):
        line = tokens[i].split()
        if not line:
            i += 1
            continue
        if line[0] == "POINTS":
            n = int(line[1])
            pts = np.array([[float(v) for v in tokens[i + 1 + k].split()] for k in range(n)])[:, :2]
            i += n + 1
        elif line[0] == "CELLS":
            n = int(line[1])
            rows = [list(map(int, tokens[i + 1 + k].split())) for k in range(n)]
            tris = np.array([r[1:] for r in rows])
            i += n + 1
        elif line[0] == "SCALARS":
            name = line[1]
            n = len(tris)
            data[name] = np.array([float(tokens[i + 2 + k]) for k in range(n)])
            i += n + 2
        else:
            i += 1
    return pts, tris, data
