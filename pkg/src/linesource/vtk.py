"""Legacy ASCII VTK (version 3.0) unstructured-grid output with cell data."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError
from .mesh import SimplicialMesh

_CELL_TYPE = {2: 5, 3: 10}  # VTK_TRIANGLE, VTK_TETRA


def _num(x: float) -> str:
    # repr round-trips and is deterministic across runs
    return repr(float(x))


def render_vtk(mesh: SimplicialMesh, pressure, flux, title: str = "linesource") -> str:
    pressure = np.asarray(pressure, dtype=float)
    flux = np.asarray(flux, dtype=float)
    nc, d = mesh.n_cells, mesh.dim
    if pressure.shape != (nc,):
        raise ValidationError(f"pressure must have shape ({nc},), got {pressure.shape}")
    if flux.shape != (nc, d):
        raise ValidationError(f"flux must have shape ({nc}, {d}), got {flux.shape}")
    pts = np.zeros((len(mesh.vertices), 3))
    pts[:, :d] = mesh.vertices
    q3 = np.zeros((nc, 3))
    q3[:, :d] = flux

    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(pts)} double"]
    lines += [" ".join(_num(v) for v in p) for p in pts]
    k = d + 1
    lines.append(f"CELLS {nc} {nc * (k + 1)}")
    lines += [f"{k} " + " ".join(str(int(i)) for i in c) for c in mesh.cells]
    lines.append(f"CELL_TYPES {nc}")
    lines += [str(_CELL_TYPE[d])] * nc
    lines += [f"CELL_DATA {nc}", "SCALARS u double 1", "LOOKUP_TABLE default"]
    lines += [_num(v) for v in pressure]
    lines.append("VECTORS q double")
    lines += [" ".join(_num(v) for v in q) for q in q3]
    return "\n".join(lines) + "\n"


def write_vtk(mesh: SimplicialMesh, pressure, flux, path, title: str = "linesource") -> Path:
    """Write cell pressures ``u`` and cell flux vectors ``q`` (zero-padded to 3D)."""
    path = Path(path)
    text = render_vtk(mesh, pressure, flux, title)
    try:
        path.write_text(text, encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc.strerror}") from exc
    return path
