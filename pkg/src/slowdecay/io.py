"""File export: CSV tables, legacy-ASCII VTK structured grids and run manifests.

Everything written here is deterministic: floats use 17 significant digits,
lines end in LF and manifests carry no timestamps, so identical inputs give
byte-identical files and hashes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import FieldGrid

_FMT = "{:.17g}"
_SLOTS = {"x": 0, "rho": 0, "y": 1, "z": 2}


def _fmt(v: float) -> str:
    return _FMT.format(float(v))


def write_csv(path: str | os.PathLike, columns: Mapping[str, Sequence[float]]) -> Path:
    """Write equal-length numeric columns with a header row."""
    path = Path(path)
    names = list(columns)
    cols = [np.ravel(np.asarray(columns[n], dtype=float)) for n in names]
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns differ in length")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Read a file written by :func:`write_csv` back into float columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def grid_columns(grid: FieldGrid) -> dict[str, np.ndarray]:
    """Flatten a filled grid into coordinate, ``re`` and ``im`` columns (row-major)."""
    if grid.values is None:
        raise ValueError("grid has no samples")
    cols = {name: v.ravel() for name, v in grid.coordinates().items()}
    for name, v in grid.fixed.items():
        cols[name] = np.full(grid.size, float(v))
    vals = grid.values.ravel()
    cols["re"] = vals.real
    cols["im"] = vals.imag
    return cols


def write_grid_csv(path: str | os.PathLike, grid: FieldGrid) -> Path:
    return write_csv(path, grid_columns(grid))


def _positions(grid: FieldGrid) -> np.ndarray:
    """Physical point positions: x (or rho), y, z slots; ``ct`` fills the first free slot."""
    coords = grid.coordinates()
    pts = np.zeros((grid.size, 3))
    used = set()
    for name in grid.axis_order:
        if name in _SLOTS:
            pts[:, _SLOTS[name]] = coords[name].ravel()
            used.add(_SLOTS[name])
    for name in grid.axis_order:
        if name not in _SLOTS:
            slot = next(i for i in range(3) if i not in used)
            pts[:, slot] = coords[name].ravel()
            used.add(slot)
    return pts


def write_vtk(path: str | os.PathLike, grid: FieldGrid, title: str = "slowdecay field") -> Path:
    """Legacy ASCII ``STRUCTURED_GRID`` with ``re`` and ``im`` point scalars.

    The last grid axis varies fastest, so VTK dimensions are the grid shape
    reversed and padded to three.
    """
    if grid.values is None:
        raise ValueError("grid has no samples")
    if len(grid.axes) > 3:
        raise ValueError("VTK export supports at most three grid axes")
    dims = list(reversed(grid.shape)) + [1] * (3 - len(grid.shape))
    pts = _positions(grid)
    vals = grid.values.ravel()
    lines = [
        "# vtk DataFile Version 3.0",
        title.replace("\n", " ")[:255],
        "ASCII",
        "DATASET STRUCTURED_GRID",
        "DIMENSIONS {} {} {}".format(*dims),
        f"POINTS {grid.size} double",
    ]
    lines += [" ".join(_fmt(v) for v in p) for p in pts]
    lines.append(f"POINT_DATA {grid.size}")
    for name, part in (("re", vals.real), ("im", vals.imag)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_fmt(v) for v in part]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_vtk(path: str | os.PathLike) -> dict:
    """Parse a file written by :func:`write_vtk`.

    Returns ``dimensions``, ``points`` (``(N, 3)``) and ``scalars``
    (name -> array).
    """
    tokens = Path(path).read_text(encoding="utf-8").split("\n")
    it = iter(tokens[3:])
    out: dict = {"title": tokens[1], "scalars": {}}
    for line in it:
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key == "DIMENSIONS":
            out["dimensions"] = tuple(int(v) for v in parts[1:4])
        elif key == "POINTS":
            n = int(parts[1])
            out["points"] = np.array([[float(v) for v in next(it).split()] for _ in range(n)])
        elif key == "POINT_DATA":
            npts = int(parts[1])
        elif key == "SCALARS":
            next(it)  # lookup table line
            out["scalars"][parts[1]] = np.array([float(next(it)) for _ in range(npts)])
    return out


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    """Stable JSON: sorted keys, complex as ``{"re", "im"}``, non-finite floats as strings."""
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | os.PathLike, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_manifest(out_dir: str | os.PathLike, command: str, parameters: Mapping, files: Iterable[Path],
                   version: str) -> Path:
    """Write ``run.json`` listing every output with its SHA-256."""
    out_dir = Path(out_dir)
    entries = []
    for f in sorted(Path(p) for p in files):
        entries.append({"path": f.name, "sha256": sha256_file(f), "bytes": f.stat().st_size})
    manifest = {"command": command, "parameters": dict(parameters), "version": version, "outputs": entries}
    return write_json(out_dir / "run.json", manifest)
