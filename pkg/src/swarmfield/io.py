"""CSV readers/writers. Every file starts with the schema tag line."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .grid import Grid, make_grid

CSV_TAG = "# swarmfield-csv v1"


def write_table(
    path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[object]]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(CSV_TAG + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_columns(path: str | Path, data: Mapping[str, Sequence[float]]) -> Path:
    cols = list(data)
    n = {len(v) for v in data.values()}
    if len(n) > 1:
        raise InputError(f"columns have different lengths: {sorted(n)}")
    return write_table(path, cols, zip(*data.values()))


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read a tagged CSV written by :func:`write_table` into float columns."""
    path = Path(path)
    with path.open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    body = [[float(x) for x in row] for row in reader if row]
    arr = np.array(body, dtype=float).reshape(-1, len(header))
    return {name: arr[:, k] for k, name in enumerate(header)}


def write_field(path: str | Path, grid: Grid, values: np.ndarray, t: float) -> Path:
    """Field snapshot: ``ny`` rows of ``nx`` values, row index = y index."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = grid.check(values)
    with path.open("w") as fh:
        fh.write(CSV_TAG + "\n")
        fh.write(
            f"# grid {grid.nx} {grid.ny} {grid.x_min!r} {grid.x_max!r} "
            f"{grid.y_min!r} {grid.y_max!r} {float(t)!r}\n"
        )
        for row in values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return path


def read_field(path: str | Path, boundary: str = "neumann") -> tuple[Grid, np.ndarray, float]:
    path = Path(path)
    header = None
    rows = []
    with path.open() as fh:
        for ln in fh:
            if ln.startswith("# grid"):
                header = ln.split()[2:]
            elif ln.startswith("#") or not ln.strip():
                continue
            else:
                rows.append([float(x) for x in ln.split(",")])
    if header is None or len(header) != 7:
        raise InputError(f"{path}: missing '# grid nx ny x_min x_max y_min y_max t' header")
    nx, ny = int(header[0]), int(header[1])
    x0, x1, y0, y1, t = (float(h) for h in header[2:])
    grid = make_grid((x0, x1, y0, y1), nx, ny, boundary)
    values = np.array(rows, dtype=float)
    if values.shape != (ny, nx):
        raise InputError(f"{path}: expected {ny}x{nx} values, found {values.shape}")
    return grid, values, t


def _fmt(v: object) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
