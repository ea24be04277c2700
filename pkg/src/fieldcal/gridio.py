"""CSV field files, sensor files, and PGM heatmap output.

A field file is a regular 2D grid with a two-line header followed by the
data rows:

    nx,ny,dx,dy,x0,y0
    80,40,0.1,0.1,0.0,0.0
    <row 0: nx comma-separated values, the row at y = y0>
    ...
    <row ny-1>

A sensor file is header-less CSV with one ``x,y,value`` row per sensor,
coordinates in meters.  Numbers are written with 17 significant digits, so a
write/read round trip reproduces every float64 exactly and identical inputs
produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import FloatArray, GridLayout

__all__ = [
    "FieldFormatError",
    "SensorFormatError",
    "FieldFile",
    "read_field",
    "write_field",
    "read_sensors",
    "write_sensors",
    "snap_sensor",
    "write_heatmap",
]

_HEADER = "nx,ny,dx,dy,x0,y0"


class FieldFormatError(ValueError):
    """A field file is malformed."""


class SensorFormatError(ValueError):
    """A sensor file is malformed or a sensor lies outside the field."""


@dataclass(frozen=True)
class FieldFile:
    """Grid geometry plus a (ny, nx) data array; row i sits at y0 + i*dy."""

    grid: GridLayout
    data: FloatArray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.grid.ny, self.grid.nx):
            raise FieldFormatError(
                f"data shape {data.shape} does not match header "
                f"ny={self.grid.ny}, nx={self.grid.nx}"
            )
        if not np.isfinite(data).all():
            raise FieldFormatError("field data contains non-finite values")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_flat(cls, grid: GridLayout, flat: np.ndarray) -> "FieldFile":
        """Wrap row-major flat values (mesh point order) as a field file."""
        flat = np.asarray(flat, dtype=np.float64)
        return cls(grid, flat.reshape(grid.ny, grid.nx))

    def flat(self) -> FloatArray:
        return self.data.reshape(-1)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_field(field: FieldFile, path: str | Path) -> None:
    g = field.grid
    lines = [_HEADER]
    lines.append(",".join(_fmt(v) for v in (g.nx, g.ny, g.dx, g.dy, g.x0, g.y0)))
    for row in field.data:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field(path: str | Path) -> FieldFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FieldFormatError(f"cannot read field file {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3:
        raise FieldFormatError(f"{path}: expected header plus data rows")
    if lines[0].strip() != _HEADER:
        raise FieldFormatError(f"{path}: first line must be '{_HEADER}'")
    head = lines[1].split(",")
    if len(head) != 6:
        raise FieldFormatError(f"{path}: header line needs 6 values, got {len(head)}")
    try:
        fnx, fny = float(head[0]), float(head[1])
        dx, dy, x0, y0 = (float(v) for v in head[2:])
    except ValueError as exc:
        raise FieldFormatError(f"{path}: bad header value: {exc}") from exc
    if not (fnx.is_integer() and fny.is_integer()):
        raise FieldFormatError(f"{path}: nx and ny must be integers, got {head[0]},{head[1]}")
    nx, ny = int(fnx), int(fny)
    try:
        grid = GridLayout(nx=nx, ny=ny, dx=dx, dy=dy, x0=x0, y0=y0)
    except ValueError as exc:
        raise FieldFormatError(f"{path}: {exc}") from exc
    body = lines[2:]
    if len(body) != ny:
        raise FieldFormatError(f"{path}: expected {ny} data rows, got {len(body)}")
    rows = []
    for r, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != nx:
            raise FieldFormatError(
                f"{path}: row {r} has {len(cells)} values, expected {nx}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise FieldFormatError(f"{path}: row {r}: bad value: {exc}") from exc
    data = np.asarray(rows, dtype=np.float64)
    if not np.isfinite(data).all():
        raise FieldFormatError(f"{path}: field data contains non-finite values")
    return FieldFile(grid, data)


def write_sensors(rows: list[tuple[float, float, float]], path: str | Path) -> None:
    lines = [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_sensors(path: str | Path) -> list[tuple[float, float, float]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SensorFormatError(f"cannot read sensor file {path}: {exc}") from exc
    out = []
    for r, line in enumerate(ln for ln in text.splitlines() if ln.strip()):
        cells = line.split(",")
        if len(cells) != 3:
            raise SensorFormatError(
                f"{path}: row {r} needs 3 values (x,y,value), got {len(cells)}"
            )
        try:
            x, y, v = (float(c) for c in cells)
        except ValueError as exc:
            raise SensorFormatError(f"{path}: row {r}: bad value: {exc}") from exc
        if not all(np.isfinite([x, y, v])):
            raise SensorFormatError(f"{path}: row {r}: non-finite value")
        out.append((x, y, v))
    if not out:
        raise SensorFormatError(f"{path}: sensor file is empty")
    return out


def snap_sensor(grid: GridLayout, x: float, y: float) -> tuple[int, float]:
    """Snap a sensor coordinate to the nearest mesh point.

    Returns (row-major mesh index, snap distance in meters).  Coordinates
    must lie inside the mesh bounding box; exact ties go to the lower mesh
    index.
    """
    x_max = grid.x0 + (grid.nx - 1) * grid.dx
    y_max = grid.y0 + (grid.ny - 1) * grid.dy
    if not (grid.x0 <= x <= x_max and grid.y0 <= y <= y_max):
        raise SensorFormatError(
            f"sensor at ({x:g}, {y:g}) lies outside the field bounding box "
            f"[{grid.x0:g}, {x_max:g}] x [{grid.y0:g}, {y_max:g}]"
        )

    def nearest(t: float) -> int:
        lower = int(np.floor(t))
        frac = t - lower
        if frac > 0.5:
            return lower + 1
        return lower  # ties (frac == 0.5) resolve to the lower index

    col = nearest((x - grid.x0) / grid.dx)
    row = nearest((y - grid.y0) / grid.dy)
    px = grid.x0 + col * grid.dx
    py = grid.y0 + row * grid.dy
    dist = float(np.hypot(x - px, y - py))
    return row * grid.nx + col, dist


def write_heatmap(field: FieldFile, path: str | Path) -> None:
    """Render a field as an 8-bit binary PGM (P5) with linear min-max scaling.

    A constant field maps to mid-gray 128.  The data min and max are written
    to a ``<path>.txt`` sidecar so a colorbar can be reconstructed.  Raster
    row 0 is field row 0 (the y = y0 row).
    """
    path = Path(path)
    data = field.data
    lo = float(data.min())
    hi = float(data.max())
    if hi > lo:
        pix = np.floor((data - lo) / (hi - lo) * 255.0 + 0.5)
        pix = np.clip(pix, 0, 255).astype(np.uint8)
    else:
        pix = np.full(data.shape, 128, dtype=np.uint8)
    header = f"P5\n{field.grid.nx} {field.grid.ny}\n255\n".encode("ascii")
    try:
        path.write_bytes(header + pix.tobytes())
        Path(str(path) + ".txt").write_text(
            f"min {_fmt(lo)}\nmax {_fmt(hi)}\n", encoding="utf-8"
        )
    except OSError as exc:
        raise OSError(f"cannot write heatmap {path}: {exc}") from exc
