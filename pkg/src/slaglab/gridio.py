"""Grid-field files.

Binary layout: a 64-byte ASCII header

    SLAGGRID1 <kind> <nx> <ny> <nc> <period_x> <period_y> <lambda>

padded with spaces and terminated by a newline, followed by nx*ny*nc
little-endian float64 values in row-major order.  Periods and lambda in
the header are rounded for display; full-precision metadata goes to an
optional JSON sidecar.  Complex fields are stored with their real and
imaginary parts interleaved along the last axis.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = "SLAGGRID1"
HEADER_SIZE = 64


class GridFileError(ValueError):
    """Malformed grid-field file."""


@dataclass
class GridField:
    kind: str
    data: np.ndarray  # (nx, ny) or (nx, ny, nc) float64
    periods: tuple = (0.0, 0.0)
    lam: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if " " in self.kind or not self.kind:
            raise ValueError("kind must be a non-empty token without spaces")
        d = np.asarray(self.data)
        if np.iscomplexobj(d):
            d = np.stack([d.real, d.imag], -1).reshape(d.shape[:2] + (-1,))
            self.meta = dict(self.meta, complex=True)
        if d.ndim not in (2, 3):
            raise ValueError("data must be (nx, ny) or (nx, ny, nc)")
        self.data = np.ascontiguousarray(d, dtype=np.float64)

    @property
    def nc(self) -> int:
        return 1 if self.data.ndim == 2 else self.data.shape[2]

    def header(self) -> bytes:
        nx, ny = self.data.shape[:2]
        px, py = self.periods
        text = f"{MAGIC} {self.kind} {nx} {ny} {self.nc} {px:.9g} {py:.9g} {self.lam:.9g}"
        if len(text) > HEADER_SIZE - 1:
            raise ValueError("header fields do not fit in 64 bytes")
        return (text.ljust(HEADER_SIZE - 1) + "\n").encode("ascii")

    def as_complex(self) -> np.ndarray:
        d = self.data.reshape(self.data.shape[:2] + (-1, 2))
        out = d[..., 0] + 1j * d[..., 1]
        return out[..., 0] if out.shape[-1] == 1 else out


def write_grid(path, gf: GridField, sidecar: bool = True) -> Path:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(gf.header())
        fh.write(gf.data.astype("<f8").tobytes(order="C"))
    if sidecar:
        meta = {"kind": gf.kind, "shape": list(gf.data.shape), "periods": [float(p) for p in gf.periods],
                "lambda": float(gf.lam), **gf.meta}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


def parse_header(raw: bytes):
    if len(raw) != HEADER_SIZE or not raw.startswith(MAGIC.encode()):
        raise GridFileError("missing SLAGGRID1 header")
    parts = raw.decode("ascii").split()
    if len(parts) != 8:
        raise GridFileError("header must have 8 fields")
    _, kind, nx, ny, nc, px, py, lam = parts
    return kind, int(nx), int(ny), int(nc), float(px), float(py), float(lam)


def read_grid(path) -> GridField:
    path = Path(path)
    raw = path.read_bytes()
    kind, nx, ny, nc, px, py, lam = parse_header(raw[:HEADER_SIZE])
    payload = raw[HEADER_SIZE:]
    if len(payload) != 8 * nx * ny * nc:
        raise GridFileError(f"payload has {len(payload)} bytes, expected {8 * nx * ny * nc}")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    data = data.reshape((nx, ny) if nc == 1 else (nx, ny, nc))
    meta = {}
    side = path.with_suffix(path.suffix + ".json")
    if side.exists():
        meta = json.loads(side.read_text())
        px, py = meta.pop("periods", [px, py])
        lam = meta.pop("lambda", lam)
        for key in ("kind", "shape"):
            meta.pop(key, None)
    return GridField(kind, data, (px, py), lam, meta)


def write_grid_csv(path, gf: GridField) -> Path:
    """One row per node: i, j, then the nc components (repr precision)."""
    path = Path(path)
    d = gf.data.reshape(gf.data.shape[:2] + (-1,))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j"] + [f"c{k}" for k in range(d.shape[2])])
        for i in range(d.shape[0]):
            for j in range(d.shape[1]):
                w.writerow([i, j] + [repr(float(x)) for x in d[i, j]])
    return path


def read_grid_csv(path, kind: str = "field") -> GridField:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ij = rows[:, :2].astype(int)
    nx, ny = ij[:, 0].max() + 1, ij[:, 1].max() + 1
    vals = rows[:, 2:]
    data = np.empty((nx, ny, vals.shape[1]))
    data[ij[:, 0], ij[:, 1]] = vals
    return GridField(kind, data[..., 0] if vals.shape[1] == 1 else data)


def write_points_csv(path, points) -> Path:
    """Full 6D node data, one row per node."""
    P = np.asarray(points).reshape(-1, 6)
    np.savetxt(path, P, delimiter=",", fmt="%.17g", header="x1,x2,x3,y1,y2,y3", comments="")
    return Path(path)


def write_obj(path, points, projection=None, closed=(False, False)) -> Path:
    """Quad mesh of the grid projected R^6 -> R^3 by a 3x6 matrix
    (default: the first three coordinates)."""
    P = np.asarray(points)
    nx, ny = P.shape[:2]
    A = np.eye(3, 6) if projection is None else np.asarray(projection, float)
    if A.shape != (3, 6):
        raise ValueError("projection must be a 3x6 matrix")
    V = P.reshape(-1, 6) @ A.T
    lines = [f"v {x:.12g} {y:.12g} {z:.12g}" for x, y, z in V]
    idx = lambda i, j: (i % nx) * ny + (j % ny) + 1
    for i in range(nx if closed[0] else nx - 1):
        for j in range(ny if closed[1] else ny - 1):
            lines.append(f"f {idx(i, j)} {idx(i + 1, j)} {idx(i + 1, j + 1)} {idx(i, j + 1)}")
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
