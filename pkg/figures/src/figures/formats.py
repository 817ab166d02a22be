"""Readers for the geoxray on-disk formats.

Implemented from the documented layouts only, so the figure scripts stay
decoupled from the pipeline package.
"""

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

GRID_MAGIC = b"GXGRID1\n"


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Grid:
    values: np.ndarray
    mask: np.ndarray
    extent: tuple
    geometry: str


def load_grid(path):
    """Binary grid field: magic, uint32 N, 16-byte geometry hash, 4 float64
    extent values, bit-packed mask, float64 values (little-endian)."""
    with open(path, "rb") as fh:
        if fh.read(8) != GRID_MAGIC:
            raise ValueError("not a grid field file: %s" % path)
        n = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        gh = fh.read(16).decode("ascii").strip()
        extent = tuple(np.frombuffer(fh.read(32), dtype="<f8"))
        nbytes = (n * n + 7) // 8
        bits = np.frombuffer(fh.read(nbytes), dtype=np.uint8)
        mask = np.unpackbits(bits, count=n * n).astype(bool).reshape(n, n)
        values = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
    return Grid(values.copy(), mask, extent, gh)


@dataclass
class FanBeam:
    values: np.ndarray      # (components, boundary points, angles)
    flags: np.ndarray
    angles: np.ndarray
    convention: str         # "influx" or "full"
    alpha_max: float
    geometry: str

    @property
    def s_grid(self):
        n = self.values.shape[1]
        return (np.arange(n) + 0.5) / n


def load_fanbeam(path):
    """Fan-beam CSV: a '# fanbeam key=value ...' header line, a column
    header, then one (component, point, angle, value, flag) row per
    sample."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# fanbeam"):
            raise ValueError("not a fan-beam CSV: %s" % path)
        meta = dict(tok.split("=", 1) for tok in header[2:].split()[1:])
        nc = int(meta["n_components"])
        npts = int(meta["n_pts"])
        nang = int(meta["n_angles"])
        conv = meta["convention"]
        amax = float(meta["alpha_max"])
        fh.readline()
        values = np.zeros((nc, npts, nang))
        flags = np.zeros((nc, npts, nang), dtype=bool)
        for row in csv.reader(fh):
            c, i, j = int(row[0]), int(row[1]), int(row[2])
            values[c, i, j] = float(row[3])
            flags[c, i, j] = row[4] == "1"
    if conv == "full":
        angles = -np.pi + np.arange(nang) * 2.0 * np.pi / nang
    else:
        angles = -amax + (np.arange(nang) + 0.5) * 2.0 * amax / nang
    gh = meta["model_hash"]
    return FanBeam(values, flags, angles, conv, amax,
                   "" if gh == "-" else gh)


def load_escape(path):
    """Escape-rate CSV: '# geometry=... delta_hat=...' then (t, V) rows."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# geometry="):
            raise ValueError("not an escape-rate CSV: %s" % path)
        meta = dict(tok.split("=", 1) for tok in header[2:].split())
        fh.readline()
        rows = [r for r in csv.reader(fh) if r]
    ts = np.array([float(r[0]) for r in rows])
    V = np.array([float(r[1]) for r in rows])
    return ts, V, meta


def load_norms(path):
    """Analytic bound table: comment header then (quantity, value) rows."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("not a norms CSV: %s" % path)
        fh.readline()
        rows = [r for r in csv.reader(fh) if r]
    return {name: float(val) for name, val in rows}


def check_same_geometry(*hashes):
    """Inputs of one figure must agree on their geometry hash (empty
    hashes are wildcards)."""
    seen = {h for h in hashes if h}
    if len(seen) > 1:
        raise ValueError("geometry hash mismatch across inputs: %s"
                         % sorted(seen))
