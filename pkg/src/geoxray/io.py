"""File formats for grid fields: binary round-trip format, CSV export and
an 8-bit PGM preview with a sidecar recording the linear scaling.

Binary layout (little-endian): 8-byte magic, uint32 N, 16-byte geometry
hash (ASCII, space padded), 4 float64 extent values, packed mask bitmap
(N*N bits, row-major), float64 values row-major.
"""

from __future__ import annotations

import json

import numpy as np

from .surface import GridField

__all__ = [
    "GRID_MAGIC",
    "save_grid",
    "load_grid",
    "save_grid_csv",
    "load_grid_csv",
    "save_pgm",
]

GRID_MAGIC = b"GXGRID1\n"


def save_grid(path, field: GridField, geometry_hash=""):
    n = field.values.shape[0]
    if field.values.shape != (n, n) or field.mask.shape != (n, n):
        raise ValueError("grid field must be square with matching mask")
    gh = geometry_hash.encode("ascii")[:16].ljust(16)
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(np.array([n], dtype="<u4").tobytes())
        fh.write(gh)
        fh.write(np.asarray(field.extent, dtype="<f8").tobytes())
        fh.write(np.packbits(field.mask.astype(np.uint8), axis=None).tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_grid(path):
    """Returns (GridField, geometry_hash)."""
    with open(path, "rb") as fh:
        if fh.read(8) != GRID_MAGIC:
            raise ValueError("not a grid field file")
        n = int(np.frombuffer(fh.read(4), dtype="<u4")[0])
        gh = fh.read(16).decode("ascii").strip()
        extent = tuple(np.frombuffer(fh.read(32), dtype="<f8"))
        nbytes = (n * n + 7) // 8
        bits = np.frombuffer(fh.read(nbytes), dtype=np.uint8)
        mask = np.unpackbits(bits, count=n * n).astype(bool).reshape(n, n)
        values = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
    return GridField(values, mask, extent), gh


def save_grid_csv(path, field: GridField, geometry_hash=""):
    n = field.values.shape[0]
    with open(path, "w") as fh:
        fh.write("# gridfield geometry=%s n=%d extent=%.17g,%.17g,%.17g,%.17g\n"
                 % (geometry_hash or "-", n, *field.extent))
        fh.write("row,col,value,mask\n")
        for iy in range(n):
            for ix in range(n):
                fh.write("%d,%d,%.17g,%d\n"
                         % (iy, ix, field.values[iy, ix],
                            int(field.mask[iy, ix])))


def load_grid_csv(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# gridfield"):
            raise ValueError("not a grid field CSV")
        meta = dict(tok.split("=", 1) for tok in header.split()[2:])
        n = int(meta["n"])
        extent = tuple(float(v) for v in meta["extent"].split(","))
        fh.readline()
        values = np.zeros((n, n))
        mask = np.zeros((n, n), dtype=bool)
        for line in fh:
            r, c, v, m = line.rstrip("\n").split(",")
            values[int(r), int(c)] = float(v)
            mask[int(r), int(c)] = m == "1"
    gh = meta["geometry"]
    return GridField(values, mask, extent), ("" if gh == "-" else gh)


def save_pgm(path, field: GridField, geometry_hash="", symmetric=False):
    """8-bit preview with linear scaling; min/max recorded in a sidecar.

    symmetric=True centers the scale at zero (for signed error maps).
    """
    vals = field.values[field.mask]
    if vals.size:
        if symmetric:
            amp = float(np.max(np.abs(vals))) or 1.0
            lo, hi = -amp, amp
        else:
            lo, hi = float(vals.min()), float(vals.max())
            if hi == lo:
                hi = lo + 1.0
    else:
        lo, hi = 0.0, 1.0
    scaled = np.clip((field.values - lo) / (hi - lo), 0.0, 1.0)
    img = np.where(field.mask, np.round(scaled * 255.0), 0).astype(np.uint8)
    n = img.shape[0]
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (n, n))
        fh.write(img[::-1].tobytes())  # row 0 at the bottom
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump({"min": lo, "max": hi, "symmetric": bool(symmetric),
                   "geometry": geometry_hash}, fh, sort_keys=True)
        fh.write("\n")
