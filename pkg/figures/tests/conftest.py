"""Hand-written fixture files in the pipeline's on-disk formats."""

import numpy as np
import pytest


def write_grid(path, values, mask, extent=(-1.0, 1.0, -1.0, 1.0),
               geometry=""):
    n = values.shape[0]
    with open(path, "wb") as fh:
        fh.write(b"GXGRID1\n")
        fh.write(np.array([n], dtype="<u4").tobytes())
        fh.write(geometry.encode("ascii")[:16].ljust(16))
        fh.write(np.asarray(extent, dtype="<f8").tobytes())
        fh.write(np.packbits(mask.astype(np.uint8), axis=None).tobytes())
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def write_fanbeam(path, values, convention="influx",
                  alpha_max=0.5 * np.pi, geometry=""):
    nc, npts, nang = values.shape
    with open(path, "w", newline="") as fh:
        fh.write("# fanbeam model_hash=%s n_components=%d n_pts=%d "
                 "n_angles=%d convention=%s alpha_max=%.17g\n"
                 % (geometry or "-", nc, npts, nang, convention, alpha_max))
        fh.write("component,point_index,angle_index,value,flag\n")
        for c in range(nc):
            for i in range(npts):
                for j in range(nang):
                    fh.write("%d,%d,%d,%.17g,0\n"
                             % (c, i, j, values[c, i, j]))


def write_escape(path, ts, V, geometry="g", delta_hat=0.0):
    with open(path, "w", newline="") as fh:
        fh.write("# geometry=%s delta_hat=%.6g\n" % (geometry, delta_hat))
        fh.write("t,V\n")
        for t, v in zip(ts, V):
            fh.write("%.6g,%.9g\n" % (t, v))


def write_norms(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write("# lam=0\n")
        fh.write("quantity,value\n")
        for name, val in rows.items():
            fh.write("%s,%.12g\n" % (name, val))


@pytest.fixture
def writers():
    return dict(grid=write_grid, fanbeam=write_fanbeam,
                escape=write_escape, norms=write_norms)
