"""Forward geodesic X-ray transforms on the fan-beam boundary grid.

FanBeamData stores per-component (boundary point x fiber angle) arrays.
Angles are always measured from the inner normal at the boundary point:
influx grids cover a cone inside (-pi/2, pi/2), full-circle grids cover
[-pi, pi) with the antipodal map an exact half-grid shift.
"""

from __future__ import annotations

import io as _io
import math
from dataclasses import dataclass, field

import numpy as np

from . import flow as fl
from . import surface as sf

__all__ = [
    "FanBeamData",
    "influx_angles",
    "full_angles",
    "forward_I0",
    "forward_I1",
    "odd_extension",
    "adjoint_I0",
    "mu_nu_weights",
]


def influx_angles(n_angles, alpha_max=0.5 * np.pi):
    """Midpoint grid on the influx cone (-alpha_max, alpha_max)."""
    return -alpha_max + (np.arange(n_angles) + 0.5) * 2.0 * alpha_max / n_angles


def full_angles(n_angles):
    """Full-circle grid on [-pi, pi); antipody is a shift by n/2."""
    if n_angles % 2:
        raise ValueError("full-circle grid size must be even")
    return -np.pi + np.arange(n_angles) * 2.0 * np.pi / n_angles


@dataclass
class FanBeamData:
    """Boundary data indexed (component, boundary point, fiber angle)."""

    values: np.ndarray          # (n_comp, n_pts, n_angles)
    capped: np.ndarray          # bool, same shape: ray was time-capped
    angles: np.ndarray          # fiber angle grid (from the inner normal)
    convention: str             # 'influx' or 'full'
    alpha_max: float = 0.5 * np.pi
    model_hash: str = ""

    @property
    def n_components(self):
        return self.values.shape[0]

    @property
    def n_pts(self):
        return self.values.shape[1]

    @property
    def n_angles(self):
        return self.values.shape[2]

    def s_grid(self):
        return (np.arange(self.n_pts) + 0.5) / self.n_pts

    def copy(self):
        return FanBeamData(self.values.copy(), self.capped.copy(),
                           self.angles.copy(), self.convention,
                           self.alpha_max, self.model_hash)

    # -- interpolation ---------------------------------------------------

    def sample(self, comp, s, alpha):
        """Bilinear lookup: periodic in s, zero outside the angle cone.

        comp, s, alpha are arrays of equal shape.
        """
        comp = np.asarray(comp, dtype=np.int64)
        s = np.asarray(s, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        npts, nang = self.n_pts, self.n_angles
        fs = s * npts - 0.5
        i0 = np.floor(fs).astype(np.int64)
        ts = fs - i0
        out = np.zeros(np.broadcast(comp, s, alpha).shape)
        if self.convention == "full":
            a0 = self.angles[0]
            da = 2.0 * np.pi / nang
            fa = np.mod(alpha - a0, 2.0 * np.pi) / da
            j0 = np.floor(fa).astype(np.int64)
            ta = fa - j0
            for di, wi in ((0, 1.0 - ts), (1, ts)):
                for dj, wj in ((0, 1.0 - ta), (1, ta)):
                    out += wi * wj * self.values[comp, (i0 + di) % npts,
                                                 (j0 + dj) % nang]
            return out
        # influx cone: linear inside the node range, constant to the cone
        # edge, zero beyond it
        alpha = np.mod(alpha + np.pi, 2.0 * np.pi) - np.pi
        inside = np.abs(alpha) < self.alpha_max
        da = 2.0 * self.alpha_max / nang
        fa = (alpha - (-self.alpha_max)) / da - 0.5
        j0 = np.floor(fa).astype(np.int64)
        ta = fa - j0
        j0c = np.clip(j0, 0, nang - 1)
        j1c = np.clip(j0 + 1, 0, nang - 1)
        ta = np.where(j0 < 0, 1.0, np.where(j0 >= nang - 1, 0.0, ta))
        for di, wi in ((0, 1.0 - ts), (1, ts)):
            out += wi * ((1.0 - ta) * self.values[comp, (i0 + di) % npts, j0c]
                         + ta * self.values[comp, (i0 + di) % npts, j1c])
        return np.where(inside, out, 0.0)

    # -- file format ------------------------------------------------------

    def save(self, path):
        with open(path, "w") as fh:
            fh.write("# fanbeam model_hash=%s n_components=%d n_pts=%d "
                     "n_angles=%d convention=%s alpha_max=%.17g\n"
                     % (self.model_hash or "-", self.n_components, self.n_pts,
                        self.n_angles, self.convention, self.alpha_max))
            fh.write("component,point_index,angle_index,value,flag\n")
            nc, npts, nang = self.values.shape
            for c in range(nc):
                for i in range(npts):
                    for j in range(nang):
                        fh.write("%d,%d,%d,%.17g,%s\n"
                                 % (c, i, j, self.values[c, i, j],
                                    "capped" if self.capped[c, i, j] else "ok"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline()
            if not header.startswith("# fanbeam"):
                raise ValueError("not a fan-beam data file")
            meta = dict(tok.split("=", 1) for tok in header.split()[2:])
            fh.readline()  # column names
            nc = int(meta["n_components"])
            npts = int(meta["n_pts"])
            nang = int(meta["n_angles"])
            values = np.zeros((nc, npts, nang))
            capped = np.zeros((nc, npts, nang), dtype=bool)
            for line in fh:
                c, i, j, v, flag = line.rstrip("\n").split(",")
                values[int(c), int(i), int(j)] = float(v)
                capped[int(c), int(i), int(j)] = flag == "capped"
        conv = meta["convention"]
        amax = float(meta["alpha_max"])
        angles = full_angles(nang) if conv == "full" else influx_angles(nang, amax)
        mh = meta["model_hash"]
        return cls(values, capped, angles, conv, amax, "" if mh == "-" else mh)


def mu_nu_weights(data: FanBeamData):
    """|<v, nu>| = |cos alpha| weights on the data's angle grid."""
    return np.abs(np.cos(data.angles))


# ---------------------------------------------------------------------------
# forward transforms

def _launch_states(model, n_pts, angles):
    """Influx phase states for every (component, boundary point, angle)."""
    s = (np.arange(n_pts) + 0.5) / n_pts
    xs, ys, normals, comps = [], [], [], []
    for k in range(model.n_components):
        if model.kind == "Cylinder":
            x, y, na = model.boundary_point(k, s)
        else:
            z, na = model.boundary_point(k, s)
            x, y = np.real(z), np.imag(z)
        xs.append(x)
        ys.append(y)
        normals.append(na)
        comps.append(np.full(n_pts, k))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    na = np.concatenate(normals)
    nray = x.size * len(angles)
    X = np.repeat(x, len(angles))
    Y = np.repeat(y, len(angles))
    TH = np.repeat(na, len(angles)) + np.tile(angles, x.size)
    return X, Y, TH


def _forward(model, n_pts, angles, alpha_max, f=None, u=None,
             step=None, t_max=30.0, model_hash=""):
    if step is None:
        step = 1e-3 if model.kind == "Cylinder" else 0.01
    X, Y, TH = _launch_states(model, n_pts, angles)
    chunk = 1 << 20
    vals = np.zeros(X.size)
    caps = np.zeros(X.size, dtype=bool)
    for lo in range(0, X.size, chunk):
        sel = slice(lo, lo + chunk)
        res = fl.trace_rays(model, X[sel], Y[sel], TH[sel], step=step,
                            t_max=t_max, f=f, u=u)
        vals[sel] = res.integral
        caps[sel] = res.capped
    shape = (model.n_components, n_pts, len(angles))
    vals = vals.reshape(shape)
    caps = caps.reshape(shape)
    vals[caps] = 0.0  # trapped directions carry measure zero; flag kept
    return FanBeamData(vals, caps, np.asarray(angles), "influx",
                       alpha_max, model_hash)


def forward_I0(model, fgrid: sf.GridField, n_pts=200, n_angles=256,
               alpha_max=0.5 * np.pi, step=None, t_max=30.0, model_hash=""):
    """Geodesic X-ray transform of a scalar field on the influx grid."""
    angles = influx_angles(n_angles, alpha_max)
    return _forward(model, n_pts, angles, alpha_max, f=fgrid, step=step,
                    t_max=t_max, model_hash=model_hash)


def forward_I1(model, P: sf.GridField, Q: sf.GridField, n_pts=200,
               n_angles=256, alpha_max=0.5 * np.pi, step=None, t_max=30.0,
               model_hash=""):
    """X-ray transform of the 1-form P dx + Q dy (paired with the velocity)."""
    angles = influx_angles(n_angles, alpha_max)
    return _forward(model, n_pts, angles, alpha_max, u=(P, Q), step=step,
                    t_max=t_max, model_hash=model_hash)


# ---------------------------------------------------------------------------
# odd extension and adjoint

def odd_extension(data: FanBeamData, n_full=512) -> FanBeamData:
    """Extend influx data to the full fiber circle by antisymmetry.

    Output value at an outflux direction v is minus the influx value at -v;
    angles outside the cone and its antipode are zero.  The antipodal map is
    an exact half-grid shift, so the output is exactly odd.
    """
    if data.convention != "influx":
        raise ValueError("odd extension expects influx data")
    ang = full_angles(n_full)
    nc, npts = data.n_components, data.n_pts
    comp = np.repeat(np.arange(nc), npts).reshape(nc, npts, 1)
    s = np.broadcast_to(data.s_grid().reshape(1, npts, 1), (nc, npts, 1))
    A = np.broadcast_to(ang.reshape(1, 1, n_full), (nc, npts, n_full))
    compA = np.broadcast_to(comp, A.shape)
    sA = np.broadcast_to(s, A.shape)
    direct = data.sample(compA, sA, A)
    antipode = data.sample(compA, sA, A - np.pi)
    vals = direct - antipode
    capped = np.zeros_like(vals, dtype=bool)
    return FanBeamData(vals, capped, ang, "full", np.pi, data.model_hash)


def adjoint_I0(model, omega: FanBeamData, n_dirs=256, step=None,
               t_max=30.0) -> sf.GridField:
    """Discrete adjoint of I0 against the mu_nu-weighted boundary measure.

    I0* omega(x) = integral over the fiber circle of omega evaluated at the
    influx state of the geodesic through (x, theta) (its backward exit).
    Time-capped directions contribute zero.
    """
    if omega.convention != "influx":
        raise ValueError("adjoint expects influx data")
    if step is None:
        step = 5e-3 if model.kind == "Cylinder" else 0.05
    X, Y = model.zero_field().cell_centers()
    msk = model.mask
    px, py = X[msk], Y[msk]
    npix = px.size
    dirs = full_angles(n_dirs)
    acc = np.zeros(npix)
    chunk = max(1, (1 << 21) // n_dirs)
    for lo in range(0, npix, chunk):
        hi = min(npix, lo + chunk)
        nb = hi - lo
        XX = np.repeat(px[lo:hi], n_dirs)
        YY = np.repeat(py[lo:hi], n_dirs)
        TH = np.tile(dirs + np.pi, nb)  # backward rays
        res = fl.trace_rays(model, XX, YY, TH, step=step, t_max=t_max)
        a_in = np.mod(res.exit_alpha + np.pi + np.pi, 2.0 * np.pi) - np.pi
        w = omega.sample(res.exit_comp, res.exit_s, a_in)
        w[res.capped] = 0.0
        acc[lo:hi] = w.reshape(nb, n_dirs).sum(axis=1) * (2.0 * np.pi / n_dirs)
    out = model.zero_field()
    out.values[msk] = acc
    return out
