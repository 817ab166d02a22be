"""Reconstruction pipeline: scattering pullback, vector backprojection with
the divergence/curl finite-difference stage, the one-shot inversion formula
and its Neumann-series correction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import fiber as fb
from . import flow as fl
from . import surface as sf
from . import transform as tx

__all__ = [
    "ReconstructionReport",
    "backproject_and_curl",
    "one_shot_invert",
    "neumann_invert",
    "interior_mask",
    "relative_errors",
]

# Orientation of the Hodge star in the discrete curl; pinned by the
# constant-curvature consistency check (W = 0 forces reconstruction = f).
A0_SIGN = -1.0


def interior_mask(model, collar=2):
    """Domain mask eroded by `collar` cells (finite-difference stencils near
    the mask edge are incomplete and excluded from error metrics)."""
    m = model.mask.copy()
    for _ in range(collar):
        shrunk = m.copy()
        shrunk[1:, :] &= m[:-1, :]
        shrunk[:-1, :] &= m[1:, :]
        shrunk[:, 1:] &= m[:, :-1]
        shrunk[:, :-1] &= m[:, 1:]
        m = shrunk
    return m


def _masked_diff(F, mask, axis, delta):
    """Centered difference where both neighbors are masked, else zero."""
    out = np.zeros_like(F)
    if axis == 1:  # d/dx: columns
        ok = np.zeros_like(mask)
        ok[:, 1:-1] = mask[:, 2:] & mask[:, :-2]
        out[:, 1:-1] = (F[:, 2:] - F[:, :-2]) / (2.0 * delta)
    else:
        ok = np.zeros_like(mask)
        ok[1:-1, :] = mask[2:, :] & mask[:-2, :]
        out[1:-1, :] = (F[2:, :] - F[:-2, :]) / (2.0 * delta)
    out[~ok] = 0.0
    return out


def exit_value_sums(model, w: tx.FanBeamData, n_dirs=512, step=None,
                    t_max=30.0):
    """Angular moments C = int cos(theta) w(exit) dtheta and S likewise with
    sin(theta), per grid pixel, where w is looked up at the forward exit
    state of (pixel, theta).  Returns (C, S) as full grid arrays.
    """
    if w.convention != "full":
        raise ValueError("backprojection expects full-circle data")
    if step is None:
        step = 5e-3 if model.kind == "Cylinder" else 0.05
    X, Y = model.zero_field().cell_centers()
    msk = model.mask
    px, py = X[msk], Y[msk]
    npix = px.size
    dirs = tx.full_angles(n_dirs)
    ct, st = np.cos(dirs), np.sin(dirs)
    dth = 2.0 * np.pi / n_dirs
    Cs = np.zeros(npix)
    Ss = np.zeros(npix)
    chunk = max(1, (1 << 21) // n_dirs)
    for lo in range(0, npix, chunk):
        hi = min(npix, lo + chunk)
        nb = hi - lo
        XX = np.repeat(px[lo:hi], n_dirs)
        YY = np.repeat(py[lo:hi], n_dirs)
        TH = np.tile(dirs, nb)
        res = fl.trace_rays(model, XX, YY, TH, step=step, t_max=t_max)
        vals = w.sample(res.exit_comp, res.exit_s, res.exit_alpha)
        vals[res.capped] = 0.0
        vals = vals.reshape(nb, n_dirs)
        Cs[lo:hi] = vals @ ct * dth
        Ss[lo:hi] = vals @ st * dth
    C = np.zeros(msk.shape)
    S = np.zeros(msk.shape)
    C[msk] = Cs
    S[msk] = Ss
    return C, S


def backproject_and_curl(model, w: tx.FanBeamData, n_dirs=512, step=None,
                         t_max=30.0) -> sf.GridField:
    """The *d I1^* S_g^{-1} stage of the inversion formula.

    Disk models: e^{-2 phi} (d/dx (e^phi S) - d/dy (e^phi C)).
    Cylinder:    (d/dx S - d/dy (h C)) / h.
    """
    C, S = exit_value_sums(model, w, n_dirs=n_dirs, step=step, t_max=t_max)
    msk = model.mask
    X, Y = model.zero_field().cell_centers()
    delta = (model.extent[1] - model.extent[0]) / model.n_grid
    if model.kind == "Cylinder":
        h = model._h(Y)
        val = (_masked_diff(S, msk, 1, delta) - _masked_diff(h * C, msk, 0, delta)) / h
    else:
        Z = X + 1j * Y
        ephi = np.where(msk, np.exp(model.phi(np.where(np.abs(Z) < 1, Z, 0))), 0.0)
        val = (_masked_diff(ephi * S, msk, 1, delta)
               - _masked_diff(ephi * C, msk, 0, delta)) / np.where(msk, ephi ** 2, 1.0)
    out = model.zero_field()
    out.values = np.where(msk, val, 0.0)
    return out


def one_shot_invert(model, data: tx.FanBeamData, n_full=512, n_dirs=512,
                    step=None, t_max=30.0) -> sf.GridField:
    """One application of the approximate inverse A0.

    A0 d = (sign / 4 pi) * backproject_and_curl(hilbert(odd_extension(d))),
    which equals f + W^2 f on exact data.
    """
    w = fb.hilbert_fiber(tx.odd_extension(data, n_full=n_full))
    g = backproject_and_curl(model, w, n_dirs=n_dirs, step=step, t_max=t_max)
    g.values *= A0_SIGN / (4.0 * np.pi)
    return g


@dataclass
class ReconstructionReport:
    reconstruction: sf.GridField
    errors_l2: list
    errors_sup: list
    iterations: int
    runtime: float
    diverged: bool = False
    valid_mask: np.ndarray = None


def relative_errors(model, rec: sf.GridField, truth: sf.GridField, valid=None):
    """Area-weighted relative L2 and interior sup errors on the valid mask."""
    if valid is None:
        valid = interior_mask(model)
    X, Y = rec.cell_centers()
    wgt = model.area_element(X, Y)
    diff = (rec.values - truth.values)[valid]
    ref = truth.values[valid]
    wv = wgt[valid]
    l2 = float(np.sqrt(np.sum(wv * diff ** 2) / np.sum(wv * ref ** 2)))
    sup = float(np.max(np.abs(diff)) / np.max(np.abs(ref)))
    return l2, sup


def neumann_invert(model, data: tx.FanBeamData, iters=2, truth=None,
                   n_full=512, n_dirs=512, step=None, forward_step=None,
                   t_max=30.0) -> ReconstructionReport:
    """Neumann-series correction: f_{k+1} = A0 d + (Id - A0 I0) f_k.

    iters = 0 reduces to the one-shot inversion.  If `truth` is given, the
    per-iteration relative errors are recorded; two consecutive error
    increases raise the `diverged` flag (without aborting).
    """
    t0 = time.time()
    valid = interior_mask(model)
    a0d = one_shot_invert(model, data, n_full=n_full, n_dirs=n_dirs,
                          step=step, t_max=t_max)
    fk = a0d.copy()
    el2, esup = [], []
    if truth is not None:
        l2, sup = relative_errors(model, fk, truth, valid)
        el2.append(l2)
        esup.append(sup)
    grows = 0
    diverged = False
    for _ in range(iters):
        dk = tx.forward_I0(model, fk, n_pts=data.n_pts,
                           n_angles=data.n_angles, alpha_max=data.alpha_max,
                           step=forward_step, t_max=t_max,
                           model_hash=data.model_hash)
        a0i0 = one_shot_invert(model, dk, n_full=n_full, n_dirs=n_dirs,
                               step=step, t_max=t_max)
        nxt = a0d.copy()
        nxt.values = a0d.values + fk.values - a0i0.values
        fk = nxt
        if truth is not None:
            l2, sup = relative_errors(model, fk, truth, valid)
            if l2 > el2[-1]:
                grows += 1
                if grows >= 2:
                    diverged = True
            else:
                grows = 0
            el2.append(l2)
            esup.append(sup)
    return ReconstructionReport(fk, el2, esup, iters, time.time() - t0,
                                diverged, valid)
