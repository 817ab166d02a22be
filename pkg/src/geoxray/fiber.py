"""Fiberwise harmonic analysis on full-circle boundary data.

The Hilbert transform acts per boundary point as the Fourier multiplier
-i sign(k) over the fiber angle.  Real input stays real; the multiplier is
zero on the mean (k = 0) and on the unpaired Nyquist mode of even-size
grids, which is the unique choice keeping a real-to-real map.
"""

from __future__ import annotations

import numpy as np

from .transform import FanBeamData

__all__ = ["fiber_spectrum", "hilbert_fiber", "odd_even_split", "fiber_mean"]

_IMAG_TOL = 1e-10


def fiber_spectrum(data: FanBeamData):
    """Complex Fourier coefficients over the fiber angle, per boundary point."""
    if data.convention != "full":
        raise ValueError("fiber spectrum requires full-circle data")
    return np.fft.fft(data.values, axis=2) / data.n_angles


def hilbert_fiber(data: FanBeamData) -> FanBeamData:
    """Apply the -i sign(k) multiplier over the fiber angle."""
    if data.convention != "full":
        raise ValueError("hilbert transform requires full-circle data")
    n = data.n_angles
    if n & (n - 1):
        raise ValueError("fiber grid size must be a power of two")
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = -1j * np.sign(k)
    mult[n // 2] = 0.0  # unpaired Nyquist mode: zeroed to stay real-to-real
    spec = np.fft.fft(data.values, axis=2)
    out = np.fft.ifft(spec * mult, axis=2)
    resid = np.max(np.abs(out.imag)) if out.size else 0.0
    if resid > _IMAG_TOL:
        raise FloatingPointError("hilbert output drifted off the real line")
    res = data.copy()
    res.values = out.real
    return res


def fiber_mean(data: FanBeamData):
    """Fiber-average (the k = 0 projection), shape (n_comp, n_pts, 1)."""
    return data.values.mean(axis=2, keepdims=True)


def odd_even_split(data: FanBeamData):
    """Split w.r.t. the antipodal involution (x, v) -> (x, -v).

    On the full grid the involution is an exact shift by half the fiber
    grid, so odd + even reproduces the input to the last bit.
    """
    if data.convention != "full":
        raise ValueError("parity split requires full-circle data")
    flipped = np.roll(data.values, data.n_angles // 2, axis=2)
    odd = data.copy()
    odd.values = 0.5 * (data.values - flipped)
    even = data.copy()
    even.values = 0.5 * (data.values + flipped)
    return odd, even
