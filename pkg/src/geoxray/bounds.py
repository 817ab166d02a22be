"""Analytic operator-norm estimates for the normal operator and the
curvature-coupling error term.

Everything here is a closed form in Euler Gamma functions or a small
quadrature; nothing depends on ray tracing.  The spectral function
``h_lambda`` is the source of all the Gamma-quotient bounds; the Schur
bound is an independent dynamical route to the same operator norm via a
truncated sum over the deck group.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy import special

from . import mobius as mb

__all__ = [
    "gamma_fn",
    "f_lambda",
    "h_lambda",
    "pi0_norm",
    "scaled_pi0_norm",
    "stability_constant",
    "w_norm_bound",
    "cylinder_pi0_bound",
    "cylinder_w_bound",
    "universal_constant",
    "theta_fn",
    "rho_fn",
    "digamma_series",
    "schur_bound",
]


def gamma_fn(z):
    """Euler Gamma, complex-capable.  Raises on nonpositive-integer poles."""
    z = np.asarray(z, dtype=complex)
    at_pole = (z.real <= 0) & (np.abs(z.imag) == 0.0) \
        & (np.abs(z.real - np.round(z.real)) == 0.0)
    if np.any(at_pole):
        raise ZeroDivisionError("Gamma pole at nonpositive integer")
    out = special.gamma(z)
    return complex(out) if out.ndim == 0 else out


def f_lambda(r, lam):
    """Mellin factor Gamma(1/4 - ir/2 - lam/2) Gamma(1/4 - ir/2 + lam/2)
    / Gamma(1/2 - ir) entering the factorization of h_lambda."""
    r = np.asarray(r, dtype=complex)
    return (gamma_fn(0.25 - 0.5j * r - 0.5 * lam)
            * gamma_fn(0.25 - 0.5j * r + 0.5 * lam)
            / gamma_fn(0.5 - 1j * r))


def h_lambda(z, lam):
    """Spectral multiplier of the attenuated normal operator at spectral
    value z (the operator is this function of the shifted Laplacian).

    h_lambda(r^2) = (2/pi) f_lambda(r) f_lambda(-r); the closed form below
    is the Gamma-quotient obtained from that product by the Legendre
    duplication formula.  Real and positive on the spectral axis
    z >= -((1-2 lam)/2)^2.
    """
    w = 0.5j * np.sqrt(np.asarray(z, dtype=complex))
    num = (gamma_fn(0.25 - 0.5 * lam - w) * gamma_fn(0.25 + 0.5 * lam + w)
           * gamma_fn(0.25 - 0.5 * lam + w) * gamma_fn(0.25 + 0.5 * lam - w))
    den = (gamma_fn(0.25 - w) * gamma_fn(0.25 + w)
           * gamma_fn(0.75 - w) * gamma_fn(0.75 + w))
    val = 4.0 * num / den
    val = np.asarray(val)
    if np.max(np.abs(val.imag)) > 1e-10 * (1.0 + np.max(np.abs(val.real))):
        raise FloatingPointError("h_lambda drifted off the real line")
    out = val.real
    return float(out) if out.ndim == 0 else out


def pi0_norm(delta, lam=0.0):
    """L2 operator norm of the attenuated normal operator on a quotient
    with exponent of convergence delta, unit curvature.

    The norm is the supremum of the spectral multiplier over the spectrum:
    the continuous-spectrum value h_lambda(0) when delta <= 1/2, and the
    value at the bottom eigenvalue delta(1-delta) - 1/4 = -(delta-1/2)^2
    of the shifted Laplacian when delta > 1/2.  The two branches agree at
    delta = 1/2.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError("exponent of convergence must lie in [0, 1)")
    if not 0.0 <= lam < 1.0 - max(delta, 0.5):
        raise ValueError("attenuation too large for this exponent")
    if delta <= 0.5:
        return h_lambda(0.0, lam)
    return h_lambda(-(delta - 0.5) ** 2, lam)


def scaled_pi0_norm(delta, lam1, lam2, kappa0=1.0):
    """Norm bound for a variable-curvature metric pinched between
    lam1^2 g0 and lam1^-2 g0 with curvature <= -lam2^2 kappa0:
    (lam2 / (sqrt(kappa0) lam1^4)) h at attenuation 1 - lam1 lam2."""
    lam = 1.0 - lam1 * lam2
    return lam2 / (np.sqrt(kappa0) * lam1 ** 4) * pi0_norm(delta, lam)


def stability_constant(delta, lam1, lam2):
    """Size of the curvature-gradient neighborhood on which the Neumann
    series converges: 3 lam1^4 / (lam2 C) with C the norm bound above."""
    if not (1.0 >= lam1 * lam2 > max(delta, 0.5)):
        raise ValueError("need 1 >= lam1 lam2 > max(delta, 1/2)")
    lam = 1.0 - lam1 * lam2
    return 3.0 * lam1 ** 4 / (lam2 * pi0_norm(delta, lam))


def w_norm_bound(dkappa_sup, kappa0, pi0_value):
    """Error-operator bound |d kappa|_inf / (3 kappa0) * |Pi_0| norm."""
    if kappa0 <= 0:
        raise ValueError("kappa0 must be positive")
    return dkappa_sup / (3.0 * kappa0) * pi0_value


def cylinder_pi0_bound(eps):
    """Normal-operator bound for the cylinder family: the pinching
    constants are lam1 = 1/cosh(eps), lam2 = 1 and the exponent is 1/2,
    giving 4 cosh^4(eps) (Gamma-quotient)^2."""
    q = (gamma_fn(0.5 * (1.0 / np.cosh(eps) - 0.5))
         * gamma_fn(0.75 - 0.5 / np.cosh(eps))
         / (gamma_fn(0.25) * gamma_fn(0.75)))
    return float((4.0 * np.cosh(eps) ** 4 * q ** 2).real)


def cylinder_w_bound(eps):
    """Error-operator bound for the cylinder family,
    (8/3) eps (1+eps) cosh^4(eps) (Gamma-quotient)^2, using
    |d kappa|_inf <= 2 eps (1+eps)."""
    return 2.0 * eps * (1.0 + eps) / 3.0 * cylinder_pi0_bound(eps)


def universal_constant():
    """The double integral int_0^inf e^{3s} (int_s^inf e^{-3u/2}
    / sqrt(sinh u) du)^2 ds; equals 2/3.

    The inner integral is computed with the substitution u = s + v^2,
    which absorbs the 1/sqrt(sinh) endpoint singularity at u = s = 0.
    """
    def inner(s):
        def g(v):
            u = s + v * v
            return 2.0 * v * np.exp(-1.5 * u) / np.sqrt(np.sinh(u))
        val, _ = integrate.quad(g, 0.0, np.sqrt(max(40.0 - s, 1.0)))
        return val

    def outer(s):
        j = inner(s)
        return np.exp(3.0 * s) * j * j

    val, _ = integrate.quad(outer, 0.0, 40.0, limit=200)
    return val


def theta_fn(t, lam=0.0):
    """Multiplier along the continuous spectrum, h_lambda(4 t^2);
    decreasing in t >= 0."""
    return h_lambda(4.0 * np.asarray(t, dtype=float) ** 2, lam)


def rho_fn(t, lam=0.0):
    """Multiplier along the small-eigenvalue segment, h_lambda(-4 t^2);
    increasing on [0, (1 - 2 lam)/4)."""
    return h_lambda(-4.0 * np.asarray(t, dtype=float) ** 2, lam)


def digamma_series(z, n_terms=100000):
    """Digamma via the partial-fraction series
    psi(z) = -gamma + sum_n (1/(n+1) - 1/(n+z)), with a trapezoid tail
    correction.  Kept as an independent route against the log-derivative
    of gamma_fn."""
    z = complex(z)
    if z.real <= 0 and z.imag == 0 and z.real == round(z.real):
        raise ZeroDivisionError("digamma pole at nonpositive integer")
    n = np.arange(n_terms)
    s = np.sum(1.0 / (n + 1.0) - 1.0 / (n + z))
    # tail: integral of (1/(x+1) - 1/(x+z)) from N to infinity plus half
    # the boundary term (Euler-Maclaurin)
    N = float(n_terms)
    tail = np.log((N + z) / (N + 1.0)) + 0.5 * (1.0 / (N + 1.0) - 1.0 / (N + z))
    return -np.euler_gamma + s + tail


def schur_bound(model, lam=0.0, word_len=4, n_probe=40):
    """Schur test for the normal operator on a constant-curvature model:
    sup over probe points of the integral over the domain of the
    kernel sum over deck transformations of word length <= word_len.

    The kernel is 2 sqrt(kappa0) cosh(lam d)/sinh(d) in hyperbolic
    distance d; on the probe's own cell the 1/sinh singularity cancels
    against the polar area element, leaving 4 pi times the cell's
    equivalent-disk radius.
    """
    if model.kind == "Cylinder":
        raise ValueError("Schur bound applies to constant-curvature models")
    if word_len < 0:
        raise ValueError("word length must be nonnegative")
    k0 = model.kappa0
    X, Y = model.zero_field().cell_centers()
    msk = model.mask
    z = (X + 1j * Y)[msk]
    delta = (model.extent[1] - model.extent[0]) / model.n_grid
    # hyperbolic (curvature -1) cell areas; g-areas are these / kappa0
    area_h = k0 * model.area_element(X, Y)[msk] * delta ** 2
    d0 = np.sqrt(area_h / np.pi)  # equivalent-disk radii
    stride = max(1, z.size // n_probe)
    probes = z[::stride]
    words = [T for _, T in mb.reduced_words(model.group, word_len)] \
        if model.group is not None else [mb.identity()]
    best = 0.0
    for p in probes:
        total = 0.0
        for T in words:
            d = mb.hyperbolic_distance(T.apply(p), z)
            near = d < d0
            kern = np.where(near, 1.0,
                            2.0 * np.cosh(lam * d) / np.sinh(np.where(near, 1.0, d)))
            contrib = kern * area_h
            # diagonal cell: polar integration of kernel * area element
            contrib[near] = 4.0 * np.pi * d0[near] * np.cosh(lam * d[near])
            total += float(np.sum(contrib))
        best = max(best, total)
    return best / np.sqrt(k0)
