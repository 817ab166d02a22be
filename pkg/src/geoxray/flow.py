"""Geodesic flow on the surface models.

Two tracer backends share one interface: constant-curvature disk models step
with the exact Mobius flow (folding into the fundamental domain after every
step), the cylinder uses Heun's scheme.  A Heun integrator is also provided
for the disk models, mainly to measure its convergence order against the
exact flow.

Angle convention: theta is the Euclidean direction angle of the coordinate
velocity; the unit tangent is e^{-phi}(cos theta, sin theta) on disk models
and (cos theta / h, sin theta) on the cylinder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mobius as mb
from . import surface as sf

__all__ = [
    "TraceResult",
    "GeodesicTrace",
    "geodesic_rhs",
    "integrate",
    "trace_rays",
    "scattering_endpoint",
    "jacobi_propagate",
    "w_kernel_probe",
    "escape_rate",
    "estimate_delta_gamma",
]

_EXIT_EPS = 1e-12
_BISECT_ITERS = 45


# ---------------------------------------------------------------------------
# right-hand sides

def geodesic_rhs(model, x, y, theta):
    """Coordinate velocity (dx, dy, dtheta) of the unit-speed geodesic flow."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    if model.kind == "Cylinder":
        h = model._h(y)
        hp = model._h_prime(y)
        return ct / h, st, (hp / h) * ct
    z = x + 1j * y
    speed = np.exp(-model.phi(z))
    gp = model.grad_phi(z)
    px, py = np.real(gp), np.imag(gp)
    return speed * ct, speed * st, speed * (-px * st + py * ct)


def _heun_step(model, x, y, th, h):
    k1x, k1y, k1t = geodesic_rhs(model, x, y, th)
    xe, ye, te = x + h * k1x, y + h * k1y, th + h * k1t
    k2x, k2y, k2t = geodesic_rhs(model, xe, ye, te)
    return (x + 0.5 * h * (k1x + k2x),
            y + 0.5 * h * (k1y + k2y),
            th + 0.5 * h * (k1t + k2t))


# ---------------------------------------------------------------------------
# batch tracing

@dataclass
class TraceResult:
    """Exit data for a batch of rays."""

    exit_x: np.ndarray
    exit_y: np.ndarray
    exit_theta: np.ndarray          # outgoing direction at the exit point
    exit_comp: np.ndarray
    exit_s: np.ndarray
    exit_normal: np.ndarray         # inner-normal angle at the exit point
    exit_time: np.ndarray
    capped: np.ndarray
    integral: np.ndarray = None     # per-ray line integrals, if requested

    @property
    def exit_alpha(self):
        """Exit direction relative to the inner normal, in (-pi, pi]."""
        d = self.exit_theta - self.exit_normal
        return np.mod(d + np.pi, 2.0 * np.pi) - np.pi


def _integrand(model, x, y, theta, f, u):
    """Pointwise integrand value: scalar field and/or 1-form paired with velocity."""
    total = 0.0
    if f is not None:
        total = total + f.sample(x, y)
    if u is not None:
        P, Q = u
        dx, dy, _ = geodesic_rhs(model, x, y, theta)
        total = total + P.sample(x, y) * dx + Q.sample(x, y) * dy
    return np.asarray(total, dtype=float) if np.ndim(total) else np.full(np.shape(x), total)


def trace_rays(model, x0, y0, theta0, step=0.02, t_max=30.0,
               f=None, u=None, method="auto"):
    """Trace rays to the boundary; optionally accumulate line integrals.

    f: GridField integrated along rays (trapezoid rule).
    u: (P, Q) GridField pair, covector components integrated against the
       coordinate velocity.
    method: 'auto' (exact flow on disk models, Heun on the cylinder) or
       'heun' to force Heun everywhere.
    """
    x = np.array(x0, dtype=float, copy=True).ravel()
    y = np.array(y0, dtype=float, copy=True).ravel()
    th = np.array(theta0, dtype=float, copy=True).ravel()
    n = x.size
    want_int = f is not None or u is not None
    use_heun = method == "heun" or model.kind == "Cylinder"

    res = TraceResult(exit_x=np.zeros(n), exit_y=np.zeros(n),
                      exit_theta=np.zeros(n), exit_comp=np.zeros(n, np.int64),
                      exit_s=np.zeros(n), exit_normal=np.zeros(n),
                      exit_time=np.zeros(n), capped=np.zeros(n, bool),
                      integral=np.zeros(n) if want_int else None)

    alive = np.arange(n)
    t = np.zeros(n)
    fg = _integrand(model, x, y, th, f, u) if want_int else None
    n_steps = int(math.ceil(t_max / step))

    for _ in range(n_steps):
        if alive.size == 0:
            break
        xa, ya, tha = x[alive], y[alive], th[alive]
        x1, y1, th1 = _advance(model, xa, ya, tha, step, use_heun)
        exc = _excess(model, x1, y1)
        out = exc > _EXIT_EPS

        if np.any(out):
            tau, xe, ye, the = _bisect_exit(model, xa[out], ya[out], tha[out],
                                            step, use_heun)
            gone = alive[out]
            res.exit_x[gone], res.exit_y[gone] = xe, ye
            res.exit_theta[gone] = the
            res.exit_time[gone] = t[gone] + tau
            if want_int:
                fe = _integrand(model, xe, ye, the, f, u)
                res.integral[gone] += 0.5 * (fg[alive][out] + fe) * tau
            x1, y1, th1 = x1[~out], y1[~out], th1[~out]

        keep = ~out
        stay = alive[keep]
        x[stay], y[stay], th[stay] = x1, y1, th1
        t[stay] += step
        if want_int:
            fnew = _integrand(model, x1, y1, th1, f, u)
            res.integral[stay] += 0.5 * (fg[alive][keep] + fnew) * step
            fg_next = np.zeros(n)
            fg_next[stay] = fnew
            fg = fg_next
        alive = stay

    if alive.size:
        res.capped[alive] = True
        res.exit_x[alive], res.exit_y[alive] = x[alive], y[alive]
        res.exit_theta[alive] = th[alive]
        res.exit_time[alive] = t[alive]

    done = res.capped == False  # noqa: E712 (array comparison)
    if np.any(done):
        _fill_exit_geometry(model, res, np.nonzero(done)[0])
    return res


def _advance(model, x, y, th, dt, use_heun):
    if use_heun:
        x1, y1, th1 = _heun_step(model, x, y, th, dt)
        if model.kind == "Cylinder":
            x1 = np.mod(x1, 2.0)
            return x1, y1, th1
        z, th1 = model.group.fold_state(x1 + 1j * y1, th1)
        return np.real(z), np.imag(z), th1
    z, th1 = mb.exact_geodesic_flow(x + 1j * y, th, dt, model.kappa0)
    z, th1 = model.group.fold_state(z, th1)
    return np.real(z), np.imag(z), th1


def _excess(model, x, y):
    if model.kind == "Cylinder":
        return model.boundary_excess(x, y)
    return model.boundary_excess(x + 1j * y)


def _bisect_exit(model, x0, y0, th0, h, use_heun):
    """Locate the exit time within a step by bisection on the boundary excess.

    The partial step is always re-integrated from the pre-step state, which
    keeps the located point exactly on the numerical trajectory family.
    """
    lo = np.zeros(x0.shape)
    hi = np.full(x0.shape, h)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        xm, ym, _ = _advance(model, x0, y0, th0, mid, use_heun)
        inside = _excess(model, xm, ym) <= _EXIT_EPS
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    tau = 0.5 * (lo + hi)
    xe, ye, the = _advance(model, x0, y0, th0, tau, use_heun)
    return tau, xe, ye, the


def _fill_exit_geometry(model, res, idx):
    if model.kind == "Cylinder":
        y = res.exit_y[idx]
        comp = (y > 0).astype(np.int64)
        res.exit_comp[idx] = comp
        res.exit_s[idx] = np.mod(res.exit_x[idx] / 2.0, 1.0)
        res.exit_normal[idx] = np.where(comp == 0, 0.5 * np.pi, 1.5 * np.pi)
        return
    z = res.exit_x[idx] + 1j * res.exit_y[idx]
    comp, s, normal = model.locate_exit(z)
    res.exit_comp[idx] = comp
    res.exit_s[idx] = s
    res.exit_normal[idx] = normal


# ---------------------------------------------------------------------------
# single-ray trace (diagnostics and convergence tests)

@dataclass
class GeodesicTrace:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    exited: bool
    exit_time: float = None
    exit_comp: int = None
    exit_s: float = None
    exit_alpha: float = None


def integrate(model, x0, y0, theta0, h=1e-3, t_max=30.0, method="heun"):
    """Integrate a single geodesic, recording every step."""
    if h <= 0:
        raise ValueError("step size must be positive")
    res = trace_rays(model, [x0], [y0], [theta0], step=h, t_max=t_max,
                     method=method)
    # re-run recording positions (single ray; cost is negligible at test sizes)
    use_heun = method == "heun" or model.kind == "Cylinder"
    x, y, th = (np.array([x0]), np.array([y0]), np.array([theta0]))
    ts, xs, ys, ths = [0.0], [x[0]], [y[0]], [th[0]]
    t = 0.0
    while t < t_max - 1e-15:
        x1, y1, th1 = _advance(model, x, y, th, h, use_heun)
        if _excess(model, x1, y1)[0] > _EXIT_EPS:
            break
        x, y, th = x1, y1, th1
        t += h
        ts.append(t), xs.append(x[0]), ys.append(y[0]), ths.append(th[0])
    exited = not bool(res.capped[0])
    return GeodesicTrace(np.array(ts), np.array(xs), np.array(ys), np.array(ths),
                         exited,
                         exit_time=float(res.exit_time[0]) if exited else None,
                         exit_comp=int(res.exit_comp[0]) if exited else None,
                         exit_s=float(res.exit_s[0]) if exited else None,
                         exit_alpha=float(res.exit_alpha[0]) if exited else None)


def scattering_endpoint(model, comp, s, alpha, h=1e-3, t_max=30.0, step=None):
    """Exit point of the influx state (component, s, alpha from inner normal)."""
    if model.kind == "Cylinder":
        x, y, normal = model.boundary_point(comp, np.atleast_1d(s))
    else:
        z, normal = model.boundary_point(comp, np.atleast_1d(s))
        x, y = np.real(z), np.imag(z)
    theta = normal + np.asarray(alpha)
    if step is None:
        step = h if model.kind == "Cylinder" else 0.02
    return trace_rays(model, x, y, theta, step=step, t_max=t_max)


# ---------------------------------------------------------------------------
# Jacobi fields

@dataclass
class JacobiTrace:
    t: np.ndarray
    a: np.ndarray
    da: np.ndarray
    b: np.ndarray
    db: np.ndarray
    A: np.ndarray
    B: np.ndarray


def _jacobi_rhs(model, state):
    x, y, th, a, da, b, db, A, dA, B, dB = state
    dx, dy, dth = geodesic_rhs(model, x, y, th)
    if model.kind == "Cylinder":
        kap = sf.curvature(model, x, y)
        kperp = sf.curvature_prime(model, y) * np.cos(th)
    else:
        kap = np.full(np.shape(x), -model.kappa0)
        kperp = np.zeros(np.shape(x))
    return np.array([dx, dy, dth,
                     da, -kap * a,
                     db, -kap * b,
                     dA, -kap * A - a * b * kperp,
                     dB, -kap * B - b * b * kperp])


def jacobi_propagate(model, x0, y0, theta0, t_max, h=1e-3, record_every=10):
    """Propagate the Jacobi system along one geodesic (no exit detection).

    a, b solve y'' + kappa y = 0 with (1,0) and (0,1) initial data; A = Va
    and B = Vb solve the inhomogeneous variational equations with zero
    initial data and source terms -a b kappa_perp and -b^2 kappa_perp.
    """
    state = np.array([x0, y0, theta0, 1.0, 0.0, 0.0, 1.0,
                      0.0, 0.0, 0.0, 0.0], dtype=float)
    n = int(round(t_max / h))
    ts, rec = [0.0], [state.copy()]
    for i in range(n):
        k1 = _jacobi_rhs(model, state)
        k2 = _jacobi_rhs(model, state + h * k1)
        state = state + 0.5 * h * (k1 + k2)
        if model.kind == "Cylinder":
            state[0] = np.mod(state[0], 2.0)
        else:
            z, th = model.group.fold_state(np.atleast_1d(state[0] + 1j * state[1]),
                                           np.atleast_1d(state[2]))
            state[0], state[1], state[2] = z[0].real, z[0].imag, th[0]
        if (i + 1) % record_every == 0 or i == n - 1:
            ts.append((i + 1) * h)
            rec.append(state.copy())
    rec = np.array(rec)
    return JacobiTrace(np.array(ts), rec[:, 3], rec[:, 4], rec[:, 5], rec[:, 6],
                       rec[:, 7], rec[:, 9])


def w_kernel_probe(model, x0, y0, theta0, t, h=1e-3):
    """V(a/b)(t) = (A b - a B)/b^2, the error-operator kernel ingredient."""
    if t <= 0:
        raise ValueError("probe time must be positive")
    tr = jacobi_propagate(model, x0, y0, theta0, t, h=h)
    a, b, A, B = tr.a[-1], tr.b[-1], tr.A[-1], tr.B[-1]
    return (A * b - a * B) / b ** 2


# ---------------------------------------------------------------------------
# escape rates

def escape_rate(model, n_samples=20000, t_max=12.0, bin_width=0.1, seed=0,
                step=0.05):
    """Survival function of the geodesic flow under Liouville sampling.

    Samples (x, y) uniformly w.r.t. the Riemannian area on the domain (by
    rejection) and theta uniformly, then measures the fraction still inside
    at each bin time.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples")
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = model.extent
    xs = np.empty(0)
    ys = np.empty(0)
    # rejection sampling against the area element
    cap = None
    while xs.size < n_samples:
        m = 4 * (n_samples - xs.size) + 1000
        cx = rng.uniform(x0, x1, m)
        cy = rng.uniform(y0, y1, m)
        if model.kind == "Cylinder":
            ok = np.abs(cy) < 1.0
        else:
            ok = model.in_domain(cx + 1j * cy)
        cx, cy = cx[ok], cy[ok]
        w = model.area_element(cx, cy)
        if cap is None:
            if model.kind == "Cylinder":
                cap = float(model._h(1.0))
            else:
                zb = np.concatenate([np.atleast_1d(model.boundary_point(k, np.linspace(0, 1, 256, endpoint=False))[0])
                                     for k in range(model.n_components)])
                cap = float(np.max(model.area_element(np.real(zb), np.imag(zb)))) * 1.1
        acc = rng.uniform(0.0, cap, cx.size) < w
        xs = np.concatenate([xs, cx[acc]])
        ys = np.concatenate([ys, cy[acc]])
    xs, ys = xs[:n_samples], ys[:n_samples]
    th = rng.uniform(0.0, 2.0 * np.pi, n_samples)

    n_bins = int(round(t_max / bin_width))
    steps_per_bin = max(1, int(round(bin_width / step)))
    dt = bin_width / steps_per_bin
    use_heun = model.kind == "Cylinder"
    V = np.empty(n_bins + 1)
    V[0] = 1.0
    x, y, t_ang = xs.copy(), ys.copy(), th.copy()
    alive = np.ones(n_samples, dtype=bool)
    xa, ya, tha = x, y, t_ang
    for i in range(n_bins):
        for _ in range(steps_per_bin):
            xa, ya, tha = _advance(model, xa, ya, tha, dt, use_heun)
            inside = _excess(model, xa, ya) <= _EXIT_EPS
            xa, ya, tha = xa[inside], ya[inside], tha[inside]
            live_idx = np.nonzero(alive)[0][~inside]
            alive[live_idx] = False
        V[i + 1] = alive.mean()
        if not alive.any():
            V[i + 2:] = 0.0
            break
    ts = np.arange(n_bins + 1) * bin_width
    return ts, V


def estimate_delta_gamma(ts, V, v_transient=0.5, v_floor=1e-3):
    """delta = 1 - slope of the least-squares line through (t, -log V).

    The fit window drops the transient (times before V first falls under
    v_transient) and the depleted tail (V below v_floor).
    """
    ts = np.asarray(ts, dtype=float)
    V = np.asarray(V, dtype=float)
    below = np.nonzero(V < v_transient)[0]
    start = below[0] if below.size else 1
    window = (np.arange(ts.size) >= start) & (V > v_floor)
    if window.sum() < 3:
        raise ValueError("degenerate escape-rate fit window")
    tt = ts[window]
    yy = -np.log(V[window])
    slope = np.polyfit(tt, yy, 1)[0]
    return 1.0 - float(slope)
