"""Concrete surface models: Schottky quotients with funnel cuts, the
variable-curvature cylinder, and a plain hyperbolic disk patch.

Disk models are conformal, g = e^{2 phi}(dx^2 + dy^2) with
phi = log(2/(1-|z|^2)) - (1/2) log kappa0, curvature -kappa0.  The cylinder
is R/2Z x (-1,1) with g = h_eps(y)^2 dx^2 + dy^2, h_eps = cosh(y) cosh(eps y).

Internal disk geometry (depths, Fermi coordinates, flow times) is kept in
unit-curvature units; lengths in the surface metric carry a 1/sqrt(kappa0)
factor applied at the interfaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mobius as mb

__all__ = [
    "SurfaceModel",
    "GridField",
    "BoundarySamples",
    "build_model",
    "curvature",
    "curvature_gradient_sup",
    "boundary_parameterize",
]

DISK_KINDS = ("SchottkyOneGen", "SchottkyTorus", "SchottkyPants", "DiskPatch")


# ---------------------------------------------------------------------------
# grid fields

@dataclass
class GridField:
    """N x N masked field over the computational rectangle.

    values[iy, ix] with x varying along columns; cells of size 2/N; entries
    outside the mask are kept at exactly zero.
    """

    values: np.ndarray
    mask: np.ndarray
    extent: tuple  # (x0, x1, y0, y1)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        self.values = np.where(self.mask, self.values, 0.0)

    @property
    def n(self):
        return self.mask.shape[0]

    def copy(self):
        return GridField(self.values.copy(), self.mask.copy(), self.extent)

    def cell_centers(self):
        x0, x1, y0, y1 = self.extent
        n = self.mask.shape[0]
        xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
        ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
        return np.meshgrid(xs, ys)

    def sample(self, x, y):
        """Bilinear interpolation; zero outside the rectangle / mask."""
        return bilinear_sample(self.values, self.extent, x, y)


def bilinear_sample(values, extent, x, y):
    x0, x1, y0, y1 = extent
    ny, nx = values.shape
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    fx = (np.asarray(x, dtype=float) - x0) / hx - 0.5
    fy = (np.asarray(y, dtype=float) - y0) / hy - 0.5
    ix = np.floor(fx).astype(np.int64)
    iy = np.floor(fy).astype(np.int64)
    tx = fx - ix
    ty = fy - iy
    out = np.zeros(np.broadcast(fx, fy).shape, dtype=float)
    for dx, wx in ((0, 1.0 - tx), (1, tx)):
        for dy, wy in ((0, 1.0 - ty), (1, ty)):
            jx = ix + dx
            jy = iy + dy
            ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
            vals = np.zeros_like(out)
            vals[ok] = values[jy[ok], jx[ok]]
            out += np.asarray(wx * wy) * vals
    return out


# ---------------------------------------------------------------------------
# boundary components and their lifts

class FunnelBoundary:
    """One quotient boundary component: the equidistant curve at depth rho
    from a closed-geodesic axis, parameterized by the Fermi coordinate along
    one period of the axis.
    """

    def __init__(self, U, side, ell, rho):
        self.U = U          # disk map sending the real diameter to the axis
        self.Uinv = U.inverse()
        self.side = side    # +1: funnel above the axis in standard coords
        self.ell = ell      # translation length of the primitive word (H^2)
        self.rho = rho
        self.length = math.cosh(rho) * ell  # arclength, unit curvature

    def point(self, s):
        """Boundary point and inner-normal Euclidean angle at s in [0,1)."""
        u = np.asarray(s, dtype=float) * self.ell
        z0 = np.tanh(0.5 * u).astype(complex)
        zb, th = mb.exact_geodesic_flow(z0, np.full_like(u, self.side * 0.5 * np.pi), self.rho)
        th = th + self.U.deriv_arg(zb)
        zb = self.U.apply(zb)
        return zb, np.mod(th + np.pi, 2.0 * np.pi)

    def param_from_point(self, z):
        """Fermi parameter s in [0,1) of a point on (or near) the curve,
        expressed in the canonical lift's coordinates."""
        w = self.Uinv.apply(z)
        u = np.log(np.abs((1.0 + w) / (1.0 - w)))
        return np.mod(u / self.ell, 1.0)


class CircleBoundary:
    """Boundary of the disk patch of hyperbolic radius R about the origin."""

    def __init__(self, R):
        self.R = R
        self.length = 2.0 * np.pi * math.sinh(R)

    def point(self, s):
        phi = 2.0 * np.pi * np.asarray(s, dtype=float)
        zb = math.tanh(0.5 * self.R) * np.exp(1j * phi)
        return zb, np.mod(phi + np.pi, 2.0 * np.pi)

    def param_from_point(self, z):
        return np.mod(np.angle(z) / (2.0 * np.pi), 1.0)


class CylinderEdge:
    """Cylinder boundary circle y = y_edge (+1 or -1)."""

    def __init__(self, y_edge, h_val):
        self.y_edge = y_edge
        self.length = 2.0 * h_val

    def point(self, s):
        x = 2.0 * np.asarray(s, dtype=float)
        y = np.full_like(x, self.y_edge)
        normal = np.full_like(x, 0.5 * np.pi if self.y_edge < 0 else 1.5 * np.pi)
        return x, y, normal

    def param_from_point(self, x):
        return np.mod(np.asarray(x, dtype=float) / 2.0, 1.0)


class Lift:
    """One disk lift of a funnel axis, with the deck word relating it to the
    component's canonical lift (axis = gamma(canonical axis))."""

    def __init__(self, comp_index, gamma, p, q, side_hint=None):
        self.comp_index = comp_index
        self.gamma = gamma
        self.gamma_inv = gamma.inverse()
        self.p = p
        self.q = q
        c, r = mb.geodesic_circle(p, q)
        self.circle = (c, r) if c is not None else None
        if self.circle is None:
            self.psi = float(np.angle(q))
            # which side of the diameter is the funnel
            if side_hint is None:
                raise ValueError("diameter lift needs a side hint")
            self.dside = side_hint

    def signed_depth(self, z):
        """Distance to the axis, positive on the funnel side (unit curvature)."""
        z = np.asarray(z, dtype=complex)
        den = 1.0 - np.abs(z) ** 2
        if self.circle is not None:
            c, r = self.circle
            return np.arcsinh((r * r - np.abs(z - c) ** 2) / (den * r))
        t = np.imag(z * np.exp(-1j * self.psi))
        return self.dside * np.arcsinh(2.0 * t / den)

    def normal_angle(self, z):
        """Euclidean angle of the inner normal (toward decreasing depth)."""
        z = np.asarray(z, dtype=complex)
        den = 1.0 - np.abs(z) ** 2
        if self.circle is not None:
            c, r = self.circle
            A = r * r - np.abs(z - c) ** 2
            B = r * den
            grad = (-2.0 * (z - c) * B - A * (-2.0 * r * z)) / B ** 2
        else:
            t = np.imag(z * np.exp(-1j * self.psi))
            grad = self.dside * (2j * np.exp(1j * self.psi) / den
                                 + 4.0 * t * z / den ** 2)
        return np.mod(np.angle(-grad), 2.0 * np.pi)

    def key(self):
        if self.circle is not None:
            c, r = self.circle
            return (round(c.real, 9), round(c.imag, 9), round(r, 9))
        return (round(self.psi, 9), self.dside)


@dataclass
class BoundarySamples:
    """Struct-of-arrays boundary discretization.

    s is normalized arclength in [0,1) per component; ds the arclength weight
    of each sample in the surface metric.
    """

    component: np.ndarray
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    normal_angle: np.ndarray
    ds: np.ndarray
    n_components: int

    def __len__(self):
        return len(self.s)


# ---------------------------------------------------------------------------
# the surface model

class SurfaceModel:
    def __init__(self, kind, param, kappa0=1.0, n_grid=150, cut_depth=None):
        if kind not in DISK_KINDS + ("Cylinder",):
            raise ValueError("unknown model kind %r" % kind)
        self.kind = kind
        self.param = float(param)
        self.kappa0 = float(kappa0)
        self.n_grid = int(n_grid)
        if self.n_grid < 16:
            raise ValueError("grid resolution must be at least 16")

        if kind == "Cylinder":
            eps = self.param
            if not (0.0 <= eps <= math.acosh(2.0)):
                raise ValueError("cylinder parameter must lie in [0, arccosh 2]")
            self.extent = (0.0, 2.0, -1.0, 1.0)
            self.group = None
            self.components = [CylinderEdge(-1.0, self._h(-1.0)),
                               CylinderEdge(1.0, self._h(1.0))]
        else:
            self.extent = (-1.0, 1.0, -1.0, 1.0)
            self._build_disk(cut_depth)

        self.mask = self._build_mask()
        if not self.mask.any():
            raise ValueError("empty domain mask; check parameters")

    # -- cylinder metric pieces ------------------------------------------

    def _h(self, y):
        e = self.param
        return np.cosh(y) * np.cosh(e * y)

    def _h_prime(self, y):
        e = self.param
        return np.sinh(y) * np.cosh(e * y) + e * np.cosh(y) * np.sinh(e * y)

    # -- disk construction ------------------------------------------------

    def _build_disk(self, cut_depth):
        kind = self.kind
        if kind == "DiskPatch":
            R = self.param
            if R <= 0:
                raise ValueError("disk patch radius must be positive")
            self.group = mb.SchottkyGroup([])
            self.cut_depth = R
            self.components = [CircleBoundary(R)]
            self.lifts = [_RadialLift()]
            return

        x = self.param
        if not (-1.0 < x < 0.0):
            raise ValueError("Schottky parameter x must lie in (-1, 0)")
        a = 2.0 * x / (x * x + 1.0)
        if kind == "SchottkyOneGen":
            gens = [mb.translation(a, "A")]
            default_rho = 0.8
        elif kind == "SchottkyTorus":
            gens = [mb.translation(a, "A"), mb.translation(1j * a, "B")]
            default_rho = 0.35
        else:  # SchottkyPants
            R90 = mb.rotation(0.5 * np.pi)
            gens = [R90.compose(mb.translation(a, "A")),
                    R90.inverse().compose(mb.translation(1j * a, "B"))]
            default_rho = 0.35
        self.group = mb.SchottkyGroup(gens)
        for i, (ci, ri) in enumerate(self.group.walls):
            for cj, rj in self.group.walls[i + 1:]:
                if abs(ci - cj) <= ri + rj:
                    raise ValueError("Schottky walls intersect; x out of range")
        rho = float(default_rho if cut_depth is None else cut_depth)
        if rho <= 0:
            raise ValueError("cut depth must be positive")
        self.cut_depth = rho

        if kind == "SchottkyOneGen":
            ell = _translation_length(gens[0])
            self.components = [FunnelBoundary(mb.identity(), +1, ell, rho),
                               FunnelBoundary(mb.identity(), -1, ell, rho)]
            self.lifts = [Lift(0, mb.identity(), -1.0 + 0j, 1.0 + 0j, side_hint=+1),
                          Lift(1, mb.identity(), -1.0 + 0j, 1.0 + 0j, side_hint=-1)]
            return

        if kind == "SchottkyTorus":
            A, B = self.group.elements[0], self.group.elements[1]
            words = [A.compose(B).compose(A.inverse()).compose(B.inverse())]
        else:
            G1, G2 = self.group.elements[0], self.group.elements[1]
            words = [G1, G2, G1.compose(G2.inverse())]

        self.components = []
        canonical = []
        for W in words:
            p, q = W.fixed_points()
            ell = _translation_length(W)
            U = _axis_map(p, q)
            side = _funnel_side(U, p, q)
            self.components.append(FunnelBoundary(U, side, ell, rho))
            canonical.append((W, p, q))
        self.lifts = self._collect_lifts(canonical, rho)

    def _collect_lifts(self, canonical, rho, max_conj_len=3):
        # probe points: coarse fundamental-domain sample used to decide which
        # conjugate axes actually carve the domain
        n = 64
        xs = np.linspace(-0.999, 0.999, n)
        X, Y = np.meshgrid(xs, xs)
        Z = (X + 1j * Y).ravel()
        Z = Z[np.abs(Z) < 0.999]
        Z = Z[self.group.in_fundamental_domain(Z)]

        lifts = []
        seen = set()
        for ci, (W, p, q) in enumerate(canonical):
            for _, g in mb.reduced_words(self.group, max_conj_len):
                gp, gq = g.apply(p), g.apply(q)
                try:
                    lift = Lift(ci, g, gp, gq)
                except ValueError:
                    continue  # conjugate axis through the origin: never a cut here
                key = (ci,) + lift.key()
                if key in seen:
                    continue
                seen.add(key)
                if np.any(lift.signed_depth(Z) >= rho - 0.15):
                    lifts.append(lift)
        return lifts

    # -- domain predicates -------------------------------------------------

    def boundary_excess(self, *pos):
        """Signed exit indicator: positive outside the domain.

        Disk models: max over funnel lifts of depth - rho (unit curvature).
        Cylinder: |y| - 1.  Vectorized.
        """
        if self.kind == "Cylinder":
            (x, y) = pos
            return np.abs(np.asarray(y, dtype=float)) - 1.0
        (z,) = pos
        z = np.asarray(z, dtype=complex)
        best = np.full(z.shape, -np.inf)
        for lift in self.lifts:
            d = lift.signed_depth(z) - self.cut_depth
            best = np.maximum(best, d)
        return best

    def exit_lift_index(self, z):
        """Index (into self.lifts) of the deepest-violation funnel lift."""
        z = np.asarray(z, dtype=complex)
        best = np.full(z.shape, -np.inf)
        idx = np.zeros(z.shape, dtype=np.int64)
        for k, lift in enumerate(self.lifts):
            d = lift.signed_depth(z)
            better = d > best
            best = np.where(better, d, best)
            idx[better] = k
        return idx

    def in_domain(self, *pos):
        if self.kind == "Cylinder":
            return self.boundary_excess(*pos) <= 0.0
        (z,) = pos
        z = np.asarray(z, dtype=complex)
        ok = np.abs(z) < 1.0
        zz = np.where(ok, z, 0.0)
        ok &= self.group.in_fundamental_domain(zz)
        ok &= self.boundary_excess(zz) <= 0.0
        return ok

    def _build_mask(self):
        n = self.n_grid
        x0, x1, y0, y1 = self.extent
        xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
        ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
        X, Y = np.meshgrid(xs, ys)
        if self.kind == "Cylinder":
            return np.abs(Y) < 1.0
        return self.in_domain(X + 1j * Y)

    def zero_field(self):
        n = self.n_grid
        return GridField(np.zeros((n, n)), self.mask.copy(), self.extent)

    # -- metric ------------------------------------------------------------

    def phi(self, z):
        """Conformal log-factor of the disk metric."""
        return np.log(2.0 / (1.0 - np.abs(z) ** 2)) - 0.5 * math.log(self.kappa0)

    def grad_phi(self, z):
        """(d/dx, d/dy) of phi as a complex number dphi_x + i dphi_y."""
        z = np.asarray(z, dtype=complex)
        return 2.0 * z / (1.0 - np.abs(z) ** 2)

    def area_element(self, x, y):
        """sqrt(det g) at coordinate points (vectorized)."""
        if self.kind == "Cylinder":
            return self._h(np.asarray(y, dtype=float))
        z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
        r2 = np.abs(z) ** 2
        inside = r2 < 1.0
        out = np.zeros(np.shape(z))
        out = np.where(inside, (2.0 / np.where(inside, 1.0 - r2, 1.0)) ** 2 / self.kappa0, 0.0)
        return out

    def distance(self, z, w):
        """Riemannian distance between interior points (disk models)."""
        if self.kind == "Cylinder":
            raise NotImplementedError("distance only provided for disk models")
        return mb.hyperbolic_distance(z, w) / math.sqrt(self.kappa0)

    # -- boundary ----------------------------------------------------------

    @property
    def n_components(self):
        return len(self.components)

    def component_length(self, k):
        """Arclength of boundary component k in the surface metric."""
        comp = self.components[k]
        if self.kind == "Cylinder":
            return comp.length
        return comp.length / math.sqrt(self.kappa0)

    def boundary_point(self, k, s):
        """Position and inner-normal angle at parameter s of component k.

        Disk models return (z complex, normal_angle); positions are folded
        into the fundamental domain.
        """
        comp = self.components[k]
        if self.kind == "Cylinder":
            x, y, normal = comp.point(s)
            return x, y, normal
        zb, _ = comp.point(s)
        zb = np.atleast_1d(zb)
        if self.kind != "DiskPatch":
            zb = self.group.fold(zb)
        return zb, self.normal_angle_at(zb)

    def normal_angle_at(self, z, lift_idx=None):
        """Inner-normal angle at boundary points (deepest lift's normal)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if lift_idx is None:
            lift_idx = self.exit_lift_index(z)
        normal = np.zeros(z.shape)
        for k, lift in enumerate(self.lifts):
            selm = lift_idx == k
            if np.any(selm):
                normal[selm] = lift.normal_angle(z[selm])
        return normal

    def locate_exit(self, z, lift_idx=None):
        """Map exit points (on/near the cut curves) to (component, s, normal).

        Disk models only; `z` complex array.  Returns the inner-normal angle
        at the exit position in the given coordinates.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if lift_idx is None:
            lift_idx = self.exit_lift_index(z)
        comp_idx = np.zeros(z.shape, dtype=np.int64)
        s_out = np.zeros(z.shape)
        for k, lift in enumerate(self.lifts):
            selm = lift_idx == k
            if not np.any(selm):
                continue
            comp = self.components[lift.comp_index]
            if lift.gamma is None:
                s = comp.param_from_point(z[selm])
            else:
                s = comp.param_from_point(lift.gamma_inv.apply(z[selm]))
            comp_idx[selm] = lift.comp_index
            s_out[selm] = s
        return comp_idx, s_out, self.normal_angle_at(z, lift_idx)


class _RadialLift:
    """Boundary 'lift' of the disk patch: the circle d(0,z) = R."""

    comp_index = 0
    gamma = None

    def signed_depth(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        return 2.0 * np.arctanh(np.minimum(r, 1.0 - 1e-15))

    def normal_angle(self, z):
        return np.mod(np.angle(-np.asarray(z, dtype=complex)), 2.0 * np.pi)

    def key(self):
        return ("radial",)


def _translation_length(T):
    """Hyperbolic translation length 2 arccosh(|tr|/2) (unit curvature)."""
    tr = abs(T.trace().real)
    if tr <= 2.0:
        raise ValueError("element is not hyperbolic")
    return 2.0 * math.acosh(tr / 2.0)


def _axis_map(p, q):
    """Disk automorphism U with U(-1) = p, U(1) = q (real diameter -> axis)."""
    c, r = mb.geodesic_circle(p, q)
    if c is None:
        return mb.rotation(float(np.angle(q)))
    m = c * (abs(c) - r) / abs(c)  # closest point of the axis to the origin
    T = mb.translation(m)
    psi = float(np.angle(T.apply(q)))
    return T.inverse().compose(mb.rotation(psi))


def _funnel_side(U, p, q):
    """+1 or -1: which Fermi side of the axis is the funnel (non-origin side)."""
    c, r = mb.geodesic_circle(p, q)
    if c is None:
        raise ValueError("boundary axis passes through the origin")
    probe = U.apply(0.15j)
    inside = abs(probe - c) < r
    return +1 if inside else -1


# ---------------------------------------------------------------------------
# module-level operations

def build_model(config) -> SurfaceModel:
    """Build a SurfaceModel from a config mapping.

    Recognized keys: kind, x or eps or radius (model parameter), kappa0,
    n_grid, cut_depth.
    """
    kind = config["kind"]
    if kind == "Cylinder":
        param = config.get("eps", config.get("param"))
    elif kind == "DiskPatch":
        param = config.get("radius", config.get("param"))
    else:
        param = config.get("x", config.get("param"))
    if param is None:
        raise ValueError("missing model parameter")
    return SurfaceModel(kind, param,
                        kappa0=config.get("kappa0", 1.0),
                        n_grid=config.get("n_grid", 150),
                        cut_depth=config.get("cut_depth"))


def curvature(model: SurfaceModel, x, y=None):
    """Gauss curvature at coordinate points.

    Disk models: the constant -kappa0.  Cylinder: the closed form
    -1 - eps^2 - 2 eps tanh(y) tanh(eps y).
    """
    if model.kind == "Cylinder":
        e = model.param
        y = np.asarray(y, dtype=float)
        return -1.0 - e * e - 2.0 * e * np.tanh(y) * np.tanh(e * y)
    shape = np.shape(x) if y is None else np.broadcast(x, y).shape
    return np.full(shape, -model.kappa0)


def curvature_prime(model: SurfaceModel, y):
    """d kappa / dy for the cylinder (zero for disk models)."""
    if model.kind != "Cylinder":
        return np.zeros(np.shape(y))
    e = model.param
    y = np.asarray(y, dtype=float)
    return -2.0 * e * (np.tanh(e * y) / np.cosh(y) ** 2
                       + e * np.tanh(y) / np.cosh(e * y) ** 2)


def curvature_gradient_sup(model: SurfaceModel):
    """sup |d kappa|_g over the domain."""
    if model.kind != "Cylinder":
        return 0.0
    ys = np.linspace(-1.0, 1.0, 4001)
    return float(np.max(np.abs(curvature_prime(model, ys))))


def boundary_parameterize(model: SurfaceModel, n_per_component) -> BoundarySamples:
    """Uniform-in-arclength boundary sampling, all components."""
    comps, ss, xs, ys, nas, dss = [], [], [], [], [], []
    for k in range(model.n_components):
        s = (np.arange(n_per_component) + 0.5) / n_per_component
        if model.kind == "Cylinder":
            x, y, na = model.boundary_point(k, s)
        else:
            zb, na = model.boundary_point(k, s)
            x, y = np.real(zb), np.imag(zb)
        comps.append(np.full(n_per_component, k))
        ss.append(s)
        xs.append(np.asarray(x, dtype=float))
        ys.append(np.asarray(y, dtype=float))
        nas.append(np.asarray(na, dtype=float))
        dss.append(np.full(n_per_component, model.component_length(k) / n_per_component))
    return BoundarySamples(np.concatenate(comps), np.concatenate(ss),
                           np.concatenate(xs), np.concatenate(ys),
                           np.concatenate(nas), np.concatenate(dss),
                           model.n_components)
