"""Exact hyperbolic geometry of the Poincare disk.

Mobius transforms are stored as SU(1,1) coefficient pairs (alpha, beta),
acting by z -> (alpha*z + beta) / (conj(beta)*z + conj(alpha)) with
|alpha|^2 - |beta|^2 = 1.  All distances and flow times in this module are
expressed in the unit-curvature disk; curvature rescaling happens at the
surface-model layer.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MobiusTransform",
    "identity",
    "translation",
    "rotation",
    "mobius_apply",
    "mobius_compose",
    "hyperbolic_distance",
    "exact_geodesic_flow",
    "SchottkyGroup",
    "fold_to_fundamental_domain",
    "reduced_words",
]

_DET_TOL = 1e-12


@dataclass(frozen=True)
class MobiusTransform:
    """Disk automorphism z -> (a z + b)/(conj(b) z + conj(a)), |a|^2-|b|^2=1."""

    a: complex
    b: complex
    label: str = ""

    def __post_init__(self):
        det = abs(self.a) ** 2 - abs(self.b) ** 2
        if abs(det - 1.0) > _DET_TOL:
            if det <= 0.0:
                raise ValueError("coefficients do not define a disk isometry")
            s = math.sqrt(det)
            object.__setattr__(self, "a", self.a / s)
            object.__setattr__(self, "b", self.b / s)

    def __call__(self, z):
        return self.apply(z)

    def apply(self, z):
        """Apply to a complex number or numpy array of complex numbers."""
        return (self.a * z + self.b) / (np.conj(self.b) * z + np.conj(self.a))

    def deriv_arg(self, z):
        """arg T'(z); T'(z) = 1/(conj(b) z + conj(a))^2."""
        return -2.0 * np.angle(np.conj(self.b) * z + np.conj(self.a))

    def inverse(self) -> "MobiusTransform":
        lab = self.label[:-1] if self.label.endswith("'") else self.label + "'"
        return MobiusTransform(np.conj(self.a), -self.b, lab)

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        """self after other (matrix product self @ other)."""
        a = self.a * other.a + self.b * np.conj(other.b)
        b = self.a * other.b + self.b * np.conj(other.a)
        return MobiusTransform(a, b, self.label + other.label)

    def is_identity(self, tol=1e-12) -> bool:
        # SU(1,1) is a double cover: -I acts as the identity too
        return abs(self.b) < tol and abs(abs(self.a.real) - 1.0) < tol and abs(self.a.imag) < tol

    def trace(self) -> complex:
        return self.a + np.conj(self.a)

    def fixed_points(self):
        """Fixed points in C-hat, roots of conj(b) z^2 + (conj(a)-a) z - b = 0.

        For hyperbolic elements both lie on the unit circle.
        """
        cb = np.conj(self.b)
        if abs(cb) < 1e-15:
            raise ValueError("rotation about 0 has no boundary fixed points")
        p = np.conj(self.a) - self.a
        disc = cmath.sqrt(p * p + 4.0 * cb * self.b)
        z1 = (-p + disc) / (2.0 * cb)
        z2 = (-p - disc) / (2.0 * cb)
        return z1, z2

    def isometric_circle(self):
        """(center, radius) of {|conj(b) z + conj(a)| = 1}.

        The transform maps the inside of this circle to the outside of the
        isometric circle of its inverse.
        """
        if abs(self.b) < 1e-15:
            raise ValueError("elliptic rotation has no isometric circle")
        return -np.conj(self.a) / np.conj(self.b), 1.0 / abs(self.b)


def identity() -> MobiusTransform:
    return MobiusTransform(1.0 + 0.0j, 0.0j)


def translation(a: complex, label: str = "") -> MobiusTransform:
    """Hyperbolic translation T_a(z) = (z - a)/(1 - conj(a) z), |a| < 1.

    Maps a to 0; for real a it is the axis translation sending x to -x
    when a = 2x/(x^2+1).
    """
    a = complex(a)
    if abs(a) >= 1.0:
        raise ValueError("translation parameter must satisfy |a| < 1")
    s = math.sqrt(1.0 - abs(a) ** 2)
    return MobiusTransform(1.0 / s, -a / s, label)


def rotation(phi: float, label: str = "") -> MobiusTransform:
    """Rotation z -> e^{i phi} z about the origin."""
    return MobiusTransform(cmath.exp(0.5j * phi), 0.0j, label)


def mobius_apply(T: MobiusTransform, z):
    """Apply T to interior point(s); rejects |z| >= 1."""
    if np.any(np.abs(z) >= 1.0):
        raise ValueError("point must lie strictly inside the unit disk")
    return T.apply(z)


def mobius_compose(T1: MobiusTransform, T2: MobiusTransform) -> MobiusTransform:
    """Composition z -> T1(T2(z)), renormalized to unit determinant."""
    return T1.compose(T2)


def hyperbolic_distance(z, w):
    """Distance in the unit-curvature disk (metric 4|dz|^2/(1-|z|^2)^2)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(z) >= 1.0) or np.any(np.abs(w) >= 1.0):
        raise ValueError("distance requires interior points")
    num = 2.0 * np.abs(z - w) ** 2
    den = (1.0 - np.abs(z) ** 2) * (1.0 - np.abs(w) ** 2)
    return np.arccosh(1.0 + num / den)


def exact_geodesic_flow(z, theta, t, kappa0: float = 1.0):
    """Flow (z, theta) along its geodesic for time t in the curvature -kappa0 disk.

    Conjugates the state to the origin (where geodesics are diameters),
    flows along the diameter and conjugates back.  theta is the Euclidean
    direction angle of the unit tangent; it transforms by arg T'.
    Vectorized over numpy arrays.  Returns (z_out, theta_out).
    """
    z = np.asarray(z, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    s = np.tanh(0.5 * np.sqrt(kappa0) * np.asarray(t, dtype=float))
    z1 = s * np.exp(1j * theta)
    # inverse of M(w) = (w - z)/(1 - conj(z) w); the conjugation does not
    # rotate the direction at the matched points (M'(z) > 0).
    denom = 1.0 + np.conj(z) * z1
    z_out = (z1 + z) / denom
    theta_out = theta - 2.0 * np.angle(denom)
    return z_out, theta_out


def geodesic_circle(p: complex, q: complex):
    """Euclidean (center, radius) of the geodesic with ideal endpoints p, q on S^1.

    Returns (None, None) when the geodesic is a diameter (p ~ -q).
    """
    det = (np.conj(p) * q).imag  # cross product p x q
    if abs(det) < 1e-13:
        return None, None
    # solve Re(p conj(c)) = 1, Re(q conj(c)) = 1
    cx = (q.imag - p.imag) / det
    cy = (p.real - q.real) / det
    c = complex(cx, cy)
    if abs(c) < 1.0 + 1e-12:
        return None, None
    r = math.sqrt(abs(c) ** 2 - 1.0)
    return c, r


@dataclass
class SchottkyGroup:
    """Free group of disk isometries pairing disjoint isometric circles.

    ``elements`` lists generators followed by their inverses; ``walls`` the
    matching isometric circles (center, radius).  Element k maps wall k onto
    the wall of its inverse.
    """

    generators: list = field(default_factory=list)

    def __post_init__(self):
        self.elements = list(self.generators) + [g.inverse() for g in self.generators]
        self.walls = [g.isometric_circle() for g in self.elements]
        n = len(self.generators)
        # element k pairs with element (k+n) mod 2n
        self.partner = [(k + n) % (2 * n) for k in range(2 * n)]
        centers = np.array([c for c, _ in self.walls]) if self.walls else np.zeros(0, complex)
        radii = np.array([r for _, r in self.walls]) if self.walls else np.zeros(0)
        self._centers = centers
        self._radii = radii

    def wall_violation(self, z):
        """Index of a wall whose circle contains z, or -1 (scalar z)."""
        for k, (c, r) in enumerate(self.walls):
            if abs(z - c) < r:
                return k
        return -1

    def in_fundamental_domain(self, z):
        """True where z lies outside every wall circle (vectorized)."""
        z = np.asarray(z, dtype=complex)
        ok = np.ones(z.shape, dtype=bool)
        for c, r in self.walls:
            ok &= np.abs(z - c) >= r
        return ok

    def fold(self, z, max_iter: int = 200):
        """Vectorized folding of points into the fundamental domain (no word)."""
        z = np.array(z, dtype=complex, copy=True)
        for _ in range(max_iter):
            moved = False
            for k, (c, r) in enumerate(self.walls):
                inside = np.abs(z - c) < r
                if np.any(inside):
                    z[inside] = self.elements[k].apply(z[inside])
                    moved = True
            if not moved:
                return z
        return z

    def fold_state(self, z, theta, max_iter: int = 200):
        """Fold phase states (z, theta); the direction picks up arg T'."""
        z = np.array(z, dtype=complex, copy=True)
        theta = np.array(theta, dtype=float, copy=True)
        for _ in range(max_iter):
            moved = False
            for k, (c, r) in enumerate(self.walls):
                inside = np.abs(z - c) < r
                if np.any(inside):
                    g = self.elements[k]
                    zi = z[inside]
                    theta[inside] += g.deriv_arg(zi)
                    z[inside] = g.apply(zi)
                    moved = True
            if not moved:
                break
        return z, theta


def fold_to_fundamental_domain(z: complex, group: SchottkyGroup, max_iter: int = 200):
    """Fold a single point into the fundamental domain.

    Returns (z_folded, word) where word is a list of MobiusTransforms whose
    left-to-right composition applied to z_folded recovers z.
    """
    if abs(z) >= 1.0:
        raise ValueError("point must lie inside the unit disk")
    word = []
    for _ in range(max_iter):
        k = group.wall_violation(z)
        if k < 0:
            word.reverse()
            return z, word
        z = group.elements[k].apply(z)
        word.append(group.elements[group.partner[k]])
    raise RuntimeError("folding iteration cap exceeded (point pinned to the limit set)")


def apply_word(word, z):
    """Apply a word (list of transforms, applied right to left) to z."""
    for T in reversed(word):
        z = T.apply(z)
    return z


def reduced_words(group: SchottkyGroup, max_len: int, include_identity: bool = True):
    """Breadth-first reduced words over generators and inverses.

    Yields (word_length, MobiusTransform).  No element is followed by its
    inverse, matching the free-group structure of Schottky groups.
    """
    if include_identity:
        yield 0, identity()
    n2 = len(group.elements)
    frontier = [(k, group.elements[k]) for k in range(n2)]
    length = 1
    while length <= max_len:
        for _, T in frontier:
            yield length, T
        if length == max_len:
            break
        new_frontier = []
        for last, T in frontier:
            for k in range(n2):
                if k == group.partner[last]:
                    continue
                new_frontier.append((k, T.compose(group.elements[k])))
        frontier = new_frontier
        length += 1
