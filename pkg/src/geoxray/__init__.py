"""Geodesic X-ray transform inversion on negatively curved surfaces with
trapped geodesics: hyperbolic geometry, geodesic flow, forward transforms,
fiberwise harmonic analysis, the inversion pipeline and its analytic
bounds layer.
"""

__version__ = "0.1.0"
