"""Batch figure rendering for geoxray pipeline outputs.

This package deliberately does not import geoxray: it consumes only the
documented on-disk formats (binary grid fields, fan-beam CSV, escape and
norm CSV tables, run configs) and writes PNG files.
"""

from .formats import (
    FanBeam,
    Grid,
    file_sha256,
    load_escape,
    load_fanbeam,
    load_grid,
    load_norms,
)
from .render import FigureSpec, escape_plot, render, triptych

__all__ = [
    "FanBeam",
    "FigureSpec",
    "Grid",
    "escape_plot",
    "file_sha256",
    "load_escape",
    "load_fanbeam",
    "load_grid",
    "load_norms",
    "render",
    "triptych",
]
