"""Run configuration: a YAML file with model / rays / inversion / phantom
blocks, plus the geometry hash that every output carries so data files
from different models cannot be mixed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import yaml

__all__ = ["RunConfig", "load_config", "save_config", "geometry_hash"]


def _default_rays():
    return {
        "n_boundary": 200,
        "n_influx": 256,
        "alpha_max": 1.5707963267948966,
        "n_full": 512,
        "step": None,        # module defaults when None
        "t_max": 30.0,
    }


def _default_model():
    return {"kind": "SchottkyOneGen", "x": -0.3, "kappa0": 1.0, "n_grid": 150}


@dataclass
class RunConfig:
    model: dict = field(default_factory=_default_model)
    rays: dict = field(default_factory=_default_rays)
    inversion: dict = field(default_factory=lambda: {"iters": 2, "n_dirs": 512})
    phantom: list = field(default_factory=list)  # dicts: center, width, amplitude
    outdir: str = "out"
    seed: int = 0

    def __post_init__(self):
        rays = _default_rays()
        rays.update(self.rays)
        self.rays = rays
        inv = {"iters": 2, "n_dirs": 512}
        inv.update(self.inversion)
        self.inversion = inv
        for key in ("n_boundary", "n_influx", "n_full"):
            if int(self.rays[key]) <= 0:
                raise ValueError("ray count %r must be positive" % key)
        if not 0.0 < float(self.rays["alpha_max"]) <= 0.5 * 3.14159265358979312:
            raise ValueError("influx cone must lie inside (-pi/2, pi/2)")
        if int(self.inversion["iters"]) < 0:
            raise ValueError("iteration count must be nonnegative")

    def model_config(self):
        """The model block in the form build_model consumes."""
        return dict(self.model)


def geometry_hash(cfg: RunConfig) -> str:
    """Hash of everything that determines ray/grid geometry (model block +
    rays block), 16 hex digits of SHA-256 over canonical JSON."""
    payload = {"model": cfg.model, "rays": cfg.rays}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"),
                      default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_config(cfg: RunConfig, path):
    with open(path, "w") as fh:
        yaml.safe_dump(asdict(cfg), fh, sort_keys=True,
                       default_flow_style=False)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    return RunConfig(**raw)
