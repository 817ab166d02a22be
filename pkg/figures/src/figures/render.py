"""Figure rendering: heatmaps, sinograms, error maps, escape-rate fits and
bound tables, assembled from pipeline output files."""

import argparse
import os
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import yaml  # noqa: E402

from . import formats  # noqa: E402

SAVE_OPTS = dict(dpi=110, metadata={"Software": "geoxray-figures"})

KINDS = ("heatmap", "sinogram", "error-map", "escape-curve", "bounds-table")


@dataclass
class FigureSpec:
    kind: str
    inputs: dict = field(default_factory=dict)  # role -> path
    out: str = "figure.png"
    vmin: float = None
    vmax: float = None
    symmetric: bool = False
    periodize: bool = False
    component: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown figure kind %r" % self.kind)
        for role, path in self.inputs.items():
            if not os.path.exists(path):
                raise ValueError("missing input %s: %s" % (role, path))


# ---------------------------------------------------------------------------
# Moebius words for periodized reconstructions

def _compose(m1, m2):
    a1, b1 = m1
    a2, b2 = m2
    return (a1 * a2 + b1 * np.conj(b2), a1 * b2 + b1 * np.conj(a2))


def _inverse(m):
    a, b = m
    return (np.conj(a), -b)


def _apply(m, z):
    a, b = m
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def _generators(kind, x):
    """Disk-model deck generators from the run-config parameter x."""
    a = 2.0 * x / (x * x + 1.0)

    def tr(t):
        return (1.0 + 0.0j, -complex(t))

    def rot(phi):
        return (np.exp(0.5j * phi), 0.0j)

    if kind == "SchottkyOneGen":
        return [tr(a)]
    if kind == "SchottkyTorus":
        return [tr(a), tr(1j * a)]
    if kind == "SchottkyPants":
        return [_compose(rot(0.5 * np.pi), tr(a)),
                _compose(rot(-0.5 * np.pi), tr(1j * a))]
    raise ValueError("no deck group for model kind %r" % kind)


def _words_up_to_two(gens):
    """Reduced group words of length <= 2 (identity first)."""
    letters = []
    for i, g in enumerate(gens):
        letters.append((i + 1, g))
        letters.append((-(i + 1), _inverse(g)))
    words = [(1.0 + 0.0j, 0.0j)]
    words.extend(g for _, g in letters)
    for li, gi in letters:
        for lj, gj in letters:
            if li == -lj:
                continue
            words.append(_compose(gi, gj))
    return words


def _sample(grid, x, y):
    """Bilinear sample of a grid field; returns (values, inside-mask)."""
    n = grid.values.shape[0]
    x0, x1, y0, y1 = grid.extent
    fx = (x - x0) / (x1 - x0) * n - 0.5
    fy = (y - y0) / (y1 - y0) * n - 0.5
    ix = np.clip(np.floor(fx).astype(int), 0, n - 2)
    iy = np.clip(np.floor(fy).astype(int), 0, n - 2)
    tx = np.clip(fx - ix, 0.0, 1.0)
    ty = np.clip(fy - iy, 0.0, 1.0)
    v = (grid.values[iy, ix] * (1 - tx) * (1 - ty)
         + grid.values[iy, ix + 1] * tx * (1 - ty)
         + grid.values[iy + 1, ix] * (1 - tx) * ty
         + grid.values[iy + 1, ix + 1] * tx * ty)
    jx = np.clip(np.round(fx).astype(int), 0, n - 1)
    jy = np.clip(np.round(fy).astype(int), 0, n - 1)
    inside = grid.mask[jy, jx]
    inside &= (fx > -0.5) & (fx < n - 0.5) & (fy > -0.5) & (fy < n - 0.5)
    return v, inside


def periodized(grid, kind, x, n_out=None):
    """Tile the fundamental-domain image over the disk by deck words of
    length <= 2."""
    n = n_out or 2 * grid.values.shape[0]
    xs = -1.0 + (np.arange(n) + 0.5) * 2.0 / n
    X, Y = np.meshgrid(xs, xs)
    Z = X + 1j * Y
    disk = np.abs(Z) < 0.995
    out = np.zeros((n, n))
    filled = np.zeros((n, n), dtype=bool)
    for w in _words_up_to_two(_generators(kind, x)):
        zz = _apply(w, np.where(disk, Z, 0.0))
        v, inside = _sample(grid, zz.real, zz.imag)
        take = disk & inside & ~filled
        out[take] = v[take]
        filled |= take
    return formats.Grid(out, filled, (-1.0, 1.0, -1.0, 1.0), grid.geometry)


# ---------------------------------------------------------------------------
# panels

def _heatmap_panel(ax, grid, symmetric=False, vmin=None, vmax=None,
                   title=None):
    vals = np.ma.masked_where(~grid.mask, grid.values)
    if symmetric and vmin is None:
        amp = float(np.max(np.abs(grid.values[grid.mask]))) or 1.0
        vmin, vmax = -amp, amp
        cmap = plt.get_cmap("RdBu_r")
    else:
        cmap = plt.get_cmap("viridis")
    cmap = cmap.copy()
    cmap.set_bad("white")
    x0, x1, y0, y1 = grid.extent
    im = ax.imshow(vals, origin="lower", extent=(x0, x1, y0, y1),
                   vmin=vmin, vmax=vmax, cmap=cmap, interpolation="nearest")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    return im


def _sinogram_panel(ax, fan, component=0, title=None):
    """Boundary parameter in [0, 1] on x, fiber angle on y."""
    vals = fan.values[component].T
    a0, a1 = float(fan.angles[0]), float(fan.angles[-1])
    im = ax.imshow(vals, origin="lower", extent=(0.0, 1.0, a0, a1),
                   aspect="auto", cmap="viridis", interpolation="nearest")
    ax.set_xlabel("boundary parameter")
    ax.set_ylabel("angle")
    if title:
        ax.set_title(title)
    return im


def _escape_panel(ax, ts, V, meta=None):
    good = (V > 1e-3)
    y = -np.log(np.where(good, V, 1.0))
    ax.plot(ts[good], y[good], "k.", ms=3, label="-log V")
    window = good & (V < 0.5)
    if window.sum() >= 3:
        c1, c0 = np.polyfit(ts[window], y[window], 1)
        ax.plot(ts[window], c0 + c1 * ts[window], "r-",
                label="fit slope %.3f" % c1)
    if meta and "delta_hat" in meta:
        ax.set_title("delta_hat = %s" % meta["delta_hat"])
    ax.set_xlabel("t")
    ax.set_ylabel("-log V(t)")
    ax.legend(loc="upper left")


def _table_panel(ax, rows):
    ax.axis("off")
    cells = [[name, "%.6g" % val] for name, val in sorted(rows.items())]
    ax.table(cellText=cells, colLabels=["quantity", "value"], loc="center")


# ---------------------------------------------------------------------------
# top-level renderers

def render(spec: FigureSpec):
    """Render one figure; returns the output path."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    try:
        if spec.kind in ("heatmap", "error-map"):
            grid = formats.load_grid(spec.inputs["field"])
            symmetric = spec.symmetric or spec.kind == "error-map"
            if spec.periodize:
                cfg = yaml.safe_load(open(spec.inputs["config"]))
                grid = periodized(grid, cfg["model"]["kind"],
                                  float(cfg["model"]["x"]))
            im = _heatmap_panel(ax, grid, symmetric=symmetric,
                                vmin=spec.vmin, vmax=spec.vmax)
            fig.colorbar(im, ax=ax)
        elif spec.kind == "sinogram":
            fan = formats.load_fanbeam(spec.inputs["data"])
            im = _sinogram_panel(ax, fan, component=spec.component)
            fig.colorbar(im, ax=ax)
        elif spec.kind == "escape-curve":
            ts, V, meta = formats.load_escape(spec.inputs["escape"])
            _escape_panel(ax, ts, V, meta)
        else:  # bounds-table
            _table_panel(ax, formats.load_norms(spec.inputs["norms"]))
        fig.savefig(spec.out, **SAVE_OPTS)
    finally:
        plt.close(fig)
    return spec.out


def triptych(rundir, out):
    """Phantom / sinogram / pointwise-error overview of one run."""
    phantom = formats.load_grid(os.path.join(rundir, "phantom.grid"))
    fan = formats.load_fanbeam(os.path.join(rundir, "sinogram.csv"))
    err = formats.load_grid(os.path.join(rundir, "error.grid"))
    formats.check_same_geometry(phantom.geometry, fan.geometry, err.geometry)
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.8))
    try:
        im0 = _heatmap_panel(axes[0], phantom, title="phantom")
        fig.colorbar(im0, ax=axes[0])
        im1 = _sinogram_panel(axes[1], fan, title="data")
        fig.colorbar(im1, ax=axes[1])
        im2 = _heatmap_panel(axes[2], err, symmetric=True, title="error")
        fig.colorbar(im2, ax=axes[2])
        fig.tight_layout()
        fig.savefig(out, **SAVE_OPTS)
    finally:
        plt.close(fig)
    return out


def escape_plot(csv_path, out):
    """Escape-rate survival curve with its least-squares line fit."""
    return render(FigureSpec("escape-curve", {"escape": csv_path}, out))


# ---------------------------------------------------------------------------

def main(argv=None):
    p = argparse.ArgumentParser(prog="geoxray-figures",
                                description="render figures from geoxray "
                                            "pipeline outputs")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("triptych")
    sp.add_argument("rundir")
    sp.add_argument("out")
    sp = sub.add_parser("escape")
    sp.add_argument("csv")
    sp.add_argument("out")
    sp = sub.add_parser("heatmap")
    sp.add_argument("field")
    sp.add_argument("out")
    sp.add_argument("--symmetric", action="store_true")
    sp.add_argument("--periodize", action="store_true")
    sp.add_argument("--config", default=None)
    sp = sub.add_parser("sinogram")
    sp.add_argument("data")
    sp.add_argument("out")
    sp.add_argument("--component", type=int, default=0)
    sp = sub.add_parser("bounds")
    sp.add_argument("norms")
    sp.add_argument("out")
    args = p.parse_args(argv)

    if args.command == "triptych":
        triptych(args.rundir, args.out)
    elif args.command == "escape":
        escape_plot(args.csv, args.out)
    elif args.command == "heatmap":
        inputs = {"field": args.field}
        if args.periodize:
            if not args.config:
                p.error("--periodize requires --config")
            inputs["config"] = args.config
        render(FigureSpec("heatmap", inputs, args.out,
                          symmetric=args.symmetric,
                          periodize=args.periodize))
    elif args.command == "sinogram":
        render(FigureSpec("sinogram", {"data": args.data}, args.out,
                          component=args.component))
    else:
        render(FigureSpec("bounds-table", {"norms": args.norms}, args.out))
    return 0
