"""Run a configured experiment and write its artifact set."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .. import __version__
from ..busemann import LatticeBusemann, ParabolicBusemann, export_busemann_csv
from ..colormap import (UNRESOLVED, build_color_grid, export_raster_csv, export_tree_json, shock_tree,
                        structure_check)
from ..errors import ConfigError
from ..eternal import (EternalSolutionField, WeightFunction, color_truncation_bound, export_height_csv,
                       require_gate, restrict_weight)
from ..geodesics import (LEFT, RIGHT, GeodesicPath, export_geodesics_csv, export_interfaces_csv,
                         geometric_partition, interface_trajectory, track_backward)
from ..landscape import SpaceTimePoint
from ..lpp import estimate_busemann
from .config import RunConfig
from .corpus import CORPUS
from .manifest import write_manifest

ARTIFACTS = ("height.csv", "busemann.csv", "geodesics.csv", "interfaces.csv", "colormap.csv",
             "shock_tree.json")
GEODESIC_ROOTS = 5
BUSEMANN_POINTS = 5


def load_phi(cfg: RunConfig) -> WeightFunction:
    if cfg.weights_file:
        try:
            text = Path(cfg.weights_file).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read weights file: {exc}") from None
        try:
            return WeightFunction.from_text(text)
        except ValueError as exc:
            raise ConfigError(f"bad weights file: {exc}") from None
    try:
        return CORPUS[cfg.corpus]
    except KeyError:
        raise ConfigError(f"unknown corpus entry {cfg.corpus!r}; known: {sorted(CORPUS)}") from None


def window_of(cfg: RunConfig):
    if cfg.backend == "lpp":
        c = cfg.lpp
        return (c.x_min, c.x_max, c.t_min, c.t_max)
    return cfg.grid.window


def finite_palette(phi: WeightFunction, field, window) -> WeightFunction:
    """Drop directions that cannot win anywhere in the window."""
    if phi.tail is None:
        return phi
    x0, x1, t0, t1 = window
    budget = max(color_truncation_bound(phi, field, x, t) for x in (x0, x1) for t in (t0, t1))
    dirs, _ = phi.support(budget)
    return restrict_weight(phi, dirs)


def build_field(cfg: RunConfig, phi: WeightFunction):
    window = window_of(cfg)
    if cfg.backend == "lpp":
        c = cfg.lpp
        if phi.tail is not None:
            raise ConfigError("the lattice backend needs a finitely supported weight function")
        etas = [d.eta for d in phi.directions]
        field = LatticeBusemann.build(c.n, window, etas, c.horizon, cfg.seed, c.max_sites)
    else:
        field = ParabolicBusemann()
    return EternalSolutionField(finite_palette(phi, field, window), field), window


def _label(grid, code) -> str:
    return "unresolved" if code == UNRESOLVED else str(grid.palette[code])


def _height_rows(b, grid):
    for sl in grid.slices:
        dirs, mat = b.terms(sl.xs, sl.t)
        best = mat.max(axis=0)
        first = np.argmax(mat >= best - 1e-12 * np.maximum(1.0, np.abs(best)), axis=0)
        for n, x in enumerate(sl.xs):
            yield x, sl.t, best[n], dirs[first[n]].eta, _label(grid, sl.codes[n])


def _busemann_rows(b, window):
    x0, x1, t0, t1 = window
    xs = np.linspace(x0, x1, BUSEMANN_POINTS)
    ts = np.linspace(t0, t1, BUSEMANN_POINTS)
    field = b.busemann
    lattice = isinstance(field, LatticeBusemann)
    p = SpaceTimePoint(float(xs[0]), float(ts[0]))
    for xi in b.weights.directions:
        for t in ts:
            for x in xs:
                q = SpaceTimePoint(float(x), float(t))
                value = field.eval(xi, p, q)
                stable = True
                if lattice:
                    est = estimate_busemann(field.box, field.smap, xi.eta, field.smap.site(p),
                                            field.smap.site(q), field.horizon)
                    stable = est.stabilized
                yield xi, p, q, value, stable


def _geodesics(b, grid, window):
    x0, x1, _, t1 = window
    top = grid.slices[-1]
    roots = np.linspace(x0, x1, GEODESIC_ROOTS + 2)[1:-1]
    field = b.busemann
    paths = []
    if isinstance(field, LatticeBusemann):
        smap = field.smap
        for x in roots:
            root = SpaceTimePoint(float(x), top.t)
            site = smap.site(root)
            dirs, mat = b.terms([root.x], root.t)
            eta = dirs[int(np.argmax(mat[:, 0]))].eta
            path = field.geodesic(eta, site)[::-1]
            keep = [s for s in path if (s[0] + s[1] - site[0] - site[1]) % 2 == 0][1:]
            pts = [smap.point(tuple(s)) for s in keep]
            paths.append(GeodesicPath(root, LEFT, np.array([p.t for p in pts]), np.array([p.x for p in pts])))
        return paths
    partition = geometric_partition(top.t, 3, first=0.25)
    for x in roots:
        for side in (LEFT, RIGHT):
            paths.append(track_backward(b, (float(x), top.t), partition, side))
    return paths


def _interfaces(b, grid):
    dirs = list(b.weights.directions)
    consts = b.weights.as_dict()
    out = []
    for left, right in zip(dirs[:-1], dirs[1:]):
        traj = interface_trajectory(b.busemann, left, right, consts[left], consts[right], grid.times)
        out.append((left, right, traj))
    return out


def simulate(cfg: RunConfig, out_dir=None) -> Path:
    """Write the artifact set and manifest; returns the output directory."""
    out = Path(out_dir or cfg.output)
    phi = load_phi(cfg)
    require_gate(phi)
    b, window = build_field(cfg, phi)
    g = cfg.grid
    grid = build_color_grid(b, window, g.spacing, g.dt)
    out.mkdir(parents=True, exist_ok=True)
    export_height_csv(_height_rows(b, grid), out / "height.csv")
    export_busemann_csv(_busemann_rows(b, window), out / "busemann.csv")
    export_geodesics_csv(_geodesics(b, grid, window), out / "geodesics.csv")
    export_interfaces_csv(_interfaces(b, grid), out / "interfaces.csv")
    export_raster_csv(grid, out / "colormap.csv")
    export_tree_json(shock_tree(grid), out / "shock_tree.json")
    rep = structure_check(grid, 0.01)
    header = {
        "name": cfg.name,
        "backend": cfg.backend,
        "corpus": cfg.weights_file or cfg.corpus,
        "seed": str(cfg.seed),
        "config_sha256": cfg.digest(),
        "version": __version__,
        "check.structure": "pass" if rep.passed else "fail: " + "; ".join(rep.failures),
        "check.ambiguity": repr(rep.ambiguity),
        "tolerance": repr(b.busemann.tolerance),
    }
    if cfg.backend == "lpp":
        for k, v in b.busemann.kernel.descriptor().items():
            header[f"lpp.{k}"] = v
    write_manifest(out, ARTIFACTS, header)
    return out
