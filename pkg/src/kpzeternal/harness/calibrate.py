"""Calibration runs for the lattice backend.

Three things are estimated and written to ``calibration.txt``:

* the landscape spread constant, the smallest C with
  |L(y,s;x,t) + (x-y)^2/(t-s)| <= C * shape(s, t) on the sampled pairs;
* the stationary-boundary oracle, whose horizontal increments are exactly
  Exp(1 - rho), against the fixed-horizon Busemann increments;
* the observed pass rates of the statistical suite on the shipped seeds.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..busemann import LatticeBusemann
from ..lpp import LPPBackend, ScalingMap, box_from_array, passage_table, rho_of, sample_weights
from .config import RunConfig
from .lpp_suite import lpp_statistics, replica_seed
from .manifest import atomic_write

CALIBRATION_FILE = "calibration.txt"
ORACLE_ETAS = (-2.0, 0.0, 2.0)
ORACLE_BOXES = 50


@dataclass(frozen=True)
class SpreadFit:
    constant: float
    quantile_99: float
    samples: int


def spread_fit(n: int, replicas: int, targets: int, run_seed: int = 0, extent: float = 1.0) -> SpreadFit:
    """Fit the spread constant on [-extent, extent]^2 over independent boxes."""
    ratios = []
    for r in range(replicas):
        seed = replica_seed(run_seed, r)
        rng = np.random.default_rng(seed)
        probe = ScalingMap(n)
        m0, k0 = probe.indices(-extent, -extent)
        m1, k1 = probe.indices(extent, extent)
        i_min, j_min = m0 + k0, m0 - k1
        smap = ScalingMap(n, (-i_min, -j_min))
        box = sample_weights(seed, (0, m1 + k1 - i_min, 0, m1 - k0 - j_min))
        unit = LPPBackend(box, smap, spread_constant=1.0)
        ys = np.linspace(-extent, extent, 41)
        for _ in range(targets):
            s, t = np.sort(rng.uniform(-extent, extent, 2))
            if t - s < 4.0 / n:
                continue
            x = float(rng.uniform(-extent, extent))
            vals = unit.eval_many(ys, float(s), x, float(t))
            ok = np.isfinite(vals)
            dev = np.abs(vals[ok] + (x - ys[ok]) ** 2 / (t - s))
            ratios.extend((dev / unit.spread(float(s), float(t), extent)).tolist())
    arr = np.array(ratios)
    return SpreadFit(float(arr.max()), float(np.quantile(arr, 0.99)), int(arr.size))


def stationary_increments(rho: float, size: int, seed: int) -> np.ndarray:
    """Increments along the first axis on the far line of stationary-boundary LPP.

    Boundary weights are Exp(1 - rho) along the first axis and Exp(rho) along
    the second, with 0 at the corner; increments on any one line are then
    i.i.d. Exp(1 - rho). Different lines are strongly correlated.
    """
    rng = np.random.default_rng(seed)
    w = rng.standard_exponential((size, size))
    w[1:, 0] = rng.standard_exponential(size - 1) / (1.0 - rho)
    w[0, 1:] = rng.standard_exponential(size - 1) / rho
    w[0, 0] = 0.0
    g = passage_table(box_from_array(w), (0, 0), (size - 1, size - 1))
    return np.diff(g[:, -1])


def busemann_increment_mean(field: LatticeBusemann, eta: float) -> float:
    table = field._tables[float(eta)]
    return float(np.diff(table, axis=0).mean())


def calibrate(cfg: RunConfig, out_dir=None) -> Path:
    out = Path(out_dir or cfg.output)
    c = cfg.lpp
    fit = spread_fit(c.n, min(c.replicas, 10), c.samples, cfg.seed)
    lines = [
        f"spread.constant={fit.constant!r}",
        f"spread.quantile_99={fit.quantile_99!r}",
        f"spread.samples={fit.samples}",
    ]
    window = (c.x_min, c.x_max, c.t_min, c.t_max)
    field = LatticeBusemann.build(c.n, window, ORACLE_ETAS, c.horizon, replica_seed(cfg.seed, 0), c.max_sites)
    for eta in ORACLE_ETAS:
        rho = rho_of(eta, c.n)
        inc = np.concatenate([stationary_increments(rho, 200, replica_seed(cfg.seed, 10_000 + 100 * k + int(eta)))
                              for k in range(ORACLE_BOXES)])
        lines += [
            f"stationary.eta={eta!r} rho={rho!r} exact_mean={1.0 / (1.0 - rho)!r} "
            f"oracle_mean={float(inc.mean())!r} busemann_mean={busemann_increment_mean(field, eta)!r}",
        ]
    for chk in lpp_statistics(c, cfg.seed):
        lines.append(f"rate.{chk.name.replace(' ', '_')}={chk.detail} passed={chk.passed}")
    atomic_write(out / CALIBRATION_FILE, ("\n".join(lines) + "\n").encode())
    return out / CALIBRATION_FILE
