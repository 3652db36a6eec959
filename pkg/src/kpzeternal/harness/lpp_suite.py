"""Monte Carlo checks on the exponential LPP backend."""
from __future__ import annotations

import functools
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..busemann import LatticeBusemann
from ..colormap import border_interface_check, build_color_grid, structure_check, synthesize_weights
from ..eternal import EternalSolutionField
from ..geodesics import coalescence_detect
from ..lpp import box_from_array, last_passage
from .config import LPPConfig
from .corpus import LATTICE_THREE_COLOR
from .suites import Check, register

EXACT_TOL = 1e-9
COALESCENCE_TARGET = 0.95
BORDER_TARGET = 0.9
MAX_AMBIGUITY = 0.01


def replica_seed(run_seed: int, replica: int) -> int:
    """Seed of one replica, a hash of (run seed, replica index)."""
    return int(np.random.SeedSequence([int(run_seed), int(replica)]).generate_state(1, np.uint64)[0] >> 1)


@dataclass(frozen=True)
class ReplicaResult:
    replica: int
    additivity: tuple[int, int]
    superadditivity: tuple[int, int]
    monotonicity: tuple[int, int]
    coalesced: bool
    border: tuple[int, int]
    structure: bool
    ambiguity: float


def _window_sites(field: LatticeBusemann, rng, count: int):
    lo, hi = field.window
    i = rng.integers(lo[0], hi[0] + 1, count)
    j = rng.integers(lo[1], hi[1] + 1, count)
    return list(zip(i.tolist(), j.tolist()))


def run_replica(cfg: LPPConfig, run_seed: int, replica: int) -> ReplicaResult:
    seed = replica_seed(run_seed, replica)
    etas = [d.eta for d in LATTICE_THREE_COLOR.directions]
    window = (cfg.x_min, cfg.x_max, cfg.t_min, cfg.t_max)
    field = LatticeBusemann.build(cfg.n, window, etas, cfg.horizon, seed, cfg.max_sites)
    rng = np.random.default_rng(seed)
    smap = field.smap

    # additivity of the raw estimates with the shared far site
    ok = 0
    sites = _window_sites(field, rng, 3 * cfg.samples)
    for p, q, r in zip(sites[0::3], sites[1::3], sites[2::3]):
        eta = etas[rng.integers(len(etas))]
        lhs = field.raw_increment(eta, p, q) + field.raw_increment(eta, q, r)
        rhs = field.raw_increment(eta, p, r)
        ok += abs(lhs - rhs) <= EXACT_TOL * max(1.0, abs(field.raw(eta, r)))
    additivity = (ok, cfg.samples)

    # superadditivity of passage times with the shared endpoint weight
    lo, hi = field.window
    ok = 0
    for _ in range(cfg.samples):
        p = (int(rng.integers(lo[0], hi[0] - 2)), int(rng.integers(lo[1], hi[1] - 2)))
        r = (int(rng.integers(p[0] + 2, min(hi[0], p[0] + 120) + 1)),
             int(rng.integers(p[1] + 2, min(hi[1], p[1] + 120) + 1)))
        q = (int(rng.integers(p[0], r[0] + 1)), int(rng.integers(p[1], r[1] + 1)))
        whole = last_passage(field.box, p, r)
        parts = last_passage(field.box, p, q) + last_passage(field.box, q, r) - field.box.weight(q)
        ok += whole >= parts - EXACT_TOL * max(1.0, whole)
    superadditivity = (ok, cfg.samples)

    # monotonicity of horizontal increments across directions
    ok = total = 0
    m_lo, m_hi = smap.indices(0.0, cfg.t_min)[0], smap.indices(0.0, cfg.t_max)[0]
    k_lim = int(smap.space_unit * min(-cfg.x_min, cfg.x_max))
    for _ in range(cfg.samples):
        m = int(rng.integers(m_lo, m_hi + 1))
        k1, k2 = sorted(rng.choice(np.arange(-k_lim, k_lim + 1), 2, replace=False).tolist())
        p, q = smap.site_mk(m, k1), smap.site_mk(m, k2)
        for e1, e2 in itertools.combinations(etas, 2):
            a = field.raw_increment(e1, p, q)
            b = field.raw_increment(e2, p, q)
            ok += a <= b + EXACT_TOL * max(1.0, abs(field.raw(e2, q)))
            total += 1
    monotonicity = (ok, total)

    # coalescence of the direction-0 geodesics from p and p + e1
    m_top = smap.indices(0.0, cfg.t_max)[0] - 1
    p = smap.site_mk(m_top, 0)
    q = (p[0] + 1, p[1])
    levels = [p[0] + p[1] - 2 * d for d in range(1, cfg.depth + 1)]
    g1 = field.geodesic_levels(0.0, p, levels)
    g2 = field.geodesic_levels(0.0, q, levels)
    coalesced = coalescence_detect(g1, g2).coalesced

    # borders of the lattice coloring against two-color interfaces
    b = EternalSolutionField(LATTICE_THREE_COLOR, field)
    grid = build_color_grid(b, window)
    struct = structure_check(grid, MAX_AMBIGUITY)
    weights = synthesize_weights(b, grid)
    rep = border_interface_check(grid, b, 0.0, weights)
    good = sum(d <= rep.max_cells for d in rep.deviations)
    border = (good, len(rep.deviations))
    return ReplicaResult(replica, additivity, superadditivity, monotonicity, coalesced, border,
                         struct.passed, struct.ambiguity)


@functools.lru_cache(maxsize=4)
def run_replicas(cfg: LPPConfig, run_seed: int) -> tuple[ReplicaResult, ...]:
    """All replicas, ordered by index whatever the worker count."""
    work = lambda r: run_replica(cfg, run_seed, r)
    if cfg.workers == 1:
        return tuple(work(r) for r in range(cfg.replicas))
    with ThreadPoolExecutor(cfg.workers) as pool:
        return tuple(pool.map(work, range(cfg.replicas)))


def lpp_structure(cfg: LPPConfig | None = None, run_seed: int = 0) -> list[Check]:
    """Coloring structure of the lattice map on every replica."""
    results = run_replicas(cfg or LPPConfig(), run_seed)
    bad = [r.replica for r in results if not r.structure]
    worst = max(r.ambiguity for r in results)
    return [Check("coloring structure on every replica", not bad,
                  f"failing replicas {bad[:5]}, worst ambiguity {worst:.4f} (limit {MAX_AMBIGUITY})")]


def lpp_statistics(cfg: LPPConfig | None = None, run_seed: int = 0, structure: bool = True) -> list[Check]:
    cfg = cfg or LPPConfig()
    results = run_replicas(cfg, run_seed)

    def tally(attr):
        ok = sum(getattr(r, attr)[0] for r in results)
        tot = sum(getattr(r, attr)[1] for r in results)
        return ok, tot

    out = []
    for attr, label in (("additivity", "Busemann additivity"), ("superadditivity", "passage-time superadditivity"),
                        ("monotonicity", "Busemann monotonicity across directions")):
        ok, tot = tally(attr)
        out.append(Check(label, ok == tot, f"{ok}/{tot}"))
    frac = float(np.mean([r.coalesced for r in results]))
    out.append(Check(f"coalescence at depth {cfg.depth}", frac >= COALESCENCE_TARGET,
                     f"{frac:.3f} of {len(results)} replicas"))
    if structure:
        out.extend(lpp_structure(cfg, run_seed))
    ok, tot = tally("border")
    frac = ok / tot if tot else 0.0
    out.append(Check("border within 2 cells of the interface", tot > 0 and frac >= BORDER_TARGET,
                     f"{ok}/{tot} slices"))
    return out


def brute_force_passage(weights: np.ndarray) -> float:
    """Max over all up-right paths, summed in path order."""
    rows, cols = weights.shape
    best = -np.inf
    for downs in itertools.combinations(range(rows + cols - 2), rows - 1):
        i = j = 0
        total = weights[0, 0]
        for step in range(rows + cols - 2):
            if step in downs:
                i += 1
            else:
                j += 1
            total = weights[i, j] + total
        best = max(best, total)
    return float(best)


def lpp_exact(config=None, draws: int = 1000, seed: int = 2024) -> list[Check]:
    rng = np.random.default_rng(seed)
    shapes = [(a, b) for a in range(1, 5) for b in range(1, 5)]
    mismatches = 0
    worst = 0.0
    for d in range(draws):
        a, b = shapes[d % len(shapes)]
        w = rng.standard_exponential((a, b))
        box = box_from_array(w)
        got = last_passage(box, (0, 0), (a - 1, b - 1))
        want = brute_force_passage(w)
        mismatches += got != want
        worst = max(worst, abs(got - want))
    return [Check(f"dynamic program equals path enumeration on {draws} boxes up to 4x4",
                  mismatches == 0, f"{mismatches} mismatches, worst {worst:.1e}")]


def _lpp_cfg(config):
    return (config.lpp, config.seed) if config is not None else (LPPConfig(), 0)


@register("lpp-stats")
def lpp_stats_suite(config=None) -> list[Check]:
    cfg, seed = _lpp_cfg(config)
    return lpp_statistics(cfg, seed)


@register("lpp-exact")
def lpp_exact_suite(config=None) -> list[Check]:
    return lpp_exact()
