"""Exponential last-passage percolation and its rescaling to a landscape kernel.

Lattice points are ``(i, j)`` integer pairs. Paths take unit steps in ``i`` or
``j``; passage times include the weights at both endpoints. Space on the lattice
runs along ``i - j`` (smaller is further left) and time along ``i + j``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from . import kernels
from .errors import BoxTooLargeError, HorizonError, OrderingError, OutOfBoxError
from .landscape import LandscapeKernel, SpaceTimePoint, as_point

MAX_SITES = 60_000_000
STABILIZATION_STEPS = 3
RHO_CLAMP = (0.05, 0.95)
_DUMP_MAGIC = b"LPPW0001"


@dataclass(frozen=True)
class LatticeBox:
    """Rectangle of i.i.d. Exp(1) weights, indices inclusive on both ends."""

    i_min: int
    i_max: int
    j_min: int
    j_max: int
    seed: int | None
    weights: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        shape = (self.i_max - self.i_min + 1, self.j_max - self.j_min + 1)
        if self.weights.shape != shape:
            raise ValueError(f"weights shape {self.weights.shape} does not match bounds {shape}")
        self.weights.setflags(write=False)

    @property
    def bounds(self) -> tuple[int, int, int, int]:
        return (self.i_min, self.i_max, self.j_min, self.j_max)

    def contains(self, site) -> bool:
        i, j = site
        return self.i_min <= i <= self.i_max and self.j_min <= j <= self.j_max

    def require(self, *sites) -> None:
        for s in sites:
            if not self.contains(s):
                raise OutOfBoxError(f"site {tuple(s)} outside box {self.bounds}")

    def weight(self, site) -> float:
        self.require(site)
        return float(self.weights[site[0] - self.i_min, site[1] - self.j_min])

    def block(self, p, q) -> np.ndarray:
        """Weights on the rectangle spanned by sites p <= q."""
        self.require(p, q)
        return self.weights[p[0] - self.i_min:q[0] - self.i_min + 1,
                            p[1] - self.j_min:q[1] - self.j_min + 1]


def _row_stream(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(i)]))


def sample_weights(seed: int, bounds, max_sites: int = MAX_SITES) -> LatticeBox:
    """Exp(1) weights for ``bounds = (i_min, i_max, j_min, j_max)``.

    Row ``i`` is drawn from its own stream keyed by ``(seed, i)`` starting at
    column 0, so any sub-box reproduces the restriction of a larger box.
    """
    i_min, i_max, j_min, j_max = (int(b) for b in bounds)
    if i_min < 0 or j_min < 0:
        raise OutOfBoxError("lattice coordinates must be nonnegative")
    if i_max < i_min or j_max < j_min:
        raise ValueError(f"empty box {bounds}")
    size = (i_max - i_min + 1) * (j_max - j_min + 1)
    if size > max_sites:
        raise BoxTooLargeError(f"box of {size} sites exceeds budget {max_sites}")
    w = np.empty((i_max - i_min + 1, j_max - j_min + 1))
    for r, i in enumerate(range(i_min, i_max + 1)):
        w[r] = _row_stream(seed, i).standard_exponential(j_max + 1)[j_min:]
    return LatticeBox(i_min, i_max, j_min, j_max, int(seed), w)


def box_from_array(weights, i_min: int = 0, j_min: int = 0) -> LatticeBox:
    w = np.array(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-d array")
    return LatticeBox(i_min, i_min + w.shape[0] - 1, j_min, j_min + w.shape[1] - 1, None, w)


def _ordered(p, q) -> None:
    if not (p[0] <= q[0] and p[1] <= q[1]):
        raise OrderingError(f"no up-right path from {tuple(p)} to {tuple(q)}")


def passage_table(box: LatticeBox, p, q) -> np.ndarray:
    """G(p; z) for every z in the rectangle [p, q]."""
    _ordered(p, q)
    return kernels.passage_from(box.block(p, q))


def reverse_passage_table(box: LatticeBox, p, q) -> np.ndarray:
    """G(z; q) for every z in the rectangle [p, q]."""
    _ordered(p, q)
    return kernels.passage_to(box.block(p, q))


def last_passage(box: LatticeBox, p, q) -> float:
    """Maximal weight of an up-right path from p to q, endpoints included."""
    g = passage_table(box, p, q)
    return float(g[-1, -1])


def geodesic_trace(box: LatticeBox, p, q) -> np.ndarray:
    """Sites of the maximizing path from p to q.

    Ties go to the predecessor (i - 1, j), the leftmost branch.
    """
    g = passage_table(box, p, q)
    path = kernels.backtrack(g, g.shape[0] - 1, g.shape[1] - 1)
    return path + np.array([p[0], p[1]], dtype=np.int64)


def dump_weights(box: LatticeBox, path) -> None:
    """Little-endian header (magic, bounds, seed) followed by row-major float64."""
    seed = -1 if box.seed is None else box.seed
    header = _DUMP_MAGIC + struct.pack("<4qq", *box.bounds, seed)
    Path(path).write_bytes(header + box.weights.astype("<f8").tobytes(order="C"))


def load_weights(path) -> LatticeBox:
    raw = Path(path).read_bytes()
    if raw[:8] != _DUMP_MAGIC:
        raise ValueError("not a weight dump")
    i_min, i_max, j_min, j_max, seed = struct.unpack("<4qq", raw[8:48])
    w = np.frombuffer(raw[48:], dtype="<f8").reshape(i_max - i_min + 1, j_max - j_min + 1)
    return LatticeBox(i_min, i_max, j_min, j_max, None if seed < 0 else seed, w.astype(float))


# ---------------------------------------------------------------- scaling


SPACE_FACTOR = 2.0 ** (2.0 / 3.0)
HEIGHT_FACTOR = 2.0 ** (4.0 / 3.0)


@dataclass(frozen=True)
class ScalingMap:
    """KPZ 1:2:3 rescaling between lattice sites and continuum points.

    Continuum (x, t) goes to time index m = round(n t) and space index
    k = round(2^(2/3) n^(2/3) x), i.e. site (oi + m + k, oj + m - k).
    Passage times are centered by 4 per time index and divided by 2^(4/3) n^(1/3).
    """

    n: int
    origin: tuple[int, int] = (0, 0)

    @property
    def space_unit(self) -> float:
        return SPACE_FACTOR * self.n ** (2.0 / 3.0)

    @property
    def height_unit(self) -> float:
        return HEIGHT_FACTOR * self.n ** (1.0 / 3.0)

    @property
    def cell(self) -> float:
        """Continuum width of one space index."""
        return 1.0 / self.space_unit

    @property
    def tick(self) -> float:
        """Continuum duration of one time index."""
        return 1.0 / self.n

    def indices(self, x: float, t: float) -> tuple[int, int]:
        return int(round(self.n * t)), int(round(self.space_unit * x))

    def site(self, point) -> tuple[int, int]:
        pt = as_point(point)
        m, k = self.indices(pt.x, pt.t)
        return self.site_mk(m, k)

    def site_mk(self, m: int, k: int) -> tuple[int, int]:
        return (self.origin[0] + m + k, self.origin[1] + m - k)

    def mk(self, site) -> tuple[float, float]:
        a, b = site[0] - self.origin[0], site[1] - self.origin[1]
        return (a + b) / 2.0, (a - b) / 2.0

    def point(self, site) -> SpaceTimePoint:
        m, k = self.mk(site)
        return SpaceTimePoint(k / self.space_unit, m / self.n)

    def height(self, passage: float, dm: float) -> float:
        return (passage - 4.0 * dm) / self.height_unit


def scaled_eval(box: LatticeBox, smap: ScalingMap, frm, to) -> float:
    """Rescaled passage time between the lattice images of two points.

    Returns ``-inf`` when the target lies outside the lattice light cone.
    """
    frm, to = as_point(frm), as_point(to)
    if not frm.t < to.t:
        raise OrderingError(f"need s < t, got s={frm.t}, t={to.t}")
    p, q = smap.site(frm), smap.site(to)
    box.require(p, q)
    if not (p[0] <= q[0] and p[1] <= q[1]):
        return -math.inf
    dm = smap.mk(q)[0] - smap.mk(p)[0]
    return smap.height(last_passage(box, p, q), dm)


# ---------------------------------------------------------------- directions


def direction_constant(n: int) -> float:
    """Logistic rate matching a continuum Busemann slope of 2 xi near xi = 0."""
    return SPACE_FACTOR * n ** (-1.0 / 3.0)


def rho_of(eta: float, n: int) -> float:
    """Stationary density for continuum direction ``eta``, clamped away from 0 and 1."""
    rho = float(expit(direction_constant(n) * eta))
    return min(max(rho, RHO_CLAMP[0]), RHO_CLAMP[1])


def characteristic_drift(rho: float) -> float:
    """Space indices gained per time index when moving backward along direction rho."""
    return (2.0 * rho - 1.0) / ((1.0 - rho) ** 2 + rho ** 2)


def far_point(smap: ScalingMap, eta: float, horizon: int) -> tuple[int, int]:
    """Site ``horizon`` time indices below the origin on the characteristic line of eta."""
    if horizon <= 0:
        raise HorizonError(f"horizon must be positive, got {horizon}")
    k = int(round(horizon * characteristic_drift(rho_of(eta, smap.n))))
    return smap.site_mk(-horizon, k)


@dataclass(frozen=True)
class BusemannEstimate:
    value: float
    stabilized: bool
    history: tuple[float, ...]


def _passage_from_far(box: LatticeBox, v, sites) -> np.ndarray:
    top = (max(s[0] for s in sites), max(s[1] for s in sites))
    for s in sites:
        _ordered(v, s)
    g = passage_table(box, v, top)
    return np.array([g[s[0] - v[0], s[1] - v[1]] for s in sites])


def estimate_busemann(box: LatticeBox, smap: ScalingMap, eta: float, p, q, horizon: int,
                      steps: int = STABILIZATION_STEPS) -> BusemannEstimate:
    """G(v; q) - G(v; p) for the far site v of direction eta.

    The estimate counts as stabilized when it is unchanged over ``steps``
    further horizon increments.
    """
    history = []
    for h in range(horizon, horizon + steps + 1):
        v = far_point(smap, eta, h)
        if not box.contains(v):
            raise HorizonError(f"far site {v} for horizon {h} outside box {box.bounds}")
        box.require(p, q)
        try:
            gp, gq = _passage_from_far(box, v, [p, q])
        except OrderingError as exc:
            raise HorizonError(f"horizon {h} does not reach below {p}, {q}") from exc
        history.append(float(gq - gp))
    return BusemannEstimate(history[0], len(set(history)) == 1, tuple(history))


# ---------------------------------------------------------------- kernel adapter


DEFAULT_SPREAD = 3.0


class LPPBackend(LandscapeKernel):
    """Rescaled exponential LPP as a landscape kernel on a finite box."""

    name = "lpp"

    def __init__(self, box: LatticeBox, smap: ScalingMap, spread_constant: float = DEFAULT_SPREAD):
        self.lattice = box
        self.smap = smap
        self.spread_constant = float(spread_constant)
        corners = [smap.point((a, b)) for a in (box.i_min, box.i_max) for b in (box.j_min, box.j_max)]
        xs = [c.x for c in corners]
        ts = [c.t for c in corners]
        self.box = (min(xs), max(xs), min(ts), max(ts))
        self.tolerance = 1.0 / smap.height_unit

    def check_box(self, x, t):
        self.lattice.require(self.smap.site((x, t)))

    def _eval(self, frm, to):
        return scaled_eval(self.lattice, self.smap, frm, to)

    def eval_many(self, ys, s, x, t):
        if not s < t:
            raise OrderingError(f"need s < t, got s={s}, t={t}")
        ys = np.asarray(ys, dtype=float)
        q = self.smap.site((x, t))
        sites = [self.smap.site((y, s)) for y in ys]
        self.lattice.require(q, *sites)
        lo = (min(a for a, _ in sites), min(b for _, b in sites))
        out = np.full(ys.shape, -np.inf)
        if not (lo[0] <= q[0] and lo[1] <= q[1]):
            lo = (min(lo[0], q[0]), min(lo[1], q[1]))
        g = reverse_passage_table(self.lattice, lo, q)
        dm = self.smap.mk(q)[0] - self.smap.mk(sites[0])[0]
        for n, (a, b) in enumerate(sites):
            if a <= q[0] and b <= q[1]:
                out[n] = self.smap.height(g[a - lo[0], b - lo[1]], dm)
        return out

    def endpoint_correction(self, mid):
        return self.lattice.weight(self.smap.site(mid)) / self.smap.height_unit

    def spread(self, s, t, extent):
        dt = t - s
        norm = extent + abs(s) + abs(t) + 2.0
        return (self.spread_constant * dt ** (1.0 / 3.0)
                * math.log(2.0 * norm / dt) ** (4.0 / 3.0) * math.log(norm) ** (2.0 / 3.0))

    def descriptor(self):
        i0, i1, j0, j1 = self.lattice.bounds
        return {
            "backend": "lpp",
            "n": str(self.smap.n),
            "origin": f"{self.smap.origin[0]},{self.smap.origin[1]}",
            "bounds": f"{i0},{i1},{j0},{j1}",
            "seed": str(self.lattice.seed),
            "spread_constant": repr(self.spread_constant),
            "tolerance": repr(self.tolerance),
        }
