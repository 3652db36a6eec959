"""Backward geodesics, color assignment, competition interfaces."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .busemann import BusemannField, SignedDirection, as_direction
from .errors import AmbiguousColorError, OrderingError, RadiusError
from .eternal import EternalSolutionField, variational_sup
from .landscape import LandscapeKernel, ParabolicBackend, SpaceTimePoint, as_point, truncation_radius

LEFT, RIGHT = "left", "right"


class BusemannSource:
    """The profile y -> W^xi(0, 0; y, s) viewed as a height source."""

    def __init__(self, field: BusemannField, xi):
        self.busemann = field
        self.xi = as_direction(xi)
        self.kernel = field.kernel

    def values(self, ys, s):
        return self.busemann.from_origin(np.array([self.xi.eta]), np.atleast_1d(ys), s,
                                         SpaceTimePoint(0.0, 0.0))[0]

    def slope_bound(self, xs, t):
        return 2.0 * abs(self.xi.eta) + 1.0


def geometric_partition(t: float, levels: int = 3, first: float = 1.0, ratio: float = 2.0) -> np.ndarray:
    """Times t - first, t - first*ratio, ... going backward."""
    return t - first * ratio ** np.arange(levels)


@dataclass(frozen=True)
class GeodesicPath:
    root: SpaceTimePoint
    side: str
    times: np.ndarray
    positions: np.ndarray

    def slope(self) -> float:
        """Average displacement per unit of backward time at the deepest level."""
        return float((self.positions[-1] - self.root.x) / (self.root.t - self.times[-1]))


def track_backward_many(source, xs, t: float, partition, side: str = LEFT,
                        spacing: float = 0.01) -> np.ndarray:
    """Positions of the leftmost (or rightmost) backward geodesics of many roots.

    Row 0 holds the roots; row k the geodesic positions at ``partition[k-1]``.
    """
    if side not in (LEFT, RIGHT):
        raise ValueError(f"side must be {LEFT!r} or {RIGHT!r}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    partition = np.asarray(partition, dtype=float)
    if np.any(np.diff(np.concatenate([[t], partition])) >= 0):
        raise OrderingError("partition times must decrease strictly below t")
    out = np.empty((partition.size + 1, xs.size))
    out[0] = xs
    prev_t, prev = t, xs
    for k, s in enumerate(partition):
        slope = source.slope_bound(prev, s)
        res = variational_sup(lambda ys, s=s: source.values(ys, s), source.kernel, s, prev_t,
                              prev, spacing, slope)
        prev = res.argmax if side == LEFT else res.argmax_right
        out[k + 1] = prev
        prev_t = s
    return out


def track_backward(source, root, partition, side: str = LEFT, spacing: float = 0.01) -> GeodesicPath:
    root = as_point(root)
    pos = track_backward_many(source, [root.x], root.t, partition, side, spacing)[:, 0]
    return GeodesicPath(root, side, np.asarray(partition, dtype=float), pos[1:])


def match_slope(slope: float, references) -> SignedDirection:
    """Reference color whose eta is within half the minimal gap of ``slope``."""
    refs = sorted({as_direction(r) for r in references})
    if not refs:
        raise AmbiguousColorError("no reference colors")
    etas = np.array([r.eta for r in refs])
    gaps = np.diff(np.unique(etas))
    half = 0.5 * gaps.min() if gaps.size else math.inf
    k = int(np.argmin(np.abs(etas - slope)))
    if abs(etas[k] - slope) >= half:
        raise AmbiguousColorError(f"slope {slope} not within {half} of any reference color")
    return refs[k]


def assign_colors(b, xs, t: float, references, partition=None, spacing: float = 0.01) -> list:
    """Colors of many points at a common time from their leftmost backward geodesics.

    Points whose slope matches no reference color get ``None``.
    """
    if partition is None:
        partition = geometric_partition(t)
    pos = track_backward_many(b, xs, t, partition, LEFT, spacing)
    slopes = (pos[-1] - pos[0]) / (t - partition[-1])
    out = []
    for sl in slopes:
        try:
            out.append(match_slope(float(sl), references))
        except AmbiguousColorError:
            out.append(None)
    return out


def assign_color(b, point, references, partition=None, spacing: float = 0.01) -> SignedDirection:
    """Color of ``point``: the direction of its leftmost backward geodesic."""
    point = as_point(point)
    if partition is None:
        partition = geometric_partition(point.t)
    path = track_backward(b, point, partition, LEFT, spacing)
    return match_slope(path.slope(), references)


@dataclass(frozen=True)
class Coalescence:
    coalesced: bool
    level: int | None


def coalescence_detect(g1, g2) -> Coalescence:
    """Exact equality of two tracked geodesics sustained down to the deepest level."""
    g1, g2 = np.asarray(g1), np.asarray(g2)
    if g1.shape != g2.shape:
        raise ValueError("geodesics must share a partition")
    eq = np.all(g1 == g2, axis=-1) if g1.ndim > 1 else g1 == g2
    if not eq[-1]:
        return Coalescence(False, None)
    k = len(eq) - 1
    while k > 0 and eq[k - 1]:
        k -= 1
    return Coalescence(True, k)


def export_geodesics_csv(paths, path) -> None:
    """Write (root, side, s, g) rows; root is written as 'x@t'."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["root", "side", "s", "g"])
        for gp in paths:
            root = f"{gp.root.x!r}@{gp.root.t!r}"
            for s, g in zip(gp.times, gp.positions):
                wr.writerow([root, gp.side, repr(float(s)), repr(float(g))])


# ---------------------------------------------------------------- competition interfaces


def _half_sup(profile, kernel: LandscapeKernel, s, x, t, lo, hi, spacing, slope):
    # sup over z in [lo, hi] (one end may be infinite) of profile(z) + L(z, s; x, t)
    radius = truncation_radius(kernel, s, t, slope * slope * (t - s), cell=spacing, extent=abs(x))
    a = max(lo, x - radius) if math.isfinite(lo) else x - radius
    b = min(hi, x + radius) if math.isfinite(hi) else x + radius
    if a > b:
        # the half line lies beyond the truncation radius; its nearest point dominates
        a = b = lo if math.isfinite(lo) else hi
    n = max(2, int(math.ceil((b - a) / spacing)))
    zs = np.linspace(a, b, n + 1)
    obj = np.asarray(profile(zs), dtype=float) + kernel.eval_many(zs, s, x, t)
    k = int(np.argmax(obj))
    best = float(obj[k])
    if isinstance(kernel, ParabolicBackend) and b > a:
        lo_b, hi_b = zs[max(k - 1, 0)], zs[min(k + 1, zs.size - 1)]
        f = lambda z: -(float(profile(np.array([z]))[0]) - (x - z) ** 2 / (t - s))
        res = minimize_scalar(f, bounds=(lo_b, hi_b), method="bounded", options={"xatol": 1e-13})
        best = max(best, -res.fun)
    return best


def d_eval(profile, kernel: LandscapeKernel, x0: float, s: float, x: float, t: float,
           spacing: float = 0.01, slope: float = 4.0) -> float:
    """sup over z >= x0 minus sup over z <= x0 of profile(z) + L(z, s; x, t)."""
    if not s < t:
        raise OrderingError(f"need s < t, got s={s}, t={t}")
    right = _half_sup(profile, kernel, s, x, t, x0, math.inf, spacing, slope)
    left = _half_sup(profile, kernel, s, x, t, -math.inf, x0, spacing, slope)
    return right - left


@dataclass(frozen=True)
class CompetitionSplit:
    tau_minus: float
    tau_plus: float


def tau_pm(profile, kernel: LandscapeKernel, x0: float, s: float, t: float,
           spacing: float = 0.01, slope: float = 4.0, tol: float = 1e-10) -> CompetitionSplit:
    """Ends of the zero set of the nondecreasing function x -> d(x)."""
    if t == s:
        return CompetitionSplit(x0, x0)
    if t < s:
        raise OrderingError("interface times must not precede the source time")
    d = lambda x: d_eval(profile, kernel, x0, s, x, t, spacing, slope)
    width = 1.0 + slope * (t - s)
    lo, hi = x0 - width, x0 + width
    while d(lo) >= 0:
        lo -= width
        width *= 2
    while d(hi) <= 0:
        hi += width
        width *= 2

    def bisect(pred):
        a, b_ = lo, hi  # pred(a) false, pred(b_) true
        while b_ - a > tol:
            m = 0.5 * (a + b_)
            if pred(m):
                b_ = m
            else:
                a = m
        return 0.5 * (a + b_)

    tau_minus = bisect(lambda x: d(x) >= 0)
    tau_plus = bisect(lambda x: d(x) > 0)
    return CompetitionSplit(tau_minus, tau_plus)


def tau_two_colors(field: BusemannField, xi1, xi2, c1: float, c2: float, t: float,
                   origin=SpaceTimePoint(0.0, 0.0), bracket: float = 1e6) -> float:
    """Largest x where W^xi1(origin; x, t) + c1 meets W^xi2(origin; x, t) + c2.

    On lattice fields this is the last site where the xi1 term still wins.
    """
    from .busemann import LatticeBusemann

    xi1, xi2 = as_direction(xi1), as_direction(xi2)
    if not xi1 < xi2:
        raise ValueError("need xi1 < xi2")
    origin = as_point(origin)
    if isinstance(field, LatticeBusemann):
        lo, hi = field.window
        xs = lattice_slice_xs(field, t)
        terms = field.from_origin([xi1.eta, xi2.eta], xs, t, origin)
        d = terms[1] + c2 - terms[0] - c1
        ok = np.flatnonzero(d <= 0)
        if ok.size == 0:
            return -math.inf
        if ok[-1] == xs.size - 1:
            return math.inf
        return float(xs[ok[-1]])

    def gap(x):
        w = field.from_origin(np.array([xi1.eta, xi2.eta]), np.array([x]), t, origin)[:, 0]
        return (w[1] + c2) - (w[0] + c1)

    if xi1.eta == xi2.eta:
        raise ValueError("equal directions have no interface")
    a, b = -1.0, 1.0
    while gap(a) > 0:
        a *= 2
        if a < -bracket:
            return -math.inf
    while gap(b) < 0:
        b *= 2
        if b > bracket:
            return math.inf
    root = brentq(gap, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return float(root)


def lattice_slice_xs(field, t: float) -> np.ndarray:
    """Continuum abscissas of every lattice site of the window at time t."""
    lo, hi = field.window
    m, _ = field.smap.indices(0.0, t)
    oi, oj = field.smap.origin
    kmin = max(lo[0] - oi - m, oj + m - hi[1])
    kmax = min(hi[0] - oi - m, oj + m - lo[1])
    if kmin > kmax:
        raise RadiusError(f"time {t} misses the lattice window")
    return np.arange(kmin, kmax + 1) / field.smap.space_unit


def two_color_solution(field: BusemannField, xi1, xi2, c1: float, c2: float) -> EternalSolutionField:
    """W-star of the weight supported on the two directions."""
    from .eternal import WeightFunction

    return EternalSolutionField(WeightFunction.from_mapping({as_direction(xi1): c1, as_direction(xi2): c2}),
                                field)


@dataclass(frozen=True)
class TwoColorReport:
    passed: bool
    mismatches: int
    checked: int


def two_color_check(field: BusemannField, xi1, xi2, c1, c2, t: float, xs) -> TwoColorReport:
    """The winning term must switch from xi1 to xi2 exactly at the interface."""
    tau = tau_two_colors(field, xi1, xi2, c1, c2, t)
    xs = np.asarray(xs, dtype=float)
    w = field.from_origin(np.array([as_direction(xi1).eta, as_direction(xi2).eta]), xs, t,
                          SpaceTimePoint(0.0, 0.0))
    first_wins = (w[0] + c1) >= (w[1] + c2)
    bad = int(np.sum(first_wins != (xs <= tau)))
    return TwoColorReport(bad == 0, bad, xs.size)


@dataclass(frozen=True)
class InterfaceTrajectory:
    times: np.ndarray
    positions: np.ndarray


def interface_trajectory(field, xi1, xi2, c1, c2, times) -> InterfaceTrajectory:
    times = np.asarray(times, dtype=float)
    return InterfaceTrajectory(times, np.array([tau_two_colors(field, xi1, xi2, c1, c2, t) for t in times]))


@dataclass(frozen=True)
class CrossingReport:
    passed: bool
    meet_time: float
    before_ok: bool
    after_ok: bool
    strict_before: bool


def crossing_check(field: BusemannField, colors, constants, times) -> CrossingReport:
    """Interfaces 1|2 and 1|3 of three ordered colors cross only once.

    With s0 the time the two interfaces meet, tau12 <= tau13 before s0
    (strictly) and tau12 >= tau13 after it.
    """
    x1, x2, x3 = (as_direction(c) for c in colors)
    c1, c2, c3 = constants
    if not x1 < x2 < x3:
        raise ValueError("colors must be strictly ordered")
    gap = lambda t: (tau_two_colors(field, x1, x2, c1, c2, t) - tau_two_colors(field, x1, x3, c1, c3, t))
    times = np.sort(np.asarray(times, dtype=float))
    gaps = np.array([gap(t) for t in times])
    sign_change = np.flatnonzero(np.diff(np.sign(gaps)) != 0)
    if gaps[0] > 0:
        return CrossingReport(False, math.nan, False, False, False)
    if sign_change.size == 0 and np.all(gaps < 0):
        meet = math.inf
    else:
        k = sign_change[0] if sign_change.size else 0
        if gaps[k] == 0:
            meet = times[k]
        elif gaps[k + 1] == 0:
            meet = times[k + 1]
        else:
            meet = brentq(gap, times[k], times[k + 1], xtol=1e-13)
    tol = 1e-9
    before = times < meet - tol
    after = times > meet + tol
    before_ok = bool(np.all(gaps[before] <= tol))
    after_ok = bool(np.all(gaps[after] >= -tol))
    strict = bool(np.all(gaps[before] < 0))
    return CrossingReport(before_ok and after_ok and strict, float(meet), before_ok, after_ok, strict)


def export_interface_csv(traj: InterfaceTrajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "tau"])
        for t, x in zip(traj.times, traj.positions):
            wr.writerow([repr(float(t)), repr(float(x))])


def export_interfaces_csv(trajectories, path) -> None:
    """Write (left, right, t, tau) rows for several labelled trajectories."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["left", "right", "t", "tau"])
        for left, right, traj in trajectories:
            for t, x in zip(traj.times, traj.positions):
                wr.writerow([str(left), str(right), repr(float(t)), repr(float(x))])
