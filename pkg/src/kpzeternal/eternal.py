"""Weight functions, the W-star construction and grid evolution of profiles."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .busemann import BusemannField, ParabolicBusemann, SignedDirection, as_direction
from .errors import BudgetError, GateRejected, RadiusError, SweepError, UndecidableTail
from .landscape import LandscapeKernel, ParabolicBackend, SpaceTimePoint, as_point, truncation_radius

NEG_INF = -math.inf
TAIL_STEP = 0.05
MAX_COLORS = 2_000_000
TIE_TOL = 1e-12

# ---------------------------------------------------------------- weight functions


@dataclass(frozen=True)
class PowerTail:
    """phi(eta) = -A |eta|^alpha on the grid eta = k * step."""

    alpha: float
    amplitude: float
    step: float = TAIL_STEP

    def __post_init__(self):
        if self.amplitude <= 0 or self.step <= 0 or self.alpha <= 0:
            raise ValueError("tail needs positive alpha, amplitude and step")

    def values(self, etas: np.ndarray) -> np.ndarray:
        return -self.amplitude * np.abs(etas) ** self.alpha


@dataclass(frozen=True)
class OpaqueTail:
    """Infinite support given only as a callable; its growth cannot be certified."""

    func: Callable[[np.ndarray], np.ndarray]
    step: float = TAIL_STEP

    def values(self, etas):
        return np.asarray(self.func(np.asarray(etas, dtype=float)), dtype=float)


@dataclass(frozen=True)
class WeightFunction:
    """Finite atoms plus an optional tail on a regular grid of directions.

    Directions off the support carry the value -inf. Atoms override the tail.
    """

    atoms: tuple[tuple[SignedDirection, float], ...] = ()
    tail: PowerTail | OpaqueTail | None = None

    def __post_init__(self):
        norm = []
        for xi, v in self.atoms:
            v = float(v)
            if not math.isfinite(v):
                raise ValueError("atom values must be finite; leave -inf directions out")
            norm.append((as_direction(xi), v))
        norm.sort(key=lambda a: a[0])
        keys = [a[0] for a in norm]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate direction in weight function")
        object.__setattr__(self, "atoms", tuple(norm))

    @classmethod
    def from_mapping(cls, mapping, tail=None) -> WeightFunction:
        return cls(tuple((as_direction(k), v) for k, v in mapping.items()), tail)

    @property
    def finite(self) -> bool:
        return self.tail is None

    @property
    def directions(self) -> tuple[SignedDirection, ...]:
        return tuple(a[0] for a in self.atoms)

    def as_dict(self) -> dict[SignedDirection, float]:
        return dict(self.atoms)

    def evaluate(self, xi) -> float:
        xi = as_direction(xi)
        for d, v in self.atoms:
            if d == xi:
                return v
        if self.tail is not None and xi.sign > 0:
            k = xi.eta / self.tail.step
            if abs(k - round(k)) < 1e-9:
                return float(self.tail.values(np.array([xi.eta]))[0])
        return NEG_INF

    def support(self, budget: float | None = None) -> tuple[list[SignedDirection], np.ndarray]:
        """Support directions within |eta| <= budget (all atoms when finite)."""
        dirs = [d for d, _ in self.atoms if budget is None or abs(d.eta) <= budget]
        vals = [v for d, v in self.atoms if budget is None or abs(d.eta) <= budget]
        if self.tail is not None:
            if budget is None:
                raise BudgetError("infinite support needs a color budget")
            kmax = int(math.floor(budget / self.tail.step + 1e-9))
            if 2 * kmax + 1 > MAX_COLORS:
                raise BudgetError(f"color budget {budget} exceeds {MAX_COLORS} colors")
            etas = self.tail.step * np.arange(-kmax, kmax + 1)
            taken = {d.eta for d, _ in self.atoms}
            keep = np.array([e not in taken for e in etas], dtype=bool)
            etas = etas[keep]
            dirs += [SignedDirection(float(e)) for e in etas]
            vals += list(self.tail.values(etas))
            order = sorted(range(len(dirs)), key=lambda n: dirs[n])
            dirs = [dirs[n] for n in order]
            vals = [vals[n] for n in order]
        return dirs, np.array(vals, dtype=float)

    def shifted(self, constant: float) -> WeightFunction:
        if self.tail is not None:
            raise ValueError("only finite weight functions can be shifted")
        return WeightFunction(tuple((d, v + constant) for d, v in self.atoms))

    def to_text(self) -> str:
        lines = [f"xi={d} value={v!r}" for d, v in self.atoms]
        if isinstance(self.tail, PowerTail):
            t = self.tail
            lines.append(f"tail=power alpha={t.alpha!r} A={t.amplitude!r} step={t.step!r}")
        elif self.tail is not None:
            raise ValueError("opaque tails cannot be serialized")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> WeightFunction:
        atoms, tail = [], None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = dict(tok.split("=", 1) for tok in line.split())
            if "xi" in fields:
                atoms.append((SignedDirection.parse(fields["xi"]), float(fields["value"])))
            elif fields.get("tail") == "power":
                tail = PowerTail(float(fields["alpha"]), float(fields["A"]),
                                 float(fields.get("step", TAIL_STEP)))
            else:
                raise ValueError(f"line {lineno}: cannot parse {raw!r}")
        return cls(tuple(atoms), tail)


def restrict_weight(phi: WeightFunction, keep) -> WeightFunction:
    """phi restricted to the directions in ``keep``, -inf elsewhere."""
    keep = {as_direction(k) for k in keep}
    dirs, vals = phi.support(max((abs(k.eta) for k in keep), default=0.0) if phi.tail else None)
    return WeightFunction(tuple((d, v) for d, v in zip(dirs, vals) if d in keep))


# ---------------------------------------------------------------- finiteness gate


@dataclass(frozen=True)
class GateVerdict:
    accepted: bool
    reason: str
    ratio_bound: float | None = None


def finiteness_gate(phi: WeightFunction) -> GateVerdict:
    """Decide whether sup over |eta| > T of phi / eta^2 tends to -inf.

    Finite support passes. A power tail passes exactly when alpha > 2; at
    alpha = 2 the ratio stays at -A, below 2 it tends to 0.
    """
    if phi.tail is None:
        return GateVerdict(True, "finite support")
    if isinstance(phi.tail, OpaqueTail):
        raise UndecidableTail("infinite support without a declared tail exponent")
    t = phi.tail
    if t.alpha > 2:
        return GateVerdict(True, f"power tail alpha={t.alpha} > 2", NEG_INF)
    if t.alpha == 2:
        return GateVerdict(False, f"quadratic tail, ratio stays at {-t.amplitude}", -t.amplitude)
    return GateVerdict(False, f"power tail alpha={t.alpha} < 2, ratio tends to 0", 0.0)


def require_gate(phi: WeightFunction) -> None:
    verdict = finiteness_gate(phi)
    if not verdict.accepted:
        raise GateRejected(verdict.reason)


# ---------------------------------------------------------------- color budget


def color_truncation_bound(phi: WeightFunction, field: BusemannField, x: float, t: float,
                           origin=SpaceTimePoint(0.0, 0.0)) -> float:
    """Budget T such that no |eta| > T can attain the sup defining W-star at (x, t)."""
    origin = as_point(origin)
    if phi.tail is None:
        return max((abs(d.eta) for d, _ in phi.atoms), default=0.0)
    require_gate(phi)
    tail = phi.tail
    dirs, vals = phi.support(1.0)
    inner = field.from_origin(np.array([d.eta for d in dirs]), np.array([x]), t, origin)[:, 0] + vals
    best = float(inner.max())
    dx, dt, tol = abs(x - origin.x), t - origin.t, field.tolerance
    if not np.all(np.isfinite(field.upper_bound(np.array([1.0]), x, t, origin))):
        raise BudgetError("field has no growth envelope for infinite support")
    a, A = tail.alpha, tail.amplitude

    def safe(u):
        g = 2 * u * dx + u * u * dt + tol - A * u ** a - best
        g1 = 2 * dx + 2 * u * dt - A * a * u ** (a - 1)
        g2 = 2 * dt - A * a * (a - 1) * u ** (a - 2)
        return g < 0 and g1 < 0 and g2 < 0

    hi = 1.0
    while not safe(hi):
        hi *= 2.0
        if hi > MAX_COLORS * tail.step:
            raise BudgetError("color budget exceeds the configured maximum")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if safe(mid):
            hi = mid
        else:
            lo = mid
    return max(hi, 1.0)


# ---------------------------------------------------------------- W-star


@dataclass(frozen=True)
class StarValue:
    value: float
    argmax: SignedDirection | None


def _star_matrix(phi, field, xs, t, origin, budget=None):
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if budget is None and phi.tail is not None:
        far = xs[np.argmax(np.abs(xs - origin.x))]
        budget = color_truncation_bound(phi, field, float(far), t, origin)
    dirs, vals = phi.support(budget)
    if not dirs:
        return dirs, np.full((0, xs.size), NEG_INF)
    etas = np.array([d.eta for d in dirs])
    return dirs, field.from_origin(etas, xs, t, origin) + vals[:, None]


def w_star_many(phi: WeightFunction, field: BusemannField, xs, t: float,
                origin=SpaceTimePoint(0.0, 0.0), check_gate: bool = True) -> np.ndarray:
    """sup over eta of W^eta(origin; x, t) + phi(eta) for each x."""
    origin = as_point(origin)
    if check_gate:
        require_gate(phi)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    _, mat = _star_matrix(phi, field, xs, t, origin)
    if mat.shape[0] == 0:
        return np.full(xs.shape, NEG_INF)
    return mat.max(axis=0)


def w_star_detail(phi, field, x, t, origin=SpaceTimePoint(0.0, 0.0)) -> StarValue:
    origin = as_point(origin)
    require_gate(phi)
    dirs, mat = _star_matrix(phi, field, np.array([x]), t, origin)
    if not dirs:
        return StarValue(NEG_INF, None)
    col = mat[:, 0]
    best = col.max()
    k = int(np.flatnonzero(col >= best - TIE_TOL * max(1.0, abs(best)))[0])
    return StarValue(float(best), dirs[k])


def w_star(phi: WeightFunction, field: BusemannField, x: float, t: float,
           origin=SpaceTimePoint(0.0, 0.0)) -> float:
    """W-star of phi at (x, t); -inf for empty support."""
    return w_star_detail(phi, field, x, t, origin).value


def truncated_sup(phi: WeightFunction, field: BusemannField, x: float, t: float, budget: float,
                  origin=SpaceTimePoint(0.0, 0.0)) -> float:
    """The W-star sup restricted to |eta| <= budget, without the finiteness gate."""
    origin = as_point(origin)
    _, mat = _star_matrix(phi, field, np.array([x]), t, origin, budget)
    return float(mat.max()) if mat.size else NEG_INF


def divergence_probe(phi, field, x, t, budgets=(10, 100, 1000, 1001, 2000)) -> list[tuple[float, float]]:
    """Truncated sups for growing budgets, to exhibit blow-up of rejected weights."""
    return [(float(b), truncated_sup(phi, field, x, t, b)) for b in budgets]


@dataclass(frozen=True)
class EternalSolutionField:
    """b = W-star phi as a space-time field, relative to ``origin``."""

    weights: WeightFunction
    busemann: BusemannField
    origin: SpaceTimePoint = SpaceTimePoint(0.0, 0.0)

    def __post_init__(self):
        require_gate(self.weights)

    @property
    def kernel(self) -> LandscapeKernel:
        return self.busemann.kernel

    def values(self, xs, t) -> np.ndarray:
        return w_star_many(self.weights, self.busemann, xs, t, self.origin, check_gate=False)

    def value(self, x, t) -> float:
        return float(self.values(np.array([x]), t)[0])

    def increment(self, p, q) -> float:
        p, q = as_point(p), as_point(q)
        return self.value(q.x, q.t) - self.value(p.x, p.t)

    def terms(self, xs, t, budget=None):
        """Directions and per-direction terms W^eta(origin; x, t) + phi(eta)."""
        return _star_matrix(self.weights, self.busemann, np.atleast_1d(xs), t, self.origin, budget)

    def slope_bound(self, xs, t) -> float:
        xs = np.atleast_1d(xs)
        if self.weights.tail is None:
            budget = max((abs(d.eta) for d in self.weights.directions), default=0.0)
        else:
            far = xs[np.argmax(np.abs(xs - self.origin.x))]
            budget = color_truncation_bound(self.weights, self.busemann, float(far), t, self.origin)
        return 2.0 * budget + 1.0

    def is_lattice(self) -> bool:
        return not isinstance(self.kernel, ParabolicBackend)


# ---------------------------------------------------------------- evolution


@dataclass(frozen=True)
class SupResult:
    values: np.ndarray
    argmax: np.ndarray
    argmax_right: np.ndarray
    interior: np.ndarray
    grid: np.ndarray = field(repr=False)


def sup_grid(xs: np.ndarray, spacing: float, radius: float) -> np.ndarray:
    """Grid of spacing ``spacing`` aligned with xs[0], covering xs +- radius."""
    x0 = float(xs[0])
    lo = int(math.floor((float(np.min(xs)) - radius - x0) / spacing))
    hi = int(math.ceil((float(np.max(xs)) + radius - x0) / spacing))
    return x0 + spacing * np.arange(lo, hi + 1)


def variational_sup(profile: Callable[[np.ndarray], np.ndarray], kernel: LandscapeKernel,
                    s: float, t: float, xs, spacing: float, slope: float,
                    refine: bool = False, widen: bool = True) -> SupResult:
    """max over a y-grid of profile(y) + L(y, s; x, t), for each x in ``xs``.

    ``slope`` bounds the growth of the profile; it fixes the truncation radius.
    An argmax on the grid boundary widens the radius once by a factor two and
    then raises.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    extent = float(np.max(np.abs(xs)))
    radius = truncation_radius(kernel, s, t, slope * slope * (t - s), cell=spacing, extent=extent)
    for attempt in range(2 if widen else 1):
        ys = sup_grid(xs, spacing, radius)
        f = np.asarray(profile(ys), dtype=float)
        if isinstance(kernel, ParabolicBackend):
            vals, left, right = kernels.quadratic_sup(f, ys, xs, float(t - s), TIE_TOL)
        else:
            vals = np.empty(xs.size)
            left = np.empty(xs.size, dtype=np.int64)
            right = np.empty(xs.size, dtype=np.int64)
            for n, x in enumerate(xs):
                obj = f + kernel.eval_many(ys, s, x, t)
                best = obj.max()
                near = np.flatnonzero(obj >= best - TIE_TOL * max(1.0, abs(best)))
                vals[n], left[n], right[n] = best, near[0], near[-1]
        interior = (left > 0) & (right < ys.size - 1)
        if interior.all():
            break
        radius *= 2.0
    else:
        raise RadiusError("variational maximizer on the truncation boundary after widening")
    if refine and isinstance(kernel, ParabolicBackend):
        vals = vals.copy()
        argmax = ys[left].copy()
        for n, x in enumerate(xs):
            k = left[n]
            lo, hi = ys[max(k - 1, 0)], ys[min(k + 1, ys.size - 1)]
            obj = lambda y, x=x: -(float(profile(np.array([y]))[0]) - (x - y) ** 2 / (t - s))
            res = minimize_scalar(obj, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            if -res.fun > vals[n]:
                vals[n], argmax[n] = -res.fun, res.x
        return SupResult(vals, argmax, ys[right], interior, ys)
    return SupResult(vals, ys[left], ys[right], interior, ys)


@dataclass(frozen=True)
class EvolveResult:
    values: np.ndarray
    argmax: np.ndarray
    interior: np.ndarray


def evolve(profile: Callable[[np.ndarray], np.ndarray], kernel: LandscapeKernel, s: float, t: float,
           xs, spacing: float, slope: float, refine: bool = False) -> EvolveResult:
    """Evolve a height profile from time s to time t on the y-grid."""
    res = variational_sup(profile, kernel, s, t, xs, spacing, slope, refine=refine)
    return EvolveResult(res.values, res.argmax, res.interior)


@dataclass(frozen=True)
class SemigroupReport:
    passed: bool
    deviation: float
    tolerance: float


def semigroup_check(profile, kernel: LandscapeKernel, s: float, r: float, t: float, xs,
                    spacing: float, slope: float, tol: float | None = None) -> SemigroupReport:
    """Two-step evolution s -> r -> t against one step s -> t."""
    if not s < r < t:
        raise ValueError("need s < r < t")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    direct = evolve(profile, kernel, s, t, xs, spacing, slope).values

    def middle(ys):
        return evolve(profile, kernel, s, r, ys, spacing, slope).values

    twostep = evolve(middle, kernel, r, t, xs, spacing, slope).values
    if tol is None:
        # each grid sup may lose O(spacing^2 / dt)
        tol = 4 * spacing ** 2 / min(r - s, t - r) + 4 * kernel.tolerance + 1e-9
    dev = float(np.max(np.abs(direct - twostep)))
    return SemigroupReport(dev <= tol, dev, tol)


# ---------------------------------------------------------------- growth


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    expected: float | None
    xs: np.ndarray
    values: np.ndarray


def growth_rate_probe(phi: WeightFunction, field: BusemannField, t: float = 0.0,
                      xs=None) -> GrowthFit:
    """Least-squares slope of log b(x, t) against log x over a positive sweep."""
    if xs is None:
        xs = np.logspace(1, 3, 25)
    xs = np.asarray(xs, dtype=float)
    if xs.min() <= 0 or xs.max() / xs.min() < 10:
        raise SweepError("sweep must be positive and span at least one decade")
    vals = np.array([w_star(phi, field, x, t) for x in xs])
    if np.any(vals <= 0):
        raise SweepError("profile not positive on the sweep")
    slope = float(np.polyfit(np.log(xs), np.log(vals), 1)[0])
    expected = None
    if isinstance(phi.tail, PowerTail):
        a = phi.tail.alpha
        expected = a / (a - 1.0)
    return GrowthFit(slope, expected, xs, vals)


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    argmax: float
    maximum: float


def quadratic_envelope_check(phi: WeightFunction, field: BusemannField, a: float, t: float = 0.0,
                             xs=None) -> EnvelopeReport:
    """max over the sweep of b(x, t) - a x^2 must sit strictly inside the sweep."""
    if xs is None:
        xs = np.linspace(-100.0, 100.0, 401)
    xs = np.asarray(xs, dtype=float)
    vals = w_star_many(phi, field, xs, t) - a * xs ** 2
    k = int(np.argmax(vals))
    return EnvelopeReport(0 < k < xs.size - 1, float(xs[k]), float(vals[k]))


# ---------------------------------------------------------------- constants from a slice


def extract_constants(b: EternalSolutionField, t_slice: float, window=(-4.0, 4.0),
                      spacing: float = 0.05) -> WeightFunction:
    """Weights c with W-star c (base (0, t_slice)) equal to b(., t_slice) - b(a0, t_slice).

    Runs of the coloring map at ``t_slice`` are chained left to right: within a
    run b grows by the run's Busemann function, across a border the two runs
    share the border point. The anchor run is the one whose half-open interval
    [a, b) contains 0; a0 is its left border (0 when that border is at -inf).
    """
    from .colormap import slice_runs

    runs = slice_runs(b, t_slice, window, spacing)
    if not runs:
        raise ValueError("empty slice")
    base = SpaceTimePoint(0.0, t_slice)
    field_ = b.busemann
    anchor = 0
    for n, run in enumerate(runs):
        if run.left_border <= 0.0 < run.right_border:
            anchor = n
            break
    else:
        anchor = len(runs) - 1 if runs[-1].left_border <= 0 else 0
    z = runs[anchor].left_border
    if not math.isfinite(z):
        z = 0.0
    pt = lambda x: (x, t_slice)

    def rise(m: int, x_from: float, n: int, x_to: float) -> float:
        # b(x_to) - b(x_from) for x_from in run m and x_to in run n
        if n < m:
            return -rise(n, x_to, m, x_from)
        if n == m:
            return field_.eval(runs[m].color, pt(x_from), pt(x_to))
        total = field_.eval(runs[m].color, pt(x_from), pt(runs[m].right_anchor)) + runs[m].jump
        for k in range(m + 1, n):
            total += field_.eval(runs[k].color, pt(runs[k].left_anchor), pt(runs[k].right_anchor))
            total += runs[k].jump
        return total + field_.eval(runs[n].color, pt(runs[n].left_anchor), pt(x_to))

    atoms = []
    for n, run in enumerate(runs):
        y = run.left_anchor
        atoms.append((run.color, rise(anchor, z, n, y) - field_.eval(run.color, base, pt(y))))
    return WeightFunction(tuple(atoms))


# ---------------------------------------------------------------- export


def export_height_csv(rows, path) -> None:
    """Write (x, t, value, argmax, color) rows."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "t", "value", "argmax", "color"])
        for x, t, value, argmax, color in rows:
            wr.writerow([repr(float(x)), repr(float(t)), repr(float(value)),
                         repr(float(argmax)), str(color)])
