"""Busemann fields: the parabolic closed form and the lattice estimator."""
from __future__ import annotations

import csv
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import total_ordering

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .errors import HorizonError, OutOfBoxError, RadiusError
from .landscape import LandscapeKernel, ParabolicBackend, SpaceTimePoint, as_point, truncation_radius
from .lpp import LatticeBox, ScalingMap, far_point, passage_table

PLUS, MINUS = 1, -1


@total_ordering
@dataclass(frozen=True)
class SignedDirection:
    """Direction eta with a sign; at equal eta the minus copy sorts first."""

    eta: float
    sign: int = PLUS

    def __post_init__(self):
        if self.sign not in (PLUS, MINUS):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        if not math.isfinite(self.eta):
            raise ValueError("direction must be finite")

    def __lt__(self, other):
        return (self.eta, self.sign) < (other.eta, other.sign)

    @property
    def sign_char(self) -> str:
        return "+" if self.sign == PLUS else "-"

    def __str__(self):
        return f"{self.eta!r}{self.sign_char}"

    @classmethod
    def parse(cls, text: str) -> SignedDirection:
        text = text.strip()
        if text[-1] in "+-" and len(text) > 1 and text[-2] not in "eE":
            return cls(float(text[:-1]), PLUS if text[-1] == "+" else MINUS)
        return cls(float(text), PLUS)


def as_direction(xi) -> SignedDirection:
    if isinstance(xi, SignedDirection):
        return xi
    return SignedDirection(float(xi), PLUS)


class BusemannField(ABC):
    """W^xi(p; q), additive along any chain of points."""

    kernel: LandscapeKernel
    tolerance: float = 0.0

    @abstractmethod
    def eval(self, xi, p, q) -> float: ...

    @abstractmethod
    def from_origin(self, etas: np.ndarray, xs: np.ndarray, t: float,
                    origin: SpaceTimePoint) -> np.ndarray:
        """Matrix of W^eta(origin; x, t), one row per direction."""

    def upper_bound(self, eta_abs: np.ndarray, x: float, t: float, origin: SpaceTimePoint) -> np.ndarray:
        """Upper bound of W^(+-eta)(origin; x, t) used to truncate color sups."""
        eta_abs = np.abs(eta_abs)
        return 2.0 * eta_abs * abs(x - origin.x) + eta_abs ** 2 * (t - origin.t) + self.tolerance


class ParabolicBusemann(BusemannField):
    """Closed form 2 eta (x_q - x_p) + eta^2 (t_q - t_p); both signs agree."""

    def __init__(self):
        self.kernel = ParabolicBackend()

    def eval(self, xi, p, q):
        eta = as_direction(xi).eta
        p, q = as_point(p), as_point(q)
        return 2.0 * eta * (q.x - p.x) + eta * eta * (q.t - p.t)

    def from_origin(self, etas, xs, t, origin):
        etas = np.asarray(etas, dtype=float)[:, None]
        xs = np.asarray(xs, dtype=float)[None, :]
        return 2.0 * etas * (xs - origin.x) + etas ** 2 * (t - origin.t)


class LatticeBusemann(BusemannField):
    """Busemann estimates G(v; q) - G(v; p) with one far site v per direction.

    Tables are computed once for a lattice window; queries outside it raise.
    Values are rescaled with the field's scaling map.
    """

    def __init__(self, box: LatticeBox, smap: ScalingMap, etas, horizon: int, window):
        from .lpp import LPPBackend

        self.box = box
        self.smap = smap
        self.horizon = int(horizon)
        self.kernel = LPPBackend(box, smap)
        self.tolerance = self.kernel.tolerance
        lo, hi = window
        self.window = (tuple(lo), tuple(hi))
        box.require(lo, hi)
        self.etas = tuple(sorted({float(e) for e in etas}))
        self._tables: dict[float, np.ndarray] = {}
        self.far_sites: dict[float, tuple[int, int]] = {}
        for eta in self.etas:
            v = far_point(smap, eta, self.horizon)
            box.require(v)
            if not (v[0] <= lo[0] and v[1] <= lo[1]):
                raise HorizonError(f"far site {v} not below window corner {lo}; raise the horizon")
            g = passage_table(box, v, hi)
            sub = np.array(g[lo[0] - v[0]:, lo[1] - v[1]:])
            sub.setflags(write=False)
            self._tables[eta] = sub
            self.far_sites[eta] = v

    @classmethod
    def build(cls, n: int, window, etas, horizon: int, seed: int,
              max_sites: int | None = None) -> LatticeBusemann:
        """Sample a box just large enough for ``window = (x0, x1, t0, t1)`` and the far sites.

        With ``max_sites`` set, a horizon that needs a larger box raises HorizonError.
        """
        from .lpp import STABILIZATION_STEPS, sample_weights

        x0, x1, t0, t1 = window
        probe = ScalingMap(n)
        m0, k0 = probe.indices(x0, min(t0, 0.0))
        m1, k1 = probe.indices(x1, max(t1, 0.0))
        i_lo, j_lo = m0 + k0, m0 - k1
        i_hi, j_hi = m1 + k1, m1 - k0
        # room for the deeper far sites used by the stabilization check
        fars = [far_point(probe, e, h) for e in etas for h in (horizon, horizon + STABILIZATION_STEPS)]
        i_min = min([i_lo] + [f[0] for f in fars])
        j_min = min([j_lo] + [f[1] for f in fars])
        smap = ScalingMap(n, (-i_min, -j_min))
        sites = (i_hi - i_min + 1) * (j_hi - j_min + 1)
        if max_sites is not None and sites > max_sites:
            raise HorizonError(f"horizon {horizon} needs {sites} sites, box limit is {max_sites}")
        box = sample_weights(seed, (0, i_hi - i_min, 0, j_hi - j_min))
        lo = (i_lo - i_min, j_lo - j_min)
        hi = (i_hi - i_min, j_hi - j_min)
        return cls(box, smap, etas, horizon, (lo, hi))

    def raw(self, eta: float, site) -> float:
        """G(v_eta; site) for a site in the window."""
        lo, hi = self.window
        if not (lo[0] <= site[0] <= hi[0] and lo[1] <= site[1] <= hi[1]):
            raise OutOfBoxError(f"site {site} outside Busemann window {self.window}")
        try:
            table = self._tables[float(eta)]
        except KeyError:
            raise OutOfBoxError(f"direction {eta} not declared for this field") from None
        return float(table[site[0] - lo[0], site[1] - lo[1]])

    def raw_increment(self, eta: float, p_site, q_site) -> float:
        return self.raw(eta, q_site) - self.raw(eta, p_site)

    def eval(self, xi, p, q):
        eta = as_direction(xi).eta
        ps, qs = self.smap.site(p), self.smap.site(q)
        dm = self.smap.mk(qs)[0] - self.smap.mk(ps)[0]
        return self.smap.height(self.raw_increment(eta, ps, qs), dm)

    def site_arrays(self, xs, t):
        """Window-relative index arrays of the lattice images of (x, t)."""
        lo, hi = self.window
        m, _ = self.smap.indices(0.0, t)
        ks = np.rint(self.smap.space_unit * np.atleast_1d(np.asarray(xs, dtype=float))).astype(np.int64)
        ii = self.smap.origin[0] + m + ks - lo[0]
        jj = self.smap.origin[1] + m - ks - lo[1]
        shape = (hi[0] - lo[0] + 1, hi[1] - lo[1] + 1)
        if ii.min() < 0 or jj.min() < 0 or ii.max() >= shape[0] or jj.max() >= shape[1]:
            raise OutOfBoxError(f"slice t={t} leaves the Busemann window {self.window}")
        return ii, jj, m

    def from_origin(self, etas, xs, t, origin):
        ii, jj, m = self.site_arrays(xs, t)
        o = self.smap.site(origin)
        dm = m - self.smap.mk(o)[0]
        out = np.empty((len(etas), ii.size))
        for r, eta in enumerate(etas):
            table = self._tables.get(float(eta))
            if table is None:
                raise OutOfBoxError(f"direction {eta} not declared for this field")
            out[r] = (table[ii, jj] - self.raw(eta, o) - 4.0 * dm) / self.smap.height_unit
        return out

    def geodesic(self, eta: float, site) -> np.ndarray:
        """Backward geodesic of direction eta from ``site`` down to the window corner.

        Rows run from the window corner up to ``site``; ties take (i - 1, j).
        """
        lo, _ = self.window
        table = self._tables.get(float(eta))
        if table is None:
            raise OutOfBoxError(f"direction {eta} not declared for this field")
        self.raw(eta, site)
        return kernels.backtrack(table, site[0] - lo[0], site[1] - lo[1]) + np.array(lo, dtype=np.int64)

    def geodesic_levels(self, eta: float, site, levels) -> np.ndarray:
        """Sites of the backward geodesic on the given antidiagonal levels i + j."""
        lo, _ = self.window
        path = self.geodesic(eta, site)
        sums = path.sum(axis=1)
        out = []
        for lev in levels:
            hit = np.flatnonzero(sums == lev)
            if hit.size == 0:
                raise OutOfBoxError(f"geodesic does not reach level {lev}")
            s_ = path[hit[0]]
            if s_[0] == lo[0] or s_[1] == lo[1]:
                raise OutOfBoxError("geodesic ran into the Busemann window edge")
            out.append(s_)
        return np.array(out)

    def upper_bound(self, eta_abs, x, t, origin):
        # lattice directions saturate at the density clamp
        return np.full(np.shape(eta_abs), math.inf)


def busemann_eval(field: BusemannField, xi, p, q) -> float:
    return field.eval(xi, p, q)


# ---------------------------------------------------------------- property checks


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    deviation: float
    detail: str = ""


def check_additivity(field: BusemannField, xi, p, q, r, tol: float | None = None) -> CheckResult:
    tol = 1e-9 if tol is None else tol
    dev = field.eval(xi, p, q) + field.eval(xi, q, r) - field.eval(xi, p, r)
    return CheckResult(abs(dev) <= tol, abs(dev))


def check_antisymmetry(field: BusemannField, xi, p, q, tol: float = 1e-9) -> CheckResult:
    dev = field.eval(xi, p, q) + field.eval(xi, q, p)
    return CheckResult(abs(dev) <= tol, abs(dev))


def check_monotonicity(field: BusemannField, xi1, xi2, x: float, y: float, t: float,
                       tol: float = 0.0) -> CheckResult:
    """For xi1 < xi2 and x < y at a common time, W^xi1 <= W^xi2 on the pair."""
    xi1, xi2 = as_direction(xi1), as_direction(xi2)
    if not (xi1 < xi2 and x < y):
        raise ValueError("need xi1 < xi2 and x < y")
    a = field.eval(xi1, (x, t), (y, t))
    b = field.eval(xi2, (x, t), (y, t))
    return CheckResult(a <= b + tol, a - b)


def check_slope(field: BusemannField, xi, x: float, y: float, t: float, tol: float = 1e-9) -> CheckResult:
    """Horizontal increment over (x, y] against the 2 eta slope."""
    eta = as_direction(xi).eta
    got = field.eval(xi, (x, t), (y, t))
    dev = got - 2.0 * eta * (y - x)
    return CheckResult(abs(dev) <= tol, abs(dev))


@dataclass(frozen=True)
class EternalCheck:
    passed: bool
    deviation: float
    argmax: float
    interior: bool
    tolerance: float


def check_eternal(field: BusemannField, xi, x0: float, s: float, x: float, t: float,
                  spacing: float = 0.01, tol: float | None = None, refine: bool = True) -> EternalCheck:
    """Compare sup_z [W^xi(x0,s; z,s) + L(z,s; x,t)] with W^xi(x0,s; x,t)."""
    eta = as_direction(xi).eta
    kernel = field.kernel
    slope = 2.0 * abs(eta) + 1.0
    radius = truncation_radius(kernel, s, t, slope ** 2 * (t - s), cell=spacing, extent=abs(x) + 1)
    n = int(math.ceil(radius / spacing))
    zs = x + spacing * np.arange(-n, n + 1)

    def objective(z):
        z = np.atleast_1d(z)
        w = np.array([field.eval(xi, (x0, s), (zz, s)) for zz in z])
        corr = np.array([kernel.endpoint_correction((zz, s)) for zz in z])
        return w + kernel.eval_many(z, s, x, t) - corr

    vals = objective(zs)
    k = int(np.argmax(vals))
    if k == 0 or k == len(zs) - 1:
        raise RadiusError(f"maximizer on truncation boundary at z={zs[k]}")
    best, arg = float(vals[k]), float(zs[k])
    if refine and isinstance(kernel, ParabolicBackend):
        res = minimize_scalar(lambda z: -objective(z)[0], bounds=(zs[k - 1], zs[k + 1]),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    target = field.eval(xi, (x0, s), (x, t))
    dev = best - target
    tol = 1e-9 if tol is None else tol
    return EternalCheck(abs(dev) <= tol, abs(dev), arg, True, tol)


def export_busemann_csv(rows, path) -> None:
    """Write (xi, p, q, value, stabilized) rows."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["xi", "p_x", "p_t", "q_x", "q_t", "value", "stabilized"])
        for xi, p, q, value, stab in rows:
            p, q = as_point(p), as_point(q)
            wr.writerow([str(as_direction(xi)), repr(p.x), repr(p.t), repr(q.x), repr(q.t),
                         repr(float(value)), "1" if stab else "0"])
