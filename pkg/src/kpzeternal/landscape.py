"""Space-time points, landscape kernels and the deterministic parabolic backend."""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import OrderingError, OutOfBoxError, RadiusError

RADIUS_MARGIN = 1.1


@dataclass(frozen=True, order=True)
class SpaceTimePoint:
    """A point (x, t) of the space-time plane."""

    x: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.t)):
            raise ValueError(f"non-finite point ({self.x}, {self.t})")

    def shifted(self, dx: float = 0.0, dt: float = 0.0) -> SpaceTimePoint:
        return SpaceTimePoint(self.x + dx, self.t + dt)


def as_point(p) -> SpaceTimePoint:
    if isinstance(p, SpaceTimePoint):
        return p
    x, t = p
    return SpaceTimePoint(float(x), float(t))


class LandscapeKernel(ABC):
    """Two-point kernel L(y, s; x, t), defined for s < t."""

    name = "abstract"
    # kernel values are trusted to this absolute accuracy
    tolerance = 0.0
    # (x_min, x_max, t_min, t_max); None means unbounded
    box: tuple[float, float, float, float] | None = None

    def check_box(self, x: float, t: float) -> None:
        if self.box is None:
            return
        x0, x1, t0, t1 = self.box
        if not (x0 <= x <= x1 and t0 <= t <= t1):
            raise OutOfBoxError(f"({x}, {t}) outside {self.name} box {self.box}")

    def eval(self, frm, to) -> float:
        frm, to = as_point(frm), as_point(to)
        if not frm.t < to.t:
            raise OrderingError(f"need s < t, got s={frm.t}, t={to.t}")
        self.check_box(frm.x, frm.t)
        self.check_box(to.x, to.t)
        return float(self._eval(frm, to))

    @abstractmethod
    def _eval(self, frm: SpaceTimePoint, to: SpaceTimePoint) -> float: ...

    def eval_many(self, ys: np.ndarray, s: float, x: float, t: float) -> np.ndarray:
        """L(y, s; x, t) for every y in ``ys``."""
        ys = np.asarray(ys, dtype=float)
        return np.array([self.eval((y, s), (x, t)) for y in ys])

    def endpoint_correction(self, mid) -> float:
        """Amount added back when composing at ``mid`` (nonzero for lattice kernels)."""
        return 0.0

    def spread(self, s: float, t: float, extent: float) -> float:
        """Extra fluctuation allowance over a window of half-width ``extent``."""
        return 0.0

    @abstractmethod
    def descriptor(self) -> dict[str, str]: ...

    def descriptor_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in sorted(self.descriptor().items())) + "\n"


class ParabolicBackend(LandscapeKernel):
    """The deterministic kernel -(x - y)^2 / (t - s)."""

    name = "parabolic"

    def _eval(self, frm, to):
        return -((to.x - frm.x) ** 2) / (to.t - frm.t)

    def eval_many(self, ys, s, x, t):
        if not s < t:
            raise OrderingError(f"need s < t, got s={s}, t={t}")
        ys = np.asarray(ys, dtype=float)
        return -((x - ys) ** 2) / (t - s)

    def descriptor(self):
        return {"backend": "parabolic", "tolerance": repr(self.tolerance)}


def eval_kernel(kernel: LandscapeKernel, frm, to) -> float:
    return kernel.eval(frm, to)


def composition_slack(kernel: LandscapeKernel, frm, mid, to) -> float:
    """L(p; r) - L(p; q) - L(q; r), corrected for lattice endpoint double counting."""
    frm, mid, to = as_point(frm), as_point(mid), as_point(to)
    if not (frm.t < mid.t < to.t):
        raise OrderingError("composition needs s < r < t")
    return (kernel.eval(frm, to) - kernel.eval(frm, mid) - kernel.eval(mid, to)
            + kernel.endpoint_correction(mid))


def truncation_radius(kernel: LandscapeKernel, s: float, t: float, height_budget: float,
                      cell: float = 0.0, extent: float = 0.0) -> float:
    """Radius R with L(y, s; x, t) + budget < L(x, s; x, t) whenever |y - x| > R.

    The raw radius gets a 10% multiplicative margin plus one grid cell.
    """
    if not s < t:
        raise OrderingError(f"need s < t, got s={s}, t={t}")
    if height_budget < 0 or not math.isfinite(height_budget):
        raise RadiusError(f"height budget must be finite and nonnegative, got {height_budget}")
    budget = height_budget + 2.0 * kernel.spread(s, t, extent)
    if not math.isfinite(budget):
        raise RadiusError(f"{kernel.name} kernel has no quadratic decay certificate")
    return RADIUS_MARGIN * math.sqrt(budget * (t - s)) + cell
