"""Named weight functions used by demos and verification suites."""
from __future__ import annotations

from ..eternal import PowerTail, WeightFunction

THREE_COLOR = WeightFunction.from_mapping({-1.0: 0.0, 0.0: 0.0, 1.0: 0.0})
# middle colors die one after another at t = -0.3, 0.1, 0.5
FIVE_COLOR = WeightFunction.from_mapping({-2.0: 0.0, -1.0: 0.3, 0.0: 1.2, 1.0: 1.5, 2.0: 0.0})
SINGLE_COLOR = WeightFunction.from_mapping({0.0: 0.0})
TWO_COLOR = WeightFunction.from_mapping({-1.0: 0.0, 1.0: 0.0})
LATTICE_THREE_COLOR = WeightFunction.from_mapping({-2.0: 0.0, 0.0: 0.0, 2.0: 0.0})
QUADRATIC_INTEGERS = WeightFunction(tail=PowerTail(2.0, 1.0, 1.0))


def power_tail(alpha: float, amplitude: float = 1.0, step: float = 0.05) -> WeightFunction:
    return WeightFunction(tail=PowerTail(alpha, amplitude, step))


CORPUS = {
    "three-color": THREE_COLOR,
    "five-color": FIVE_COLOR,
    "single-color": SINGLE_COLOR,
    "two-color": TWO_COLOR,
    "lattice-three-color": LATTICE_THREE_COLOR,
    "quadratic-integers": QUADRATIC_INTEGERS,
    "power-3": power_tail(3.0),
    "power-4": power_tail(4.0),
    "power-6": power_tail(6.0),
}
