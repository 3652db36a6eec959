import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kpzeternal.errors import OrderingError, RadiusError
from kpzeternal.landscape import (ParabolicBackend, SpaceTimePoint, as_point, composition_slack,
                                  eval_kernel, truncation_radius)

coord = st.floats(-50, 50, allow_nan=False)


def test_parabolic_values():
    k = ParabolicBackend()
    assert eval_kernel(k, (0, 0), (1, 1)) == -1.0
    assert k.eval((2, -1), (2, 3)) == 0.0
    assert k.eval((1, 0), (-1, 2)) == -2.0


def test_eval_many_matches_eval():
    k = ParabolicBackend()
    ys = np.linspace(-2, 2, 9)
    assert np.allclose(k.eval_many(ys, 0.0, 0.5, 1.5), [k.eval((y, 0.0), (0.5, 1.5)) for y in ys])


@pytest.mark.parametrize("s,t", [(0.0, 0.0), (1.0, 0.5)])
def test_ordering_enforced(s, t):
    with pytest.raises(OrderingError):
        ParabolicBackend().eval((0, s), (0, t))


def test_points():
    assert as_point((1, 2)) == SpaceTimePoint(1.0, 2.0)
    assert SpaceTimePoint(0, 0).shifted(1, 2) == SpaceTimePoint(1, 2)
    with pytest.raises(ValueError):
        SpaceTimePoint(math.inf, 0)


def test_straight_line_composition_is_tight():
    assert composition_slack(ParabolicBackend(), (0, 0), (1, 1), (2, 2)) == 0.0


@given(coord, coord, coord, st.floats(-5, 5), st.floats(0.01, 5), st.floats(0.01, 5))
def test_composition_slack_nonnegative(x0, x1, x2, s, d1, d2):
    slack = composition_slack(ParabolicBackend(), (x0, s), (x1, s + d1), (x2, s + d1 + d2))
    assert slack >= -1e-9 * (1 + abs(x0) + abs(x1) + abs(x2)) ** 2


def test_truncation_radius_certifies_decay():
    k = ParabolicBackend()
    budget, s, t = 7.0, 0.0, 2.0
    r = truncation_radius(k, s, t, budget)
    ys = np.array([r + 1e-9, -r - 1e-9])
    assert np.all(k.eval_many(ys, s, 0.0, t) + budget < 0.0)


@pytest.mark.parametrize("budget", [math.inf, math.nan, -1.0])
def test_truncation_radius_rejects_bad_budget(budget):
    with pytest.raises(RadiusError):
        truncation_radius(ParabolicBackend(), 0.0, 1.0, budget)


def test_descriptor_text():
    assert ParabolicBackend().descriptor_text() == "backend=parabolic\ntolerance=0.0\n"
