import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kpzeternal.busemann import ParabolicBusemann, SignedDirection
from kpzeternal.errors import BudgetError, GateRejected, RadiusError, SweepError, UndecidableTail
from kpzeternal.eternal import (EternalSolutionField, OpaqueTail, PowerTail, WeightFunction,
                                color_truncation_bound, divergence_probe, evolve, export_height_csv,
                                extract_constants, finiteness_gate, growth_rate_probe,
                                quadratic_envelope_check, restrict_weight, semigroup_check, truncated_sup,
                                variational_sup, w_star, w_star_detail, w_star_many)
from kpzeternal.landscape import ParabolicBackend

F = ParabolicBusemann()
K = ParabolicBackend()

atom_values = st.floats(-10, 10, allow_nan=False)
directions = st.builds(SignedDirection, st.floats(-8, 8, allow_nan=False), st.sampled_from([1, -1]))
finite_phi = st.dictionaries(directions, atom_values, min_size=1, max_size=6).map(
    lambda d: WeightFunction(tuple(d.items())))


# ---------------------------------------------------------------- weights


@given(finite_phi, st.none() | st.builds(PowerTail, st.floats(0.5, 8), st.floats(0.1, 5),
                                          st.sampled_from([0.05, 0.1, 0.5, 1.0])))
def test_text_round_trip(phi, tail):
    phi = WeightFunction(phi.atoms, tail)
    assert WeightFunction.from_text(phi.to_text()) == phi


def test_text_format():
    phi = WeightFunction.from_text("xi=1.0- value=2.5\nxi=0.0+ value=0  # comment\n\ntail=power alpha=3 A=1\n")
    assert phi.evaluate(SignedDirection(1.0, -1)) == 2.5
    assert phi.evaluate(SignedDirection(1.0, 1)) == -1.0  # tail
    assert phi.evaluate(0.0) == 0.0
    assert phi.evaluate(0.03) == -math.inf  # off the tail grid
    with pytest.raises(ValueError):
        WeightFunction.from_text("weights 1 2 3")
    with pytest.raises(ValueError):
        WeightFunction(((SignedDirection(1.0), 1.0), (SignedDirection(1.0), 2.0)))


def test_support_and_budget():
    phi = WeightFunction.from_mapping({0.1: 5.0}, tail=PowerTail(3.0, 1.0, 0.5))
    dirs, vals = phi.support(1.0)
    assert [d.eta for d in dirs] == [-1.0, -0.5, 0.0, 0.1, 0.5, 1.0]
    assert vals.tolist() == [-1.0, -0.125, -0.0, 5.0, -0.125, -1.0]
    with pytest.raises(BudgetError):
        phi.support()
    assert restrict_weight(phi, [0.5, 0.1]).as_dict() == {SignedDirection(0.1): 5.0, SignedDirection(0.5): -0.125}


def test_shift():
    phi = WeightFunction.from_mapping({0.0: 1.0, 1.0: 2.0})
    assert phi.shifted(3.0).as_dict() == {SignedDirection(0.0): 4.0, SignedDirection(1.0): 5.0}


# ---------------------------------------------------------------- gate


@given(finite_phi)
def test_gate_accepts_finite_support(phi):
    assert finiteness_gate(phi).accepted


@given(st.floats(2.0001, 20), st.floats(0.01, 10))
def test_gate_accepts_superquadratic_tails(alpha, amp):
    assert finiteness_gate(WeightFunction(tail=PowerTail(alpha, amp))).accepted


@given(st.floats(0.1, 2.0), st.floats(0.01, 10))
def test_gate_rejects_subquadratic_tails(alpha, amp):
    verdict = finiteness_gate(WeightFunction(tail=PowerTail(alpha, amp)))
    assert not verdict.accepted
    if alpha == 2.0:
        assert verdict.ratio_bound == -amp


def test_gate_undecidable_and_enforced():
    with pytest.raises(UndecidableTail):
        finiteness_gate(WeightFunction(tail=OpaqueTail(lambda e: -e ** 4)))
    with pytest.raises(GateRejected):
        w_star(WeightFunction(tail=PowerTail(2.0, 1.0, 1.0)), F, 0.0, 0.0)
    with pytest.raises(GateRejected):
        EternalSolutionField(WeightFunction(tail=PowerTail(1.5, 1.0)), F)


@given(st.floats(2.5, 6), st.floats(0.2, 3), st.floats(-20, 20), st.floats(-3, 3))
def test_truncation_bound_is_sound(alpha, amp, x, t):
    """No direction beyond the bound beats the truncated sup."""
    phi = WeightFunction(tail=PowerTail(alpha, amp, 0.25))
    bound = color_truncation_bound(phi, F, x, t)
    inside = truncated_sup(phi, F, x, t, bound)
    etas = np.arange(math.floor(bound / 0.25) + 1, math.floor(bound / 0.25) + 400) * 0.25
    for sgn in (1, -1):
        e = sgn * etas
        outside = 2 * e * x + e ** 2 * t - amp * np.abs(e) ** alpha
        assert outside.max() <= inside + 1e-9 * (1 + abs(inside))


def test_rejected_family_blows_up():
    phi = WeightFunction(tail=PowerTail(2.0, 1.0, 1.0))
    probe = divergence_probe(phi, F, 0.0, 2.0, budgets=(10, 100, 2000))
    assert probe[-1][1] > 1e6
    calm = divergence_probe(phi, F, 0.3, 0.5, budgets=(10, 100, 1000))
    assert len({v for _, v in calm}) == 1


# ---------------------------------------------------------------- W-star


def test_three_color_values():
    phi = WeightFunction.from_mapping({-1.0: 0.0, 0.0: 0.0, 1.0: 0.0})
    xs = np.array([-2.0, 0.0, 0.3, 2.0])
    assert w_star_many(phi, F, xs, 1.0).tolist() == [5.0, 1.0, 1.6, 5.0]
    assert w_star_detail(phi, F, -0.1, -1.0).argmax == SignedDirection(0.0)
    # ties go to the smallest direction
    assert w_star_detail(phi, F, 0.0, 1.0).argmax == SignedDirection(-1.0)


def test_empty_support_is_minus_infinity():
    assert w_star(WeightFunction(), F, 0.0, 0.0) == -math.inf


def test_power_tail_closed_form():
    phi = WeightFunction(tail=PowerTail(3.0, 1.0, 0.001))
    # sup_e 2 e x - e^3 at x = 1.5 is attained at e = 1 and equals 2
    assert w_star(phi, F, 1.5, 0.0) == pytest.approx(2.0, abs=1e-5)


def test_eternal_field_helpers():
    b = EternalSolutionField(WeightFunction.from_mapping({-1.0: 0.0, 1.0: 0.5}), F)
    assert b.increment((0.0, 0.0), (1.0, 0.0)) == pytest.approx(b.value(1.0, 0.0) - b.value(0.0, 0.0))
    dirs, mat = b.terms([0.0, 1.0], 0.5)
    assert mat.shape == (2, 2) and dirs[0] < dirs[1]
    assert not b.is_lattice()


# ---------------------------------------------------------------- variational problem


def test_variational_sup_against_brute_force(rng):
    f = lambda y: np.sin(3 * y) + 0.2 * y
    xs = np.linspace(-1, 1, 11)
    res = variational_sup(f, K, 0.0, 0.5, xs, 0.01, slope=3.5)
    for n, x in enumerate(xs):
        obj = f(res.grid) - (x - res.grid) ** 2 / 0.5
        assert res.values[n] == obj.max()
        assert res.argmax[n] == res.grid[np.argmax(obj)]
    assert res.interior.all()


def test_variational_sup_refinement_improves():
    f = lambda y: -np.abs(y - 0.123456)
    coarse = variational_sup(f, K, 0.0, 1.0, [0.0], 0.1, slope=1.0)
    fine = variational_sup(f, K, 0.0, 1.0, [0.0], 0.1, slope=1.0, refine=True)
    assert fine.values[0] >= coarse.values[0]


def test_variational_sup_raises_on_runaway_profile():
    with pytest.raises(RadiusError):
        variational_sup(lambda y: 50 * y ** 2, K, 0.0, 1.0, [0.0], 0.1, slope=1.0)


def test_evolve_linear_profile():
    """A line of slope 2a moves up by a^2 t and keeps its slope."""
    a = 0.7
    xs = np.linspace(-1, 1, 9)
    res = evolve(lambda y: 2 * a * y, K, 0.0, 1.5, xs, 0.0025, slope=2 * a + 1)
    assert np.allclose(res.values, 2 * a * xs + a * a * 1.5, atol=1e-12)
    assert np.allclose(res.argmax, xs + a * 1.5, atol=1e-12)


def test_semigroup():
    rep = semigroup_check(lambda y: -np.abs(y), K, 0.0, 0.5, 1.0, np.linspace(-1, 1, 11), 0.01, slope=1.5)
    assert rep.passed, rep


def test_semigroup_order():
    with pytest.raises(ValueError):
        semigroup_check(lambda y: y, K, 0.0, 1.0, 0.5, [0.0], 0.1, 1.0)


# ---------------------------------------------------------------- growth


@pytest.mark.parametrize("alpha", [3.0, 4.0, 6.0])
def test_growth_exponent(alpha):
    fit = growth_rate_probe(WeightFunction(tail=PowerTail(alpha, 1.0, 0.05)), F)
    assert abs(fit.exponent - alpha / (alpha - 1)) <= 0.02
    assert fit.expected == alpha / (alpha - 1)


def test_growth_sweep_must_span_a_decade():
    with pytest.raises(SweepError):
        growth_rate_probe(WeightFunction(tail=PowerTail(3.0, 1.0)), F, xs=np.linspace(10, 50, 5))


def test_subquadratic_envelope():
    rep = quadratic_envelope_check(WeightFunction(tail=PowerTail(3.0, 1.0, 0.05)), F, 0.5)
    assert rep.passed


# ---------------------------------------------------------------- constants from a slice


# reference points by hand: at t = -1 color 0 is seen at x = 0 and its left
# border with color -1 sits at -0.65; at t = 0.5 color 0 is gone and color -1,
# the leftmost, is seen at 0, so the reference falls back to x = 0
@pytest.mark.parametrize("t,ref", [(-1.0, -0.65), (0.5, 0.0)])
def test_extract_constants_reproduces_slice(t, ref):
    phi = WeightFunction.from_mapping({-1.0: 0.0, 0.0: 0.3, 1.0: -0.2})
    b = EternalSolutionField(phi, F)
    consts = extract_constants(b, t)
    xs = np.linspace(-4, 4, 161)
    got = w_star_many(consts, F, xs, t, origin=(0.0, t))
    assert np.max(np.abs(got - (b.values(xs, t) - b.value(ref, t)))) <= 1e-9


def test_export_height_csv(tmp_path):
    export_height_csv([(0.0, 1.0, 2.5, -1.0, "0.0+")], tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text() == "x,t,value,argmax,color\n0.0,1.0,2.5,-1.0,0.0+\n"
