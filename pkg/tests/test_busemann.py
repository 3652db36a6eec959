import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kpzeternal.busemann import (LatticeBusemann, ParabolicBusemann, SignedDirection, as_direction,
                                 busemann_eval, check_additivity, check_antisymmetry, check_eternal,
                                 check_monotonicity, check_slope, export_busemann_csv)
from kpzeternal.errors import HorizonError, OutOfBoxError
from kpzeternal.landscape import SpaceTimePoint
from kpzeternal.lpp import last_passage

eta = st.floats(-5, 5, allow_nan=False)
coord = st.floats(-20, 20, allow_nan=False)
point = st.tuples(coord, coord)
direction = st.builds(SignedDirection, eta, st.sampled_from([1, -1]))


def test_closed_form():
    f = ParabolicBusemann()
    assert busemann_eval(f, 1.0, (0, 0), (2, 3)) == 7.0
    assert f.eval(SignedDirection(1.0, -1), (0, 0), (2, 3)) == 7.0
    assert f.eval(-0.5, (1, 1), (0, 2)) == 1.25


def test_from_origin_matches_eval():
    f = ParabolicBusemann()
    etas = np.array([-1.0, 0.3, 2.0])
    xs = np.linspace(-2, 2, 5)
    origin = SpaceTimePoint(0.2, -0.1)
    mat = f.from_origin(etas, xs, 0.7, origin)
    for a, e in enumerate(etas):
        for b, x in enumerate(xs):
            assert mat[a, b] == pytest.approx(f.eval(e, origin, (x, 0.7)), abs=1e-12)


@given(direction, point, point, point)
def test_additivity(xi, p, q, r):
    assert check_additivity(ParabolicBusemann(), xi, p, q, r, tol=1e-9 * (1 + 25 * 40)).passed


@given(direction, point, point)
def test_antisymmetry(xi, p, q):
    assert check_antisymmetry(ParabolicBusemann(), xi, p, q, tol=1e-9).passed


@given(eta, eta, coord, st.floats(0.01, 10), coord)
def test_monotone_in_direction(e1, e2, x, gap, t):
    if e1 == e2:
        return
    lo, hi = sorted((e1, e2))
    assert check_monotonicity(ParabolicBusemann(), lo, hi, x, x + gap, t).passed


@given(eta, coord, st.floats(0.01, 10), coord)
def test_horizontal_slope(e, x, gap, t):
    assert check_slope(ParabolicBusemann(), e, x, x + gap, t, tol=1e-9 * (1 + abs(e) * (abs(x) + gap))).passed


def test_monotonicity_argument_order():
    with pytest.raises(ValueError):
        check_monotonicity(ParabolicBusemann(), 1.0, 0.0, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("xi,s,x,t", [(-1.0, -1.0, 0.5, 0.0), (0.5, 0.0, -1.0, 2.0), (1.3, -2.0, 0.0, -0.5)])
def test_eternal_identity(xi, s, x, t):
    rep = check_eternal(ParabolicBusemann(), xi, 0.0, s, x, t)
    assert rep.passed, rep
    # the maximizer sits on the backward characteristic of direction xi
    assert rep.argmax == pytest.approx(x + xi * (t - s), abs=1e-6)


@given(direction, direction)
def test_direction_order(a, b):
    assert (a < b) == ((a.eta, a.sign) < (b.eta, b.sign))
    if a.eta == b.eta and a.sign != b.sign:
        assert min(a, b).sign == -1


@given(direction)
def test_direction_text_round_trip(xi):
    assert SignedDirection.parse(str(xi)) == xi


def test_direction_parse():
    assert SignedDirection.parse("1.5-") == SignedDirection(1.5, -1)
    assert SignedDirection.parse("2") == SignedDirection(2.0, 1)
    assert SignedDirection.parse("1e-3") == SignedDirection(0.001, 1)
    assert as_direction(0.25) == SignedDirection(0.25, 1)
    with pytest.raises(ValueError):
        SignedDirection(1.0, 0)


# ---------------------------------------------------------------- lattice field


@pytest.fixture(scope="module")
def lattice():
    return LatticeBusemann.build(100, (-1.0, 1.0, -0.5, 0.5), [-2.0, 0.0, 2.0], 400, seed=11)


def test_lattice_raw_values_are_passage_times(lattice):
    lo, hi = lattice.window
    for eta in lattice.etas:
        v = lattice.far_sites[eta]
        site = (lo[0] + 5, lo[1] + 9)
        assert lattice.raw(eta, site) == pytest.approx(last_passage(lattice.box, v, site), rel=1e-12)


def test_lattice_additivity_exact(lattice, rng):
    lo, hi = lattice.window
    for _ in range(100):
        p, q, r = [(int(rng.integers(lo[0], hi[0] + 1)), int(rng.integers(lo[1], hi[1] + 1))) for _ in range(3)]
        e = lattice.etas[int(rng.integers(3))]
        tot = lattice.raw_increment(e, p, q) + lattice.raw_increment(e, q, r)
        assert tot == pytest.approx(lattice.raw_increment(e, p, r), abs=1e-9)


def test_lattice_monotone_horizontal_increments(lattice, rng):
    smap = lattice.smap
    for _ in range(60):
        m = int(rng.integers(-40, 40))
        k1, k2 = sorted(rng.choice(np.arange(-30, 31), 2, replace=False))
        p, q = smap.site_mk(m, int(k1)), smap.site_mk(m, int(k2))
        incs = [lattice.raw_increment(e, p, q) for e in lattice.etas]
        assert incs == sorted(incs)


def test_lattice_from_origin_matches_eval(lattice):
    xs = np.array([-0.5, 0.0, 0.4])
    o = SpaceTimePoint(0.0, 0.0)
    mat = lattice.from_origin(np.array(lattice.etas), xs, 0.25, o)
    for a, e in enumerate(lattice.etas):
        for b, x in enumerate(xs):
            assert mat[a, b] == pytest.approx(lattice.eval(e, o, (x, 0.25)), abs=1e-9)


def test_lattice_eternal_identity():
    wide = LatticeBusemann.build(100, (-4.5, 4.5, -0.3, 0.3), [0.0], 400, seed=2)
    rep = check_eternal(wide, 0.0, 0.0, -0.25, 0.1, 0.25, spacing=wide.smap.cell, refine=False, tol=1e-9)
    assert rep.passed, rep


def test_lattice_geodesic_is_a_path(lattice):
    lo, hi = lattice.window
    path = lattice.geodesic(0.0, hi)
    assert tuple(path[-1]) == hi
    assert np.all(np.abs(np.diff(path, axis=0)).sum(axis=1) == 1)
    assert path[0][0] == lo[0] or path[0][1] == lo[1]


def test_lattice_queries_outside_window(lattice):
    lo, hi = lattice.window
    with pytest.raises(OutOfBoxError):
        lattice.raw(0.0, (hi[0] + 1, hi[1]))
    with pytest.raises(OutOfBoxError):
        lattice.raw(1.0, hi)


def test_lattice_shallow_horizon():
    with pytest.raises(HorizonError):
        LatticeBusemann.build(100, (-1.0, 1.0, -0.5, 0.5), [0.0], 20, seed=1)
    with pytest.raises(HorizonError):
        LatticeBusemann.build(100, (-1.0, 1.0, -0.5, 0.5), [0.0], 400, seed=1, max_sites=1000)


def test_export_csv(tmp_path):
    f = ParabolicBusemann()
    rows = [(SignedDirection(1.0), (0, 0), (2, 3), f.eval(1.0, (0, 0), (2, 3)), True)]
    export_busemann_csv(rows, tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_text().splitlines() == [
        "xi,p_x,p_t,q_x,q_t,value,stabilized", "1.0+,0.0,0.0,2.0,3.0,7.0,1"]
