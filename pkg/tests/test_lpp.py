import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from kpzeternal.errors import BoxTooLargeError, HorizonError, OrderingError, OutOfBoxError
from kpzeternal.landscape import composition_slack
from kpzeternal.lpp import (LPPBackend, ScalingMap, box_from_array, characteristic_drift, dump_weights,
                            estimate_busemann, far_point, geodesic_trace, last_passage, load_weights,
                            passage_table, reverse_passage_table, rho_of, sample_weights, scaled_eval)

TW_GUE_MEAN = -1.7711  # mean of the GUE Tracy-Widom law


def enumerate_paths(w):
    """Every up-right path of a small array, as lists of sites."""
    rows, cols = w.shape
    for downs in itertools.combinations(range(rows + cols - 2), rows - 1):
        i = j = 0
        path = [(0, 0)]
        for step in range(rows + cols - 2):
            if step in downs:
                i += 1
            else:
                j += 1
            path.append((i, j))
        yield path


def test_two_by_two_example():
    box = box_from_array([[1.0, 2.0], [3.0, 4.0]])
    assert last_passage(box, (0, 0), (1, 1)) == 8.0
    assert geodesic_trace(box, (0, 0), (1, 1)).tolist() == [[0, 0], [1, 0], [1, 1]]


def test_single_site_and_line():
    box = box_from_array([[2.5, 1.0, 4.0]])
    assert last_passage(box, (0, 0), (0, 0)) == 2.5
    assert last_passage(box, (0, 0), (0, 2)) == 7.5


def test_backtracking_ties_step_back_along_first_axis():
    box = box_from_array(np.ones((3, 3)))
    assert geodesic_trace(box, (0, 0), (2, 2)).tolist() == [[0, 0], [0, 1], [0, 2], [1, 2], [2, 2]]


@pytest.mark.parametrize("shape", [(1, 4), (3, 3), (4, 2), (4, 4)])
def test_dynamic_program_against_enumeration(shape, rng):
    for _ in range(25):
        w = rng.standard_exponential(shape)
        best = max(sum(w[s] for s in p) for p in enumerate_paths(w))
        got = last_passage(box_from_array(w), (0, 0), (shape[0] - 1, shape[1] - 1))
        assert math.isclose(got, best, rel_tol=1e-12)


def test_geodesic_weight_equals_passage_time(rng):
    w = rng.standard_exponential((20, 15))
    box = box_from_array(w)
    path = geodesic_trace(box, (2, 1), (19, 14))
    assert np.all(np.abs(np.diff(path, axis=0)).sum(axis=1) == 1)
    assert math.isclose(w[tuple(path.T)].sum(), last_passage(box, (2, 1), (19, 14)), rel_tol=1e-12)


def test_reverse_table_matches_forward(rng):
    box = box_from_array(rng.standard_exponential((12, 9)))
    rev = reverse_passage_table(box, (0, 0), (11, 8))
    for i, j in [(0, 0), (5, 3), (11, 8)]:
        assert rev[i, j] == pytest.approx(last_passage(box, (i, j), (11, 8)), rel=1e-12)


def test_unordered_sites_raise(rng):
    box = box_from_array(rng.standard_exponential((4, 4)))
    with pytest.raises(OrderingError):
        passage_table(box, (2, 0), (1, 3))


def test_sub_box_reproduces_full_box():
    full = sample_weights(99, (0, 40, 0, 30))
    sub = sample_weights(99, (7, 19, 4, 25))
    assert np.array_equal(sub.block((7, 4), (19, 25)), full.block((7, 4), (19, 25)))


def test_seed_controls_weights():
    a = sample_weights(5, (0, 10, 0, 10)).block((0, 0), (10, 10))
    b = sample_weights(5, (0, 10, 0, 10)).block((0, 0), (10, 10))
    c = sample_weights(6, (0, 10, 0, 10)).block((0, 0), (10, 10))
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_box_limits():
    with pytest.raises(BoxTooLargeError):
        sample_weights(0, (0, 999, 0, 999), max_sites=1000)
    with pytest.raises(ValueError):
        sample_weights(0, (-1, 3, 0, 3))
    box = sample_weights(0, (0, 3, 0, 3))
    with pytest.raises(OutOfBoxError):
        box.weight((4, 0))
    with pytest.raises(ValueError):
        box.weights[0, 0] = 1.0


def test_dump_load_round_trip(tmp_path):
    box = sample_weights(17, (3, 12, 5, 9))
    dump_weights(box, tmp_path / "w.bin")
    back = load_weights(tmp_path / "w.bin")
    assert back.bounds == box.bounds and back.seed == 17
    assert np.array_equal(back.block((3, 5), (12, 9)), box.block((3, 5), (12, 9)))


def test_load_rejects_foreign_file(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"not a dump")
    with pytest.raises(ValueError):
        load_weights(tmp_path / "x.bin")


def test_scaling_map_round_trip():
    smap = ScalingMap(200, (300, 300))
    for x, t in [(0.0, 0.0), (0.5, -0.25), (-1.0, 0.75)]:
        site = smap.site((x, t))
        p = smap.point(site)
        assert abs(p.x - x) <= smap.cell / 2 + 1e-12 and abs(p.t - t) <= smap.tick / 2 + 1e-12
    assert smap.site((0.0, 0.0)) == (300, 300)


def test_outside_light_cone_is_minus_infinity():
    smap = ScalingMap(50, (60, 60))
    box = sample_weights(1, (0, 150, 0, 150))
    assert scaled_eval(box, smap, (0.0, 0.0), (0.5, 0.1)) == -math.inf


def test_scaled_mean_near_tracy_widom():
    n = 200
    smap = ScalingMap(n, (0, 0))
    vals = [scaled_eval(sample_weights(r, (0, n, 0, n)), smap, (0, 0), (0, 1)) for r in range(200)]
    assert abs(np.mean(vals) - TW_GUE_MEAN) < 0.5


def test_reflection_is_transposition():
    n = 60
    smap = ScalingMap(n, (40, 40))
    w = sample_weights(3, (0, 140, 0, 140)).block((0, 0), (140, 140))
    a = scaled_eval(box_from_array(w), smap, (0.0, 0.0), (0.4, 1.0))
    b = scaled_eval(box_from_array(w.T), smap, (0.0, 0.0), (-0.4, 1.0))
    assert a == b


def test_reflection_symmetry_in_distribution():
    n, reps = 200, 200
    smap = ScalingMap(n, (100, 100))
    bounds = (0, 400, 0, 400)
    plus = [scaled_eval(sample_weights(int(np.random.SeedSequence([7, r, 0]).generate_state(1)[0]), bounds),
                        smap, (0, 0), (0.5, 1)) for r in range(reps)]
    minus = [scaled_eval(sample_weights(int(np.random.SeedSequence([7, r, 1]).generate_state(1)[0]), bounds),
                         smap, (0, 0), (-0.5, 1)) for r in range(reps)]
    res = ks_2samp(plus, minus)
    print(f"KS distance {res.statistic:.3f}, p-value {res.pvalue:.3f}")
    assert res.statistic < 0.1
    assert res.pvalue > 0.01


@given(st.integers(0, 10_000), st.integers(1, 12), st.integers(1, 12), st.integers(0, 12), st.integers(0, 12))
def test_superadditivity_with_endpoint_weight(seed, a, b, c, d):
    box = sample_weights(seed, (0, 24, 0, 24))
    p, q, r = (0, 0), (a, b), (a + c, b + d)
    lhs = last_passage(box, p, r)
    rhs = last_passage(box, p, q) + last_passage(box, q, r) - box.weight(q)
    assert lhs >= rhs - 1e-12 * lhs


def test_lpp_composition_slack_nonnegative():
    smap = ScalingMap(50, (80, 80))
    kern = LPPBackend(sample_weights(8, (0, 200, 0, 200)), smap)
    for mid_x in (-0.3, 0.0, 0.2):
        assert composition_slack(kern, (0.0, -0.5), (mid_x, 0.0), (0.1, 0.5)) >= 0.0


def test_direction_map():
    assert rho_of(0.0, 200) == 0.5
    assert rho_of(1e6, 200) == 0.95 and rho_of(-1e6, 200) == 0.05
    assert characteristic_drift(0.5) == 0.0
    assert characteristic_drift(0.7) == pytest.approx(-characteristic_drift(0.3), rel=1e-12)
    smap = ScalingMap(200, (500, 500))
    v = far_point(smap, 0.0, 100)
    assert v == (400, 400)
    with pytest.raises(HorizonError):
        far_point(smap, 0.0, 0)


def test_busemann_estimate_stabilizes_for_near_points():
    smap = ScalingMap(100, (700, 700))
    box = sample_weights(4, (0, 1000, 0, 1000))
    p, q = (700, 700), (701, 700)
    est = estimate_busemann(box, smap, 0.0, p, q, 400)
    assert est.stabilized and len(est.history) == 4
    with pytest.raises(HorizonError):
        estimate_busemann(box, smap, 0.0, p, q, 5000)


def test_stationary_boundary_increments():
    """Burke property: horizontal increments on a line are Exp(1 - rho)."""
    from scipy.stats import kstest

    rho, size = 0.3, 300
    rng = np.random.default_rng(21)
    w = rng.standard_exponential((size, size))
    w[1:, 0] = rng.standard_exponential(size - 1) / (1 - rho)
    w[0, 1:] = rng.standard_exponential(size - 1) / rho
    w[0, 0] = 0.0
    g = passage_table(box_from_array(w), (0, 0), (size - 1, size - 1))
    inc = np.diff(g[:, size // 2])
    assert kstest(inc, "expon", args=(0, 1 / (1 - rho))).pvalue > 0.01
