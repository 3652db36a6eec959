import os
import subprocess
import sys

import numpy as np
import pytest

from kpzeternal import _accel, kernels
from kpzeternal.kernels import KERNELS


@pytest.mark.parametrize("shape", [(1, 1), (1, 7), (6, 1), (5, 9), (40, 33)])
def test_passage_table_paths_agree(shape, rng):
    w = rng.standard_exponential(shape)
    fast, slow = KERNELS["passage_table"]
    assert np.array_equal(fast(w), slow(w))


def test_backtrack_paths_agree(rng):
    w = rng.standard_exponential((30, 25))
    g = KERNELS["passage_table"][1](w)
    fast, slow = KERNELS["backtrack"]
    for i, j in [(29, 24), (0, 0), (10, 3), (0, 12)]:
        assert np.array_equal(fast(g, i, j), slow(g, i, j))


def test_quadratic_sup_paths_agree(rng):
    ys = np.linspace(-3, 3, 301)
    f = np.round(rng.normal(size=ys.size), 1)  # rounding creates ties
    xs = np.linspace(-1, 1, 17)
    fast, slow = KERNELS["quadratic_sup"]
    for a, b in zip(fast(f, ys, xs, 0.5, 1e-12), slow(f, ys, xs, 0.5, 1e-12)):
        assert np.array_equal(a, b)


def test_quadratic_sup_brute_force(rng):
    ys = np.linspace(-2, 2, 81)
    f = rng.normal(size=ys.size)
    xs = np.array([-0.3, 0.0, 0.77])
    vals, left, right = kernels.quadratic_sup(f, ys, xs, 0.7, 1e-12)
    for n, x in enumerate(xs):
        obj = f - (x - ys) ** 2 / 0.7
        assert vals[n] == obj.max()
        assert left[n] == np.argmax(obj) == right[n]


def test_passage_to_is_reversed_passage(rng):
    w = rng.standard_exponential((7, 5))
    g = kernels.passage_to(w)
    assert g[0, 0] == kernels.passage_from(w)[-1, -1]
    assert g[-1, -1] == w[-1, -1]


def test_env_flag_selects_numpy():
    env = dict(os.environ, KPZETERNAL_PURE_NUMPY="1")
    code = ("from kpzeternal import _accel, kernels;"
            "print(_accel.USE_NUMBA, kernels.passage_table is kernels._passage_table_numpy)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True"]


def test_default_uses_numba():
    if not _accel.NUMBA_AVAILABLE or os.environ.get("KPZETERNAL_PURE_NUMPY"):
        pytest.skip("numba path not active")
    assert kernels.passage_table is kernels._passage_table_numba
