"""Hot loops: max-plus passage tables, path backtracking, grid variational sups.

Every kernel has a numba version and a numpy version producing bit-identical
results. The public names are bound according to ``_accel.USE_NUMBA``.
"""
from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------- passage table


def _passage_table_numpy(w: np.ndarray) -> np.ndarray:
    # wavefront over antidiagonals; each entry sees exactly w + max(up, left)
    rows, cols = w.shape
    g = np.empty_like(w)
    g[0, 0] = w[0, 0]
    for d in range(1, rows + cols - 1):
        i = np.arange(max(0, d - cols + 1), min(rows - 1, d) + 1)
        j = d - i
        up = np.full(i.shape, -np.inf)
        left = np.full(i.shape, -np.inf)
        has_up = i > 0
        has_left = j > 0
        up[has_up] = g[i[has_up] - 1, j[has_up]]
        left[has_left] = g[i[has_left], j[has_left] - 1]
        g[i, j] = w[i, j] + np.maximum(up, left)
    return g


@njit
def _passage_table_numba(w):
    rows, cols = w.shape
    g = np.empty_like(w)
    for i in range(rows):
        for j in range(cols):
            if i == 0 and j == 0:
                g[i, j] = w[i, j]
            elif i == 0:
                g[i, j] = w[i, j] + g[i, j - 1]
            elif j == 0:
                g[i, j] = w[i, j] + g[i - 1, j]
            else:
                a = g[i - 1, j]
                b = g[i, j - 1]
                g[i, j] = w[i, j] + (a if a >= b else b)
    return g


# ---------------------------------------------------------------- backtracking


def _backtrack_numpy(g: np.ndarray, i: int, j: int) -> np.ndarray:
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        elif g[i - 1, j] >= g[i, j - 1]:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    return np.array(path[::-1], dtype=np.int64)


@njit
def _backtrack_numba(g, i, j):
    n = i + j + 1
    out = np.empty((n, 2), dtype=np.int64)
    pos = n - 1
    out[pos, 0] = i
    out[pos, 1] = j
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        elif g[i - 1, j] >= g[i, j - 1]:
            i -= 1
        else:
            j -= 1
        pos -= 1
        out[pos, 0] = i
        out[pos, 1] = j
    return out


# ---------------------------------------------------------------- quadratic sup


def _quadratic_sup_numpy(f, ys, xs, dt, tie_tol):
    nx = xs.shape[0]
    vals = np.empty(nx)
    left = np.empty(nx, dtype=np.int64)
    right = np.empty(nx, dtype=np.int64)
    chunk = max(1, 2_000_000 // max(1, ys.shape[0]))
    for lo in range(0, nx, chunk):
        x = xs[lo:lo + chunk, None]
        obj = f[None, :] - (x - ys[None, :]) ** 2 / dt
        best = obj.max(axis=1)
        near = obj >= (best - tie_tol)[:, None]
        vals[lo:lo + chunk] = best
        left[lo:lo + chunk] = near.argmax(axis=1)
        right[lo:lo + chunk] = ys.shape[0] - 1 - near[:, ::-1].argmax(axis=1)
    return vals, left, right


@njit
def _quadratic_sup_numba(f, ys, xs, dt, tie_tol):
    nx = xs.shape[0]
    ny = ys.shape[0]
    vals = np.empty(nx)
    left = np.empty(nx, dtype=np.int64)
    right = np.empty(nx, dtype=np.int64)
    obj = np.empty(ny)
    for a in range(nx):
        x = xs[a]
        best = -np.inf
        for b in range(ny):
            d = x - ys[b]
            v = f[b] - d * d / dt
            obj[b] = v
            if v > best:
                best = v
        lo = -1
        hi = -1
        for b in range(ny):
            if obj[b] >= best - tie_tol:
                if lo < 0:
                    lo = b
                hi = b
        vals[a] = best
        left[a] = lo
        right[a] = hi
    return vals, left, right


if USE_NUMBA:
    passage_table = _passage_table_numba
    backtrack = _backtrack_numba
    quadratic_sup = _quadratic_sup_numba
else:
    passage_table = _passage_table_numpy
    backtrack = _backtrack_numpy
    quadratic_sup = _quadratic_sup_numpy

KERNELS = {
    "passage_table": (_passage_table_numba, _passage_table_numpy),
    "backtrack": (_backtrack_numba, _backtrack_numpy),
    "quadratic_sup": (_quadratic_sup_numba, _quadratic_sup_numpy),
}


def passage_from(w: np.ndarray) -> np.ndarray:
    """Table of G(top-left corner; (i, j)) with both endpoint weights included."""
    return passage_table(np.ascontiguousarray(w, dtype=np.float64))


def passage_to(w: np.ndarray) -> np.ndarray:
    """Table of G((i, j); bottom-right corner)."""
    flipped = np.ascontiguousarray(w[::-1, ::-1], dtype=np.float64)
    return passage_table(flipped)[::-1, ::-1]
