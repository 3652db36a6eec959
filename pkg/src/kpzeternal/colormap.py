"""Coloring maps of eternal solutions: borders, extinctions, shock trees."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .busemann import LatticeBusemann, SignedDirection, as_direction
from .errors import DegenerateSliceError
from .eternal import TIE_TOL, EternalSolutionField, WeightFunction, extract_constants, w_star_many
from .geodesics import assign_colors, geometric_partition, lattice_slice_xs, tau_two_colors
from .landscape import SpaceTimePoint

UNRESOLVED = -1


@dataclass(frozen=True)
class ColorSlice:
    t: float
    xs: np.ndarray = field(repr=False)
    codes: np.ndarray = field(repr=False)

    @property
    def cell(self) -> float:
        return float(self.xs[1] - self.xs[0]) if self.xs.size > 1 else 0.0

    def runs(self) -> list[tuple[int, int, int]]:
        """(code, first index, last index) for maximal constant stretches."""
        out = []
        start = 0
        for n in range(1, self.codes.size + 1):
            if n == self.codes.size or self.codes[n] != self.codes[start]:
                out.append((int(self.codes[start]), start, n - 1))
                start = n
        return out


@dataclass(frozen=True)
class ColorGrid:
    """Colors of a space-time window, slices sorted by increasing time."""

    palette: tuple[SignedDirection, ...]
    slices: tuple[ColorSlice, ...]
    method: str = "geodesic"

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.slices])

    def code(self, xi) -> int:
        return self.palette.index(as_direction(xi))

    def color_at(self, k: int, n: int) -> SignedDirection | None:
        c = int(self.slices[k].codes[n])
        return None if c == UNRESOLVED else self.palette[c]

    def visible(self, k: int) -> list[SignedDirection]:
        return [self.palette[c] for c, _, _ in self.slices[k].runs() if c != UNRESOLVED]


# ---------------------------------------------------------------- building


def dominance_codes(b: EternalSolutionField, xs, t: float, palette) -> np.ndarray:
    """Index of the smallest direction whose term attains the sup at each x."""
    dirs, mat = b.terms(xs, t)
    best = mat.max(axis=0)
    tol = TIE_TOL * np.maximum(1.0, np.abs(best))
    first = np.argmax(mat >= best - tol, axis=0)
    lookup = np.array([palette.index(d) for d in dirs])
    return lookup[first]


def _window_xs(x0: float, x1: float, spacing: float) -> np.ndarray:
    n = int(round((x1 - x0) / spacing))
    return np.round(x0 + spacing * np.arange(n + 1), 12)


def build_color_grid(b: EternalSolutionField, window, spacing: float = 0.05, dt: float = 0.05,
                     method: str | None = None, partition_levels: int = 3) -> ColorGrid:
    """Color every cell of ``window = (x0, x1, t0, t1)``.

    Continuum fields color each cell by the direction of its leftmost backward
    geodesic. Lattice fields color each site by the smallest direction whose
    Busemann term attains the sup; the spacing arguments are then ignored and
    every lattice site and time index of the window is used.
    """
    x0, x1, t0, t1 = window
    palette = tuple(b.weights.directions)
    if b.weights.tail is not None:
        raise ValueError("coloring needs a finitely supported weight function")
    lattice = isinstance(b.busemann, LatticeBusemann)
    method = method or ("dominance" if lattice else "geodesic")
    slices = []
    if lattice:
        smap = b.busemann.smap
        m0, m1 = math.ceil(t0 * smap.n - 1e-9), math.floor(t1 * smap.n + 1e-9)
        times = np.arange(m0, m1 + 1) / smap.n
    else:
        times = _window_xs(t0, t1, dt)
    for t in times:
        if lattice:
            xs = lattice_slice_xs(b.busemann, t)
            xs = xs[(xs >= x0 - 1e-12) & (xs <= x1 + 1e-12)]
        else:
            xs = _window_xs(x0, x1, spacing)
        if method == "dominance":
            codes = dominance_codes(b, xs, t, palette)
        else:
            cols = assign_colors(b, xs, t, palette, geometric_partition(t, partition_levels), spacing)
            codes = np.array([UNRESOLVED if c is None else palette.index(c) for c in cols])
        slices.append(ColorSlice(float(t), xs, codes))
    return ColorGrid(palette, tuple(slices), method)


# ---------------------------------------------------------------- runs of a slice


@dataclass(frozen=True)
class Run:
    """A maximal run of one color on a slice, with points in its closure."""

    color: SignedDirection
    first: float
    last: float
    left_border: float
    right_border: float
    left_anchor: float
    right_anchor: float
    jump: float = 0.0


def _refine_border(b: EternalSolutionField, xi, r: float, l: float, t: float) -> float:
    # largest x in [r, l] where b still follows W^xi from r; b - that is >= 0
    ref = b.value(r, t)
    scale = 1.0 + abs(ref)
    gap = lambda x: b.value(x, t) - ref - b.busemann.eval(xi, (r, t), (x, t))
    lo, hi = r, l
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 1e-12 * scale:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    return lo


def slice_runs(b: EternalSolutionField, t: float, window=(-4.0, 4.0), spacing: float = 0.05) -> list[Run]:
    """Color runs of the slice at time t, with exact borders on continuum fields."""
    x0, x1 = window
    grid = build_color_grid(b, (x0, x1, t, t), spacing, 1.0)
    sl = grid.slices[0]
    runs = sl.runs()
    if any(c == UNRESOLVED for c, _, _ in runs):
        raise DegenerateSliceError(f"unresolved cells on slice t={t}")
    codes = [c for c, _, _ in runs]
    if len(set(codes)) != len(codes):
        raise DegenerateSliceError(f"a color occurs in two runs on slice t={t}")
    lattice = isinstance(b.busemann, LatticeBusemann)
    out = []
    borders = []
    for (c, i0, i1), nxt in zip(runs[:-1], runs[1:]):
        r, l = float(sl.xs[i1]), float(sl.xs[nxt[1]])
        borders.append(r if lattice else _refine_border(b, grid.palette[c], r, l, t))
    for n, (c, i0, i1) in enumerate(runs):
        first, last = float(sl.xs[i0]), float(sl.xs[i1])
        a = borders[n - 1] if n > 0 else -math.inf
        bb = borders[n] if n < len(borders) else math.inf
        if lattice:
            la, ra = first, last
            jump = b.value(float(sl.xs[runs[n + 1][1]]), t) - b.value(last, t) if n < len(borders) else 0.0
        else:
            la = a if math.isfinite(a) else first
            ra = bb if math.isfinite(bb) else last
            jump = 0.0
        out.append(Run(grid.palette[c], first, last, a, bb, la, ra, jump))
    return out


# ---------------------------------------------------------------- borders and extinctions


@dataclass(frozen=True)
class BorderSample:
    t: float
    left: float
    right: float


def borders(grid: ColorGrid, xi) -> list[BorderSample]:
    """Grid borders (a, b] of a color on every slice where it is visible.

    a is the last cell of the run on the left, b the last cell of the color's
    own run; runs touching the window edge get -inf / +inf.
    """
    code = grid.code(xi)
    out = []
    for sl in grid.slices:
        runs = sl.runs()
        for n, (c, i0, i1) in enumerate(runs):
            if c != code:
                continue
            a = float(sl.xs[i0 - 1]) if i0 > 0 else -math.inf
            bb = float(sl.xs[i1]) if i1 < sl.xs.size - 1 else math.inf
            out.append(BorderSample(sl.t, a, bb))
            break
    return out


@dataclass(frozen=True)
class ExtinctionRecord:
    color: SignedDirection
    t: float
    x: float
    left: SignedDirection | None
    right: SignedDirection | None
    slice_index: int


def _presence(grid: ColorGrid, code: int) -> list[int]:
    return [k for k, sl in enumerate(grid.slices) if np.any(sl.codes == code)]


def extinction(grid: ColorGrid, xi) -> ExtinctionRecord | None:
    """Last slice where the color is visible, if it dies inside the window."""
    code = grid.code(xi)
    alive = _presence(grid, code)
    if not alive or alive[-1] == len(grid.slices) - 1:
        return None
    k = alive[-1]
    sl = grid.slices[k]
    runs = sl.runs()
    n = next(n for n, r in enumerate(runs) if r[0] == code)
    _, i0, i1 = runs[n]
    if i0 == 0 or i1 == sl.xs.size - 1:
        # leaves through the window side, not a genuine extinction
        return None
    left = grid.palette[runs[n - 1][0]] if n > 0 and runs[n - 1][0] != UNRESOLVED else None
    right = grid.palette[runs[n + 1][0]] if n + 1 < len(runs) and runs[n + 1][0] != UNRESOLVED else None
    return ExtinctionRecord(grid.palette[code], sl.t, 0.5 * (sl.xs[i0] + sl.xs[i1]), left, right, k)


def extinctions(grid: ColorGrid) -> list[ExtinctionRecord]:
    """All genuine extinctions, latest first."""
    recs = [r for r in (extinction(grid, xi) for xi in grid.palette) if r is not None]
    return sorted(recs, key=lambda r: -r.t)


# ---------------------------------------------------------------- shock tree


@dataclass
class ShockEdge:
    left: SignedDirection
    right: SignedDirection
    points: list = field(default_factory=list)
    start: int | None = None
    end: int | None = None
    lateral: bool = False


@dataclass(frozen=True)
class ShockNode:
    color: SignedDirection
    t: float
    x: float
    left: SignedDirection
    right: SignedDirection


@dataclass(frozen=True)
class ShockTree:
    nodes: tuple[ShockNode, ...]
    edges: tuple[ShockEdge, ...]

    def degree(self, n: int) -> int:
        return sum((e.start == n) + (e.end == n) for e in self.edges)

    def leaves(self) -> list[int]:
        return [k for k, e in enumerate(self.edges) if e.start is None]

    def to_json(self) -> str:
        def d(xi):
            return str(xi)

        payload = {
            "nodes": [{"color": d(n.color), "t": n.t, "x": n.x, "left": d(n.left), "right": d(n.right),
                       "degree": self.degree(k)} for k, n in enumerate(self.nodes)],
            "edges": [{"left": d(e.left), "right": d(e.right), "start": e.start, "end": e.end,
                       "lateral": e.lateral, "points": [[float(t), float(x)] for t, x in e.points]}
                      for e in self.edges],
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def shock_tree(grid: ColorGrid) -> ShockTree:
    """Borders as edges, extinction points as nodes; only merges happen forward in time."""
    nodes: list[ShockNode] = []
    edges: list[ShockEdge] = []
    open_edges: dict[tuple[int, int], int] = {}
    ext = {r.slice_index: [] for r in extinctions(grid)}
    for r in extinctions(grid):
        ext[r.slice_index].append(r)
    prev_codes: list[int] | None = None
    born: dict[tuple[int, int], int] = {}
    for k, sl in enumerate(grid.slices):
        runs = [r for r in sl.runs()]
        codes = [c for c, _, _ in runs]
        pairs = {}
        for (c1, _, i1), (c2, i0, _) in zip(runs[:-1], runs[1:]):
            pairs[(c1, c2)] = 0.5 * (sl.xs[i1] + sl.xs[i0])
        for key in list(open_edges):
            if key not in pairs:
                del open_edges[key]
        for key, x in pairs.items():
            if key not in open_edges:
                lateral = prev_codes is not None and key not in born
                e = ShockEdge(grid.palette[key[0]], grid.palette[key[1]], [], born.get(key), None, lateral)
                edges.append(e)
                open_edges[key] = len(edges) - 1
            edges[open_edges[key]].points.append((sl.t, x))
        born = {}
        for r in ext.get(k, []):
            c, l, rr = grid.code(r.color), r.left, r.right
            if l is None or rr is None:
                continue
            nodes.append(ShockNode(r.color, r.t, r.x, l, rr))
            nid = len(nodes) - 1
            for key in ((grid.code(l), c), (c, grid.code(rr))):
                if key in open_edges:
                    edges[open_edges[key]].end = nid
            born[(grid.code(l), grid.code(rr))] = nid
        prev_codes = codes
    return ShockTree(tuple(nodes), tuple(edges))


# ---------------------------------------------------------------- structure checks


@dataclass(frozen=True)
class StructureReport:
    passed: bool
    failures: tuple[str, ...]
    ambiguity: float = 0.0
    extinction_count: int = 0


def structure_check(grid: ColorGrid, max_ambiguity: float = 0.0) -> StructureReport:
    """Ordered colors, no reappearance, merge-only evolution, degree-3 nodes.

    Unresolved cells are tolerated up to ``max_ambiguity`` as a fraction of all cells.
    """
    fails = []
    unresolved = cells = 0
    for sl in grid.slices:
        cells += sl.codes.size
        unresolved += int(np.count_nonzero(sl.codes == UNRESOLVED))
        codes = [c for c, _, _ in sl.runs() if c != UNRESOLVED]
        dirs = [grid.palette[c] for c in codes]
        if dirs != sorted(dirs) or len(set(dirs)) != len(dirs):
            fails.append(f"colors out of order at t={sl.t}")
    ambiguity = unresolved / cells if cells else 0.0
    if ambiguity > max_ambiguity:
        fails.append(f"ambiguity fraction {ambiguity:.4f} above {max_ambiguity}")
    for code, xi in enumerate(grid.palette):
        alive = _presence(grid, code)
        for k0, k1 in zip(alive[:-1], alive[1:]):
            if k1 == k0 + 1:
                continue
            sl = grid.slices[k1]
            lateral = any(c == code and (i0 == 0 or i1 == sl.xs.size - 1) for c, i0, i1 in sl.runs())
            if not lateral:
                fails.append(f"color {xi} reappears inside the window at t={sl.t}")
    for k in range(1, len(grid.slices)):
        before = {c for c, _, _ in grid.slices[k - 1].runs()}
        runs = grid.slices[k].runs()
        for n, (c, i0, i1) in enumerate(runs):
            at_edge = i0 == 0 or i1 == grid.slices[k].xs.size - 1
            if c not in before and not at_edge:
                fails.append(f"color {grid.palette[c]} born inside the window at t={grid.slices[k].t}")
    recs = extinctions(grid)
    points = {(r.t, r.x) for r in recs}
    if len(points) != len(recs):
        fails.append("two colors share an extinction point")
    tree = shock_tree(grid)
    for n in range(len(tree.nodes)):
        if tree.degree(n) != 3:
            fails.append(f"node {n} has degree {tree.degree(n)}")
    return StructureReport(not fails, tuple(fails), ambiguity, len(recs))


@dataclass(frozen=True)
class BorderInterfaceReport:
    fraction: float
    deviations: tuple[float, ...]
    max_cells: float

    @property
    def passed(self) -> bool:
        return self.fraction >= 0.9


def border_interface_check(grid: ColorGrid, b: EternalSolutionField, xi, weights: WeightFunction,
                           max_cells: float = 2.0) -> BorderInterfaceReport:
    """Left border of ``xi`` against the two-color interface with its left neighbor.

    Deviations are measured in cells on every slice where xi is visible and has
    a left neighbor; ``weights`` supplies the constants for both colors.
    """
    xi = as_direction(xi)
    code = grid.code(xi)
    consts = weights.as_dict()
    devs = []
    for sl in grid.slices:
        runs = sl.runs()
        for n, (c, i0, _) in enumerate(runs):
            if c != code or n == 0 or runs[n - 1][0] == UNRESOLVED:
                continue
            left = grid.palette[runs[n - 1][0]]
            if left not in consts or xi not in consts:
                continue
            tau = tau_two_colors(b.busemann, left, xi, consts[left], consts[xi], sl.t, b.origin)
            a = float(sl.xs[i0 - 1])
            devs.append(abs(a - tau) / sl.cell if math.isfinite(tau) else math.inf)
    if not devs:
        return BorderInterfaceReport(0.0, (), max_cells)
    devs_arr = np.array(devs)
    return BorderInterfaceReport(float(np.mean(devs_arr <= max_cells)), tuple(devs), max_cells)


@dataclass(frozen=True)
class TripleProbe:
    maximizers: tuple[float, ...]
    slopes: tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.maximizers)


def triple_geodesic_probe(b: EternalSolutionField, point, depth: float = 0.5, spacing: float = 0.01,
                          tol: float | None = None) -> TripleProbe:
    """Distinct near-maximizers of the one-step geodesic objective at ``point``."""
    from .eternal import sup_grid
    from .landscape import truncation_radius

    p = point if isinstance(point, SpaceTimePoint) else SpaceTimePoint(*point)
    s = p.t - depth
    slope = b.slope_bound(np.array([p.x]), s)
    radius = truncation_radius(b.kernel, s, p.t, slope * slope * depth, cell=spacing)
    ys = sup_grid(np.array([p.x]), spacing, radius)
    obj = b.values(ys, s) + b.kernel.eval_many(ys, s, p.x, p.t)
    best = obj.max()
    if tol is None:
        tol = 4.0 * slope * spacing + spacing ** 2 / depth
    near = np.flatnonzero(obj >= best - tol)
    clusters = np.split(near, np.flatnonzero(np.diff(near) > 1) + 1)
    peaks = []
    for cl in clusters:
        k = cl[np.argmax(obj[cl])]
        if 0 < k < ys.size - 1 and obj[k] >= obj[k - 1] and obj[k] >= obj[k + 1]:
            peaks.append(float(ys[k]))
    slopes = tuple((y - p.x) / depth for y in peaks)
    return TripleProbe(tuple(peaks), slopes)


# ---------------------------------------------------------------- reconstruction


def _refine_extinction(b: EternalSolutionField, rec: ExtinctionRecord, consts: dict, grid: ColorGrid,
                       rep: float) -> SpaceTimePoint:
    # top point of the color's region: walk up the merged border until b stops following W^xi
    k = rec.slice_index
    t_lo = rec.t
    t_hi = grid.slices[k + 1].t if k + 1 < len(grid.slices) else rec.t
    l, r = rec.left, rec.right
    ref = b.value(rep, rec.t)
    scale = 1.0 + abs(ref)

    def on_border(t):
        return tau_two_colors(b.busemann, l, r, consts[l], consts[r], t)

    def inside(t):
        x = on_border(t)
        return b.value(x, t) - ref - b.busemann.eval(rec.color, (rep, rec.t), (x, t)) <= 1e-11 * scale

    if not inside(t_lo):
        t_lo = rec.t - (t_hi - rec.t)
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        if inside(mid):
            t_lo = mid
        else:
            t_hi = mid
    return SpaceTimePoint(on_border(t_lo), t_lo)


def synthesize_weights(b: EternalSolutionField, grid: ColorGrid) -> WeightFunction:
    """Rebuild weights, up to one additive constant, from the coloring map alone.

    Constants of colors visible on the top slice come from that slice. Going
    down through extinction times, a dying color gets
    c(xi) = W^xi(p; 0, 0) + f(p), where p is its extinction point and f the
    W-star of the constants found so far. On lattice fields, whose extinction
    points are not resolved below a site, the equivalent value is read at a
    site of the color's last run.
    """
    top = grid.slices[-1]
    window = (float(top.xs[0]), float(top.xs[-1]))
    lattice = isinstance(b.busemann, LatticeBusemann)
    rel = extract_constants(b, top.t, window, top.cell)
    origin = SpaceTimePoint(0.0, 0.0)
    o_top = SpaceTimePoint(0.0, top.t)
    consts = {xi: c - b.busemann.eval(xi, origin, o_top) for xi, c in rel.atoms}
    if lattice:
        f_top = w_star_many(WeightFunction.from_mapping(consts), b.busemann, [0.0], top.t)[0]
        shift = b.value(0.0, top.t) - f_top
    for rec in extinctions(grid):
        if rec.color in consts or rec.left not in consts or rec.right not in consts:
            continue
        sl = grid.slices[rec.slice_index]
        idx = np.flatnonzero(sl.codes == grid.code(rec.color))
        rep = float(sl.xs[idx[idx.size // 2]])
        if lattice:
            consts[rec.color] = b.value(rep, rec.t) - shift - b.busemann.eval(rec.color, origin, (rep, rec.t))
            continue
        p = _refine_extinction(b, rec, consts, grid, rep)
        f = w_star_many(WeightFunction.from_mapping(consts), b.busemann, [p.x], p.t)[0]
        consts[rec.color] = b.busemann.eval(rec.color, p, origin) + f
    return WeightFunction.from_mapping(consts)


@dataclass(frozen=True)
class IncrementsReport:
    passed: bool
    increments_equal: bool
    maps_equal: bool
    alias: bool
    status: str


def increments_determine_map_check(b1: EternalSolutionField, b2: EternalSolutionField, window,
                                   spacing: float = 0.1, dt: float = 0.25,
                                   tol: float = 1e-9) -> IncrementsReport:
    """Equal increments must go with equal coloring maps and vice versa.

    When the maps differ only by relabeling the same regions the case is
    reported as an alias rather than a failure.
    """
    x0, x1, t0, t1 = window
    xs = _window_xs(x0, x1, spacing)
    ts = _window_xs(t0, t1, dt)
    base1, base2 = b1.value(x0, t0), b2.value(x0, t0)
    incr_eq = all(np.allclose(b1.values(xs, t) - base1, b2.values(xs, t) - base2, atol=tol, rtol=0)
                  for t in ts)
    g1 = build_color_grid(b1, window, spacing, dt)
    g2 = build_color_grid(b2, window, spacing, dt)
    labels_eq = True
    regions_eq = True
    for s1, s2 in zip(g1.slices, g2.slices):
        d1 = [g1.palette[c] if c != UNRESOLVED else None for c in s1.codes]
        d2 = [g2.palette[c] if c != UNRESOLVED else None for c in s2.codes]
        labels_eq &= d1 == d2
        r1 = [(i0, i1) for _, i0, i1 in s1.runs()]
        r2 = [(i0, i1) for _, i0, i1 in s2.runs()]
        regions_eq &= r1 == r2
    alias = (not labels_eq) and regions_eq
    passed = incr_eq == labels_eq
    status = "alias" if alias else ("pass" if passed else "fail")
    return IncrementsReport(passed, incr_eq, labels_eq, alias, status)


# ---------------------------------------------------------------- export


def export_raster_csv(grid: ColorGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "x", "eta", "sign"])
        for sl in grid.slices:
            for x, c in zip(sl.xs, sl.codes):
                if c == UNRESOLVED:
                    wr.writerow([repr(float(sl.t)), repr(float(x)), "nan", "0"])
                else:
                    d = grid.palette[c]
                    wr.writerow([repr(float(sl.t)), repr(float(x)), repr(d.eta), d.sign_char])


def export_tree_json(tree: ShockTree, path) -> None:
    with open(path, "w") as fh:
        fh.write(tree.to_json())
