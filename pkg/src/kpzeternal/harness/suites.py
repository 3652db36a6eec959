"""Verification suites. Each returns a list of named pass/fail checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..busemann import (ParabolicBusemann, SignedDirection, check_additivity, check_antisymmetry,
                        check_eternal, check_monotonicity, check_slope)
from ..colormap import (border_interface_check, borders, build_color_grid, extinction, extinctions,
                        increments_determine_map_check, shock_tree, structure_check, synthesize_weights,
                        triple_geodesic_probe)
from ..errors import GateRejected, UndecidableTail
from ..eternal import (EternalSolutionField, OpaqueTail, WeightFunction, divergence_probe, evolve,
                       extract_constants, finiteness_gate, growth_rate_probe, quadratic_envelope_check,
                       semigroup_check, w_star, w_star_many)
from ..geodesics import crossing_check, d_eval, tau_pm, tau_two_colors, two_color_check
from ..landscape import ParabolicBackend, composition_slack
from .corpus import FIVE_COLOR, QUADRATIC_INTEGERS, SINGLE_COLOR, THREE_COLOR, TWO_COLOR, power_tail

VALUE_TOL = 1e-9


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _close(name, got, want, tol=VALUE_TOL) -> Check:
    return Check(name, abs(got - want) <= tol, f"got {got!r}, want {want!r}")


def _parabolic():
    return ParabolicBusemann()


# ---------------------------------------------------------------- busemann-props


def busemann_props(config=None) -> list[Check]:
    f = _parabolic()
    out = [_close("closed form xi=1 (0,0)->(2,3)", f.eval(1.0, (0, 0), (2, 3)), 7.0)]
    plus = f.eval(SignedDirection(0.7, 1), (0.1, -0.2), (1.3, 0.9))
    minus = f.eval(SignedDirection(0.7, -1), (0.1, -0.2), (1.3, 0.9))
    out.append(_close("signs agree on a deterministic field", plus, minus, 0.0))
    rng = np.random.default_rng(11)
    add = anti = 0
    for _ in range(200):
        xi = float(rng.uniform(-3, 3))
        p, q, r = (tuple(rng.uniform(-5, 5, 2)) for _ in range(3))
        add += check_additivity(f, xi, p, q, r).passed
        anti += check_antisymmetry(f, xi, p, q).passed
    out.append(Check("additivity on 200 random triples", add == 200, f"{add}/200"))
    out.append(Check("antisymmetry on 200 random pairs", anti == 200, f"{anti}/200"))
    mono = sum(check_monotonicity(f, -0.5, 1.25, x, x + d, t).passed
               for x, d, t in zip(rng.uniform(-3, 3, 50), rng.uniform(0.01, 2, 50), rng.uniform(-2, 2, 50)))
    out.append(Check("monotonicity in the direction", mono == 50, f"{mono}/50"))
    slopes = all(check_slope(f, xi, -0.4, 1.1, 0.3).passed for xi in (-1.5, 0.5, 2.0))
    out.append(Check("horizontal slope 2 xi", slopes))
    for xi, x, t in ((-1.0, 0.3, 1.7), (0.5, -0.2, 1.0), (1.3, 0.45, 2.0)):
        rep = check_eternal(f, xi, 0.0, 0.0, x, t, spacing=0.01)
        want = x + xi * t
        out.append(Check(f"eternal identity xi={xi}", rep.deviation <= VALUE_TOL,
                         f"deviation {rep.deviation:.2e}"))
        out.append(Check(f"eternal maximizer xi={xi}", abs(rep.argmax - want) <= 0.01,
                         f"argmax {rep.argmax!r}, want {want!r}"))
    return out


# ---------------------------------------------------------------- semigroup


def semigroup(config=None) -> list[Check]:
    f = _parabolic()
    kern = ParabolicBackend()
    b = EternalSolutionField(THREE_COLOR, f)
    out = []
    slack = composition_slack(kern, (0.0, 0.0), (0.5, 1.0), (1.0, 2.0))
    out.append(_close("composition slack vanishes on the straight line", slack, 0.0))
    rng = np.random.default_rng(3)
    ok = 0
    for _ in range(100):
        s, r, t = np.sort(rng.uniform(-2, 2, 3))
        if r - s < 1e-3 or t - r < 1e-3:
            ok += 1
            continue
        ok += composition_slack(kern, (rng.normal(), s), (rng.normal(), r), (rng.normal(), t)) >= 0
    out.append(Check("composition slack nonnegative", ok == 100, f"{ok}/100"))
    xs = np.array([-1.3, -0.6, -0.2, 0.15, 0.8, 1.7])
    res = evolve(lambda ys: b.values(ys, -1.0), kern, -1.0, 0.5, xs, 0.01, 3.0, refine=True)
    dev = float(np.max(np.abs(res.values - b.values(xs, 0.5))))
    out.append(Check("evolution reproduces the eternal solution", dev <= VALUE_TOL, f"max dev {dev:.2e}"))
    colors = [w for w in (_leftmost_color(b, x, 0.5) for x in xs)]
    want = xs + np.array([c for c in colors]) * 1.5
    cells = float(np.max(np.abs(res.argmax - want)))
    out.append(Check("evolution argmax on the geodesic", cells <= 0.01 + 1e-12, f"max offset {cells:.3g}"))
    rep = semigroup_check(lambda ys: b.values(ys, -1.0), kern, -1.0, -0.4, 0.3, xs, 0.01, 3.0)
    out.append(Check("two-step evolution matches one step", rep.passed,
                     f"dev {rep.deviation:.2e} tol {rep.tolerance:.2e}"))
    return out


def _leftmost_color(b, x, t):
    dirs, mat = b.terms([x], t)
    col = mat[:, 0]
    return dirs[int(np.flatnonzero(col >= col.max() - 1e-12)[0])].eta


# ---------------------------------------------------------------- interfaces


def interfaces(config=None) -> list[Check]:
    f = _parabolic()
    kern = ParabolicBackend()
    vee = lambda ys: 2.0 * np.abs(ys)
    out = [_close("d for the V profile at (1, 1)", d_eval(vee, kern, 0.0, 0.0, 1.0, 1.0), 4.0)]
    split = tau_pm(vee, kern, 0.0, 0.0, 0.0)
    out.append(Check("interface starts at its root", split.tau_minus == 0.0 == split.tau_plus))
    split = tau_pm(vee, kern, 0.0, 0.0, 1.0)
    out.append(Check("V profile interface stays at 0", abs(split.tau_minus) <= VALUE_TOL and abs(split.tau_plus) <= VALUE_TOL,
                     f"{split}"))
    eps = 0.25
    tilted = lambda ys: np.where(ys < 0, -2.0 * (1 + eps) * ys, 2.0 * ys)
    for t in (0.5, 1.0, 2.0):
        split = tau_pm(tilted, kern, 0.0, 0.0, t)
        out.append(Check(f"tilted V interface at t={t}", abs(split.tau_minus - eps * t / 2) <= VALUE_TOL,
                         f"got {split.tau_minus!r}, want {eps * t / 2!r}"))
    for x1, x2, c1, c2, t in ((-1.0, 0.0, 0.0, 0.0, -1.0), (-0.5, 1.5, 0.3, -0.2, 0.7), (0.0, 2.0, 1.0, 0.0, 2.0)):
        got = tau_two_colors(f, x1, x2, c1, c2, t)
        want = -(x1 + x2) * t / 2 + (c1 - c2) / (2 * (x2 - x1))
        out.append(_close(f"two-color interface {x1},{x2} at t={t}", got, want))
        rep = two_color_check(f, x1, x2, c1, c2, t, np.linspace(-3, 3, 121))
        out.append(Check(f"two-color winner switches at the interface {x1},{x2}", rep.passed,
                         f"{rep.mismatches} mismatches"))
    return out


def crossing(config=None) -> list[Check]:
    f = _parabolic()
    ts = np.linspace(-2, 2, 41)
    rep = crossing_check(f, (-1.0, 0.0, 1.0), (0.0, 0.0, 0.0), ts)
    out = [Check("interfaces meet once at s0 = 0", rep.passed and abs(rep.meet_time) <= VALUE_TOL, f"{rep}")]
    for t in (-1.0, 0.5, 1.5):
        out.append(_close(f"tau12 = t/2 at t={t}", tau_two_colors(f, -1.0, 0.0, 0.0, 0.0, t), t / 2))
        out.append(_close(f"tau13 = 0 at t={t}", tau_two_colors(f, -1.0, 1.0, 0.0, 0.0, t), 0.0))
    rep = crossing_check(f, (-2.0, -1.0, 0.0), (0.0, 0.3, 1.2), np.linspace(-3, 3, 61))
    out.append(Check("crossing order flip on the five-color constants", rep.passed, f"{rep}"))
    return out


# ---------------------------------------------------------------- colormap


THREE_WINDOW = (-2.0, 2.0, -2.0, 1.0)
FIVE_WINDOW = (-3.0, 3.0, -1.5, 1.5)


def three_color_grid():
    b = EternalSolutionField(THREE_COLOR, _parabolic())
    return b, build_color_grid(b, THREE_WINDOW, 0.05, 0.05)


def five_color_grid():
    b = EternalSolutionField(FIVE_COLOR, _parabolic())
    return b, build_color_grid(b, FIVE_WINDOW, 0.05, 0.05)


def _slice_at(grid, t):
    return int(np.argmin(np.abs(grid.times - t)))


def three_color_checks(b, grid) -> list[Check]:
    cell = 0.05 + 1e-9
    out = []
    k = _slice_at(grid, -1.0)
    runs = grid.slices[k].runs()
    vis = [grid.palette[c].eta for c, _, _ in runs]
    out.append(Check("three colors visible at t=-1", vis == [-1.0, 0.0, 1.0], f"{vis}"))
    if vis == [-1.0, 0.0, 1.0]:
        xs = grid.slices[k].xs
        splits = [xs[runs[0][2]], xs[runs[1][2]]]
        out.append(Check("splits at -1/2 and 1/2 at t=-1",
                         abs(splits[0] + 0.5) <= cell and abs(splits[1] - 0.5) <= cell, f"{splits}"))
    k = _slice_at(grid, 1.0)
    runs = grid.slices[k].runs()
    vis = [grid.palette[c].eta for c, _, _ in runs]
    out.append(Check("two colors visible at t=1", vis == [-1.0, 1.0], f"{vis}"))
    if vis == [-1.0, 1.0]:
        split = grid.slices[k].xs[runs[0][2]]
        out.append(Check("split at 0 at t=1", abs(split) <= cell, f"{split}"))
    bs = [s for s in borders(grid, 0.0) if s.t < 0]
    dev_a = max(abs(s.left - s.t / 2) for s in bs)
    dev_b = max(abs(s.right + s.t / 2) for s in bs)
    out.append(Check("left border of color 0 follows t/2", dev_a <= cell, f"max dev {dev_a:.3g}"))
    out.append(Check("right border of color 0 follows -t/2", dev_b <= cell, f"max dev {dev_b:.3g}"))
    rec = extinction(grid, 0.0)
    out.append(Check("color 0 dies at (0, 0)", rec is not None and abs(rec.t) <= cell and abs(rec.x) <= cell,
                     f"{rec}"))
    out.append(Check("flanks of the extinction are -1 and 1",
                     rec is not None and (rec.left.eta, rec.right.eta) == (-1.0, 1.0)))
    return out


def colormap(config=None) -> list[Check]:
    b3, g3 = three_color_grid()
    out = three_color_checks(b3, g3)
    rep = structure_check(g3)
    out.append(Check("three-color map structure", rep.passed, "; ".join(rep.failures)))
    b5, g5 = five_color_grid()
    out.extend(five_color_checks(b5, g5))
    return out


def five_color_oracle():
    """Extinction events from pairwise line intersections, latest first."""
    xi = np.array([d.eta for d in FIVE_COLOR.directions])
    c = np.array([v for _, v in FIVE_COLOR.atoms])
    events = []
    alive = list(range(len(xi)))
    while len(alive) > 2:
        best = None
        for n in range(1, len(alive) - 1):
            l, j, r = alive[n - 1], alive[n], alive[n + 1]
            # solve T_l = T_j = T_r for (x, t)
            a = np.array([[2 * (xi[l] - xi[j]), xi[l] ** 2 - xi[j] ** 2],
                          [2 * (xi[j] - xi[r]), xi[j] ** 2 - xi[r] ** 2]])
            rhs = np.array([c[j] - c[l], c[r] - c[j]])
            x, t = np.linalg.solve(a, rhs)
            if best is None or t < best[1]:
                best = (x, t, n)
        x, t, n = best
        events.append((xi[alive[n]], x, t, xi[alive[n - 1]], xi[alive[n + 1]]))
        alive.pop(n)
    return events


def five_color_checks(b, grid) -> list[Check]:
    cell = 0.05 + 1e-9
    out = []
    oracle = five_color_oracle()
    tree = shock_tree(grid)
    out.append(Check("five-color map has three shock nodes", len(tree.nodes) == 3, f"{len(tree.nodes)}"))
    out.append(Check("every node has degree three", all(tree.degree(n) == 3 for n in range(len(tree.nodes)))))
    recs = sorted(extinctions(grid), key=lambda r: r.t)
    match = len(recs) == len(oracle) and all(
        r.color.eta == o[0] and abs(r.t - o[2]) <= cell and abs(r.x - o[1]) <= 2 * cell
        for r, o in zip(recs, oracle))
    out.append(Check("extinctions match line intersections", match,
                     f"{[(r.color.eta, r.t, r.x) for r in recs]} vs {[(o[0], o[2], o[1]) for o in oracle]}"))
    times = [n.t for n in tree.nodes]
    out.append(Check("extinction times are distinct", len(set(np.round(times, 9))) == len(times)))
    order = sorted(range(len(tree.nodes)), key=lambda n: tree.nodes[n].t)
    chain = all(any(e.start == order[k] and e.end == order[k + 1] for e in tree.edges)
                for k in range(len(order) - 1))
    out.append(Check("merges form a path", chain))
    rep = structure_check(grid)
    out.append(Check("five-color map structure", rep.passed, "; ".join(rep.failures)))
    return out


# ---------------------------------------------------------------- extinction


def extinction_suite(config=None) -> list[Check]:
    b, grid = three_color_grid()
    out = three_color_checks(b, grid)
    probe = triple_geodesic_probe(b, (0.0, 0.0), depth=0.5, spacing=0.01)
    out.append(Check("three geodesics leave the extinction point", probe.count == 3, f"slopes {probe.slopes}"))
    return out


# ---------------------------------------------------------------- reconstruction


def _round_trip(b, t, window=(-4.0, 4.0)):
    c = extract_constants(b, t, window, 0.05)
    from ..colormap import slice_runs

    runs = slice_runs(b, t, window, 0.05)
    anchor = next((r for r in runs if r.left_border <= 0 < r.right_border), runs[0])
    a0 = anchor.left_border if math.isfinite(anchor.left_border) else 0.0
    xs = np.linspace(window[0], window[1], 161)
    got = w_star_many(c, b.busemann, xs, t, origin=(0.0, t))
    want = b.values(xs, t) - b.value(a0, t)
    return c, float(np.max(np.abs(got - want)))


def reconstruction(config=None) -> list[Check]:
    f = _parabolic()
    out = []
    cases = [("three-color", THREE_COLOR, (-1.5, -1.0, -0.25, 0.5)),
             ("five-color", FIVE_COLOR, (-1.0, 0.0, 0.3, 1.0)),
             ("two-color", TWO_COLOR, (-1.0, 1.0)),
             ("single-color", SINGLE_COLOR, (0.0,))]
    for name, phi, times in cases:
        b = EternalSolutionField(phi, f)
        for t in times:
            _, dev = _round_trip(b, t)
            out.append(Check(f"constants reproduce {name} at t={t}", dev <= VALUE_TOL, f"max dev {dev:.2e}"))
    b = EternalSolutionField(THREE_COLOR, f)
    c, _ = _round_trip(b, -1.0)
    want = {-1.0: -1.0, 0.0: 0.0, 1.0: -1.0}
    got = {d.eta: v for d, v in c.atoms}
    out.append(Check("three-color constants at t=-1", got.keys() == want.keys()
                     and all(abs(got[k] - want[k]) <= VALUE_TOL for k in want), f"{got}"))
    c, _ = _round_trip(EternalSolutionField(SINGLE_COLOR, f), 0.0)
    out.append(Check("single color gets constant 0", [v for _, v in c.atoms] == [0.0], f"{c.atoms}"))
    for name, make in (("three-color", three_color_grid), ("five-color", five_color_grid)):
        b, grid = make()
        phi2 = synthesize_weights(b, grid)
        diffs = [phi2.evaluate(d) - v for d, v in b.weights.atoms]
        spread = max(diffs) - min(diffs) if all(map(math.isfinite, diffs)) else math.inf
        out.append(Check(f"synthesized {name} weights equal phi up to a constant", spread <= VALUE_TOL,
                         f"spread {spread:.2e}"))
    b1 = EternalSolutionField(THREE_COLOR, f)
    window = (-2.0, 2.0, -1.5, 1.0)
    rep = increments_determine_map_check(b1, EternalSolutionField(THREE_COLOR.shifted(7.0), f), window)
    out.append(Check("shifted weights: same increments and same map", rep.passed and rep.increments_equal, rep.status))
    bumped = WeightFunction.from_mapping({-1.0: 0.0, 0.0: 0.4, 1.0: 0.0})
    rep = increments_determine_map_check(b1, EternalSolutionField(bumped, f), window)
    out.append(Check("perturbed constant: both differ", rep.passed and not rep.increments_equal, rep.status))
    rep = increments_determine_map_check(EternalSolutionField(TWO_COLOR, f),
                                         EternalSolutionField(WeightFunction.from_mapping({-2.0: 0.0, 2.0: 0.0}), f),
                                         window)
    out.append(Check("relabeled regions reported as alias", rep.alias and rep.status == "alias", rep.status))
    return out


# ---------------------------------------------------------------- growth


def growth(config=None) -> list[Check]:
    f = _parabolic()
    out = [_close("closed form for alpha=3 at x=1.5", w_star(power_tail(3.0), f, 1.5, 0.0),
                  3.0 ** 1.5 * 2 / (3 * math.sqrt(3)))]
    for alpha in (3.0, 4.0, 6.0):
        fit = growth_rate_probe(power_tail(alpha), f, 0.0, np.logspace(1, 3, 25))
        out.append(Check(f"growth exponent alpha={alpha}", abs(fit.exponent - fit.expected) <= 0.02,
                         f"fit {fit.exponent:.4f}, want {fit.expected:.4f}"))
        rep = quadratic_envelope_check(power_tail(alpha), f, 0.5)
        out.append(Check(f"sub-quadratic envelope alpha={alpha}", rep.passed, f"argmax {rep.argmax}"))
    return out


# ---------------------------------------------------------------- finiteness


def finiteness(config=None) -> list[Check]:
    f = _parabolic()
    out = [Check("finite support accepted", finiteness_gate(THREE_COLOR).accepted)]
    for alpha in (3.0, 4.0, 6.0):
        out.append(Check(f"power tail alpha={alpha} accepted", finiteness_gate(power_tail(alpha)).accepted))
    v = finiteness_gate(QUADRATIC_INTEGERS)
    out.append(Check("quadratic tail on the integers rejected", not v.accepted and v.ratio_bound == -1.0, v.reason))
    out.append(Check("alpha=1.5 rejected", not finiteness_gate(power_tail(1.5)).accepted))
    try:
        finiteness_gate(WeightFunction(tail=OpaqueTail(lambda e: -e ** 4)))
        out.append(Check("opaque tail undecidable", False))
    except UndecidableTail:
        out.append(Check("opaque tail undecidable", True))
    try:
        w_star(QUADRATIC_INTEGERS, f, 0.0, 2.0)
        out.append(Check("W-star refuses rejected weights", False))
    except GateRejected:
        out.append(Check("W-star refuses rejected weights", True))
    amp = -v.ratio_bound
    probe = divergence_probe(QUADRATIC_INTEGERS, f, 0.0, 2.0 * amp)
    top = max(val for _, val in probe)
    out.append(Check("rejected weights blow up for t > A", top > 1e6, f"max truncated sup {top:.3g}"))
    calm = divergence_probe(QUADRATIC_INTEGERS, f, 0.3, 0.5 * amp)
    vals = [val for _, val in calm]
    out.append(Check("truncated sups settle for t < A", max(vals) - min(vals) <= VALUE_TOL and max(vals) < 10,
                     f"{vals}"))
    return out


SUITES: dict[str, Callable] = {
    "busemann-props": busemann_props,
    "semigroup": semigroup,
    "interfaces": interfaces,
    "crossing": crossing,
    "colormap": colormap,
    "extinction": extinction_suite,
    "reconstruction": reconstruction,
    "growth": growth,
    "finiteness": finiteness,
}


def register(name: str):
    def deco(fn):
        SUITES[name] = fn
        return fn
    return deco
