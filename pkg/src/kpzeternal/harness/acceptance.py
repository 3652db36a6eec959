"""The eight acceptance criteria, each a bundle of verification checks."""
from __future__ import annotations

from dataclasses import dataclass

from ..colormap import build_color_grid, structure_check
from ..eternal import EternalSolutionField
from .config import LPPConfig
from .corpus import FIVE_COLOR, LATTICE_THREE_COLOR, SINGLE_COLOR, THREE_COLOR, TWO_COLOR
from .lpp_suite import lpp_exact, lpp_statistics, lpp_structure
from .suites import (FIVE_WINDOW, THREE_WINDOW, Check, _parabolic, busemann_props, crossing,
                     extinction_suite, finiteness, growth, interfaces, reconstruction, semigroup)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def line(self) -> str:
        bad = [c.name for c in self.checks if not c.passed]
        tail = f"{len(self.checks)} checks" if not bad else f"failed: {'; '.join(bad)}"
        return f"criterion {self.number} {'PASS' if self.passed else 'FAIL'}  {self.title} ({tail})"


FINITE_CORPUS = (
    ("three-color", THREE_COLOR, THREE_WINDOW),
    ("five-color", FIVE_COLOR, FIVE_WINDOW),
    ("two-color", TWO_COLOR, THREE_WINDOW),
    ("single-color", SINGLE_COLOR, THREE_WINDOW),
    ("lattice-three-color", LATTICE_THREE_COLOR, THREE_WINDOW),
)


def corpus_structure() -> list[Check]:
    out = []
    f = _parabolic()
    for name, phi, window in FINITE_CORPUS:
        rep = structure_check(build_color_grid(EternalSolutionField(phi, f), window))
        out.append(Check(f"{name} map structure", rep.passed and rep.ambiguity == 0.0,
                         f"{rep.extinction_count} extinctions; {'; '.join(rep.failures) or 'ok'}"))
    return out


def _oracles(lpp, seed):
    return busemann_props() + semigroup() + interfaces() + crossing()


def _stats(lpp, seed):
    return lpp_statistics(lpp, seed, structure=False)


def _structure(lpp, seed):
    return corpus_structure() + lpp_structure(lpp, seed)


CRITERIA = {
    1: ("deterministic oracle exactness", _oracles),
    2: ("three-color extinction", lambda lpp, seed: extinction_suite()),
    3: ("finiteness dichotomy", lambda lpp, seed: finiteness()),
    4: ("growth-rate continuum", lambda lpp, seed: growth()),
    5: ("reconstruction round trip", lambda lpp, seed: reconstruction()),
    6: ("coloring-map structure", _structure),
    7: ("stochastic statistical suite", _stats),
    8: ("brute-force equivalence", lambda lpp, seed: lpp_exact()),
}


def run_criterion(number: int, lpp: LPPConfig | None = None, seed: int = 0) -> CriterionResult:
    title, fn = CRITERIA[number]
    return CriterionResult(number, title, tuple(fn(lpp or LPPConfig(), seed)))


def run_acceptance(numbers=None, lpp: LPPConfig | None = None, seed: int = 0) -> list[CriterionResult]:
    return [run_criterion(n, lpp, seed) for n in (numbers or sorted(CRITERIA))]
