"""Machinery for checking bargaining-solution axioms on discrete sets.

Four axioms are checked: symmetry, weak Pareto optimality, strong
monotonicity, and translation invariance. The egalitarian solution is the
unique solution satisfying the first three, so a zero-violation report over
randomized sets is the workhorse evidence that an implementation really
computes it. Violations are report entries, never exceptions.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .hull import DiscreteBargainingSet, Vector, comprehensive_hull

SolutionFn = Callable[[DiscreteBargainingSet], Vector]

AXIOMS = ("symmetry", "weak_pareto", "strong_monotonicity", "translation_invariance")


@dataclass
class AxiomReport:
    """Per-axiom tallies of checks applied and violations found."""

    checked: dict[str, int] = field(default_factory=lambda: {a: 0 for a in AXIOMS})
    violations: dict[str, list[str]] = field(default_factory=lambda: {a: [] for a in AXIOMS})

    def record(self, axiom: str, case_idx: int, ok: bool, detail: str = "") -> None:
        self.checked[axiom] += 1
        if not ok:
            self.violations[axiom].append(f"case {case_idx}: {detail}")

    @property
    def total_violations(self) -> int:
        return sum(len(v) for v in self.violations.values())

    def violation_count(self, axiom: str) -> int:
        return len(self.violations[axiom])

    def summary(self) -> str:
        lines = []
        for axiom in AXIOMS:
            lines.append(
                f"{axiom}: {self.checked[axiom]} checked, "
                f"{len(self.violations[axiom])} violations"
            )
        return "\n".join(lines)


def _canonical(bset: DiscreteBargainingSet) -> frozenset[Vector]:
    hull = comprehensive_hull(bset.generators, bset.d)
    return frozenset(hull.generators)


def is_symmetric_set(bset: DiscreteBargainingSet) -> bool:
    """True when every coordinate permutation maps the hull onto itself."""
    base = _canonical(bset)
    n = bset.n_players
    if len(set(bset.d)) != 1:
        return False
    for perm in itertools.permutations(range(n)):
        if _canonical(bset.permute(perm)) != base:
            return False
    return True


def _bumped_superset(bset: DiscreteBargainingSet) -> DiscreteBargainingSet:
    """A strict comprehensive superset: every generator grown by one unit."""
    grown = [tuple(x + 1 for x in g) for g in bset.generators]
    hull = comprehensive_hull(list(bset.generators) + grown, bset.d)
    return hull


def verify_axioms(
    solution: SolutionFn,
    cases: Sequence[DiscreteBargainingSet],
    translation: Sequence[int] | None = None,
) -> AxiomReport:
    """Check the four axioms for ``solution`` on every case.

    Symmetry is only binding on permutation-invariant sets; asymmetric cases
    are skipped for that axiom rather than counted as passes. Monotonicity is
    checked against a one-unit comprehensive enlargement of the case, and
    translation invariance against a fixed per-axis shift.
    """
    report = AxiomReport()
    for idx, bset in enumerate(cases):
        t = tuple(translation) if translation is not None else tuple(
            range(1, bset.n_players + 1)
        )
        try:
            sol = tuple(solution(bset))
        except Exception as exc:  # a crashing solution violates everything checked
            for axiom in AXIOMS:
                report.record(axiom, idx, False, f"solution raised {exc!r}")
            continue

        if is_symmetric_set(bset):
            ok = len(set(sol)) == 1
            report.record("symmetry", idx, ok, f"solution {sol} on symmetric set")

        in_set = bset.contains(sol)
        dominated = any(
            all(gx > sx for gx, sx in zip(g, sol)) for g in bset.generators
        )
        report.record(
            "weak_pareto",
            idx,
            in_set and not dominated,
            f"solution {sol} (in set: {in_set}, strictly dominated: {dominated})",
        )

        bigger = _bumped_superset(bset)
        sol_big = tuple(solution(bigger))
        mono_ok = all(a <= b for a, b in zip(sol, sol_big))
        report.record(
            "strong_monotonicity", idx, mono_ok, f"{sol} vs {sol_big} on enlarged set"
        )

        shifted = bset.translate(t)
        sol_shifted = tuple(solution(shifted))
        expect = tuple(s + dt for s, dt in zip(sol, t))
        report.record(
            "translation_invariance",
            idx,
            sol_shifted == expect,
            f"shift by {t}: got {sol_shifted}, expected {expect}",
        )
    return report


def random_bargaining_set(
    rng: random.Random,
    n_players: int = 2,
    bounding_box: int = 50,
    max_generators: int = 6,
    symmetric: bool | None = None,
    d: Vector | None = None,
) -> DiscreteBargainingSet:
    """Sample a valid discrete bargaining set.

    Guarantees at least one generator strictly above d. When ``symmetric``
    is true the generator list is closed under coordinate permutations and
    d is constant, so the symmetry axiom binds.
    """
    if symmetric is None:
        symmetric = rng.random() < 0.5
    if d is None:
        if symmetric:
            base = rng.randint(0, bounding_box // 4)
            d = tuple(base for _ in range(n_players))
        else:
            d = tuple(rng.randint(0, bounding_box // 4) for _ in range(n_players))
    elif symmetric and len(set(d)) != 1:
        raise ValueError("symmetric sets need a constant disagreement point")

    k = rng.randint(1, max_generators)
    points: list[Vector] = []
    for _ in range(k):
        points.append(tuple(rng.randint(di, bounding_box) for di in d))
    # Ensure non-degeneracy: one point strictly above d.
    points.append(tuple(min(di + rng.randint(1, 5), bounding_box) for di in d))
    if symmetric:
        closed = set()
        for p in points:
            for perm in itertools.permutations(range(n_players)):
                closed.add(tuple(p[i] for i in perm))
        points = sorted(closed)
    return comprehensive_hull(points, d)


def random_cases(
    n_cases: int,
    seed: int,
    n_players: int = 2,
    bounding_box: int = 50,
) -> list[DiscreteBargainingSet]:
    rng = random.Random(seed)
    return [
        random_bargaining_set(rng, n_players=n_players, bounding_box=bounding_box)
        for _ in range(n_cases)
    ]
