"""Discrete bargaining sets with comprehensive-hull semantics.

A set is represented by a finite list of generator payoff vectors; its
meaning is the smallest d-comprehensive set containing them, i.e. every
point x with d <= x <= g for some generator g. Finite generators keep the
solution axioms decidable, which is what the property suite needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

Vector = tuple[int, ...]


class PointBelowDisagreementError(ValueError):
    """A generator lies below the disagreement point in some coordinate."""


class DegenerateSetError(ValueError):
    """No point of the set strictly improves on the disagreement point."""


def _leq(a: Vector, b: Vector) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lt_strict(a: Vector, b: Vector) -> bool:
    return all(x < y for x, y in zip(a, b))


@dataclass(frozen=True)
class DiscreteBargainingSet:
    """Comprehensive hull of finitely many payoff vectors above d.

    ``bounding_box`` is a per-axis upper bound on generator coordinates;
    it witnesses compactness and caps brute-force enumeration in tests.
    """

    generators: tuple[Vector, ...]
    d: Vector
    bounding_box: int

    def __post_init__(self) -> None:
        if not self.generators:
            raise ValueError("generator list must be non-empty")
        n = len(self.d)
        for g in self.generators:
            if len(g) != n:
                raise ValueError("all generators must match the dimension of d")
            if not _leq(self.d, g):
                raise PointBelowDisagreementError(f"generator {g} below d {self.d}")
            if any(x > self.bounding_box for x in g):
                raise ValueError(f"generator {g} exceeds bounding box {self.bounding_box}")

    @property
    def n_players(self) -> int:
        return len(self.d)

    def contains(self, x: Sequence[int]) -> bool:
        """Membership test: d <= x and x <= g for some generator."""
        point = tuple(x)
        if not _leq(self.d, point):
            return False
        return any(_leq(point, g) for g in self.generators)

    def translate(self, t: Sequence[int]) -> "DiscreteBargainingSet":
        """Shift the whole problem by t (generators and d alike)."""
        t = tuple(t)
        return DiscreteBargainingSet(
            generators=tuple(tuple(x + dt for x, dt in zip(g, t)) for g in self.generators),
            d=tuple(x + dt for x, dt in zip(self.d, t)),
            bounding_box=self.bounding_box + max(t),
        )

    def permute(self, perm: Sequence[int]) -> "DiscreteBargainingSet":
        """Apply a coordinate permutation to generators and d."""
        return DiscreteBargainingSet(
            generators=tuple(tuple(g[p] for p in perm) for g in self.generators),
            d=tuple(self.d[p] for p in perm),
            bounding_box=self.bounding_box,
        )


def comprehensive_hull(points: Iterable[Sequence[int]], d: Sequence[int]) -> DiscreteBargainingSet:
    """Build the d-comprehensive hull of the given points.

    Generators dominated componentwise by another generator are pruned;
    they add nothing to the hull.
    """
    d = tuple(d)
    pts = [tuple(p) for p in points]
    if not pts:
        raise ValueError("need at least one point")
    for p in pts:
        if not _leq(d, p):
            raise PointBelowDisagreementError(f"point {p} below d {d}")
    kept: list[Vector] = []
    for p in pts:
        if any(p != q and _leq(p, q) for q in pts):
            continue
        if p not in kept:
            kept.append(p)
    box = max(max(g) for g in kept)
    return DiscreteBargainingSet(generators=tuple(kept), d=d, bounding_box=max(box, max(d)))


def ebs_discrete(bset: DiscreteBargainingSet) -> Vector:
    """Egalitarian solution on a discrete comprehensive hull: the farthest
    point of the hull along the equal-gains ray from d.

    The maximal equal gain t* equals the best minimum gain over generators
    (each box [d, g] tops out at min(g - d)), and d + t*(1,...,1) always
    lies in the hull. Returning the on-ray point rather than some maximal
    generator is what keeps the solution symmetric on permutation-invariant
    sets and monotone under set inclusion; any Pareto-refined selection
    breaks both on non-convex hulls.
    """
    def level(g: Vector) -> int:
        return min(x - dx for x, dx in zip(g, bset.d))

    best = max(level(g) for g in bset.generators)
    if best <= 0:
        raise DegenerateSetError("no point of the set strictly dominates d")
    return tuple(dx + best for dx in bset.d)
