"""Bargaining-game model: surplus division, the egalitarian solution, and
the subgame reward used by search and training.

The model is the classic demand game over a divisible surplus: each player
requests a share, compatible requests are granted, incompatible requests pay
out the disagreement vector. A single-issue price negotiation maps onto it
by identifying the surplus with the gap between the two reservation prices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


class InfeasibleProblemError(ValueError):
    """Raised when the surplus cannot cover the disagreement payoffs."""


class NoDealError(ValueError):
    """Raised when an operation that needs a deal outcome receives no-deal."""


@dataclass(frozen=True)
class BargainingProblem:
    """A surplus-division problem.

    ``surplus`` is the total divisible value in cents.  ``disagreement`` is the
    per-player payoff vector if no deal is reached.  For price bargaining the
    surplus equals ``price_ceiling - price_floor`` (buyer reservation minus
    seller reservation) and player 0 is the seller, player 1 the buyer.
    """

    surplus: int
    disagreement: tuple[int, ...]
    price_floor: int = 0
    price_ceiling: int | None = None
    n_players: int = 2

    def __post_init__(self) -> None:
        ceiling = self.price_ceiling
        if ceiling is None:
            ceiling = self.price_floor + self.surplus
            object.__setattr__(self, "price_ceiling", ceiling)
        if self.surplus < 0:
            raise ValueError("surplus must be non-negative")
        if ceiling - self.price_floor != self.surplus:
            raise ValueError("surplus must equal price_ceiling - price_floor")
        if len(self.disagreement) != self.n_players:
            raise ValueError("disagreement vector length must match n_players")
        if any(d < 0 for d in self.disagreement):
            raise ValueError("disagreement payoffs must be non-negative")

    @classmethod
    def from_reservations(
        cls, price_floor: int, price_ceiling: int, disagreement: Sequence[int]
    ) -> "BargainingProblem":
        return cls(
            surplus=price_ceiling - price_floor,
            disagreement=tuple(disagreement),
            price_floor=price_floor,
            price_ceiling=price_ceiling,
            n_players=len(disagreement),
        )

    @property
    def feasible(self) -> bool:
        """True when some allocation weakly improves on disagreement for all."""
        return self.surplus >= sum(self.disagreement)

    def price_to_shares(self, price: int) -> "Allocation":
        """Map a deal price onto (seller share, buyer share)."""
        if self.n_players != 2:
            raise ValueError("price semantics are defined for 2 players only")
        return Allocation((price - self.price_floor, self.price_ceiling - price))

    def shares_to_price(self, shares: "Allocation") -> int:
        """Deal price implied by the seller's share."""
        if self.n_players != 2:
            raise ValueError("price semantics are defined for 2 players only")
        return self.price_floor + shares.shares[0]


@dataclass(frozen=True)
class Allocation:
    """A payoff vector; feasible for a problem when it fits in the surplus."""

    shares: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "shares", tuple(self.shares))
        if any(s < 0 for s in self.shares):
            raise ValueError("shares must be non-negative")

    def feasible_for(self, problem: BargainingProblem) -> bool:
        return len(self.shares) == problem.n_players and sum(self.shares) <= problem.surplus

    def __iter__(self):
        return iter(self.shares)

    def __getitem__(self, i: int) -> int:
        return self.shares[i]


@dataclass(frozen=True)
class SurplusBelief:
    """A player's running guess at the remaining surplus.

    The anchors are the price interval the guess lives on; the estimate is
    their gap, clamped at zero once standing offers cross.
    """

    estimate: int
    lower_anchor: int
    upper_anchor: int

    def __post_init__(self) -> None:
        if self.estimate != max(0, self.upper_anchor - self.lower_anchor):
            raise ValueError("estimate must equal upper_anchor - lower_anchor (clamped at 0)")

    @property
    def midpoint(self) -> int:
        return (self.lower_anchor + self.upper_anchor) // 2


def ebs(problem: BargainingProblem) -> Allocation:
    """Egalitarian solution: the allocation maximizing the minimum gain.

    Over the full-split simplex this grants every player their disagreement
    payoff plus an equal slice of the leftover surplus.  Cents that do not
    divide evenly go to the lowest-indexed players so the result stays exact
    in integer currency.
    """
    total_d = sum(problem.disagreement)
    if problem.surplus < total_d:
        raise InfeasibleProblemError(
            f"surplus {problem.surplus} cannot cover disagreements {problem.disagreement}"
        )
    gain, remainder = divmod(problem.surplus - total_d, problem.n_players)
    shares = tuple(
        d + gain + (1 if i < remainder else 0)
        for i, d in enumerate(problem.disagreement)
    )
    return Allocation(shares)


def ebs_price(problem: BargainingProblem) -> int:
    """Deal price at the egalitarian solution of a 2-player price problem."""
    return problem.shares_to_price(ebs(problem))


def egalitarian_level(problem: BargainingProblem, outcome: Allocation) -> int:
    """min_i(x_i - d_i): the gain of the worst-off player."""
    return min(x - d for x, d in zip(outcome.shares, problem.disagreement))


def subgame_reward(problem: BargainingProblem, outcome: Allocation | None) -> float:
    """Reward of a subgame outcome from player 0's perspective, in [-1, 1].

    Let m be the minimum gain over disagreement and e player 0's share at the
    egalitarian solution.  The raw reward is +m when player 0 reaches at
    least e and -m otherwise; no-deal pays the disagreement vector, which
    makes the raw reward exactly zero.  Outcomes granting any player less
    than their disagreement payoff sit outside the individually rational
    set the solution is defined over; such a deal would be refused, so it
    scores like no-deal.  The raw value is scaled by (U/2 - mean
    disagreement) so the egalitarian outcome itself maps to +1, then
    clamped to [-1, 1].
    """
    if outcome is None:
        return 0.0
    if not outcome.feasible_for(problem):
        raise ValueError(f"outcome {outcome.shares} infeasible for surplus {problem.surplus}")
    if not problem.feasible:
        return 0.0
    m = egalitarian_level(problem, outcome)
    if m < 0:
        return 0.0
    target = ebs(problem)
    raw = m if outcome.shares[0] >= target.shares[0] else -m
    mean_d = sum(problem.disagreement) / problem.n_players
    divisor = max(1.0, problem.surplus / 2 - mean_d)
    return max(-1.0, min(1.0, raw / divisor))


def is_full_split_equilibrium(demands: Allocation, problem: BargainingProblem) -> bool:
    """True iff the demand profile splits the surplus exactly.

    Exactly-compatible demands leave no slack: demanding more breaks the
    deal and demanding less is a pure loss, so no unilateral deviation
    profits and the profile is an equilibrium of the demand game.
    """
    return sum(demands.shares) == problem.surplus


def update_surplus_estimate(own_offer: int, opp_offer: int, reservation: int) -> SurplusBelief:
    """Refresh the surplus guess from the standing offers (seller form).

    The remaining surplus is read as the gap between our own standing offer
    and the better of the opponent's offer and our reservation price.
    Crossed offers clamp the estimate to zero: a deal is already feasible.
    """
    if own_offer < 0 or opp_offer < 0 or reservation < 0:
        raise ValueError("offers and reservation must be non-negative")
    lower = max(opp_offer, reservation)
    upper = max(own_offer, lower)
    return SurplusBelief(estimate=upper - lower, lower_anchor=lower, upper_anchor=upper)


def update_surplus_estimate_buyer(own_offer: int, opp_offer: int, reservation: int) -> SurplusBelief:
    """Mirror of :func:`update_surplus_estimate` for the buyer's side.

    The buyer bids low against a seller asking high, so the anchors flip:
    the upper anchor is the better of the opponent's ask and the buyer's
    ceiling, the lower anchor the buyer's own standing bid.
    """
    if own_offer < 0 or opp_offer < 0 or reservation < 0:
        raise ValueError("offers and reservation must be non-negative")
    upper = min(opp_offer, reservation)
    lower = min(own_offer, upper)
    return SurplusBelief(estimate=upper - lower, lower_anchor=lower, upper_anchor=upper)


@dataclass(frozen=True)
class Scenario:
    """A named negotiation scenario: the price problem plus public context.

    ``initial_price_range`` is the advertised range both parties see before
    any offer is made; it seeds the opening surplus belief.
    """

    name: str
    problem: BargainingProblem
    initial_price_range: tuple[int, int]
    currency: str = "USD_cents"
    min_market_price: int | None = None

    def __post_init__(self) -> None:
        lo, hi = self.initial_price_range
        if lo > hi:
            raise ValueError("initial_price_range must be ordered (low, high)")

    @property
    def floor(self) -> int:
        return self.problem.price_floor

    @property
    def ceiling(self) -> int:
        return self.problem.price_ceiling

    def to_dict(self) -> dict:
        data = {
            "price_floor": self.problem.price_floor,
            "price_ceiling": self.problem.price_ceiling,
            "disagreement": list(self.problem.disagreement),
            "initial_price_range": list(self.initial_price_range),
            "currency": self.currency,
        }
        if self.min_market_price is not None:
            data["min_market_price"] = self.min_market_price
        return data

    @classmethod
    def from_dict(cls, name: str, data: dict) -> "Scenario":
        problem = BargainingProblem.from_reservations(
            data["price_floor"], data["price_ceiling"], data["disagreement"]
        )
        lo, hi = data["initial_price_range"]
        return cls(
            name=name,
            problem=problem,
            initial_price_range=(lo, hi),
            currency=data.get("currency", "USD_cents"),
            min_market_price=data.get("min_market_price"),
        )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    return Scenario.from_dict(path.stem, data)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")


_SCENARIO_DIR = Path(__file__).parent / "scenarios"


def builtin_scenarios() -> dict[str, Scenario]:
    """Scenarios shipped with the package, keyed by name."""
    out = {}
    for path in sorted(_SCENARIO_DIR.glob("*.json")):
        out[path.stem] = load_scenario(path)
    return out


def get_scenario(name_or_path: str | Path) -> Scenario:
    """Resolve a scenario by built-in name or by file path."""
    builtin = builtin_scenarios()
    if str(name_or_path) in builtin:
        return builtin[str(name_or_path)]
    path = Path(name_or_path)
    if path.exists():
        return load_scenario(path)
    raise KeyError(f"unknown scenario: {name_or_path!r} (built-ins: {sorted(builtin)})")
