"""Negotiation game state: dialogue acts, alternating offer history, the
subgame schedule, and belief-rooted subgame views.

A negotiation is an alternating sequence of price offers. Non-offer acts
are projected onto the offer history: maintaining silence or rejecting
repeats the actor's standing offer (or their advertised anchor if they have
never offered), and accepting records a deal at the opponent's standing
price. This projection keeps the history strictly alternating, which every
downstream component relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

from .core import (
    Allocation,
    BargainingProblem,
    Scenario,
    SurplusBelief,
    ebs_price,
    subgame_reward,
    update_surplus_estimate,
    update_surplus_estimate_buyer,
)


class Role(str, Enum):
    SELLER = "seller"
    BUYER = "buyer"

    @property
    def opponent(self) -> "Role":
        return Role.BUYER if self is Role.SELLER else Role.SELLER

    @property
    def index(self) -> int:
        """Canonical player index: seller is 0, buyer is 1."""
        return 0 if self is Role.SELLER else 1


class ActKind(str, Enum):
    NO_COUNTEROFFER = "no_counteroffer"
    COUNTEROFFER = "counteroffer"
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class DialogueAct:
    """One of the four negotiation acts; only counteroffers carry a price."""

    kind: ActKind
    price: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is ActKind.COUNTEROFFER:
            if self.price is None or self.price <= 0:
                raise ValueError("counteroffer requires a positive price")
        elif self.price is not None:
            raise ValueError(f"{self.kind.value} must not carry a price")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "price_cents": self.price}

    @classmethod
    def from_dict(cls, data: dict) -> "DialogueAct":
        return cls(kind=ActKind(data["kind"]), price=data.get("price_cents"))


def counteroffer(price: int) -> DialogueAct:
    return DialogueAct(ActKind.COUNTEROFFER, price)


ACCEPT = DialogueAct(ActKind.ACCEPT)
REJECT = DialogueAct(ActKind.REJECT)
NO_COUNTEROFFER = DialogueAct(ActKind.NO_COUNTEROFFER)


@dataclass(frozen=True)
class SubgameSchedule:
    """Fixed-length negotiation stages, measured in total offers by both sides.

    The default splits the game into stages of ten, four, and two offers;
    once they are spent the endgame rule takes over.
    """

    lengths: tuple[int, ...] = (10, 4, 2)

    def __post_init__(self) -> None:
        if not self.lengths or any(n <= 0 for n in self.lengths):
            raise ValueError("stage lengths must be strictly positive")

    @property
    def total_turns(self) -> int:
        return sum(self.lengths)

    def boundaries(self) -> tuple[int, ...]:
        """Cumulative turn counts at which each stage ends."""
        out = []
        acc = 0
        for n in self.lengths:
            acc += n
            out.append(acc)
        return tuple(out)

    def stage_of(self, turns_used: int) -> Optional[int]:
        """Stage index covering the next turn, or None once in the endgame."""
        for i, bound in enumerate(self.boundaries()):
            if turns_used < bound:
                return i
        return None

    def stage_start(self, stage: int) -> int:
        return 0 if stage == 0 else self.boundaries()[stage - 1]

    def stage_end(self, stage: int) -> int:
        return self.boundaries()[stage]


@dataclass(frozen=True)
class NegotiationState:
    """Alternating offer history plus the owner's surplus belief.

    The history is the game state proper; the belief and scenario are the
    owning player's private view, carried along so search and proposers can
    work from the state alone.
    """

    offer_history: tuple[tuple[Role, int], ...]
    whose_turn: Role
    belief: SurplusBelief
    scenario: Scenario

    def __post_init__(self) -> None:
        prev: Optional[Role] = None
        for role, price in self.offer_history:
            if price <= 0:
                raise ValueError("offers must be positive prices")
            if prev is not None and role is prev:
                raise ValueError("offer history must alternate roles")
            prev = role
        if self.offer_history and self.offer_history[-1][0] is self.whose_turn:
            raise ValueError("whose_turn must differ from the last offer's role")

    @property
    def turns_used(self) -> int:
        return len(self.offer_history)

    def standing_offer(self, role: Role) -> Optional[int]:
        for r, price in reversed(self.offer_history):
            if r is role:
                return price
        return None

    def prices(self) -> tuple[int, ...]:
        return tuple(price for _, price in self.offer_history)

    def anchor(self, role: Role) -> int:
        """Pre-offer standing position: the advertised range bound for a role."""
        lo, hi = self.scenario.initial_price_range
        return hi if role is Role.SELLER else lo

    def standing_or_anchor(self, role: Role) -> int:
        standing = self.standing_offer(role)
        return standing if standing is not None else self.anchor(role)

    def after_offer(self, role: Role, price: int) -> "NegotiationState":
        if role is not self.whose_turn:
            raise OutOfTurnError(f"it is {self.whose_turn.value}'s turn, not {role.value}")
        return replace(
            self,
            offer_history=self.offer_history + ((role, price),),
            whose_turn=role.opponent,
        )

    def after_act(self, role: Role, act: DialogueAct) -> "NegotiationState":
        """Project an act onto the offer history.

        Counteroffers append their price. Reject and no_counteroffer repeat
        the actor's standing offer (anchor if they never offered). Accept is
        terminal and handled by the caller; projecting it here repeats the
        opponent's standing price as the actor's own, matching the reading
        that an accepted offer becomes both parties' position.
        """
        if act.kind is ActKind.COUNTEROFFER:
            return self.after_offer(role, act.price)
        if act.kind is ActKind.ACCEPT:
            opp_standing = self.standing_offer(role.opponent)
            price = opp_standing if opp_standing is not None else self.standing_or_anchor(role)
            return self.after_offer(role, price)
        return self.after_offer(role, self.standing_or_anchor(role))


class OutOfTurnError(RuntimeError):
    """An action arrived for the side whose turn it is not."""


def initial_state(scenario: Scenario, owner: Role, opener: Role) -> NegotiationState:
    """Fresh game state owned by ``owner``, with ``opener`` to move first."""
    lo, hi = scenario.initial_price_range
    belief = SurplusBelief(estimate=hi - lo, lower_anchor=lo, upper_anchor=hi)
    return NegotiationState(
        offer_history=(), whose_turn=opener, belief=belief, scenario=scenario
    )


def belief_for(
    history: tuple[tuple[Role, int], ...],
    role: Role,
    scenario: Scenario,
    schedule: SubgameSchedule,
) -> SurplusBelief:
    """Surplus belief of ``role`` after the given history.

    The opening belief spans the advertised price range. At every completed
    stage boundary the belief is refreshed from the offers standing at that
    boundary against the role's own reservation. Derivable from the history
    alone, so sessions can be replayed from transcripts.
    """
    lo, hi = scenario.initial_price_range
    belief = SurplusBelief(estimate=hi - lo, lower_anchor=lo, upper_anchor=hi)
    turns = len(history)
    for bound in schedule.boundaries():
        if turns < bound:
            break
        prefix = history[:bound]
        own = _standing_in(prefix, role)
        opp = _standing_in(prefix, role.opponent)
        if role is Role.SELLER:
            own = own if own is not None else belief.upper_anchor
            opp = opp if opp is not None else belief.lower_anchor
            belief = update_surplus_estimate(own, opp, scenario.floor)
        else:
            own = own if own is not None else belief.lower_anchor
            opp = opp if opp is not None else belief.upper_anchor
            belief = update_surplus_estimate_buyer(own, opp, scenario.ceiling)
    return belief


def _standing_in(history: Iterable[tuple[Role, int]], role: Role) -> Optional[int]:
    standing = None
    for r, price in history:
        if r is role:
            standing = price
    return standing


@dataclass(frozen=True)
class SubgameView:
    """A depth-limited subgame rooted at a belief state.

    The belief interval [lower, upper] is treated as the full bargaining
    range of a perfect-information game that closes after ``end_turn`` total
    offers. Deal prices map to shares against the interval; the view scores
    terminal outcomes with the piecewise egalitarian reward.
    """

    lower: int
    upper: int
    disagreement: tuple[int, int]
    end_turn: int

    def __post_init__(self) -> None:
        if self.upper < self.lower:
            raise ValueError("belief interval must be ordered")

    @property
    def problem(self) -> BargainingProblem:
        return BargainingProblem.from_reservations(self.lower, self.upper, self.disagreement)

    @property
    def target_price(self) -> int:
        """Deal price at the subgame's egalitarian solution.

        When the believed surplus cannot cover the disagreement payoffs the
        interval midpoint stands in; such subgames score zero everywhere
        anyway."""
        if self.upper - self.lower < sum(self.disagreement):
            return (self.lower + self.upper) // 2
        return ebs_price(self.problem)

    def clamp(self, price: int) -> int:
        return max(self.lower, min(self.upper, price))

    def deal_shares(self, price: int) -> Allocation:
        p = self.clamp(price)
        return Allocation((p - self.lower, self.upper - p))

    def reward_for_deal(self, price: int, role: Role) -> float:
        return self._score(self.deal_shares(price), role)

    def reward_for_standing(self, ask: Optional[int], bid: Optional[int], role: Role) -> float:
        """Score a subgame that closed with the given standing offers.

        Compatible requests (ask <= bid) grant each side what it asked for;
        incompatible requests pay the disagreement vector, which scores zero.
        """
        if ask is None or bid is None:
            return 0.0
        ask_c, bid_c = self.clamp(ask), self.clamp(bid)
        if ask_c > bid_c:
            return 0.0
        shares = Allocation((ask_c - self.lower, self.upper - bid_c))
        return self._score(shares, role)

    def _score(self, shares: Allocation, role: Role) -> float:
        if role is Role.SELLER:
            return subgame_reward(self.problem, shares)
        swapped = BargainingProblem.from_reservations(
            0, self.upper - self.lower, (self.disagreement[1], self.disagreement[0])
        )
        return subgame_reward(swapped, Allocation((shares.shares[1], shares.shares[0])))


def target_price_for_belief(belief: SurplusBelief, disagreement: tuple[int, int]) -> int:
    """Egalitarian deal price over a belief interval.

    Falls back to the interval midpoint when the believed surplus cannot
    cover the disagreement payoffs (a nearly-settled game).
    """
    lo, up = belief.lower_anchor, belief.upper_anchor
    if up - lo >= sum(disagreement):
        problem = BargainingProblem.from_reservations(lo, up, disagreement)
        return ebs_price(problem)
    return (lo + up) // 2


def fairness_anchor_price(scenario: Scenario, granularity: int = 5000) -> int:
    """Game-level fair price: the egalitarian point of the advertised range,
    snapped to the offer grid.

    Surplus beliefs only shrink as offers narrow the gap, so stage targets
    can drift below the game-level fair point against a low-balling
    opponent. The anchor is the line the agent holds until its endgame
    rule takes over.
    """
    from .money import snap_to_tick

    lo, hi = scenario.initial_price_range
    belief = SurplusBelief(estimate=hi - lo, lower_anchor=lo, upper_anchor=hi)
    return snap_to_tick(
        target_price_for_belief(belief, scenario.problem.disagreement[:2]), granularity
    )


def subgame_for(
    state: NegotiationState,
    role: Role,
    schedule: SubgameSchedule,
) -> Optional[SubgameView]:
    """The current subgame for ``role``, or None once the schedule is spent.

    Rooted at the role's belief for the current stage; closes at the stage's
    cumulative turn boundary.
    """
    stage = schedule.stage_of(state.turns_used)
    if stage is None:
        return None
    belief = belief_for(state.offer_history, role, state.scenario, schedule)
    d = state.scenario.problem.disagreement
    return SubgameView(
        lower=belief.lower_anchor,
        upper=belief.upper_anchor,
        disagreement=(d[0], d[1]),
        end_turn=schedule.stage_end(stage),
    )
