"""The negotiation controller: act extraction, staged offer selection, the
endgame rule, and message realization.

The controller plays a fixed schedule of belief-rooted subgames. Within a
stage it counters with the searched offer for the current subgame, accepts
outright whenever the opponent's standing offer already beats that counter,
and once the schedule is spent it holds at its reservation plus
disagreement payoff until the opponent agrees. That final rule is what
guarantees a deal whenever one is feasible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .core import Scenario
from .game import (
    fairness_anchor_price,
    ACCEPT,
    ActKind,
    DialogueAct,
    NegotiationState,
    OutOfTurnError,
    REJECT,
    NO_COUNTEROFFER,
    Role,
    SubgameSchedule,
    belief_for,
    counteroffer,
    subgame_for,
)
from .money import format_cents
from .proposer import RuleBasedProposer, parse_offers
from .search import SearchConfig, SearchResult, run_search
from .value_model import MidpointProjectionValue

# Reject cues are matched before accept cues so negated agreement
# ("can't accept", "no deal") lands on the right act.
_REJECT_CUES = (
    "no deal",
    "can't accept",
    "cannot accept",
    "won't accept",
    "not acceptable",
    "reject",
    "no thanks",
)
_ACCEPT_CUES = (
    "accept",
    "we have a deal",
    "it's a deal",
    "its a deal",
    "deal!",
    "sounds good",
    "agreed",
    "i'll take it",
    "ill take it",
)


def extract_act(message, scenario: Optional[Scenario] = None) -> DialogueAct:
    """Map an incoming message to a dialogue act.

    Structured payloads (dicts with an act) pass through. Free text is
    scanned for reject and accept cues, then for a price; anything else is
    no_counteroffer, which downstream treats as maintaining the previous
    offer. Prices outside a wide plausibility band around the scenario are
    ignored so incidental numbers do not become offers.
    """
    if isinstance(message, DialogueAct):
        return message
    if isinstance(message, dict):
        payload = message.get("act", message)
        return DialogueAct.from_dict(payload)
    text = str(message).lower()
    for cue in _REJECT_CUES:
        if cue in text:
            return REJECT
    for cue in _ACCEPT_CUES:
        if cue in text:
            return ACCEPT
    prices = parse_offers(str(message))
    if scenario is not None:
        lo = min(scenario.floor, scenario.initial_price_range[0]) // 2
        hi = max(scenario.ceiling, scenario.initial_price_range[1]) * 2
        prices = [p for p in prices if lo <= p <= hi]
    if prices:
        return counteroffer(prices[-1])
    return NO_COUNTEROFFER


@dataclass(frozen=True)
class AgentAction:
    """A chosen act plus the search statistics that justified it."""

    act: DialogueAct
    accept_price: Optional[int] = None
    rationale: dict = field(default_factory=dict)


class NegotiationAgent:
    """Fairness-targeting negotiator for one role in one scenario.

    Stateless between calls: every decision is a pure function of the offer
    history, so sessions replay exactly from transcripts. Instances are
    independent; one instance serves one negotiation at a time.
    """

    def __init__(
        self,
        scenario: Scenario,
        role: Role,
        proposer=None,
        value_fn=None,
        schedule: Optional[SubgameSchedule] = None,
        search_config: Optional[SearchConfig] = None,
        trace_sink=None,
    ) -> None:
        self.scenario = scenario
        self.role = role
        self.proposer = proposer if proposer is not None else RuleBasedProposer()
        self.value_fn = value_fn if value_fn is not None else MidpointProjectionValue()
        self.schedule = schedule if schedule is not None else SubgameSchedule()
        self.search_config = search_config if search_config is not None else SearchConfig()
        self.trace_sink = trace_sink

    @property
    def reservation(self) -> int:
        return self.scenario.floor if self.role is Role.SELLER else self.scenario.ceiling

    @property
    def endgame_price(self) -> int:
        """Reservation plus own disagreement payoff: the final holding offer."""
        d = self.scenario.problem.disagreement[self.role.index]
        if self.role is Role.SELLER:
            return self.scenario.floor + d
        return self.scenario.ceiling - d

    def state_for(self, history: tuple[tuple[Role, int], ...]) -> NegotiationState:
        """The agent's view of the game after ``history``; it must be the
        agent's turn."""
        if history and history[-1][0] is self.role:
            raise OutOfTurnError(f"last offer was by {self.role.value}; not our turn")
        belief = belief_for(history, self.role, self.scenario, self.schedule)
        return NegotiationState(
            offer_history=tuple(history),
            whose_turn=self.role,
            belief=belief,
            scenario=self.scenario,
        )

    def respond(self, history) -> AgentAction:
        return self.next_action(self.state_for(tuple(history)))

    def next_action(self, state: NegotiationState) -> AgentAction:
        """Choose the agent's act at its turn.

        Within a stage: search the current subgame, but accept outright if
        the opponent's standing offer already beats the searched counter.
        Past the last stage the endgame rule takes over.
        """
        if state.whose_turn is not self.role:
            raise OutOfTurnError(f"it is {state.whose_turn.value}'s turn")
        subgame = subgame_for(state, self.role, self.schedule)
        if subgame is None:
            return self.endgame_action(state)

        result = run_search(
            root=state,
            subgame=subgame,
            config=self.search_config,
            proposer=self.proposer,
            value_fn=self.value_fn,
            own_reservation=self.reservation,
            trace_sink=self.trace_sink,
        )
        rationale = _rationale(result, subgame.target_price)
        opp_offer = state.standing_offer(self.role.opponent)
        action = result.action
        if action[0] == "accept" and not self._fair_or_better(action[1]):
            # A shrunken stage belief can make a below-fair standing offer
            # look locally acceptable; before the endgame the agent keeps
            # holding the game-level fair line instead. The endgame rule is
            # the only place concession past the anchor happens.
            offers = [a for a in result.ranking() if a[0] == "offer"]
            if offers:
                action = offers[0]
        if action[0] == "accept":
            return AgentAction(ACCEPT, accept_price=action[1], rationale=rationale)
        price = action[1]
        if opp_offer is not None and (
            self._dominates(opp_offer, price) or self._fair_or_better(opp_offer)
        ):
            # Take a standing offer that already beats our next counter or
            # reaches the game-level fair price: countering past either
            # would be countering a price we are happy with, and the search
            # may otherwise defer an equal-value acceptance indefinitely.
            return AgentAction(ACCEPT, accept_price=opp_offer, rationale=rationale)
        return AgentAction(counteroffer(price), rationale=rationale)

    def _fair_or_better(self, price: int) -> bool:
        anchor = fairness_anchor_price(self.scenario)
        if self.role is Role.SELLER:
            return price >= anchor
        return price <= anchor

    def _dominates(self, opp_offer: int, own_counter: int) -> bool:
        """True when taking the opponent's offer beats making our counter."""
        if self.role is Role.SELLER:
            return opp_offer >= own_counter
        return opp_offer <= own_counter

    def endgame_action(self, state: NegotiationState) -> AgentAction:
        """Past the schedule: accept anything at least as good as reservation
        plus disagreement, otherwise offer exactly that price, forever."""
        opp_offer = state.standing_offer(self.role.opponent)
        price = self.endgame_price
        rationale = {"endgame_price": price}
        if opp_offer is not None and self._dominates(opp_offer, price):
            return AgentAction(ACCEPT, accept_price=opp_offer, rationale=rationale)
        return AgentAction(counteroffer(price), rationale=rationale)


def _rationale(result: SearchResult, target_price: int) -> dict:
    return {
        "target_price": target_price,
        "root": [
            {
                "action": list(action),
                "q": round(result.root_q.get(action, 0.0), 6),
                "n": result.root_visits.get(action, 0),
            }
            for action in result.actions
        ],
    }


_TEMPLATES = {
    (Role.SELLER, ActKind.COUNTEROFFER): "I can offer it to you for {price}.",
    (Role.BUYER, ActKind.COUNTEROFFER): "Would you take {price} for it?",
    (Role.SELLER, ActKind.ACCEPT): "I accept your offer of {price}. Deal!",
    (Role.BUYER, ActKind.ACCEPT): "I accept your offer of {price}. Deal!",
    (Role.SELLER, ActKind.REJECT): "I can't accept that price.",
    (Role.BUYER, ActKind.REJECT): "I can't accept that price.",
    (Role.SELLER, ActKind.NO_COUNTEROFFER): "My offer of {price} stands.",
    (Role.BUYER, ActKind.NO_COUNTEROFFER): "My offer of {price} stands.",
}

_REALIZE_SYSTEM = (
    "You are a {role} in a price negotiation. Rephrase the given statement "
    "naturally in one or two sentences. The dollar amount must appear verbatim."
)


def realize(
    action: AgentAction,
    role: Role,
    mode: str = "template",
    remote=None,
    standing_price: Optional[int] = None,
) -> str:
    """Render an agent action as outgoing text.

    Template mode is deterministic and embeds the exact price. Remote mode
    asks a chat model to rephrase the template but falls back to the
    template on any failure. Either way the structured act travels in the
    message envelope, so this text is never re-parsed by our own logic.
    """
    act = action.act
    price = act.price if act.kind is ActKind.COUNTEROFFER else action.accept_price
    if price is None:
        price = standing_price
    template = _TEMPLATES[(role, act.kind)]
    text = template.format(price=format_cents(price) if price is not None else "my price")
    if mode == "remote" and remote is not None:
        try:
            reply = remote.chat(_REALIZE_SYSTEM.format(role=role.value), text)
            if price is None or format_cents(price) in reply:
                return reply
        except Exception:
            pass
    return text


@dataclass(frozen=True)
class MessageEnvelope:
    """Wire format for one turn of a negotiation session."""

    session: str
    role: Role
    text: str
    act: DialogueAct
    turn: int

    def to_dict(self) -> dict:
        return {
            "session": self.session,
            "role": self.role.value,
            "text": self.text,
            "act": self.act.to_dict(),
            "turn": self.turn,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MessageEnvelope":
        return cls(
            session=data["session"],
            role=Role(data["role"]),
            text=data["text"],
            act=DialogueAct.from_dict(data["act"]),
            turn=data["turn"],
        )
