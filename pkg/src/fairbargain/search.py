"""Offer search: UCB selection over proposer candidates with value backup.

Each search owns a tree over one depth-limited subgame. Expansion asks the
proposer for a handful of candidate offers (uniform prior over them, zero
elsewhere); accepting the opponent's standing offer is always injected as a
candidate. Terminal nodes score with the subgame reward, interior leaves
with the value function, and values propagate back up the visited path.

Opponent turns inside the tree are searched the same way but scored from
the opponent's perspective, modeling a counterpart that also steers toward
the egalitarian split. A uniform-random opponent model is available behind
a config switch.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .game import NegotiationState, Role, SubgameView

# Actions are ("offer", price_cents) or ("accept", price_cents) where the
# accept price is the opponent's standing offer being taken.
Action = tuple[str, int]

ValueFn = Callable[[NegotiationState, SubgameView, Role, int], float]
RewardFn = Callable[[NegotiationState, SubgameView, Optional[int]], tuple[float, float]]
TraceSink = Callable[[dict], None]


class ProposerFailureError(RuntimeError):
    """The proposer could not be consulted; propagated out of the search."""


class EmptyCandidateError(RuntimeError):
    """No candidate action exists at the search root."""


@dataclass
class SearchConfig:
    """Search knobs. Defaults are the inference settings; training uses 50
    iterations via its own config."""

    iterations: int = 10
    c_p: float = 2.0
    candidates_per_expansion: int = 5
    opponent_model: str = "fairness"  # "fairness" | "uniform"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.c_p < 0:
            raise ValueError("c_p must be non-negative")
        if self.candidates_per_expansion < 1:
            raise ValueError("candidates_per_expansion must be >= 1")
        if self.opponent_model not in ("fairness", "uniform"):
            raise ValueError("opponent_model must be 'fairness' or 'uniform'")


@dataclass
class SearchNode:
    state: NegotiationState
    actions: list[Action] = field(default_factory=list)
    children: dict[Action, "SearchNode"] = field(default_factory=dict)
    visit_counts: dict[Action, int] = field(default_factory=dict)
    q_values: dict[Action, float] = field(default_factory=dict)
    is_terminal: bool = False
    terminal_value: Optional[tuple[float, float]] = None
    expanded: bool = False

    @property
    def to_move(self) -> Role:
        return self.state.whose_turn

    def total_visits(self) -> int:
        return sum(self.visit_counts.values())


def ucb_score(q: float, n_sa: int, n_total: int, c_p: float) -> float:
    """Upper confidence bound: q plus an exploration bonus that grows with
    the parent's total visits and shrinks with the action's own count."""
    if n_sa < 0 or n_total < 0:
        raise ValueError("visit counts must be non-negative")
    return q + c_p * math.sqrt(n_total) / (1 + n_sa)


def backpropagate(path: list[tuple[SearchNode, Action]], value) -> None:
    """Credit a leaf evaluation to every (state, action) edge on the path.

    Each edge's count is incremented first, then its Q moves by value/count.
    ``value`` is either a plain scalar applied to every edge or a
    (seller, buyer) pair resolved by the role to move at each node.
    """
    if not path:
        raise ValueError("path must be non-empty")
    for node, action in path:
        v = value[node.to_move.index] if isinstance(value, tuple) else value
        n = node.visit_counts.get(action, 0) + 1
        node.visit_counts[action] = n
        node.q_values[action] = node.q_values.get(action, 0.0) + v / n


def default_reward_fn(
    state: NegotiationState, subgame: SubgameView, deal_price: Optional[int]
) -> tuple[float, float]:
    """Score a terminal node from both perspectives.

    A deal price scores directly; with no deal the standing offers at the
    subgame horizon settle it (compatible requests are granted, otherwise
    both sides fall back to disagreement).
    """
    if deal_price is not None:
        return (
            subgame.reward_for_deal(deal_price, Role.SELLER),
            subgame.reward_for_deal(deal_price, Role.BUYER),
        )
    ask = state.standing_offer(Role.SELLER)
    bid = state.standing_offer(Role.BUYER)
    return (
        subgame.reward_for_standing(ask, bid, Role.SELLER),
        subgame.reward_for_standing(ask, bid, Role.BUYER),
    )


def _action_sort_key(node: SearchNode, action: Action, role: Role) -> tuple:
    # Ties fall to the least concessive price for the mover (hold the
    # anchor): exact Q ties are common along the fair path, and breaking
    # them concessively would collapse the opening anchor.
    q = node.q_values.get(action, 0.0)
    n = node.visit_counts.get(action, 0)
    price_key = -action[1] if role is Role.SELLER else action[1]
    return (-q, -n, price_key)


@dataclass(frozen=True)
class SearchResult:
    """Selected action plus the root statistics that justified it."""

    action: Action
    root_q: dict[Action, float]
    root_visits: dict[Action, int]
    actions: tuple[Action, ...]
    root_node: Optional["SearchNode"] = None

    def ranking(self) -> list[Action]:
        """Root actions ordered best-first by Q, then visits, then price."""
        return sorted(
            self.actions,
            key=lambda a: (-self.root_q.get(a, 0.0), -self.root_visits.get(a, 0), a[1]),
        )


def run_search(
    root: NegotiationState,
    subgame: SubgameView,
    config: SearchConfig,
    proposer,
    value_fn: ValueFn,
    own_reservation: int,
    reward_fn: RewardFn = default_reward_fn,
    trace_sink: Optional[TraceSink] = None,
) -> SearchResult:
    """Select the best action at ``root`` for the player to move.

    Runs ``config.iterations`` select/expand/backpropagate cycles and
    returns the root action with the highest Q value; ties fall to the
    higher visit count and then to the lower price, which prefers the
    concessive option.
    """
    if root.turns_used >= subgame.end_turn:
        raise ValueError("root is already at the subgame horizon")
    owner = root.whose_turn
    rng = random.Random(config.seed)

    def reservation_for(role: Role) -> int:
        if role is owner:
            return own_reservation
        # The opponent's true reservation is private; the belief interval's
        # far anchor stands in for it inside the tree.
        return subgame.upper if owner is Role.SELLER else subgame.lower

    root_node = SearchNode(state=root)
    _expand(root_node, subgame, config, proposer, reservation_for, reward_fn)
    if not root_node.actions:
        raise EmptyCandidateError("no candidate actions at the search root")

    for iteration in range(config.iterations):
        node = root_node
        path: list[tuple[SearchNode, Action]] = []
        while node.expanded and not node.is_terminal:
            action = _select_action(node, config, rng, owner)
            path.append((node, action))
            node = node.children[action]

        if node.is_terminal:
            value = node.terminal_value
        elif node.state.turns_used >= subgame.end_turn:
            node.is_terminal = True
            node.terminal_value = reward_fn(node.state, subgame, None)
            value = node.terminal_value
        else:
            _expand(node, subgame, config, proposer, reservation_for, reward_fn)
            if node.is_terminal:
                value = node.terminal_value
            else:
                value = (
                    value_fn(node.state, subgame, Role.SELLER, reservation_for(Role.SELLER)),
                    value_fn(node.state, subgame, Role.BUYER, reservation_for(Role.BUYER)),
                )
        if path:
            backpropagate(path, value)
        if trace_sink is not None:
            trace_sink(
                {
                    "iteration": iteration,
                    "path": [list(a) for _, a in path],
                    "leaf_value": list(value),
                    "root_q": {f"{a[0]}:{a[1]}": root_node.q_values.get(a, 0.0) for a in root_node.actions},
                }
            )

    best = min(root_node.actions, key=lambda a: _action_sort_key(root_node, a, owner))
    return SearchResult(
        action=best,
        root_q=dict(root_node.q_values),
        root_visits=dict(root_node.visit_counts),
        actions=tuple(root_node.actions),
        root_node=root_node,
    )


def _select_action(node: SearchNode, config: SearchConfig, rng: random.Random, owner: Role) -> Action:
    if config.opponent_model == "uniform" and node.to_move is not owner:
        return node.actions[rng.randrange(len(node.actions))]
    total = node.total_visits()
    best_action = None
    best_score = -math.inf
    for action in node.actions:
        score = ucb_score(
            node.q_values.get(action, 0.0),
            node.visit_counts.get(action, 0),
            total,
            config.c_p,
        )
        if score > best_score:
            best_score = score
            best_action = action
    return best_action


def _expand(
    node: SearchNode,
    subgame: SubgameView,
    config: SearchConfig,
    proposer,
    reservation_for: Callable[[Role], int],
    reward_fn: RewardFn = default_reward_fn,
) -> None:
    """Create the node's children: proposer offers plus accept when possible.

    The candidate list is generated once per node and cached; later visits
    descend through it. A node with no legal action settles immediately at
    the standing offers.
    """
    state = node.state
    role = state.whose_turn
    actions: list[Action] = []
    try:
        offers = proposer.propose(
            state, role, config.candidates_per_expansion, reservation=reservation_for(role)
        )
    except Exception as exc:
        from .proposer import NoValidOfferError

        if isinstance(exc, NoValidOfferError):
            offers = []
        else:
            raise ProposerFailureError(str(exc)) from exc
    actions.extend(("offer", price) for price in offers)
    # Accept is injected after the proposer's offers: on an all-tied value
    # landscape the first-listed action collects the spare visit, and that
    # spare visit must not favor capitulation.
    opp_standing = state.standing_offer(role.opponent)
    if opp_standing is not None:
        actions.append(("accept", opp_standing))

    if not actions:
        node.is_terminal = True
        node.terminal_value = reward_fn(state, subgame, None)
        return

    node.actions = actions
    for action in actions:
        kind, price = action
        child_state = state.after_offer(role, price)
        if kind == "accept":
            child = SearchNode(state=child_state, is_terminal=True)
            child.terminal_value = reward_fn(child_state, subgame, price)
        else:
            child = SearchNode(state=child_state)
            if child_state.turns_used >= subgame.end_turn:
                child.is_terminal = True
                child.terminal_value = reward_fn(child_state, subgame, None)
        node.children[action] = child
        node.visit_counts[action] = 0
        node.q_values[action] = 0.0
    node.expanded = True
