import math
import random

import pytest

from fairbargain.core import SurplusBelief
from fairbargain.game import NegotiationState, Role, SubgameView
from fairbargain.search import (
    EmptyCandidateError,
    SearchConfig,
    SearchNode,
    backpropagate,
    run_search,
    ucb_score,
)
from fairbargain.value_model import MidpointProjectionValue


class MenuProposer:
    """Fixed candidate menus keyed by (price history, role)."""

    deterministic = True
    max_candidates = None

    def __init__(self, menus, default=None):
        self.menus = menus
        self.default = default or []

    def propose(self, state, role, k, reservation=None):
        menu = self.menus.get((state.prices(), role), self.default)
        return list(menu)[:k]


def make_state(scenario, history, belief_bounds):
    lo, up = belief_bounds
    belief = SurplusBelief(estimate=up - lo, lower_anchor=lo, upper_anchor=up)
    turn = Role.SELLER if not history else history[-1][0].opponent
    return NegotiationState(tuple(history), turn, belief, scenario)


def alternating_history(n, seller_price=1310000, buyer_price=1290000):
    """n alternating offers, seller first, ending on the buyer when n even."""
    out = []
    for i in range(n):
        if i % 2 == 0:
            out.append((Role.SELLER, seller_price + (n - i) * 1000))
        else:
            out.append((Role.BUYER, buyer_price - (n - i) * 1000))
    return out


# ---------------------------------------------------------------------------
# ucb_score / backpropagate contracts
# ---------------------------------------------------------------------------

def test_ucb_hand_example():
    assert ucb_score(0.5, n_sa=1, n_total=4, c_p=2.0) == pytest.approx(2.5)


def test_ucb_no_visits_no_bonus():
    assert ucb_score(0.7, n_sa=3, n_total=0, c_p=2.0) == pytest.approx(0.7)


def test_ucb_greedy_when_cp_zero():
    for n_sa, n_total in [(0, 0), (1, 5), (10, 100)]:
        assert ucb_score(0.3, n_sa, n_total, 0.0) == pytest.approx(0.3)


def _edge_node():
    node = SearchNode.__new__(SearchNode)
    node.visit_counts = {}
    node.q_values = {}
    node.state = None
    return node


def test_backprop_first_visit():
    node = _edge_node()
    backpropagate([(node, ("offer", 1))], 0.8)
    assert node.visit_counts[("offer", 1)] == 1
    assert node.q_values[("offer", 1)] == pytest.approx(0.8)


def test_backprop_second_visit_adds_fraction():
    node = _edge_node()
    node.visit_counts[("offer", 1)] = 1
    node.q_values[("offer", 1)] = 0.8
    backpropagate([(node, ("offer", 1))], 0.4)
    assert node.visit_counts[("offer", 1)] == 2
    assert node.q_values[("offer", 1)] == pytest.approx(1.0)


def test_backprop_zero_value_counts_visit():
    node = _edge_node()
    node.visit_counts[("offer", 1)] = 3
    node.q_values[("offer", 1)] = 0.5
    backpropagate([(node, ("offer", 1))], 0.0)
    assert node.visit_counts[("offer", 1)] == 4
    assert node.q_values[("offer", 1)] == pytest.approx(0.5)


def test_backprop_requires_path():
    with pytest.raises(ValueError):
        backpropagate([], 0.5)


# ---------------------------------------------------------------------------
# run_search behavior on constructed subgames
# ---------------------------------------------------------------------------

def stage3_view():
    return SubgameView(lower=1250000, upper=1350000, disagreement=(10000, 10000), end_turn=16)


def test_search_returns_target_offer(car_scenario):
    history = alternating_history(14)
    state = make_state(car_scenario, history, (1250000, 1350000))
    assert state.whose_turn is Role.SELLER
    menus = {
        (state.prices(), Role.SELLER): [1310000, 1305000, 1300000],
    }
    proposer = MenuProposer(menus, default=[1295000, 1300000])
    result = run_search(
        state, stage3_view(), SearchConfig(iterations=30), proposer,
        MidpointProjectionValue(), own_reservation=1250000,
    )
    assert result.action == ("offer", 1300000)


def test_search_accepts_dominating_standing_offer(car_scenario):
    history = alternating_history(14, seller_price=1340000, buyer_price=1330000)
    state = make_state(car_scenario, history, (1250000, 1350000))
    menus = {(state.prices(), Role.SELLER): [1335000, 1340000]}
    proposer = MenuProposer(menus, default=[1330000])
    result = run_search(
        state, stage3_view(), SearchConfig(iterations=30), proposer,
        MidpointProjectionValue(), own_reservation=1250000,
    )
    assert result.action[0] == "accept"


def test_single_iteration_returns_candidate(car_scenario):
    history = alternating_history(2)
    state = make_state(car_scenario, history, (1125000, 1475000))
    proposer = MenuProposer({}, default=[1400000, 1380000])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    result = run_search(
        state, view, SearchConfig(iterations=1), proposer,
        MidpointProjectionValue(), own_reservation=1250000,
    )
    assert result.action in {("offer", 1400000), ("offer", 1380000), ("accept", state.standing_offer(Role.BUYER))}


def test_root_visits_sum_to_iterations(car_scenario):
    history = alternating_history(2)
    state = make_state(car_scenario, history, (1125000, 1475000))
    proposer = MenuProposer({}, default=[1400000, 1380000, 1360000])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    for iterations in (1, 7, 25):
        result = run_search(
            state, view, SearchConfig(iterations=iterations), proposer,
            MidpointProjectionValue(), own_reservation=1250000,
        )
        assert sum(result.root_visits.values()) == iterations


def test_monotone_exploration_with_large_cp(car_scenario):
    history = alternating_history(2)
    state = make_state(car_scenario, history, (1125000, 1475000))
    proposer = MenuProposer({}, default=[1400000, 1380000, 1360000, 1340000])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    # Q values accumulate harmonically under the v/N update, so "value
    # range" for the dominance condition is the accumulated range (~10).
    config = SearchConfig(iterations=40, c_p=100.0)
    result = run_search(
        state, view, config, proposer, MidpointProjectionValue(), own_reservation=1250000
    )
    n_candidates = len(result.actions)
    floor_visits = 40 // n_candidates
    for action in result.actions:
        assert result.root_visits[action] >= floor_visits


def test_search_deterministic(car_scenario):
    history = alternating_history(2)
    state = make_state(car_scenario, history, (1125000, 1475000))
    proposer = MenuProposer({}, default=[1400000, 1380000, 1360000])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    config = SearchConfig(iterations=15, seed=3)
    results = [
        run_search(state, view, config, proposer, MidpointProjectionValue(), 1250000)
        for _ in range(2)
    ]
    assert results[0].action == results[1].action
    assert results[0].root_q == results[1].root_q


def test_tree_children_reachable_by_one_action(car_scenario):
    history = alternating_history(2)
    state = make_state(car_scenario, history, (1125000, 1475000))
    proposer = MenuProposer({}, default=[1400000, 1380000])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    result = run_search(
        state, view, SearchConfig(iterations=20), proposer,
        MidpointProjectionValue(), own_reservation=1250000,
    )

    def walk(node):
        for action, child in node.children.items():
            expected = node.state.after_offer(node.state.whose_turn, action[1])
            assert child.state.offer_history == expected.offer_history
            walk(child)

    walk(result.root_node)


def test_empty_candidates_raise(car_scenario):
    state = make_state(car_scenario, [], (1125000, 1475000))
    proposer = MenuProposer({}, default=[])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    with pytest.raises(EmptyCandidateError):
        run_search(state, view, SearchConfig(), proposer, MidpointProjectionValue(), 1250000)


# ---------------------------------------------------------------------------
# Oracle equivalence: Q-ranking vs backward induction on tiny trees
# ---------------------------------------------------------------------------

def build_instance(rng, car_scenario):
    """A depth-2 game with <= 3 candidates per node and banded values.

    The cumulative Q update never forgets early backups, so ranking can
    only be expected to match induction when the spread of values inside
    one root arm's subtree is smaller than the gap between arms. Each root
    arm gets a value band [base, base + 0.1] with bases 0.3 apart; terminal
    values are drawn inside the owning arm's band, and the opponent's values
    are the exact negation, modeling the adversarial component of the
    role-swapped scoring.
    """
    state = make_state(car_scenario, [], (1125000, 1475000))
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=2)

    tick = 5000
    n_arms = rng.randint(2, 3)
    arm_prices = sorted(
        rng.sample([1300000 + i * tick for i in range(20)], n_arms)
    )
    bases = rng.sample([0.15, 0.45, 0.75], n_arms)
    bands = dict(zip(arm_prices, bases))

    menus = {((), Role.SELLER): arm_prices}

    def reply_menu():
        return sorted(rng.sample([1150000 + i * tick for i in range(20)], rng.randint(2, 3)))

    class LazyProposer(MenuProposer):
        def propose(self, st, role, k, reservation=None):
            key = (st.prices(), role)
            if key not in self.menus:
                self.menus[key] = reply_menu()
            return list(self.menus[key])[:k]

    values: dict = {}

    def reward_fn(st, sg, deal_price):
        key = (st.prices(), deal_price)
        if key not in values:
            base = bands[st.prices()[0]]
            v_seller = round(base + rng.uniform(0.0, 0.1), 6)
            values[key] = (v_seller, -v_seller)
        return values[key]

    return state, view, LazyProposer(menus), reward_fn


def backward_induction(state, view, proposer, reward_fn, k):
    """Exact per-role values under best-response play at every node."""
    if state.turns_used >= view.end_turn:
        return reward_fn(state, view, None)
    role = state.whose_turn
    options = []
    opp_standing = state.standing_offer(role.opponent)
    if opp_standing is not None:
        child = state.after_offer(role, opp_standing)
        options.append(reward_fn(child, view, opp_standing))
    for price in proposer.propose(state, role, k):
        child = state.after_offer(role, price)
        options.append(backward_induction(child, view, proposer, reward_fn, k))
    return max(options, key=lambda v: v[role.index])


def oracle_root_ranking(state, view, proposer, reward_fn, actions, k=3):
    """Root actions ranked by their backward-induction value for the mover,
    or None when two actions tie (ambiguous instance)."""
    values = {}
    for action in actions:
        kind, price = action
        child = state.after_offer(state.whose_turn, price)
        if kind == "accept":
            values[action] = reward_fn(child, view, price)
        else:
            values[action] = backward_induction(child, view, proposer, reward_fn, k)
    owner = state.whose_turn.index
    owner_vals = [values[a][owner] for a in actions]
    if len({round(v, 9) for v in owner_vals}) != len(owner_vals):
        return None
    return sorted(actions, key=lambda a: -values[a][owner])


def test_q_ranking_matches_backward_induction(car_scenario):
    rng = random.Random(123)
    checked = 0
    while checked < 10:
        state, view, proposer, reward_fn = build_instance(rng, car_scenario)
        config = SearchConfig(iterations=200, candidates_per_expansion=3)
        result = run_search(
            state, view, config, proposer,
            value_fn=lambda s, sg, r, res: 0.0,  # neutral: terminals carry the signal
            own_reservation=1250000,
            reward_fn=reward_fn,
        )
        oracle_ranking = oracle_root_ranking(
            state, view, proposer, reward_fn, result.actions
        )
        if oracle_ranking is None:
            continue
        assert oracle_ranking == result.ranking()
        checked += 1


def test_uniform_opponent_model_runs_deterministically(car_scenario):
    history = alternating_history(2)
    state = make_state(car_scenario, history, (1125000, 1475000))
    proposer = MenuProposer({}, default=[1400000, 1380000, 1360000])
    view = SubgameView(1125000, 1475000, (10000, 10000), end_turn=10)
    config = SearchConfig(iterations=25, opponent_model="uniform", seed=11)
    results = [
        run_search(state, view, config, proposer, MidpointProjectionValue(), 1250000)
        for _ in range(2)
    ]
    assert results[0].action == results[1].action
    assert results[0].root_q == results[1].root_q
    # a different seed may explore differently but still returns a candidate
    other = run_search(
        state, view, SearchConfig(iterations=25, opponent_model="uniform", seed=99),
        proposer, MidpointProjectionValue(), 1250000,
    )
    assert other.action in results[0].actions
