"""Self-play training for the value network.

The network learns from depth-limited subgames in the style of fictitious
self-play: each move is, with equal probability, the best-response move
from the value-guided search or the average-strategy move (the proposer's
single split-the-difference suggestion). Every state visited in a subgame
is labeled with the subgame's terminal reward from both seats'
perspectives, and the network is fit by SGD on mean-squared error after
each batch of games.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .agent import NegotiationAgent
from .core import Scenario
from .game import (
    ActKind,
    NO_COUNTEROFFER,
    NegotiationState,
    Role,
    SubgameSchedule,
    SubgameView,
    belief_for,
    counteroffer,
    fairness_anchor_price,
    subgame_for,
)
from .money import snap_to_tick
from .proposer import RuleBasedProposer
from .search import SearchConfig
from .value_model import (
    EncodingConfig,
    NetworkConfig,
    NetworkValue,
    ValueNetwork,
    encode_state,
)


class DivergenceError(RuntimeError):
    """Training loss became non-finite; aborted with a partial report."""


@dataclass
class TrainingConfig:
    outer_iterations: int = 4
    games_per_iteration: int = 50
    epochs: int = 4
    best_response_prob: float = 0.5
    learning_rate: float = 0.05
    batch_size: int = 32
    seed: int = 0
    search_iterations: int = 50
    c_p: float = 2.0
    hidden: tuple[int, ...] = (100, 80)
    window: int = 20
    scale: int = 250000

    def __post_init__(self) -> None:
        if not 0 <= self.best_response_prob <= 1:
            raise ValueError("best_response_prob must be in [0, 1]")
        for name in ("outer_iterations", "games_per_iteration", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class IterationReport:
    iteration: int
    games: int
    samples: int
    buffer_loss: float  # on the assembled buffer, before this iteration's epochs
    mean_loss: float
    final_loss: float
    ebs_convergence: float


@dataclass
class TrainingReport:
    iterations: list[IterationReport] = field(default_factory=list)

    @property
    def total_games(self) -> int:
        return sum(r.games for r in self.iterations)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "games", "samples", "buffer_loss", "mean_loss", "final_loss", "ebs_convergence"]
            )
            for r in self.iterations:
                writer.writerow(
                    [
                        r.iteration,
                        r.games,
                        r.samples,
                        f"{r.buffer_loss:.6f}",
                        f"{r.mean_loss:.6f}",
                        f"{r.final_loss:.6f}",
                        f"{r.ebs_convergence:.4f}",
                    ]
                )


def _synthesize_prefix(
    scenario: Scenario, schedule: SubgameSchedule, stage: int, rng: random.Random
) -> tuple[tuple[Role, int], ...]:
    """An alternating offer history that ends exactly at a stage boundary.

    Standings at the boundary are sampled on the offer grid, seller at or
    above the fairness anchor and buyer at or below it, with earlier offers
    ramping linearly from the advertised anchors. This covers the stage
    roots the agent actually encounters without replaying whole games.
    """
    if stage == 0:
        return ()
    turns = schedule.stage_start(stage)
    lo, hi = scenario.initial_price_range
    anchor = fairness_anchor_price(scenario)
    tick = 5000
    ask = rng.randrange(anchor, hi + tick, tick)
    bid = rng.randrange(lo, anchor + tick, tick)
    n_each = turns // 2
    history: list[tuple[Role, int]] = []
    for i in range(n_each):
        frac = i / max(1, n_each - 1)
        s_price = int(hi + (ask - hi) * frac)
        b_price = int(lo + (bid - lo) * frac)
        history.append((Role.SELLER, snap_to_tick(s_price, tick)))
        history.append((Role.BUYER, snap_to_tick(b_price, tick)))
    history[-2] = (Role.SELLER, ask)
    history[-1] = (Role.BUYER, bid)
    return tuple(history)


@dataclass
class SubgameRecord:
    """One training subgame: labeled samples plus its terminal facts."""

    samples: list[tuple[np.ndarray, float]]
    converged: bool
    deal_price: Optional[int]
    final_ask: Optional[int]
    final_bid: Optional[int]
    view: SubgameView
    rewards: dict[Role, float]


def play_training_subgame(
    scenario: Scenario,
    schedule: SubgameSchedule,
    stage: int,
    agents: dict[Role, NegotiationAgent],
    proposer: RuleBasedProposer,
    cfg: TrainingConfig,
    rng: random.Random,
) -> SubgameRecord:
    """Play one subgame with the mixed policy and label its states.

    Samples are (features, reward) rows from both seats' perspectives;
    ``converged`` says whether the outcome price landed within one offer
    tick of the subgame's egalitarian price.
    """
    history = _synthesize_prefix(scenario, schedule, stage, rng)
    enc = EncodingConfig(window=cfg.window, scale=cfg.scale, total_turns=schedule.total_turns)
    reservations = {Role.SELLER: scenario.floor, Role.BUYER: scenario.ceiling}

    root_state = NegotiationState(
        offer_history=history,
        whose_turn=Role.SELLER,
        belief=belief_for(history, Role.SELLER, scenario, schedule),
        scenario=scenario,
    )
    view = subgame_for(root_state, Role.SELLER, schedule)
    end_turn = view.end_turn

    visited: list[tuple[tuple[int, ...], int]] = [(root_state.prices(), len(history))]
    deal_price: Optional[int] = None
    turn = Role.SELLER
    while len(history) < end_turn:
        agent = agents[turn]
        if rng.random() < cfg.best_response_prob:
            act = agent.respond(history).act
        else:
            state = agent.state_for(history)
            act = counteroffer(proposer.propose(state, turn, 1)[0])
        if act.kind is ActKind.ACCEPT:
            standing = _last_offer(history, turn.opponent)
            if standing is not None:
                deal_price = standing
                break
            act = NO_COUNTEROFFER
        if act.kind is ActKind.COUNTEROFFER:
            history = history + ((turn, act.price),)
        else:
            prev = _last_offer(history, turn)
            if prev is None:
                lo, hi = scenario.initial_price_range
                prev = hi if turn is Role.SELLER else lo
            history = history + ((turn, prev),)
        visited.append((tuple(p for _, p in history), len(history)))
        turn = turn.opponent

    if deal_price is not None:
        rewards = {
            role: view.reward_for_deal(deal_price, role) for role in Role
        }
        outcome_price = deal_price
    else:
        ask = _last_offer(history, Role.SELLER)
        bid = _last_offer(history, Role.BUYER)
        rewards = {
            role: view.reward_for_standing(ask, bid, role) for role in Role
        }
        outcome_price = ask if (ask is not None and bid is not None and ask <= bid) else None

    samples = []
    for prices, turns_used in visited:
        for role in Role:
            x = encode_state(prices, role, reservations[role], enc)
            samples.append((x, rewards[role]))
    converged = outcome_price is not None and abs(outcome_price - view.target_price) <= 5000
    return SubgameRecord(
        samples=samples,
        converged=converged,
        deal_price=deal_price,
        final_ask=_last_offer(history, Role.SELLER),
        final_bid=_last_offer(history, Role.BUYER),
        view=view,
        rewards=rewards,
    )


def _last_offer(history, role: Role) -> Optional[int]:
    out = None
    for r, price in history:
        if r is role:
            out = price
    return out


def train(
    scenario: Scenario,
    cfg: TrainingConfig = TrainingConfig(),
    proposer: Optional[RuleBasedProposer] = None,
    schedule: Optional[SubgameSchedule] = None,
) -> tuple[ValueNetwork, EncodingConfig, TrainingReport]:
    """Fictitious self-play training loop.

    Every outer iteration plays ``games_per_iteration`` subgames (stages
    cycle 0, 1, 2, ...) with the mixed best-response/average policy, then
    fits the network for ``epochs`` passes on that iteration's buffer.
    Deterministic for a fixed config.
    """
    proposer = proposer or RuleBasedProposer()
    schedule = schedule or SubgameSchedule()
    enc = EncodingConfig(window=cfg.window, scale=cfg.scale, total_turns=schedule.total_turns)
    network = ValueNetwork(enc.dim, NetworkConfig(hidden=cfg.hidden, seed=cfg.seed))
    value_fn = NetworkValue(network, enc)
    rng = random.Random(cfg.seed)
    report = TrainingReport()

    search_config = SearchConfig(
        iterations=cfg.search_iterations, c_p=cfg.c_p, seed=cfg.seed
    )
    agents = {
        role: NegotiationAgent(
            scenario,
            role,
            proposer=proposer,
            value_fn=value_fn,
            schedule=schedule,
            search_config=search_config,
        )
        for role in Role
    }

    n_stages = len(schedule.lengths)
    features: list[np.ndarray] = []
    labels: list[float] = []
    for iteration in range(cfg.outer_iterations):
        converged_count = 0
        new_samples = 0
        for game_idx in range(cfg.games_per_iteration):
            stage = game_idx % n_stages
            record = play_training_subgame(
                scenario, schedule, stage, agents, proposer, cfg, rng
            )
            converged_count += int(record.converged)
            new_samples += len(record.samples)
            for x, y_val in record.samples:
                features.append(x)
                labels.append(y_val)
        # The buffer accumulates across iterations: the 200 generated games
        # form one growing training set the network keeps fitting.
        X = np.stack(features)
        y = np.asarray(labels)
        buffer_loss = network.loss(X, y)
        epoch_losses = network.fit(
            X, y, epochs=cfg.epochs, lr=cfg.learning_rate,
            batch_size=cfg.batch_size, seed=cfg.seed + iteration,
        )
        if not all(np.isfinite(epoch_losses)) or not np.isfinite(buffer_loss):
            raise DivergenceError(
                f"loss diverged in iteration {iteration}: {epoch_losses}"
            )
        report.iterations.append(
            IterationReport(
                iteration=iteration,
                games=cfg.games_per_iteration,
                samples=new_samples,
                buffer_loss=float(buffer_loss),
                mean_loss=float(np.mean(epoch_losses)),
                final_loss=float(epoch_losses[-1]),
                ebs_convergence=converged_count / cfg.games_per_iteration,
            )
        )
    return network, enc, report


def greedy_selfplay_deals(
    scenario: Scenario,
    network: ValueNetwork,
    enc: EncodingConfig,
    n_games: int,
    seed: int,
    schedule: Optional[SubgameSchedule] = None,
    search_iterations: int = 10,
) -> list[Optional[int]]:
    """Deal prices from pure best-response self-play with the trained net."""
    from .arena import AgentParty, play_game

    schedule = schedule or SubgameSchedule()
    value_fn = NetworkValue(network, enc)
    prices = []
    for i in range(n_games):
        game_seed = seed * 7919 + i
        def party(role):
            return AgentParty(
                NegotiationAgent(
                    scenario,
                    role,
                    value_fn=value_fn,
                    schedule=schedule,
                    search_config=SearchConfig(iterations=search_iterations, seed=game_seed),
                )
            )
        price, _ = play_game(party(Role.SELLER), party(Role.BUYER), scenario)
        prices.append(price)
    return prices
