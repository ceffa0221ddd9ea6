"""Opponent zoo, tournament simulation, fairness scoring, and reports.

Scripted opponents play through the same dialogue-act interface as the
agent, so every matchup (agent vs script, script vs script, agent vs agent)
runs through one loop. Games are independent and deterministic given the
batch seed, which makes parallel execution byte-stable.
"""

from __future__ import annotations

import csv
import json
import random
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

from .agent import NegotiationAgent
from .core import Scenario
from .game import ACCEPT, ActKind, DialogueAct, Role, counteroffer
from .money import snap_to_tick


class NoDealInputError(ValueError):
    """fairness() needs a deal; no-deal results are reported separately."""


@dataclass(frozen=True)
class DealResult:
    """Terminal outcome of one simulated negotiation."""

    game_id: int
    seed: int
    opponent: str
    deal_price: Optional[int]
    payoffs: tuple[int, int]
    fairness: Optional[float]
    turns: int
    error: Optional[str] = None

    @property
    def no_deal(self) -> bool:
        return self.deal_price is None


def fairness(deal_price: int, problem) -> float:
    """Negated payoff gap, normalized so a fully one-sided deal scores -1.

    Equivalent to the deal price's distance from the egalitarian price over
    half the surplus: zero at the egalitarian outcome, -1 when one side
    captures everything. Clamped to [-1, 0] for prices at the reservations.
    """
    if deal_price is None:
        raise NoDealInputError("fairness is only defined for deals")
    u_seller = deal_price - problem.price_floor
    u_buyer = problem.price_ceiling - deal_price
    return max(-1.0, -abs(u_buyer - u_seller) / max(1.0, problem.surplus))


class Party(Protocol):
    """One side of a simulated negotiation."""

    name: str
    role: Role

    def respond(self, history: tuple[tuple[Role, int], ...]) -> DialogueAct:
        ...


@dataclass
class AgentParty:
    """Wraps the search agent as a tournament party."""

    agent: NegotiationAgent
    name: str = "agent"

    @property
    def role(self) -> Role:
        return self.agent.role

    def respond(self, history) -> DialogueAct:
        return self.agent.respond(history).act


@dataclass
class SplitDifferencePolicy:
    """Counter at the snapped midpoint of the standing offers, capped at an
    acceptance threshold on the policy's own side; accept anything at or
    beyond the threshold. Opens at a configured anchor.
    """

    role: Role
    scenario: Scenario
    threshold: int
    anchor: int
    granularity: int = 5000
    name: str = "split_difference"

    def respond(self, history) -> DialogueAct:
        own = _standing(history, self.role)
        opp = _standing(history, self.role.opponent)
        if opp is not None:
            if self.role is Role.BUYER and opp <= self.threshold:
                return ACCEPT
            if self.role is Role.SELLER and opp >= self.threshold:
                return ACCEPT
        if own is None and opp is None:
            return counteroffer(self.anchor)
        base_own = own if own is not None else self.anchor
        base_opp = opp if opp is not None else self.anchor
        mid = snap_to_tick((base_own + base_opp) // 2, self.granularity)
        if self.role is Role.BUYER:
            price = min(mid, self.threshold, self.scenario.ceiling)
            if own is not None:
                price = max(price, own)
        else:
            price = max(mid, self.threshold, self.scenario.floor)
            if own is not None:
                price = min(price, own)
        return counteroffer(price)


@dataclass
class StingyPolicy:
    """Buyer that insists on retaining a fraction p of its estimated surplus.

    The limit price is reservation minus p times the current estimate; the
    initial estimate spans minimum market price to reservation, and each of
    the bot's turns re-estimates from its own previous limit. It accepts
    any seller offer at or under the limit and otherwise bids the limit.
    """

    p: float
    scenario: Scenario
    min_market: Optional[int] = None
    name: str = "stingy"
    role: Role = Role.BUYER
    _limit: Optional[int] = field(default=None, repr=False)
    limit_trace: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.p < 1:
            raise ValueError("retained fraction p must be in (0, 1)")
        if self.role is not Role.BUYER:
            raise ValueError("the stingy policy is defined for the buyer role")
        if self.min_market is None:
            self.min_market = self.scenario.min_market_price or self.scenario.initial_price_range[0]
        self.name = f"stingy_{self.p:g}"

    @property
    def reservation(self) -> int:
        return self.scenario.ceiling

    def current_limit(self) -> int:
        if self._limit is None:
            estimate = max(0, self.reservation - self.min_market)
        else:
            estimate = max(0, self.reservation - self._limit)
        return self.reservation - int(round(self.p * estimate))

    def respond(self, history) -> DialogueAct:
        limit = self.current_limit()
        self._limit = limit
        self.limit_trace.append(limit)
        opp = _standing(history, Role.SELLER)
        if opp is not None and opp <= limit:
            return ACCEPT
        return counteroffer(min(limit, self.reservation))


def _standing(history, role: Role) -> Optional[int]:
    out = None
    for r, price in history:
        if r is role:
            out = price
    return out


def make_opponent(spec: str, scenario: Scenario, role: Role, rng: random.Random):
    """Build a zoo opponent from its CLI-style descriptor.

    ``split`` and ``stingy:<p>`` are the scripted zoo; per-game seeds jitter
    the opening anchors by a few ticks so batches are not one repeated game.
    """
    tick = 5000
    jitter = rng.randint(-4, 4) * tick
    if spec == "split":
        fair = snap_to_tick(
            (scenario.initial_price_range[0] + scenario.initial_price_range[1]) // 2, tick
        )
        anchor = (
            scenario.initial_price_range[0] + abs(jitter)
            if role is Role.BUYER
            else scenario.initial_price_range[1] - abs(jitter)
        )
        return SplitDifferencePolicy(
            role=role, scenario=scenario, threshold=fair, anchor=anchor
        )
    if spec.startswith("stingy"):
        _, _, frac = spec.partition(":")
        p = float(frac) if frac else 0.8
        base = scenario.min_market_price or scenario.initial_price_range[0]
        return StingyPolicy(p=p, scenario=scenario, min_market=base + jitter)
    raise ValueError(f"unknown opponent spec: {spec!r}")


def play_game(
    seller: Party,
    buyer: Party,
    scenario: Scenario,
    turn_cap: int = 30,
) -> tuple[Optional[int], int]:
    """Run one negotiation to completion; seller speaks first.

    Returns (deal price or None, turns used). An accept closes at the
    opponent's standing offer; hitting the turn cap records no-deal.
    """
    history: tuple[tuple[Role, int], ...] = ()
    parties = {Role.SELLER: seller, Role.BUYER: buyer}
    turn_role = Role.SELLER
    for _ in range(turn_cap):
        act = parties[turn_role].respond(history)
        if act.kind is ActKind.ACCEPT:
            standing = _standing(history, turn_role.opponent)
            if standing is not None:
                return standing, len(history)
            act = DialogueAct(ActKind.NO_COUNTEROFFER)
        if act.kind is ActKind.COUNTEROFFER:
            history = history + ((turn_role, act.price),)
        else:
            prev = _standing(history, turn_role)
            if prev is None:
                lo, hi = scenario.initial_price_range
                prev = hi if turn_role is Role.SELLER else lo
            history = history + ((turn_role, prev),)
        turn_role = turn_role.opponent
    return None, len(history)


def simulate(
    seller_factory,
    buyer_factory,
    scenario: Scenario,
    n_games: int,
    seed: int,
    opponent_name: str = "",
    turn_cap: int = 30,
) -> list[DealResult]:
    """Run ``n_games`` independent games with per-game derived seeds.

    Factories receive a per-game Random and build fresh parties, so policy
    state never leaks between games and results are reproducible from
    (configs, seed) alone. Per-game faults become error rows, not aborts.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    results = []
    for game_id in range(n_games):
        game_seed = seed * 1_000_003 + game_id
        rng = random.Random(game_seed)
        try:
            seller = seller_factory(rng)
            buyer = buyer_factory(rng)
            price, turns = play_game(seller, buyer, scenario, turn_cap=turn_cap)
            if price is None:
                payoffs = tuple(scenario.problem.disagreement)
                fair = None
            else:
                payoffs = (price - scenario.floor, scenario.ceiling - price)
                fair = fairness(price, scenario.problem)
            results.append(
                DealResult(
                    game_id=game_id,
                    seed=game_seed,
                    opponent=opponent_name,
                    deal_price=price,
                    payoffs=payoffs,
                    fairness=fair,
                    turns=turns,
                )
            )
        except Exception as exc:
            results.append(
                DealResult(
                    game_id=game_id,
                    seed=game_seed,
                    opponent=opponent_name,
                    deal_price=None,
                    payoffs=tuple(scenario.problem.disagreement),
                    fairness=None,
                    turns=0,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
    return results


def summarize(results: list[DealResult], scenario: Scenario) -> dict:
    deals = [r for r in results if not r.no_deal]
    fair_values = [r.fairness for r in deals]
    prices = [r.deal_price for r in deals]
    summary = {
        "games": len(results),
        "deals": len(deals),
        "deal_rate": len(deals) / len(results) if results else 0.0,
        "errors": sum(1 for r in results if r.error),
        "mean_deal_price_cents": statistics.fmean(prices) if prices else None,
        "sd_deal_price_cents": statistics.pstdev(prices) if len(prices) > 1 else 0.0 if prices else None,
        "mean_fairness": statistics.fmean(fair_values) if fair_values else None,
        "sd_fairness": statistics.pstdev(fair_values) if len(fair_values) > 1 else 0.0 if fair_values else None,
        "median_fairness": statistics.median(fair_values) if fair_values else None,
    }
    return summary


def histogram(results: list[DealResult], scenario: Scenario, bin_cents: int = 10000) -> list[dict]:
    """Deal-price frequencies binned over [floor, ceiling]; the top edge is
    inclusive so ceiling-price deals are counted."""
    lo, hi = scenario.floor, scenario.ceiling
    bins = []
    edge = lo
    while edge < hi:
        bins.append({"low_cents": edge, "high_cents": min(edge + bin_cents, hi), "count": 0})
        edge += bin_cents
    for r in results:
        if r.no_deal:
            continue
        idx = min((r.deal_price - lo) // bin_cents, len(bins) - 1)
        if 0 <= idx < len(bins):
            bins[idx]["count"] += 1
    return bins


def write_report(
    results: list[DealResult],
    scenario: Scenario,
    out_dir: str | Path,
    prefix: str = "results",
) -> dict[str, Path]:
    """Emit the per-game CSV, summary JSON, and histogram CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "results": out_dir / f"{prefix}.csv",
        "summary": out_dir / f"{prefix}_summary.json",
        "histogram": out_dir / f"{prefix}_histogram.csv",
    }
    with open(paths["results"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["game_id", "seed", "opponent", "deal_price_cents", "fairness", "turns", "no_deal", "error"]
        )
        for r in results:
            writer.writerow(
                [
                    r.game_id,
                    r.seed,
                    r.opponent,
                    r.deal_price if r.deal_price is not None else "",
                    f"{r.fairness:.6f}" if r.fairness is not None else "",
                    r.turns,
                    int(r.no_deal),
                    r.error or "",
                ]
            )
    with open(paths["summary"], "w") as fh:
        json.dump(summarize(results, scenario), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths["histogram"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["low_cents", "high_cents", "count"])
        for b in histogram(results, scenario):
            writer.writerow([b["low_cents"], b["high_cents"], b["count"]])
    return paths
