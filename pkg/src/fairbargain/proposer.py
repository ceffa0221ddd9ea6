"""Candidate-offer proposers.

Two implementations of the same contract: a deterministic rule that emits
human-looking round-number offers, and a remote chat-completions client
that asks a language model for suggestions, caches replies per game state,
and falls back to the rule on any failure. Both return offers inside the
proposing role's legal band.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import httpx

from .game import NegotiationState, Role, target_price_for_belief
from .money import format_cents, snap_down, snap_to_tick, snap_up


class NoValidOfferError(ValueError):
    """The proposing role has no legal offer left (bounds are empty)."""


class OfferProposer(Protocol):
    deterministic: bool
    max_candidates: Optional[int]

    def propose(
        self, state: NegotiationState, role: Role, k: int, reservation: Optional[int] = None
    ) -> list[int]:
        """Return 1..k distinct offers inside the role's legal band."""
        ...


def _legal_band(
    state: NegotiationState, role: Role, reservation: int
) -> tuple[int, int]:
    """[low, high] the role may offer in: between the opponent's standing
    offer (clamped by the role's reservation) and the role's own standing
    position."""
    own_prev = state.standing_or_anchor(role)
    opp = state.standing_offer(role.opponent)
    if role is Role.SELLER:
        floor = max(opp, reservation) if opp is not None else reservation
        return floor, own_prev
    ceiling = min(opp, reservation) if opp is not None else reservation
    return own_prev, ceiling


@dataclass
class RuleBasedProposer:
    """Deterministic offline stand-in for a language-model offer policy.

    Offers are multiples of ``granularity`` between the role's time-paced
    concession floor and its standing position: an opening anchor, a few
    measured concession steps, then the fairness anchor (the egalitarian
    price of the advertised range), which the proposer never crosses. The
    candidate list always carries the role's hold, the mirror of the
    opponent's position around the current subgame target, and the target
    itself once the pace allows it. With k=1 the single offer is the plain
    midpoint of the standing positions, the classic split-the-difference
    move, floored at the fairness anchor.
    """

    granularity: int = 5000
    concession_turns: int = 3
    deterministic: bool = True
    max_candidates: Optional[int] = None

    def fairness_anchor(self, state: NegotiationState) -> int:
        """Egalitarian price of the advertised range: the game-level fair
        point this proposer will not cross before the endgame rule."""
        from .game import fairness_anchor_price

        return fairness_anchor_price(state.scenario, self.granularity)

    def concession_pace(self, state: NegotiationState, role: Role) -> int:
        """Time-paced position: linear from the role's advertised anchor to
        the fairness anchor across ``concession_turns`` own offers, pinned
        at the fairness anchor from then on.

        The pace is a rail, not just a bound: the first offer is the anchor
        itself and once the script arrives at the fair price the proposer
        only suggests that price. In between, candidates may sit anywhere
        between the pace and the previous position, so the value model
        still chooses how fast to come down.
        """
        anchor = state.anchor(role)
        fair = self.fairness_anchor(state)
        own_offers_made = sum(1 for r, _ in state.offer_history if r is role)
        steps = max(1, self.concession_turns - 1)
        frac = min(1.0, own_offers_made / steps)
        pace = anchor + (fair - anchor) * frac
        return snap_to_tick(int(pace), self.granularity)

    def propose(
        self, state: NegotiationState, role: Role, k: int, reservation: Optional[int] = None
    ) -> list[int]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if reservation is None:
            reservation = (
                state.scenario.floor if role is Role.SELLER else state.scenario.ceiling
            )
        low, high = _legal_band(state, role, reservation)
        if low > high:
            raise NoValidOfferError(
                f"{role.value} has no legal offer between {low} and {high}"
            )

        own_prev = state.standing_or_anchor(role)
        opp = state.standing_offer(role.opponent)
        if role is Role.SELLER:
            opp_base = max(opp, reservation) if opp is not None else reservation
        else:
            opp_base = min(opp, reservation) if opp is not None else reservation
        midpoint = (own_prev + opp_base) // 2
        fair = self.fairness_anchor(state)

        if k == 1:
            offer = snap_to_tick(midpoint, self.granularity)
            offer = max(offer, fair) if role is Role.SELLER else min(offer, fair)
            return [max(low, min(high, offer))]

        pace = self.concession_pace(state, role)
        # Candidate band: hold the previous position at one end; concede no
        # further than the pace or the fairness anchor. Once the pace hits
        # the fairness anchor the band collapses onto it: from there the
        # script holds the fair line and only the endgame rule concedes
        # past it. A position already ahead of the script is simply held,
        # never walked back.
        if role is Role.SELLER:
            band_lo = max(pace, fair, low)
            band_hi = min(own_prev, high)
            if pace <= fair:
                band_hi = band_lo
            if band_lo > band_hi:
                band_lo = band_hi = max(min(own_prev, high), low)
        else:
            band_hi = min(pace, fair, high)
            band_lo = max(own_prev, low)
            if pace >= fair:
                band_lo = band_hi
            if band_lo > band_hi:
                band_lo = band_hi = min(max(own_prev, low), high)

        hold = band_hi if role is Role.SELLER else band_lo
        concede = band_lo if role is Role.SELLER else band_hi

        offers: list[int] = [hold]
        target = target_price_for_belief(
            state.belief, state.scenario.problem.disagreement[:2]
        )
        opp_eff = opp if opp is not None else (
            state.belief.lower_anchor if role is Role.SELLER else state.belief.upper_anchor
        )
        opp_eff = max(state.belief.lower_anchor, min(state.belief.upper_anchor, opp_eff))
        mirror = snap_to_tick(2 * target - opp_eff, self.granularity)
        mirror = max(band_lo, min(band_hi, mirror))
        if mirror not in offers:
            offers.append(mirror)
        target_tick = snap_to_tick(target, self.granularity)
        if band_lo <= target_tick <= band_hi and target_tick not in offers:
            offers.append(target_tick)

        for i in range(k):
            if len(offers) >= k:
                break
            pos = hold + (concede - hold) * i // max(1, k - 1)
            snapped = snap_to_tick(pos, self.granularity)
            snapped = max(band_lo, min(band_hi, snapped))
            if snapped not in offers:
                offers.append(snapped)
        return offers[:k]


_AMOUNT_RE = re.compile(
    r"""
    \$\s?(?P<dollar>\d{1,3}(?:,\d{3})*(?:\.\d+)?|\d+(?:\.\d+)?)\s?(?P<dk>[kK]\b)?
    | \b(?P<bare_k>\d+(?:,\d{3})*(?:\.\d+)?)(?P<bk>[kK])\b
    | \b(?P<grouped>\d{1,3}(?:,\d{3})+(?:\.\d{2})?)\b
    | \b(?P<plain>\d{3,}(?:\.\d{2})?)\b
    """,
    re.VERBOSE,
)


def parse_offers(text: str) -> list[int]:
    """Extract dollar amounts from free text as integer cents.

    Understands $13,250, 13250, $13k, 13.25k and cent-bearing forms like
    $13,000.50. Duplicates are dropped, first-seen order is kept; no
    amounts at all is a normal empty result.
    """
    found: list[int] = []
    for m in _AMOUNT_RE.finditer(text):
        if m.group("dollar") is not None:
            number, k_suffix = m.group("dollar"), m.group("dk")
        elif m.group("bare_k") is not None:
            number, k_suffix = m.group("bare_k"), m.group("bk")
        elif m.group("grouped") is not None:
            number, k_suffix = m.group("grouped"), None
        else:
            number, k_suffix = m.group("plain"), None
        value = float(number.replace(",", ""))
        if k_suffix:
            value *= 1000
        cents = int(round(value * 100))
        if cents > 0 and cents not in found:
            found.append(cents)
    return found


@dataclass(frozen=True)
class RemoteModelConfig:
    """Connection settings for a chat-completions endpoint."""

    base_url: str
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    timeout: float = 20.0
    api_key_env: str = "FAIRBARGAIN_API_KEY"
    max_retries: int = 2


DEFAULT_SYSTEM_TEMPLATE = (
    "You are negotiating the price of an item as the {role}. "
    "The advertised price range is {range_low} to {range_high}. "
    "Your private reservation price is {reservation}; never cross it. "
    "Suggest realistic round-number prices a person would offer."
)

DEFAULT_USER_TEMPLATE = (
    "Offer history (alternating, most recent last): {history}. "
    "Your last offer: {own_prev}. The other party's last offer: {opp_prev}. "
    "Suggest {k} good prices you could offer next, as dollar amounts."
)


class RemoteProposer:
    """Chat-completions-backed proposer with caching and rule fallback.

    One request per unique game state: replies are cached by a fingerprint
    of the state view, concurrent calls for the same fingerprint coalesce
    into a single request, and any transport or parse failure falls back to
    the rule-based proposer (recorded in ``fallback_count``).
    """

    deterministic = True  # temperature 0 plus caching
    max_candidates = None

    def __init__(
        self,
        config: RemoteModelConfig,
        fallback: Optional[RuleBasedProposer] = None,
        cache_path: Optional[str | Path] = None,
        system_template: str = DEFAULT_SYSTEM_TEMPLATE,
        user_template: str = DEFAULT_USER_TEMPLATE,
    ) -> None:
        self.config = config
        self.fallback = fallback or RuleBasedProposer()
        self.cache_path = Path(cache_path) if cache_path else None
        self.system_template = system_template
        self.user_template = user_template
        self._cache: dict[str, list[int]] = {}
        self._lock = threading.Lock()
        self._in_flight: dict[str, threading.Event] = {}
        self.request_count = 0
        self.fallback_count = 0
        self.dropped_offer_count = 0
        if self.cache_path and self.cache_path.exists():
            self._load_cache()

    def _load_cache(self) -> None:
        with open(self.cache_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._cache[record["fingerprint"]] = list(record["offers"])

    def _persist(self, fingerprint: str, offers: list[int]) -> None:
        if not self.cache_path:
            return
        with open(self.cache_path, "a") as fh:
            fh.write(json.dumps({"fingerprint": fingerprint, "offers": offers}) + "\n")

    def fingerprint(
        self, state: NegotiationState, role: Role, k: int, reservation: int
    ) -> str:
        view = {
            "history": [[r.value, p] for r, p in state.offer_history],
            "role": role.value,
            "k": k,
            "reservation": reservation,
            "belief": [state.belief.lower_anchor, state.belief.upper_anchor],
            "scenario": state.scenario.name,
            "model": self.config.model,
        }
        blob = json.dumps(view, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def propose(
        self, state: NegotiationState, role: Role, k: int, reservation: Optional[int] = None
    ) -> list[int]:
        if reservation is None:
            reservation = (
                state.scenario.floor if role is Role.SELLER else state.scenario.ceiling
            )
        fp = self.fingerprint(state, role, k, reservation)

        while True:
            with self._lock:
                if fp in self._cache:
                    return list(self._cache[fp])
                event = self._in_flight.get(fp)
                if event is None:
                    event = threading.Event()
                    self._in_flight[fp] = event
                    break
            event.wait()

        offers: Optional[list[int]] = None
        try:
            offers = self._fetch(state, role, k, reservation)
            return list(offers)
        finally:
            with self._lock:
                if offers is not None:
                    self._cache[fp] = offers
                self._in_flight.pop(fp, None)
                event.set()
            if offers is not None:
                self._persist(fp, offers)

    def _fetch(self, state: NegotiationState, role: Role, k: int, reservation: int) -> list[int]:
        text = None
        for _ in range(self.config.max_retries + 1):
            try:
                text = self._request(state, role, k, reservation)
                break
            except (httpx.HTTPError, KeyError, ValueError):
                continue
        if text is None:
            self.fallback_count += 1
            return self.fallback.propose(state, role, k, reservation=reservation)

        parsed = parse_offers(text)
        low, high = _legal_band(state, role, reservation)
        offers = [p for p in parsed if low <= p <= high]
        self.dropped_offer_count += len(parsed) - len(offers)
        if not offers:
            self.fallback_count += 1
            return self.fallback.propose(state, role, k, reservation=reservation)
        return offers[:k]

    def _request(self, state: NegotiationState, role: Role, k: int, reservation: int) -> str:
        lo, hi = state.scenario.initial_price_range
        system = self.system_template.format(
            role=role.value,
            range_low=format_cents(lo),
            range_high=format_cents(hi),
            reservation=format_cents(reservation),
        )
        opp = state.standing_offer(role.opponent)
        user = self.user_template.format(
            history=", ".join(format_cents(p) for p in state.prices()) or "none",
            own_prev=format_cents(state.standing_or_anchor(role)),
            opp_prev=format_cents(opp) if opp is not None else "none",
            k=k,
        )
        return self.chat(system, user)

    def chat(self, system: str, user: str) -> str:
        """One chat-completions round trip; shared by proposing and text
        realization."""
        headers = {}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.request_count += 1
        response = httpx.post(
            f"{self.config.base_url.rstrip('/')}/v1/chat/completions",
            json={
                "model": self.config.model,
                "temperature": self.config.temperature,
                "messages": [
                    {"role": "system", "content": system},
                    {"role": "user", "content": user},
                ],
            },
            headers=headers,
            timeout=self.config.timeout,
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]
