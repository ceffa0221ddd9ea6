"""Trainable state evaluator and its deterministic stand-in.

The evaluator maps a negotiation state to a scalar in (-1, 1): the expected
subgame reward from a given role's perspective. States are encoded as the
last W offers normalized against the evaluating role's reservation price,
with presence masks, a role indicator, and the fraction of scheduled turns
remaining. The network is a small tanh MLP fit by plain SGD on
mean-squared error; gradients are computed analytically and are checked
against finite differences in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .game import NegotiationState, Role, SubgameView

CHECKPOINT_VERSION = 1


class NonFiniteParameterError(ValueError):
    """Network parameters contain NaN or infinity."""


@dataclass(frozen=True)
class EncodingConfig:
    """Feature layout: 2*window offer slots (values then masks) plus role
    indicator and turns-remaining fraction."""

    window: int = 20
    scale: int = 250000
    total_turns: int = 16

    @property
    def dim(self) -> int:
        return 2 * self.window + 2


def encode_state(
    prices: Sequence[int], role: Role, reservation: int, cfg: EncodingConfig
) -> np.ndarray:
    """Encode an offer history for evaluation by ``role``.

    Only the last ``window`` offers are kept, most recent last; earlier
    slots are zero with mask zero. Offer values are (price - reservation) /
    scale, so the sign tells the evaluating role which side of its
    reservation an offer falls on.
    """
    w = cfg.window
    recent = list(prices)[-w:]
    values = np.zeros(w)
    masks = np.zeros(w)
    offset = w - len(recent)
    for i, price in enumerate(recent):
        values[offset + i] = (price - reservation) / cfg.scale
        masks[offset + i] = 1.0
    role_ind = 1.0 if role is Role.SELLER else -1.0
    remaining = max(0, cfg.total_turns - len(prices)) / cfg.total_turns
    return np.concatenate([values, masks, [role_ind, remaining]])


@dataclass
class NetworkConfig:
    hidden: tuple[int, ...] = (100, 80)
    seed: int = 0


class ValueNetwork:
    """Feed-forward evaluator, tanh throughout, scalar output in (-1, 1).

    Exposes a fit/predict surface: ``fit(X, y)`` runs SGD epochs on a fixed
    buffer, ``predict(X)`` evaluates a batch. Parameters live in
    ``self.weights``/``self.biases`` as float64 arrays.
    """

    def __init__(self, input_dim: int, config: NetworkConfig = NetworkConfig()) -> None:
        self.input_dim = input_dim
        self.config = config
        rng = np.random.default_rng(config.seed)
        sizes = [input_dim, *config.hidden, 1]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def _check_finite(self) -> None:
        for w, b in zip(self.weights, self.biases):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NonFiniteParameterError("network parameters are not finite")

    def _forward(self, X: np.ndarray) -> list[np.ndarray]:
        """All layer activations, input first, scalar output last."""
        activations = [X]
        a = X
        for w, b in zip(self.weights, self.biases):
            a = np.tanh(a @ w.T + b)
            activations.append(a)
        return activations

    def predict(self, X: np.ndarray) -> np.ndarray:
        self._check_finite()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} features, got {X.shape[1]}")
        return self._forward(X)[-1][:, 0]

    def value(self, x: np.ndarray) -> float:
        return float(self.predict(np.asarray(x, dtype=float)[None, :])[0])

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        pred = self.predict(X)
        return float(np.mean((pred - np.asarray(y, dtype=float)) ** 2))

    def loss_and_grads(
        self, X: np.ndarray, y: np.ndarray
    ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
        """Mean-squared-error loss and its analytic parameter gradients."""
        self._check_finite()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        acts = self._forward(X)
        out = acts[-1][:, 0]
        batch = X.shape[0]
        loss = float(np.mean((out - y) ** 2))

        delta = (2.0 * (out - y) / batch)[:, None] * (1.0 - acts[-1] ** 2)
        grad_w: list[Optional[np.ndarray]] = [None] * len(self.weights)
        grad_b: list[Optional[np.ndarray]] = [None] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            grad_w[layer] = delta.T @ acts[layer]
            grad_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer]) * (1.0 - acts[layer] ** 2)
        return loss, grad_w, grad_b

    def sgd_step(self, X: np.ndarray, y: np.ndarray, lr: float) -> float:
        loss, grad_w, grad_b = self.loss_and_grads(X, y)
        for w, b, gw, gb in zip(self.weights, self.biases, grad_w, grad_b):
            w -= lr * gw
            b -= lr * gb
        return loss

    def fit(
        self,
        X: np.ndarray,
        y: np.ndarray,
        epochs: int = 4,
        lr: float = 0.05,
        batch_size: int = 32,
        seed: int = 0,
    ) -> list[float]:
        """Run SGD epochs over a fixed buffer; returns the full-buffer loss
        measured after each epoch."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        rng = np.random.default_rng(seed)
        losses = []
        for _ in range(epochs):
            order = rng.permutation(len(X))
            for start in range(0, len(X), batch_size):
                idx = order[start : start + batch_size]
                self.sgd_step(X[idx], y[idx], lr)
            losses.append(self.loss(X, y))
        return losses

    def get_params(self) -> dict:
        return {"hidden": tuple(self.config.hidden), "seed": self.config.seed}

    def save(self, path: str | Path, encoding: EncodingConfig) -> None:
        payload = {
            "version": CHECKPOINT_VERSION,
            "input_dim": self.input_dim,
            "hidden": list(self.config.hidden),
            "seed": self.config.seed,
            "encoding": {
                "window": encoding.window,
                "scale": encoding.scale,
                "total_turns": encoding.total_turns,
            },
            "layers": [
                {"w": w.tolist(), "b": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path: str | Path) -> tuple["ValueNetwork", EncodingConfig]:
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {payload.get('version')}")
        enc = EncodingConfig(**payload["encoding"])
        net = cls(payload["input_dim"], NetworkConfig(tuple(payload["hidden"]), payload["seed"]))
        net.weights = [np.asarray(layer["w"], dtype=float) for layer in payload["layers"]]
        net.biases = [np.asarray(layer["b"], dtype=float) for layer in payload["layers"]]
        net._check_finite()
        return net, enc


class NetworkValue:
    """Adapter exposing a trained network as a search value function."""

    def __init__(self, network: ValueNetwork, encoding: EncodingConfig) -> None:
        self.network = network
        self.encoding = encoding

    def __call__(
        self, state: NegotiationState, subgame: SubgameView, role: Role, reservation: int
    ) -> float:
        x = encode_state(state.prices(), role, reservation, self.encoding)
        return self.network.value(x)


class MidpointProjectionValue:
    """Deterministic oracle: score the deal the standing offers project to.

    The counterpart is modeled as fairness-seeking: an ask at or below the
    subgame's egalitarian price gets accepted as-is (and symmetrically a bid
    at or above it), since the counterpart cannot hope to do better than the
    egalitarian split. While both positions still straddle the target, the
    parties are modeled as meeting halfway. Exact, fast, and the default
    evaluator when no trained checkpoint is supplied.
    """

    def __call__(
        self, state: NegotiationState, subgame: SubgameView, role: Role, reservation: int
    ) -> float:
        ask = state.standing_offer(Role.SELLER)
        bid = state.standing_offer(Role.BUYER)
        ask = subgame.clamp(ask) if ask is not None else subgame.upper
        bid = subgame.clamp(bid) if bid is not None else subgame.lower
        target = subgame.target_price
        if ask <= target:
            projected = ask
        elif bid >= target:
            projected = bid
        else:
            # Odd-cent midpoints round toward the target: the reward flips
            # sign exactly at the egalitarian price, and a half-cent floor
            # must not push a perfectly mirrored state over that cliff.
            lo_mid = (ask + bid) // 2
            hi_mid = lo_mid + ((ask + bid) & 1)
            projected = hi_mid if abs(hi_mid - target) < abs(lo_mid - target) else lo_mid
        return subgame.reward_for_deal(projected, role)
