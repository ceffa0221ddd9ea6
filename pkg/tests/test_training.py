import random

import numpy as np
import pytest

from fairbargain.agent import NegotiationAgent
from fairbargain.game import Role, SubgameSchedule
from fairbargain.proposer import RuleBasedProposer
from fairbargain.search import SearchConfig
from fairbargain.training import (
    TrainingConfig,
    greedy_selfplay_deals,
    play_training_subgame,
    train,
)
from fairbargain.value_model import NetworkValue


def small_config(**overrides):
    base = dict(
        outer_iterations=2,
        games_per_iteration=6,
        epochs=2,
        search_iterations=6,
        seed=3,
    )
    base.update(overrides)
    return TrainingConfig(**base)


def test_default_config_matches_shipped_settings():
    cfg = TrainingConfig()
    assert cfg.outer_iterations == 4
    assert cfg.games_per_iteration == 50
    assert cfg.epochs == 4
    assert cfg.best_response_prob == 0.5
    assert cfg.search_iterations == 50
    assert cfg.c_p == 2.0


def test_game_count(car_scenario):
    _, _, report = train(car_scenario, small_config())
    assert report.total_games == 12


def test_training_deterministic(car_scenario):
    nets = [train(car_scenario, small_config())[0] for _ in range(2)]
    for w1, w2 in zip(nets[0].weights, nets[1].weights):
        assert np.array_equal(w1, w2)
    for b1, b2 in zip(nets[0].biases, nets[1].biases):
        assert np.array_equal(b1, b2)


def test_buffer_loss_decreases(car_scenario):
    _, _, report = train(car_scenario, small_config(outer_iterations=3))
    losses = [r.buffer_loss for r in report.iterations]
    assert losses[-1] < losses[0]


def test_report_csv(car_scenario, tmp_path):
    _, _, report = train(car_scenario, small_config())
    path = tmp_path / "report.csv"
    report.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("iteration,games,samples,buffer_loss,mean_loss")
    assert len(lines) == 3


def test_labels_valid_and_recomputable(car_scenario):
    schedule = SubgameSchedule()
    proposer = RuleBasedProposer()
    cfg = small_config()
    agents = {
        role: NegotiationAgent(
            car_scenario,
            role,
            proposer=proposer,
            schedule=schedule,
            search_config=SearchConfig(iterations=6, seed=1),
        )
        for role in Role
    }
    rng = random.Random(5)
    for stage in (0, 1, 2):
        record = play_training_subgame(
            car_scenario, schedule, stage, agents, proposer, cfg, rng
        )
        labels = [y for _, y in record.samples]
        assert all(-1.0 <= y <= 1.0 for y in labels)
        # the labels are exactly the terminal reward, recomputable from the
        # subgame view and the recorded terminal facts
        if record.deal_price is not None:
            expected = {
                role: record.view.reward_for_deal(record.deal_price, role)
                for role in Role
            }
        else:
            expected = {
                role: record.view.reward_for_standing(
                    record.final_ask, record.final_bid, role
                )
                for role in Role
            }
        assert record.rewards == expected
        seller_labels = labels[0::2]
        buyer_labels = labels[1::2]
        assert all(y == expected[Role.SELLER] for y in seller_labels)
        assert all(y == expected[Role.BUYER] for y in buyer_labels)


def test_greedy_selfplay_converges(car_scenario):
    net, enc, _ = train(car_scenario, small_config())
    deals = greedy_selfplay_deals(car_scenario, net, enc, 5, seed=2)
    assert all(p is not None and abs(p - 1300000) <= 5000 for p in deals)


def test_trained_net_is_usable_value_fn(car_scenario):
    net, enc, _ = train(car_scenario, small_config())
    agent = NegotiationAgent(
        car_scenario, Role.SELLER, value_fn=NetworkValue(net, enc)
    )
    action = agent.respond(())
    assert action.act.price == 1475000


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        TrainingConfig(best_response_prob=1.5)
    with pytest.raises(ValueError):
        TrainingConfig(games_per_iteration=0)
