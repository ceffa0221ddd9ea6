"""Operator command line: train, simulate, play, serve.

Defaults reproduce the shipped settings (schedule 10/4/2, ten search
iterations at inference, exploration 2.0, four training iterations of
fifty games), so reproduction runs need no flags beyond a seed. Exit
codes: 0 success, 2 usage errors, 3 runtime faults.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import arena
from .agent import MessageEnvelope, NegotiationAgent, extract_act, realize
from .arena import AgentParty, DealResult, make_opponent, play_game, simulate, write_report
from .core import Scenario, get_scenario
from .game import ActKind, NegotiationState, Role, SubgameSchedule, belief_for
from .money import format_cents
from .proposer import RemoteModelConfig, RemoteProposer, RuleBasedProposer
from .search import SearchConfig
from .training import TrainingConfig, train
from .value_model import NetworkValue, ValueNetwork

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairbargain", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="used_car", help="built-in name or JSON path")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="./out", help="output directory")
    common.add_argument("--schedule", default="10,4,2", help="stage lengths, comma separated")
    common.add_argument("--search-iterations", type=int, default=10)
    common.add_argument("--c-p", type=float, default=2.0, dest="c_p")
    common.add_argument("--candidates", type=int, default=5, help="proposer offers per expansion")
    common.add_argument("--proposer", choices=["rule", "remote"], default="rule")
    common.add_argument("--remote-base-url", default=None)
    common.add_argument("--remote-model", default="gpt-3.5-turbo")
    common.add_argument("--api-key-env", default="FAIRBARGAIN_API_KEY")
    common.add_argument("--checkpoint", default=None, help="value model checkpoint JSON")
    common.add_argument("--search-trace", default=None, help="JSONL file for per-iteration search traces")

    p_train = sub.add_parser("train", parents=[common], help="self-play train the value model")
    p_train.add_argument("--outer-iterations", type=int, default=4)
    p_train.add_argument("--games", type=int, default=50, help="subgames per iteration")
    p_train.add_argument("--epochs", type=int, default=4)
    p_train.add_argument("--lr", type=float, default=0.05)
    p_train.add_argument("--train-search-iterations", type=int, default=50)

    p_sim = sub.add_parser("simulate", parents=[common], help="run a tournament batch")
    p_sim.add_argument("--opponent", default="split", help="split | stingy:<p> | self")
    p_sim.add_argument("-n", "--n-games", type=int, default=100)
    p_sim.add_argument("--role", choices=["seller", "buyer"], default="seller", help="agent side")
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--turn-cap", type=int, default=30)

    p_play = sub.add_parser("play", parents=[common], help="interactive terminal session")
    p_play.add_argument("--role", choices=["seller", "buyer"], default="buyer", help="your side")

    p_serve = sub.add_parser("serve", parents=[common], help="run the HTTP session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8790)
    p_serve.add_argument("--data-dir", default="./sessions")
    return parser


def _parse_schedule(text: str) -> SubgameSchedule:
    lengths = tuple(int(x) for x in text.split(",") if x.strip())
    return SubgameSchedule(lengths)


def _build_proposer(args):
    if args.proposer == "remote":
        if not args.remote_base_url:
            raise ValueError("--remote-base-url is required with --proposer remote")
        return RemoteProposer(
            RemoteModelConfig(
                base_url=args.remote_base_url,
                model=args.remote_model,
                api_key_env=args.api_key_env,
            )
        )
    return RuleBasedProposer()


def _load_value_fn(checkpoint: Optional[str]):
    if not checkpoint:
        return None
    network, enc = ValueNetwork.load(checkpoint)
    return NetworkValue(network, enc)


def cmd_train(args) -> int:
    scenario = get_scenario(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = TrainingConfig(
        outer_iterations=args.outer_iterations,
        games_per_iteration=args.games,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        search_iterations=args.train_search_iterations,
        c_p=args.c_p,
    )
    network, enc, report = train(
        scenario, cfg, proposer=_build_proposer(args), schedule=_parse_schedule(args.schedule)
    )
    checkpoint = out_dir / "value_model.json"
    network.save(checkpoint, enc)
    report_path = out_dir / "training_report.csv"
    report.write_csv(report_path)
    print(f"trained on {report.total_games} games")
    for r in report.iterations:
        print(
            f"iteration {r.iteration}: buffer_loss={r.buffer_loss:.4f} "
            f"mean_loss={r.mean_loss:.4f} ebs_convergence={r.ebs_convergence:.2f}"
        )
    print(f"checkpoint: {checkpoint}")
    print(f"report: {report_path}")
    return EXIT_OK


# Module-level worker so --jobs processes can pickle it. Each game rebuilds
# its parties from primitives, which keeps parallel output byte-identical
# to the sequential run.
def _simulate_one(payload: dict) -> dict:
    scenario = Scenario.from_dict(payload["scenario_name"], payload["scenario"])
    agent_role = Role(payload["role"])
    game_id = payload["game_id"]
    game_seed = payload["seed"] * 1_000_003 + game_id
    rng = random.Random(game_seed)

    value_fn = _load_value_fn(payload.get("checkpoint"))
    schedule = SubgameSchedule(tuple(payload["schedule"]))
    trace_sink = None
    if payload.get("search_trace"):
        Path(payload["search_trace"]).parent.mkdir(parents=True, exist_ok=True)
        handle = open(payload["search_trace"], "a")
        trace_sink = lambda record: handle.write(json.dumps(record, sort_keys=True) + "\n")

    def build_agent(rng_local):
        return AgentParty(
            NegotiationAgent(
                scenario,
                agent_role,
                value_fn=value_fn,
                schedule=schedule,
                search_config=SearchConfig(
                    iterations=payload["search_iterations"],
                    c_p=payload["c_p"],
                    candidates_per_expansion=payload["candidates"],
                    seed=rng_local.randrange(1 << 30),
                ),
                trace_sink=trace_sink,
            )
        )

    if payload["opponent"] == "self":
        other = AgentParty(
            NegotiationAgent(
                scenario,
                agent_role.opponent,
                value_fn=value_fn,
                schedule=schedule,
                search_config=SearchConfig(
                    iterations=payload["search_iterations"],
                    c_p=payload["c_p"],
                    candidates_per_expansion=payload["candidates"],
                    seed=rng.randrange(1 << 30),
                ),
            ),
            name="agent_mirror",
        )
        agent = build_agent(rng)
    else:
        agent = build_agent(rng)
        other = make_opponent(payload["opponent"], scenario, agent_role.opponent, rng)

    seller, buyer = (agent, other) if agent_role is Role.SELLER else (other, agent)
    try:
        price, turns = play_game(seller, buyer, scenario, turn_cap=payload["turn_cap"])
        error = None
    except Exception as exc:
        price, turns, error = None, 0, f"{type(exc).__name__}: {exc}"
    if price is None:
        payoffs = tuple(scenario.problem.disagreement)
        fair = None
    else:
        payoffs = (price - scenario.floor, scenario.ceiling - price)
        fair = arena.fairness(price, scenario.problem)
    return {
        "game_id": game_id,
        "seed": game_seed,
        "opponent": payload["opponent"],
        "deal_price": price,
        "payoffs": payoffs,
        "fairness": fair,
        "turns": turns,
        "error": error,
    }


def cmd_simulate(args) -> int:
    if args.n_games < 1:
        raise UsageError("-n must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.search_trace and args.jobs > 1:
        raise UsageError("--search-trace requires --jobs 1 (ordered trace)")
    scenario = get_scenario(args.scenario)
    payloads = [
        {
            "scenario_name": scenario.name,
            "scenario": scenario.to_dict(),
            "role": args.role,
            "opponent": args.opponent,
            "seed": args.seed,
            "game_id": i,
            "checkpoint": args.checkpoint,
            "schedule": list(_parse_schedule(args.schedule).lengths),
            "search_iterations": args.search_iterations,
            "c_p": args.c_p,
            "candidates": args.candidates,
            "turn_cap": args.turn_cap,
            "search_trace": args.search_trace,
        }
        for i in range(args.n_games)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_simulate_one, payloads))
    else:
        rows = [_simulate_one(p) for p in payloads]
    rows.sort(key=lambda r: r["game_id"])
    results = [
        DealResult(
            game_id=r["game_id"],
            seed=r["seed"],
            opponent=r["opponent"],
            deal_price=r["deal_price"],
            payoffs=tuple(r["payoffs"]),
            fairness=r["fairness"],
            turns=r["turns"],
            error=r["error"],
        )
        for r in rows
    ]
    paths = write_report(results, scenario, args.out)
    summary = arena.summarize(results, scenario)
    print(json.dumps(summary, indent=2, sort_keys=True))
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def _trace_sink(args):
    if not args.search_trace:
        return None
    Path(args.search_trace).parent.mkdir(parents=True, exist_ok=True)
    handle = open(args.search_trace, "a")

    def sink(record: dict) -> None:
        handle.write(json.dumps(record, sort_keys=True) + "\n")
        handle.flush()

    return sink


def cmd_play(args) -> int:
    scenario = get_scenario(args.scenario)
    human_role = Role(args.role)
    agent_role = human_role.opponent
    agent = NegotiationAgent(
        scenario,
        agent_role,
        proposer=_build_proposer(args),
        value_fn=_load_value_fn(args.checkpoint),
        schedule=_parse_schedule(args.schedule),
        search_config=SearchConfig(
            iterations=args.search_iterations, c_p=args.c_p, seed=args.seed
        ),
        trace_sink=_trace_sink(args),
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    transcript_path = out_dir / "transcript.jsonl"
    transcript = open(transcript_path, "w")

    def record(env: MessageEnvelope) -> None:
        transcript.write(json.dumps(env.to_dict(), sort_keys=True) + "\n")
        transcript.flush()

    reservation = scenario.floor if human_role is Role.SELLER else scenario.ceiling
    print(f"You are the {human_role.value}. Your reservation price: {format_cents(reservation)}.")
    print(f"Advertised range: {format_cents(scenario.initial_price_range[0])}"
          f" to {format_cents(scenario.initial_price_range[1])}. Ctrl-D quits.")

    history: tuple = ()
    turn = 0
    status = "abandoned"
    deal_price = None
    try:
        while True:
            action = agent.respond(history)
            text = realize(action, agent_role)
            record(MessageEnvelope("terminal", agent_role, text, action.act, turn))
            turn += 1
            print(f"[{agent_role.value}] {text}")
            if action.act.kind is ActKind.ACCEPT:
                status, deal_price = "deal", action.accept_price
                break
            history = agent.state_for(history).after_act(agent_role, action.act).offer_history
            try:
                line = input("> ").strip()
            except EOFError:
                print()
                break
            act = extract_act(line, scenario)
            record(MessageEnvelope("terminal", human_role, line, act, turn))
            turn += 1
            if act.kind is ActKind.ACCEPT:
                standing = None
                for role, price in reversed(history):
                    if role is agent_role:
                        standing = price
                        break
                status, deal_price = "deal", standing
                break
            belief = belief_for(history, human_role, scenario, agent.schedule)
            st = NegotiationState(history, human_role, belief, scenario)
            history = st.after_act(human_role, act).offer_history
    finally:
        transcript.write(
            json.dumps(
                {"status": status, "deal_price_cents": deal_price, "turns": turn},
                sort_keys=True,
            )
            + "\n"
        )
        transcript.close()
    if status == "deal":
        print(f"Deal at {format_cents(deal_price)}.")
    else:
        print("Session abandoned.")
    print(f"transcript: {transcript_path}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        data_dir=Path(args.data_dir),
        proposer_mode=args.proposer,
        remote_base_url=args.remote_base_url,
        remote_model=args.remote_model,
        checkpoint=Path(args.checkpoint) if args.checkpoint else None,
        search_seed=args.seed,
        scenario_paths=(args.scenario,) if Path(args.scenario).exists() else (),
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


class UsageError(ValueError):
    pass


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": cmd_train,
        "simulate": cmd_simulate,
        "play": cmd_play,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
