"""HTTP session service: live negotiations against the agent.

One session pairs a human (over REST) with the agent in a chosen scenario
role. Every turn is persisted as an append-only JSON-lines record per
session, so terminal sessions replay byte-identically after a restart.
Requests within a session serialize on a per-session lock; distinct
sessions are independent.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .agent import MessageEnvelope, NegotiationAgent, extract_act, realize
from .core import Scenario, builtin_scenarios, load_scenario
from .game import ActKind, Role
from .money import format_cents
from .proposer import RemoteModelConfig, RemoteProposer, RuleBasedProposer
from .search import SearchConfig
from .value_model import NetworkValue, ValueNetwork


class ServiceError(HTTPException):
    def __init__(self, status_code: int, code: str, message: str) -> None:
        super().__init__(status_code=status_code, detail={"code": code, "message": message})


@dataclass
class ServiceConfig:
    data_dir: Path = Path("./sessions")
    proposer_mode: str = "rule"  # "rule" | "remote"
    remote_base_url: Optional[str] = None
    remote_model: str = "gpt-3.5-turbo"
    checkpoint: Optional[Path] = None
    search_seed: int = 0
    scenario_paths: tuple[str, ...] = ()
    cors_origins: tuple[str, ...] = ("*",)


@dataclass
class SessionRecord:
    session_id: str
    scenario: Scenario
    human_role: Role
    created_at: str
    status: str = "active"  # active | deal | no_deal | abandoned
    deal_price: Optional[int] = None
    envelopes: list[MessageEnvelope] = field(default_factory=list)
    survey: Optional[dict] = None

    @property
    def agent_role(self) -> Role:
        return self.human_role.opponent

    def history(self) -> tuple[tuple[Role, int], ...]:
        out = []
        for env in self.envelopes:
            act = env.act
            if act.kind is ActKind.COUNTEROFFER:
                out.append((env.role, act.price))
            elif act.kind is ActKind.ACCEPT:
                standing = _standing_of(out, env.role.opponent)
                if standing is not None:
                    out.append((env.role, standing))
            else:
                standing = _standing_of(out, env.role)
                if standing is None:
                    lo, hi = self.scenario.initial_price_range
                    standing = hi if env.role is Role.SELLER else lo
                out.append((env.role, standing))
        return tuple(out)

    def whose_turn(self) -> Role:
        if not self.envelopes:
            return self.agent_role  # the agent always opens
        return self.envelopes[-1].role.opponent

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "scenario": self.scenario.name,
            "human_role": self.human_role.value,
            "agent_role": self.agent_role.value,
            "created_at": self.created_at,
            "status": self.status,
            "deal_price_cents": self.deal_price,
            "messages": [env.to_dict() for env in self.envelopes],
            "survey": self.survey,
        }


def _standing_of(history: list[tuple[Role, int]], role: Role) -> Optional[int]:
    out = None
    for r, price in history:
        if r is role:
            out = price
    return out


class SessionStore:
    """Append-only JSON-lines persistence, one file per session."""

    def __init__(self, data_dir: Path) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.jsonl"

    def append(self, session_id: str, record: dict) -> None:
        with open(self.path(session_id), "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def load_all(self, scenarios: dict[str, Scenario]) -> dict[str, SessionRecord]:
        sessions: dict[str, SessionRecord] = {}
        for path in sorted(self.data_dir.glob("*.jsonl")):
            record = self._load_one(path, scenarios)
            if record is not None:
                sessions[record.session_id] = record
        return sessions

    def _load_one(self, path: Path, scenarios: dict[str, Scenario]) -> Optional[SessionRecord]:
        session: Optional[SessionRecord] = None
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                data = json.loads(line)
                kind = data.get("type")
                if kind == "meta":
                    scenario = scenarios.get(data["scenario"])
                    if scenario is None:
                        return None
                    session = SessionRecord(
                        session_id=data["session"],
                        scenario=scenario,
                        human_role=Role(data["human_role"]),
                        created_at=data["created_at"],
                    )
                elif kind == "message" and session is not None:
                    session.envelopes.append(MessageEnvelope.from_dict(data["envelope"]))
                elif kind == "status" and session is not None:
                    session.status = data["status"]
                    session.deal_price = data.get("deal_price_cents")
                elif kind == "survey" and session is not None:
                    session.survey = data["survey"]
        return session


class CreateSessionRequest(BaseModel):
    scenario: str
    human_role: str = Field(pattern="^(buyer|seller)$")


class PostMessageRequest(BaseModel):
    text: str


class SurveyRequest(BaseModel):
    quality: int
    human_like: int
    comments: str = ""


def _build_agent(scenario: Scenario, role: Role, config: ServiceConfig) -> NegotiationAgent:
    if config.proposer_mode == "remote" and config.remote_base_url:
        proposer = RemoteProposer(
            RemoteModelConfig(base_url=config.remote_base_url, model=config.remote_model)
        )
    else:
        proposer = RuleBasedProposer()
    value_fn = None
    if config.checkpoint and Path(config.checkpoint).exists():
        network, enc = ValueNetwork.load(config.checkpoint)
        value_fn = NetworkValue(network, enc)
    return NegotiationAgent(
        scenario,
        role,
        proposer=proposer,
        value_fn=value_fn,
        search_config=SearchConfig(seed=config.search_seed),
    )


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="fairbargain negotiation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    scenarios = builtin_scenarios()
    for path in config.scenario_paths:
        sc = load_scenario(path)
        scenarios[sc.name] = sc

    store = SessionStore(config.data_dir)
    sessions = store.load_all(scenarios)
    locks: dict[str, threading.Lock] = {sid: threading.Lock() for sid in sessions}
    registry_lock = threading.Lock()

    @app.exception_handler(HTTPException)
    async def handle_http_error(request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict) or "code" not in detail:
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    def get_session(session_id: str) -> tuple[SessionRecord, threading.Lock]:
        session = sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return session, locks[session_id]

    def agent_for(session: SessionRecord) -> NegotiationAgent:
        return _build_agent(session.scenario, session.agent_role, config)

    def append_envelope(session: SessionRecord, env: MessageEnvelope) -> None:
        session.envelopes.append(env)
        store.append(session.session_id, {"type": "message", "envelope": env.to_dict()})

    def set_status(session: SessionRecord, status: str, deal_price: Optional[int] = None) -> None:
        session.status = status
        session.deal_price = deal_price
        store.append(
            session.session_id,
            {
                "type": "status",
                "status": status,
                "deal_price_cents": deal_price,
                "turns": len(session.envelopes),
            },
        )

    def agent_move(session: SessionRecord) -> MessageEnvelope:
        agent = agent_for(session)
        action = agent.respond(session.history())
        text = realize(action, session.agent_role)
        env = MessageEnvelope(
            session=session.session_id,
            role=session.agent_role,
            text=text,
            act=action.act,
            turn=len(session.envelopes),
        )
        append_envelope(session, env)
        if action.act.kind is ActKind.ACCEPT:
            set_status(session, "deal", action.accept_price)
        return env

    @app.get("/v1/scenarios")
    def list_scenarios():
        return {
            "scenarios": [
                {
                    "name": sc.name,
                    "initial_price_range_cents": list(sc.initial_price_range),
                    "currency": sc.currency,
                }
                for sc in scenarios.values()
            ]
        }

    @app.post("/v1/sessions", status_code=201)
    def create_session(request: CreateSessionRequest):
        scenario = scenarios.get(request.scenario)
        if scenario is None:
            raise ServiceError(404, "unknown_scenario", f"no scenario {request.scenario!r}")
        human_role = Role(request.human_role)
        session = SessionRecord(
            session_id=uuid.uuid4().hex[:12],
            scenario=scenario,
            human_role=human_role,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        with registry_lock:
            sessions[session.session_id] = session
            locks[session.session_id] = threading.Lock()
        store.append(
            session.session_id,
            {
                "type": "meta",
                "session": session.session_id,
                "scenario": scenario.name,
                "human_role": human_role.value,
                "created_at": session.created_at,
            },
        )
        with locks[session.session_id]:
            agent_move(session)
        reservation = scenario.floor if human_role is Role.SELLER else scenario.ceiling
        return {
            **session.to_dict(),
            "your_reservation_cents": reservation,
            "your_reservation": format_cents(reservation),
        }

    @app.post("/v1/sessions/{session_id}/messages")
    def post_message(session_id: str, request: PostMessageRequest):
        session, lock = get_session(session_id)
        with lock:
            if session.status != "active":
                raise ServiceError(409, "terminal_session", f"session is {session.status}")
            if session.whose_turn() is not session.human_role:
                raise ServiceError(409, "out_of_turn", "it is not your turn")
            act = extract_act(request.text, session.scenario)
            env = MessageEnvelope(
                session=session.session_id,
                role=session.human_role,
                text=request.text,
                act=act,
                turn=len(session.envelopes),
            )
            history_before = session.history()
            append_envelope(session, env)
            new_messages = [env]
            if act.kind is ActKind.ACCEPT:
                standing = _standing_of(list(history_before), session.agent_role)
                set_status(session, "deal", standing)
            else:
                new_messages.append(agent_move(session))
            return {
                "messages": [m.to_dict() for m in new_messages],
                "status": session.status,
                "deal_price_cents": session.deal_price,
            }

    @app.get("/v1/sessions/{session_id}")
    def get_transcript(session_id: str):
        session, lock = get_session(session_id)
        with lock:
            return session.to_dict()

    @app.post("/v1/sessions/{session_id}/survey")
    def post_survey(session_id: str, request: SurveyRequest):
        session, lock = get_session(session_id)
        with lock:
            if session.status == "active":
                raise ServiceError(409, "active_session", "survey requires a finished session")
            if session.survey is not None:
                raise ServiceError(409, "survey_exists", "survey already recorded")
            for name, value in (("quality", request.quality), ("human_like", request.human_like)):
                if not 1 <= value <= 5:
                    raise ServiceError(422, "invalid_rating", f"{name} must be between 1 and 5")
            survey = {
                "quality": request.quality,
                "human_like": request.human_like,
                "comments": request.comments,
            }
            session.survey = survey
            store.append(session.session_id, {"type": "survey", "survey": survey})
            return session.to_dict()

    @app.post("/v1/sessions/{session_id}/abandon")
    def abandon_session(session_id: str):
        session, lock = get_session(session_id)
        with lock:
            if session.status != "active":
                raise ServiceError(409, "terminal_session", f"session is {session.status}")
            set_status(session, "abandoned")
            return session.to_dict()

    app.state.sessions = sessions
    app.state.config = config
    return app
