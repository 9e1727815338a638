"""HTTP session service: a human plays the buyer against a live merchant.

Thin FastAPI layer over the negotiation state machine; the session
semantics (alternation, settlement rules, turn cap) are exactly the
simulator's, with posted human messages taking the player's slot.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .auditor import AuditFinding, audit_arithmetic, audit_giveaway, audit_improvisation
from .backends import Backend, GenerationParams
from .catalog import Catalog
from .errors import BackendError
from .metrics import dominance
from .negotiation import (
    DEFAULT_MAX_TURNS,
    OPENING_TEMPLATE,
    NegotiationOutcome,
    NegotiationSession,
    Turn,
    detect_settlement,
    merchant_reply,
    new_session,
    parse_control,
)


class ItemView(BaseModel):
    id: str
    name: str
    description: str
    retail_price: int


class ControlView(BaseModel):
    type: str
    amount: int | None = None


class FindingView(BaseModel):
    kind: str
    evidence: list[str]
    detail: dict


class TurnView(BaseModel):
    idx: int
    speaker: str
    content: str
    tactic: str | None = None
    control: ControlView | None = None
    audit: list[FindingView] = []


class OutcomeView(BaseModel):
    status: str
    turns_used: int
    agreed_price: int | None = None
    dominance: float | None = None


class SessionResponse(BaseModel):
    session_id: str
    state: str
    item: ItemView
    opening_template: str
    max_turns: int
    turns: list[TurnView]
    outcome: OutcomeView | None = None


class CreateSessionRequest(BaseModel):
    item_id: str


class PostMessageRequest(BaseModel):
    content: str


class _LiveSession:
    def __init__(self, session: NegotiationSession):
        self.session = session
        self.lock = threading.Lock()
        self.findings: dict[int, list[AuditFinding]] = {}


def _turn_view(turn: Turn, findings: list[AuditFinding]) -> TurnView:
    control = None
    if turn.control is not None:
        control = ControlView(type=turn.control.kind, amount=turn.control.amount)
    return TurnView(
        idx=turn.index,
        speaker=turn.speaker,
        content=turn.content,
        tactic=turn.tactic,
        control=control,
        audit=[
            FindingView(kind=f.kind, evidence=list(f.evidence), detail=f.detail)
            for f in findings
        ],
    )


def _outcome_view(session: NegotiationSession) -> OutcomeView | None:
    outcome: NegotiationOutcome | None = session.outcome
    if outcome is None:
        return None
    dom = None
    if outcome.status == "agreed" and outcome.agreed_price is not None:
        dom = dominance(
            outcome.agreed_price,
            session.config.merchant_price,
            session.config.player_target,
        )
    return OutcomeView(
        status=outcome.status,
        turns_used=outcome.turns_used,
        agreed_price=outcome.agreed_price,
        dominance=dom,
    )


def create_app(
    catalog: Catalog,
    merchant_backend: Backend,
    mode: str = "zsp",
    merchant_params: GenerationParams | None = None,
    max_turns: int = DEFAULT_MAX_TURNS,
    seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="merchantry session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _LiveSession] = {}

    def _get(session_id: str) -> _LiveSession:
        live = sessions.get(session_id)
        if live is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id}")
        return live

    def _respond(live: _LiveSession) -> SessionResponse:
        session = live.session
        return SessionResponse(
            session_id=session.session_id,
            state=session.state,
            item=ItemView(
                id=session.item.id,
                name=session.item.name,
                description=session.item.description,
                retail_price=session.item.retail_price,
            ),
            opening_template=OPENING_TEMPLATE.format(name=session.item.name),
            max_turns=session.config.max_turns,
            turns=[
                _turn_view(turn, live.findings.get(turn.index, []))
                for turn in session.transcript
            ],
            outcome=_outcome_view(session),
        )

    @app.get("/items", response_model=list[ItemView])
    def list_items():
        return [
            ItemView(
                id=item.id,
                name=item.name,
                description=item.description,
                retail_price=item.retail_price,
            )
            for item in catalog
        ]

    @app.post("/sessions", response_model=SessionResponse, status_code=201)
    def create_session(request: CreateSessionRequest):
        item = catalog.get(request.item_id)
        if item is None:
            raise HTTPException(status_code=404, detail=f"no item {request.item_id}")
        session_id = uuid.uuid4().hex
        # The human speaks first, so the session starts with no turns.
        session = new_session(
            item,
            item.retail_price,
            seed=seed + len(sessions),
            max_turns=max_turns,
            session_id=session_id,
            open_with_greeting=False,
        )
        live = _LiveSession(session)
        sessions[session_id] = live
        return _respond(live)

    @app.post("/sessions/{session_id}/messages", response_model=SessionResponse)
    def post_message(session_id: str, request: PostMessageRequest):
        live = _get(session_id)
        with live.lock:
            session = live.session
            if session.state != "open":
                raise HTTPException(status_code=409, detail="session is closed")
            if not request.content.strip():
                raise HTTPException(status_code=422, detail="empty message")
            player_turn = Turn(
                index=len(session.transcript),
                speaker="player",
                content=request.content,
                control=parse_control(request.content),
            )
            session.append(player_turn)
            session.outcome = detect_settlement(session)
            if session.outcome is None:
                try:
                    turn = merchant_reply(session, merchant_backend, mode, merchant_params)
                except BackendError as exc:
                    # Roll the player turn back so the client can retry.
                    session.transcript.pop()
                    raise HTTPException(status_code=502, detail=str(exc)) from exc
                live.findings[turn.index] = [
                    *audit_arithmetic(turn, session),
                    *audit_improvisation(turn, catalog, session),
                    *audit_giveaway(turn, session),
                ]
                session.outcome = detect_settlement(session)
            return _respond(live)

    @app.get("/sessions/{session_id}", response_model=SessionResponse)
    def get_session(session_id: str):
        return _respond(_get(session_id))

    @app.delete("/sessions/{session_id}", response_model=SessionResponse)
    def close_session(session_id: str):
        live = _get(session_id)
        with live.lock:
            session = live.session
            if session.outcome is None:
                session.outcome = NegotiationOutcome(
                    status="walkaway", turns_used=len(session.transcript)
                )
            return _respond(live)

    return app
