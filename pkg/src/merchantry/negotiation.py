"""Price negotiation: tactics, dialogue state machine, settlement, KD corpus.

A session alternates player and merchant turns, starting from the player's
templated greeting, until a settlement rule fires or the merchant-turn cap
is reached. Concrete offers travel in a bit-exact control-annotation
grammar with a free-text fallback.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from .backends import Backend, ChatMessage, GenerationParams, complete_chat
from .catalog import ItemRecord
from .currency import CopperPrice, format_coppers
from .errors import AnnotationError, BackendError, ConfigError, SessionStateError
from .pricetext import extract_price

OPENING_TEMPLATE = "Hello. I'm looking for {name}."
WALKAWAY_PHRASE = "conversation over"
DEFAULT_MAX_TURNS = 15
DISCOUNT_RANGE = (0.10, 0.25)

# The ten negotiation levers the merchant may use: six persuasion
# strategies plus four perceived item values.
TACTICS: dict[str, str] = {
    "liking": "building relationships through common ground or compliments",
    "reciprocity": "the tendency to return favors",
    "social-proof": "mimicking observed behaviors",
    "consistency": "aligning with past actions",
    "authority": "trusting experts",
    "scarcity": "valuing rare items",
    "enjoyment": "enhancing gaming experience",
    "character-competency": "leveling up and boosting abilities",
    "visual-authority": "customizing characters to attract attention",
    "monetary-value": "reasonable pricing and good value",
}

MODES = ("zsp", "kd-teacher", "served-student")

_OFFER = re.compile(r"\[OFFER: (\d+)\]")
_ACCEPT = re.compile(r"\[ACCEPT: (\d+)\]")
_END = re.compile(r"\[END\]")

# Affirmative-only phrases; deliberately no bare "deal" so "no deal" and
# "ideal" never read as acceptance.
ACCEPTANCE_PHRASES = (
    "it's a deal",
    "that's a deal",
    "we have a deal",
    "you've got a deal",
    "i'll take it",
    "i accept",
    "i'll buy it",
)
_ACCEPTANCE = re.compile(
    "|".join(rf"\b{re.escape(p)}\b" for p in ACCEPTANCE_PHRASES), re.IGNORECASE
)


def normalize_tactic(text: str) -> str | None:
    """Map a model's tactic naming to the closed enum, or None."""
    key = re.sub(r"[^a-z]+", "-", text.strip().lower()).strip("-")
    return key if key in TACTICS else None


@dataclass(frozen=True)
class Control:
    kind: str  # offer | accept | end
    amount: CopperPrice | None = None

    def render(self) -> str:
        if self.kind == "offer":
            return f"[OFFER: {self.amount}]"
        if self.kind == "accept":
            return f"[ACCEPT: {self.amount}]"
        return "[END]"


def parse_control(content: str) -> Control | None:
    """Read the last control annotation in a message, if any."""
    candidates: list[tuple[int, Control]] = []
    for m in _OFFER.finditer(content):
        candidates.append((m.start(), Control("offer", int(m.group(1)))))
    for m in _ACCEPT.finditer(content):
        candidates.append((m.start(), Control("accept", int(m.group(1)))))
    for m in _END.finditer(content):
        candidates.append((m.start(), Control("end")))
    if not candidates:
        return None
    return max(candidates, key=lambda pair: pair[0])[1]


@dataclass(frozen=True)
class NegotiationConfig:
    item_id: str
    merchant_price: CopperPrice
    player_target: CopperPrice
    discount_fraction: float
    max_turns: int = DEFAULT_MAX_TURNS
    seed: int = 0

    def __post_init__(self):
        if not DISCOUNT_RANGE[0] <= self.discount_fraction <= DISCOUNT_RANGE[1]:
            raise ConfigError(
                f"discount {self.discount_fraction} outside {DISCOUNT_RANGE}"
            )
        if self.player_target != round(self.merchant_price * (1 - self.discount_fraction)):
            raise ConfigError("player_target inconsistent with discount")
        if self.player_target >= self.merchant_price:
            raise ConfigError("player target must be below the merchant price")
        if self.max_turns < 1:
            raise ConfigError("max_turns must be positive")


@dataclass
class Turn:
    index: int
    speaker: str  # player | merchant
    content: str
    tactic: str | None = None
    control: Control | None = None
    tactic_error: bool = False

    def to_row(self) -> dict:
        row = {"idx": self.index, "speaker": self.speaker, "content": self.content}
        if self.tactic is not None:
            row["tactic"] = self.tactic
        if self.control is not None:
            row["control"] = {"type": self.control.kind}
            if self.control.amount is not None:
                row["control"]["amount"] = self.control.amount
        if self.tactic_error:
            row["tactic_error"] = True
        return row


@dataclass(frozen=True)
class NegotiationOutcome:
    status: str  # agreed | walkaway | turn-limit
    turns_used: int
    agreed_price: CopperPrice | None = None

    def to_row(self) -> dict:
        row = {"status": self.status, "turns_used": self.turns_used}
        if self.agreed_price is not None:
            row["agreed_price"] = self.agreed_price
        return row


@dataclass
class NegotiationSession:
    session_id: str
    item: ItemRecord
    config: NegotiationConfig
    transcript: list[Turn] = field(default_factory=list)
    outcome: NegotiationOutcome | None = None
    aborted: str | None = None
    flagged_for_audit: bool = False

    @property
    def state(self) -> str:
        if self.aborted is not None:
            return "aborted"
        return "closed" if self.outcome is not None else "open"

    def merchant_turns(self) -> int:
        return sum(1 for t in self.transcript if t.speaker == "merchant")

    def last_offer(self) -> CopperPrice | None:
        for turn in reversed(self.transcript):
            if turn.control is not None and turn.control.kind == "offer":
                return turn.control.amount
        return None

    def append(self, turn: Turn) -> None:
        if self.state != "open":
            raise SessionStateError(f"session {self.session_id} is {self.state}")
        expected = "player" if not self.transcript else (
            "merchant" if self.transcript[-1].speaker == "player" else "player"
        )
        if turn.speaker != expected:
            raise SessionStateError(
                f"expected {expected} turn, got {turn.speaker} turn"
            )
        if turn.index != len(self.transcript):
            raise SessionStateError("turn index out of order")
        self.transcript.append(turn)

    def to_document(self) -> dict:
        doc = {
            "session_id": self.session_id,
            "item_id": self.item.id,
            "config": {
                "item_id": self.config.item_id,
                "merchant_price": self.config.merchant_price,
                "player_target": self.config.player_target,
                "discount_fraction": self.config.discount_fraction,
                "max_turns": self.config.max_turns,
                "seed": self.config.seed,
            },
            "turns": [turn.to_row() for turn in self.transcript],
            "outcome": self.outcome.to_row() if self.outcome else None,
        }
        if self.aborted is not None:
            doc["aborted"] = self.aborted
        if self.flagged_for_audit:
            doc["flagged_for_audit"] = True
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, ensure_ascii=False)


def new_session(
    item: ItemRecord,
    merchant_price: CopperPrice,
    seed: int,
    max_turns: int = DEFAULT_MAX_TURNS,
    session_id: str | None = None,
    open_with_greeting: bool = True,
) -> NegotiationSession:
    """Start a session; the discount is drawn per-session from the seed."""
    if merchant_price < 10:
        raise ConfigError(f"merchant price {merchant_price} below 10 coppers")
    rng = random.Random(seed)
    discount = rng.uniform(*DISCOUNT_RANGE)
    config = NegotiationConfig(
        item_id=item.id,
        merchant_price=merchant_price,
        player_target=round(merchant_price * (1 - discount)),
        discount_fraction=discount,
        max_turns=max_turns,
        seed=seed,
    )
    session = NegotiationSession(
        session_id=session_id or f"{item.id}-{seed}",
        item=item,
        config=config,
    )
    if open_with_greeting:
        greeting = OPENING_TEMPLATE.format(name=item.name)
        session.append(Turn(index=0, speaker="player", content=greeting))
    return session


def _contains_acceptance(content: str) -> bool:
    return _ACCEPTANCE.search(content) is not None


def detect_settlement(session: NegotiationSession) -> NegotiationOutcome | None:
    """Apply the settlement rules to the latest turn; walkaway wins ties."""
    if not session.transcript:
        return None
    last = session.transcript[-1]
    turns_used = len(session.transcript)

    if WALKAWAY_PHRASE in last.content.lower() or (
        last.control is not None and last.control.kind == "end"
    ):
        return NegotiationOutcome(status="walkaway", turns_used=turns_used)

    prior_offer = None
    for turn in session.transcript[:-1]:
        if turn.control is not None and turn.control.kind == "offer":
            prior_offer = turn.control.amount

    if last.control is not None and last.control.kind == "accept":
        if last.control.amount is not None:
            return NegotiationOutcome(
                status="agreed", turns_used=turns_used, agreed_price=last.control.amount
            )
        if prior_offer is None:
            session.flagged_for_audit = True
            return None
        return NegotiationOutcome(
            status="agreed", turns_used=turns_used, agreed_price=prior_offer
        )
    if _contains_acceptance(last.content):
        if prior_offer is not None:
            return NegotiationOutcome(
                status="agreed", turns_used=turns_used, agreed_price=prior_offer
            )
        session.flagged_for_audit = True
        return None

    if session.merchant_turns() >= session.config.max_turns:
        return NegotiationOutcome(status="turn-limit", turns_used=turns_used)
    return None


def _tactic_block() -> str:
    return "\n".join(f"- {name}: {text}" for name, text in TACTICS.items())


_CONTROL_INSTRUCTIONS = (
    "When you state a concrete price, end your message with a control "
    "annotation in exactly this form: [OFFER: <amount>] to propose a price, "
    "[ACCEPT: <amount>] to accept one, or [END] to stop. Amounts are whole "
    "coppers."
)


def merchant_system_prompt(item: ItemRecord, retail_price: CopperPrice,
                           include_tactics: bool, tactic: str | None = None) -> str:
    parts = [
        "You are a merchant NPC in a fantasy game, negotiating the sale of "
        "one item. Keep persuading the buyer; aim for a price as close to "
        "the retail price as you can. Do not discuss anything but this sale.",
        f"Item: {item.name}. {item.description}",
        f"Retail price: {format_coppers(retail_price, 'coppers-plain')}.",
    ]
    if include_tactics:
        parts.append("Negotiation tactics you may draw on:\n" + _tactic_block())
    if tactic is not None:
        parts.append(
            f"For this reply, use the '{tactic}' tactic: {TACTICS[tactic]}."
        )
    parts.append(_CONTROL_INSTRUCTIONS)
    return "\n\n".join(parts)


def player_system_prompt(item: ItemRecord, target_price: CopperPrice) -> str:
    return "\n\n".join(
        [
            "You are a buyer negotiating for one item in a fantasy game shop. "
            f"You want to buy it for about {format_coppers(target_price, 'coppers-plain')} "
            "and should bargain toward that price. You may accept a good "
            f"offer, or walk away by saying '{WALKAWAY_PHRASE}'.",
            f"Item: {item.name}. {item.description}",
            _CONTROL_INSTRUCTIONS,
        ]
    )


def _transcript_messages(session: NegotiationSession) -> list[ChatMessage]:
    return [
        ChatMessage(role=turn.speaker, content=turn.content)
        for turn in session.transcript
    ]


def _select_tactic(session: NegotiationSession, backend: Backend,
                   params: GenerationParams) -> tuple[str | None, bool]:
    prompt = [
        ChatMessage(
            role="system",
            content=(
                "You are coaching a merchant NPC. Given the negotiation so "
                "far, name the single most appropriate tactic for the next "
                "merchant reply. Answer with exactly one tactic name from "
                "this list and nothing else:\n" + _tactic_block()
            ),
        ),
        *_transcript_messages(session),
    ]
    for _ in range(2):  # one re-ask on an out-of-vocabulary answer
        reply = complete_chat(backend, prompt, params, perspective="merchant")
        tactic = normalize_tactic(reply)
        if tactic is not None:
            return tactic, False
    return None, True


def merchant_reply(
    session: NegotiationSession,
    backend: Backend,
    mode: str = "zsp",
    params: GenerationParams | None = None,
) -> Turn:
    """Generate and append the next merchant turn in the given mode."""
    if mode not in MODES:
        raise ConfigError(f"unknown negotiator mode {mode!r}")
    if session.state != "open":
        raise SessionStateError(f"session {session.session_id} is {session.state}")
    if not session.transcript or session.transcript[-1].speaker != "player":
        raise SessionStateError("merchant may only reply to a player turn")
    params = params or GenerationParams(temperature=0.7)

    tactic: str | None = None
    tactic_error = False
    if mode == "kd-teacher":
        tactic, tactic_error = _select_tactic(session, backend, params)

    if mode == "served-student":
        messages = _transcript_messages(session)
    else:
        system = merchant_system_prompt(
            session.item,
            session.config.merchant_price,
            include_tactics=mode == "zsp",
            tactic=tactic,
        )
        messages = [ChatMessage(role="system", content=system)]
        messages.extend(_transcript_messages(session))

    content = complete_chat(backend, messages, params, perspective="merchant")
    turn = Turn(
        index=len(session.transcript),
        speaker="merchant",
        content=content,
        tactic=tactic,
        control=parse_control(content),
        tactic_error=tactic_error,
    )
    session.append(turn)
    return turn


def player_reply(
    session: NegotiationSession,
    backend: Backend,
    params: GenerationParams | None = None,
) -> Turn:
    """Generate and append the next simulated-player turn."""
    if session.state != "open":
        raise SessionStateError(f"session {session.session_id} is {session.state}")
    if not session.transcript or session.transcript[-1].speaker != "merchant":
        raise SessionStateError("player may only reply to a merchant turn")
    params = params or GenerationParams(temperature=1.0)
    messages = [
        ChatMessage(
            role="system",
            content=player_system_prompt(session.item, session.config.player_target),
        )
    ]
    messages.extend(_transcript_messages(session))
    content = complete_chat(backend, messages, params, perspective="player")
    turn = Turn(
        index=len(session.transcript),
        speaker="player",
        content=content,
        control=parse_control(content),
    )
    session.append(turn)
    return turn


def run_negotiation(
    item: ItemRecord,
    merchant_backend: Backend,
    player_backend: Backend,
    mode: str = "zsp",
    seed: int = 0,
    merchant_price: CopperPrice | None = None,
    max_turns: int = DEFAULT_MAX_TURNS,
    merchant_params: GenerationParams | None = None,
    player_params: GenerationParams | None = None,
    session_id: str | None = None,
) -> NegotiationSession:
    """Drive a full negotiation to a terminal state.

    Backend failures abort the session (recorded, excluded from metrics)
    rather than raising; the turn cap guarantees termination for any
    backend behavior.
    """
    session = new_session(
        item,
        merchant_price if merchant_price is not None else item.retail_price,
        seed,
        max_turns=max_turns,
        session_id=session_id,
    )
    try:
        while session.outcome is None:
            session.outcome = detect_settlement(session)
            if session.outcome is not None:
                break
            if session.transcript[-1].speaker == "player":
                merchant_reply(session, merchant_backend, mode, merchant_params)
            else:
                player_reply(session, player_backend, player_params)
    except BackendError as exc:
        session.aborted = f"{type(exc).__name__}: {exc}"
    return session


@dataclass
class CorpusRow:
    session: NegotiationSession

    def to_row(self) -> dict:
        return self.session.to_document()


def generate_kd_corpus(
    items: list[ItemRecord],
    teacher_backend: Backend,
    player_backend: Backend,
    seed: int = 0,
    max_turns: int = DEFAULT_MAX_TURNS,
    on_error=None,
) -> list[CorpusRow]:
    """One tactic-annotated teacher session per item; failures are skipped."""
    corpus: list[CorpusRow] = []
    for offset, item in enumerate(items):
        try:
            session = run_negotiation(
                item,
                teacher_backend,
                player_backend,
                mode="kd-teacher",
                seed=seed + offset,
                max_turns=max_turns,
            )
        except Exception as exc:  # per-item isolation
            if on_error is not None:
                on_error(item, exc)
            continue
        if session.aborted is not None and on_error is not None:
            on_error(item, session.aborted)
        corpus.append(CorpusRow(session=session))
    return corpus
