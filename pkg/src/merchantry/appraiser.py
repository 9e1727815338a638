"""Item appraisal: n-shot prompt construction, backend query, price readout."""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass

from .backends import (
    Backend,
    ChatMessage,
    GenerationParams,
    complete_chat,
    predict_price,
)
from .catalog import ItemRecord
from .currency import format_coppers
from .errors import LeakageError, NotEnoughExemplarsError
from .pricetext import PriceExtraction, extract_price, single

DEFAULT_SHOTS = 10

# Versioned instruction asset; the fingerprint stored on each Appraisal makes
# any change to this text visible in run artifacts.
INSTRUCTION_VERSION = "appraise-v1"
INSTRUCTION = (
    "You are an expert appraiser of game items. Given an item description, "
    "state the fair retail price as exactly one amount in coppers. "
    "Reply with a single price and nothing else."
)


@dataclass(frozen=True)
class Exemplar:
    description: str
    price: int
    item_id: str | None = None


@dataclass(frozen=True)
class Appraisal:
    item_id: str
    predicted: PriceExtraction
    backend_id: str
    prompt_fingerprint: str
    timestamp: float

    def to_row(self) -> dict:
        row = {
            "item_id": self.item_id,
            "outcome": self.predicted.outcome,
            "backend": self.backend_id,
            "prompt_fingerprint": self.prompt_fingerprint,
        }
        if self.predicted.outcome == "single":
            row["amount"] = self.predicted.amount
        else:
            row["reason"] = self.predicted.reason
        return row


def sample_exemplars(
    train_items: list[ItemRecord], n: int, seed: int, exclude: str
) -> list[Exemplar]:
    """Uniform sample without replacement, never including ``exclude``."""
    pool = [item for item in train_items if item.id != exclude]
    if len(pool) < n:
        raise NotEnoughExemplarsError(
            f"need {n} exemplars, only {len(pool)} available after exclusion"
        )
    chosen = random.Random(seed).sample(pool, n)
    return [
        Exemplar(description=item.description, price=item.retail_price, item_id=item.id)
        for item in chosen
    ]


def build_icl_prompt(
    item: ItemRecord, exemplars: list[Exemplar], n: int = DEFAULT_SHOTS
) -> list[ChatMessage]:
    """Instruction + n demonstration pairs in given order + target description."""
    if n < 1:
        raise NotEnoughExemplarsError("need at least one exemplar")
    if len(exemplars) != n:
        raise NotEnoughExemplarsError(f"expected {n} exemplars, got {len(exemplars)}")
    if any(ex.item_id == item.id for ex in exemplars if ex.item_id is not None):
        raise LeakageError(f"target item {item.id!r} appears among its exemplars")
    lines = [f"Here are {n} items with their retail prices:", ""]
    for ex in exemplars:
        lines.append(f"Item: {ex.description}")
        lines.append(f"Price: {format_coppers(ex.price, 'coppers-plain')}")
        lines.append("")
    lines.append("Now appraise this item:")
    lines.append(f"Item: {item.description}")
    lines.append("Price:")
    return [
        ChatMessage(role="system", content=INSTRUCTION),
        ChatMessage(role="user", content="\n".join(lines)),
    ]


def prompt_fingerprint(messages: list[ChatMessage]) -> str:
    canonical = json.dumps(
        [{"role": m.role, "content": m.content} for m in messages],
        sort_keys=True,
        ensure_ascii=False,
    )
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
    return f"{INSTRUCTION_VERSION}:{digest}"


def appraise(
    item: ItemRecord,
    backend: Backend,
    exemplars: list[Exemplar] | None = None,
    params: GenerationParams | None = None,
    regression: bool = False,
) -> Appraisal:
    """Run one appraisal. Backend errors propagate; parse failures do not."""
    params = params or GenerationParams(temperature=0.0, max_output_tokens=64)
    if regression:
        amount = predict_price(backend, item.description, params)
        return Appraisal(
            item_id=item.id,
            predicted=single(amount),
            backend_id=backend.id,
            prompt_fingerprint="regression",
            timestamp=time.time(),
        )
    messages = build_icl_prompt(item, exemplars or [], n=len(exemplars or []))
    reply = complete_chat(backend, messages, params)
    return Appraisal(
        item_id=item.id,
        predicted=extract_price(reply),
        backend_id=backend.id,
        prompt_fingerprint=prompt_fingerprint(messages),
        timestamp=time.time(),
    )


def write_appraisals(appraisals: list[Appraisal], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for appraisal in appraisals:
            handle.write(json.dumps(appraisal.to_row(), sort_keys=True) + "\n")


def read_appraisal_rows(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                rows.append(json.loads(line))
    return rows
