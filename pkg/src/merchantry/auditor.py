"""Detectors for irregular merchant behavior in negotiation transcripts.

Three deterministic per-turn audits: promised giveaways, improvised items
that are not in the catalog, and wrong discount/total arithmetic. Findings
are advisory; nothing is auto-corrected.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .backends import Backend, judge_score
from .catalog import Catalog, normalize_item_name
from .negotiation import NegotiationSession, Turn

_ASSETS = Path(__file__).parent / "assets"

ARITHMETIC_TOLERANCE_ABS = 1.0  # coppers (or whatever unit the turn used)
ARITHMETIC_TOLERANCE_REL = 0.005


@dataclass(frozen=True)
class AuditFinding:
    session_id: str
    turn_index: int
    kind: str  # giveaway | improvisation | arithmetic-error
    evidence: tuple[str, ...]
    detail: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        return {
            "session_id": self.session_id,
            "turn": self.turn_index,
            "kind": self.kind,
            "evidence": list(self.evidence),
            "detail": self.detail,
        }


def load_lexicon(name: str) -> list[str]:
    """Read a phrase-per-line lexicon asset; '#' starts a comment."""
    phrases = []
    for line in (_ASSETS / name).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            phrases.append(line.lower())
    return phrases


_NUMBER = re.compile(r"(?<![\w.,])(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?")
_PERCENT = re.compile(r"(?<![\w.])(\d+(?:\.\d+)?)\s*%")
_BASE_CUES = re.compile(
    r"(originally|original price|normally|list(?:ed)?(?: price)?|retail|"
    r"priced at|costs?|asking|base price|worth)",
    re.IGNORECASE,
)
_CLAIM_CUES = re.compile(
    r"(down to|total|comes? (?:out )?to|that(?:'s| is| would be)|leaves|"
    r"brings? it to|for just|equals|=|makes it|so that's)",
    re.IGNORECASE,
)
_QTY_PRICE = re.compile(
    r"(\d+)\s+[\w'-]+(?:s)?\s+at\s+(\d[\d,]*(?:\.\d+)?)"
    r"(?:\s*(?:coppers?|silvers?|golds?))?\s*each",
    re.IGNORECASE,
)


def _sentences(text: str) -> list[tuple[int, str]]:
    out = []
    start = 0
    for m in re.finditer(r"[.!?]+(?:\s+|$)", text):
        out.append((start, text[start : m.end()]))
        start = m.end()
    if start < len(text):
        out.append((start, text[start:]))
    return out


def _numbers_with_cues(text: str, pct_span: tuple[int, int]):
    """Numeric mentions tagged by nearby cue phrases, skipping the percent."""
    tagged = []
    for m in _NUMBER.finditer(text):
        if pct_span[0] <= m.start() < pct_span[1]:
            continue
        value = float(m.group(0).replace(",", ""))
        window_before = text[max(0, m.start() - 40) : m.start()]
        window_after = text[m.end() : m.end() + 30]
        tagged.append(
            {
                "value": value,
                "span": m.group(0),
                "pos": m.start(),
                "base_cue": bool(
                    _BASE_CUES.search(window_before) or _BASE_CUES.search(window_after)
                ),
                "claim_cue": bool(_CLAIM_CUES.search(window_before)),
            }
        )
    return tagged


def audit_arithmetic(turn: Turn, session: NegotiationSession | None = None,
                     context: list[Turn] | None = None) -> list[AuditFinding]:
    """Flag percent-discount and quantity-total claims that do not add up."""
    del context
    session_id = session.session_id if session else ""
    findings = []
    # Numbers inside "[OFFER: n]"-style annotations are offers, not claims.
    text = _CONTROL_MARKUP.sub(lambda m: " " * len(m.group(0)), turn.content)

    for pct_match in _PERCENT.finditer(text):
        pct = float(pct_match.group(1))
        numbers = _numbers_with_cues(text, pct_match.span())
        bases = [n for n in numbers if n["base_cue"]]
        if not bases:
            continue
        base = bases[0]
        claims = [
            n for n in numbers if n["claim_cue"] and n["pos"] != base["pos"]
        ]
        if not claims:
            continue
        claimed = claims[-1]
        correct = base["value"] * (1 - pct / 100.0)
        tolerance = max(ARITHMETIC_TOLERANCE_ABS, ARITHMETIC_TOLERANCE_REL * base["value"])
        if abs(claimed["value"] - correct) > tolerance:
            findings.append(
                AuditFinding(
                    session_id=session_id,
                    turn_index=turn.index,
                    kind="arithmetic-error",
                    evidence=(base["span"], pct_match.group(0), claimed["span"]),
                    detail={
                        "base": base["value"],
                        "pct": pct,
                        "claimed": claimed["value"],
                        "correct": correct,
                    },
                )
            )

    for qty_match in _QTY_PRICE.finditer(text):
        qty = int(qty_match.group(1))
        unit_price = float(qty_match.group(2).replace(",", ""))
        after = text[qty_match.end() :]
        claim = None
        for m in _NUMBER.finditer(after):
            if _CLAIM_CUES.search(after[max(0, m.start() - 30) : m.start()]):
                claim = (m.group(0), float(m.group(0).replace(",", "")))
                break
        if claim is None:
            continue
        correct = qty * unit_price
        tolerance = max(ARITHMETIC_TOLERANCE_ABS, ARITHMETIC_TOLERANCE_REL * correct)
        if abs(claim[1] - correct) > tolerance:
            findings.append(
                AuditFinding(
                    session_id=session_id,
                    turn_index=turn.index,
                    kind="arithmetic-error",
                    evidence=(qty_match.group(0), claim[0]),
                    detail={
                        "quantity": qty,
                        "unit_price": unit_price,
                        "claimed": claim[1],
                        "correct": correct,
                    },
                )
            )
    return findings


_QUOTED = re.compile(r'"([^"]{3,60})"')
_CAPITALIZED = re.compile(r"\b((?:[A-Z][\w']+\s+){1,4}[A-Z][\w']+)\b")
_STOCK_CUES = re.compile(
    r"(have|stock|sell(?:ing)?|offer(?:ing)?|promotion|deal on|available|"
    r"interested in|recommend|own|carry)",
    re.IGNORECASE,
)
_ARTICLE = re.compile(r"\b(?:the|a|an)\s+", re.IGNORECASE)
_PHRASE_AFTER_ARTICLE = re.compile(r"(?:[\w']+\s+){1,4}[\w']+")
_PHRASE_STOPWORDS = {
    "that", "which", "is", "are", "was", "were", "for", "at", "with", "and",
    "or", "but", "to", "of", "in", "on", "it", "you", "your", "my", "our",
    "this", "if", "so", "very", "here", "there", "today", "tomorrow", "now",
    "total", "down", "sum", "cost", "discount", "let",
    "copper", "coppers", "silver", "silvers", "gold", "golds",
}
# Phrases made only of these never name an item ("special promotion", etc).
_GENERIC_WORDS = {
    "special", "promotion", "deal", "discount", "offer", "bargain", "sale",
    "price", "prices", "item", "items", "thing", "things", "shop", "store",
    "good", "great", "best", "fine", "little", "new", "quality", "moment",
    "free", "gift", "bonus", "upgrade", "extra",
}
_CONTROL_MARKUP = re.compile(r"\[(?:OFFER|ACCEPT): \d+\]|\[END\]")


def _trim_phrase(raw: str) -> str | None:
    words = []
    for word in raw.split():
        clean = word.strip(".,;:!?()[]\"")
        if clean.lower() in _PHRASE_STOPWORDS:
            break
        words.append(clean)
        if word != clean:  # punctuation ended the phrase
            break
    if len(words) < 2:
        return None
    if all(w.lower() in _GENERIC_WORDS for w in words):
        return None
    return " ".join(words)


def audit_improvisation(
    turn: Turn,
    catalog: Catalog,
    session: NegotiationSession | None = None,
) -> list[AuditFinding]:
    """Flag item-like mentions that are in neither the catalog nor the session."""
    session_id = session.session_id if session else ""
    subject = normalize_item_name(session.item.name) if session else None
    # Blank out control annotations so "[OFFER: n]" cannot act as a cue,
    # keeping every other character offset identical to the raw turn.
    text = _CONTROL_MARKUP.sub(lambda m: " " * len(m.group(0)), turn.content)

    candidates: list[str] = []
    for m in _QUOTED.finditer(text):
        candidates.append(m.group(1))
    for m in _CAPITALIZED.finditer(text):
        candidates.append(m.group(1))
    for article in _ARTICLE.finditer(text):
        m = _PHRASE_AFTER_ARTICLE.match(text, article.end())
        if m is None:
            continue
        window = text[max(0, article.start() - 50) : min(len(text), m.end() + 30)]
        if not _STOCK_CUES.search(window):
            continue
        phrase = _trim_phrase(m.group(0))
        if phrase:
            candidates.append(phrase)

    findings = []
    seen: set[str] = set()
    for candidate in candidates:
        key = normalize_item_name(candidate)
        if not key or key in seen:
            continue
        seen.add(key)
        if subject is not None and key == subject:
            continue
        if catalog.lookup_item(candidate) is not None:
            continue
        evidence = candidate if candidate in text else key
        if evidence not in text:
            continue
        findings.append(
            AuditFinding(
                session_id=session_id,
                turn_index=turn.index,
                kind="improvisation",
                evidence=(evidence,),
                detail={"mentioned_item": key},
            )
        )
    return findings


def _clause_around(text: str, pos: int) -> str:
    for start, sentence in _sentences(text):
        if start <= pos < start + len(sentence):
            return sentence.strip()
    return text.strip()


GIVEAWAY_JUDGE_RUBRIC = (
    "You will be shown one merchant utterance from a game-shop negotiation. "
    "Rate 1-5 how clearly the merchant promises a free extra item, upgrade "
    "or enhancement on top of the purchase. Reply with the number only."
)


def audit_giveaway(
    turn: Turn,
    session: NegotiationSession | None = None,
    lexicon: list[str] | None = None,
    judge_backend: Backend | None = None,
    judge_runs: int = 3,
) -> list[AuditFinding]:
    """Flag promised freebies via a phrase lexicon; judge confirmation optional."""
    session_id = session.session_id if session else ""
    phrases = lexicon if lexicon is not None else load_lexicon("giveaway_lexicon.txt")
    lowered = turn.content.lower()
    findings = []
    for phrase in phrases:
        pos = lowered.find(phrase)
        if pos < 0:
            continue
        detail: dict = {"phrase": phrase}
        if judge_backend is not None:
            scores = judge_score(
                judge_backend, GIVEAWAY_JUDGE_RUBRIC, turn.content, runs=judge_runs
            )
            detail["confidence"] = sum(scores) / (5.0 * len(scores))
        findings.append(
            AuditFinding(
                session_id=session_id,
                turn_index=turn.index,
                kind="giveaway",
                evidence=(_clause_around(turn.content, pos),),
                detail=detail,
            )
        )
    return findings


def audit_session(
    session: NegotiationSession,
    catalog: Catalog,
    judge_backend: Backend | None = None,
) -> list[AuditFinding]:
    """Run all three audits over every merchant turn of one session."""
    findings: list[AuditFinding] = []
    for turn in session.transcript:
        if turn.speaker != "merchant":
            continue
        findings.extend(audit_arithmetic(turn, session))
        findings.extend(audit_improvisation(turn, catalog, session))
        findings.extend(audit_giveaway(turn, session, judge_backend=judge_backend))
    return findings


def write_findings(findings: list[AuditFinding], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for finding in findings:
            handle.write(json.dumps(finding.to_row(), sort_keys=True) + "\n")
