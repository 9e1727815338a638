"""Free-text price extraction.

Scans a model reply for money mentions (gold/silver/copper in words or
g/s/c abbreviations, combined denominations, digit-grouped numbers,
decimals) and reduces them to either a single unambiguous copper amount or
an unexpected-output classification.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .currency import COPPERS_PER_GOLD, COPPERS_PER_SILVER, CopperPrice

REASONS = ("multiple-prices", "price-range", "no-price", "ambiguous-units")


@dataclass(frozen=True)
class PriceExtraction:
    outcome: str  # "single" | "unexpected"
    amount: CopperPrice | None = None
    reason: str | None = None

    def __post_init__(self):
        if self.outcome == "single":
            assert self.amount is not None and self.amount >= 0 and self.reason is None
        elif self.outcome == "unexpected":
            assert self.amount is None and self.reason in REASONS
        else:
            raise ValueError(f"bad outcome {self.outcome!r}")


def single(amount: CopperPrice) -> PriceExtraction:
    return PriceExtraction(outcome="single", amount=amount)


def unexpected(reason: str) -> PriceExtraction:
    return PriceExtraction(outcome="unexpected", reason=reason)


_UNIT_FACTORS = {
    "gold": COPPERS_PER_GOLD,
    "golds": COPPERS_PER_GOLD,
    "g": COPPERS_PER_GOLD,
    "silver": COPPERS_PER_SILVER,
    "silvers": COPPERS_PER_SILVER,
    "s": COPPERS_PER_SILVER,
    "copper": 1,
    "coppers": 1,
    "c": 1,
}

# Number with optional digit grouping or decimal part, not glued to a word
# or another number, and not a percentage.
_NUM = r"(?<![\w.,])(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?"
_UNIT = r"(golds?|silvers?|coppers?|[gsc])(?![\w'])"

_MONEY = re.compile(rf"{_NUM}\s*{_UNIT}", re.IGNORECASE)
_BARE_NUM = re.compile(rf"{_NUM}\s*(%)?")

_MERGE_GAP = re.compile(r"^[\s,]*(and\s+)?$", re.IGNORECASE)
_RANGE_GAP = re.compile(r"^\s*(?:-|–|—|to)\s*$", re.IGNORECASE)
_ENUM_GAP = re.compile(r"^\s*(?:,|/|or|and)\s*$", re.IGNORECASE)
_BETWEEN_BEFORE = re.compile(r"(?:between|from)\s*$", re.IGNORECASE)


@dataclass
class _Token:
    start: int
    end: int
    amount: float  # coppers, possibly fractional before final rounding
    rank: int  # factor of the last-seen unit; used for denomination merging


def _parse_number(whole: str, frac: str | None) -> float:
    return float(whole.replace(",", "") + (frac or ""))


def _money_tokens(text: str) -> list[_Token]:
    tokens = [
        _Token(
            start=m.start(),
            end=m.end(),
            amount=_parse_number(m.group(1), m.group(2))
            * _UNIT_FACTORS[m.group(3).lower()],
            rank=_UNIT_FACTORS[m.group(3).lower()],
        )
        for m in _MONEY.finditer(text)
    ]
    # Merge adjacent denominations in strictly descending unit order, e.g.
    # "1 gold 20 silver" or "5g 70s 18c".
    merged: list[_Token] = []
    for token in tokens:
        if (
            merged
            and token.rank < merged[-1].rank
            and _MERGE_GAP.match(text[merged[-1].end : token.start])
        ):
            merged[-1].amount += token.amount
            merged[-1].end = token.end
            merged[-1].rank = token.rank
        else:
            merged.append(token)
    return merged


def _bare_numbers(text: str, money: list[_Token]) -> list[_Token]:
    """Numeric mentions not already part of a money token and not percents."""
    spans = [(t.start, t.end) for t in money]
    out = []
    for m in _BARE_NUM.finditer(text):
        if m.group(3):  # percentage
            continue
        if any(s <= m.start() < e for s, e in spans):
            continue
        out.append(
            _Token(m.start(), m.end(1) if not m.group(2) else m.end(2),
                   _parse_number(m.group(1), m.group(2)), 0)
        )
    return out


def extract_price(text: str) -> PriceExtraction:
    """Classify a reply: one normalized amount, or an unexpected output.

    Repeated mentions of the same normalized amount count once. An explicit
    range beats the multiple-prices classification; a number with no
    resolvable unit anywhere in the reply is ambiguous, never assumed to be
    coppers.
    """
    money = _money_tokens(text)
    bare = _bare_numbers(text, money)

    # Enumerations like "100 or 150 coppers": a unit distributes leftward to
    # bare numbers joined by or/and/comma. Range words instead mark a span.
    for token in list(money):
        changed = True
        while changed:
            changed = False
            for b in bare:
                gap = text[b.end : token.start]
                if b.end <= token.start and (_ENUM_GAP.match(gap) or _RANGE_GAP.match(gap)):
                    is_range = bool(_RANGE_GAP.match(gap)) or bool(
                        _BETWEEN_BEFORE.search(text[: b.start])
                        and _ENUM_GAP.match(gap)
                    )
                    if is_range:
                        return unexpected("price-range")
                    money.append(_Token(b.start, b.end, b.amount * token.rank, token.rank))
                    bare.remove(b)
                    changed = True
                    break

    # Ranges between two unit-carrying amounts: "5g–7g", "between 5 gold and 7 gold".
    ordered = sorted(money, key=lambda t: t.start)
    for left, right in zip(ordered, ordered[1:]):
        gap = text[left.end : right.start]
        if _RANGE_GAP.match(gap):
            return unexpected("price-range")
        if _ENUM_GAP.match(gap) and _BETWEEN_BEFORE.search(text[: left.start]):
            return unexpected("price-range")

    amounts = {round(t.amount) for t in money}
    if len(amounts) == 1:
        return single(amounts.pop())
    if len(amounts) > 1:
        return unexpected("multiple-prices")
    if bare:
        return unexpected("ambiguous-units")
    return unexpected("no-price")
