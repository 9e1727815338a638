"""Money handling for the three-denomination game economy.

All amounts are stored as non-negative integers in coppers, the smallest
currency unit: 1 gold = 100 silver, 1 silver = 100 coppers.
"""

from __future__ import annotations

from .errors import InvalidAmountError

COPPERS_PER_SILVER = 100
COPPERS_PER_GOLD = 10_000

# An amount in coppers. Kept as a plain int so metrics code stays numeric.
CopperPrice = int


def to_coppers(gold: int, silver: int, copper: int) -> CopperPrice:
    """Combine a (gold, silver, copper) triple into a single copper amount."""
    if gold < 0 or silver < 0 or copper < 0:
        raise InvalidAmountError(
            f"negative denomination in ({gold}, {silver}, {copper})"
        )
    return gold * COPPERS_PER_GOLD + silver * COPPERS_PER_SILVER + copper


def split_coppers(amount: CopperPrice) -> tuple[int, int, int]:
    """Break a copper amount into its canonical (gold, silver, copper) triple."""
    if amount < 0:
        raise InvalidAmountError(f"negative amount {amount}")
    gold, rest = divmod(amount, COPPERS_PER_GOLD)
    silver, copper = divmod(rest, COPPERS_PER_SILVER)
    return gold, silver, copper


def format_coppers(amount: CopperPrice, style: str = "coppers") -> str:
    """Render an amount in one of the display styles the parser understands.

    Styles:
      coppers          "57,018 coppers"
      coppers-plain    "57018 coppers"
      denominations    "5 gold 70 silver 18 copper" (zero parts omitted)
      abbrev           "5g 70s 18c" (zero parts omitted)
    """
    if amount < 0:
        raise InvalidAmountError(f"negative amount {amount}")
    if style == "coppers":
        unit = "copper" if amount == 1 else "coppers"
        return f"{amount:,} {unit}"
    if style == "coppers-plain":
        unit = "copper" if amount == 1 else "coppers"
        return f"{amount} {unit}"
    gold, silver, copper = split_coppers(amount)
    if style == "denominations":
        parts = []
        if gold:
            parts.append(f"{gold} gold")
        if silver:
            parts.append(f"{silver} silver")
        if copper or not parts:
            parts.append(f"{copper} copper")
        return " ".join(parts)
    if style == "abbrev":
        parts = []
        if gold:
            parts.append(f"{gold}g")
        if silver:
            parts.append(f"{silver}s")
        if copper or not parts:
            parts.append(f"{copper}c")
        return " ".join(parts)
    raise ValueError(f"unknown style {style!r}")
