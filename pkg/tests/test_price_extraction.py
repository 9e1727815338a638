import random

import pytest

from merchantry.currency import format_coppers
from merchantry.pricetext import extract_price, single, unexpected

# One labeled case per line: (reply text, expected extraction).
CORPUS = [
    # single mentions, copper unit words
    ("The fair price is 1,238 coppers.", single(1238)),
    ("1238 coppers", single(1238)),
    ("That would be 10 coppers.", single(10)),
    ("Just 1 copper.", single(1)),
    ("I can let it go for 950 coppers, friend.", single(950)),
    ("Final answer: 57,018 coppers.", single(57018)),
    ("57018 coppers", single(57018)),
    ("It costs 400 coppers today.", single(400)),
    # silver and gold unit words
    ("2 silver", single(200)),
    ("I'd ask 12 silver for it.", single(1200)),
    ("That's worth 3 gold.", single(30000)),
    ("A bargain at 1 gold.", single(10000)),
    ("Price: 45 silvers.", single(4500)),
    ("Maybe 2 golds?", single(20000)),
    # abbreviations
    ("5g", single(50000)),
    ("70s", single(7000)),
    ("18c", single(18)),
    ("5g 70s 18c", single(57018)),
    ("1g 2s 3c", single(10203)),
    ("It'll be 3g 50s.", single(35000)),
    # combined denominations with words
    ("1 gold 20 silver", single(12000)),
    ("1 gold and 20 silver", single(12000)),
    ("5 gold 70 silver 18 copper", single(57018)),
    ("2 silver 50 copper", single(250)),
    ("1 gold, 2 silver, 3 copper", single(10203)),
    # decimals converted through the gold/silver factors
    ("1.5 gold", single(15000)),
    ("0.5 gold is my price.", single(5000)),
    ("2.25 gold, take it or leave it.", single(22500)),
    ("12.5 silver", single(1250)),
    ("About 0.1 gold.", single(1000)),
    # repeated mentions of one normalized amount collapse to a single price
    ("I'd say 12 silver, so 1200 coppers total.", single(1200)),
    ("It's 500 coppers. Yes, 500 coppers.", single(500)),
    ("1 gold, that is 10000 coppers.", single(10000)),
    ("My price is 5 silver, i.e. 500 coppers, 500 coppers exactly.", single(500)),
    ("2 gold -- 20000 coppers if you count them out.", single(20000)),
    # explicit ranges
    ("Somewhere between 500 and 700 coppers.", unexpected("price-range")),
    ("Between 1 gold and 2 gold.", unexpected("price-range")),
    ("500-700 coppers", unexpected("price-range")),
    ("500–700 coppers", unexpected("price-range")),
    ("I'd say 500 to 700 coppers.", unexpected("price-range")),
    ("From 10 to 20 silver.", unexpected("price-range")),
    ("Anywhere between 900 coppers and 1,100 coppers.", unexpected("price-range")),
    # multiple distinct prices
    ("either 100 or 150 coppers", unexpected("multiple-prices")),
    ("Maybe 500 coppers, or 6 silver if it's polished.", unexpected("multiple-prices")),
    ("100 coppers for you, 200 coppers for strangers.", unexpected("multiple-prices")),
    ("It was 1 gold, now 9000 coppers.", unexpected("multiple-prices")),
    ("I'll take 950 coppers or 1 gold, your choice.", unexpected("multiple-prices")),
    ("100, 150 or 200 coppers.", unexpected("multiple-prices")),
    # no price at all
    ("A fine piece of armor, truly.", unexpected("no-price")),
    ("I cannot put a number on such beauty.", unexpected("no-price")),
    ("", unexpected("no-price")),
    ("Ask the blacksmith across the square.", unexpected("no-price")),
    # numbers without a resolvable unit
    ("The price is 1250.", unexpected("ambiguous-units")),
    ("1250", unexpected("ambiguous-units")),
    ("I'd value it around 900, maybe 950.", unexpected("ambiguous-units")),
    ("Requires level 30.", unexpected("ambiguous-units")),
    # unit elsewhere in the reply leaves stray stat numbers harmless
    ("Requires level 30. Price: 400 coppers.", single(400)),
    ("Durability 25/25, a steal at 2 silver.", single(200)),
    # percentages are never prices
    ("I'll give you 10% off the 1000 coppers: deal?", single(1000)),
    ("A 15% discount, friend.", unexpected("no-price")),
    # punctuation and casing robustness
    ("THE PRICE IS 42 COPPERS!", single(42)),
    ("...fine... 7 Silver...", single(700)),
    ("(privately) 99 coppers (final)", single(99)),
]


@pytest.mark.parametrize("text,expected", CORPUS, ids=range(len(CORPUS)))
def test_corpus(text, expected):
    assert extract_price(text) == expected


def test_corpus_is_large_enough():
    assert len(CORPUS) >= 60


TEMPLATES = [
    "{p}",
    "The price is {p}.",
    "I'd say {p}, final offer.",
    "For you? {p}!",
    "It costs {p} at my stall.",
]


def test_round_trip_fuzz():
    """Rendering any amount in any supported style must re-extract exactly."""
    rng = random.Random(20_260_823)
    styles = ["coppers", "coppers-plain", "denominations", "abbrev"]
    for _ in range(10_000):
        amount = rng.randrange(0, 200_000)
        rendered = format_coppers(amount, rng.choice(styles))
        text = rng.choice(TEMPLATES).format(p=rendered)
        assert extract_price(text) == single(amount), (amount, text)
