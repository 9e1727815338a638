"""Item catalog: ingest, filtering, dataset splitting, summary stats, lookup.

The catalog is the ground-truth registry of purchasable items. It is loaded
once, filtered, and then treated as immutable; every other subsystem reads
from it.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
import statistics
from dataclasses import dataclass, field

from .currency import CopperPrice, to_coppers
from .errors import CatalogError, EmptyCatalogError, SplitTooSmallError

MIN_PRICE_COPPERS = 10

_ARTICLES = ("the", "a", "an")


@dataclass(frozen=True)
class ItemRecord:
    id: str
    name: str
    description: str
    retail_price: CopperPrice
    is_derivative: bool = False

    def __post_init__(self):
        if not self.name:
            raise CatalogError(f"item {self.id!r} has an empty name")
        if not self.description:
            raise CatalogError(f"item {self.id!r} has an empty description")
        if self.retail_price < 0:
            raise CatalogError(f"item {self.id!r} has a negative price")


@dataclass(frozen=True)
class RejectedRow:
    line_number: int
    raw: str
    error: str


@dataclass
class LoadResult:
    items: list[ItemRecord]
    rejects: list[RejectedRow] = field(default_factory=list)


@dataclass(frozen=True)
class DatasetSplit:
    train: list[str]
    validation: list[str]
    test: list[str]
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "train": self.train,
                "validation": self.validation,
                "test": self.test,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetSplit":
        doc = json.loads(text)
        return cls(
            train=list(doc["train"]),
            validation=list(doc["validation"]),
            test=list(doc["test"]),
            seed=int(doc["seed"]),
        )


@dataclass(frozen=True)
class CatalogStats:
    count: int
    min: CopperPrice
    max: CopperPrice
    mean: CopperPrice
    median: CopperPrice


def _record_from_mapping(row: dict, line_number: int) -> ItemRecord:
    try:
        item_id = str(row["id"]).strip()
        name = str(row["name"]).strip()
        description = str(row["description"]).strip()
    except KeyError as exc:
        raise CatalogError(f"missing field {exc.args[0]!r}") from exc
    if not item_id:
        raise CatalogError("empty id")

    has_gold = "price_gold" in row and row.get("price_gold") not in (None, "")
    has_silver = "price_silver" in row and row.get("price_silver") not in (None, "")
    try:
        if has_gold or has_silver:
            price = to_coppers(
                int(row.get("price_gold") or 0),
                int(row.get("price_silver") or 0),
                int(row.get("price_copper") or 0),
            )
        else:
            price = int(row["price_copper"])
    except KeyError as exc:
        raise CatalogError(f"missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise CatalogError(f"bad price: {exc}") from exc

    raw_flag = row.get("is_derivative", False)
    if isinstance(raw_flag, str):
        is_derivative = raw_flag.strip().lower() in ("1", "true", "yes")
    else:
        is_derivative = bool(raw_flag)

    record = ItemRecord(
        id=item_id,
        name=name,
        description=description,
        retail_price=price,
        is_derivative=is_derivative,
    )
    del line_number
    return record


def load_catalog(source, format: str = "jsonl") -> LoadResult:
    """Read items from a byte or text stream.

    ``format`` is one of ``jsonl``, ``csv``, ``tsv``. Malformed rows are
    collected into ``rejects`` rather than dropped. Raises
    EmptyCatalogError when no valid row is found.
    """
    data = source.read()
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CatalogError(f"stream is not valid UTF-8: {exc}") from exc
    else:
        text = data

    items: list[ItemRecord] = []
    rejects: list[RejectedRow] = []

    if format == "jsonl":
        for idx, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                if not isinstance(row, dict):
                    raise CatalogError("row is not an object")
                items.append(_record_from_mapping(row, idx))
            except (json.JSONDecodeError, CatalogError) as exc:
                rejects.append(RejectedRow(idx, line, str(exc)))
    elif format in ("csv", "tsv"):
        delimiter = "," if format == "csv" else "\t"
        reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
        for idx, row in enumerate(reader, start=2):
            try:
                items.append(_record_from_mapping(row, idx))
            except CatalogError as exc:
                rejects.append(RejectedRow(idx, delimiter.join(filter(None, row.values())), str(exc)))
    else:
        raise CatalogError(f"unknown catalog format {format!r}")

    if not items:
        raise EmptyCatalogError("no valid items in catalog source")
    return LoadResult(items=items, rejects=rejects)


def filter_catalog(items: list[ItemRecord]) -> list[ItemRecord]:
    """Drop derivatives and items priced below the negotiation floor."""
    return [
        item
        for item in items
        if not item.is_derivative and item.retail_price >= MIN_PRICE_COPPERS
    ]


def split_dataset(items: list[ItemRecord], seed: int) -> DatasetSplit:
    """Deterministic 80/10/10 split by item id.

    test and validation each get floor(n/10) items; train takes the
    remainder, so the sizes reproduce (2616, 327, 327) at n=3270.
    """
    n = len(items)
    if n < 10:
        raise SplitTooSmallError(f"need at least 10 items to split, got {n}")
    ids = [item.id for item in items]
    rng = random.Random(seed)
    rng.shuffle(ids)
    tenth = n // 10
    test = sorted(ids[:tenth])
    validation = sorted(ids[tenth : 2 * tenth])
    train = sorted(ids[2 * tenth :])
    return DatasetSplit(train=train, validation=validation, test=test, seed=seed)


def catalog_stats(items: list[ItemRecord]) -> CatalogStats:
    """Price summary. Median of an even-sized set is the lower middle element."""
    if not items:
        raise EmptyCatalogError("cannot summarize an empty catalog")
    prices = sorted(item.retail_price for item in items)
    n = len(prices)
    median = prices[(n - 1) // 2]
    return CatalogStats(
        count=n,
        min=prices[0],
        max=prices[-1],
        mean=round(statistics.fmean(prices)),
        median=median,
    )


_PUNCT_EDGES = re.compile(r"^[\s\"'.,;:!?()\[\]-]+|[\s\"'.,;:!?()\[\]-]+$")
_WS = re.compile(r"\s+")


def normalize_item_name(name: str) -> str:
    """Lowercase, trim punctuation, collapse whitespace, strip a leading article."""
    text = _PUNCT_EDGES.sub("", name.lower())
    text = _WS.sub(" ", text).strip()
    for article in _ARTICLES:
        if text.startswith(article + " "):
            text = text[len(article) + 1 :]
            break
    return text


class Catalog:
    """Immutable post-filter item registry with normalized-name lookup."""

    def __init__(self, items: list[ItemRecord]):
        self.items = list(items)
        self._by_id = {item.id: item for item in self.items}
        self._by_name: dict[str, ItemRecord] = {}
        for item in self.items:
            self._by_name.setdefault(normalize_item_name(item.name), item)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def get(self, item_id: str) -> ItemRecord | None:
        return self._by_id.get(item_id)

    def lookup_item(self, name: str) -> ItemRecord | None:
        key = normalize_item_name(name)
        if not key:
            return None
        return self._by_name.get(key)


def lookup_item(name: str, items: Catalog | list[ItemRecord]) -> ItemRecord | None:
    catalog = items if isinstance(items, Catalog) else Catalog(items)
    return catalog.lookup_item(name)
