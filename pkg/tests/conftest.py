import pytest

from merchantry.catalog import Catalog, ItemRecord


def make_item(idx: int = 0, price: int = 1000, name: str | None = None,
              derivative: bool = False) -> ItemRecord:
    return ItemRecord(
        id=f"item-{idx}",
        name=name or f"Test Item {idx}",
        description=f"A sturdy piece of gear, variant {idx}. Requires level {idx % 60}.",
        retail_price=price,
        is_derivative=derivative,
    )


@pytest.fixture
def items():
    return [make_item(i, price=100 + 37 * i) for i in range(20)]


@pytest.fixture
def catalog(items):
    return Catalog(items)
