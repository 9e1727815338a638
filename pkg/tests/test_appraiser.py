import random

import pytest

from conftest import make_item
from merchantry.appraiser import (
    Appraisal,
    Exemplar,
    appraise,
    build_icl_prompt,
    prompt_fingerprint,
    sample_exemplars,
    write_appraisals,
    read_appraisal_rows,
)
from merchantry.backends import ScriptedBackend
from merchantry.errors import LeakageError, NotEnoughExemplarsError
from merchantry.pricetext import single, unexpected


@pytest.fixture
def pool():
    return [make_item(i, price=100 + i) for i in range(11)]


class TestSampling:
    def test_forced_sample_from_pool_of_eleven(self, pool):
        exemplars = sample_exemplars(pool, 10, seed=1, exclude="item-0")
        assert len(exemplars) == 10
        assert all(ex.item_id != "item-0" for ex in exemplars)

    def test_determinism(self, pool):
        a = sample_exemplars(pool, 5, seed=7, exclude="item-0")
        b = sample_exemplars(pool, 5, seed=7, exclude="item-0")
        assert a == b

    def test_insufficient_pool(self, pool):
        with pytest.raises(NotEnoughExemplarsError):
            sample_exemplars(pool[:5], 10, seed=0, exclude="item-0")

    def test_same_seed_same_set_even_if_order_differs(self, pool):
        sets = {
            frozenset(ex.item_id for ex in sample_exemplars(pool, 6, seed=3, exclude="item-0"))
            for _ in range(5)
        }
        assert len(sets) == 1


class TestPromptBuild:
    def test_all_pairs_appear_exactly_once(self, pool):
        target = pool[0]
        exemplars = sample_exemplars(pool, 10, seed=1, exclude=target.id)
        messages = build_icl_prompt(target, exemplars, n=10)
        body = messages[-1].content
        for ex in exemplars:
            assert body.count(ex.description) == 1
        assert body.count(target.description) == 1
        assert "exactly one price" in messages[0].content or "single price" in messages[0].content

    def test_minimal_prompt(self, pool):
        messages = build_icl_prompt(pool[0], [Exemplar("a shiny thing", 42)], n=1)
        assert "a shiny thing" in messages[-1].content

    def test_leakage_error(self, pool):
        target = pool[0]
        bad = [Exemplar(target.description, target.retail_price, item_id=target.id)]
        with pytest.raises(LeakageError):
            build_icl_prompt(target, bad, n=1)

    def test_order_changes_fingerprint_not_set(self, pool):
        target = pool[0]
        exemplars = sample_exemplars(pool, 4, seed=2, exclude=target.id)
        fp1 = prompt_fingerprint(build_icl_prompt(target, exemplars, n=4))
        fp2 = prompt_fingerprint(build_icl_prompt(target, exemplars[::-1], n=4))
        assert fp1 != fp2


class TestAppraise:
    def test_conversion_of_reply(self, pool):
        exemplars = sample_exemplars(pool, 10, seed=1, exclude=pool[0].id)
        result = appraise(pool[0], ScriptedBackend(["2 silver"]), exemplars)
        assert result.predicted == single(200)

    def test_multiple_prices_classified(self, pool):
        exemplars = sample_exemplars(pool, 10, seed=1, exclude=pool[0].id)
        result = appraise(pool[0], ScriptedBackend(["either 100 or 150 coppers"]), exemplars)
        assert result.predicted == unexpected("multiple-prices")

    def test_regression_backend_always_single(self, pool):
        rng = random.Random(5)
        for _ in range(50):
            amount = rng.randrange(0, 60_000)
            result = appraise(
                pool[0], ScriptedBackend([str(amount)]), regression=True
            )
            assert result.predicted == single(amount)

    def test_rows_round_trip(self, tmp_path, pool):
        exemplars = sample_exemplars(pool, 10, seed=1, exclude=pool[0].id)
        appraisals = [
            appraise(pool[0], ScriptedBackend(["850 coppers"]), exemplars),
            appraise(
                pool[1],
                ScriptedBackend(["no idea"]),
                sample_exemplars(pool, 10, seed=1, exclude=pool[1].id),
            ),
        ]
        path = tmp_path / "preds.jsonl"
        write_appraisals(appraisals, path)
        rows = read_appraisal_rows(path)
        assert rows[0]["outcome"] == "single" and rows[0]["amount"] == 850
        assert rows[1]["outcome"] == "unexpected" and rows[1]["reason"] == "no-price"
