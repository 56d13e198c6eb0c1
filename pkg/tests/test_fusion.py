import pytest
from hypothesis import given, settings, strategies as st

from aeroqa.embeddings import cosine
from aeroqa.errors import ValidationError
from aeroqa.fusion import (EvalConfig, FusionPolicy, GoldPassage, Source,
                           SystemResponse, ResponseItem, TestInstance,
                           accuracy_ratio, evaluate, exact_match, exact_recall,
                           fuse, load_testset, semantic_accuracy, semantic_recall)
from aeroqa.ingest import Passage


def _dl(n, start=0):
    return [(f"dl answer {i}", Passage("H", f"dl passage {i}", f"R{i}"))
            for i in range(start, start + n)]


def _kg(n):
    return [f"kg answer {i}" for i in range(n)]


class TestFuse:
    def test_full_streams_give_five_each(self):
        response = fuse(_kg(8), _dl(8))
        assert len(response.items) == 10
        assert [i.source for i in response.items[:5]] == [Source.KG] * 5
        assert [i.source for i in response.items[5:]] == [Source.DL] * 5

    def test_empty_kg_gives_ten_dl(self):
        response = fuse([], _dl(12))
        assert len(response.items) == 10
        assert all(i.source is Source.DL for i in response.items)

    def test_short_kg_shortfall_absorbed(self):
        response = fuse(_kg(2), _dl(12))
        assert len(response.items) == 10
        assert sum(1 for i in response.items if i.source is Source.KG) == 2
        assert sum(1 for i in response.items if i.source is Source.DL) == 8

    def test_exhaustive_quota_arithmetic(self):
        for n_kg in range(13):
            for n_dl in range(13):
                response = fuse(_kg(n_kg), _dl(n_dl))
                kg_taken = min(n_kg, 5)
                dl_taken = min(n_dl, 10 - kg_taken)
                assert len(response.items) == kg_taken + dl_taken
                assert [i.source for i in response.items] == \
                    [Source.KG] * kg_taken + [Source.DL] * dl_taken

    def test_dedupe_case_folded_keeps_first_and_refills(self):
        kg = ["Alpha", "alpha", "Bravo", "Charlie", "Delta", "Echo"]
        response = fuse(kg, _dl(10))
        kg_texts = [i.text for i in response.items if i.source is Source.KG]
        assert kg_texts == ["Alpha", "Bravo", "Charlie", "Delta", "Echo"]
        assert len(response.items) == 10

    def test_dl_duplicate_of_kg_dropped(self):
        kg = ["Shared Answer"]
        dl = [("shared answer", Passage("H", "p", "R"))] + _dl(10)
        response = fuse(kg, dl)
        texts = [i.text.casefold() for i in response.items]
        assert texts.count("shared answer") == 1
        assert len(response.items) == 10

    def test_dedupe_off_is_pure_arithmetic(self):
        kg = ["same"] * 6
        dl = [("same", Passage("H", "p", "R"))] * 6
        response = fuse(kg, dl, FusionPolicy(dedupe=False))
        assert len(response.items) == 10
        assert [i.text for i in response.items] == ["same"] * 10

    def test_kg_items_use_answer_text_as_passage(self):
        response = fuse(["Directional control"], [])
        assert response.items[0].passage is None
        assert response.items[0].passage_text() == "Directional control"

    def test_bad_policy_rejected(self):
        with pytest.raises(ValidationError):
            FusionPolicy(total_slots=4, per_module_quota=5)

    @given(st.lists(st.text(min_size=1, max_size=6), max_size=15),
           st.lists(st.text(min_size=1, max_size=6), max_size=15))
    @settings(max_examples=80, deadline=None)
    def test_invariants_hold_for_random_streams(self, kg, dl_texts):
        dl = [(t, Passage("H", "p", "R")) for t in dl_texts]
        response = fuse(kg, dl)
        assert len(response.items) <= 10
        sources = [i.source for i in response.items]
        if Source.DL in sources:
            first_dl = sources.index(Source.DL)
            assert all(s is Source.DL for s in sources[first_dl:])
        texts = [i.text.strip().casefold() for i in response.items]
        assert len(texts) == len(set(texts))


class TestExactMetrics:
    # hand-built truth table for exact match / exact recall
    TABLE = [
        # preds, gold, expected_em, expected_recall
        (["Directional control"], ["Directional control"], 1, 1.0),
        (["directional control"], ["Directional control"], 0, 0.0),
        ([" Directional control "], ["Directional control"], 1, 1.0),
        ([], ["x"], 0, 0.0),
        (["b", "a"], ["a"], 0, 1.0),
        (["a", "b"], ["a", "b", "c", "d"], 1, 0.5),
        (["a"], ["a", "a", "a"], 1, 1.0),
        (["z", "a", "b"], ["a", "b", "c"], 0, 2 / 3),
        ([f"g{i}" for i in range(7)], [f"g{i}" for i in range(15)], 1, 0.7),
        (["x", "y"], ["p", "q"], 0, 0.0),
        (["a", "b", "c"], ["c"], 0, 1.0),
        (["exact"], ["exact", "other"], 1, 0.5),
        (["10", "20", "30"], ["30", "10"], 1, 1.0),
    ]

    @pytest.mark.parametrize("preds,gold,em,_", TABLE)
    def test_exact_match_table(self, preds, gold, em, _):
        assert exact_match(preds, gold) == em

    @pytest.mark.parametrize("preds,gold,_,recall", TABLE)
    def test_exact_recall_table(self, preds, gold, _, recall):
        assert exact_recall(preds, gold) == pytest.approx(recall, abs=1e-12)

    def test_fifteen_gold_denominator_capped_at_ten(self):
        preds = [f"g{i}" for i in range(7)]
        gold = [f"g{i}" for i in range(15)]
        assert exact_recall(preds, gold) == pytest.approx(0.7, abs=1e-12)

    def test_empty_gold_rejected(self):
        with pytest.raises(ValidationError):
            exact_match(["a"], [])
        with pytest.raises(ValidationError):
            exact_recall(["a"], [])

    def test_gold_order_invariance(self):
        gold = ["a", "b", "c"]
        for preds in (["a"], ["b", "c"], []):
            assert exact_recall(preds, gold) == exact_recall(preds, gold[::-1])

    def test_em_implies_recall_floor(self):
        preds, gold = ["a", "z"], ["a", "b", "c"]
        if exact_match(preds, gold):
            assert exact_recall(preds, gold) >= 1 / min(len(set(gold)), 10)


class TestAccuracyRatio:
    def test_eighty_three_of_one_twenty(self):
        assert accuracy_ratio(83, 120) == pytest.approx(0.6917, abs=0.0005)

    def test_zero_and_full(self):
        assert accuracy_ratio(0, 7) == 0.0
        assert accuracy_ratio(7, 7) == 1.0

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValidationError):
            accuracy_ratio(1, 0)
        with pytest.raises(ValidationError):
            accuracy_ratio(5, 3)


class TestSemanticMetrics:
    def test_identical_strings_hit_for_any_tau(self, provider):
        assert semantic_accuracy(["Directional control"], ["Directional control"],
                                 provider, 1.0) == 1

    def test_empty_preds_zero(self, provider):
        assert semantic_accuracy([], ["x"], provider, 0.8) == 0
        assert semantic_recall([], ["x"], provider, 0.8) == 0.0

    def test_near_duplicate_vs_unrelated(self, provider):
        # cosine("landing gear","landing gear collapsed") ~ 0.71 < 0.8,
        # so near-duplicates need higher overlap; byte-equal pairs hit
        assert semantic_accuracy(["landing gear collapsed"],
                                 ["landing gear collapsed", "other"],
                                 provider, 0.8) == 1
        assert semantic_accuracy(["fuel exhaustion"], ["landing gear"],
                                 provider, 0.8) == 0

    def test_matches_brute_force_cosine_table(self, provider):
        preds = ["landing gear", "fuel exhaustion", "directional control"]
        gold = ["landing gear collapsed", "directional control", "engine fire"]
        tau = 0.8
        table = {
            (p, g): cosine(provider.embed(p), provider.embed(g))
            for p in preds for g in gold
        }
        expected_accuracy = int(any(v >= tau for v in table.values()))
        expected_recall = sum(
            1 for g in set(gold) if any(table[(p, g)] >= tau for p in preds)
        ) / min(len(set(gold)), 10)
        assert semantic_accuracy(preds, gold, provider, tau) == expected_accuracy
        assert semantic_recall(preds, gold, provider, tau) == \
            pytest.approx(expected_recall, abs=1e-12)

    def test_rank_insensitive(self, provider):
        preds = ["aaa", "directional control"]
        gold = ["directional control"]
        assert semantic_accuracy(preds, gold, provider, 0.9) == \
            semantic_accuracy(preds[::-1], gold, provider, 0.9)

    def test_bad_tau_rejected(self, provider):
        with pytest.raises(ValidationError):
            semantic_accuracy(["a"], ["a"], provider, 0.0)
        with pytest.raises(ValidationError):
            semantic_recall(["a"], ["a"], provider, 1.5)


def _response(answers, source=Source.KG):
    return SystemResponse(items=[ResponseItem(text=a, source=source) for a in answers])


class TestEvaluate:
    def _config(self, provider):
        return EvalConfig(provider=provider, tau=0.8)

    def test_perfect_single_instance(self, provider):
        testset = [TestInstance("q", ["right answer"],
                                [GoldPassage("some paragraph", "R1")])]
        report = evaluate(lambda q: _response(["right answer"]), testset,
                          self._config(provider))
        assert report.means["exact_match"] == 1.0
        assert report.means["exact_recall"] == 1.0
        assert report.means["semantic_accuracy_answers"] == 1.0
        assert report.means["semantic_recall_answers"] == 1.0
        assert report.abstentions == 0

    def test_total_abstention(self, provider):
        testset = [TestInstance(f"q{i}", ["gold"]) for i in range(3)]
        report = evaluate(lambda q: _response([]), testset, self._config(provider))
        assert report.abstentions == 3
        assert all(v == 0.0 for v in report.means.values())

    def test_system_failure_recorded_not_fatal(self, provider):
        def broken(question):
            raise RuntimeError("boom")
        testset = [TestInstance("q", ["gold"])]
        report = evaluate(broken, testset, self._config(provider))
        assert report.failures == 1
        assert report.instances[0].failed

    def test_empty_testset_rejected(self, provider):
        with pytest.raises(ValidationError):
            evaluate(lambda q: _response([]), [], self._config(provider))

    def test_load_testset_schema(self):
        text = ('[{"query": "q", "answers": ["a"], '
                '"passages": [{"text": "t", "accident_number": "R1"}]}]')
        instances = load_testset(text)
        assert instances[0].passages[0].accident_number == "R1"

    def test_load_testset_errors_name_instance(self):
        with pytest.raises(ValidationError, match="0"):
            load_testset('[{"query": "q"}]')
