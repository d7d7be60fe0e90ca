"""Behavioral tests I-VII, zero-shot eval, ablation, and results serialization.

The scripted-mock cases below lean on the documented request ordering: tags
are sequential within one operation, so a script laid out in plan order is
replayed answer-for-answer.
"""

import json
import os

import pytest

from cbharness import suite
from cbharness import (
    AblationMask,
    Codebook,
    MockBehavior,
    NoExamples,
    RunSettings,
    TEST_II_INSTRUCTIONS,
    TEST_III_INSTRUCTIONS,
    canonical_json,
    eval_zero_shot,
    genericize_labels,
    majority_baseline,
    make_mock,
    parse_codebook,
    record_from_dict,
    run_ablation,
    swap_labels,
    write_results,
)

def oracle():
    return make_mock(MockBehavior("oracle"))


def scripted(script):
    return make_mock(MockBehavior("scripted", {"script": list(script)}))


def golds(corpus):
    return [d.gold_label for d in corpus.documents]


class TestLegalLabels:
    def test_oracle_is_fully_legal(self, behave_cb, corpus):
        report, records = suite.test_legal_labels(behave_cb, corpus.documents, oracle())
        assert report.test_id == "I"
        assert report.scores == {"legal_fraction": 1.0}
        assert len(records) == len(corpus.documents)
        assert all(r.variant == "I:original" for r in records)

    def test_noncompliant_output_still_counts_as_legal(self, behave_cb, corpus):
        backend = make_mock(MockBehavior("noncompliant"))
        report, records = suite.test_legal_labels(behave_cb, corpus.documents[:4], backend)
        # prose mentions two legal labels, so something legal is present
        assert report.scores["legal_fraction"] == 1.0
        assert all(r.decoded.compliance == "multiple_labels" for r in records)

    def test_garbage_output_scores_zero(self, behave_cb, corpus):
        backend = scripted(["no idea", "hmm", "pass"])
        report, _ = suite.test_legal_labels(behave_cb, corpus.documents[:3], backend)
        assert report.scores["legal_fraction"] == 0.0

    def test_denominator_is_all_outputs(self, behave_cb, corpus):
        # 2 legal answers out of 4 outputs, gold-less docs included
        backend = scripted(["RIOT", "gibberish", "PROTEST", "???"])
        report, _ = suite.test_legal_labels(behave_cb, corpus.documents[:4], backend)
        assert report.scores["legal_fraction"] == 0.5

    def test_details_one_row_per_document(self, behave_cb, corpus):
        report, _ = suite.test_legal_labels(behave_cb, corpus.documents[:5], oracle())
        assert [d["document_id"] for d in report.details] == [
            d.id for d in corpus.documents[:5]
        ]


class TestDefinitionRecovery:
    def test_oracle_recovers_every_definition(self, behave_cb):
        report, records = suite.test_definition_recovery(behave_cb, oracle())
        assert report.test_id == "II"
        assert report.scores == {"recovery": 1.0}
        assert len(records) == len(behave_cb.classes)

    def test_prompt_uses_fixed_instructions_and_definition_as_document(self, behave_cb):
        _, records = suite.test_definition_recovery(behave_cb, oracle())
        for record, cls in zip(records, behave_cb.classes):
            assert TEST_II_INSTRUCTIONS in record.prompt
            assert behave_cb.instructions not in record.prompt
            assert cls.definition in record.prompt
            assert record.document_id == f"definition:{cls.label}"

    def test_classes_visit_in_codebook_order(self, behave_cb):
        # scripted answers laid out in class order must all land correct
        backend = scripted([c.label for c in behave_cb.classes])
        report, _ = suite.test_definition_recovery(behave_cb, backend)
        assert report.scores["recovery"] == 1.0

    def test_wrong_answers_lower_the_score(self, behave_cb):
        answers = [c.label for c in behave_cb.classes]
        answers[0], answers[1] = answers[1], answers[0]
        report, _ = suite.test_definition_recovery(behave_cb, scripted(answers))
        assert report.scores["recovery"] == pytest.approx(4 / 6)


class TestExampleRecovery:
    def test_oracle_is_perfect(self, behave_cb):
        report, records = suite.test_example_recovery(behave_cb, oracle())
        assert report.test_id == "III"
        assert report.scores["positive"] == 1.0
        assert report.scores["negative"] == 1.0
        assert report.scores["mean"] == 1.0
        # one positive and one negative per class in this codebook
        assert len(records) == 2 * len(behave_cb.classes)

    def test_host_echoer_passes_positives_fails_negatives(self, behave_cb):
        # request order: per class, positives then negatives
        script = []
        for c in behave_cb.classes:
            script.extend([c.label, c.label])
        report, _ = suite.test_example_recovery(behave_cb, scripted(script))
        assert report.scores["positive"] == 1.0
        assert report.scores["negative"] == 0.0
        assert report.scores["mean"] == 0.5

    def test_positive_only_flag(self, behave_cb):
        report, records = suite.test_example_recovery(behave_cb, oracle(), positive_only=True)
        assert set(report.scores) == {"positive", "mean"}
        assert report.scores["mean"] == report.scores["positive"] == 1.0
        assert len(records) == len(behave_cb.classes)

    def test_negative_gold_is_next_class_cyclically(self, behave_cb):
        _, records = suite.test_example_recovery(behave_cb, oracle())
        negatives = [r for r in records if r.variant == "III:negative"]
        labels = [c.label for c in behave_cb.classes]
        for i, record in enumerate(negatives):
            assert record.gold_label == labels[(i + 1) % len(labels)]

    def test_prompt_swaps_in_example_instructions(self, behave_cb):
        _, records = suite.test_example_recovery(behave_cb, oracle())
        assert all(TEST_III_INSTRUCTIONS in r.prompt for r in records)

    def test_no_examples_raises(self):
        bare = parse_codebook(
            "INSTRUCTIONS: Read the document and answer with one label.\n"
            "---\n"
            "Label: ALPHA\n"
            "Definition: The first thing.\n"
            "---\n"
            "Label: BETA\n"
            "Definition: The second thing.\n"
        )
        with pytest.raises(NoExamples):
            suite.test_example_recovery(bare, oracle())


class TestOrderInvariance:
    def test_oracle_agrees_with_itself(self, behave_cb, corpus):
        report, records = suite.test_order_invariance(behave_cb, corpus.documents, oracle(), seed=1)
        assert report.test_id == "IV"
        assert report.scores["agreement_original_reversed"] == 1.0
        assert report.scores["agreement_original_shuffled"] == 1.0
        assert report.scores["fleiss_kappa"] == 1.0
        assert report.metadata["kappa_band"] == "almost_perfect"
        assert len(records) == 3 * len(corpus.documents)

    def test_order_biased_backend_disagrees(self, behave_cb, corpus):
        backend = make_mock(MockBehavior("order_biased"))
        report, _ = suite.test_order_invariance(behave_cb, corpus.documents, backend, seed=1)
        # first class differs between original and reversed order
        assert report.scores["agreement_original_reversed"] < 1.0
        assert report.scores["fleiss_kappa"] < 1.0

    def test_three_phases_use_sequential_tags(self, behave_cb, corpus):
        docs = corpus.documents[:4]
        script = ["RIOT"] * 4 + ["PROTEST"] * 4 + ["STRIKE"] * 4
        report, records = suite.test_order_invariance(behave_cb, docs, scripted(script), seed=1)
        by_variant = {}
        for r in records:
            by_variant.setdefault(r.variant, []).append(r.decoded.predicted_label)
        assert by_variant["IV:original"] == ["RIOT"] * 4
        assert by_variant["IV:reversed"] == ["PROTEST"] * 4
        assert by_variant["IV:shuffled"] == ["STRIKE"] * 4
        assert report.scores["agreement_original_reversed"] == 0.0
        assert report.scores["agreement_original_shuffled"] == 0.0

    def test_undecodable_outputs_become_their_own_category(self, behave_cb, corpus):
        docs = corpus.documents[:2]
        # original legal, reversed garbage, shuffled legal
        script = ["RIOT", "RIOT", "??", "??", "RIOT", "RIOT"]
        report, _ = suite.test_order_invariance(behave_cb, docs, scripted(script), seed=1)
        assert report.scores["agreement_original_reversed"] == 0.0
        assert report.scores["agreement_original_shuffled"] == 1.0

    def test_seed_controls_shuffled_variant(self, behave_cb, corpus):
        docs = corpus.documents[:3]
        a, _ = suite.test_order_invariance(behave_cb, docs, oracle(), seed=1)
        b, _ = suite.test_order_invariance(behave_cb, docs, oracle(), seed=1)
        assert a.metadata["seed"] == 1
        assert a.scores == b.scores


class TestExclusionGrid:
    def test_oracle_fails_exactly_the_fourth_condition(self, behave_cb, corpus):
        docs = corpus.documents[:6]
        report, records = suite.test_exclusion_grid(behave_cb, docs, oracle())
        assert report.test_id == "V"
        assert report.scores["pass_fraction"] == 0.0
        for row in report.details:
            assert row["conditions"] == [True, True, True, False]
        assert len(records) == 4 * len(docs)

    def test_exclusion_honoring_backend_passes(self, behave_cb, corpus):
        docs = corpus.documents[:6]
        script = []
        for doc in docs:
            other = "VIGIL" if doc.gold_label != "VIGIL" else "BOYCOTT"
            script.extend([doc.gold_label, doc.gold_label, doc.gold_label, other])
        report, _ = suite.test_exclusion_grid(behave_cb, docs, scripted(script))
        assert report.scores["pass_fraction"] == 1.0

    def test_undecodable_fourth_condition_fails(self, behave_cb, corpus):
        docs = corpus.documents[:1]
        script = [docs[0].gold_label] * 3 + ["mumble"]
        report, _ = suite.test_exclusion_grid(behave_cb, docs, scripted(script))
        assert report.scores["pass_fraction"] == 0.0
        assert report.details[0]["conditions"] == [True, True, True, False]

    def test_variant_tags_cover_the_grid(self, behave_cb, corpus):
        docs = corpus.documents[:2]
        _, records = suite.test_exclusion_grid(behave_cb, docs, oracle())
        assert [r.variant for r in records[:4]] == [
            "V:doc_orig-cb_orig",
            "V:doc_distractor-cb_orig",
            "V:doc_orig-cb_exclusion",
            "V:doc_distractor-cb_exclusion",
        ]

    def test_gold_required(self, behave_cb, corpus):
        from dataclasses import replace

        from cbharness import MissingGold

        docs = [replace(corpus.documents[0], gold_label=None)]
        with pytest.raises(MissingGold):
            suite.test_exclusion_grid(behave_cb, docs, oracle())


class TestGenericLabels:
    def test_oracle_cannot_speak_generic(self, behave_cb, corpus):
        report, records = suite.test_generic_labels(behave_cb, corpus.documents, oracle())
        assert report.test_id == "VI"
        assert report.scores["baseline_weighted_f1"] == 1.0
        assert report.scores["weighted_f1"] == 0.0
        assert report.scores["delta"] == -1.0
        assert len(records) == 2 * len(corpus.documents)

    def test_lexical_backend_drops_to_majority_level(self, behave_cb, corpus):
        backend = make_mock(
            MockBehavior("lexical_overlap", {"majority_label": "LABEL_3"})
        )
        report, _ = suite.test_generic_labels(behave_cb, corpus.documents, backend)
        gold = golds(corpus)
        floor = majority_baseline(gold, gold, behave_cb.labels).weighted_f1
        assert report.scores["baseline_weighted_f1"] == 1.0
        assert report.scores["weighted_f1"] == pytest.approx(floor, abs=1e-12)
        assert report.scores["delta"] < 0

    def test_definition_follower_keeps_its_score(self, behave_cb, corpus):
        _, mapping = genericize_labels(behave_cb)
        gold = golds(corpus)
        script = gold + [mapping[g] for g in gold]
        report, _ = suite.test_generic_labels(behave_cb, corpus.documents, scripted(script))
        assert report.scores["baseline_weighted_f1"] == 1.0
        assert report.scores["weighted_f1"] == 1.0
        assert report.scores["delta"] == 0.0

    def test_mapping_is_positional(self, behave_cb, corpus):
        report, _ = suite.test_generic_labels(behave_cb, corpus.documents[:2], oracle())
        mapping = report.metadata["label_mapping"]
        for i, c in enumerate(behave_cb.classes, start=1):
            assert mapping[c.label] == f"LABEL_{i}"


class TestSwappedLabels:
    def test_gold_echoer_scores_exactly_zero(self, behave_cb, corpus):
        report, records = suite.test_swapped_labels(behave_cb, corpus.documents, oracle(), seed=1)
        assert report.test_id == "VII"
        assert report.scores["weighted_f1"] == 0.0
        assert len(records) == len(corpus.documents)

    def test_swap_follower_scores_one(self, behave_cb, corpus):
        _, pi = swap_labels(behave_cb, seed=1)
        script = [pi[d.gold_label] for d in corpus.documents]
        report, _ = suite.test_swapped_labels(behave_cb, corpus.documents, scripted(script), seed=1)
        assert report.scores["weighted_f1"] == 1.0

    def test_metadata_records_the_permutation(self, behave_cb, corpus):
        _, pi = swap_labels(behave_cb, seed=5)
        report, _ = suite.test_swapped_labels(behave_cb, corpus.documents[:3], oracle(), seed=5)
        assert report.metadata["permutation"] == pi
        assert report.metadata["seed"] == 5
        assert all(report.metadata["permutation"][k] != k for k in pi)


class TestEvalZeroShot:
    def test_oracle_perfect_with_tight_ci(self, behave_cb, corpus):
        records, report, ci = eval_zero_shot(
            behave_cb, corpus, oracle(), resamples=50, seed_bootstrap=2
        )
        assert len(records) == len(corpus.documents)
        assert report.weighted_f1 == 1.0
        assert (ci.lower, ci.upper) == (1.0, 1.0)
        assert all(r.variant == "eval:full" for r in records)

    def test_mask_changes_variant_and_prompt(self, behave_cb, corpus):
        mask = AblationMask.from_names("definition")
        records, _, _ = eval_zero_shot(
            behave_cb, corpus, oracle(), mask=mask, resamples=10
        )
        assert records[0].variant == "eval:drop:definition"
        assert "Definition:" not in records[0].prompt

    def test_goldless_dataset_returns_records_only(self, behave_cb, corpus):
        from dataclasses import replace

        bare = replace(
            corpus,
            documents=[replace(d, gold_label=None) for d in corpus.documents[:3]],
        )
        records, report, ci = eval_zero_shot(behave_cb, bare, oracle_with_map(corpus))
        assert len(records) == 3
        assert report is None and ci is None

    def test_bootstrap_seed_is_wired_through(self, behave_cb, corpus):
        backend = make_mock(MockBehavior("majority", {"label": "RIOT"}))
        _, _, a = eval_zero_shot(behave_cb, corpus, backend, resamples=80, seed_bootstrap=9)
        _, _, b = eval_zero_shot(behave_cb, corpus, backend, resamples=80, seed_bootstrap=9)
        assert (a.lower, a.upper) == (b.lower, b.upper)
        assert a.seed == 9 and a.resamples == 80


def oracle_with_map(corpus):
    gold = {d.id: d.gold_label for d in corpus.documents}
    return make_mock(MockBehavior("oracle", {"gold": gold}))


class TestAblation:
    def test_rows_keep_input_order_and_oracle_stays_perfect(self, behave_cb, corpus):
        masks = [
            AblationMask.from_names("all"),
            AblationMask.from_names("none"),
            AblationMask.from_names("positive_example,negative_example"),
        ]
        rows, records = run_ablation(
            behave_cb, corpus, oracle(), masks, resamples=10
        )
        assert [r.mask_tag for r in rows] == [
            "drop:definition+output_reminder+positive_example+negative_example+clarification+negative_clarification",
            "full",
            "drop:positive_example+negative_example",
        ]
        assert all(r.weighted_f1 == 1.0 for r in rows)
        assert len(records) == 3 * len(corpus.documents)

    def test_empty_mask_list_rejected(self, behave_cb, corpus):
        with pytest.raises(ValueError):
            run_ablation(behave_cb, corpus, oracle(), [])


class TestRecordSerialization:
    def test_round_trip(self, behave_cb, corpus):
        _, records = suite.test_legal_labels(behave_cb, corpus.documents[:3], oracle())
        for record in records:
            clone = record_from_dict(record.to_dict())
            assert clone == record
            assert clone.record_id == record.record_id

    def test_span_survives_as_tuple(self, behave_cb, corpus):
        backend = scripted(["Label: RIOT"])
        _, records = suite.test_legal_labels(behave_cb, corpus.documents[:1], backend)
        clone = record_from_dict(records[0].to_dict())
        assert clone.decoded.matched_span == (7, 11)
        assert isinstance(clone.decoded.matched_span, tuple)


class TestResultsSerialization:
    def test_canonical_json_is_sorted_and_newline_terminated(self):
        text = canonical_json({"b": 1, "a": {"z": [1, 2], "y": None}})
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"b": 1, "a": {"z": [1, 2], "y": None}}

    def test_write_results_is_byte_identical_and_atomic(self, tmp_path, behave_cb, corpus):
        report, records = suite.test_legal_labels(behave_cb, corpus.documents[:4], oracle())
        payload = {
            "report": report.to_dict(),
            "records": [r.to_dict() for r in records],
        }
        first = tmp_path / "run.results.json"
        second = tmp_path / "again.results.json"
        write_results(str(first), payload)
        write_results(str(second), payload)
        assert first.read_bytes() == second.read_bytes()
        assert not os.path.exists(str(first) + ".tmp")

    def test_report_payload_round_trips_through_json(self, behave_cb, corpus):
        report, _ = suite.test_order_invariance(behave_cb, corpus.documents[:3], oracle(), seed=1)
        parsed = json.loads(canonical_json(report.to_dict()))
        assert parsed["test_id"] == "IV"
        assert parsed["scores"]["fleiss_kappa"] == 1.0
