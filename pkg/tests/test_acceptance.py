"""Top-level acceptance checks, one per shipped guarantee.

Each test covers one criterion end to end and prints a single PASS line on
success (FAIL plus the assertion otherwise), so `pytest -s` on this module
reads as a checklist. Everything runs on mock backends in seconds.
"""

import inspect
import json
import time
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from cbharness import (
    AblationMask,
    CATEGORIES,
    Dataset,
    Document,
    JudgmentStore,
    MockBehavior,
    bootstrap_ci,
    classification_report,
    dataset_stats,
    decode,
    eval_zero_shot,
    fleiss_kappa,
    genericize_labels,
    majority_baseline,
    make_mock,
    parse_codebook,
    record_judgment,
    render_codebook,
    render_prompt,
    run_ablation,
    sample_outputs,
    split,
    summarize,
)
from cbharness import suite
from cbharness.cli import main
from cbharness.metrics import kappa_band


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL  {name}", flush=True)
        raise
    print(f"PASS  {name}", flush=True)


def oracle():
    return make_mock(MockBehavior("oracle"))


def scripted(script):
    return make_mock(MockBehavior("scripted", {"script": list(script)}))


class TestAcceptance:
    def test_c01_codebook_round_trip(self, excerpt, duplicate_cb_path, tmp_path, capsys):
        with criterion("codebook round trip: parse, fixed point, rejects"):
            assert len(excerpt.classes) == 2
            assert excerpt.output_reminder.strip()
            for c in excerpt.classes:
                assert c.definition.strip()
                assert c.clarification.strip()
                assert c.negative_clarification.strip()
                assert c.positive_examples
                assert c.negative_examples
            assert parse_codebook(render_codebook(excerpt)) == excerpt

            assert main(["validate", duplicate_cb_path]) == 2
            empty = tmp_path / "empty.cb.txt"
            empty.write_text("")
            assert main(["validate", str(empty)]) == 2
            capsys.readouterr()

    def test_c02_metric_oracles(self):
        with criterion("metric oracles: weighted F1, Fleiss kappa, bands"):
            pairs = [("A", "A"), ("B", "A"), ("B", "B")]
            report = classification_report(pairs, ["A", "B"])
            assert abs(report.weighted_f1 - 2 / 3) < 1e-9

            assert abs(fleiss_kappa([[3, 0], [2, 1]]).kappa - (-0.2)) < 1e-9
            assert fleiss_kappa([[3, 0], [0, 3]]).kappa == 1.0

            assert kappa_band(0.20) == "slight"
            assert kappa_band(0.40) == "fair"
            assert kappa_band(0.60) == "moderate"
            assert kappa_band(0.80) == "substantial"
            assert kappa_band(0.81) == "almost_perfect"
            assert kappa_band(-0.01) == "poor"

    def test_c03_bootstrap(self):
        with criterion("bootstrap: default 500, degenerate CI, seeding, coverage"):
            assert inspect.signature(bootstrap_ci).parameters["resamples"].default == 500

            perfect = [("A", "A")] * 12
            metric = lambda ps: classification_report(ps, ["A", "B"]).weighted_f1
            ci = bootstrap_ci(perfect, metric)
            assert (ci.lower, ci.upper) == (1.0, 1.0)

            mixed = [("A", "A"), ("B", "A"), ("A", "B"), ("B", "B")] * 4
            a = bootstrap_ci(mixed, metric, seed=5)
            b = bootstrap_ci(mixed, metric, seed=5)
            assert (a.point, a.lower, a.upper) == (b.point, b.lower, b.upper)

            rng = np.random.default_rng(42)
            covered = 0
            for trial in range(100):
                n = int(rng.integers(20, 41))
                golds = rng.choice(["A", "B"], size=n)
                flip = rng.random(n) < rng.uniform(0.15, 0.45)
                preds = np.where(flip, np.where(golds == "A", "B", "A"), golds)
                if (preds == golds).all() or (preds != golds).all():
                    preds[0] = "B" if golds[0] == "A" else "A"
                pairs = list(zip(preds.tolist(), golds.tolist()))
                ci = bootstrap_ci(pairs, metric, seed=trial)
                covered += ci.lower <= ci.point <= ci.upper
            assert covered >= 95

    def test_c04_behavioral_suite_vs_mocks(self, behave_cb, corpus):
        with criterion("behavioral suite vs mocks: I-VII profiles under 10 s"):
            started = time.monotonic()
            docs = corpus.documents

            report, _ = suite.test_legal_labels(behave_cb, docs, oracle())
            assert report.scores["legal_fraction"] == 1.0
            report, _ = suite.test_definition_recovery(behave_cb, oracle())
            assert report.scores["recovery"] == 1.0
            report, _ = suite.test_example_recovery(behave_cb, oracle())
            assert report.scores["mean"] == 1.0

            report, _ = suite.test_order_invariance(behave_cb, docs, oracle(), seed=1)
            assert report.scores["fleiss_kappa"] == 1.0
            assert report.scores["agreement_original_reversed"] == 1.0
            assert report.scores["agreement_original_shuffled"] == 1.0

            report, _ = suite.test_exclusion_grid(behave_cb, docs, oracle())
            assert report.scores["pass_fraction"] == 0.0
            assert all(row["conditions"] == [True, True, True, False] for row in report.details)

            honoring = []
            for doc in docs:
                other = "VIGIL" if doc.gold_label != "VIGIL" else "BOYCOTT"
                honoring += [doc.gold_label] * 3 + [other]
            report, _ = suite.test_exclusion_grid(behave_cb, docs, scripted(honoring))
            assert report.scores["pass_fraction"] == 1.0

            lexical = make_mock(MockBehavior("lexical_overlap", {"majority_label": "LABEL_3"}))
            report, _ = suite.test_generic_labels(behave_cb, docs, lexical)
            golds = [d.gold_label for d in docs]
            floor = majority_baseline(golds, golds, behave_cb.labels).weighted_f1
            assert report.scores["baseline_weighted_f1"] == 1.0
            assert report.scores["weighted_f1"] == floor

            _, mapping = genericize_labels(behave_cb)
            follower = scripted(golds + [mapping[g] for g in golds])
            report, _ = suite.test_generic_labels(behave_cb, docs, follower)
            assert report.scores["delta"] == 0.0

            report, _ = suite.test_swapped_labels(behave_cb, docs, oracle(), seed=1)
            assert report.scores["weighted_f1"] == 0.0

            biased = make_mock(MockBehavior("order_biased"))
            assert behave_cb.labels[0] != behave_cb.labels[-1]
            report, _ = suite.test_order_invariance(behave_cb, docs, biased, seed=1)
            assert report.scores["agreement_original_reversed"] < 1.0

            assert time.monotonic() - started < 10.0

    def test_c05_decode(self, excerpt, behave_cb):
        with criterion("decode: prose output, longest match, bare labels"):
            generated = (
                "VIOLENT_POLITICAL_DEMONSTRATION\n"
                "\n"
                "Explanation: The marchers clashed with police and several people were "
                "hurt, which goes beyond a peaceful gathering. Therefore"
            )
            decoded = decode(generated, excerpt.labels)
            assert decoded.predicted_label == "VIOLENT_POLITICAL_DEMONSTRATION"
            assert decoded.compliance == "extra_prose"

            for output in ("COUNTER_PROTEST", "Label: COUNTER_PROTEST",
                           "Clearly a COUNTER_PROTEST event."):
                decoded = decode(output, ["PROTEST", "COUNTER_PROTEST"])
                assert decoded.predicted_label == "COUNTER_PROTEST"

            for label in behave_cb.labels + excerpt.labels:
                decoded = decode(label, behave_cb.labels + excerpt.labels)
                assert decoded.predicted_label == label
                assert decoded.compliance == "clean"

    def test_c06_ablation(self, excerpt, behave_cb, corpus):
        with criterion("ablation: all-drop rendering, oracle stability, row order"):
            prompt = render_prompt(excerpt, "some document", AblationMask.all_dropped())
            body = [
                ln for ln in prompt.split("\n")
                if ln and not ln.startswith(("Instructions:", "Classes:", "Document:"))
            ]
            assert body and all(ln.startswith("Label: ") for ln in body)

            masks = [AblationMask()] + [
                AblationMask.from_names(name) for name in AblationMask.COMPONENTS
            ] + [AblationMask.all_dropped()]
            rows, _ = run_ablation(behave_cb, corpus, oracle(), masks, resamples=10)
            assert [row.mask_tag for row in rows] == [m.tag() for m in masks]
            assert all(row.weighted_f1 == 1.0 for row in rows)

    def test_c07_split_and_stats(self):
        with criterion("split and stats: exact 70/15/15, seeded, median counts"):
            docs = [Document(id=f"s{i:03d}", text=f"sample text {i}") for i in range(100)]
            dataset = Dataset(tuple(docs), name="hundred")
            train, dev, test = split(dataset, (0.70, 0.15, 0.15), seed=9)
            assert (len(train), len(dev), len(test)) == (70, 15, 15)
            again = split(dataset, (0.70, 0.15, 0.15), seed=9)
            assert [d.id for d in train.documents] == [d.id for d in again[0].documents]
            assert {d.id for d in docs} == (
                {d.id for d in train.documents}
                | {d.id for d in dev.documents}
                | {d.id for d in test.documents}
            )

            # hand counts: ws tokens per doc, lower median
            fixtures = [
                (["one two three", "a b", "x y z w"], 3),      # [3, 2, 4] -> 3
                (["single", "pair of words and more"], 1),     # [1, 5] -> 1
                (["alpha beta", "gamma delta", "eps zeta"], 2), # [2, 2, 2] -> 2
            ]
            for texts, expected in fixtures:
                ds = Dataset(
                    tuple(Document(id=str(i), text=t) for i, t in enumerate(texts)),
                    name="fx",
                )
                assert dataset_stats(ds).median_ws_tokens == expected

    def test_c08_export(self, behave_cb_path, corpus_path, corpus, tmp_path, capsys):
        with criterion("export: boundary split, completion shape, manifest"):
            out = tmp_path / "tune.jsonl"
            assert main([
                "export-finetune",
                "--codebook", behave_cb_path,
                "--dataset", corpus_path,
                str(out),
            ]) == 0
            capsys.readouterr()
            lines = out.read_text(encoding="utf-8").splitlines()
            assert len(lines) == len(corpus.documents)
            for line, doc in zip(lines, corpus.documents):
                row = json.loads(line)
                joined = row["prompt"] + row["completion"]
                assert joined[: row["prompt_chars"]] == row["prompt"]
                assert joined[row["prompt_chars"] :] == row["completion"]
                assert row["completion"] == " " + doc.gold_label
            manifest = json.loads((tmp_path / "tune.manifest.json").read_text())
            assert manifest["trainer"]["adapter_rank"] == 16
            assert manifest["trainer"]["adapter_alpha"] == 16
            assert manifest["trainer"]["quantization_bits"] == 4

    def test_c09_triage(self, behave_cb, corpus, tmp_path):
        with criterion("triage: seeded sample, proportions, replay"):
            records, _, _ = eval_zero_shot(behave_cb, corpus, oracle(), resamples=10)
            first = sample_outputs(records, 24, seed=3)
            second = sample_outputs(records, 24, seed=3)
            assert [i.record_id for i in first.items] == [i.record_id for i in second.items]

            store = JudgmentStore(str(tmp_path / "log.jsonl"), first)
            for item in first.items[:12]:
                record_judgment(store, item.record_id, "E", judge="pat")
            for i, item in enumerate(first.items[12:]):
                record_judgment(store, item.record_id, "ABCDF"[i % 5], judge="pat")
            summary = summarize(store)
            assert summary.proportions["E"] == 0.50
            assert sum(summary.proportions.values()) == pytest.approx(1.0)
            assert set(summary.proportions) == set(CATEGORIES)

            replayed = JudgmentStore(store.path, first)
            assert summarize(replayed).to_dict() == summary.to_dict()

    def test_c10_determinism(self, behave_cb_path, corpus_path, tmp_path, capsys):
        with criterion("determinism: repeated behave and eval runs byte-identical"):
            out = str(tmp_path)
            behave_argv = [
                "behave",
                "--codebook", behave_cb_path,
                "--dataset", corpus_path,
                "--backend", "mock:oracle",
                "--out", out,
                "--run-name", "det-behave",
            ]
            eval_argv = [
                "eval",
                "--codebook", behave_cb_path,
                "--dataset", corpus_path,
                "--backend", "mock:oracle",
                "--resamples", "100",
                "--out", out,
                "--run-name", "det-eval",
            ]
            assert main(list(behave_argv)) == 0
            assert main(list(eval_argv)) == 0
            behave_first = (tmp_path / "det-behave.results.json").read_bytes()
            eval_first = (tmp_path / "det-eval.results.json").read_bytes()
            assert main(list(behave_argv)) == 0
            assert main(list(eval_argv)) == 0
            capsys.readouterr()
            assert (tmp_path / "det-behave.results.json").read_bytes() == behave_first
            assert (tmp_path / "det-eval.results.json").read_bytes() == eval_first
