"""Behavioral tests I-VII, zero-shot evaluation, and the ablation grid.

Every operation here follows one shape: build prompt variants, push them
through the gateway, decode the outputs, score. Request construction is pure
and ordered, and request_tags are globally sequential within one operation,
so a scripted mock can be given the exact answer stream. The per-test request
orders are:

  I    documents in dataset order
  II   classes in codebook order (document = the class definition)
  III  classes in codebook order; per class, positive examples then negative
  IV   three phases: original order, reversed, shuffled(seed); documents in
       dataset order within each phase
  V    per document, four conditions in order: (original doc, original cb),
       (distractor doc, original cb), (original doc, exclusion cb),
       (distractor doc, exclusion cb)
  VI   two phases: unmodified codebook, then genericized; documents in
       dataset order within each phase
  VII  documents in dataset order under the swapped codebook

Results exclude latency and wall-clock values: identical (inputs, seed, mock)
runs must serialize byte-identically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Sequence

from .codebook import (
    AblationMask,
    Codebook,
    codebook_hash,
    genericize_labels,
    inject_distractor,
    inject_exclusion,
    render_prompt,
    reorder,
    swap_labels,
    validate_codebook,
)
from .corpus import Dataset, Document, effective_text
from .decode import NO_LABEL, NO_LEGAL_LABEL, Decoded, decode
from .errors import MissingDefinition, MissingGold, NoExamples
from .gateway import Backend, GenerationRequest, RetryPolicy, complete_batch
from .metrics import (
    BootstrapCI,
    ClassificationReport,
    bootstrap_ci,
    classification_report,
    fleiss_kappa,
)

# Fixed instruction sentences for the definition/example recovery tests.
TEST_II_INSTRUCTIONS = (
    "The document below is a verbatim class definition copied from the codebook. "
    "Carefully compare it against the classes and write the Label whose definition it is. "
    "Use only the provided labels."
)
TEST_III_INSTRUCTIONS = (
    "The document below is copied verbatim from the example sections of the codebook. "
    "Carefully read the classes and write the Label that best applies to the document. "
    "Use only the provided labels."
)


@dataclass(frozen=True)
class PredictionRecord:
    document_id: str
    variant: str
    prompt: str
    output_text: str
    decoded: Decoded
    gold_label: str | None
    attempt_count: int = 1

    @property
    def record_id(self) -> str:
        return f"{self.variant}:{self.document_id}"

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "document_id": self.document_id,
            "variant": self.variant,
            "prompt": self.prompt,
            "output_text": self.output_text,
            "decoded": {
                "predicted_label": self.decoded.predicted_label,
                "compliance": self.decoded.compliance,
                "matched_span": list(self.decoded.matched_span) if self.decoded.matched_span else None,
                "legal_mentions": self.decoded.legal_mentions,
            },
            "gold_label": self.gold_label,
            "attempt_count": self.attempt_count,
        }


def record_from_dict(raw: dict) -> PredictionRecord:
    decoded = raw["decoded"]
    span = decoded.get("matched_span")
    return PredictionRecord(
        document_id=raw["document_id"],
        variant=raw["variant"],
        prompt=raw["prompt"],
        output_text=raw["output_text"],
        decoded=Decoded(
            predicted_label=decoded["predicted_label"],
            compliance=decoded["compliance"],
            matched_span=tuple(span) if span else None,
            legal_mentions=decoded["legal_mentions"],
        ),
        gold_label=raw.get("gold_label"),
        attempt_count=raw.get("attempt_count", 1),
    )


@dataclass(frozen=True)
class TestReport:
    test_id: str
    scores: dict[str, float]
    details: list[dict]
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "test_id": self.test_id,
            "scores": self.scores,
            "details": self.details,
            "metadata": self.metadata,
        }


@dataclass
class RunSettings:
    """Gateway knobs shared by every suite operation."""

    concurrency: int = 4
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)
    max_new_tokens: int = 128


@dataclass(frozen=True)
class _Planned:
    document_id: str
    variant: str
    prompt: str
    gold_label: str | None  # scoring gold, stored on the record
    request_gold: str | None  # document metadata handed to the backend


def _execute(
    planned: Sequence[_Planned],
    backend: Backend,
    decode_labels: Sequence[str],
    settings: RunSettings,
    start_tag: int = 0,
) -> list[PredictionRecord]:
    requests = [
        GenerationRequest(
            prompt=p.prompt,
            max_new_tokens=settings.max_new_tokens,
            request_tag=start_tag + i,
            doc_id=p.document_id,
            gold_label=p.request_gold,
        )
        for i, p in enumerate(planned)
    ]
    results = complete_batch(requests, backend, settings.concurrency, settings.retry_policy)
    records = []
    for p, result in zip(planned, results):
        records.append(
            PredictionRecord(
                document_id=p.document_id,
                variant=p.variant,
                prompt=p.prompt,
                output_text=result.output_text,
                decoded=decode(result.output_text, decode_labels),
                gold_label=p.gold_label,
                attempt_count=result.attempt_count,
            )
        )
    return records


def _metadata(codebook: Codebook, backend: Backend, seed: int | None = None) -> dict:
    meta = {"backend_id": backend.backend_id, "codebook_hash": codebook_hash(codebook)}
    if seed is not None:
        meta["seed"] = seed
    return meta


def _require_gold(documents: Sequence[Document]) -> None:
    missing = [d.id for d in documents if d.gold_label is None]
    if missing:
        raise MissingGold(f"documents without gold labels: {', '.join(missing[:5])}")


def eval_zero_shot(
    codebook: Codebook,
    dataset: Dataset,
    backend: Backend,
    mask: AblationMask | None = None,
    settings: RunSettings | None = None,
    resamples: int = 500,
    seed_bootstrap: int = 0,
) -> tuple[list[PredictionRecord], ClassificationReport | None, BootstrapCI | None]:
    """One prediction per document; report and 95% CI when gold labels exist."""
    validate_codebook(codebook)
    settings = settings or RunSettings()
    mask = mask or AblationMask()
    variant = f"eval:{mask.tag()}"
    planned = [
        _Planned(
            document_id=doc.id,
            variant=variant,
            prompt=render_prompt(codebook, effective_text(doc), mask),
            gold_label=doc.gold_label,
            request_gold=doc.gold_label,
        )
        for doc in dataset.documents
    ]
    records = _execute(planned, backend, codebook.labels, settings)
    pairs = [
        (r.decoded.predicted_label, r.gold_label) for r in records if r.gold_label is not None
    ]
    if not pairs:
        return records, None, None
    universe = codebook.labels
    report = classification_report(pairs, universe)
    ci = bootstrap_ci(
        pairs,
        lambda ps: classification_report(ps, universe).weighted_f1,
        resamples=resamples,
        seed=seed_bootstrap,
    )
    return records, report, ci


def test_legal_labels(
    codebook: Codebook,
    documents: Sequence[Document],
    backend: Backend,
    settings: RunSettings | None = None,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test I: fraction of outputs containing any legal label."""
    validate_codebook(codebook)
    settings = settings or RunSettings()
    planned = [
        _Planned(doc.id, "I:original", render_prompt(codebook, effective_text(doc)), doc.gold_label, doc.gold_label)
        for doc in documents
    ]
    records = _execute(planned, backend, codebook.labels, settings)
    legal = sum(1 for r in records if r.decoded.compliance != NO_LEGAL_LABEL)
    details = [
        {"document_id": r.document_id, "compliance": r.decoded.compliance} for r in records
    ]
    report = TestReport(
        "I", {"legal_fraction": legal / len(records)}, details, _metadata(codebook, backend)
    )
    return report, records


def test_definition_recovery(
    codebook: Codebook,
    backend: Backend,
    settings: RunSettings | None = None,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test II: each class definition, presented as the document, must be named."""
    validate_codebook(codebook)
    for c in codebook.classes:
        if not c.definition.strip():
            raise MissingDefinition(f"class {c.label} has an empty definition")
    settings = settings or RunSettings()
    variant_cb = Codebook(TEST_II_INSTRUCTIONS, codebook.output_reminder, codebook.classes)
    planned = [
        _Planned(
            document_id=f"definition:{c.label}",
            variant="II:definition",
            prompt=render_prompt(variant_cb, c.definition),
            gold_label=c.label,
            request_gold=c.label,
        )
        for c in codebook.classes
    ]
    records = _execute(planned, backend, codebook.labels, settings)
    correct = sum(1 for r in records if r.decoded.predicted_label == r.gold_label)
    details = [
        {
            "label": r.gold_label,
            "predicted": r.decoded.predicted_label,
            "correct": r.decoded.predicted_label == r.gold_label,
        }
        for r in records
    ]
    report = TestReport(
        "II", {"recovery": correct / len(records)}, details, _metadata(codebook, backend)
    )
    return report, records


def test_example_recovery(
    codebook: Codebook,
    backend: Backend,
    settings: RunSettings | None = None,
    positive_only: bool = False,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test III: positive examples must map to their host class, negatives must not.

    A negative example's true class is stated only in prose, so it is scored
    as "anything but the host class". The oracle treats the class after the
    host (cyclically) as its gold, which satisfies that rule by construction.
    """
    validate_codebook(codebook)
    settings = settings or RunSettings()
    variant_cb = Codebook(TEST_III_INSTRUCTIONS, codebook.output_reminder, codebook.classes)
    classes = codebook.classes
    planned: list[_Planned] = []
    hosts: list[tuple[str, str]] = []  # (host label, kind) aligned with planned
    for i, c in enumerate(classes):
        for j, example in enumerate(c.positive_examples):
            planned.append(
                _Planned(
                    document_id=f"example:{c.label}:pos{j}",
                    variant="III:positive",
                    prompt=render_prompt(variant_cb, example),
                    gold_label=c.label,
                    request_gold=c.label,
                )
            )
            hosts.append((c.label, "positive"))
        if positive_only:
            continue
        stipulated = classes[(i + 1) % len(classes)].label
        for j, example in enumerate(c.negative_examples):
            planned.append(
                _Planned(
                    document_id=f"example:{c.label}:neg{j}",
                    variant="III:negative",
                    prompt=render_prompt(variant_cb, example),
                    gold_label=stipulated,
                    request_gold=stipulated,
                )
            )
            hosts.append((c.label, "negative"))
    if not planned:
        raise NoExamples("no class has examples")
    records = _execute(planned, backend, codebook.labels, settings)

    pos_total = pos_correct = neg_total = neg_correct = 0
    details = []
    for (host, kind), r in zip(hosts, records):
        predicted = r.decoded.predicted_label
        if kind == "positive":
            ok = predicted == host
            pos_total += 1
            pos_correct += ok
        else:
            ok = predicted != host
            neg_total += 1
            neg_correct += ok
        details.append(
            {"host": host, "kind": kind, "predicted": predicted, "correct": bool(ok)}
        )
    scores: dict[str, float] = {}
    sub_scores = []
    if pos_total:
        scores["positive"] = pos_correct / pos_total
        sub_scores.append(scores["positive"])
    if neg_total:
        scores["negative"] = neg_correct / neg_total
        sub_scores.append(scores["negative"])
    scores["mean"] = sum(sub_scores) / len(sub_scores)
    report = TestReport("III", scores, details, _metadata(codebook, backend))
    return report, records


def test_order_invariance(
    codebook: Codebook,
    documents: Sequence[Document],
    backend: Backend,
    seed: int,
    settings: RunSettings | None = None,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test IV: original vs reversed vs shuffled class order as three raters."""
    validate_codebook(codebook)
    settings = settings or RunSettings()
    variants = [
        ("IV:original", codebook),
        ("IV:reversed", reorder(codebook, "reverse")),
        ("IV:shuffled", reorder(codebook, "shuffle", seed=seed)),
    ]
    all_records: list[PredictionRecord] = []
    predictions: list[list[str]] = []
    tag = 0
    for variant, cb in variants:
        planned = [
            _Planned(doc.id, variant, render_prompt(cb, effective_text(doc)), doc.gold_label, doc.gold_label)
            for doc in documents
        ]
        records = _execute(planned, backend, codebook.labels, settings, start_tag=tag)
        tag += len(planned)
        all_records.extend(records)
        predictions.append([r.decoded.predicted_label or NO_LABEL for r in records])

    original, reversed_, shuffled = predictions

    def agreement(a: list[str], b: list[str]) -> float:
        return sum(x == y for x, y in zip(a, b)) / len(a)

    categories = codebook.labels + [NO_LABEL]
    index = {c: i for i, c in enumerate(categories)}
    counts = [[0] * len(categories) for _ in documents]
    for rater in predictions:
        for i, label in enumerate(rater):
            counts[i][index[label]] += 1
    result = fleiss_kappa(counts)

    details = [
        {
            "document_id": doc.id,
            "original": original[i],
            "reversed": reversed_[i],
            "shuffled": shuffled[i],
        }
        for i, doc in enumerate(documents)
    ]
    report = TestReport(
        "IV",
        {
            "agreement_original_reversed": agreement(original, reversed_),
            "agreement_original_shuffled": agreement(original, shuffled),
            "fleiss_kappa": result.kappa,
        },
        details,
        {**_metadata(codebook, backend, seed), "kappa_band": result.band},
    )
    return report, all_records


def test_exclusion_grid(
    codebook: Codebook,
    documents: Sequence[Document],
    backend: Backend,
    settings: RunSettings | None = None,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test V: 2x2 grid of (distractor in document) x (exclusion in codebook).

    Conditions 1-3 expect the gold label; condition 4 (both present) expects
    any decodable label other than gold. An item passes iff all four hold.
    """
    validate_codebook(codebook)
    _require_gold(documents)
    settings = settings or RunSettings()
    exclusion_cbs = {label: inject_exclusion(codebook, label) for label in
                     {d.gold_label for d in documents}}
    planned: list[_Planned] = []
    for doc in documents:
        original = effective_text(doc)
        distracted = inject_distractor(original)
        excl_cb = exclusion_cbs[doc.gold_label]
        for variant, cb, text in (
            ("V:doc_orig-cb_orig", codebook, original),
            ("V:doc_distractor-cb_orig", codebook, distracted),
            ("V:doc_orig-cb_exclusion", excl_cb, original),
            ("V:doc_distractor-cb_exclusion", excl_cb, distracted),
        ):
            planned.append(
                _Planned(doc.id, variant, render_prompt(cb, text), doc.gold_label, doc.gold_label)
            )
    records = _execute(planned, backend, codebook.labels, settings)

    details = []
    passed = 0
    for i, doc in enumerate(documents):
        quad = records[4 * i : 4 * i + 4]
        preds = [r.decoded.predicted_label for r in quad]
        gold = doc.gold_label
        conditions = [
            preds[0] == gold,
            preds[1] == gold,
            preds[2] == gold,
            preds[3] is not None and preds[3] != gold,
        ]
        ok = all(conditions)
        passed += ok
        details.append(
            {
                "document_id": doc.id,
                "gold": gold,
                "predictions": preds,
                "conditions": conditions,
                "passed": bool(ok),
            }
        )
    report = TestReport(
        "V",
        {"pass_fraction": passed / len(documents)},
        details,
        _metadata(codebook, backend),
    )
    return report, records


def test_generic_labels(
    codebook: Codebook,
    documents: Sequence[Document],
    backend: Backend,
    settings: RunSettings | None = None,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test VI: replace labels with LABEL_i, score in original space via the
    inverse mapping, and report the delta against the unmodified codebook."""
    validate_codebook(codebook)
    _require_gold(documents)
    settings = settings or RunSettings()
    universe = codebook.labels

    baseline_planned = [
        _Planned(doc.id, "VI:baseline", render_prompt(codebook, effective_text(doc)), doc.gold_label, doc.gold_label)
        for doc in documents
    ]
    baseline_records = _execute(baseline_planned, backend, universe, settings)
    baseline_pairs = [(r.decoded.predicted_label, r.gold_label) for r in baseline_records]
    baseline_f1 = classification_report(baseline_pairs, universe).weighted_f1

    generic_cb, mapping = genericize_labels(codebook)
    inverse = {generic: original for original, generic in mapping.items()}
    generic_planned = [
        _Planned(doc.id, "VI:generic", render_prompt(generic_cb, effective_text(doc)), doc.gold_label, doc.gold_label)
        for doc in documents
    ]
    generic_records = _execute(
        generic_planned, backend, generic_cb.labels, settings, start_tag=len(baseline_planned)
    )
    generic_pairs = [
        (
            inverse[r.decoded.predicted_label] if r.decoded.predicted_label else None,
            r.gold_label,
        )
        for r in generic_records
    ]
    generic_f1 = classification_report(generic_pairs, universe).weighted_f1

    details = [
        {
            "document_id": doc.id,
            "gold": doc.gold_label,
            "baseline": baseline_pairs[i][0],
            "generic_mapped": generic_pairs[i][0],
        }
        for i, doc in enumerate(documents)
    ]
    report = TestReport(
        "VI",
        {
            "weighted_f1": generic_f1,
            "baseline_weighted_f1": baseline_f1,
            "delta": generic_f1 - baseline_f1,
        },
        details,
        {**_metadata(codebook, backend), "label_mapping": mapping},
    )
    return report, baseline_records + generic_records


def test_swapped_labels(
    codebook: Codebook,
    documents: Sequence[Document],
    backend: Backend,
    seed: int,
    settings: RunSettings | None = None,
) -> tuple[TestReport, list[PredictionRecord]]:
    """Test VII: derange labels; the right answer for gold c becomes pi(c)."""
    validate_codebook(codebook)
    _require_gold(documents)
    settings = settings or RunSettings()
    swapped_cb, pi = swap_labels(codebook, seed)
    planned = [
        _Planned(doc.id, "VII:swapped", render_prompt(swapped_cb, effective_text(doc)), doc.gold_label, doc.gold_label)
        for doc in documents
    ]
    records = _execute(planned, backend, codebook.labels, settings)
    pairs = [(r.decoded.predicted_label, pi[r.gold_label]) for r in records]
    f1 = classification_report(pairs, codebook.labels).weighted_f1
    details = [
        {
            "document_id": doc.id,
            "gold": doc.gold_label,
            "expected": pi[doc.gold_label],
            "predicted": records[i].decoded.predicted_label,
        }
        for i, doc in enumerate(documents)
    ]
    report = TestReport(
        "VII",
        {"weighted_f1": f1},
        details,
        {**_metadata(codebook, backend, seed), "permutation": pi},
    )
    return report, records


@dataclass(frozen=True)
class AblationRow:
    mask_tag: str
    weighted_f1: float
    report: ClassificationReport


def run_ablation(
    codebook: Codebook,
    dataset: Dataset,
    backend: Backend,
    masks: Sequence[AblationMask],
    settings: RunSettings | None = None,
    resamples: int = 500,
    seed_bootstrap: int = 0,
) -> tuple[list[AblationRow], list[PredictionRecord]]:
    """One zero-shot evaluation per mask; rows keep the input order."""
    if not masks:
        raise ValueError("masks must be non-empty")
    _require_gold(dataset.documents)
    rows = []
    all_records: list[PredictionRecord] = []
    for mask in masks:
        records, report, _ = eval_zero_shot(
            codebook,
            dataset,
            backend,
            mask=mask,
            settings=settings,
            resamples=resamples,
            seed_bootstrap=seed_bootstrap,
        )
        rows.append(AblationRow(mask.tag(), report.weighted_f1, report))
        all_records.extend(records)
    return rows, all_records


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_results(path: str, payload: dict) -> None:
    """Atomic write: byte-identical for identical payloads."""
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(canonical_json(payload))
    os.replace(tmp, path)
