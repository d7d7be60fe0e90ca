"""Human error-analysis loop: sample records, collect judgments, summarize.

Judgments live in an append-only JSONL event log. The in-memory store is the
replay of that log with last-write-wins per (record, judge), so reopening the
file reconstructs the exact store state.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field

from .errors import InvalidCategory, NoJudgments, SampleTooLarge, UnknownRecord
from .gateway import prompt_document
from .suite import PredictionRecord

CATEGORIES = ("A", "B", "C", "D", "E", "F")

CATEGORY_MEANINGS = {
    "A": "model correct",
    "B": "incorrect gold standard",
    "C": "document error",
    "D": "model non-compliance",
    "E": "model semantics or reasoning mistake",
    "F": "other",
}


@dataclass(frozen=True)
class ReviewItem:
    record_id: str
    prompt: str
    document_text: str
    output_text: str
    predicted_label: str | None
    compliance: str
    gold_label: str | None

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "prompt": self.prompt,
            "document_text": self.document_text,
            "output_text": self.output_text,
            "predicted_label": self.predicted_label,
            "compliance": self.compliance,
            "gold_label": self.gold_label,
        }


@dataclass(frozen=True)
class Judgment:
    record_id: str
    category: str
    judge: str
    note: str = ""
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "category": self.category,
            "judge": self.judge,
            "note": self.note,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class ReviewQueue:
    items: tuple[ReviewItem, ...]

    def __len__(self) -> int:
        return len(self.items)

    def record_ids(self) -> frozenset[str]:
        return frozenset(item.record_id for item in self.items)


def queue_to_dict(queue: ReviewQueue) -> dict:
    return {"items": [item.to_dict() for item in queue.items]}


def queue_from_dict(raw: dict) -> ReviewQueue:
    return ReviewQueue(tuple(ReviewItem(**item) for item in raw["items"]))


def _review_item(record: PredictionRecord) -> ReviewItem:
    return ReviewItem(
        record_id=record.record_id,
        prompt=record.prompt,
        document_text=prompt_document(record.prompt) or "",
        output_text=record.output_text,
        predicted_label=record.decoded.predicted_label,
        compliance=record.decoded.compliance,
        gold_label=record.gold_label,
    )


def sample_outputs(
    records: list[PredictionRecord],
    n: int,
    seed: int,
    strategy: str = "uniform",
) -> ReviewQueue:
    """Seeded sample without replacement. errors_only keeps records whose
    prediction differs from gold (a missing prediction counts as differing);
    records without gold are excluded under that strategy."""
    if strategy not in ("uniform", "errors_only"):
        raise ValueError(f"unknown sampling strategy: {strategy}")
    if strategy == "errors_only":
        population = [
            r
            for r in records
            if r.gold_label is not None and r.decoded.predicted_label != r.gold_label
        ]
    else:
        population = list(records)
    if n > len(population):
        raise SampleTooLarge(
            f"requested {n} but only {len(population)} records available under {strategy}"
        )
    chosen = random.Random(seed).sample(population, n)
    return ReviewQueue(tuple(_review_item(r) for r in chosen))


class JudgmentStore:
    """Append-only JSONL log of judgments, keyed by (record_id, judge).

    Writes are serialized with a lock so the review service can share one
    store across handler threads.
    """

    def __init__(self, path: str, queue: ReviewQueue):
        self.path = path
        self.queue = queue
        self._lock = threading.Lock()
        self._latest: dict[tuple[str, str], Judgment] = {}
        self._replay()

    def _replay(self) -> None:
        try:
            with open(self.path, encoding="utf-8") as handle:
                lines = handle.readlines()
        except FileNotFoundError:
            return
        for line in lines:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            judgment = Judgment(
                record_id=raw["record_id"],
                category=raw["category"],
                judge=raw["judge"],
                note=raw.get("note", ""),
                timestamp=raw.get("timestamp", 0.0),
            )
            self._latest[(judgment.record_id, judgment.judge)] = judgment

    def record(self, judgment: Judgment) -> Judgment:
        if judgment.category not in CATEGORIES:
            raise InvalidCategory(f"category must be one of {''.join(CATEGORIES)}, got {judgment.category!r}")
        if judgment.record_id not in self.queue.record_ids():
            raise UnknownRecord(f"record {judgment.record_id!r} is not in the review queue")
        if judgment.timestamp == 0.0:
            judgment = Judgment(
                judgment.record_id, judgment.category, judgment.judge, judgment.note, time.time()
            )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(judgment.to_dict(), sort_keys=True) + "\n")
            self._latest[(judgment.record_id, judgment.judge)] = judgment
        return judgment

    def latest(self, judge: str | None = None) -> list[Judgment]:
        with self._lock:
            values = list(self._latest.values())
        if judge is not None:
            values = [j for j in values if j.judge == judge]
        return values

    def judgment_for(self, record_id: str, judge: str) -> Judgment | None:
        with self._lock:
            return self._latest.get((record_id, judge))


def record_judgment(
    store: JudgmentStore,
    record_id: str,
    category: str,
    judge: str,
    note: str = "",
) -> Judgment:
    return store.record(Judgment(record_id, category, judge, note))


@dataclass(frozen=True)
class TriageSummary:
    counts: dict[str, int]
    proportions: dict[str, float]
    judged: int
    unjudged_records: int
    judges: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "counts": self.counts,
            "proportions": self.proportions,
            "judged": self.judged,
            "unjudged_records": self.unjudged_records,
            "judges": list(self.judges),
        }


def summarize(store: JudgmentStore, judge: str | None = None) -> TriageSummary:
    """Per-category proportions over judged (record, judge) units.

    Zero-count categories are reported as 0; proportions sum to 1.
    """
    judgments = store.latest(judge)
    if not judgments:
        raise NoJudgments("no judgments recorded" + (f" by judge {judge!r}" if judge else ""))
    counts = {c: 0 for c in CATEGORIES}
    for j in judgments:
        counts[j.category] += 1
    total = len(judgments)
    proportions = {c: counts[c] / total for c in CATEGORIES}
    judged_records = {j.record_id for j in judgments}
    judges = tuple(sorted({j.judge for j in judgments}))
    return TriageSummary(
        counts=counts,
        proportions=proportions,
        judged=total,
        unjudged_records=len(store.queue) - len(judged_records & store.queue.record_ids()),
        judges=judges,
    )
