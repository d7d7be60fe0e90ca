"""Document collections: JSON Lines ingestion, context joining, splits, stats."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .codebook import Codebook, lower_median, ws_token_count
from .errors import BadRatios, DuplicateId, MalformedRecord, UnknownGoldLabel


@dataclass
class Document:
    id: str
    text: str
    context: str | None = None
    gold_label: str | None = None


@dataclass
class Dataset:
    documents: list[Document]
    name: str

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


@dataclass(frozen=True)
class DatasetStats:
    count: int
    median_ws_tokens: int | None
    label_histogram: dict[str, int] = field(default_factory=dict)


def effective_text(doc: Document) -> str:
    """Document text with its preceding context, joined by one blank line."""
    if doc.context:
        return f"{doc.context}\n\n{doc.text}"
    return doc.text


def load_dataset(path: str, name: str | None = None) -> Dataset:
    """Load a JSON Lines dataset: one object per line with id/text/context/label."""
    documents: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(line_no, "record must be an object")
            try:
                doc_id = record["id"]
                text = record["text"]
            except KeyError as exc:
                raise MalformedRecord(line_no, f"missing field {exc.args[0]!r}") from exc
            if not isinstance(doc_id, str) or not doc_id:
                raise MalformedRecord(line_no, "id must be a non-empty string")
            if not isinstance(text, str) or not text:
                raise MalformedRecord(line_no, "text must be a non-empty string")
            context = record.get("context")
            label = record.get("label")
            if context is not None and not isinstance(context, str):
                raise MalformedRecord(line_no, "context must be a string or null")
            if label is not None and not isinstance(label, str):
                raise MalformedRecord(line_no, "label must be a string or null")
            if doc_id in seen:
                raise DuplicateId(f"id {doc_id!r} repeated at line {line_no}")
            seen.add(doc_id)
            documents.append(Document(id=doc_id, text=text, context=context, gold_label=label))
    if name is None:
        name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return Dataset(documents=documents, name=name)


def write_dataset(dataset: Dataset, path: str) -> None:
    """Write back in the line format load_dataset reads (lossless round trip)."""
    with open(path, "w", encoding="utf-8") as handle:
        for doc in dataset.documents:
            record = {
                "id": doc.id,
                "text": doc.text,
                "context": doc.context,
                "label": doc.gold_label,
            }
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def validate_labels(dataset: Dataset, codebook: Codebook) -> None:
    """Strict mode: every present gold label must be a codebook label."""
    labels = set(codebook.labels)
    for doc in dataset.documents:
        if doc.gold_label is not None and doc.gold_label not in labels:
            raise UnknownGoldLabel(f"document {doc.id!r} has gold label {doc.gold_label!r}")


def split(dataset: Dataset, ratios: tuple[float, float, float], seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded permutation, then a contiguous cut into train/dev/test.

    Sizes are floor(N*r) per part; flooring remainder goes to train.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise BadRatios("need three positive ratios")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios sum to {sum(ratios)!r}, not 1")
    docs = list(dataset.documents)
    random.Random(seed).shuffle(docs)
    n = len(docs)
    sizes = [int(n * r) for r in ratios]
    sizes[0] += n - sum(sizes)
    train = docs[: sizes[0]]
    dev = docs[sizes[0] : sizes[0] + sizes[1]]
    test = docs[sizes[0] + sizes[1] :]
    return (
        Dataset(train, f"{dataset.name}.train"),
        Dataset(dev, f"{dataset.name}.dev"),
        Dataset(test, f"{dataset.name}.test"),
    )


def dataset_stats(dataset: Dataset) -> DatasetStats:
    """Count, median whitespace tokens of effective text, gold-label histogram."""
    histogram: dict[str, int] = {}
    for doc in dataset.documents:
        if doc.gold_label is not None:
            histogram[doc.gold_label] = histogram.get(doc.gold_label, 0) + 1
    median = None
    if dataset.documents:
        median = lower_median([ws_token_count(effective_text(d)) for d in dataset.documents])
    return DatasetStats(
        count=len(dataset.documents),
        median_ws_tokens=median,
        label_histogram=dict(sorted(histogram.items())),
    )
