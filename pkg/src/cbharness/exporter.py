"""Instruction-tuning export: prompt/completion pairs with a character mask.

Each line carries the rendered prompt and the completion " <GOLD_LABEL>",
plus prompt_chars/completion_chars so a downstream trainer can recover the
mask boundary. The boundary is exported in characters rather than model
tokens because token counts depend on the trainer's tokenizer; trainers
should tokenize prompt and completion separately and mask by the prompt's
token count. That rationale is recorded in the manifest.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .codebook import Codebook, codebook_hash, render_prompt, validate_codebook
from .corpus import Dataset, effective_text
from .errors import MissingGold, UnknownGoldLabel

TRAINER_DEFAULTS = {
    "adapter_rank": 16,
    "adapter_alpha": 16,
    "quantization_bits": 4,
    "loss_on_output_only": True,
}

MASK_NOTE = (
    "mask boundary is in characters, not tokens; tokenize prompt and "
    "completion separately and mask loss over the prompt's tokens"
)


@dataclass(frozen=True)
class FinetuneExample:
    prompt: str
    completion: str

    @property
    def prompt_chars(self) -> int:
        return len(self.prompt)

    @property
    def completion_chars(self) -> int:
        return len(self.completion)

    def to_dict(self) -> dict:
        return {
            "prompt": self.prompt,
            "completion": self.completion,
            "prompt_chars": self.prompt_chars,
            "completion_chars": self.completion_chars,
        }


@dataclass(frozen=True)
class ExportManifest:
    example_count: int
    codebook_hash: str
    dataset_name: str
    trainer: dict
    mask_note: str = MASK_NOTE

    def to_dict(self) -> dict:
        return {
            "example_count": self.example_count,
            "codebook_hash": self.codebook_hash,
            "dataset_name": self.dataset_name,
            "trainer": self.trainer,
            "mask_note": self.mask_note,
        }


def manifest_path(export_path: str) -> str:
    stem, _ = os.path.splitext(export_path)
    return stem + ".manifest.json"


def build_examples(codebook: Codebook, dataset: Dataset) -> list[FinetuneExample]:
    validate_codebook(codebook)
    labels = set(codebook.labels)
    examples = []
    for doc in dataset.documents:
        if doc.gold_label is None:
            raise MissingGold(f"document {doc.id} has no gold label")
        if doc.gold_label not in labels:
            raise UnknownGoldLabel(
                f"document {doc.id} gold label {doc.gold_label!r} is not in the codebook"
            )
        examples.append(
            FinetuneExample(
                prompt=render_prompt(codebook, effective_text(doc)),
                completion=" " + doc.gold_label,
            )
        )
    return examples


def export_finetune(codebook: Codebook, dataset: Dataset, path: str) -> ExportManifest:
    """Write one JSONL line per document (dataset order) plus a sibling manifest."""
    examples = build_examples(codebook, dataset)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        for example in examples:
            handle.write(json.dumps(example.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    os.replace(tmp, path)
    manifest = ExportManifest(
        example_count=len(examples),
        codebook_hash=codebook_hash(codebook),
        dataset_name=dataset.name,
        trainer=dict(TRAINER_DEFAULTS),
    )
    mpath = manifest_path(path)
    mtmp = mpath + ".tmp"
    with open(mtmp, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n")
    os.replace(mtmp, mpath)
    return manifest
