"""Turn raw generated text into a predicted label plus a compliance flag.

The scanner walks the output left to right and takes the first position where
a legal label matches on an identifier boundary; if several labels match at
that position, the longest wins (COUNTER_PROTEST must never decode as its
substring PROTEST). Matching is case-sensitive. A single leading "Label:"
prefix is ignored, since prompts explicitly invite that form.

Compliance:
  clean           exactly one distinct legal label, everything else
                  whitespace/punctuation
  extra_prose     exactly one distinct legal label amid other prose
  multiple_labels more than one distinct legal label appears
  no_legal_label  no legal label appears at all
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .codebook import LABEL_ALPHABET

CLEAN = "clean"
EXTRA_PROSE = "extra_prose"
MULTIPLE_LABELS = "multiple_labels"
NO_LEGAL_LABEL = "no_legal_label"

# Reserved class name used by metrics for undecodable outputs.
NO_LABEL = "NO_LABEL"

_LABEL_PREFIX = re.compile(r"\s*Label:\s*")


@dataclass(frozen=True)
class Decoded:
    predicted_label: str | None
    compliance: str
    matched_span: tuple[int, int] | None
    legal_mentions: int


def _boundary_matches(body: str, label: str) -> list[int]:
    """Start offsets where label occurs not flanked by label-alphabet chars."""
    positions = []
    start = 0
    while True:
        idx = body.find(label, start)
        if idx < 0:
            return positions
        end = idx + len(label)
        left_ok = idx == 0 or body[idx - 1] not in LABEL_ALPHABET
        right_ok = end == len(body) or body[end] not in LABEL_ALPHABET
        if left_ok and right_ok:
            positions.append(idx)
        start = idx + 1


def decode(output_text: str, labels: Iterable[str]) -> Decoded:
    label_list = list(labels)
    if not label_list:
        raise ValueError("labels must be non-empty")

    prefix = _LABEL_PREFIX.match(output_text)
    offset = prefix.end() if prefix else 0
    body = output_text[offset:]

    first_by_label: dict[str, int] = {}
    for label in label_list:
        positions = _boundary_matches(body, label)
        if positions:
            first_by_label[label] = positions[0]

    if not first_by_label:
        return Decoded(None, NO_LEGAL_LABEL, None, 0)

    first_pos = min(first_by_label.values())
    candidates = [lbl for lbl, pos in first_by_label.items() if pos == first_pos]
    predicted = max(candidates, key=len)
    span = (offset + first_pos, offset + first_pos + len(predicted))
    mentions = len(first_by_label)

    if mentions > 1:
        return Decoded(predicted, MULTIPLE_LABELS, span, mentions)

    outside = body[:first_pos] + body[first_pos + len(predicted) :]
    if any(ch.isalnum() for ch in outside):
        return Decoded(predicted, EXTRA_PROSE, span, mentions)
    return Decoded(predicted, CLEAN, span, mentions)
