"""Codebook parsing, rendering, transforms, and size statistics.

A codebook is an ordered list of classes, each carrying a label plus the
prose components that define it (definition, clarifications, examples).
This module owns the canonical file format, the bit-exact prompt render
that every downstream stage consumes, and the structural transforms the
behavioral tests are built from (reorder, generic labels, label swap,
exclusion injection).
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field, replace

from .errors import (
    DuplicateLabel,
    EmptyCodebook,
    InputError,
    MalformedKeyLine,
    MissingDefinition,
    TooFewClasses,
    UnknownLabel,
)

# Appended to a class block / document by the Test V transforms. Exact strings
# are part of the contract; do not edit.
EXCLUSION_SENTENCE = (
    "IMPORTANT NOTE: This category does not apply if the document discusses an elephant"
)
DISTRACTOR_SENTENCE = "And we also support elephants"

LABEL_ALPHABET = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")

_HEADER_KEYS = ("INSTRUCTIONS", "OUTPUT_REMINDER")
_CLASS_KEYS = (
    "Label",
    "Definition",
    "Clarification",
    "Negative Clarification",
    "Positive Example",
    "Negative Example",
)
_SCALAR_CLASS_KEYS = ("Label", "Definition", "Clarification", "Negative Clarification")

# A line is treated as a key candidate iff it looks like `Some Key:` at column 0
# followed by a space or end of line. Anything matching this that is not a
# recognized key is rejected rather than silently absorbed into prose.
_KEY_CANDIDATE = re.compile(r"^([A-Za-z][A-Za-z_ ]*):(?= |$)")
_SEPARATOR = "---"


@dataclass
class CodebookClass:
    label: str
    definition: str
    clarification: str | None = None
    negative_clarification: str | None = None
    positive_examples: list[str] = field(default_factory=list)
    negative_examples: list[str] = field(default_factory=list)
    # Carries an injected exclusion line through rendering; never set by parse.
    exclusion_note: str | None = None


@dataclass
class Codebook:
    instructions: str
    output_reminder: str
    classes: list[CodebookClass]

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.classes]

    def class_by_label(self, label: str) -> CodebookClass:
        for c in self.classes:
            if c.label == label:
                return c
        raise UnknownLabel(f"label {label!r} not in codebook")


@dataclass(frozen=True)
class AblationMask:
    """Six independent drop flags; all-false means the full codebook."""

    definition: bool = False
    output_reminder: bool = False
    positive_example: bool = False
    negative_example: bool = False
    clarification: bool = False
    negative_clarification: bool = False

    COMPONENTS = (
        "definition",
        "output_reminder",
        "positive_example",
        "negative_example",
        "clarification",
        "negative_clarification",
    )

    @classmethod
    def all_dropped(cls) -> "AblationMask":
        return cls(**{name: True for name in cls.COMPONENTS})

    @classmethod
    def from_names(cls, names: str) -> "AblationMask":
        """Build from a comma-separated component list; "none" means no drops."""
        names = names.strip()
        if names in ("", "none", "full"):
            return cls()
        if names == "all":
            return cls.all_dropped()
        flags = {}
        for raw in names.split(","):
            name = raw.strip()
            if name not in cls.COMPONENTS:
                raise InputError(
                    f"unknown ablation component {name!r}; expected one of {', '.join(cls.COMPONENTS)}"
                )
            flags[name] = True
        return cls(**flags)

    def tag(self) -> str:
        dropped = [name for name in self.COMPONENTS if getattr(self, name)]
        return "full" if not dropped else "drop:" + "+".join(dropped)


@dataclass(frozen=True)
class CodebookStats:
    class_count: int
    per_class_definition_median_ws_tokens: int
    total_ws_tokens: int


def parse_codebook(source_text: str) -> Codebook:
    """Parse the canonical key-block format into a Codebook.

    Grammar: an optional `INSTRUCTIONS:` header, an optional `OUTPUT_REMINDER:`
    header, then class blocks separated by lines containing exactly `---`.
    A field's value starts after `Key: ` and runs until the next recognized key
    at start of line, a separator, or end of file; internal blank lines are
    kept, leading/trailing whitespace is stripped.
    """
    lines = source_text.split("\n")

    instructions = ""
    output_reminder = ""
    classes: list[CodebookClass] = []

    current_key: str | None = None
    value_lines: list[str] = []
    block: dict | None = None  # None while still in the header region
    header_done = False
    seen_header_keys: set[str] = set()

    def flush_value() -> str:
        text = "\n".join(value_lines).strip()
        value_lines.clear()
        return text

    def close_field():
        nonlocal instructions, output_reminder, current_key
        if current_key is None:
            value_lines.clear()
            return
        value = flush_value()
        if current_key == "INSTRUCTIONS":
            instructions = value
        elif current_key == "OUTPUT_REMINDER":
            output_reminder = value
        elif current_key in _SCALAR_CLASS_KEYS:
            block[current_key] = value
        elif current_key == "Positive Example":
            block.setdefault("positive", []).append(value)
        elif current_key == "Negative Example":
            block.setdefault("negative", []).append(value)
        current_key = None

    def close_block(line_no: int):
        nonlocal block
        if block is None:
            return
        label = block.get("Label", "")
        if not label or not set(label) <= LABEL_ALPHABET:
            raise MalformedKeyLine(
                block["_line"], f"label {label!r} must be a non-empty A-Z/0-9/_ token"
            )
        if not block.get("Definition"):
            raise MissingDefinition(f"class {label} has no definition")
        classes.append(
            CodebookClass(
                label=label,
                definition=block["Definition"],
                clarification=block.get("Clarification") or None,
                negative_clarification=block.get("Negative Clarification") or None,
                positive_examples=block.get("positive", []),
                negative_examples=block.get("negative", []),
            )
        )
        block = None

    for line_no, line in enumerate(lines, start=1):
        if line.strip() == _SEPARATOR:
            close_field()
            close_block(line_no)
            header_done = True
            continue
        match = _KEY_CANDIDATE.match(line)
        if match is None:
            if current_key is not None:
                value_lines.append(line)
            elif line.strip():
                raise MalformedKeyLine(line_no, f"unexpected text outside any field: {line.strip()!r}")
            continue
        key = match.group(1)
        rest = line[match.end() :].lstrip(" ")
        if key in _HEADER_KEYS:
            if header_done or block is not None:
                raise MalformedKeyLine(line_no, f"{key}: must appear before the first class block")
            if key in seen_header_keys:
                raise MalformedKeyLine(line_no, f"repeated header key {key}:")
            seen_header_keys.add(key)
            close_field()
            current_key = key
            value_lines.append(rest)
        elif key in _CLASS_KEYS:
            close_field()
            header_done = True
            if block is None:
                if key != "Label":
                    raise MalformedKeyLine(line_no, "expected 'Label:' to open a class block")
                block = {"_line": line_no}
            if key in _SCALAR_CLASS_KEYS and key in block:
                if key == "Label":
                    # Blocks are separated by ---, so a second Label here is a
                    # missing separator, the most likely authoring mistake.
                    raise MalformedKeyLine(line_no, "second 'Label:' in block; missing '---' separator?")
                raise MalformedKeyLine(line_no, f"repeated key {key}: in one block")
            current_key = key
            value_lines.append(rest)
        else:
            raise MalformedKeyLine(line_no, f"unrecognized key {key!r}")

    close_field()
    close_block(len(lines))

    if not classes:
        raise EmptyCodebook("no class blocks found")
    seen: set[str] = set()
    for c in classes:
        if c.label in seen:
            raise DuplicateLabel(f"label {c.label} appears more than once")
        seen.add(c.label)
    return Codebook(instructions=instructions, output_reminder=output_reminder, classes=classes)


def validate_codebook(codebook: Codebook) -> None:
    """Structural checks for programmatically built codebooks."""
    if not codebook.classes:
        raise EmptyCodebook("codebook has no classes")
    seen: set[str] = set()
    for c in codebook.classes:
        if not c.label or not set(c.label) <= LABEL_ALPHABET:
            raise UnknownLabel(f"label {c.label!r} must be a non-empty A-Z/0-9/_ token")
        if c.label in seen:
            raise DuplicateLabel(f"label {c.label} appears more than once")
        seen.add(c.label)
        if not c.definition:
            raise MissingDefinition(f"class {c.label} has no definition")


def _class_block_lines(cls: CodebookClass, mask: AblationMask) -> list[str]:
    lines = [f"Label: {cls.label}"]
    if not mask.definition:
        lines.append(f"Definition: {cls.definition}")
    if cls.clarification and not mask.clarification:
        lines.append(f"Clarification: {cls.clarification}")
    if cls.negative_clarification and not mask.negative_clarification:
        lines.append(f"Negative Clarification: {cls.negative_clarification}")
    if not mask.positive_example:
        lines.extend(f"Positive Example: {ex}" for ex in cls.positive_examples)
    if not mask.negative_example:
        lines.extend(f"Negative Example: {ex}" for ex in cls.negative_examples)
    if cls.exclusion_note:
        lines.append(cls.exclusion_note)
    return lines


def _render_sections(codebook: Codebook, document_text: str | None, mask: AblationMask) -> str:
    # One blank line between key lines inside a block, two between blocks,
    # one between sections. Byte-identical output for identical inputs.
    blocks = ["\n\n".join(_class_block_lines(c, mask)) for c in codebook.classes]
    sections = []
    if codebook.instructions:
        sections.append(f"Instructions: {codebook.instructions}")
    sections.append("Classes:\n\n" + "\n\n\n".join(blocks))
    if document_text is not None:
        sections.append(f"Document: {document_text}")
    if codebook.output_reminder and not mask.output_reminder:
        sections.append(f"Output reminder: {codebook.output_reminder}")
    return "\n\n".join(sections)


def render_prompt(codebook: Codebook, document_text: str, mask: AblationMask | None = None) -> str:
    """Render the full prompt for one document, bit-exact."""
    if not document_text:
        raise ValueError("document_text must be non-empty")
    return _render_sections(codebook, document_text, mask or AblationMask())


def render_codebook(codebook: Codebook) -> str:
    """Serialize back to the canonical file format.

    parse_codebook(render_codebook(cb)) is structurally identical to cb for any
    cb produced by parse_codebook (exclusion notes are a prompt-only transform
    and do not survive the file grammar).
    """
    parts = []
    if codebook.instructions:
        parts.append(f"INSTRUCTIONS: {codebook.instructions}")
    if codebook.output_reminder:
        parts.append(f"OUTPUT_REMINDER: {codebook.output_reminder}")
    blocks = [
        "\n\n".join(_class_block_lines(replace(c, exclusion_note=None), AblationMask()))
        for c in codebook.classes
    ]
    parts.append("\n\n---\n\n".join(blocks))
    return "\n\n".join(parts) + "\n"


def codebook_hash(codebook: Codebook) -> str:
    return hashlib.sha256(render_codebook(codebook).encode("utf-8")).hexdigest()


def reorder(codebook: Codebook, mode: str, seed: int | None = None) -> Codebook:
    """Return a codebook with classes reversed or seed-shuffled."""
    if mode == "reverse":
        new_classes = list(reversed(codebook.classes))
    elif mode == "shuffle":
        if seed is None:
            raise ValueError("shuffle mode requires a seed")
        new_classes = list(codebook.classes)
        random.Random(seed).shuffle(new_classes)
    else:
        raise ValueError(f"unknown reorder mode {mode!r}")
    return replace(codebook, classes=new_classes)


def genericize_labels(codebook: Codebook) -> tuple[Codebook, dict[str, str]]:
    """Rename class i (1-based) to LABEL_i; returns (codebook, original→generic).

    Label mentions inside definition/example prose are left untouched.
    """
    mapping = {c.label: f"LABEL_{i}" for i, c in enumerate(codebook.classes, start=1)}
    new_classes = [replace(c, label=mapping[c.label]) for c in codebook.classes]
    return replace(codebook, classes=new_classes), mapping


def swap_labels(codebook: Codebook, seed: int) -> tuple[Codebook, dict[str, str]]:
    """Attach each definition to a different class's label.

    Returns (codebook, π) where π maps an original label c to the label now
    carried by c's class body. π is a seeded derangement: π(c) ≠ c for all c.
    """
    labels = codebook.labels
    n = len(labels)
    if n < 2:
        raise TooFewClasses("need at least 2 classes to derange labels")
    rng = random.Random(seed)
    permuted = list(labels)
    while True:
        rng.shuffle(permuted)
        if all(a != b for a, b in zip(labels, permuted)):
            break
    pi = dict(zip(labels, permuted))
    new_classes = [replace(c, label=pi[c.label]) for c in codebook.classes]
    return replace(codebook, classes=new_classes), pi


def inject_exclusion(codebook: Codebook, target_label: str) -> Codebook:
    """Append the exclusion sentence as the final line of the target class block."""
    if target_label not in codebook.labels:
        raise UnknownLabel(f"label {target_label!r} not in codebook")
    new_classes = [
        replace(c, exclusion_note=EXCLUSION_SENTENCE) if c.label == target_label else c
        for c in codebook.classes
    ]
    return replace(codebook, classes=new_classes)


def inject_distractor(document_text: str) -> str:
    """Append the distractor sentence to the document."""
    if document_text and not document_text[-1].isspace():
        return document_text + " " + DISTRACTOR_SENTENCE
    return document_text + DISTRACTOR_SENTENCE


def ws_token_count(text: str) -> int:
    return len(text.split())


def lower_median(values: list[int]) -> int:
    """Median; even-length lists take the lower middle."""
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def codebook_stats(codebook: Codebook) -> CodebookStats:
    """Whitespace-token sizes over the rendered codebook (no document section)."""
    rendered = _render_sections(codebook, None, AblationMask())
    return CodebookStats(
        class_count=len(codebook.classes),
        per_class_definition_median_ws_tokens=lower_median(
            [ws_token_count(c.definition) for c in codebook.classes]
        ),
        total_ws_tokens=ws_token_count(rendered),
    )
