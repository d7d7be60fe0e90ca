"""Command-line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 1 runtime failure (backend or I/O trouble at run
time), 2 input or usage error. Every run echoes its resolved configuration
into the results file, and results are byte-identical for identical
(config, inputs, mock backend).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .codebook import (
    AblationMask,
    codebook_stats,
    parse_codebook,
    render_prompt,
    validate_codebook,
)
from .config import RunConfig, load_config, parse_backend_spec
from .corpus import (
    dataset_stats,
    effective_text,
    load_dataset,
    split,
    validate_labels,
    write_dataset,
)
from .errors import HarnessError, InputError, RuntimeFailure
from .exporter import export_finetune, manifest_path
from .gateway import RetryPolicy
from .review_server import ReviewServer
from .suite import (
    RunSettings,
    eval_zero_shot,
    record_from_dict,
    run_ablation,
    test_definition_recovery,
    test_example_recovery,
    test_exclusion_grid,
    test_generic_labels,
    test_legal_labels,
    test_order_invariance,
    test_swapped_labels,
    write_results,
)
from .triage import (
    JudgmentStore,
    queue_from_dict,
    queue_to_dict,
    sample_outputs,
    summarize,
)

REVIEW_TOKEN_ENV = "CBHARNESS_REVIEW_TOKEN"

TEST_ORDER = ("I", "II", "III", "IV", "V", "VI", "VII")
_DOCUMENT_TESTS = {"I", "IV", "V", "VI", "VII"}


def _read_codebook(path: str | None):
    if not path:
        raise InputError("a codebook path is required (flag or config file)")
    try:
        with open(path, encoding="utf-8") as handle:
            source = handle.read()
    except FileNotFoundError:
        raise InputError(f"codebook file not found: {path}")
    codebook = parse_codebook(source)
    validate_codebook(codebook)
    return codebook


def _read_dataset(path: str | None):
    if not path:
        raise InputError("a dataset path is required (flag or config file)")
    return load_dataset(path)


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "codebook": getattr(args, "codebook", None),
        "dataset": getattr(args, "dataset", None),
        "backend": getattr(args, "backend", None),
        "seed_split": getattr(args, "seed_split", None),
        "seed_shuffle": getattr(args, "seed_shuffle", None),
        "seed_bootstrap": getattr(args, "seed_bootstrap", None),
        "seed_sample": getattr(args, "seed_sample", None),
        "concurrency": getattr(args, "concurrency", None),
        "out_dir": getattr(args, "out", None),
    }
    return load_config(getattr(args, "config", None), overrides)


def _settings(config: RunConfig) -> RunSettings:
    return RunSettings(concurrency=config.concurrency, retry_policy=RetryPolicy())


def _backend(config: RunConfig, dataset=None):
    if not config.backend:
        raise InputError("a backend spec is required (flag or config file)")
    gold = None
    if dataset is not None:
        gold = {d.id: d.gold_label for d in dataset.documents if d.gold_label is not None}
    return parse_backend_spec(config.backend, gold)


def _results_path(config: RunConfig, run_name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, f"{run_name}.results.json")


def _default_run_name(args: argparse.Namespace, command: str, config: RunConfig) -> str:
    if getattr(args, "run_name", None):
        return args.run_name
    if config.dataset:
        stem = os.path.splitext(os.path.basename(config.dataset))[0]
        return f"{command}-{stem}"
    return command


def cmd_validate(args: argparse.Namespace) -> int:
    codebook = _read_codebook(args.codebook_path)
    print(f"OK: {len(codebook.classes)} classes: {', '.join(codebook.labels)}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = _config(args)
    payload = {}
    if config.codebook:
        codebook = _read_codebook(config.codebook)
        payload["codebook"] = dataclasses.asdict(codebook_stats(codebook))
    if config.dataset:
        stats = dataset_stats(_read_dataset(config.dataset))
        payload["dataset"] = {
            "count": stats.count,
            "median_ws_tokens": stats.median_ws_tokens,
            "label_histogram": stats.label_histogram,
        }
    if not payload:
        raise InputError("stats needs --codebook and/or --dataset")
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    config = _config(args)
    codebook = _read_codebook(config.codebook)
    mask = AblationMask.from_names(args.mask)
    if args.document is not None:
        text = args.document
    elif args.doc_id is not None:
        dataset = _read_dataset(config.dataset)
        matches = [d for d in dataset.documents if d.id == args.doc_id]
        if not matches:
            raise InputError(f"document {args.doc_id!r} not found in {config.dataset}")
        text = effective_text(matches[0])
    else:
        raise InputError("render needs --document or --doc-id")
    print(render_prompt(codebook, text, mask))
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    config = _config(args)
    dataset = _read_dataset(config.dataset)
    try:
        ratios = tuple(float(r) for r in args.ratios.split(","))
    except ValueError:
        raise InputError(f"ratios must be numbers, got {args.ratios!r}")
    parts = split(dataset, ratios, config.seed_split)
    os.makedirs(config.out_dir, exist_ok=True)
    for part in parts:
        path = os.path.join(config.out_dir, f"{part.name}.jsonl")
        write_dataset(part, path)
        print(f"{part.name}: {len(part)} documents -> {path}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _config(args)
    codebook = _read_codebook(config.codebook)
    dataset = _read_dataset(config.dataset)
    validate_labels(dataset, codebook)
    if args.limit is not None:
        dataset = dataclasses.replace(dataset, documents=dataset.documents[: args.limit])
    backend = _backend(config, dataset)
    mask = AblationMask.from_names(args.mask)
    records, report, ci = eval_zero_shot(
        codebook,
        dataset,
        backend,
        mask=mask,
        settings=_settings(config),
        resamples=args.resamples,
        seed_bootstrap=config.seed_bootstrap,
    )
    run_name = _default_run_name(args, "eval", config)
    payload = {
        "command": "eval",
        "run_name": run_name,
        "config": config.to_dict(),
        "mask": mask.tag(),
        "report": report.to_dict() if report else None,
        "ci": ci.to_dict() if ci else None,
        "records": [r.to_dict() for r in records],
    }
    path = _results_path(config, run_name)
    write_results(path, payload)
    if report:
        print(f"weighted F1 {report.weighted_f1:.4f} "
              f"[{ci.lower:.4f}, {ci.upper:.4f}] over {len(records)} documents")
    else:
        print(f"{len(records)} predictions (no gold labels, no report)")
    print(path)
    return 0


def _parse_tests(raw: str) -> list[str]:
    chosen = []
    for part in raw.split(","):
        name = part.strip().upper()
        if not name:
            continue
        if name not in TEST_ORDER:
            raise InputError(f"unknown test {name!r}; expected any of {', '.join(TEST_ORDER)}")
        if name not in chosen:
            chosen.append(name)
    if not chosen:
        raise InputError("no tests selected")
    return sorted(chosen, key=TEST_ORDER.index)


def cmd_behave(args: argparse.Namespace) -> int:
    config = _config(args)
    codebook = _read_codebook(config.codebook)
    tests = _parse_tests(args.tests)
    settings = _settings(config)

    dataset = None
    documents = []
    if any(t in _DOCUMENT_TESTS for t in tests):
        dataset = _read_dataset(config.dataset)
        documents = list(dataset.documents)
        if args.limit is not None:
            documents = documents[: args.limit]
    backend = _backend(config, dataset)

    reports = []
    all_records = []
    for test in tests:
        if test == "I":
            report, records = test_legal_labels(codebook, documents, backend, settings)
        elif test == "II":
            report, records = test_definition_recovery(codebook, backend, settings)
        elif test == "III":
            report, records = test_example_recovery(
                codebook, backend, settings, positive_only=args.positive_only
            )
        elif test == "IV":
            report, records = test_order_invariance(
                codebook, documents, backend, config.seed_shuffle, settings
            )
        elif test == "V":
            report, records = test_exclusion_grid(codebook, documents, backend, settings)
        elif test == "VI":
            report, records = test_generic_labels(codebook, documents, backend, settings)
        else:
            report, records = test_swapped_labels(
                codebook, documents, backend, config.seed_shuffle, settings
            )
        reports.append(report)
        all_records.extend(records)
        scores = ", ".join(f"{k}={v:.4f}" for k, v in report.scores.items())
        print(f"Test {report.test_id}: {scores}")

    run_name = _default_run_name(args, "behave", config)
    payload = {
        "command": "behave",
        "run_name": run_name,
        "config": config.to_dict(),
        "tests": [r.to_dict() for r in reports],
        "records": [r.to_dict() for r in all_records],
    }
    path = _results_path(config, run_name)
    write_results(path, payload)
    print(path)
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _config(args)
    codebook = _read_codebook(config.codebook)
    dataset = _read_dataset(config.dataset)
    validate_labels(dataset, codebook)
    if args.limit is not None:
        dataset = dataclasses.replace(dataset, documents=dataset.documents[: args.limit])
    backend = _backend(config, dataset)
    masks = [AblationMask.from_names(spec) for spec in args.masks.split(";") if spec.strip()]
    if not masks:
        raise InputError("no masks given")
    rows, records = run_ablation(
        codebook,
        dataset,
        backend,
        masks,
        settings=_settings(config),
        resamples=args.resamples,
        seed_bootstrap=config.seed_bootstrap,
    )
    for row in rows:
        print(f"{row.mask_tag}: weighted F1 {row.weighted_f1:.4f}")
    run_name = _default_run_name(args, "ablate", config)
    payload = {
        "command": "ablate",
        "run_name": run_name,
        "config": config.to_dict(),
        "rows": [
            {"mask": row.mask_tag, "weighted_f1": row.weighted_f1, "report": row.report.to_dict()}
            for row in rows
        ],
        "records": [r.to_dict() for r in records],
    }
    path = _results_path(config, run_name)
    write_results(path, payload)
    print(path)
    return 0


def _load_records(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except FileNotFoundError:
        raise InputError(f"records file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"records file is not valid JSON: {exc}")
    rows = raw["records"] if isinstance(raw, dict) else raw
    if not isinstance(rows, list):
        raise InputError("records file must hold a list or a results object with 'records'")
    return [record_from_dict(row) for row in rows]


def cmd_sample_errors(args: argparse.Namespace) -> int:
    config = _config(args)
    records = _load_records(args.records)
    queue = sample_outputs(records, args.n, config.seed_sample, args.strategy)
    os.makedirs(config.out_dir, exist_ok=True)
    name = args.run_name or "review"
    path = os.path.join(config.out_dir, f"{name}.queue.json")
    write_results(path, queue_to_dict(queue))
    print(f"{len(queue)} items -> {path}")
    return 0


def _load_queue(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            return queue_from_dict(json.load(handle))
    except FileNotFoundError:
        raise InputError(f"queue file not found: {path}")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"queue file is malformed: {exc}")


def cmd_serve_review(args: argparse.Namespace) -> int:
    queue = _load_queue(args.queue)
    store = JudgmentStore(args.log, queue)
    token = args.token or os.environ.get(REVIEW_TOKEN_ENV)
    server = ReviewServer(
        store,
        static_dir=args.static_dir,
        token=token,
        host=args.host,
        port=args.port,
    )
    print(f"review service on {server.base_url} ({len(queue)} queue items)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def cmd_summarize_errors(args: argparse.Namespace) -> int:
    queue = _load_queue(args.queue)
    store = JudgmentStore(args.log, queue)
    summary = summarize(store, args.judge)
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_export_finetune(args: argparse.Namespace) -> int:
    config = _config(args)
    codebook = _read_codebook(config.codebook)
    dataset = _read_dataset(config.dataset)
    manifest = export_finetune(codebook, dataset, args.path)
    print(f"{manifest.example_count} examples -> {args.path}")
    print(manifest_path(args.path))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--codebook", help="codebook file")
    common.add_argument("--dataset", help="dataset JSONL file")
    common.add_argument("--backend", help="backend spec, e.g. mock:oracle")
    common.add_argument("--seed-split", type=int, dest="seed_split")
    common.add_argument("--seed-shuffle", type=int, dest="seed_shuffle")
    common.add_argument("--seed-bootstrap", type=int, dest="seed_bootstrap")
    common.add_argument("--seed-sample", type=int, dest="seed_sample")
    common.add_argument("--out", help="output directory")
    common.add_argument("--concurrency", type=int)

    parser = argparse.ArgumentParser(prog="cbharness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="parse and check a codebook")
    p.add_argument("codebook_path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", parents=[common], help="codebook and dataset statistics")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("render", parents=[common], help="print one rendered prompt")
    p.add_argument("--doc-id", help="document id from the dataset")
    p.add_argument("--document", help="literal document text")
    p.add_argument("--mask", default="none", help="components to drop")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("split", parents=[common], help="train/dev/test split")
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", parents=[common], help="zero-shot evaluation")
    p.add_argument("--mask", default="none")
    p.add_argument("--limit", type=int)
    p.add_argument("--resamples", type=int, default=500)
    p.add_argument("--run-name", dest="run_name")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("behave", parents=[common], help="behavioral tests I-VII")
    p.add_argument("--tests", default="I,II,III,IV,V,VI,VII")
    p.add_argument("--limit", type=int, help="use only the first N documents")
    p.add_argument("--positive-only", action="store_true",
                   help="test III: skip negative examples")
    p.add_argument("--run-name", dest="run_name")
    p.set_defaults(func=cmd_behave)

    p = sub.add_parser("ablate", parents=[common], help="component ablation grid")
    p.add_argument(
        "--masks",
        default="none;" + ";".join(AblationMask.COMPONENTS),
        help="semicolon-separated drop lists, e.g. 'none;definition;positive_example,negative_example'",
    )
    p.add_argument("--limit", type=int)
    p.add_argument("--resamples", type=int, default=500)
    p.add_argument("--run-name", dest="run_name")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sample-errors", parents=[common], help="draw a review sample")
    p.add_argument("--records", required=True, help="results file or JSON record list")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--strategy", choices=["uniform", "errors_only"], default="uniform")
    p.add_argument("--run-name", dest="run_name")
    p.set_defaults(func=cmd_sample_errors)

    p = sub.add_parser("serve-review", parents=[common], help="run the review HTTP service")
    p.add_argument("--queue", required=True, help="queue file from sample-errors")
    p.add_argument("--log", required=True, help="judgment event log (JSONL, appended)")
    p.add_argument("--static-dir", help="directory of UI assets to serve")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8791)
    p.add_argument("--token", help=f"shared bearer token (or ${REVIEW_TOKEN_ENV})")
    p.set_defaults(func=cmd_serve_review)

    p = sub.add_parser("summarize-errors", parents=[common], help="judgment proportions")
    p.add_argument("--queue", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--judge")
    p.set_defaults(func=cmd_summarize_errors)

    p = sub.add_parser("export-finetune", parents=[common], help="write tuning pairs + manifest")
    p.add_argument("path", help="output JSONL path")
    p.set_defaults(func=cmd_export_finetune)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
