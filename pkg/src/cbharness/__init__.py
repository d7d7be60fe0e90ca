"""Codebook measurement harness.

Parse semi-structured codebooks, render classification prompts, query text
generation backends (HTTP or deterministic mocks), decode predicted labels,
and score the results: behavioral tests, zero-shot evaluation, component
ablations, human error triage, and instruction-tuning export.
"""

from .codebook import (
    AblationMask,
    Codebook,
    CodebookClass,
    DISTRACTOR_SENTENCE,
    EXCLUSION_SENTENCE,
    codebook_hash,
    codebook_stats,
    genericize_labels,
    inject_distractor,
    inject_exclusion,
    parse_codebook,
    render_codebook,
    render_prompt,
    reorder,
    swap_labels,
    validate_codebook,
)
from .config import RunConfig, load_config, parse_backend_spec
from .corpus import (
    Dataset,
    Document,
    dataset_stats,
    effective_text,
    load_dataset,
    split,
    validate_labels,
    write_dataset,
)
from .decode import (
    CLEAN,
    Decoded,
    EXTRA_PROSE,
    MULTIPLE_LABELS,
    NO_LABEL,
    NO_LEGAL_LABEL,
    decode,
)
from .errors import (
    BackendUnavailable,
    BadRatios,
    DegenerateAgreement,
    DuplicateId,
    DuplicateLabel,
    EmptyCodebook,
    EmptyPairs,
    HarnessError,
    InputError,
    InvalidCategory,
    MalformedKeyLine,
    MalformedRecord,
    MissingDefinition,
    MissingGold,
    MissingParameter,
    NoExamples,
    NoJudgments,
    RuntimeFailure,
    SampleTooLarge,
    TooFewClasses,
    UnequalRaterCounts,
    UnknownGoldLabel,
    UnknownLabel,
    UnknownRecord,
)
from .exporter import (
    ExportManifest,
    FinetuneExample,
    TRAINER_DEFAULTS,
    build_examples,
    export_finetune,
    manifest_path,
)
from .gateway import (
    Backend,
    GenerationRequest,
    GenerationResult,
    MOCK_KINDS,
    MockBehavior,
    OpenAIChatBackend,
    RetryPolicy,
    TransientFailure,
    complete_batch,
    make_mock,
    prompt_document,
    prompt_labels,
)
from .metrics import (
    AgreementResult,
    BootstrapCI,
    ClassificationReport,
    bootstrap_ci,
    classification_report,
    fleiss_kappa,
    majority_baseline,
)
from .review_server import ReviewServer
from .suite import (
    AblationRow,
    PredictionRecord,
    RunSettings,
    TEST_II_INSTRUCTIONS,
    TEST_III_INSTRUCTIONS,
    TestReport,
    canonical_json,
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
    CATEGORIES,
    CATEGORY_MEANINGS,
    Judgment,
    JudgmentStore,
    ReviewItem,
    ReviewQueue,
    TriageSummary,
    queue_from_dict,
    queue_to_dict,
    record_judgment,
    sample_outputs,
    summarize,
)

__version__ = "0.1.0"
