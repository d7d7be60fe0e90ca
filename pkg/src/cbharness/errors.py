"""Exception family for the harness.

Two tiers matter to the CLI: InputError means the user's files or arguments
are bad (exit 2), RuntimeFailure means the run itself broke (exit 1).
"""

from __future__ import annotations


class HarnessError(Exception):
    """Base class for every error raised by this package."""


class InputError(HarnessError):
    """Bad input data or arguments; maps to CLI exit code 2."""


class RuntimeFailure(HarnessError):
    """Failure while executing an otherwise valid run; CLI exit code 1."""


# --- codebook ---

class MalformedKeyLine(InputError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class DuplicateLabel(InputError):
    pass


class MissingDefinition(InputError):
    pass


class EmptyCodebook(InputError):
    pass


class UnknownLabel(InputError):
    pass


class TooFewClasses(InputError):
    pass


# --- corpus ---

class MalformedRecord(InputError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class DuplicateId(InputError):
    pass


class BadRatios(InputError):
    pass


class UnknownGoldLabel(InputError):
    pass


# --- gateway ---

class MissingParameter(InputError):
    pass


class BackendUnavailable(RuntimeFailure):
    pass


# --- metrics ---

class EmptyPairs(InputError):
    pass


class UnequalRaterCounts(InputError):
    pass


class DegenerateAgreement(InputError):
    pass


# --- suite ---

class MissingGold(InputError):
    pass


class NoExamples(InputError):
    pass


# --- triage ---

class SampleTooLarge(InputError):
    pass


class UnknownRecord(InputError):
    pass


class InvalidCategory(InputError):
    pass


class NoJudgments(InputError):
    pass
