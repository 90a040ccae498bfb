"""Exception hierarchy shared across the package.

Grouping matters for the CLI: ValidationError maps to exit code 2,
ProviderError to 3, InternalError to 4.
"""


class LangfamError(Exception):
    """Base class for all langfam errors."""


class ValidationError(LangfamError):
    """Bad user input: configs, corpora, matrices, parameters."""


class ProviderError(LangfamError):
    """Embedding provider faults."""


class InternalError(LangfamError):
    """An internal invariant was violated; indicates a bug."""


class IoFailure(LangfamError):
    """Artifact could not be read or written."""


# --- registry ---------------------------------------------------------------

class DuplicateLanguage(ValidationError):
    pass


class MultipleReferenceLanguages(ValidationError):
    pass


class UnknownFeatureId(ValidationError):
    pass


class UnknownLanguage(ValidationError):
    pass


class UnknownFeature(ValidationError):
    pass


# --- corpus -----------------------------------------------------------------

class MalformedRecord(ValidationError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


# --- embedding --------------------------------------------------------------

class ProviderUnavailable(ProviderError):
    pass


class ProviderMismatch(ProviderError):
    """Cache was written by a different provider identity."""


class DimensionMismatch(ProviderError):
    pass


class PartialFailure(ProviderError):
    def __init__(self, failed_ids: list[str]):
        self.failed_ids = list(failed_ids)
        super().__init__(
            f"{len(self.failed_ids)} samples failed to embed: "
            + ", ".join(self.failed_ids[:5])
            + ("..." if len(self.failed_ids) > 5 else "")
        )


class EmptyInput(ValidationError):
    pass


# --- similarity -------------------------------------------------------------

class ZeroVector(ValidationError):
    pass


class ReferenceLanguageMissing(ValidationError):
    pass


# --- clustering -------------------------------------------------------------

class DegenerateInput(ValidationError):
    pass


class InvalidK(ValidationError):
    pass


class RangeTooNarrow(ValidationError):
    pass


class SingleCluster(ValidationError):
    pass


# --- planner ----------------------------------------------------------------

class NoHighResourceLanguages(ValidationError):
    pass


class MissingSeed(ValidationError):
    pass


class EmptyCandidates(ValidationError):
    pass


# --- reporting --------------------------------------------------------------

class UnknownFormat(ValidationError):
    pass


class PipelineError(LangfamError):
    """Wraps a stage failure with the stage name; the cause keeps its category."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
