"""Exception hierarchy shared across the engine.

Every error raised on purpose by this package derives from VfrError so
callers can catch engine failures without swallowing programming bugs.
"""

from __future__ import annotations


class VfrError(Exception):
    """Base class for all engine errors."""


# === vector math ===


class DimensionMismatch(VfrError):
    """Two vectors (or a vector and a classifier) disagree on dimension."""


class ZeroNormVector(VfrError):
    """A vector with norm below the normalization epsilon was normalized."""


class EmptyInput(VfrError):
    """An aggregate operation received an empty collection."""


# === providers ===


class ProviderError(VfrError):
    """Base class for failures attributable to a model provider."""


class TransportError(ProviderError):
    """HTTP transport failed, returned a non-retryable status, or retries ran out."""

    def __init__(self, message: str, status: int | None = None, attempts: int = 1):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


class EmptyCompletion(ProviderError):
    """A chat or VQA provider returned empty or whitespace-only content."""


class ImageUnreadable(ProviderError):
    """An image file could not be read from disk."""


class CacheCorruption(VfrError):
    """A cache entry failed its checksum; callers recompute and overwrite."""


# === discovery / grounding ===


class UnparseableNameList(VfrError):
    """No bracketed list could be recovered from a chat reply."""


class InsufficientContexts(VfrError):
    """Too few usable context sentences survived filtering, even after retry."""


class EmptyTrainSet(VfrError):
    """An operation requiring unlabeled training images received none."""


class EmptySupportSet(VfrError):
    """A few-shot label arrived with zero support images."""


# === evaluation ===


class LengthMismatch(VfrError):
    """Parallel prediction / ground-truth sequences differ in length."""


class MissingGroundTruth(VfrError):
    """Evaluation needs ground-truth labels that the manifest does not provide."""

    def __init__(self, message: str, paths: list[str] | None = None):
        super().__init__(message)
        self.paths = paths or []


# === runner / artifacts ===


class ManifestError(VfrError):
    """A dataset manifest is malformed (bad JSON, duplicate paths, split overlap)."""


class ConfigError(VfrError):
    """A run configuration value is out of range or inconsistent."""


class ClassifierArtifactCorrupt(VfrError):
    """A persisted classifier artifact is missing fields or malformed."""


class FingerprintMismatch(VfrError):
    """An artifact was built under a different provider fingerprint than the
    one currently configured, so reusing it would mix embedding spaces."""


class StageError(VfrError):
    """Wraps any stage failure with the pipeline stage tag for CLI reporting."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
