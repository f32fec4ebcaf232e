"""Candidate-name refinement: score classes against the unlabeled pool and
keep the top fraction.

A candidate's relevance is the mean cosine between its text prototype and
the raw (unaugmented) embeddings of the training images. Refinement is a
soft filter: it keeps a fixed count, never applies a score threshold.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyTrainSet, ZeroNormVector
from .grounding import GroundedClass
from .vectors import NORM_EPSILON, EmbeddingVector, _as_array

log = logging.getLogger(__name__)

DEFAULT_RETENTION_RATIO = 0.8


@dataclass(frozen=True)
class RefinementConfig:
    """Knobs for the top-k filter.

    k_override, when set, wins over retention_ratio. cnr_enabled=False turns
    the filter off entirely: every candidate is retained (scores are still
    reported).
    """

    retention_ratio: float = DEFAULT_RETENTION_RATIO
    k_override: int | None = None
    cnr_enabled: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.retention_ratio <= 1.0):
            raise ConfigError(f"retention_ratio must be in (0, 1], got {self.retention_ratio}")
        if self.k_override is not None and self.k_override < 1:
            raise ConfigError(f"k_override must be >= 1, got {self.k_override}")

    def k_effective(self, n_candidates: int) -> int:
        if n_candidates < 1:
            raise ConfigError("k_effective needs at least one candidate")
        if not self.cnr_enabled:
            return n_candidates
        k = self.k_override if self.k_override is not None else max(
            1, round(self.retention_ratio * n_candidates)
        )
        return min(int(k), n_candidates)


@dataclass(frozen=True)
class ScoredCandidate:
    grounded: GroundedClass
    score: float
    retained: bool = False

    @property
    def class_name(self) -> str:
        return self.grounded.class_name


def relevance_score(t_c: EmbeddingVector, image_embeddings: list[EmbeddingVector]) -> float:
    """Mean cosine similarity between one text prototype and all train images."""
    if not image_embeddings:
        raise EmptyTrainSet("relevance_score requires at least one image embedding")
    t = _as_array(t_c)
    t_norm = float(np.linalg.norm(t))
    if t_norm <= NORM_EPSILON:
        raise ZeroNormVector("relevance_score received a zero-norm prototype")
    matrix = np.stack([_as_array(v) for v in image_embeddings])
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms <= NORM_EPSILON):
        raise ZeroNormVector("relevance_score received a zero-norm image embedding")
    cosines = np.clip((matrix @ t) / (norms * t_norm), -1.0, 1.0)
    return float(cosines.mean())


def score_candidates(
    grounded: list[GroundedClass],
    image_embeddings: list[EmbeddingVector],
) -> list[ScoredCandidate]:
    """Score every grounded candidate against the same unlabeled pool."""
    return [
        ScoredCandidate(grounded=g, score=relevance_score(g.t_c, image_embeddings))
        for g in grounded
    ]


def filter_top_k(scored: list[ScoredCandidate], cfg: RefinementConfig) -> list[ScoredCandidate]:
    """Mark the top-k candidates as retained.

    Returns every input candidate (the refinement report wants the full
    ranking) sorted by score descending with ties broken by class name
    ascending; the first k_effective carry retained=True.
    """
    if not scored:
        return []
    ranked = sorted(scored, key=lambda c: (-c.score, c.class_name))
    k = cfg.k_effective(len(ranked))
    result = [
        dataclasses.replace(candidate, retained=(i < k)) for i, candidate in enumerate(ranked)
    ]
    dropped = len(result) - k
    if dropped:
        log.info("refinement retained %d of %d candidates", k, len(result))
    return result
