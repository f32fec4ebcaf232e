"""Metrics for label-free recognition.

Clustering accuracy (cACC) matches predicted names to ground-truth names
one-to-one via maximum-weight assignment on the contingency table, so it is
invariant to any renaming of the predicted classes. Semantic accuracy
(sACC) scores each prediction by the clamped cosine between the embeddings
of the predicted and true names.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyInput, LengthMismatch
from .providers.base import TextEmbedProvider
from .vectors import cosine


def _pred_name(p: object) -> str:
    name = getattr(p, "predicted_name", p)
    return str(name)


def hungarian_assignment(score_matrix: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-total one-to-one matching of size min(P, T).

    The matrix is zero-padded to square internally, so padding never
    contributes to the total and every row/column on the smaller side is
    matched. Pairs come back sorted by row index.
    """
    matrix = np.asarray(score_matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.size == 0:
        raise EmptyInput(f"score matrix must be 2-d and non-empty, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("score matrix entries must be finite")
    n_rows, n_cols = matrix.shape
    side = max(n_rows, n_cols)
    padded = np.zeros((side, side), dtype=np.float64)
    padded[:n_rows, :n_cols] = matrix
    rows, cols = linear_sum_assignment(padded, maximize=True)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols) if r < n_rows and c < n_cols]
    pairs.sort()
    return pairs


@dataclass
class ContingencyTable:
    """Counts of (predicted name, ground-truth name) co-occurrences."""

    pred_names: list[str]
    gt_names: list[str]
    counts: np.ndarray
    n_total: int

    @classmethod
    def from_pairs(cls, pred_names: Sequence[str], gt_names: Sequence[str]) -> "ContingencyTable":
        if len(pred_names) != len(gt_names):
            raise LengthMismatch(
                f"{len(pred_names)} predictions vs {len(gt_names)} ground-truth labels"
            )
        if not pred_names:
            raise EmptyInput("contingency table needs at least one pair")
        rows = sorted(set(pred_names))
        cols = sorted(set(gt_names))
        row_index = {name: i for i, name in enumerate(rows)}
        col_index = {name: i for i, name in enumerate(cols)}
        counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for p, t in zip(pred_names, gt_names):
            counts[row_index[p], col_index[t]] += 1
        return cls(pred_names=rows, gt_names=cols, counts=counts, n_total=len(pred_names))


def clustering_accuracy(predictions: Sequence[object], gts: Sequence[str]) -> float:
    """Best-case accuracy over one-to-one renamings of the predicted classes."""
    names = [_pred_name(p) for p in predictions]
    table = ContingencyTable.from_pairs(names, list(gts))
    pairs = hungarian_assignment(table.counts.astype(np.float64))
    matched = sum(int(table.counts[r, c]) for r, c in pairs)
    return matched / float(table.n_total)


def semantic_accuracy(
    predictions: Sequence[object],
    gts: Sequence[str],
    embedder: TextEmbedProvider,
) -> float:
    """Mean over pairs of max(0, cos(e(pred), e(gt))); identical names score 1."""
    names = [_pred_name(p) for p in predictions]
    if len(names) != len(gts):
        raise LengthMismatch(f"{len(names)} predictions vs {len(gts)} ground-truth labels")
    if not names:
        raise EmptyInput("semantic accuracy needs at least one pair")
    unique = sorted(set(names) | set(gts))
    vectors = dict(zip(unique, embedder.embed_text(unique)))
    total = 0.0
    for pred, gt in zip(names, gts):
        total += max(0.0, cosine(vectors[pred], vectors[gt]))
    return total / float(len(names))


def _fold(name: str) -> str:
    return " ".join(name.casefold().split())


def filtration_sensitivity(
    candidate_names: Sequence[str],
    retained_names: Sequence[str],
    gt_names: Sequence[str],
) -> tuple[int, int]:
    """(true positives, false negatives) of the refinement filter.

    A candidate counts as matching ground truth on a case-insensitive,
    whitespace-normalized full-string comparison. tp = matching candidates
    that survived filtering; fn = matching candidates that were filtered
    out. tp + fn always equals the number of matching candidates.
    """
    candidates = {_fold(n) for n in candidate_names}
    retained = {_fold(n) for n in retained_names}
    gts = {_fold(n) for n in gt_names}
    stray = retained - candidates
    if stray:
        raise ValueError(f"retained names not among candidates: {sorted(stray)}")
    matched = candidates & gts
    tp = len(matched & retained)
    fn = len(matched - retained)
    return tp, fn


@dataclass
class MetricsReport:
    cacc: float
    sacc: float
    n_images: int
    n_pred_classes: int
    n_true_classes: int
    filtration_tp: int | None = None
    filtration_fn: int | None = None

    def to_dict(self) -> dict:
        filtration = None
        if self.filtration_tp is not None and self.filtration_fn is not None:
            filtration = {"tp": self.filtration_tp, "fn": self.filtration_fn}
        return {
            "cacc": self.cacc,
            "sacc": self.sacc,
            "n_images": self.n_images,
            "n_pred_classes": self.n_pred_classes,
            "n_true_classes": self.n_true_classes,
            "filtration": filtration,
        }


def compute_metrics(
    predictions: Sequence[object],
    gts: Sequence[str],
    semantic_embedder: TextEmbedProvider,
    *,
    candidate_names: Sequence[str] | None = None,
    retained_names: Sequence[str] | None = None,
) -> MetricsReport:
    """cACC + sACC, with filtration sensitivity when vocabulary artifacts exist."""
    names = [_pred_name(p) for p in predictions]
    cacc = clustering_accuracy(names, gts)
    sacc = semantic_accuracy(names, gts, semantic_embedder)
    tp: int | None = None
    fn: int | None = None
    if candidate_names is not None and retained_names is not None:
        tp, fn = filtration_sensitivity(candidate_names, retained_names, gts)
    return MetricsReport(
        cacc=cacc,
        sacc=sacc,
        n_images=len(names),
        n_pred_classes=len(set(names)),
        n_true_classes=len(set(gts)),
        filtration_tp=tp,
        filtration_fn=fn,
    )
