"""Core vector math: typed embedding vectors, normalization, cosine, means.

All arithmetic runs in double precision regardless of what a provider sent
over the wire. Normalization treats anything with norm <= 1e-12 as zero.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, ZeroNormVector

# Norm threshold below which a vector counts as zero for normalization.
NORM_EPSILON = 1e-12


def _as_array(v: "EmbeddingVector | Sequence[float] | np.ndarray") -> np.ndarray:
    """Coerce supported vector representations to a float64 ndarray."""
    if isinstance(v, EmbeddingVector):
        return v.values
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {arr.shape}")
    return arr


class EmbeddingVector:
    """A finite, fixed-dimension real vector in an embedding space.

    Components are stored as float64 and the backing array is frozen, so a
    vector never changes after construction.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise DimensionMismatch(f"expected a 1-d vector, got shape {arr.shape}")
        if arr.size == 0:
            raise EmptyInput("embedding vector must have at least one component")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding vector components must all be finite")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def dim(self) -> int:
        return int(self._values.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self._values))

    def to_list(self) -> list[float]:
        return [float(x) for x in self._values]

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self._values, other._values))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class UnitVector(EmbeddingVector):
    """An EmbeddingVector whose L2 norm is 1 up to 1e-6."""

    def __init__(self, values: Sequence[float] | np.ndarray):
        super().__init__(values)
        n = float(np.linalg.norm(self._values))
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"unit vector norm out of tolerance: {n!r}")


def normalize(v: EmbeddingVector | Sequence[float] | np.ndarray) -> UnitVector:
    """Return v / ||v|| as a UnitVector.

    Raises ZeroNormVector when ||v|| <= 1e-12; never divides by zero.
    """
    arr = _as_array(v)
    n = float(np.linalg.norm(arr))
    if n <= NORM_EPSILON:
        raise ZeroNormVector(f"cannot normalize vector with norm {n!r}")
    return UnitVector(arr / n)


def cosine(
    a: EmbeddingVector | Sequence[float] | np.ndarray,
    b: EmbeddingVector | Sequence[float] | np.ndarray,
) -> float:
    """Cosine similarity of two equal-dimension vectors, clamped to [-1, 1]."""
    av = _as_array(a)
    bv = _as_array(b)
    if av.shape[0] != bv.shape[0]:
        raise DimensionMismatch(f"cosine needs equal dims, got {av.shape[0]} and {bv.shape[0]}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na <= NORM_EPSILON or nb <= NORM_EPSILON:
        raise ZeroNormVector("cosine is undefined for a zero-norm operand")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))


def mean_of_normalized(
    vectors: Iterable[EmbeddingVector | Sequence[float] | np.ndarray],
) -> EmbeddingVector:
    """Average of the individually normalized inputs: (1/M) * sum_i v_i / ||v_i||.

    The result is deliberately NOT re-normalized; its norm is at most 1 and
    is 0 only when the normalized inputs cancel exactly (downstream prototype
    constructors reject that case). Raises EmptyInput for an empty list,
    DimensionMismatch for ragged dims, and ZeroNormVector if any input has
    norm <= 1e-12.
    """
    arrays = [_as_array(v) for v in vectors]
    if not arrays:
        raise EmptyInput("mean_of_normalized requires at least one vector")
    dim = arrays[0].shape[0]
    for arr in arrays[1:]:
        if arr.shape[0] != dim:
            raise DimensionMismatch(f"mixed dims in mean: {dim} and {arr.shape[0]}")
    stacked = np.stack(arrays)
    norms = np.linalg.norm(stacked, axis=1)
    if np.any(norms <= NORM_EPSILON):
        raise ZeroNormVector("mean_of_normalized received a zero-norm vector")
    unit = stacked / norms[:, None]
    return EmbeddingVector(unit.sum(axis=0) / float(len(arrays)))
