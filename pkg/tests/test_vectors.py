"""Vector math tests: normalization, cosine, and the normalize-then-average
mean, each checked against naive reimplementations on seeded random data."""

from __future__ import annotations

import math

import numpy as np
import pytest

from vfr.errors import DimensionMismatch, EmptyInput, ZeroNormVector
from vfr.vectors import (
    NORM_EPSILON,
    EmbeddingVector,
    UnitVector,
    cosine,
    mean_of_normalized,
    normalize,
)


def _naive_cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


class TestEmbeddingVector:
    def test_stores_float64_copy(self):
        source = np.array([1, 2, 3], dtype=np.int32)
        vec = EmbeddingVector(source)
        assert vec.values.dtype == np.float64
        source[0] = 99
        assert vec.values[0] == 1.0

    def test_backing_array_is_frozen(self):
        vec = EmbeddingVector([1.0, 2.0])
        with pytest.raises(ValueError):
            vec.values[0] = 5.0

    def test_dim_len_norm(self):
        vec = EmbeddingVector([3.0, 4.0])
        assert vec.dim == 2
        assert len(vec) == 2
        assert vec.norm() == pytest.approx(5.0)

    def test_to_list_round_trip(self):
        values = [0.1, -2.5, 3.25]
        assert EmbeddingVector(values).to_list() == values

    def test_equality(self):
        assert EmbeddingVector([1.0, 2.0]) == EmbeddingVector([1.0, 2.0])
        assert EmbeddingVector([1.0, 2.0]) != EmbeddingVector([1.0, 3.0])
        assert EmbeddingVector([1.0]) != EmbeddingVector([1.0, 0.0])

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            EmbeddingVector([])

    def test_matrix_rejected(self):
        with pytest.raises(DimensionMismatch):
            EmbeddingVector(np.zeros((2, 2)))

    def test_non_finite_rejected(self):
        for bad in (float("nan"), float("inf"), -float("inf")):
            with pytest.raises(ValueError):
                EmbeddingVector([1.0, bad])


class TestUnitVector:
    def test_accepts_unit_norm(self):
        UnitVector([1.0, 0.0, 0.0])
        UnitVector([0.6, 0.8])

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            UnitVector([1.0, 1.0])
        with pytest.raises(ValueError):
            UnitVector([0.5])

    def test_tolerance_boundary(self):
        UnitVector([1.0 + 5e-7])
        with pytest.raises(ValueError):
            UnitVector([1.0 + 5e-6])


class TestNormalize:
    def test_unit_norm_and_direction(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            raw = rng.standard_normal(16) * rng.uniform(0.1, 100.0)
            unit = normalize(raw)
            assert isinstance(unit, UnitVector)
            assert unit.norm() == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(
                unit.values, raw / np.linalg.norm(raw), rtol=0, atol=1e-15
            )

    def test_accepts_embedding_vector_input(self):
        vec = EmbeddingVector([2.0, 0.0])
        np.testing.assert_array_equal(normalize(vec).values, [1.0, 0.0])

    def test_idempotent(self):
        raw = np.array([3.0, -4.0, 12.0])
        once = normalize(raw)
        twice = normalize(once)
        np.testing.assert_allclose(twice.values, once.values, rtol=0, atol=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroNormVector):
            normalize([0.0, 0.0, 0.0])

    def test_tiny_norm_rejected(self):
        with pytest.raises(ZeroNormVector):
            normalize([1e-13, 0.0])

    def test_small_but_valid_norm_accepted(self):
        unit = normalize([1e-6, 0.0])
        assert unit.values[0] == pytest.approx(1.0)


class TestCosine:
    def test_matches_naive_formula(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            dim = int(rng.integers(1, 20))
            a = rng.standard_normal(dim)
            b = rng.standard_normal(dim)
            assert cosine(a, b) == pytest.approx(_naive_cosine(a, b), abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal(8)
        b = rng.standard_normal(8)
        assert cosine(a, b) == cosine(b, a)

    def test_self_similarity_is_one(self):
        # sqrt(dot)*sqrt(dot) and dot may differ by an ulp, so equality is
        # approximate; the clamp still guarantees the value never exceeds 1.
        rng = np.random.default_rng(7)
        for _ in range(20):
            v = rng.standard_normal(12) * 1e6
            c = cosine(v, v)
            assert c == pytest.approx(1.0, abs=1e-14)
            assert c <= 1.0

    def test_known_values(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
        assert cosine([1.0, 0.0], [-1.0, 0.0]) == -1.0
        assert cosine([1.0, 1.0], [1.0, 1.0]) == pytest.approx(1.0, abs=1e-14)

    def test_clamped_to_unit_interval(self):
        # Parallel vectors at wild scales can push the raw ratio past 1.0
        # by a few ulps; the result must never escape [-1, 1].
        rng = np.random.default_rng(31)
        for _ in range(100):
            v = rng.standard_normal(10)
            s = float(rng.uniform(1e-8, 1e8))
            assert -1.0 <= cosine(v, v * s) <= 1.0
            assert -1.0 <= cosine(v, v * -s) <= 1.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(41)
        a = rng.standard_normal(6)
        b = rng.standard_normal(6)
        assert cosine(a, b) == pytest.approx(cosine(a * 7.5, b * 0.002), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_zero_operand_rejected(self):
        with pytest.raises(ZeroNormVector):
            cosine([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ZeroNormVector):
            cosine([1.0, 0.0], [0.0, 0.0])

    def test_accepts_embedding_vectors(self):
        a = EmbeddingVector([1.0, 0.0])
        b = EmbeddingVector([1.0, 1.0])
        assert cosine(a, b) == pytest.approx(1.0 / math.sqrt(2.0))


def _naive_mean_of_normalized(rows):
    """Independent reimplementation: python loops and math.sqrt only."""
    out = [0.0] * len(rows[0])
    for row in rows:
        norm = math.sqrt(sum(x * x for x in row))
        for i, x in enumerate(row):
            out[i] += x / norm
    return [x / len(rows) for x in out]


class TestMeanOfNormalized:
    def test_matches_naive_loop(self):
        rng = np.random.default_rng(53)
        for _ in range(100):
            count = int(rng.integers(1, 12))
            dim = int(rng.integers(1, 24))
            rows = rng.standard_normal((count, dim)) * rng.uniform(0.01, 50.0)
            got = mean_of_normalized(list(rows))
            expected = _naive_mean_of_normalized([list(r) for r in rows])
            np.testing.assert_allclose(got.values, expected, rtol=0, atol=1e-12)

    def test_norm_at_most_one(self):
        rng = np.random.default_rng(59)
        for _ in range(100):
            rows = rng.standard_normal((int(rng.integers(1, 10)), 8))
            assert mean_of_normalized(list(rows)).norm() <= 1.0 + 1e-12

    def test_single_vector_is_normalized_input(self):
        raw = np.array([3.0, 4.0])
        got = mean_of_normalized([raw])
        np.testing.assert_allclose(got.values, [0.6, 0.8], rtol=0, atol=1e-15)
        assert got.norm() == pytest.approx(1.0)

    def test_identical_inputs_keep_unit_norm(self):
        raw = np.array([1.0, 2.0, 2.0])
        got = mean_of_normalized([raw, raw * 2.0, raw * 0.5])
        assert got.norm() == pytest.approx(1.0, abs=1e-12)

    def test_scale_of_individual_inputs_is_irrelevant(self):
        rng = np.random.default_rng(61)
        rows = rng.standard_normal((5, 6))
        scales = rng.uniform(0.1, 10.0, size=5)
        a = mean_of_normalized(list(rows))
        b = mean_of_normalized([r * s for r, s in zip(rows, scales)])
        np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-12)

    def test_result_not_renormalized(self):
        got = mean_of_normalized([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(got.values, [0.5, 0.5], rtol=0, atol=1e-15)
        assert got.norm() == pytest.approx(math.sqrt(0.5))

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            mean_of_normalized([])

    def test_ragged_dims_rejected(self):
        with pytest.raises(DimensionMismatch):
            mean_of_normalized([[1.0, 0.0], [1.0, 0.0, 0.0]])

    def test_zero_norm_input_rejected(self):
        with pytest.raises(ZeroNormVector):
            mean_of_normalized([[1.0, 0.0], [0.0, 0.0]])

    def test_accepts_mixed_input_types(self):
        mixed = [EmbeddingVector([1.0, 0.0]), np.array([0.0, 2.0]), [1.0, 1.0]]
        got = mean_of_normalized(mixed)
        expected = _naive_mean_of_normalized([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
        np.testing.assert_allclose(got.values, expected, rtol=0, atol=1e-15)


def test_norm_epsilon_value():
    assert NORM_EPSILON == 1e-12
