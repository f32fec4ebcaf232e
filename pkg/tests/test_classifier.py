"""Coupled-classifier tests: deterministic augmentation plans, pseudo-label
assignment, visual prototypes against a naive double loop, the convex
coupling of text and visual prototypes, artifact round-trips, and cosine
argmax inference with lexicographic tie-breaking."""

from __future__ import annotations

import numpy as np
import pytest

from vfr.classifier import (
    ClassEntry,
    ClassifierSettings,
    CoupledClassifier,
    Prediction,
    augmentation_plan,
    build_few_shot,
    build_vocabulary_free,
    build_zero_shot,
    classify,
    couple,
    pseudo_label,
    visual_prototype,
)
from vfr.errors import (
    ClassifierArtifactCorrupt,
    ConfigError,
    DimensionMismatch,
    EmptyInput,
    EmptySupportSet,
    EmptyTrainSet,
)
from vfr.grounding import GroundedClass
from vfr.providers.base import AugmentationParams, ProviderFingerprint
from vfr.providers.mock import MockImageEmbedProvider
from vfr.vectors import EmbeddingVector, cosine, normalize

STUB_FP = ProviderFingerprint(kind="image_embed", endpoint_id="stub://embed",
                              model_id="stub", dim=2)


class StubImageEmbedder:
    """Programmable image embedder: content hash -> fixed raw vector."""

    def __init__(self, mapping: dict[str, list[float]], dim: int = 2):
        self.mapping = mapping
        self.calls = 0
        self.fingerprint = ProviderFingerprint(
            kind="image_embed", endpoint_id="stub://embed", model_id="stub", dim=dim
        )

    def embed_image(self, image, aug=None):
        self.calls += 1
        return EmbeddingVector(self.mapping[image.content_hash()])


def _grounded(name: str, values) -> GroundedClass:
    return GroundedClass(class_name=name, context=None,
                         t_c=EmbeddingVector(normalize(np.asarray(values, dtype=float)).values))


def _entry(name: str, w_values, dim_fill: int = 0) -> ClassEntry:
    w = EmbeddingVector(w_values)
    return ClassEntry(name=name, t_c=w, v_c=None, w=w)


class TestAugmentationParams:
    def test_crop_validation(self):
        with pytest.raises(ConfigError):
            AugmentationParams(crop=(0.5, 0.0, 0.5, 1.0), horizontal_flip=False, seed=0)
        with pytest.raises(ConfigError):
            AugmentationParams(crop=(-0.1, 0.0, 1.0, 1.0), horizontal_flip=False, seed=0)
        with pytest.raises(ConfigError):
            AugmentationParams(crop=(0.0, 0.0, 1.0, 1.1), horizontal_flip=False, seed=0)

    def test_area_property(self):
        aug = AugmentationParams(crop=(0.0, 0.25, 0.5, 0.75), horizontal_flip=False, seed=0)
        assert aug.area == pytest.approx(0.25)

    def test_identity_detection(self):
        identity = AugmentationParams(crop=(0.0, 0.0, 1.0, 1.0), horizontal_flip=False, seed=3)
        flipped = AugmentationParams(crop=(0.0, 0.0, 1.0, 1.0), horizontal_flip=True, seed=3)
        cropped = AugmentationParams(crop=(0.1, 0.0, 1.0, 1.0), horizontal_flip=False, seed=3)
        assert identity.is_identity()
        assert not flipped.is_identity()
        assert not cropped.is_identity()


class TestAugmentationPlan:
    def test_plan_length_and_validity(self, image_factory):
        img = image_factory(b"bytes-a")
        plans = augmentation_plan(img, 10, run_seed=42, min_crop_area=0.6)
        assert len(plans) == 10
        for params in plans:
            x0, y0, x1, y1 = params.crop
            assert 0.0 <= x0 < x1 <= 1.0
            assert 0.0 <= y0 < y1 <= 1.0
            assert params.area >= 0.6 - 1e-9
            width, height = x1 - x0, y1 - y0
            ratio = width / height
            assert 0.75 - 1e-9 <= ratio <= 4.0 / 3.0 + 1e-9

    def test_deterministic_across_calls_and_processes(self, image_factory):
        img_a = image_factory(b"bytes-a", "one.png")
        img_b = image_factory(b"bytes-a", "two.png")  # same content, new path
        assert augmentation_plan(img_a, 5, 42) == augmentation_plan(img_b, 5, 42)

    def test_views_within_a_plan_differ(self, image_factory):
        plans = augmentation_plan(image_factory(b"bytes-a"), 10, 42)
        assert len({p.crop for p in plans}) > 1

    def test_seed_changes_plan(self, image_factory):
        img = image_factory(b"bytes-a")
        assert augmentation_plan(img, 5, 1) != augmentation_plan(img, 5, 2)

    def test_images_get_independent_plans(self, image_factory):
        plan_a = augmentation_plan(image_factory(b"bytes-a"), 5, 42)
        plan_b = augmentation_plan(image_factory(b"bytes-b"), 5, 42)
        assert plan_a != plan_b

    def test_flip_rate_is_plausible(self, image_factory):
        plans = augmentation_plan(image_factory(b"bytes-a"), 200, 42)
        flips = sum(p.horizontal_flip for p in plans)
        assert 60 <= flips <= 140  # p=0.5 with 200 draws

    def test_min_crop_area_one_falls_back_to_full_frame(self, image_factory):
        # Area must be 1 but the aspect draw is almost surely not 1, so every
        # attempt fails the unit-frame check and the full frame is used.
        plans = augmentation_plan(image_factory(b"bytes-a"), 8, 42, min_crop_area=1.0)
        for params in plans:
            assert params.crop == (0.0, 0.0, 1.0, 1.0)

    def test_validation(self, image_factory):
        img = image_factory(b"bytes-a")
        with pytest.raises(ConfigError):
            augmentation_plan(img, 0, 42)
        with pytest.raises(ConfigError):
            augmentation_plan(img, 5, 42, min_crop_area=0.0)
        with pytest.raises(ConfigError):
            augmentation_plan(img, 5, 42, min_crop_area=1.5)


class TestPseudoLabel:
    def test_nearest_prototype_assignment(self, image_factory):
        img_a = image_factory(b"img-a")
        img_b = image_factory(b"img-b")
        embedder = StubImageEmbedder({
            img_a.content_hash(): [1.0, 0.1],
            img_b.content_hash(): [0.1, 1.0],
        })
        grounded = [_grounded("axis", [1.0, 0.0]), _grounded("bar", [0.0, 1.0])]
        assignment = pseudo_label([img_a, img_b], grounded, embedder)
        assert [i.path for i in assignment["axis"]] == [img_a.path]
        assert [i.path for i in assignment["bar"]] == [img_b.path]

    def test_every_class_has_a_key(self, image_factory):
        img = image_factory(b"img-a")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 0.0]})
        grounded = [_grounded("near", [1.0, 0.0]), _grounded("far", [0.0, 1.0])]
        assignment = pseudo_label([img], grounded, embedder)
        assert set(assignment) == {"near", "far"}
        assert assignment["far"] == []

    def test_exact_tie_goes_to_lexicographically_smaller_name(self, image_factory):
        img = image_factory(b"img-tie")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 1.0]})
        grounded = [_grounded("zeta", [0.0, 1.0]), _grounded("alpha", [1.0, 0.0])]
        assignment = pseudo_label([img], grounded, embedder)
        assert len(assignment["alpha"]) == 1
        assert assignment["zeta"] == []

    def test_assignment_independent_of_grounded_order(self, image_factory):
        rng = np.random.default_rng(3)
        images = [image_factory(f"img-{i}".encode()) for i in range(6)]
        mapping = {img.content_hash(): list(rng.standard_normal(2)) for img in images}
        embedder = StubImageEmbedder(mapping)
        grounded = [_grounded("a", [1.0, 0.2]), _grounded("b", [0.2, 1.0]),
                    _grounded("c", [-1.0, 0.5])]
        forward = pseudo_label(images, grounded, embedder)
        backward = pseudo_label(images, list(reversed(grounded)), embedder)
        assert {k: [i.path for i in v] for k, v in forward.items()} == {
            k: [i.path for i in v] for k, v in backward.items()
        }

    def test_raw_unaugmented_embeddings_used(self, image_factory):
        img = image_factory(b"img-a")
        seen = []

        class RecordingEmbedder(StubImageEmbedder):
            def embed_image(self, image, aug=None):
                seen.append(aug)
                return super().embed_image(image, aug)

        embedder = RecordingEmbedder({img.content_hash(): [1.0, 0.0]})
        pseudo_label([img], [_grounded("a", [1.0, 0.0])], embedder)
        assert seen == [None]

    def test_errors(self, image_factory):
        img = image_factory(b"img-a")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 0.0]})
        with pytest.raises(EmptyTrainSet):
            pseudo_label([], [_grounded("a", [1.0, 0.0])], embedder)
        with pytest.raises(EmptyInput):
            pseudo_label([img], [], embedder)


class TestVisualPrototype:
    def test_matches_naive_double_loop(self, image_factory):
        provider = MockImageEmbedProvider(seed=5, dim=8)
        images = [image_factory(f"vp-{i}".encode()) for i in range(4)]
        k = 6
        got = visual_prototype(images, k, provider, run_seed=42)

        total = np.zeros(8)
        for image in images:  # given order, not the canonical sorted order
            for params in augmentation_plan(image, k, 42):
                total += normalize(provider.embed_image(image, params)).values
        expected = total / (k * len(images))
        np.testing.assert_allclose(got.values, expected, rtol=0, atol=1e-12)

    def test_exact_permutation_invariance(self, image_factory):
        provider = MockImageEmbedProvider(seed=5, dim=8)
        images = [image_factory(f"vp-{i}".encode()) for i in range(5)]
        base = visual_prototype(images, 3, provider, run_seed=1)
        rng = np.random.default_rng(9)
        for _ in range(4):
            shuffled = [images[i] for i in rng.permutation(len(images))]
            again = visual_prototype(shuffled, 3, provider, run_seed=1)
            np.testing.assert_array_equal(again.values, base.values)

    def test_embedding_call_count_is_k_times_images(self, image_factory):
        provider = MockImageEmbedProvider(seed=5, dim=8)
        images = [image_factory(f"vp-{i}".encode()) for i in range(3)]
        provider.reset_calls()
        visual_prototype(images, 10, provider, run_seed=42)
        assert provider.calls == 30

    def test_norm_at_most_one(self, image_factory):
        provider = MockImageEmbedProvider(seed=5, dim=8)
        images = [image_factory(f"vp-{i}".encode()) for i in range(3)]
        assert visual_prototype(images, 4, provider, run_seed=0).norm() <= 1.0 + 1e-12

    def test_empty_images_rejected(self):
        with pytest.raises(EmptyInput):
            visual_prototype([], 4, MockImageEmbedProvider(seed=1, dim=4), run_seed=0)


class TestCouple:
    def test_alpha_one_reproduces_text_prototype_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            t_c = EmbeddingVector(rng.standard_normal(8))
            v_c = EmbeddingVector(rng.standard_normal(8))
            np.testing.assert_array_equal(couple(t_c, v_c, 1.0).values, t_c.values)

    def test_alpha_zero_reproduces_visual_prototype_exactly(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            t_c = EmbeddingVector(rng.standard_normal(8))
            v_c = EmbeddingVector(rng.standard_normal(8))
            np.testing.assert_array_equal(couple(t_c, v_c, 0.0).values, v_c.values)

    def test_interior_alpha_matches_direct_arithmetic(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            t_c = EmbeddingVector(rng.standard_normal(6))
            v_c = EmbeddingVector(rng.standard_normal(6))
            got = couple(t_c, v_c, 0.7)
            expected = 0.7 * t_c.values + 0.3 * v_c.values
            np.testing.assert_allclose(got.values, expected, rtol=0, atol=1e-12)

    def test_simple_example(self):
        got = couple(EmbeddingVector([1.0, 0.0]), EmbeddingVector([0.0, 1.0]), 0.7)
        np.testing.assert_allclose(got.values, [0.7, 0.3], rtol=0, atol=1e-15)

    def test_missing_visual_prototype_falls_back_to_text(self):
        t_c = EmbeddingVector([0.5, 0.5])
        got = couple(t_c, None, 0.3)
        np.testing.assert_array_equal(got.values, t_c.values)
        assert got is not t_c

    def test_validation(self):
        t_c = EmbeddingVector([1.0, 0.0])
        with pytest.raises(ConfigError):
            couple(t_c, t_c, 1.5)
        with pytest.raises(ConfigError):
            couple(t_c, t_c, -0.1)
        with pytest.raises(DimensionMismatch):
            couple(t_c, EmbeddingVector([1.0, 0.0, 0.0]), 0.5)


class TestClassifierSettings:
    def test_defaults(self):
        settings = ClassifierSettings()
        assert settings.alpha == 0.7
        assert settings.k_aug == 10
        assert settings.min_crop_area == 0.6
        assert settings.renormalize_prototypes is False

    def test_validation(self):
        with pytest.raises(ConfigError):
            ClassifierSettings(alpha=1.2)
        with pytest.raises(ConfigError):
            ClassifierSettings(k_aug=0)
        with pytest.raises(ConfigError):
            ClassifierSettings(min_crop_area=0.0)
        with pytest.raises(ConfigError):
            ClassifierSettings(run_seed=-1)


class TestBuildVocabularyFree:
    def _setup(self, image_factory):
        img_a = image_factory(b"build-a")
        img_b = image_factory(b"build-b")
        embedder = StubImageEmbedder({
            img_a.content_hash(): [1.0, 0.05],
            img_b.content_hash(): [0.05, 1.0],
        })
        grounded = [_grounded("right", [0.0, 1.0]), _grounded("left", [1.0, 0.0])]
        return [img_a, img_b], grounded, embedder

    def test_classes_sorted_and_coupled(self, image_factory):
        images, grounded, embedder = self._setup(image_factory)
        clf = build_vocabulary_free(images, grounded, embedder,
                                    ClassifierSettings(alpha=0.7, k_aug=2, run_seed=0))
        assert clf.mode == "vocabulary_free"
        assert clf.class_names == ["left", "right"]
        for entry in clf.classes:
            assert entry.v_c is not None
            expected = 0.7 * entry.t_c.values + 0.3 * entry.v_c.values
            np.testing.assert_allclose(entry.w.values, expected, rtol=0, atol=1e-15)

    def test_unassigned_class_falls_back_to_text_prototype(self, image_factory):
        img = image_factory(b"solo")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 0.0]})
        grounded = [_grounded("near", [1.0, 0.0]), _grounded("far", [0.0, 1.0])]
        clf = build_vocabulary_free([img], grounded, embedder,
                                    ClassifierSettings(k_aug=2))
        far = next(c for c in clf.classes if c.name == "far")
        assert far.v_c is None
        np.testing.assert_array_equal(far.w.values, far.t_c.values)

    def test_renormalize_prototypes_flag(self, image_factory):
        provider = MockImageEmbedProvider(seed=5, dim=8)
        images = [image_factory(f"rn-{i}".encode()) for i in range(3)]
        rng = np.random.default_rng(2)
        grounded = [
            GroundedClass(class_name=name, context=None,
                          t_c=EmbeddingVector(normalize(rng.standard_normal(8)).values))
            for name in ("one", "two")
        ]
        settings = ClassifierSettings(k_aug=2, renormalize_prototypes=True)
        clf = build_vocabulary_free(images, grounded, provider, settings)
        for entry in clf.classes:
            assert entry.w.norm() == pytest.approx(1.0, abs=1e-9)
            if entry.v_c is not None:
                assert entry.v_c.norm() == pytest.approx(1.0, abs=1e-9)


class TestBuildZeroShot:
    def test_weights_equal_text_prototypes(self):
        rng = np.random.default_rng(3)
        grounded = [_grounded(n, rng.standard_normal(4)) for n in ("b", "a")]
        clf = build_zero_shot(
            grounded,
            ProviderFingerprint("image_embed", "stub://", "m", dim=4),
            ClassifierSettings(),
        )
        assert clf.mode == "zero_shot"
        assert clf.class_names == ["a", "b"]
        for entry in clf.classes:
            np.testing.assert_array_equal(entry.w.values, entry.t_c.values)
            assert entry.v_c is None


class TestBuildFewShot:
    def test_happy_path(self, image_factory):
        img_a = image_factory(b"fs-a")
        img_b = image_factory(b"fs-b")
        embedder = StubImageEmbedder({
            img_a.content_hash(): [1.0, 0.0],
            img_b.content_hash(): [0.0, 1.0],
        })
        grounded = [_grounded("a", [1.0, 0.0]), _grounded("b", [0.0, 1.0])]
        clf = build_few_shot([(img_a, "a"), (img_b, "b")], grounded, embedder,
                             ClassifierSettings(k_aug=3))
        assert clf.mode == "few_shot"
        assert all(entry.v_c is not None for entry in clf.classes)

    def test_missing_support_label_raises_with_names(self, image_factory):
        img = image_factory(b"fs-a")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 0.0]})
        grounded = [_grounded("a", [1.0, 0.0]), _grounded("b", [0.0, 1.0]),
                    _grounded("c", [0.5, 0.5])]
        with pytest.raises(EmptySupportSet) as err:
            build_few_shot([(img, "a")], grounded, embedder, ClassifierSettings())
        assert "['b', 'c']" in str(err.value)

    def test_unknown_support_label_raises(self, image_factory):
        img = image_factory(b"fs-a")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 0.0]})
        grounded = [_grounded("a", [1.0, 0.0])]
        with pytest.raises(ConfigError):
            build_few_shot([(img, "a"), (img, "mystery")], grounded, embedder,
                           ClassifierSettings())

    def test_empty_support_raises(self):
        with pytest.raises(EmptyTrainSet):
            build_few_shot([], [_grounded("a", [1.0, 0.0])],
                           StubImageEmbedder({}), ClassifierSettings())


class TestCoupledClassifierDataclass:
    def test_classes_sorted_on_construction(self):
        clf = CoupledClassifier(
            mode="zero_shot", alpha=0.7, k_aug=10, embedder=STUB_FP,
            classes=[_entry("zeta", [1.0, 0.0]), _entry("alpha", [0.0, 1.0])],
        )
        assert clf.class_names == ["alpha", "zeta"]

    def test_duplicate_names_rejected(self):
        with pytest.raises(ConfigError):
            CoupledClassifier(
                mode="zero_shot", alpha=0.7, k_aug=10, embedder=STUB_FP,
                classes=[_entry("same", [1.0, 0.0]), _entry("same", [0.0, 1.0])],
            )

    def test_empty_classes_rejected(self):
        with pytest.raises(EmptyInput):
            CoupledClassifier(mode="zero_shot", alpha=0.7, k_aug=10,
                              embedder=STUB_FP, classes=[])

    def test_invalid_mode_rejected(self):
        with pytest.raises(ConfigError):
            CoupledClassifier(mode="turbo", alpha=0.7, k_aug=10,
                              embedder=STUB_FP, classes=[_entry("a", [1.0, 0.0])])

    def test_dim_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            CoupledClassifier(mode="zero_shot", alpha=0.7, k_aug=10, embedder=STUB_FP,
                              classes=[_entry("a", [1.0, 0.0, 0.0])])

    def test_round_trip_bitwise(self):
        rng = np.random.default_rng(21)
        entries = []
        for name in ("a", "b"):
            t_c = EmbeddingVector(normalize(rng.standard_normal(2)).values)
            v_c = EmbeddingVector(normalize(rng.standard_normal(2)).values)
            entries.append(ClassEntry(name=name, t_c=t_c, v_c=v_c,
                                      w=couple(t_c, v_c, 0.7)))
        entries.append(_entry("c", list(normalize(rng.standard_normal(2)).values)))
        clf = CoupledClassifier(mode="vocabulary_free", alpha=0.7, k_aug=10,
                                embedder=STUB_FP, classes=entries)
        restored = CoupledClassifier.from_dict(clf.to_dict())
        assert restored.to_dict() == clf.to_dict()
        for orig, back in zip(clf.classes, restored.classes):
            np.testing.assert_array_equal(orig.w.values, back.w.values)
            np.testing.assert_array_equal(orig.t_c.values, back.t_c.values)
        none_entry = next(c for c in restored.classes if c.name == "c")
        assert none_entry.v_c is None

    def test_from_dict_rejects_malformed(self):
        good = CoupledClassifier(
            mode="zero_shot", alpha=0.7, k_aug=10, embedder=STUB_FP,
            classes=[_entry("a", [1.0, 0.0])],
        ).to_dict()

        missing_key = {k: v for k, v in good.items() if k != "classes"}
        with pytest.raises(ClassifierArtifactCorrupt):
            CoupledClassifier.from_dict(missing_key)

        bad_mode = dict(good, mode="bogus")
        with pytest.raises(ClassifierArtifactCorrupt):
            CoupledClassifier.from_dict(bad_mode)

        bad_vector = dict(good)
        bad_vector["classes"] = [dict(good["classes"][0], w=[float("nan"), 0.0])]
        with pytest.raises(ClassifierArtifactCorrupt):
            CoupledClassifier.from_dict(bad_vector)

        bad_alpha = dict(good, alpha="not-a-number")
        with pytest.raises(ClassifierArtifactCorrupt):
            CoupledClassifier.from_dict(bad_alpha)


class TestClassify:
    def _clf(self, entries):
        return CoupledClassifier(mode="zero_shot", alpha=0.7, k_aug=10,
                                 embedder=STUB_FP, classes=entries)

    def test_argmax_name_and_similarity(self, image_factory):
        img = image_factory(b"query")
        embedder = StubImageEmbedder({img.content_hash(): [0.9, 0.1]})
        clf = self._clf([_entry("x_axis", [1.0, 0.0]), _entry("y_axis", [0.0, 1.0])])
        pred = classify(img, clf, embedder)
        assert pred.predicted_name == "x_axis"
        assert pred.image == img.path
        assert pred.similarity == pytest.approx(
            cosine([0.9, 0.1], [1.0, 0.0]), abs=1e-15
        )

    def test_margin_is_gap_to_runner_up(self, image_factory):
        img = image_factory(b"query")
        embedder = StubImageEmbedder({img.content_hash(): [0.9, 0.1]})
        clf = self._clf([_entry("x_axis", [1.0, 0.0]), _entry("y_axis", [0.0, 1.0])])
        pred = classify(img, clf, embedder)
        expected_margin = cosine([0.9, 0.1], [1.0, 0.0]) - cosine([0.9, 0.1], [0.0, 1.0])
        assert pred.runner_up_margin == pytest.approx(expected_margin, abs=1e-15)
        assert pred.runner_up_margin > 0

    def test_exact_tie_prefers_lexicographically_smaller(self, image_factory):
        img = image_factory(b"query")
        embedder = StubImageEmbedder({img.content_hash(): [1.0, 1.0]})
        clf = self._clf([_entry("zed", [0.0, 1.0]), _entry("ace", [1.0, 0.0])])
        pred = classify(img, clf, embedder)
        assert pred.predicted_name == "ace"
        assert pred.runner_up_margin == 0.0

    def test_single_class_margin_zero(self, image_factory):
        img = image_factory(b"query")
        embedder = StubImageEmbedder({img.content_hash(): [0.4, 0.2]})
        pred = classify(img, self._clf([_entry("only", [1.0, 0.0])]), embedder)
        assert pred.predicted_name == "only"
        assert pred.runner_up_margin == 0.0

    def test_embedder_dim_checked(self, image_factory):
        img = image_factory(b"query")
        wrong = StubImageEmbedder({img.content_hash(): [1.0, 0.0, 0.0]}, dim=3)
        clf = self._clf([_entry("only", [1.0, 0.0])])
        with pytest.raises(DimensionMismatch):
            classify(img, clf, wrong)

    def test_scaling_weights_does_not_change_prediction(self, image_factory):
        rng = np.random.default_rng(33)
        img = image_factory(b"query")
        embedder = StubImageEmbedder({img.content_hash(): list(rng.standard_normal(2))})
        entries = [_entry(f"class_{i}", list(rng.standard_normal(2))) for i in range(4)]
        clf = self._clf(entries)
        base = classify(img, clf, embedder)
        for scale in (0.01, 3.0, 250.0):
            scaled = self._clf([
                ClassEntry(name=e.name, t_c=e.t_c, v_c=None,
                           w=EmbeddingVector(e.w.values * scale))
                for e in entries
            ])
            again = classify(img, scaled, embedder)
            assert again.predicted_name == base.predicted_name


class TestPrediction:
    def test_negative_margin_rejected(self):
        with pytest.raises(ValueError):
            Prediction(image="x.png", predicted_name="a", similarity=0.5,
                       runner_up_margin=-0.01)
