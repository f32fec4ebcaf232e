"""Coupled vision-language classifiers.

Class weights blend the text prototype t_c with an augmented visual
prototype v_c: w = alpha * t_c + (1 - alpha) * v_c. Visual prototypes come
from pseudo-labeled training images, each embedded under K deterministic
augmented views. Inference is cosine argmax over class weights; all ties
anywhere break lexicographically by class name.
"""

from __future__ import annotations

import hashlib
import logging
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassifierArtifactCorrupt,
    ConfigError,
    DimensionMismatch,
    EmptyInput,
    EmptySupportSet,
    EmptyTrainSet,
)
from .grounding import GroundedClass
from .images import ImageRef
from .providers.base import AugmentationParams, ImageEmbedProvider, ProviderFingerprint
from .vectors import EmbeddingVector, cosine, normalize

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.7
DEFAULT_K_AUG = 10
DEFAULT_MIN_CROP_AREA = 0.6

MODES = ("vocabulary_free", "zero_shot", "few_shot")

_ASPECT_LOG_RANGE = (math.log(3.0 / 4.0), math.log(4.0 / 3.0))

CLASSIFIER_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ClassifierSettings:
    """Build-time knobs shared by every classifier mode."""

    alpha: float = DEFAULT_ALPHA
    k_aug: int = DEFAULT_K_AUG
    run_seed: int = 0
    min_crop_area: float = DEFAULT_MIN_CROP_AREA
    renormalize_prototypes: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k_aug < 1:
            raise ConfigError(f"k_aug must be >= 1, got {self.k_aug}")
        if not (0.0 < self.min_crop_area <= 1.0):
            raise ConfigError(f"min_crop_area must be in (0, 1], got {self.min_crop_area}")
        if self.run_seed < 0:
            raise ConfigError("run_seed must be >= 0")


@dataclass
class ClassEntry:
    """One class of a coupled classifier. v_c is None when no training
    images were assigned (the weight then falls back to t_c alone)."""

    name: str
    t_c: EmbeddingVector = field(repr=False)
    v_c: EmbeddingVector | None = field(repr=False, default=None)
    w: EmbeddingVector = field(repr=False, default=None)  # type: ignore[assignment]


@dataclass
class CoupledClassifier:
    mode: str
    alpha: float
    k_aug: int
    embedder: ProviderFingerprint
    classes: list[ClassEntry]

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"invalid classifier mode {self.mode!r}")
        if not self.classes:
            raise EmptyInput("a classifier needs at least one class")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ConfigError("classifier class names must be unique")
        self.classes = sorted(self.classes, key=lambda c: c.name)
        dim = self.embedder.dim
        for entry in self.classes:
            for vec in (entry.t_c, entry.v_c, entry.w):
                if vec is not None and vec.dim != dim:
                    raise DimensionMismatch(
                        f"class {entry.name!r} has a dim-{vec.dim} vector, embedder dim is {dim}"
                    )

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    def to_dict(self) -> dict:
        return {
            "schema_version": CLASSIFIER_SCHEMA_VERSION,
            "mode": self.mode,
            "alpha": self.alpha,
            "k_aug": self.k_aug,
            "embedder": self.embedder.to_dict(),
            "classes": [
                {
                    "name": c.name,
                    "t_c": c.t_c.to_list(),
                    "v_c": c.v_c.to_list() if c.v_c is not None else None,
                    "w": c.w.to_list(),
                }
                for c in self.classes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoupledClassifier":
        try:
            embedder = ProviderFingerprint.from_dict(data["embedder"])
            classes = [
                ClassEntry(
                    name=c["name"],
                    t_c=EmbeddingVector(c["t_c"]),
                    v_c=EmbeddingVector(c["v_c"]) if c.get("v_c") is not None else None,
                    w=EmbeddingVector(c["w"]),
                )
                for c in data["classes"]
            ]
            return cls(
                mode=data["mode"],
                alpha=float(data["alpha"]),
                k_aug=int(data["k_aug"]),
                embedder=embedder,
                classes=classes,
            )
        except (KeyError, TypeError, ValueError, ConfigError, DimensionMismatch,
                EmptyInput) as exc:
            raise ClassifierArtifactCorrupt(f"classifier artifact is malformed: {exc}") from exc


@dataclass(frozen=True)
class Prediction:
    image: str
    predicted_name: str
    similarity: float
    runner_up_margin: float

    def __post_init__(self) -> None:
        if self.runner_up_margin < 0:
            raise ValueError("runner_up_margin must be >= 0")


# === deterministic augmentation ===


def _view_digest(run_seed: int, content_hash: str, index: int) -> bytes:
    h = hashlib.sha256()
    h.update(b"vfr-aug")
    h.update(struct.pack("<Q", run_seed & 0xFFFFFFFFFFFFFFFF))
    h.update(content_hash.encode("ascii"))
    h.update(struct.pack("<I", index))
    return h.digest()


def augmentation_plan(
    image: ImageRef,
    k: int,
    run_seed: int,
    *,
    min_crop_area: float = DEFAULT_MIN_CROP_AREA,
) -> list[AugmentationParams]:
    """K deterministic augmented views of one image.

    Each view is keyed by (run seed, image content hash, view index), so
    plans never depend on call order or on other images. Crop area is drawn
    uniformly from [min_crop_area, 1.0] with aspect ratio log-uniform in
    [3/4, 4/3]; draws that do not fit the unit frame are retried up to ten
    times before falling back to the full frame. Flip probability is 0.5.
    """
    if k < 1:
        raise ConfigError(f"augmentation plan needs k >= 1, got {k}")
    if not (0.0 < min_crop_area <= 1.0):
        raise ConfigError(f"min_crop_area must be in (0, 1], got {min_crop_area}")
    content_hash = image.content_hash()
    plans: list[AugmentationParams] = []
    for index in range(k):
        digest = _view_digest(run_seed, content_hash, index)
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        flip = bool(rng.random() < 0.5)
        crop = (0.0, 0.0, 1.0, 1.0)
        for _ in range(10):
            area = float(rng.uniform(min_crop_area, 1.0))
            ratio = float(np.exp(rng.uniform(*_ASPECT_LOG_RANGE)))
            width = math.sqrt(area * ratio)
            height = math.sqrt(area / ratio)
            if width <= 1.0 and height <= 1.0:
                x0 = float(rng.uniform(0.0, 1.0 - width))
                y0 = float(rng.uniform(0.0, 1.0 - height))
                crop = (x0, y0, x0 + width, y0 + height)
                break
        plans.append(
            AugmentationParams(
                crop=crop,
                horizontal_flip=flip,
                seed=int.from_bytes(digest[:8], "big"),
            )
        )
    return plans


# === classifier construction ===


def pseudo_label(
    train_images: list[ImageRef],
    grounded: list[GroundedClass],
    image_embedder: ImageEmbedProvider,
) -> dict[str, list[ImageRef]]:
    """Assign every training image to its nearest text prototype.

    Returns a mapping with one key per grounded class (possibly an empty
    list); exact similarity ties go to the lexicographically smaller name.
    """
    if not train_images:
        raise EmptyTrainSet("pseudo-labeling requires at least one training image")
    if not grounded:
        raise EmptyInput("pseudo-labeling requires at least one grounded class")
    ordered = sorted(grounded, key=lambda g: g.class_name)
    assignment: dict[str, list[ImageRef]] = {g.class_name: [] for g in ordered}
    for image in train_images:
        vector = image_embedder.embed_image(image)
        best_name: str | None = None
        best_score = -np.inf
        for g in ordered:
            score = cosine(vector, g.t_c)
            if score > best_score:
                best_score = score
                best_name = g.class_name
        assert best_name is not None
        assignment[best_name].append(image)
    return assignment


def visual_prototype(
    images: list[ImageRef],
    k: int,
    image_embedder: ImageEmbedProvider,
    run_seed: int,
    *,
    min_crop_area: float = DEFAULT_MIN_CROP_AREA,
) -> EmbeddingVector:
    """Mean of normalized embeddings over K augmented views of each image.

    Accumulation runs in a canonical order (images sorted by content hash,
    then view index), so the result is exactly invariant to input order.
    """
    if not images:
        raise EmptyInput("visual_prototype requires at least one image")
    ordered = sorted(images, key=lambda img: img.content_hash())
    total = None
    count = 0
    for image in ordered:
        for params in augmentation_plan(image, k, run_seed, min_crop_area=min_crop_area):
            vec = normalize(image_embedder.embed_image(image, params)).values
            total = vec.copy() if total is None else total + vec
            count += 1
    assert total is not None
    return EmbeddingVector(total / float(count))


def couple(t_c: EmbeddingVector, v_c: EmbeddingVector | None, alpha: float) -> EmbeddingVector:
    """w = alpha * t_c + (1 - alpha) * v_c; plain t_c when v_c is absent."""
    if not (0.0 <= alpha <= 1.0):
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    if v_c is None:
        return EmbeddingVector(t_c.values)
    if v_c.dim != t_c.dim:
        raise DimensionMismatch(f"couple got dims {t_c.dim} and {v_c.dim}")
    return EmbeddingVector(alpha * t_c.values + (1.0 - alpha) * v_c.values)


def _build_entry(
    grounded: GroundedClass,
    images: list[ImageRef],
    image_embedder: ImageEmbedProvider,
    settings: ClassifierSettings,
) -> ClassEntry:
    t_c = grounded.t_c
    if images:
        v_c = visual_prototype(
            images,
            settings.k_aug,
            image_embedder,
            settings.run_seed,
            min_crop_area=settings.min_crop_area,
        )
        if settings.renormalize_prototypes:
            v_c = EmbeddingVector(normalize(v_c).values)
    else:
        v_c = None
    w = couple(t_c, v_c, settings.alpha)
    if settings.renormalize_prototypes:
        w = EmbeddingVector(normalize(w).values)
    return ClassEntry(name=grounded.class_name, t_c=t_c, v_c=v_c, w=w)


def build_vocabulary_free(
    train_images: list[ImageRef],
    grounded: list[GroundedClass],
    image_embedder: ImageEmbedProvider,
    settings: ClassifierSettings,
) -> CoupledClassifier:
    """Pseudo-label the unlabeled pool, then couple text and visual prototypes.

    Classes that win no pseudo-labels keep v_c = None and fall back to
    w = t_c.
    """
    assignment = pseudo_label(train_images, grounded, image_embedder)
    entries = [
        _build_entry(g, assignment[g.class_name], image_embedder, settings)
        for g in sorted(grounded, key=lambda g: g.class_name)
    ]
    return CoupledClassifier(
        mode="vocabulary_free",
        alpha=settings.alpha,
        k_aug=settings.k_aug,
        embedder=image_embedder.fingerprint,
        classes=entries,
    )


def build_zero_shot(
    grounded: list[GroundedClass],
    embedder_fingerprint: ProviderFingerprint,
    settings: ClassifierSettings,
) -> CoupledClassifier:
    """Text-only classifier: w = t_c for every class, no images touched."""
    entries = []
    for g in sorted(grounded, key=lambda g: g.class_name):
        t_c = g.t_c
        w = EmbeddingVector(t_c.values)
        if settings.renormalize_prototypes:
            w = EmbeddingVector(normalize(w).values)
        entries.append(ClassEntry(name=g.class_name, t_c=t_c, v_c=None, w=w))
    return CoupledClassifier(
        mode="zero_shot",
        alpha=settings.alpha,
        k_aug=settings.k_aug,
        embedder=embedder_fingerprint,
        classes=entries,
    )


def build_few_shot(
    support: list[tuple[ImageRef, str]],
    grounded: list[GroundedClass],
    image_embedder: ImageEmbedProvider,
    settings: ClassifierSettings,
) -> CoupledClassifier:
    """Coupled classifier from labeled support images (no pseudo-labeling).

    Every grounded class must arrive with at least one support image.
    """
    if not support:
        raise EmptyTrainSet("few-shot building requires at least one support image")
    groups: dict[str, list[ImageRef]] = {}
    for image, label in support:
        groups.setdefault(label, []).append(image)
    missing = sorted(g.class_name for g in grounded if not groups.get(g.class_name))
    if missing:
        raise EmptySupportSet(f"labels with zero support images: {missing}")
    extra = sorted(set(groups) - {g.class_name for g in grounded})
    if extra:
        raise ConfigError(f"support labels without a grounded class: {extra}")
    entries = [
        _build_entry(g, groups[g.class_name], image_embedder, settings)
        for g in sorted(grounded, key=lambda g: g.class_name)
    ]
    return CoupledClassifier(
        mode="few_shot",
        alpha=settings.alpha,
        k_aug=settings.k_aug,
        embedder=image_embedder.fingerprint,
        classes=entries,
    )


# === inference ===


def classify(
    image: ImageRef,
    clf: CoupledClassifier,
    image_embedder: ImageEmbedProvider,
) -> Prediction:
    """Cosine argmax over class weights for one raw (unaugmented) image."""
    if image_embedder.fingerprint.dim != clf.embedder.dim:
        raise DimensionMismatch(
            f"classifier dim {clf.embedder.dim} vs embedder dim {image_embedder.fingerprint.dim}"
        )
    vector = image_embedder.embed_image(image)
    best_name: str | None = None
    best = -np.inf
    second = -np.inf
    for entry in clf.classes:  # already sorted by name
        score = cosine(vector, entry.w)
        if score > best:
            second = best
            best = score
            best_name = entry.name
        elif score > second:
            second = score
    assert best_name is not None
    margin = 0.0 if len(clf.classes) == 1 else float(best - second)
    return Prediction(
        image=image.path,
        predicted_name=best_name,
        similarity=float(best),
        runner_up_margin=margin,
    )
