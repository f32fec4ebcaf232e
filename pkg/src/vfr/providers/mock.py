"""Deterministic in-process providers for offline runs and tests.

Every mock output is a pure function of (constructor seed, request bytes):
request bytes are hashed with sha256 and the digest seeds the reply, so
results are bit-identical across processes and platforms. No network, no
global RNG state.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
import threading

import numpy as np

from ..errors import EmptyInput
from ..images import ImageRef
from ..vectors import EmbeddingVector, normalize
from .base import AugmentationParams, ChatMessage, ProviderFingerprint

# === seeded banks ===

META_NOUNS = ("dog", "flower", "bird", "car", "cat")

NAME_ADJECTIVES = (
    "Crimson", "Azure", "Golden", "Speckled", "Crested", "Shadow",
    "Ivory", "Emerald", "Rusty", "Violet", "Banded", "Frosted",
)

SENTENCE_ADJECTIVES = (
    "bright", "sleek", "small", "speckled", "slender", "young",
    "weathered", "glossy", "pale", "striped", "plump", "alert",
    "quiet", "vivid", "dusky", "lone", "graceful", "sturdy",
    "mottled", "shy",
)

SENTENCE_SCENES = (
    "perched on a mossy branch", "resting near the old fence",
    "wading along the muddy shore", "gliding over calm water",
    "standing in tall grass", "hidden among autumn leaves",
    "feeding at the garden table", "crossing a gravel path",
    "warming in morning sunlight", "sheltering from light rain",
    "watching from a wooden post", "moving through dense reeds",
    "pausing beside wild flowers", "climbing a crooked trunk",
    "drinking from a shallow pool", "facing the evening breeze",
    "blending into dry brush", "hopping between low stones",
    "circling above the meadow", "waiting near the hedge row",
)

ATTRIBUTE_VALUE_BANKS = {
    "color": ("crimson", "slate blue", "golden", "olive", "ash gray",
              "ivory", "charcoal", "copper"),
    "shape": ("compact and rounded", "slender and elongated", "stocky",
              "streamlined", "angular", "broad"),
    "size": ("small", "medium sized", "large", "tiny", "oversized"),
    "parts": ("striped crest", "white wing bars", "curved bill",
              "dark eye ring", "forked tail", "banded legs",
              "pale throat patch"),
    "background": ("open grassland", "dense foliage", "urban street",
                   "sandy shore", "indoor scene", "snowy field"),
}

GENERIC_VALUES = ("plain", "varied", "unremarkable")

_CONTEXT_REQUEST = re.compile(
    r"Generate\s+(\d+)\s+short and common sentences with noun\s+(.+?),"
    r"\s+a type of\s+(.+?),\s+as a main subject",
    re.DOTALL,
)
_NAME_REQUEST = re.compile(r"fine-grained collection of\s+(\S+)\s+categories")
_CONSOLIDATION_ANSWERS = re.compile(r"as follows:\s*(.+?)\.\s*Reply", re.DOTALL)
_FORM_KEY = re.compile(r"'([a-z]+):")


def _digest(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
        h.update(b"\x1f")
    return h.digest()


def _seed_bytes(seed: int) -> bytes:
    return struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF)


def _rng_from(digest: bytes) -> np.random.Generator:
    return np.random.default_rng(int.from_bytes(digest, "big"))


def _canonical_aug(aug: AugmentationParams | None) -> bytes:
    """Encode an augmentation for hashing; absent and identity collapse together."""
    if aug is None or aug.is_identity():
        return b"raw"
    return struct.pack("<4d?", *aug.crop, aug.horizontal_flip)


class _CallCounter:
    """Thread-safe provider call counter, shared by all mocks."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._calls = 0

    def _count_call(self) -> None:
        with self._lock:
            self._calls += 1

    @property
    def calls(self) -> int:
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0


class MockTextEmbedProvider(_CallCounter):
    """Maps each string to a seeded pseudo-random unit vector.

    Besides the call counter, strings_embedded tracks the total number of
    input strings seen, so tests can assert batching behavior precisely.
    """

    def __init__(self, seed: int, dim: int = 64, salt: str = "text"):
        super().__init__()
        self.seed = seed
        self.dim = dim
        self.salt = salt
        self.strings_embedded = 0
        self.fingerprint = ProviderFingerprint(
            kind="text_embed",
            endpoint_id="mock://embed",
            model_id=f"mock-text-embed:{salt}:d{dim}:s{seed}",
            dim=dim,
        )

    def _embed_one(self, text: str) -> EmbeddingVector:
        digest = _digest(b"vfr-mock-embed", self.salt.encode(), _seed_bytes(self.seed),
                         text.encode("utf-8"))
        raw = _rng_from(digest).standard_normal(self.dim)
        return normalize(raw)

    def embed_text(self, inputs: list[str]) -> list[EmbeddingVector]:
        if not inputs:
            return []
        self._count_call()
        with self._lock:
            self.strings_embedded += len(inputs)
        return [self._embed_one(s) for s in inputs]


class MockImageEmbedProvider(_CallCounter):
    """Maps (image bytes, augmentation) to a seeded pseudo-random unit vector.

    An absent augmentation and an explicit full-frame/no-flip augmentation
    hash identically, so they return the same vector.
    """

    def __init__(self, seed: int, dim: int = 64, salt: str = "image"):
        super().__init__()
        self.seed = seed
        self.dim = dim
        self.salt = salt
        self.fingerprint = ProviderFingerprint(
            kind="image_embed",
            endpoint_id="mock://embed",
            model_id=f"mock-image-embed:{salt}:d{dim}:s{seed}",
            dim=dim,
        )

    def embed_image(self, image: ImageRef, aug: AugmentationParams | None = None) -> EmbeddingVector:
        self._count_call()
        digest = _digest(b"vfr-mock-embed", self.salt.encode(), _seed_bytes(self.seed),
                         image.content_hash().encode(), _canonical_aug(aug))
        raw = _rng_from(digest).standard_normal(self.dim)
        return normalize(raw)


class MockChatProvider(_CallCounter):
    """Answers the pipeline's prompt shapes from seeded template banks.

    Recognized request shapes: context-sentence generation, candidate-name
    proposal, and noun consolidation. Anything else gets a generic tagged
    reply. Replies for the structured shapes are single-line JSON arrays.
    """

    def __init__(self, seed: int):
        super().__init__()
        self.seed = seed
        self.fingerprint = ProviderFingerprint(
            kind="chat", endpoint_id="mock://chat", model_id=f"mock-chat:s{seed}"
        )

    def chat(self, messages: list[ChatMessage], temperature: float = 0.0) -> str:
        if not messages:
            raise EmptyInput("chat requires at least one message")
        self._count_call()
        prompt = "\n".join(m.content for m in messages)
        digest = _digest(b"vfr-mock-chat", _seed_bytes(self.seed), prompt.encode("utf-8"))

        m = _CONTEXT_REQUEST.search(prompt)
        if m:
            return self._context_sentences(int(m.group(1)), m.group(2).strip(), digest)
        m = _NAME_REQUEST.search(prompt)
        if m:
            return self._candidate_names(m.group(1).strip(), digest)
        m = _CONSOLIDATION_ANSWERS.search(prompt)
        if m:
            return self._consolidate(m.group(1))
        return f"mock completion {digest.hex()[:12]}"

    def _context_sentences(self, m_requested: int, classname: str, digest: bytes) -> str:
        rng = _rng_from(digest)
        combos = len(SENTENCE_ADJECTIVES) * len(SENTENCE_SCENES)
        picks = rng.permutation(combos)[: min(m_requested, combos)]
        sentences = []
        for combo in picks:
            adj = SENTENCE_ADJECTIVES[int(combo) % len(SENTENCE_ADJECTIVES)]
            scene = SENTENCE_SCENES[int(combo) // len(SENTENCE_ADJECTIVES)]
            sentences.append(f"{adj} {classname} {scene}")
        return json.dumps(sentences)

    def _candidate_names(self, g: str, digest: bytes) -> str:
        rng = _rng_from(digest)
        count = 4 + int(rng.integers(0, 5))
        picks = rng.permutation(len(NAME_ADJECTIVES))[:count]
        names = [f"{NAME_ADJECTIVES[int(i)]} {g.title()}" for i in picks]
        return json.dumps(names)

    def _consolidate(self, answers_blob: str) -> str:
        counts: dict[str, int] = {}
        for token in answers_blob.split(","):
            word = token.strip().lower()
            if word:
                counts[word] = counts.get(word, 0) + 1
        if not counts:
            return "object"
        best = max(sorted(counts), key=lambda w: counts[w])
        return best


class MockVqaProvider(_CallCounter):
    """Answers the meta question with a seed-chosen noun and attribute
    questions with 'key: value' strings drawn from per-key banks.

    meta_overrides maps an image content hash (sha256 hex) to a forced
    meta answer, which keeps outputs pure while letting tests model
    disagreement between images.
    """

    def __init__(self, seed: int, meta_overrides: dict[str, str] | None = None):
        super().__init__()
        self.seed = seed
        self.meta_overrides = dict(meta_overrides or {})
        self.fingerprint = ProviderFingerprint(
            kind="vqa", endpoint_id="mock://vqa", model_id=f"mock-vqa:s{seed}"
        )

    def vqa(self, image: ImageRef, question: str) -> str:
        self._count_call()
        content_hash = image.content_hash()
        digest = _digest(b"vfr-mock-vqa", _seed_bytes(self.seed),
                         content_hash.encode(), question.encode("utf-8"))
        if "type of object" in question:
            override = self.meta_overrides.get(content_hash)
            if override is not None:
                return override
            return META_NOUNS[self.seed % len(META_NOUNS)]
        key_match = _FORM_KEY.search(question)
        if key_match:
            key = key_match.group(1)
            bank = ATTRIBUTE_VALUE_BANKS.get(key, GENERIC_VALUES)
            value = bank[digest[0] % len(bank)]
            return f"{key}: {value}"
        return f"mock answer {digest.hex()[:8]}"
