"""Content-addressed embedding cache plus caching embedder wrappers.

A cache key is the sha256 of (provider fingerprint, content hash,
canonical augmentation encoding), so a changed backend or a changed crop
never aliases an old entry. Entries are stored as little-endian float64
payloads with a sha256 checksum; a checksum or framing failure surfaces
as CacheCorruption and get_or_compute transparently recomputes and
overwrites. Writes go through a temp file and an atomic rename, so
concurrent readers never observe a half-written entry.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
import threading
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import CacheCorruption
from ..images import ImageRef
from ..vectors import EmbeddingVector
from .base import AugmentationParams, ImageEmbedProvider, ProviderFingerprint, TextEmbedProvider

MAGIC = b"VFRC"


def _canonical_aug_tag(aug: AugmentationParams | None) -> str:
    if aug is None or aug.is_identity():
        return "raw"
    packed = struct.pack("<4d?", *aug.crop, aug.horizontal_flip)
    return packed.hex()


def embedding_cache_key(
    fingerprint: ProviderFingerprint,
    content_hash: str,
    aug: AugmentationParams | None = None,
) -> str:
    """Stable hex key for one (backend, content, view) triple."""
    material = "|".join(
        (
            fingerprint.kind,
            fingerprint.endpoint_id,
            fingerprint.model_id,
            str(fingerprint.dim),
            content_hash,
            _canonical_aug_tag(aug),
        )
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def text_content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingCache:
    """File-per-entry vector store under one directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path_for(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.vec"

    def get(self, key: str) -> np.ndarray | None:
        """Return the stored vector, None on a miss, CacheCorruption on damage."""
        path = self._path_for(key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise CacheCorruption(f"cache entry {key} unreadable: {exc}") from exc
        if len(blob) < len(MAGIC) + 4 + 32 or blob[: len(MAGIC)] != MAGIC:
            raise CacheCorruption(f"cache entry {key} has a damaged header")
        (dim,) = struct.unpack_from("<I", blob, len(MAGIC))
        payload_start = len(MAGIC) + 4
        payload_end = payload_start + dim * 8
        if len(blob) != payload_end + 32:
            raise CacheCorruption(f"cache entry {key} has a truncated payload")
        payload = blob[payload_start:payload_end]
        checksum = blob[payload_end:]
        if hashlib.sha256(payload).digest() != checksum:
            raise CacheCorruption(f"cache entry {key} failed its checksum")
        return np.frombuffer(payload, dtype="<f8").copy()

    def put(self, key: str, vector: np.ndarray) -> None:
        arr = np.ascontiguousarray(np.asarray(vector, dtype=np.float64))
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("cache stores non-empty 1-d vectors only")
        payload = arr.astype("<f8").tobytes()
        blob = MAGIC + struct.pack("<I", arr.size) + payload + hashlib.sha256(payload).digest()
        path = self._path_for(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock:
            fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(blob)
                os.replace(tmp_name, path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise

    def get_or_compute(self, key: str, compute: Callable[[], np.ndarray]) -> np.ndarray:
        """Return the cached vector, recomputing on a miss or corrupt entry."""
        try:
            cached = self.get(key)
        except CacheCorruption:
            cached = None
        if cached is not None:
            return cached
        vector = np.asarray(compute(), dtype=np.float64)
        self.put(key, vector)
        return vector


class CachedTextEmbedder:
    """TextEmbedProvider wrapper that batches cache misses into one call."""

    def __init__(self, provider: TextEmbedProvider, cache: EmbeddingCache):
        self.provider = provider
        self.cache = cache

    @property
    def fingerprint(self) -> ProviderFingerprint:
        return self.provider.fingerprint

    def embed_text(self, inputs: list[str]) -> list[EmbeddingVector]:
        if not inputs:
            return []
        keys = [
            embedding_cache_key(self.provider.fingerprint, text_content_hash(s))
            for s in inputs
        ]
        resolved: dict[int, np.ndarray] = {}
        miss_indices: list[int] = []
        seen_keys: set[str] = set()
        for i, key in enumerate(keys):
            try:
                hit = self.cache.get(key)
            except CacheCorruption:
                hit = None
            if hit is not None:
                resolved[i] = hit
            elif key not in seen_keys:
                # Duplicate strings in one batch embed once.
                seen_keys.add(key)
                miss_indices.append(i)
        if miss_indices:
            fresh = self.provider.embed_text([inputs[i] for i in miss_indices])
            for i, vec in zip(miss_indices, fresh):
                arr = np.asarray(vec.values, dtype=np.float64)
                self.cache.put(keys[i], arr)
                resolved[i] = arr
        out: list[EmbeddingVector] = []
        for i, key in enumerate(keys):
            if i not in resolved:
                stored = self.cache.get(key)
                if stored is None:
                    raise CacheCorruption(f"cache entry {key} vanished during batch embed")
                resolved[i] = stored
            out.append(EmbeddingVector(resolved[i]))
        return out


class CachedImageEmbedder:
    """ImageEmbedProvider wrapper backed by the content-addressed cache."""

    def __init__(self, provider: ImageEmbedProvider, cache: EmbeddingCache):
        self.provider = provider
        self.cache = cache

    @property
    def fingerprint(self) -> ProviderFingerprint:
        return self.provider.fingerprint

    def embed_image(self, image: ImageRef, aug: AugmentationParams | None = None) -> EmbeddingVector:
        key = embedding_cache_key(self.provider.fingerprint, image.content_hash(), aug)
        vector = self.cache.get_or_compute(
            key, lambda: np.asarray(self.provider.embed_image(image, aug).values, dtype=np.float64)
        )
        return EmbeddingVector(vector)
