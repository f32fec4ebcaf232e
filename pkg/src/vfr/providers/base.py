"""Provider contracts: message/fingerprint/augmentation types and interfaces.

Four capabilities back the pipeline: chat completion, visual question
answering, text embedding, and image embedding. Each provider exposes a
fingerprint that names the backing model; fingerprints key the embedding
cache and pin persisted classifier artifacts to the space they were built in.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..errors import ConfigError
from ..images import ImageRef
from ..vectors import EmbeddingVector

VALID_ROLES = ("system", "user", "assistant")
VALID_PROVIDER_KINDS = ("chat", "vqa", "text_embed", "image_embed")


@dataclass(frozen=True)
class ChatMessage:
    """One turn of a chat conversation."""

    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in VALID_ROLES:
            raise ConfigError(f"invalid chat role {self.role!r}")


@dataclass(frozen=True)
class ProviderFingerprint:
    """Identity of a provider backend.

    dim is required for embedding providers and must be absent otherwise.
    """

    kind: str
    endpoint_id: str
    model_id: str
    dim: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in VALID_PROVIDER_KINDS:
            raise ConfigError(f"invalid provider kind {self.kind!r}")
        embeds = self.kind in ("text_embed", "image_embed")
        if embeds and (self.dim is None or self.dim <= 0):
            raise ConfigError(f"{self.kind} fingerprint needs a positive dim")
        if not embeds and self.dim is not None:
            raise ConfigError(f"{self.kind} fingerprint must not carry a dim")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "endpoint_id": self.endpoint_id, "model_id": self.model_id}
        if self.dim is not None:
            d["dim"] = self.dim
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProviderFingerprint":
        return cls(
            kind=d["kind"],
            endpoint_id=d["endpoint_id"],
            model_id=d["model_id"],
            dim=d.get("dim"),
        )


@dataclass(frozen=True)
class AugmentationParams:
    """One deterministic augmented view: a fractional crop plus optional flip.

    crop is (x0, y0, x1, y1) in [0, 1] image fractions with x0 < x1 and
    y0 < y1. seed records the per-view generator key for bookkeeping; it is
    not sent on the wire (crop and flip fully determine the view).
    """

    crop: tuple[float, float, float, float]
    horizontal_flip: bool
    seed: int

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.crop
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise ConfigError(f"invalid crop rectangle {self.crop!r}")

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.crop
        return (x1 - x0) * (y1 - y0)

    def is_identity(self) -> bool:
        """True when the view equals the raw image: full frame, no flip."""
        return self.crop == (0.0, 0.0, 1.0, 1.0) and not self.horizontal_flip


@runtime_checkable
class ChatProvider(Protocol):
    """Turns a message list into one completion string."""

    fingerprint: ProviderFingerprint

    def chat(self, messages: list[ChatMessage], temperature: float = 0.0) -> str: ...


@runtime_checkable
class VqaProvider(Protocol):
    """Answers one natural-language question about one image."""

    fingerprint: ProviderFingerprint

    def vqa(self, image: ImageRef, question: str) -> str: ...


@runtime_checkable
class TextEmbedProvider(Protocol):
    """Embeds a batch of strings; output i corresponds to input i."""

    fingerprint: ProviderFingerprint

    def embed_text(self, inputs: list[str]) -> list[EmbeddingVector]: ...


@runtime_checkable
class ImageEmbedProvider(Protocol):
    """Embeds one image, optionally under an augmentation applied provider-side."""

    fingerprint: ProviderFingerprint

    def embed_image(
        self, image: ImageRef, aug: AugmentationParams | None = None
    ) -> EmbeddingVector: ...
