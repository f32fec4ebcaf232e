"""Provider contracts, deterministic mocks, wire clients, and the embedding cache."""

from .base import (
    AugmentationParams,
    ChatMessage,
    ChatProvider,
    ImageEmbedProvider,
    ProviderFingerprint,
    TextEmbedProvider,
    VqaProvider,
)
from .cache import (
    CachedImageEmbedder,
    CachedTextEmbedder,
    EmbeddingCache,
    embedding_cache_key,
    text_content_hash,
)
from .mock import (
    MockChatProvider,
    MockImageEmbedProvider,
    MockTextEmbedProvider,
    MockVqaProvider,
)
from .wire import (
    WireChatProvider,
    WireImageEmbedProvider,
    WireTextEmbedProvider,
    WireVqaProvider,
    post_json_with_retry,
)

__all__ = [
    "AugmentationParams",
    "ChatMessage",
    "ChatProvider",
    "VqaProvider",
    "TextEmbedProvider",
    "ImageEmbedProvider",
    "ProviderFingerprint",
    "EmbeddingCache",
    "CachedTextEmbedder",
    "CachedImageEmbedder",
    "embedding_cache_key",
    "text_content_hash",
    "MockChatProvider",
    "MockVqaProvider",
    "MockTextEmbedProvider",
    "MockImageEmbedProvider",
    "WireChatProvider",
    "WireVqaProvider",
    "WireTextEmbedProvider",
    "WireImageEmbedProvider",
    "post_json_with_retry",
]
