"""Contextual grounding: turn a class name into a text-space prototype.

Each class gets M generated usage sentences; the prototype t_c is the
average of the individually normalized sentence embeddings and is left
un-normalized by default, so its norm lands in (0, 1].
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import InsufficientContexts, UnparseableNameList
from .discovery import parse_name_list
from .prompts import PromptPack, build_context_prompt, build_plain_prompt
from .providers.base import ChatMessage, ChatProvider, TextEmbedProvider
from .vectors import NORM_EPSILON, EmbeddingVector, mean_of_normalized, normalize

log = logging.getLogger(__name__)

DEFAULT_MIN_CONTEXT_FRACTION = 0.5


@dataclass
class ContextSet:
    """Usable context sentences for one class.

    The constructor deduplicates exact repeats (order preserved) and insists
    every sentence actually mentions the class name, case-insensitively.
    """

    class_name: str
    sentences: list[str]
    m_requested: int

    def __post_init__(self) -> None:
        if not self.class_name.strip():
            raise ValueError("context set needs a non-empty class name")
        if self.m_requested < 1:
            raise ValueError("m_requested must be >= 1")
        needle = self.class_name.casefold()
        unique: list[str] = []
        seen: set[str] = set()
        for sentence in self.sentences:
            if needle not in sentence.casefold():
                raise ValueError(
                    f"sentence does not mention class {self.class_name!r}: {sentence!r}"
                )
            if sentence not in seen:
                seen.add(sentence)
                unique.append(sentence)
        if not unique:
            raise ValueError("context set needs at least one sentence")
        self.sentences = unique


@dataclass
class GroundedClass:
    """A class name tied to its text prototype (and its contexts, if any).

    context is None when contextual grounding is disabled and t_c came from
    the single plain photo prompt.
    """

    class_name: str
    context: ContextSet | None
    t_c: EmbeddingVector = field(repr=False)

    def __post_init__(self) -> None:
        norm = self.t_c.norm()
        if not (NORM_EPSILON < norm <= 1.0 + 1e-9):
            raise ValueError(f"grounded prototype norm out of range: {norm!r}")


def generate_contexts(
    class_name: str,
    g: str,
    m: int,
    chat: ChatProvider,
    pack: PromptPack,
    *,
    temperature: float = 0.7,
    min_fraction: float = DEFAULT_MIN_CONTEXT_FRACTION,
    retries: int = 1,
) -> ContextSet:
    """Request M context sentences for a class and keep the usable ones.

    Usable means: parsed out of the bracketed reply, mentions the class name
    (case-insensitive), not an exact duplicate. If fewer than
    ceil(min_fraction * m) survive, the request is retried once before
    InsufficientContexts.
    """
    prompt = build_context_prompt(pack, class_name, g, m)
    threshold = math.ceil(min_fraction * m)
    needle = class_name.casefold()
    usable: list[str] = []
    for attempt in range(retries + 1):
        reply = chat.chat([ChatMessage("user", prompt)], temperature=temperature)
        try:
            raw_sentences = parse_name_list(reply)
        except UnparseableNameList:
            raw_sentences = []
        usable = []
        seen: set[str] = set()
        for sentence in raw_sentences:
            if needle in sentence.casefold() and sentence not in seen:
                seen.add(sentence)
                usable.append(sentence)
        if len(usable) >= threshold:
            return ContextSet(class_name=class_name, sentences=usable, m_requested=m)
        log.warning(
            "class %r: %d/%d usable context sentences (need %d), attempt %d",
            class_name, len(usable), m, threshold, attempt + 1,
        )
    raise InsufficientContexts(
        f"class {class_name!r}: only {len(usable)} of {m} requested sentences usable "
        f"after retry (needed {threshold})"
    )


def contextual_text_embedding(
    contexts: ContextSet,
    embedder: TextEmbedProvider,
    *,
    renormalize: bool = False,
) -> GroundedClass:
    """Average the normalized sentence embeddings into the class prototype t_c."""
    vectors = embedder.embed_text(list(contexts.sentences))
    t_c = mean_of_normalized(vectors)
    if renormalize:
        t_c = normalize(t_c)
    return GroundedClass(class_name=contexts.class_name, context=contexts,
                         t_c=EmbeddingVector(t_c.values))


def ground_with_plain_prompt(
    class_name: str,
    g: str,
    embedder: TextEmbedProvider,
    pack: PromptPack,
) -> GroundedClass:
    """Prototype from the single normalized photo-prompt embedding (grounding off)."""
    prompt = build_plain_prompt(pack, class_name, g)
    vector = embedder.embed_text([prompt])[0]
    return GroundedClass(class_name=class_name, context=None,
                         t_c=EmbeddingVector(normalize(vector).values))
