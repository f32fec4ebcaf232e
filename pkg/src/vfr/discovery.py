"""Vocabulary discovery from unlabeled images.

Three steps: infer the dataset's meta-category with per-image VQA and a
majority vote (LLM consolidation on disagreement), extract per-image
visual attributes with a fixed VQA question battery, then ask the chat
model to propose candidate fine-grained class names from those attributes.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import EmptyCompletion, EmptyTrainSet, UnparseableNameList
from .images import ImageRef
from .prompts import PromptPack
from .providers.base import ChatMessage, ChatProvider, VqaProvider

log = logging.getLogger(__name__)

REPAIR_INSTRUCTION = "Return only the bracketed list."

_ARTICLES = ("a ", "an ", "the ")
_KEY_VALUE = re.compile(r"^\s*([^:\n]+?)\s*:\s*(.+?)\s*$")


@dataclass(frozen=True)
class MetaCategory:
    """The dataset-level general category, e.g. 'bird'.

    support_count is the number of per-image VQA answers that agreed with
    the chosen name.
    """

    name: str
    support_count: int

    def __post_init__(self) -> None:
        if not self.name or self.name != self.name.strip().lower():
            raise ValueError(f"meta-category name must be non-empty lowercase, got {self.name!r}")
        if self.support_count < 0:
            raise ValueError("support_count must be >= 0")


@dataclass(frozen=True)
class AttributePair:
    key: str
    value: str


@dataclass
class AttributeExtraction:
    """Per-image attribute lists plus a counter of answers dropped as unparseable."""

    per_image: list[list[AttributePair]]
    dropped: int = 0


@dataclass
class CandidateNameSet:
    """Deduplicated candidate class names proposed for one meta-category."""

    meta: MetaCategory
    names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for name in self.names:
            key = _fold(name)
            if not key:
                raise ValueError("candidate names must be non-empty")
            if key in seen:
                raise ValueError(f"candidate names must be unique under case-folding: {name!r}")
            seen.add(key)


def _fold(name: str) -> str:
    return " ".join(name.casefold().split())


def _normalize_noun(raw: str) -> str:
    """Lowercase, trim, strip trailing periods and a leading article."""
    text = " ".join(raw.strip().lower().split()).rstrip(".")
    for article in _ARTICLES:
        if text.startswith(article):
            text = text[len(article):]
            break
    return text.strip()


def _fan_out(fn, items, max_parallel: int):
    """Apply fn over items preserving order, with bounded parallelism."""
    if max_parallel <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(max_parallel, len(items))) as pool:
        return list(pool.map(fn, items))


def infer_meta_category(
    train_images: list[ImageRef],
    vqa: VqaProvider,
    chat: ChatProvider,
    pack: PromptPack,
    *,
    temperature: float = 0.0,
    max_parallel: int = 8,
) -> MetaCategory:
    """Ask every training image what it depicts and aggregate the answers.

    A strict majority (> 50% of valid answers) wins directly; otherwise the
    chat model consolidates the multiset into a single noun. The answer
    multiset is sorted before consolidation, so image order never matters.
    """
    if not train_images:
        raise EmptyTrainSet("meta-category inference requires at least one training image")
    raw_answers = _fan_out(lambda img: vqa.vqa(img, pack.meta_question), train_images, max_parallel)
    answers = [a for a in (_normalize_noun(ans) for ans in raw_answers) if a]
    if not answers:
        raise EmptyCompletion("no usable meta-category answers from VQA")
    counts = Counter(answers)
    top_name, top_count = max(sorted(counts.items()), key=lambda kv: kv[1])
    if top_count * 2 > len(answers):
        return MetaCategory(name=top_name, support_count=top_count)
    log.info("no majority among meta answers %s; consolidating via chat", dict(counts))
    prompt = pack.consolidation_template.format(answers=", ".join(sorted(answers)))
    reply = chat.chat([ChatMessage("user", prompt)], temperature=temperature)
    # Normalize before splitting so a leading article is stripped as a
    # whole-phrase prefix ("The Feline." -> "feline"), then keep one noun.
    tokens = _normalize_noun(reply).split()
    name = tokens[0] if tokens else ""
    if not name:
        raise EmptyCompletion("consolidation returned no usable noun")
    return MetaCategory(name=name, support_count=counts.get(name, 0))


def parse_attribute_answer(answer: str) -> AttributePair | None:
    """Parse one 'key: value' VQA answer; None when it does not fit the form."""
    match = _KEY_VALUE.match(answer.strip().splitlines()[0] if answer.strip() else "")
    if not match:
        return None
    key = match.group(1).strip().lower()
    value = match.group(2).strip()
    if not key or not value:
        return None
    return AttributePair(key=key, value=value)


def extract_attributes(
    train_images: list[ImageRef],
    g: str,
    vqa: VqaProvider,
    pack: PromptPack,
    *,
    max_parallel: int = 8,
) -> AttributeExtraction:
    """Run the fixed attribute-question battery against every training image.

    Unparseable answers are dropped and counted; within one image the first
    answer for a key wins.
    """
    if not train_images:
        raise EmptyTrainSet("attribute extraction requires at least one training image")
    questions = [q.format(g=g) for q in pack.attribute_questions]

    def per_image(img: ImageRef) -> tuple[list[AttributePair], int]:
        pairs: list[AttributePair] = []
        seen_keys: set[str] = set()
        dropped = 0
        for question in questions:
            answer = vqa.vqa(img, question)
            pair = parse_attribute_answer(answer)
            if pair is None:
                dropped += 1
                log.warning("dropped unparseable attribute answer %r for %s", answer, img.path)
            elif pair.key not in seen_keys:
                seen_keys.add(pair.key)
                pairs.append(pair)
        return pairs, dropped

    results = _fan_out(per_image, train_images, max_parallel)
    return AttributeExtraction(
        per_image=[pairs for pairs, _ in results],
        dropped=sum(d for _, d in results),
    )


def _find_bracketed_span(raw: str) -> str:
    """Extract the first balanced [...] span, honoring quoted strings."""
    start = raw.find("[")
    if start < 0:
        raise UnparseableNameList("reply contains no bracketed list")
    depth = 0
    quote: str | None = None
    escaped = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if escaped:
            escaped = False
            continue
        if quote is not None:
            if ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            continue
        if ch in ('"', "'"):
            quote = ch
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                return raw[start : i + 1]
    raise UnparseableNameList("bracketed list is never closed")


def _split_top_level(inner: str) -> list[str]:
    items: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    escaped = False
    for ch in inner:
        if escaped:
            buf.append(ch)
            escaped = False
            continue
        if quote is not None:
            if ch == "\\":
                escaped = True
            elif ch == quote:
                quote = None
            else:
                buf.append(ch)
            continue
        if ch in ('"', "'"):
            quote = ch
        elif ch == ",":
            items.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    items.append("".join(buf))
    return items


def parse_name_list(raw: str) -> list[str]:
    """Recover a list of strings from a chat reply containing a bracketed list.

    Surrounding prose is ignored. The span is parsed as JSON when possible,
    falling back to a tolerant splitter that handles single quotes and
    unquoted items. Items are trimmed and empties dropped.
    """
    span = _find_bracketed_span(raw)
    try:
        parsed = json.loads(span)
        if isinstance(parsed, list):
            return [str(item).strip() for item in parsed if str(item).strip()]
    except ValueError:
        pass
    return [item.strip() for item in _split_top_level(span[1:-1]) if item.strip()]


def _format_attribute_lines(per_image: list[list[AttributePair]]) -> str:
    lines = []
    for i, pairs in enumerate(per_image):
        body = "; ".join(f"{p.key}: {p.value}" for p in pairs) if pairs else "no attributes"
        lines.append(f"image {i + 1}: {body}")
    return "\n".join(lines)


def propose_candidate_names(
    g: MetaCategory,
    attributes: list[list[AttributePair]],
    chat: ChatProvider,
    pack: PromptPack,
    *,
    temperature: float = 0.0,
) -> CandidateNameSet:
    """Ask the chat model for candidate class names given observed attributes.

    On an unparseable reply the model gets exactly one repair turn asking
    for just the bracketed list; a second failure propagates.
    """
    prompt = pack.name_reasoning_template.format(
        g=g.name, attributes=_format_attribute_lines(attributes)
    )
    messages = [ChatMessage("user", prompt)]
    reply = chat.chat(messages, temperature=temperature)
    try:
        names = parse_name_list(reply)
    except UnparseableNameList:
        log.warning("name proposal reply was unparseable; sending one repair prompt")
        messages = messages + [
            ChatMessage("assistant", reply),
            ChatMessage("user", REPAIR_INSTRUCTION),
        ]
        names = parse_name_list(chat.chat(messages, temperature=temperature))
    unique: list[str] = []
    seen: set[str] = set()
    for name in names:
        key = _fold(name)
        if key and key not in seen:
            seen.add(key)
            unique.append(name.strip())
    if not unique:
        raise UnparseableNameList("name proposal produced an empty list")
    return CandidateNameSet(meta=g, names=unique)
