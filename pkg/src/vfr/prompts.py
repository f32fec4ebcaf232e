"""Prompt pack: the versioned text templates every LLM/VQA call is built from.

The default pack ships as package data; an alternative pack can be loaded
from any JSON file with the same keys, which is how prompts get swapped
without touching code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

REQUIRED_KEYS = (
    "meta_question",
    "attribute_questions",
    "name_reasoning_template",
    "consolidation_template",
    "context_template",
    "plain_prompt_template",
)


@dataclass(frozen=True)
class PromptPack:
    schema_version: int
    meta_question: str
    attribute_questions: tuple[str, ...]
    name_reasoning_template: str
    consolidation_template: str
    context_template: str
    plain_prompt_template: str


def load_prompt_pack(path: str | Path | None = None) -> PromptPack:
    """Load a prompt pack from path, or the bundled default when path is None."""
    if path is None:
        raw = resources.files("vfr").joinpath("data/prompt_pack.json").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    try:
        data = json.loads(raw)
    except ValueError as exc:
        raise ConfigError(f"prompt pack is not valid JSON: {exc}") from exc
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ConfigError(f"prompt pack missing keys: {missing}")
    questions = data["attribute_questions"]
    if not isinstance(questions, list) or not all(isinstance(q, str) for q in questions):
        raise ConfigError("prompt pack attribute_questions must be a list of strings")
    return PromptPack(
        schema_version=int(data.get("schema_version", 1)),
        meta_question=data["meta_question"],
        attribute_questions=tuple(questions),
        name_reasoning_template=data["name_reasoning_template"],
        consolidation_template=data["consolidation_template"],
        context_template=data["context_template"],
        plain_prompt_template=data["plain_prompt_template"],
    )


def build_context_prompt(pack: PromptPack, class_name: str, g: str, m: int) -> str:
    """Instantiate the context-generation template for one class.

    Substitutes the class name, the meta-category phrase, and the requested
    sentence count; the rest of the template text is fixed.
    """
    if m < 1:
        raise ConfigError(f"context prompt needs m >= 1, got {m}")
    if not class_name.strip():
        raise ConfigError("context prompt needs a non-empty class name")
    if not g.strip():
        raise ConfigError("context prompt needs a non-empty meta-category")
    return pack.context_template.format(m=m, classname=class_name, g=g)


def build_plain_prompt(pack: PromptPack, class_name: str, g: str) -> str:
    """The single-string photo prompt used when contextual grounding is off."""
    return pack.plain_prompt_template.format(classname=class_name, g=g)
