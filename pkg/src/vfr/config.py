"""Run configuration: every knob a run depends on, hashable for provenance.

The config hash covers only semantic fields (never output or cache paths),
so the same manifest + config + seed produces byte-identical artifacts no
matter where they are written.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

ENV_CHAT_URL = "VFR_CHAT_URL"
ENV_VQA_URL = "VFR_VQA_URL"
ENV_EMBED_URL = "VFR_EMBED_URL"
ENV_API_KEY = "VFR_API_KEY"
ENV_CACHE_DIR = "VFR_CACHE_DIR"

MODES = ("vocabulary_free", "zero_shot", "few_shot")
PROVIDER_KINDS = ("mock", "wire")

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ProviderSettings:
    """Which backends serve the four capabilities plus the metric embedder.

    kind "mock" runs fully offline from the run seed. kind "wire" reads
    endpoints from these fields or from the VFR_* environment variables.
    filtration_distinct switches candidate refinement onto its own
    embedding backend (a second salt for mocks, the filtration_* models on
    the wire).
    """

    kind: str = "mock"
    embed_dim: int = 64
    semantic_dim: int | None = None
    filtration_distinct: bool = False
    filtration_embed_dim: int | None = None
    chat_model: str = "default-chat"
    vqa_model: str = "default-vqa"
    text_embed_model: str = "default-text-embed"
    image_embed_model: str = "default-image-embed"
    semantic_model: str = "default-semantic-embed"
    filtration_text_model: str | None = None
    filtration_image_model: str | None = None
    chat_url: str | None = None
    vqa_url: str | None = None
    embed_url: str | None = None
    api_key: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ConfigError(f"provider kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be >= 1, got {self.embed_dim}")
        if self.semantic_dim is not None and self.semantic_dim < 1:
            raise ConfigError("semantic_dim must be >= 1 when set")
        if self.filtration_embed_dim is not None and self.filtration_embed_dim < 1:
            raise ConfigError("filtration_embed_dim must be >= 1 when set")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "vocabulary_free"
    seed: int = 0
    alpha: float = 0.7
    k_aug: int = 10
    m_contexts: int = 100
    retention_ratio: float = 0.8
    k_override: int | None = None
    ccg_enabled: bool = True
    cnr_enabled: bool = True
    renormalize_prototypes: bool = False
    min_crop_area: float = 0.6
    min_context_fraction: float = 0.5
    context_temperature: float = 0.7
    discovery_temperature: float = 0.0
    images_per_class_limit: int | None = None
    repeat_runs: int = 1
    max_parallel_requests: int = 8
    retry_max: int = 3
    retry_backoff: float = 0.5
    request_timeout: float = 30.0
    providers: ProviderSettings = field(default_factory=ProviderSettings)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (0 <= self.seed <= MAX_SEED):
            raise ConfigError("seed must fit in 64 unsigned bits")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.k_aug < 1:
            raise ConfigError(f"k_aug must be >= 1, got {self.k_aug}")
        if self.m_contexts < 1:
            raise ConfigError(f"m_contexts must be >= 1, got {self.m_contexts}")
        if not (0.0 < self.retention_ratio <= 1.0):
            raise ConfigError(f"retention_ratio must be in (0, 1], got {self.retention_ratio}")
        if self.k_override is not None and self.k_override < 1:
            raise ConfigError("k_override must be >= 1 when set")
        if not (0.0 < self.min_crop_area <= 1.0):
            raise ConfigError(f"min_crop_area must be in (0, 1], got {self.min_crop_area}")
        if not (0.0 < self.min_context_fraction <= 1.0):
            raise ConfigError("min_context_fraction must be in (0, 1]")
        if self.context_temperature < 0.0 or self.discovery_temperature < 0.0:
            raise ConfigError("temperatures must be >= 0")
        if self.images_per_class_limit is not None and self.images_per_class_limit < 1:
            raise ConfigError("images_per_class_limit must be >= 1 when set")
        if self.repeat_runs < 1:
            raise ConfigError(f"repeat_runs must be >= 1, got {self.repeat_runs}")
        if self.max_parallel_requests < 1:
            raise ConfigError("max_parallel_requests must be >= 1")
        if self.retry_max < 1:
            raise ConfigError("retry_max must be >= 1")
        if self.retry_backoff < 0.0:
            raise ConfigError("retry_backoff must be >= 0")
        if self.request_timeout <= 0.0:
            raise ConfigError("request_timeout must be > 0")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "providers" in kwargs and kwargs["providers"] is not None:
            p = kwargs["providers"]
            if not isinstance(p, dict):
                raise ConfigError("providers must be a JSON object")
            p_known = {f.name for f in dataclasses.fields(ProviderSettings)}
            p_unknown = set(p) - p_known
            if p_unknown:
                raise ConfigError(f"unknown provider keys: {sorted(p_unknown)}")
            kwargs["providers"] = ProviderSettings(**p)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **kwargs) -> "RunConfig":
        return dataclasses.replace(self, **kwargs)


def load_config(path: str | Path | None, **overrides) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus keyword overrides.

    Overrides with value None are ignored so CLI flags only apply when given.
    """
    if path is not None:
        try:
            data = json.loads(Path(path).read_text("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!s}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"config {path!s} is not valid JSON: {exc}") from exc
        cfg = RunConfig.from_dict(data)
    else:
        cfg = RunConfig()
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    if cleaned:
        cfg = cfg.with_overrides(**cleaned)
    return cfg
