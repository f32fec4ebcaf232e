"""End-to-end orchestration: providers -> discovery -> classifier ->
predictions -> metrics, with stage-tagged failures and persisted artifacts.

Every stage is deterministic for a fixed (manifest, config, seed) triple
when backed by the mock providers.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .classifier import (
    ClassifierSettings,
    CoupledClassifier,
    build_few_shot,
    build_vocabulary_free,
    build_zero_shot,
    classify,
)
from .config import (
    ENV_CACHE_DIR,
    ENV_CHAT_URL,
    ENV_EMBED_URL,
    ENV_VQA_URL,
    ENV_API_KEY,
    RunConfig,
)
from .discovery import (
    MetaCategory,
    extract_attributes,
    infer_meta_category,
    propose_candidate_names,
)
from .errors import (
    ConfigError,
    EmptyInput,
    EmptyTrainSet,
    FingerprintMismatch,
    MissingGroundTruth,
    ProviderError,
    StageError,
    VfrError,
)
from .evaluation import MetricsReport, compute_metrics
from .grounding import (
    ContextSet,
    GroundedClass,
    contextual_text_embedding,
    generate_contexts,
    ground_with_plain_prompt,
)
from .manifest import DatasetManifest, load_manifest, sample_train_entries
from .prompts import PromptPack, load_prompt_pack
from .providers.cache import CachedImageEmbedder, CachedTextEmbedder, EmbeddingCache
from .providers.mock import (
    MockChatProvider,
    MockImageEmbedProvider,
    MockTextEmbedProvider,
    MockVqaProvider,
)
from .providers.wire import (
    WireChatProvider,
    WireImageEmbedProvider,
    WireTextEmbedProvider,
    WireVqaProvider,
)
from .refinement import RefinementConfig, ScoredCandidate, filter_top_k, score_candidates

log = logging.getLogger(__name__)

RUN_SCHEMA_VERSION = 1


@dataclass
class ProviderSet:
    """Constructed providers for one run; embedders may be cache-wrapped."""

    chat: object
    vqa: object
    text_embed: object
    image_embed: object
    filtration_text: object
    filtration_image: object
    semantic: object
    cache: EmbeddingCache | None = None

    def _roles(self) -> list[tuple[str, object]]:
        roles = [
            ("chat", self.chat),
            ("vqa", self.vqa),
            ("text_embed", self.text_embed),
            ("image_embed", self.image_embed),
            ("semantic_embed", self.semantic),
        ]
        if self.filtration_text is not self.text_embed:
            roles.append(("filtration_text_embed", self.filtration_text))
        if self.filtration_image is not self.image_embed:
            roles.append(("filtration_image_embed", self.filtration_image))
        return roles

    def fingerprints(self) -> dict[str, dict]:
        out = {}
        for role, provider in self._roles():
            out[role] = provider.fingerprint.to_dict()
        return out

    def call_counts(self) -> dict[str, int]:
        out = {}
        for role, provider in self._roles():
            inner = getattr(provider, "provider", provider)
            calls = getattr(inner, "calls", None)
            if calls is not None:
                out[role] = int(calls)
        return out


def build_providers(cfg: RunConfig, cache_dir: str | Path | None = None) -> ProviderSet:
    """Construct the provider set for a config, wiring in the cache when set.

    The cache directory resolves from the explicit argument, then
    VFR_CACHE_DIR; with neither, embeddings are recomputed on every call.
    """
    ps = cfg.providers
    if ps.kind == "mock":
        chat = MockChatProvider(cfg.seed)
        vqa = MockVqaProvider(cfg.seed)
        text = MockTextEmbedProvider(cfg.seed, dim=ps.embed_dim, salt="text")
        image = MockImageEmbedProvider(cfg.seed, dim=ps.embed_dim, salt="image")
        if ps.filtration_distinct:
            f_dim = ps.filtration_embed_dim or ps.embed_dim
            f_text: object = MockTextEmbedProvider(cfg.seed, dim=f_dim, salt="filtration-text")
            f_image: object = MockImageEmbedProvider(cfg.seed, dim=f_dim, salt="filtration-image")
        else:
            f_text, f_image = text, image
        semantic = MockTextEmbedProvider(cfg.seed, dim=ps.semantic_dim or ps.embed_dim,
                                         salt="semantic")
    else:
        chat_url = ps.chat_url or os.environ.get(ENV_CHAT_URL)
        vqa_url = ps.vqa_url or os.environ.get(ENV_VQA_URL)
        embed_url = ps.embed_url or os.environ.get(ENV_EMBED_URL)
        api_key = ps.api_key or os.environ.get(ENV_API_KEY)
        if not chat_url:
            raise ConfigError(f"wire providers need a chat URL (set {ENV_CHAT_URL})")
        if not vqa_url:
            raise ConfigError(f"wire providers need a VQA URL (set {ENV_VQA_URL})")
        if not embed_url:
            raise ConfigError(f"wire providers need an embed URL (set {ENV_EMBED_URL})")
        wire_kwargs = dict(api_key=api_key, timeout=cfg.request_timeout,
                           retry_max=cfg.retry_max, backoff=cfg.retry_backoff)
        chat = WireChatProvider(chat_url, ps.chat_model, **wire_kwargs)
        vqa = WireVqaProvider(vqa_url, ps.vqa_model, **wire_kwargs)
        text = WireTextEmbedProvider(embed_url, ps.text_embed_model, ps.embed_dim, **wire_kwargs)
        image = WireImageEmbedProvider(embed_url, ps.image_embed_model, ps.embed_dim, **wire_kwargs)
        if ps.filtration_distinct:
            if not (ps.filtration_text_model and ps.filtration_image_model):
                raise ConfigError(
                    "filtration_distinct on the wire needs filtration_text_model "
                    "and filtration_image_model"
                )
            f_dim = ps.filtration_embed_dim or ps.embed_dim
            f_text = WireTextEmbedProvider(embed_url, ps.filtration_text_model, f_dim, **wire_kwargs)
            f_image = WireImageEmbedProvider(embed_url, ps.filtration_image_model, f_dim, **wire_kwargs)
        else:
            f_text, f_image = text, image
        semantic = WireTextEmbedProvider(embed_url, ps.semantic_model,
                                         ps.semantic_dim or ps.embed_dim, **wire_kwargs)

    resolved_cache = cache_dir or os.environ.get(ENV_CACHE_DIR)
    cache = EmbeddingCache(resolved_cache) if resolved_cache else None
    if cache is not None:
        shared_text = ps.filtration_distinct is False
        wrapped_text = CachedTextEmbedder(text, cache)
        wrapped_image = CachedImageEmbedder(image, cache)
        return ProviderSet(
            chat=chat,
            vqa=vqa,
            text_embed=wrapped_text,
            image_embed=wrapped_image,
            filtration_text=wrapped_text if shared_text else CachedTextEmbedder(f_text, cache),
            filtration_image=wrapped_image if shared_text else CachedImageEmbedder(f_image, cache),
            semantic=CachedTextEmbedder(semantic, cache),
            cache=cache,
        )
    return ProviderSet(chat=chat, vqa=vqa, text_embed=text, image_embed=image,
                       filtration_text=f_text, filtration_image=f_image, semantic=semantic)


@contextmanager
def stage(name: str):
    """Tag any engine or I/O failure inside the block with the stage name."""
    try:
        yield
    except StageError:
        raise
    except (VfrError, OSError) as exc:
        raise StageError(name, exc) from exc


@dataclass
class DiscoveryResult:
    meta: MetaCategory
    candidate_names: list[str]
    contexts: list[ContextSet]
    scored: list[ScoredCandidate]
    retained_grounded: list[GroundedClass]
    attributes_dropped: int


def _ground_names(
    names: list[str],
    g: str,
    cfg: RunConfig,
    prov: ProviderSet,
    pack: PromptPack,
) -> tuple[list[ContextSet], list[GroundedClass], list[GroundedClass]]:
    """Ground every name in the inference and filtration embedding spaces.

    Contexts are generated once per name; only the embedding step repeats
    when the filtration backend is distinct.
    """
    if cfg.ccg_enabled:
        def one(name: str) -> ContextSet:
            return generate_contexts(
                name, g, cfg.m_contexts, prov.chat, pack,
                temperature=cfg.context_temperature,
                min_fraction=cfg.min_context_fraction,
            )

        if cfg.max_parallel_requests > 1 and len(names) > 1:
            with ThreadPoolExecutor(
                max_workers=min(cfg.max_parallel_requests, len(names))
            ) as pool:
                contexts = list(pool.map(one, names))
        else:
            contexts = [one(name) for name in names]
        renorm = cfg.renormalize_prototypes
        grounded_inf = [
            contextual_text_embedding(ctx, prov.text_embed, renormalize=renorm)
            for ctx in contexts
        ]
        if prov.filtration_text is prov.text_embed:
            grounded_filt = grounded_inf
        else:
            grounded_filt = [
                contextual_text_embedding(ctx, prov.filtration_text, renormalize=renorm)
                for ctx in contexts
            ]
        return contexts, grounded_inf, grounded_filt

    grounded_inf = [ground_with_plain_prompt(n, g, prov.text_embed, pack) for n in names]
    if prov.filtration_text is prov.text_embed:
        grounded_filt = grounded_inf
    else:
        grounded_filt = [
            ground_with_plain_prompt(n, g, prov.filtration_text, pack) for n in names
        ]
    return [], grounded_inf, grounded_filt


def discover_vocabulary(
    train_refs: list,
    cfg: RunConfig,
    prov: ProviderSet,
    pack: PromptPack,
) -> DiscoveryResult:
    """Full discovery for vocabulary-free mode: meta-category, attributes,
    candidate names, grounding, and relevance-ranked refinement."""
    if not train_refs:
        raise EmptyTrainSet("vocabulary discovery requires training images")
    meta = infer_meta_category(
        train_refs, prov.vqa, prov.chat, pack,
        temperature=cfg.discovery_temperature,
        max_parallel=cfg.max_parallel_requests,
    )
    log.info("meta-category: %s (support %d/%d)", meta.name, meta.support_count, len(train_refs))
    extraction = extract_attributes(
        train_refs, meta.name, prov.vqa, pack, max_parallel=cfg.max_parallel_requests
    )
    candidates = propose_candidate_names(
        meta, extraction.per_image, prov.chat, pack, temperature=cfg.discovery_temperature
    )
    log.info("proposed %d candidate names", len(candidates.names))
    contexts, grounded_inf, grounded_filt = _ground_names(
        candidates.names, meta.name, cfg, prov, pack
    )
    train_embeddings = [prov.filtration_image.embed_image(ref) for ref in train_refs]
    scored = filter_top_k(
        score_candidates(grounded_filt, train_embeddings),
        RefinementConfig(
            retention_ratio=cfg.retention_ratio,
            k_override=cfg.k_override,
            cnr_enabled=cfg.cnr_enabled,
        ),
    )
    retained_names = {c.class_name for c in scored if c.retained}
    retained_grounded = [g for g in grounded_inf if g.class_name in retained_names]
    return DiscoveryResult(
        meta=meta,
        candidate_names=list(candidates.names),
        contexts=contexts,
        scored=scored,
        retained_grounded=retained_grounded,
        attributes_dropped=extraction.dropped,
    )


def _read_names_file(path: str | Path) -> list[str]:
    try:
        lines = Path(path).read_text("utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read names file {path!s}: {exc}") from exc
    names: list[str] = []
    seen: set[str] = set()
    for line in lines:
        name = line.strip()
        key = " ".join(name.casefold().split())
        if name and key not in seen:
            seen.add(key)
            names.append(name)
    if not names:
        raise ConfigError(f"names file {path!s} contains no names")
    return names


def _utc_now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


@dataclass
class RunResult:
    out_dir: Path
    metrics: MetricsReport
    classifier: CoupledClassifier


def run_single(
    manifest: DatasetManifest,
    cfg: RunConfig,
    out_dir: str | Path,
    *,
    cache_dir: str | Path | None = None,
    names_file: str | Path | None = None,
    meta_category: str = "object",
    prompt_pack_path: str | Path | None = None,
) -> RunResult:
    """One full run. Artifacts land in out_dir; the embedding cache defaults
    to out_dir/cache so repeated runs stay warm."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started_at = _utc_now()

    with stage("config"):
        pack = load_prompt_pack(prompt_pack_path)
        prov = build_providers(cfg, cache_dir=cache_dir or out / "cache")
        config_hash = cfg.config_hash()
        provenance = {"seed": cfg.seed, "config_hash": config_hash}

    sampled_record: dict[str, list[str]] | None = None

    with stage("discovery"):
        train_entries = manifest.train_entries
        if cfg.images_per_class_limit is not None and train_entries:
            train_entries, sampled_record = sample_train_entries(
                train_entries, cfg.images_per_class_limit, cfg.seed
            )
        train_refs = [manifest.image_ref(e) for e in train_entries]

        if cfg.mode == "vocabulary_free":
            result = discover_vocabulary(train_refs, cfg, prov, pack)
            meta_name = result.meta.name
            vocabulary = {
                "schema_version": RUN_SCHEMA_VERSION,
                **provenance,
                "mode": cfg.mode,
                "meta": {"name": result.meta.name, "support_count": result.meta.support_count},
                "candidates": result.candidate_names,
                "retained": [c.class_name for c in result.scored if c.retained],
                "attributes_dropped": result.attributes_dropped,
            }
            contexts = result.contexts
            grounded_for_build = result.retained_grounded
            artifacts.write_json_atomic(
                out / artifacts.REFINEMENT_JSON,
                [
                    {"class": c.class_name, "score": float(c.score), "retained": c.retained}
                    for c in result.scored
                ],
            )
        elif cfg.mode == "zero_shot":
            if names_file is None:
                raise ConfigError("zero_shot mode requires a names file")
            names = _read_names_file(names_file)
            meta_name = meta_category.strip().lower() or "object"
            contexts, grounded_for_build, _ = _ground_names(names, meta_name, cfg, prov, pack)
            vocabulary = {
                "schema_version": RUN_SCHEMA_VERSION,
                **provenance,
                "mode": cfg.mode,
                "meta": {"name": meta_name, "support_count": 0},
                "candidates": names,
                "retained": names,
                "attributes_dropped": 0,
            }
        else:  # few_shot
            unlabeled = [e.image_path for e in train_entries if e.gt_label is None]
            if unlabeled:
                raise MissingGroundTruth(
                    f"few_shot mode requires labels on every train entry; "
                    f"missing on {len(unlabeled)} entries",
                    paths=unlabeled,
                )
            if not train_entries:
                raise EmptyTrainSet("few_shot mode requires labeled train entries")
            names = sorted({e.gt_label for e in train_entries})
            meta_name = meta_category.strip().lower() or "object"
            contexts, grounded_for_build, _ = _ground_names(names, meta_name, cfg, prov, pack)
            vocabulary = {
                "schema_version": RUN_SCHEMA_VERSION,
                **provenance,
                "mode": cfg.mode,
                "meta": {"name": meta_name, "support_count": 0},
                "candidates": names,
                "retained": names,
                "attributes_dropped": 0,
            }

        artifacts.write_json_atomic(out / artifacts.VOCABULARY_JSON, vocabulary)
        artifacts.write_jsonl_atomic(
            out / artifacts.CONTEXTS_JSONL,
            [
                {"class": c.class_name, "sentences": list(c.sentences), "m_requested": c.m_requested}
                for c in contexts
            ],
        )

    with stage("classifier"):
        settings = ClassifierSettings(
            alpha=cfg.alpha,
            k_aug=cfg.k_aug,
            run_seed=cfg.seed,
            min_crop_area=cfg.min_crop_area,
            renormalize_prototypes=cfg.renormalize_prototypes,
        )
        if cfg.mode == "vocabulary_free":
            clf = build_vocabulary_free(train_refs, grounded_for_build, prov.image_embed, settings)
        elif cfg.mode == "zero_shot":
            clf = build_zero_shot(grounded_for_build, prov.image_embed.fingerprint, settings)
        else:
            support = [(manifest.image_ref(e), e.gt_label) for e in train_entries]
            clf = build_few_shot(support, grounded_for_build, prov.image_embed, settings)
        artifacts.write_json_atomic(
            out / artifacts.CLASSIFIER_JSON, {**clf.to_dict(), **provenance}
        )

    with stage("classify"):
        test_entries = manifest.test_entries
        if not test_entries:
            raise EmptyInput("manifest has no test entries to classify")
        records: list[dict] = []
        predictions = []
        for entry in test_entries:
            ref = manifest.image_ref(entry)
            try:
                pred = classify(ref, clf, prov.image_embed)
            except ProviderError as exc:
                log.warning("classification failed for %s: %s", entry.image_path, exc)
                records.append(
                    {"image": entry.image_path, "error": f"{type(exc).__name__}: {exc}"}
                )
                continue
            predictions.append(pred)
            records.append(
                {
                    "image": pred.image,
                    "predicted_name": pred.predicted_name,
                    "similarity": pred.similarity,
                    "runner_up_margin": pred.runner_up_margin,
                }
            )
        artifacts.write_jsonl_atomic(out / artifacts.PREDICTIONS_JSONL, records)

    with stage("evaluate"):
        gt_by_path = {e.image_path: e.gt_label for e in test_entries}
        missing = [p.image for p in predictions if gt_by_path.get(p.image) is None]
        if missing:
            raise MissingGroundTruth(
                f"{len(missing)} predicted images lack ground-truth labels", paths=missing
            )
        if not predictions:
            raise EmptyInput("no successful predictions to evaluate")
        gts = [gt_by_path[p.image] for p in predictions]
        if cfg.mode == "vocabulary_free":
            report = compute_metrics(
                predictions, gts, prov.semantic,
                candidate_names=vocabulary["candidates"],
                retained_names=vocabulary["retained"],
            )
        else:
            report = compute_metrics(predictions, gts, prov.semantic)
        artifacts.write_json_atomic(
            out / artifacts.METRICS_JSON,
            {"schema_version": RUN_SCHEMA_VERSION, **provenance, **report.to_dict()},
        )

    with stage("finalize"):
        run_manifest = {
            "schema_version": RUN_SCHEMA_VERSION,
            **provenance,
            "mode": cfg.mode,
            "config": cfg.to_dict(),
            "provider_fingerprints": prov.fingerprints(),
            "provider_calls": prov.call_counts(),
            "sampled_train": sampled_record,
            "started_at": started_at,
            "finished_at": _utc_now(),
            "artifacts": sorted(
                p.name for p in out.iterdir() if p.is_file() and p.suffix in (".json", ".jsonl")
            ),
        }
        artifacts.write_json_atomic(out / artifacts.RUN_MANIFEST_JSON, run_manifest)

    return RunResult(out_dir=out, metrics=report, classifier=clf)


def run_all(
    manifest_path: str | Path,
    cfg: RunConfig,
    out_dir: str | Path,
    *,
    cache_dir: str | Path | None = None,
    names_file: str | Path | None = None,
    meta_category: str = "object",
    prompt_pack_path: str | Path | None = None,
) -> RunResult | list[RunResult]:
    """Run the configured pipeline; repeat_runs > 1 fans out into per-run
    directories (seed + run index) and writes an aggregate summary."""
    with stage("config"):
        manifest = load_manifest(manifest_path, cfg.images_per_class_limit)
    if cfg.repeat_runs == 1:
        return run_single(
            manifest, cfg, out_dir,
            cache_dir=cache_dir, names_file=names_file,
            meta_category=meta_category, prompt_pack_path=prompt_pack_path,
        )
    out = Path(out_dir)
    results: list[RunResult] = []
    summaries: list[dict] = []
    for i in range(cfg.repeat_runs):
        run_cfg = cfg.with_overrides(repeat_runs=1, seed=(cfg.seed + i) % 2**64)
        run_out = out / f"run_{i:03d}"
        result = run_single(
            manifest, run_cfg, run_out,
            cache_dir=cache_dir, names_file=names_file,
            meta_category=meta_category, prompt_pack_path=prompt_pack_path,
        )
        results.append(result)
        summaries.append(
            {
                "run": i,
                "seed": run_cfg.seed,
                "cacc": result.metrics.cacc,
                "sacc": result.metrics.sacc,
            }
        )
    with stage("finalize"):
        caccs = np.array([s["cacc"] for s in summaries], dtype=np.float64)
        saccs = np.array([s["sacc"] for s in summaries], dtype=np.float64)
        artifacts.write_json_atomic(
            out / artifacts.AGGREGATE_JSON,
            {
                "schema_version": RUN_SCHEMA_VERSION,
                "base_seed": cfg.seed,
                "config_hash": cfg.config_hash(),
                "runs": summaries,
                "mean": {"cacc": float(caccs.mean()), "sacc": float(saccs.mean())},
                "stddev": {"cacc": float(caccs.std()), "sacc": float(saccs.std())},
            },
        )
    return results


def classify_with_artifact(
    manifest: DatasetManifest,
    clf: CoupledClassifier,
    cfg: RunConfig,
    out_dir: str | Path,
    *,
    cache_dir: str | Path | None = None,
) -> Path:
    """Standalone classification against a persisted classifier artifact.

    The artifact must have been built under the currently configured
    inference embedder fingerprint; anything else is refused.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with stage("config"):
        prov = build_providers(cfg, cache_dir=cache_dir or out / "cache")
    with stage("classify"):
        current = prov.image_embed.fingerprint.to_dict()
        if current != clf.embedder.to_dict():
            raise FingerprintMismatch(
                f"classifier artifact was built under {clf.embedder.to_dict()}, "
                f"current image embedder is {current}"
            )
        test_entries = manifest.test_entries
        if not test_entries:
            raise EmptyInput("manifest has no test entries to classify")
        records: list[dict] = []
        for entry in test_entries:
            ref = manifest.image_ref(entry)
            try:
                pred = classify(ref, clf, prov.image_embed)
            except ProviderError as exc:
                records.append(
                    {"image": entry.image_path, "error": f"{type(exc).__name__}: {exc}"}
                )
                continue
            records.append(
                {
                    "image": pred.image,
                    "predicted_name": pred.predicted_name,
                    "similarity": pred.similarity,
                    "runner_up_margin": pred.runner_up_margin,
                }
            )
        path = out / artifacts.PREDICTIONS_JSONL
        artifacts.write_jsonl_atomic(path, records)
    return path


def evaluate_predictions(
    manifest: DatasetManifest,
    prediction_records: list[dict],
    cfg: RunConfig,
    out_dir: str | Path,
    *,
    vocabulary: dict | None = None,
    cache_dir: str | Path | None = None,
) -> MetricsReport:
    """Standalone evaluation of persisted predictions.

    Needs provider access only for the semantic embedder. Error records are
    skipped; every scored prediction must have a ground-truth label.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with stage("config"):
        prov = build_providers(cfg, cache_dir=cache_dir or out / "cache")
    with stage("evaluate"):
        gt_by_path = {e.image_path: e.gt_label for e in manifest.test_entries}
        scored = [r for r in prediction_records if "error" not in r]
        if not scored:
            raise EmptyInput("no successful predictions to evaluate")
        missing = [r["image"] for r in scored if gt_by_path.get(r["image"]) is None]
        if missing:
            raise MissingGroundTruth(
                f"{len(missing)} predicted images lack ground-truth labels", paths=missing
            )
        names = [r["predicted_name"] for r in scored]
        gts = [gt_by_path[r["image"]] for r in scored]
        kwargs = {}
        if vocabulary is not None and vocabulary.get("mode") == "vocabulary_free":
            kwargs = {
                "candidate_names": vocabulary["candidates"],
                "retained_names": vocabulary["retained"],
            }
        report = compute_metrics(names, gts, prov.semantic, **kwargs)
        artifacts.write_json_atomic(
            out / artifacts.METRICS_JSON,
            {
                "schema_version": RUN_SCHEMA_VERSION,
                "seed": cfg.seed,
                "config_hash": cfg.config_hash(),
                **report.to_dict(),
            },
        )
    return report


def discover_only(
    manifest_path: str | Path,
    cfg: RunConfig,
    out_dir: str | Path,
    *,
    cache_dir: str | Path | None = None,
    prompt_pack_path: str | Path | None = None,
) -> DiscoveryResult:
    """Discovery artifacts without classifier building or inference."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with stage("config"):
        manifest = load_manifest(manifest_path, cfg.images_per_class_limit)
        pack = load_prompt_pack(prompt_pack_path)
        prov = build_providers(cfg, cache_dir=cache_dir or out / "cache")
    with stage("discovery"):
        train_entries = manifest.train_entries
        sampled_record = None
        if cfg.images_per_class_limit is not None and train_entries:
            train_entries, sampled_record = sample_train_entries(
                train_entries, cfg.images_per_class_limit, cfg.seed
            )
        train_refs = [manifest.image_ref(e) for e in train_entries]
        result = discover_vocabulary(train_refs, cfg, prov, pack)
        provenance = {"seed": cfg.seed, "config_hash": cfg.config_hash()}
        artifacts.write_json_atomic(
            out / artifacts.VOCABULARY_JSON,
            {
                "schema_version": RUN_SCHEMA_VERSION,
                **provenance,
                "mode": "vocabulary_free",
                "meta": {"name": result.meta.name, "support_count": result.meta.support_count},
                "candidates": result.candidate_names,
                "retained": [c.class_name for c in result.scored if c.retained],
                "attributes_dropped": result.attributes_dropped,
            },
        )
        artifacts.write_jsonl_atomic(
            out / artifacts.CONTEXTS_JSONL,
            [
                {"class": c.class_name, "sentences": list(c.sentences), "m_requested": c.m_requested}
                for c in result.contexts
            ],
        )
        artifacts.write_json_atomic(
            out / artifacts.REFINEMENT_JSON,
            [
                {"class": c.class_name, "score": float(c.score), "retained": c.retained}
                for c in result.scored
            ],
        )
        if sampled_record is not None:
            log.info("sampled train entries per label: %s",
                     {k: len(v) for k, v in sampled_record.items()})
    return result
