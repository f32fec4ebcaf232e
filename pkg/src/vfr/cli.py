"""Command-line interface.

Subcommands: discover, classify, evaluate, run-all. Exit code 0 on
success; failures print a stage-tagged error to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import artifacts
from .config import RunConfig, load_config
from .errors import StageError, VfrError
from .manifest import load_manifest
from .pipeline import (
    classify_with_artifact,
    discover_only,
    evaluate_predictions,
    run_all,
)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", required=True, help="dataset manifest JSONL")
    parser.add_argument("--config", default=None, help="run config JSON file")
    parser.add_argument("--out-dir", required=True, help="directory for artifacts")
    parser.add_argument("--cache-dir", default=None,
                        help="embedding cache directory (default: <out-dir>/cache)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--log-level", default="WARNING")


def _add_knob_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=("vocabulary_free", "zero_shot", "few_shot"),
                        default=None)
    parser.add_argument("--alpha", type=float, default=None,
                        help="text/visual coupling weight in [0, 1]")
    parser.add_argument("--k-aug", type=int, default=None,
                        help="augmented views per training image")
    parser.add_argument("--m-contexts", type=int, default=None,
                        help="context sentences requested per class")
    parser.add_argument("--retention-ratio", type=float, default=None,
                        help="fraction of candidates kept by refinement")
    parser.add_argument("--no-ccg", action="store_true",
                        help="disable contextual grounding (plain photo prompts)")
    parser.add_argument("--no-cnr", action="store_true",
                        help="disable candidate refinement (keep all names)")
    parser.add_argument("--images-per-class-limit", type=int, default=None)
    parser.add_argument("--prompt-pack", default=None, help="alternative prompt pack JSON")


def _config_from_args(args: argparse.Namespace, **extra) -> RunConfig:
    overrides = dict(
        seed=args.seed,
        mode=getattr(args, "mode", None),
        alpha=getattr(args, "alpha", None),
        k_aug=getattr(args, "k_aug", None),
        m_contexts=getattr(args, "m_contexts", None),
        retention_ratio=getattr(args, "retention_ratio", None),
        images_per_class_limit=getattr(args, "images_per_class_limit", None),
    )
    if getattr(args, "no_ccg", False):
        overrides["ccg_enabled"] = False
    if getattr(args, "no_cnr", False):
        overrides["cnr_enabled"] = False
    overrides.update(extra)
    return load_config(args.config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vfr",
        description="Vocabulary-free fine-grained recognition engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_discover = sub.add_parser("discover", help="discover a class vocabulary from train images")
    _add_common_flags(p_discover)
    _add_knob_flags(p_discover)

    p_classify = sub.add_parser("classify", help="classify test images with a saved classifier")
    _add_common_flags(p_classify)
    p_classify.add_argument("--classifier", required=True, help="classifier.json artifact")

    p_evaluate = sub.add_parser("evaluate", help="compute metrics for saved predictions")
    _add_common_flags(p_evaluate)
    p_evaluate.add_argument("--predictions", required=True, help="predictions.jsonl artifact")
    p_evaluate.add_argument("--vocabulary", default=None,
                            help="vocabulary.json artifact (enables filtration sensitivity)")

    p_run = sub.add_parser("run-all", help="discover, build, classify, and evaluate")
    _add_common_flags(p_run)
    _add_knob_flags(p_run)
    p_run.add_argument("--repeat-runs", type=int, default=None,
                       help="number of re-seeded runs (aggregate.json summarizes)")
    p_run.add_argument("--names-file", default=None,
                       help="known class names, one per line (zero_shot mode)")
    p_run.add_argument("--meta-category", default="object",
                       help="meta-category for zero_shot/few_shot grounding prompts")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        if args.command == "discover":
            cfg = _config_from_args(args, mode="vocabulary_free")
            result = discover_only(
                args.manifest, cfg, args.out_dir,
                cache_dir=args.cache_dir, prompt_pack_path=args.prompt_pack,
            )
            retained = sum(1 for c in result.scored if c.retained)
            print(f"meta-category: {result.meta.name}")
            print(f"candidates: {len(result.candidate_names)}, retained: {retained}")
            print(f"artifacts written to {args.out_dir}")
        elif args.command == "classify":
            cfg = _config_from_args(args)
            try:
                clf = artifacts.load_classifier_artifact(args.classifier)
                manifest = load_manifest(args.manifest)
            except VfrError as exc:
                raise StageError("classify", exc) from exc
            path = classify_with_artifact(
                manifest, clf, cfg, args.out_dir, cache_dir=args.cache_dir
            )
            print(f"predictions written to {path}")
        elif args.command == "evaluate":
            cfg = _config_from_args(args)
            try:
                manifest = load_manifest(args.manifest)
                records = artifacts.read_jsonl(args.predictions)
                vocabulary = (
                    artifacts.read_json(args.vocabulary) if args.vocabulary else None
                )
            except VfrError as exc:
                raise StageError("evaluate", exc) from exc
            report = evaluate_predictions(
                manifest, records, cfg, args.out_dir,
                vocabulary=vocabulary, cache_dir=args.cache_dir,
            )
            print(f"cacc: {report.cacc:.4f}")
            print(f"sacc: {report.sacc:.4f}")
            print(f"metrics written to {Path(args.out_dir) / artifacts.METRICS_JSON}")
        else:  # run-all
            cfg = _config_from_args(args, repeat_runs=args.repeat_runs)
            result = run_all(
                args.manifest, cfg, args.out_dir,
                cache_dir=args.cache_dir,
                names_file=args.names_file,
                meta_category=args.meta_category,
                prompt_pack_path=args.prompt_pack,
            )
            if isinstance(result, list):
                print(f"{len(result)} runs written under {args.out_dir}")
                print(f"aggregate written to {Path(args.out_dir) / artifacts.AGGREGATE_JSON}")
            else:
                print(f"cacc: {result.metrics.cacc:.4f}")
                print(f"sacc: {result.metrics.sacc:.4f}")
                print(f"artifacts written to {result.out_dir}")
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except VfrError as exc:
        print(f"error: [cli] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
