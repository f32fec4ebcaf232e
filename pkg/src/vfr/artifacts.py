"""Artifact persistence: canonical JSON/JSONL writers and loaders.

Writes are atomic (temp file + rename in the target directory), JSON keys
are sorted, and floats serialize at full double precision, so a run's
artifacts are byte-stable for fixed inputs.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .classifier import CoupledClassifier
from .errors import ClassifierArtifactCorrupt, ManifestError

VOCABULARY_JSON = "vocabulary.json"
CONTEXTS_JSONL = "contexts.jsonl"
REFINEMENT_JSON = "refinement.json"
CLASSIFIER_JSON = "classifier.json"
PREDICTIONS_JSONL = "predictions.jsonl"
METRICS_JSON = "metrics.json"
RUN_MANIFEST_JSON = "run_manifest.json"
AGGREGATE_JSON = "aggregate.json"


def _write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_json_atomic(path: str | Path, obj: object) -> None:
    _write_atomic(Path(path), json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_jsonl_atomic(path: str | Path, records: list[dict]) -> None:
    lines = [json.dumps(r, sort_keys=True) for r in records]
    _write_atomic(Path(path), "\n".join(lines) + ("\n" if lines else ""))


def read_jsonl(path: str | Path) -> list[dict]:
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read {path!s}: {exc}") from exc
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except ValueError as exc:
            raise ManifestError(f"{path!s}:{lineno}: invalid JSON: {exc}") from exc
    return records


def read_json(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read {path!s}: {exc}") from exc
    except ValueError as exc:
        raise ManifestError(f"{path!s} is not valid JSON: {exc}") from exc
    return data


def load_classifier_artifact(path: str | Path) -> CoupledClassifier:
    data = read_json(path)
    if not isinstance(data, dict):
        raise ClassifierArtifactCorrupt(f"{path!s}: classifier artifact must be a JSON object")
    return CoupledClassifier.from_dict(data)
