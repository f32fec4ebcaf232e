"""Dataset manifests: JSONL listings of images with splits and optional labels.

Relative image paths resolve against the manifest file's directory, but the
original path string is what every artifact echoes back, so artifacts stay
byte-identical regardless of where a run happens.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ManifestError
from .images import ImageRef

VALID_SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    split: str
    gt_label: str | None = None

    def __post_init__(self) -> None:
        if not self.image_path:
            raise ManifestError("manifest entry has an empty image_path")
        if self.split not in VALID_SPLITS:
            raise ManifestError(f"invalid split {self.split!r} for {self.image_path!r}")
        if self.gt_label is not None and not self.gt_label.strip():
            raise ManifestError(f"blank gt_label for {self.image_path!r}")


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    base_dir: Path
    images_per_class_limit: int | None = None

    @property
    def train_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == "train"]

    @property
    def test_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == "test"]

    def image_ref(self, entry: ManifestEntry) -> ImageRef:
        return ImageRef(path=entry.image_path, resolved=self.base_dir / entry.image_path)


def load_manifest(
    path: str | Path,
    images_per_class_limit: int | None = None,
) -> DatasetManifest:
    """Load and validate a JSONL manifest.

    Rejects duplicate image paths, paths appearing in both splits, and
    malformed records. Blank lines are skipped.
    """
    manifest_path = Path(path)
    try:
        text = manifest_path.read_text("utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path!s}: {exc}") from exc
    entries: list[ManifestEntry] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError as exc:
            raise ManifestError(f"{path!s}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise ManifestError(f"{path!s}:{lineno}: manifest records must be objects")
        unknown = set(record) - {"image_path", "split", "gt_label"}
        if unknown:
            raise ManifestError(f"{path!s}:{lineno}: unknown keys {sorted(unknown)}")
        try:
            entries.append(
                ManifestEntry(
                    image_path=record.get("image_path", ""),
                    split=record.get("split", ""),
                    gt_label=record.get("gt_label"),
                )
            )
        except ManifestError as exc:
            raise ManifestError(f"{path!s}:{lineno}: {exc}") from exc
    if not entries:
        raise ManifestError(f"manifest {path!s} contains no entries")
    seen: dict[str, str] = {}
    for entry in entries:
        if entry.image_path in seen:
            raise ManifestError(
                f"duplicate image_path {entry.image_path!r} "
                f"(splits {seen[entry.image_path]!r} and {entry.split!r})"
            )
        seen[entry.image_path] = entry.split
    if images_per_class_limit is not None and images_per_class_limit < 1:
        raise ManifestError("images_per_class_limit must be >= 1")
    return DatasetManifest(
        entries=entries,
        base_dir=manifest_path.parent,
        images_per_class_limit=images_per_class_limit,
    )


def sample_train_entries(
    entries: list[ManifestEntry],
    limit: int,
    seed: int,
) -> tuple[list[ManifestEntry], dict[str, list[str]]]:
    """Seeded per-label subsampling of labeled train entries.

    Unlabeled entries pass through untouched. Survivors keep manifest order.
    Returns the sampled entries plus a record of the chosen paths per label
    for the run manifest.
    """
    if limit < 1:
        raise ManifestError("images_per_class_limit must be >= 1")
    by_label: dict[str, list[ManifestEntry]] = {}
    for entry in entries:
        if entry.gt_label is not None:
            by_label.setdefault(entry.gt_label, []).append(entry)
    keep: set[str] = {e.image_path for e in entries if e.gt_label is None}
    record: dict[str, list[str]] = {}
    for label in sorted(by_label):
        group = sorted(by_label[label], key=lambda e: e.image_path)
        if len(group) > limit:
            digest = hashlib.sha256(
                b"vfr-sample" + struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF) + label.encode("utf-8")
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            chosen = [group[int(i)] for i in rng.permutation(len(group))[:limit]]
        else:
            chosen = group
        chosen_paths = {e.image_path for e in chosen}
        keep |= chosen_paths
        record[label] = sorted(chosen_paths)
    sampled = [e for e in entries if e.image_path in keep]
    return sampled, record
