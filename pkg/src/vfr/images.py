"""Image references: lazy byte access plus content hashing.

The engine never decodes pixels; crops and flips are applied provider-side,
so an image is just addressable bytes with a stable content hash.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ImageUnreadable


@dataclass
class ImageRef:
    """A reference to one image on disk.

    The path is kept exactly as given (artifacts echo it back verbatim);
    resolution against a manifest directory happens at load time via
    `resolved`. Bytes and the sha256 content hash are cached after the
    first read.
    """

    path: str
    resolved: Path | None = None
    _bytes: bytes | None = field(default=None, repr=False, compare=False)
    _content_hash: str | None = field(default=None, repr=False, compare=False)

    def read_bytes(self) -> bytes:
        if self._bytes is None:
            target = self.resolved if self.resolved is not None else Path(self.path)
            try:
                self._bytes = target.read_bytes()
            except OSError as exc:
                raise ImageUnreadable(f"cannot read image {self.path!r}: {exc}") from exc
            if not self._bytes:
                raise ImageUnreadable(f"image {self.path!r} is empty")
        return self._bytes

    def content_hash(self) -> str:
        """sha256 hex digest of the image bytes."""
        if self._content_hash is None:
            self._content_hash = hashlib.sha256(self.read_bytes()).hexdigest()
        return self._content_hash
