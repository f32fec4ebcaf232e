"""Shared pytest fixtures: bundled dataset paths and small factories."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from vfr.config import RunConfig
from vfr.images import ImageRef
from vfr.prompts import PromptPack, load_prompt_pack

FIXTURES_DIR = Path(__file__).parent / "fixtures"
GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture(scope="session")
def manifest_path() -> Path:
    return FIXTURES_DIR / "manifest.jsonl"


@pytest.fixture(scope="session")
def fixture_config_path() -> Path:
    return FIXTURES_DIR / "fixture_config.json"


@pytest.fixture(scope="session")
def fixture_config(fixture_config_path: Path) -> RunConfig:
    return RunConfig.from_dict(json.loads(fixture_config_path.read_text()))


@pytest.fixture(scope="session")
def pack() -> PromptPack:
    return load_prompt_pack()


@pytest.fixture
def image_factory(tmp_path):
    """Create byte-backed image files.

    The mock providers only ever hash the bytes, so any distinct payload
    acts as a distinct image.
    """
    counter = {"n": 0}

    def make(payload: bytes, name: str | None = None) -> ImageRef:
        counter["n"] += 1
        filename = name if name is not None else f"img_{counter['n']:03d}.png"
        path = tmp_path / filename
        path.write_bytes(payload)
        return ImageRef(path=str(path), resolved=path)

    return make
