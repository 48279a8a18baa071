"""Shared fixtures: a tiny random encoder built once per session."""

from __future__ import annotations

import os
import random
import sys
from pathlib import Path

import pytest

# No test may touch the network: model loads must resolve locally or fail.
os.environ.setdefault("HF_HUB_OFFLINE", "1")

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))
from make_tiny_model import build_tiny_model  # noqa: E402


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    return str(build_tiny_model(tmp_path_factory.mktemp("tiny-model"), seed=0))


@pytest.fixture(scope="session")
def encoder(tiny_model_dir):
    from embed_export.exporter import load_encoder

    return load_encoder(tiny_model_dir)


@pytest.fixture(scope="session")
def sample_texts() -> list[str]:
    """Fifty texts of widely varying length, deterministic."""
    words = [
        "the", "a", "query", "document", "rank", "model", "quick", "brown",
        "fox", "jumps", "over", "lazy", "dog", "embedding", "vector",
        "space", "cosine", "score",
    ]
    rng = random.Random(7)
    return [
        " ".join(rng.choice(words) for _ in range(rng.randint(1, 40)))
        for _ in range(50)
    ]
