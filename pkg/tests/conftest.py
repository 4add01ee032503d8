from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"
CORPUS_DIR = DATA_DIR / "corpus"
NEGATIVES_DIR = DATA_DIR / "negatives"
GOLDEN_HASHES = DATA_DIR / "golden_hashes.json"


def rand_hashes(n: int, seed: int) -> list[int]:
    rng = random.Random(seed)
    return [rng.getrandbits(64) for _ in range(n)]


def flip_bits(bits: int, positions) -> int:
    for p in positions:
        bits ^= 1 << p
    return bits


@pytest.fixture(scope="session")
def corpus_paths() -> list[Path]:
    paths = sorted(CORPUS_DIR.glob("*.png"))
    assert len(paths) >= 100, "committed corpus missing; run scripts/gen_corpus.py"
    return paths


@pytest.fixture(scope="session")
def negative_paths() -> list[Path]:
    paths = sorted(NEGATIVES_DIR.glob("*.png"))
    assert len(paths) >= 100, "committed negatives missing; run scripts/gen_corpus.py"
    return paths


@pytest.fixture(scope="session")
def golden_hashes() -> dict[str, str]:
    assert GOLDEN_HASHES.exists(), "golden hashes missing; run scripts/gen_corpus.py --freeze"
    return json.loads(GOLDEN_HASHES.read_text())
