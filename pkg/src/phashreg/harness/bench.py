"""Latency scaling bench: flat scan vs one big metric tree vs the registry.

The protocol builds each index over the first N hashes of one synthetic
corpus, draws a fixed set of query hashes from the full corpus, retrieves
the minimum-distance match per query, and reports average and 95th
percentile per-query wall time.  A full warm-up pass runs before timing;
the p95 is the order statistic of the individual samples (for 50 queries,
the 48th of the sorted list).  Everything is single-threaded so the three
structures are comparable.

The flat scan is the ground truth for retrieved minima; the bucketed
structure can miss a global minimum whose bucket key lies outside the flip
tolerance, and those queries are counted in ``min_mismatches`` rather than
hidden.
"""

from __future__ import annotations

import csv
import gc
import random
import time
from dataclasses import dataclass
from enum import Enum
from math import ceil
from pathlib import Path
from statistics import mean
from typing import Callable, Sequence

import numpy as np

from ..bktree import BkTree
from ..hashing import PerceptualHash
from ..registry import Registry, RegistryConfig

DEFAULT_SIZES = (100_000, 500_000, 1_000_000)
DEFAULT_QUERY_COUNT = 50


class IndexStructure(str, Enum):
    FLAT_ARRAY = "flat_array"
    BK_TREE_ONLY = "bk_tree_only"
    TRIE_BK_TREE = "trie_bk_tree"


@dataclass(frozen=True)
class LatencyReport:
    structure: IndexStructure
    size: int
    query_count: int
    avg_ms: float
    p95_ms: float
    build_seconds: float
    min_mismatches: int | None
    seed: int


def synth_corpus(count: int, seed: int) -> list[PerceptualHash]:
    """Uniform random 64-bit hashes, reproducible by seed."""
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 1 << 64, size=count, dtype=np.uint64)
    return [PerceptualHash(int(v)) for v in values]


def percentile_sample(samples: Sequence[float], fraction: float) -> float:
    """Order statistic at ceil(fraction * n), 1-indexed."""
    ordered = sorted(samples)
    return ordered[ceil(fraction * len(ordered)) - 1]


def _flat_min(index: list[int], query: int) -> int:
    best = 64
    for h in index:
        d = (h ^ query).bit_count()
        if d < best:
            best = d
            if best == 0:
                break
    return best


def _timed_queries(
    queries: Sequence[int], lookup: Callable[[int], int]
) -> tuple[list[float], list[int]]:
    for q in queries:  # warm-up pass, excluded from timing
        lookup(q)
    times_ms: list[float] = []
    answers: list[int] = []
    for q in queries:
        start = time.perf_counter_ns()
        answers.append(lookup(q))
        times_ms.append((time.perf_counter_ns() - start) / 1e6)
    return times_ms, answers


def run_latency_bench(
    sizes: Sequence[int] = DEFAULT_SIZES,
    query_count: int = DEFAULT_QUERY_COUNT,
    structures: Sequence[IndexStructure] = tuple(IndexStructure),
    seed: int = 20260101,
    flip_tolerance: int = 2,
    ledger_dir: str | Path | None = None,
) -> list[LatencyReport]:
    """Build/query each structure at each size; returns one report per pair.

    ``ledger_dir`` routes the registry ledger to disk instead of memory,
    which matters at million-entry scale.
    """
    corpus = [h.bits for h in synth_corpus(max(sizes), seed)]
    queries = random.Random(seed ^ 0x51EED).sample(corpus, query_count)
    reports: list[LatencyReport] = []

    for size in sizes:
        subset = corpus[:size]
        truth: list[int] | None = None

        for structure in structures:
            gc.collect()
            build_start = time.perf_counter()
            if structure is IndexStructure.FLAT_ARRAY:
                index = list(subset)
                lookup = lambda q, idx=index: _flat_min(idx, q)
            elif structure is IndexStructure.BK_TREE_ONLY:
                tree = BkTree()
                for i, h in enumerate(subset):
                    tree.insert(h, i)
                lookup = lambda q, t=tree: t.search_best(q, 64)[2]
            else:
                registry = Registry(
                    RegistryConfig(flip_tolerance=flip_tolerance, tau=64),
                    ledger_path=(Path(ledger_dir) / f"bench-{size}.log") if ledger_dir else None,
                )
                for h in subset:
                    registry.register(h, platform_id="bench", created_at="1970-01-01T00:00:00+00:00")

                def lookup(q, reg=registry):
                    d = reg.verify(PerceptualHash(q)).min_distance
                    return 64 if d is None else d

            build_seconds = time.perf_counter() - build_start
            times_ms, answers = _timed_queries(queries, lookup)

            if structure is IndexStructure.FLAT_ARRAY:
                truth = answers
            mismatches = (
                sum(1 for a, b in zip(answers, truth) if a != b) if truth is not None else None
            )
            reports.append(
                LatencyReport(
                    structure=structure,
                    size=size,
                    query_count=query_count,
                    avg_ms=mean(times_ms),
                    p95_ms=percentile_sample(times_ms, 0.95),
                    build_seconds=build_seconds,
                    min_mismatches=mismatches,
                    seed=seed,
                )
            )
            del lookup
    return reports


_BENCH_COLUMNS = [
    "structure", "size", "query_count", "avg_ms", "p95_ms",
    "build_seconds", "min_mismatches", "seed",
]


def write_bench_csv(reports: Sequence[LatencyReport], path: str | Path, meta: dict | None = None) -> None:
    """CSV with '#'-prefixed header lines echoing seeds and configuration."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in (meta or {}).items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f)
        writer.writerow(_BENCH_COLUMNS)
        for r in reports:
            writer.writerow(
                [
                    r.structure.value, r.size, r.query_count, f"{r.avg_ms:.4f}",
                    f"{r.p95_ms:.4f}", f"{r.build_seconds:.2f}",
                    "" if r.min_mismatches is None else r.min_mismatches, r.seed,
                ]
            )


def format_bench_table(reports: Sequence[LatencyReport]) -> str:
    lines = [
        f"{'size':>9} {'structure':<14} {'queries':>7} {'avg ms':>10} {'p95 ms':>10} "
        f"{'build s':>8} {'misses':>6}"
    ]
    for r in reports:
        misses = "-" if r.min_mismatches is None else str(r.min_mismatches)
        lines.append(
            f"{r.size:>9} {r.structure.value:<14} {r.query_count:>7} {r.avg_ms:>10.4f} "
            f"{r.p95_ms:>10.4f} {r.build_seconds:>8.2f} {misses:>6}"
        )
    return "\n".join(lines)
