"""Accuracy sweep: confusion matrices over thresholds and prefix settings.

The registry is populated with the original hashes only.  Originals and
their edited variants form the positive query class (ground truth is
registry membership, not visual origin); the negative class is everything
never registered.  The minimum distance per query is independent of the
threshold, so each (scheme, tolerance) pair is searched once and every tau
is derived from the same distances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from PIL import Image

from ..hashing import PerceptualHash, compute_phash
from ..prefix import PrefixScheme
from ..registry import Registry, RegistryConfig


@dataclass(frozen=True)
class SweepResult:
    scheme: PrefixScheme
    flip_tolerance: int
    tau: int
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else 0.0


def as_hashes(items: Iterable) -> list[PerceptualHash]:
    """Accept images, PerceptualHash values, ints, or hex strings."""
    out: list[PerceptualHash] = []
    for item in items:
        if isinstance(item, PerceptualHash):
            out.append(item)
        elif isinstance(item, int):
            out.append(PerceptualHash(item))
        elif isinstance(item, str):
            out.append(PerceptualHash.from_hex(item))
        elif isinstance(item, Image.Image):
            out.append(compute_phash(item))
        else:
            raise TypeError(f"cannot interpret {type(item).__name__} as a hash")
    return out


def _min_distances(
    registered: list[PerceptualHash],
    queries: list[PerceptualHash],
    scheme: PrefixScheme,
    flip_tolerance: int,
) -> list[int | None]:
    registry = Registry(RegistryConfig(scheme=scheme, flip_tolerance=flip_tolerance, tau=64))
    for h in registered:
        registry.register(h, platform_id="sweep", created_at="1970-01-01T00:00:00+00:00")
    return [registry.verify(q).min_distance for q in queries]


def run_sweep(
    registered: Iterable,
    edited: Iterable,
    negatives: Iterable,
    schemes: Sequence[PrefixScheme] = (PrefixScheme.DISCONTINUOUS, PrefixScheme.CONTINUOUS),
    tolerances: Sequence[int] = (2, 4),
    taus: Sequence[int] = (2, 6, 10, 15, 20),
) -> list[SweepResult]:
    """One SweepResult per (scheme, tolerance, tau) combination."""
    registered = as_hashes(registered)
    edited = as_hashes(edited)
    negatives = as_hashes(negatives)
    if not registered:
        raise ValueError("registered set is empty")
    if not edited and not negatives:
        raise ValueError("no query sets supplied")

    positives = registered + edited
    results: list[SweepResult] = []
    for scheme in schemes:
        for tolerance in tolerances:
            pos_d = _min_distances(registered, positives, scheme, tolerance)
            neg_d = _min_distances(registered, negatives, scheme, tolerance)
            for tau in taus:
                tp = sum(1 for d in pos_d if d is not None and d <= tau)
                fp = sum(1 for d in neg_d if d is not None and d <= tau)
                results.append(
                    SweepResult(
                        scheme=scheme,
                        flip_tolerance=tolerance,
                        tau=tau,
                        tp=tp,
                        fn=len(pos_d) - tp,
                        fp=fp,
                        tn=len(neg_d) - fp,
                    )
                )
    return results


_SWEEP_COLUMNS = [
    "scheme", "flip_tolerance", "tau", "tp", "fn", "fp", "tn", "recall", "precision", "fpr",
]


def write_sweep_csv(results: Sequence[SweepResult], path: str | Path, meta: dict | None = None) -> None:
    """CSV with '#'-prefixed header lines echoing seeds and configuration."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in (meta or {}).items():
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f)
        writer.writerow(_SWEEP_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.scheme.value, r.flip_tolerance, r.tau, r.tp, r.fn, r.fp, r.tn,
                    f"{r.recall:.5f}", f"{r.precision:.5f}", f"{r.fpr:.5f}",
                ]
            )


def format_sweep_table(results: Sequence[SweepResult]) -> str:
    """Human-readable fixed-width table."""
    lines = [
        f"{'scheme':<14} {'tol':>3} {'tau':>3} {'TP':>7} {'FN':>6} {'FP':>6} {'TN':>6} "
        f"{'recall':>8} {'prec':>8} {'FPR':>8}"
    ]
    for r in results:
        lines.append(
            f"{r.scheme.value:<14} {r.flip_tolerance:>3} {r.tau:>3} {r.tp:>7} {r.fn:>6} "
            f"{r.fp:>6} {r.tn:>6} {r.recall:>8.5f} {r.precision:>8.5f} {r.fpr:>8.5f}"
        )
    return "\n".join(lines)
