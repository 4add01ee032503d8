"""Experiment harnesses: image edit pipeline, accuracy sweep, latency bench."""

from .bench import IndexStructure, LatencyReport, run_latency_bench, synth_corpus, write_bench_csv
from .sweep import SweepResult, run_sweep, write_sweep_csv
from .transforms import (
    DEFAULT_MAGNITUDES,
    TransformKind,
    TransformSpec,
    apply_transform,
    make_edited_set,
    random_transform_chain,
)

__all__ = [
    "DEFAULT_MAGNITUDES",
    "IndexStructure",
    "LatencyReport",
    "SweepResult",
    "TransformKind",
    "TransformSpec",
    "apply_transform",
    "make_edited_set",
    "random_transform_chain",
    "run_latency_bench",
    "run_sweep",
    "synth_corpus",
    "write_bench_csv",
    "write_sweep_csv",
]
