"""Evaluation metrics and benchmark loading."""

from .benchmark import (
    BENCHMARK_FORMAT,
    BenchmarkCase,
    BenchmarkScene,
    ForegroundSpec,
    load_benchmark,
)
from .metrics import ccs, extract_features, fid, tis
from .runs import MetricReport, evaluate_run

__all__ = [
    "BENCHMARK_FORMAT",
    "BenchmarkCase",
    "BenchmarkScene",
    "ForegroundSpec",
    "MetricReport",
    "ccs",
    "evaluate_run",
    "extract_features",
    "fid",
    "load_benchmark",
    "tis",
]
