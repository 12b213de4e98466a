"""Benchmark harness: codebook-size x worker-count sweeps with wall-clock
timing, CSV output, and the Amdahl speedup model for comparison."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SQUARED_EUCLIDEAN, LbgConfig, TrainingSet
from .errors import UsageError
from .parallel import parallel_lbg_train

BENCH_CSV_HEADER = "n,p,m,k,seconds,td,iterations"
DEFAULT_SIZES = (8, 16, 32, 64, 128)
DEFAULT_THREADS = (1, 2, 4)
DEFAULT_REPEATS = 3
DEFAULT_SERIAL_FRACTION = 0.15


@dataclass(frozen=True)
class AmdahlParams:
    """Serial fraction S of the parallelized program and processor count n."""

    serial_fraction: float
    processors: int

    def __post_init__(self):
        if not 0.0 <= self.serial_fraction <= 1.0:
            raise UsageError(
                f"serial fraction must lie in [0, 1], got {self.serial_fraction}"
            )
        if self.processors < 1:
            raise UsageError(f"processor count must be >= 1, got {self.processors}")


def amdahl_speedup(params: AmdahlParams) -> float:
    """speedup = 1 / (S + (1 - S) / n); bounded by min(n, 1/S)."""
    s = params.serial_fraction
    n = params.processors
    return 1.0 / (s + (1.0 - s) / n)


@dataclass(frozen=True)
class BenchRecord:
    """One sweep cell: training a size-N codebook with P workers."""

    codebook_size: int
    workers: int
    vector_count: int
    dimension: int
    seconds: float
    td: float
    iterations: int


def synthetic_training_set(count: int, dimension: int, seed: int) -> TrainingSet:
    """Seeded uniform [0, 1) vectors; identical seeds give identical data."""
    rng = np.random.default_rng(seed)
    return TrainingSet(rng.random((count, dimension)))


def _warm_kernels(ts: TrainingSet) -> None:
    # first kernel dispatch in a process pays JIT/cache-load cost; keep it
    # out of the timed cells
    subset = TrainingSet(ts.vectors[: min(ts.m, 32)])
    parallel_lbg_train(subset, LbgConfig(target_size=2, max_iterations_per_level=2))


def run_sweep(
    ts: TrainingSet,
    sizes=DEFAULT_SIZES,
    thread_counts=DEFAULT_THREADS,
    repeats: int = DEFAULT_REPEATS,
    epsilon: float = 1e-3,
    delta: float = 0.01,
    metric: str = SQUARED_EUCLIDEAN,
    max_iterations: int = 100,
    progress=None,
) -> list[BenchRecord]:
    """Train every (N, P) cell ``repeats`` times and keep the minimum wall
    time; only the training call is timed.  Repeats run serially so the
    measurements do not interfere with each other."""
    if repeats < 1:
        raise UsageError(f"repeats must be >= 1, got {repeats}")
    _warm_kernels(ts)
    records = []
    for size in sizes:
        for workers in thread_counts:
            config = LbgConfig(
                target_size=size,
                epsilon=epsilon,
                delta=delta,
                workers=workers,
                max_iterations_per_level=max_iterations,
                distortion_metric=metric,
            )
            best = None
            stats = None
            for _ in range(repeats):
                start = time.perf_counter()
                _, stats = parallel_lbg_train(ts, config)
                elapsed = time.perf_counter() - start
                if best is None or elapsed < best:
                    best = elapsed
            record = BenchRecord(
                codebook_size=size,
                workers=workers,
                vector_count=ts.m,
                dimension=ts.k,
                seconds=best,
                td=stats.total,
                iterations=len(stats.history),
            )
            records.append(record)
            if progress is not None:
                progress(record)
    return records


def write_bench_csv(records: list[BenchRecord], path, comment: str | None = None) -> None:
    """Fixed column order, decimal points, no locale formatting."""
    lines = []
    if comment:
        lines.append(f"# {comment}")
    lines.append(BENCH_CSV_HEADER)
    for r in records:
        lines.append(
            f"{r.codebook_size},{r.workers},{r.vector_count},{r.dimension},"
            f"{r.seconds!r},{r.td!r},{r.iterations}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def speedup_report(
    records: list[BenchRecord], serial_fraction: float = DEFAULT_SERIAL_FRACTION
) -> list[str]:
    """Measured speedup vs the P=1 baseline for each sweep cell, with the
    Amdahl prediction at the given serial fraction alongside."""
    baselines = {
        r.codebook_size: r.seconds for r in records if r.workers == 1
    }
    lines = []
    for r in records:
        baseline = baselines.get(r.codebook_size)
        if baseline is None:
            continue
        measured = baseline / r.seconds if r.seconds > 0 else float("inf")
        predicted = amdahl_speedup(AmdahlParams(serial_fraction, r.workers))
        lines.append(
            f"N={r.codebook_size} P={r.workers}: measured speedup {measured:.2f}x, "
            f"Amdahl prediction {predicted:.2f}x (serial fraction {serial_fraction:g})"
        )
    return lines
