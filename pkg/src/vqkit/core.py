"""Domain types and the sequential LBG codebook trainer.

Training starts from the global centroid, doubles the codebook by splitting
every codevector to ``centroid + delta`` / ``centroid - delta``, and refines
each size level by alternating nearest-codevector allocation with centroid
updates until the relative drop in total distortion falls below the
threshold.  All accumulation orders are fixed (ascending dimension, ascending
training index, global input order for the distortion total) so the thread
engine in :mod:`vqkit.parallel` reproduces every result bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, UsageError

SQUARED_EUCLIDEAN = "squared_euclidean"
EUCLIDEAN = "euclidean"

_METRIC_CODES = {
    SQUARED_EUCLIDEAN: _kernels.SQUARED_EUCLIDEAN,
    EUCLIDEAN: _kernels.EUCLIDEAN,
}


def metric_code(metric: str) -> int:
    """Map a metric name to its kernel code."""
    try:
        return _METRIC_CODES[metric]
    except KeyError:
        raise ConfigError(
            f"unknown distortion metric {metric!r}; "
            f"expected one of {sorted(_METRIC_CODES)}"
        ) from None


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _as_vector(x, name: str = "vector") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise UsageError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite components")
    return arr


def _as_matrix(x, name: str = "vectors") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise UsageError(f"{name} must be a 2-D row matrix, got shape {arr.shape}")
    return arr


def _rows_of(data) -> np.ndarray:
    """Accept a TrainingSet, Codebook, or raw row matrix."""
    if isinstance(data, TrainingSet):
        return data.vectors
    if isinstance(data, Codebook):
        return data.codevectors
    return _as_matrix(data)


@dataclass(frozen=True)
class TrainingSet:
    """M training vectors of dimension k, stored as a read-only float64 matrix."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.vectors, "training vectors")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise UsageError(
                f"training set must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}"
            )
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise UsageError(
                f"training vector {bad[0]} component {bad[1]} is not finite"
            )
        arr = arr.copy() if arr is self.vectors else arr
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class Codebook:
    """S codevectors of dimension k; sizes grown by splitting are powers of two."""

    codevectors: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.codevectors, "codevectors")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise UsageError(
                f"codebook must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}"
            )
        if not np.all(np.isfinite(arr)):
            raise UsageError("codebook contains non-finite components")
        arr = arr.copy() if arr is self.codevectors else arr
        arr.setflags(write=False)
        object.__setattr__(self, "codevectors", arr)

    @property
    def size(self) -> int:
        return self.codevectors.shape[0]

    @property
    def k(self) -> int:
        return self.codevectors.shape[1]


@dataclass(frozen=True)
class CellTable:
    """Per-vector index of the nearest codevector.

    ``start`` is the absolute position of the first entry, so the same type
    doubles as one worker's partial table over a contiguous chunk.
    """

    cells: np.ndarray
    codebook_size: int
    start: int = 0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.cells, dtype=np.int64)
        if arr.ndim != 1:
            raise UsageError(f"cell table must be one-dimensional, got shape {arr.shape}")
        if self.codebook_size < 1:
            raise UsageError("cell table needs a positive codebook size")
        if self.start < 0:
            raise UsageError("cell table start must be non-negative")
        if arr.size and (arr.min() < 0 or arr.max() >= self.codebook_size):
            raise UsageError(
                f"cell indices must lie in [0, {self.codebook_size}), "
                f"found range [{arr.min()}, {arr.max()}]"
            )
        arr = arr.copy() if arr is self.cells else arr
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    def __len__(self) -> int:
        return self.cells.shape[0]


@dataclass(frozen=True)
class LevelIteration:
    """One allocation pass: codebook size, iteration number (1-based within the
    level), total distortion, empty cells in the update that followed (0 when
    the level converged and no update ran), and seconds since training start."""

    codebook_size: int
    iteration: int
    td: float
    empty_cells: int = 0
    seconds: float = 0.0


@dataclass
class DistortionStats:
    """Distortion bookkeeping from a training run.

    ``per_worker`` holds each worker's chunk distortion from the final
    allocation; ``total`` is the distortion of the returned codebook,
    accumulated over the whole set in input order.  ``history`` records every
    allocation pass.  ``mean`` derives the per-vector average.
    """

    per_worker: list[float] = field(default_factory=list)
    total: float = 0.0
    history: list[LevelIteration] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    vector_count: int = 0

    @property
    def mean(self) -> float:
        return self.total / self.vector_count if self.vector_count else 0.0

    def td_history(self) -> list[tuple[int, int, float]]:
        """(codebook_size, iteration, td) triples, the cross-run comparable part."""
        return [(h.codebook_size, h.iteration, h.td) for h in self.history]


@dataclass(frozen=True)
class LbgConfig:
    """Training configuration.

    target_size must be a power of two; epsilon is the relative-improvement
    threshold; delta the split offset added to and subtracted from every
    component; workers the parallel degree (ignored by the sequential
    trainer); max_iterations_per_level guards against non-terminating levels.
    """

    target_size: int
    epsilon: float = 1e-3
    delta: float = 0.01
    workers: int = 1
    max_iterations_per_level: int = 100
    distortion_metric: str = SQUARED_EUCLIDEAN

    def __post_init__(self):
        if not is_power_of_two(self.target_size):
            raise ConfigError(
                f"codebook size must be a power of two, got {self.target_size}"
            )
        if not self.epsilon >= 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.delta > 0:
            raise ConfigError(f"split offset delta must be > 0, got {self.delta}")
        if self.workers < 1:
            raise ConfigError(f"worker count must be >= 1, got {self.workers}")
        if self.max_iterations_per_level < 1:
            raise ConfigError(
                f"max iterations per level must be >= 1, got {self.max_iterations_per_level}"
            )
        metric_code(self.distortion_metric)


def distance(a, b, metric: str = SQUARED_EUCLIDEAN) -> float:
    """Distortion between two vectors: sum of squared differences by default,
    its square root under the ``euclidean`` metric."""
    va = _as_vector(a, "a")
    vb = _as_vector(b, "b")
    if va.shape[0] != vb.shape[0]:
        raise UsageError(
            f"dimension mismatch: a has {va.shape[0]} components, b has {vb.shape[0]}"
        )
    return float(_kernels.pair_distance(va, vb, metric_code(metric)))


def centroid(vectors) -> np.ndarray:
    """Componentwise mean of a non-empty set of equal-dimension vectors."""
    if isinstance(vectors, TrainingSet):
        arr = vectors.vectors
    else:
        seq = list(vectors) if not isinstance(vectors, np.ndarray) else vectors
        if len(seq) == 0:
            raise DomainError("centroid of an empty vector set is undefined")
        arr = _as_matrix(np.asarray(seq, dtype=np.float64))
    if arr.shape[0] == 0:
        raise DomainError("centroid of an empty vector set is undefined")
    return _kernels.column_sums(arr) / arr.shape[0]


def nearest_codevector(x, codebook: Codebook, metric: str = SQUARED_EUCLIDEAN) -> tuple[int, float]:
    """Index and distance of the closest codevector; ties go to the lowest index."""
    vx = _as_vector(x, "query")
    if vx.shape[0] != codebook.k:
        raise UsageError(
            f"dimension mismatch: query has {vx.shape[0]} components, "
            f"codebook has {codebook.k}"
        )
    cells = np.empty(1, dtype=np.int64)
    dists = np.empty(1, dtype=np.float64)
    _kernels.assign_range(
        vx.reshape(1, -1), codebook.codevectors, 0, 1, metric_code(metric), cells, dists
    )
    return int(cells[0]), float(dists[0])


def _split_rows(rows: np.ndarray, delta: float) -> np.ndarray:
    out = np.empty((rows.shape[0] * 2, rows.shape[1]), dtype=np.float64)
    out[0::2] = rows + delta
    out[1::2] = rows - delta
    return out


def split_codebook(codebook: Codebook, delta: float) -> Codebook:
    """Double the codebook: row i yields rows 2i (+delta) and 2i+1 (-delta),
    with the offset applied to every component."""
    if not delta > 0:
        raise ConfigError(f"split offset delta must be > 0, got {delta}")
    return Codebook(_split_rows(codebook.codevectors, float(delta)))


def assign_cells(
    chunk,
    codebook: Codebook,
    metric: str = SQUARED_EUCLIDEAN,
    start: int = 0,
) -> tuple[CellTable, float]:
    """Allocate every chunk vector to its nearest codevector.

    Returns the (partial) cell table and the chunk distortion, accumulated
    over the chunk in input order.  ``start`` records where the chunk sits in
    the full training set.
    """
    vectors = _rows_of(chunk)
    if vectors.shape[0] == 0:
        raise UsageError("chunk must be non-empty")
    if vectors.shape[1] != codebook.k:
        raise UsageError(
            f"dimension mismatch: chunk vectors have {vectors.shape[1]} components, "
            f"codebook has {codebook.k}"
        )
    m = vectors.shape[0]
    cells = np.empty(m, dtype=np.int64)
    dists = np.empty(m, dtype=np.float64)
    _kernels.assign_range(vectors, codebook.codevectors, 0, m, metric_code(metric), cells, dists)
    return CellTable(cells, codebook.size, start=start), float(_kernels.sum_inorder(dists))


def update_codebook(
    ts: TrainingSet, table: CellTable, codebook: Codebook
) -> tuple[Codebook, int]:
    """Replace each codevector by the centroid of the vectors allocated to it.

    Empty cells keep their previous codevector; the count of empty cells is
    returned alongside the new codebook.
    """
    if len(table) != ts.m or table.start != 0:
        raise UsageError(
            f"cell table must cover all {ts.m} training vectors from index 0"
        )
    if table.codebook_size != codebook.size:
        raise UsageError(
            f"cell table was built for {table.codebook_size} codevectors, "
            f"codebook has {codebook.size}"
        )
    new_rows = np.empty_like(codebook.codevectors)
    counts = np.zeros(codebook.size, dtype=np.int64)
    _kernels.update_rows(ts.vectors, table.cells, codebook.codevectors, 0, 1, new_rows, counts)
    return Codebook(new_rows), int(np.count_nonzero(counts == 0))


def convergence_check(td_prev: float, td_cur: float, epsilon: float) -> bool:
    """True when the relative distortion drop (td_prev - td_cur) / td_prev is
    within epsilon.  An infinite td_prev is the first-iteration sentinel and
    never converges; td_prev == 0 cannot improve and always converges."""
    if td_prev < 0 or td_cur < 0:
        raise DomainError(
            f"distortions must be non-negative, got ({td_prev}, {td_cur})"
        )
    if epsilon < 0:
        raise ConfigError(f"epsilon must be >= 0, got {epsilon}")
    if math.isinf(td_prev):
        return False
    if td_prev == 0.0:
        return True
    return (td_prev - td_cur) / td_prev <= epsilon


def _max_iter_warning(level_size: int, limit: int) -> str:
    return (
        f"codebook level {level_size} stopped after {limit} iterations "
        f"without meeting the distortion threshold"
    )


def lbg_train(ts: TrainingSet, config: LbgConfig) -> tuple[Codebook, DistortionStats]:
    """Train a codebook of ``config.target_size`` codevectors sequentially.

    The initial codebook is the global centroid; each splitting step doubles
    it, and allocation/update rounds run until the threshold test passes or
    the per-level iteration guard trips (recorded as a warning, not an
    error).  This path is the deterministic oracle for the thread engine:
    identical inputs yield bit-identical codebooks and histories.
    """
    code = metric_code(config.distortion_metric)
    vectors = ts.vectors
    m = ts.m
    cells = np.empty(m, dtype=np.int64)
    dists = np.empty(m, dtype=np.float64)
    rows = (_kernels.column_sums(vectors) / m).reshape(1, -1)

    history: list[LevelIteration] = []
    warnings: list[str] = []
    started = time.perf_counter()
    size = 1
    while size < config.target_size:
        rows = _split_rows(rows, config.delta)
        size *= 2
        td_prev = math.inf
        converged = False
        for iteration in range(1, config.max_iterations_per_level + 1):
            _kernels.assign_range(vectors, rows, 0, m, code, cells, dists)
            td = float(_kernels.sum_inorder(dists))
            if convergence_check(td_prev, td, config.epsilon):
                history.append(
                    LevelIteration(size, iteration, td, 0, time.perf_counter() - started)
                )
                converged = True
                break
            new_rows = np.empty_like(rows)
            counts = np.zeros(size, dtype=np.int64)
            _kernels.update_rows(vectors, cells, rows, 0, 1, new_rows, counts)
            history.append(
                LevelIteration(
                    size,
                    iteration,
                    td,
                    int(np.count_nonzero(counts == 0)),
                    time.perf_counter() - started,
                )
            )
            rows = new_rows
            td_prev = td
        if not converged:
            warnings.append(_max_iter_warning(size, config.max_iterations_per_level))

    if history:
        total = history[-1].td
    else:
        # target_size == 1: no refinement ran, still report the codebook's distortion
        _kernels.assign_range(vectors, rows, 0, m, code, cells, dists)
        total = float(_kernels.sum_inorder(dists))
    stats = DistortionStats(
        per_worker=[total],
        total=total,
        history=history,
        warnings=warnings,
        vector_count=m,
    )
    return Codebook(rows), stats
