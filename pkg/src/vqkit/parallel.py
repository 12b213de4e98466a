"""Shared-memory thread engine for codebook training.

The training set is split into contiguous chunks, one per worker.  During
allocation each worker fills its own slice of a shared cell table and
per-vector distance buffer; the controller integrates by reading the shared
buffers and accumulating the distortion total in global input order, so the
result is bit-identical for every worker count.  During updation worker phi
recomputes the codevectors whose index is congruent to phi modulo the worker
count (round-robin), writing disjoint output rows.  A barrier (joining the
phase's futures) separates allocation from updation.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    SQUARED_EUCLIDEAN,
    CellTable,
    Codebook,
    DistortionStats,
    LbgConfig,
    LevelIteration,
    TrainingSet,
    _max_iter_warning,
    _split_rows,
    convergence_check,
    metric_code,
)
from .errors import InternalError, UsageError

# Test instrumentation: when set to a callable, it is invoked as
# hook(phase, worker) at the start of every worker task.  Tests use it to
# inject delays and prove the phase barriers hold under adversarial
# scheduling.  Leave None in production.
_worker_hook = None


@dataclass(frozen=True)
class ChunkPlan:
    """P contiguous, disjoint index ranges covering [0, M), sizes within 1."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.ranges:
            raise UsageError("chunk plan needs at least one range")
        cursor = 0
        sizes = []
        for lo, hi in self.ranges:
            if lo != cursor or hi < lo:
                raise UsageError(
                    f"chunk ranges must be contiguous from 0, got ({lo}, {hi}) at {cursor}"
                )
            sizes.append(hi - lo)
            cursor = hi
        if max(sizes) - min(sizes) > 1:
            raise UsageError(f"chunk sizes must differ by at most 1, got {sizes}")

    @property
    def workers(self) -> int:
        return len(self.ranges)

    @property
    def total(self) -> int:
        return self.ranges[-1][1]


@dataclass(frozen=True)
class UpdateAssignment:
    """Round-robin ownership of codevectors: worker phi owns index c iff
    c mod workers == phi."""

    workers: int

    def __post_init__(self):
        if self.workers < 1:
            raise UsageError(f"worker count must be >= 1, got {self.workers}")

    def worker_for(self, index: int) -> int:
        return index % self.workers

    def rows_for(self, worker: int, size: int) -> range:
        return range(worker, size, self.workers)


def partition_training(m: int, workers: int) -> ChunkPlan:
    """Split [0, m) into ``workers`` contiguous chunks; the first m mod workers
    chunks take the extra vector.  Workers beyond m get empty ranges."""
    if m < 1:
        raise UsageError(f"vector count must be >= 1, got {m}")
    if workers < 1:
        raise UsageError(f"worker count must be >= 1, got {workers}")
    base, extra = divmod(m, workers)
    ranges = []
    cursor = 0
    for rho in range(workers):
        size = base + (1 if rho < extra else 0)
        ranges.append((cursor, cursor + size))
        cursor += size
    return ChunkPlan(tuple(ranges))


def _assign_task(vectors, rows, lo, hi, code, cells, dists, worker):
    hook = _worker_hook
    if hook is not None:
        hook("assign", worker)
    _kernels.assign_range(vectors, rows, lo, hi, code, cells, dists)


def _update_task(vectors, cells, rows, worker, stride, out_rows, counts):
    hook = _worker_hook
    if hook is not None:
        hook("update", worker)
    _kernels.update_rows(vectors, cells, rows, worker, stride, out_rows, counts)


def _run_phase(executor, task, calls):
    """Run one phase's worker calls and wait for all of them (the barrier)."""
    if executor is None or len(calls) <= 1:
        for args in calls:
            task(*args)
        return
    futures = [executor.submit(task, *args) for args in calls]
    for future in futures:
        future.result()


def _assign_phase(vectors, rows, plan, code, cells, dists, executor):
    calls = [
        (vectors, rows, lo, hi, code, cells, dists, worker)
        for worker, (lo, hi) in enumerate(plan.ranges)
        if hi > lo
    ]
    _run_phase(executor, _assign_task, calls)


def _update_phase(vectors, cells, rows, assignment, executor):
    size = rows.shape[0]
    new_rows = np.empty_like(rows)
    counts = np.zeros(size, dtype=np.int64)
    calls = [
        (vectors, cells, rows, worker, assignment.workers, new_rows, counts)
        for worker in range(assignment.workers)
        if len(assignment.rows_for(worker, size)) > 0
    ]
    _run_phase(executor, _update_task, calls)
    return new_rows, counts


def parallel_assign(
    ts: TrainingSet,
    codebook: Codebook,
    plan: ChunkPlan,
    metric: str = SQUARED_EUCLIDEAN,
) -> tuple[list[CellTable], list[float]]:
    """Run the allocation phase across the plan's workers.

    Each worker scans its chunk against the shared read-only codebook and
    produces a partial cell table plus its chunk distortion (accumulated in
    chunk order).  Workers with empty ranges return empty partials.
    """
    if plan.total != ts.m:
        raise UsageError(f"plan covers {plan.total} vectors, training set has {ts.m}")
    if ts.k != codebook.k:
        raise UsageError(
            f"dimension mismatch: training set has {ts.k} components, "
            f"codebook has {codebook.k}"
        )
    code = metric_code(metric)
    cells = np.empty(ts.m, dtype=np.int64)
    dists = np.empty(ts.m, dtype=np.float64)
    workers = sum(1 for lo, hi in plan.ranges if hi > lo)
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        _assign_phase(ts.vectors, codebook.codevectors, plan, code, cells, dists, executor)
    finally:
        if executor is not None:
            executor.shutdown()
    partials = [
        CellTable(cells[lo:hi].copy(), codebook.size, start=lo)
        for lo, hi in plan.ranges
    ]
    distortions = [float(_kernels.sum_inorder(dists[lo:hi])) for lo, hi in plan.ranges]
    return partials, distortions


def integrate(
    partials: list[CellTable], distortions: list[float]
) -> tuple[CellTable, float]:
    """Controller step: concatenate the partial tables in worker order and sum
    the per-worker distortions in ascending worker index."""
    if not partials:
        raise UsageError("nothing to integrate: no partial tables")
    if len(partials) != len(distortions):
        raise UsageError(
            f"{len(partials)} partial tables but {len(distortions)} distortions"
        )
    size = partials[0].codebook_size
    cursor = 0
    arrays = []
    for partial in partials:
        if partial.codebook_size != size:
            raise InternalError(
                f"partial tables disagree on codebook size: {partial.codebook_size} vs {size}"
            )
        if partial.start != cursor:
            raise InternalError(
                f"cell-table coverage broken: expected next chunk at {cursor}, "
                f"got one starting at {partial.start}"
            )
        arrays.append(partial.cells)
        cursor += len(partial)
    table = CellTable(np.concatenate(arrays), size, start=0)
    total = 0.0
    for d in distortions:
        total += float(d)
    return table, total


def parallel_update(
    ts: TrainingSet, table: CellTable, codebook: Codebook, workers: int
) -> tuple[Codebook, int]:
    """Run the updation phase: worker phi recomputes the codevectors it owns
    (index mod workers == phi), each written by exactly one worker.

    Accumulates cell members in ascending training index, so the result is
    bit-identical to the sequential update for every worker count.
    """
    if len(table) != ts.m or table.start != 0:
        raise UsageError(f"cell table must cover all {ts.m} training vectors from index 0")
    if table.codebook_size != codebook.size:
        raise UsageError(
            f"cell table was built for {table.codebook_size} codevectors, "
            f"codebook has {codebook.size}"
        )
    assignment = UpdateAssignment(workers)
    active = min(workers, codebook.size)
    executor = ThreadPoolExecutor(max_workers=active) if active > 1 else None
    try:
        new_rows, counts = _update_phase(
            ts.vectors, table.cells, codebook.codevectors, assignment, executor
        )
    finally:
        if executor is not None:
            executor.shutdown()
    return Codebook(new_rows), int(np.count_nonzero(counts == 0))


def parallel_lbg_train(
    ts: TrainingSet, config: LbgConfig
) -> tuple[Codebook, DistortionStats]:
    """Train a codebook with ``config.workers`` threads.

    Same loop as the sequential trainer with the allocation and updation
    phases fanned out across workers and joined at barriers; integration
    reads the shared buffers on the controller thread.  Output is
    bit-identical to :func:`vqkit.core.lbg_train` for every worker count.
    """
    code = metric_code(config.distortion_metric)
    vectors = ts.vectors
    m = ts.m
    plan = partition_training(m, config.workers)
    assignment = UpdateAssignment(config.workers)
    cells = np.empty(m, dtype=np.int64)
    dists = np.empty(m, dtype=np.float64)
    rows = (_kernels.column_sums(vectors) / m).reshape(1, -1)

    history: list[LevelIteration] = []
    warnings: list[str] = []
    started = time.perf_counter()
    executor = (
        ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    )
    try:
        size = 1
        while size < config.target_size:
            rows = _split_rows(rows, config.delta)
            size *= 2
            td_prev = math.inf
            converged = False
            for iteration in range(1, config.max_iterations_per_level + 1):
                _assign_phase(vectors, rows, plan, code, cells, dists, executor)
                td = float(_kernels.sum_inorder(dists))
                if convergence_check(td_prev, td, config.epsilon):
                    history.append(
                        LevelIteration(size, iteration, td, 0, time.perf_counter() - started)
                    )
                    converged = True
                    break
                new_rows, counts = _update_phase(vectors, cells, rows, assignment, executor)
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
            _assign_phase(vectors, rows, plan, code, cells, dists, executor)
            total = float(_kernels.sum_inorder(dists))
    finally:
        if executor is not None:
            executor.shutdown()

    per_worker = [float(_kernels.sum_inorder(dists[lo:hi])) for lo, hi in plan.ranges]
    stats = DistortionStats(
        per_worker=per_worker,
        total=total,
        history=history,
        warnings=warnings,
        vector_count=m,
    )
    return Codebook(rows), stats
