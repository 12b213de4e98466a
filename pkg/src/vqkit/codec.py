"""Quantize vector data with a trained codebook: encode to indices, decode
back to codevectors, and report rate and reconstruction quality."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    SQUARED_EUCLIDEAN,
    Codebook,
    _rows_of,
    is_power_of_two,
    metric_code,
)
from .errors import ConfigError, FormatError, UsageError
from .parallel import _assign_phase, partition_training

RAW_BITS_PER_SAMPLE = 64  # reference width for the compression ratio


@dataclass(frozen=True)
class EncodedStream:
    """Quantized data: one codevector index per input vector, plus the
    codebook size and dimension needed to decode it."""

    codebook_size: int
    dimension: int
    indices: np.ndarray

    def __post_init__(self):
        if self.codebook_size < 1 or self.dimension < 1:
            raise UsageError("encoded stream needs a positive codebook size and dimension")
        arr = np.ascontiguousarray(self.indices, dtype=np.uint32)
        if arr.ndim != 1:
            raise UsageError(f"indices must be one-dimensional, got shape {arr.shape}")
        if arr.size and int(arr.max()) >= self.codebook_size:
            raise UsageError(
                f"index {int(arr.max())} out of range for codebook size {self.codebook_size}"
            )
        arr = arr.copy() if arr is self.indices else arr
        arr.setflags(write=False)
        object.__setattr__(self, "indices", arr)

    def __len__(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class RateReport:
    """Transmission cost of a codebook: log2(N) bits per vector, log2(N)/L
    bits per sample, and the ratio against raw 64-bit samples."""

    bits_per_vector: float
    bits_per_sample: float
    compression_ratio: float


def encode(data, codebook: Codebook, workers: int = 1) -> EncodedStream:
    """Replace every input vector by the index of its nearest codevector.

    Uses the same lowest-index tie rule as training, so the result is
    independent of the metric and of ``workers`` (chunks only split the scan).
    """
    vectors = _rows_of(data)
    if vectors.shape[1] != codebook.k:
        raise UsageError(
            f"dimension mismatch: data vectors have {vectors.shape[1]} components, "
            f"codebook has {codebook.k}"
        )
    m = vectors.shape[0]
    if m == 0:
        return EncodedStream(codebook.size, codebook.k, np.empty(0, dtype=np.uint32))
    cells = np.empty(m, dtype=np.int64)
    dists = np.empty(m, dtype=np.float64)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        plan = partition_training(m, workers)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            _assign_phase(
                vectors, codebook.codevectors, plan,
                metric_code(SQUARED_EUCLIDEAN), cells, dists, executor,
            )
    else:
        _kernels.assign_range(
            vectors, codebook.codevectors, 0, m,
            metric_code(SQUARED_EUCLIDEAN), cells, dists,
        )
    return EncodedStream(codebook.size, codebook.k, cells.astype(np.uint32))


def decode(stream: EncodedStream, codebook: Codebook) -> np.ndarray:
    """Reconstruct row j as the codevector at stream.indices[j]."""
    if stream.codebook_size != codebook.size:
        raise UsageError(
            f"stream was encoded against {stream.codebook_size} codevectors, "
            f"codebook has {codebook.size}"
        )
    if stream.dimension != codebook.k:
        raise UsageError(
            f"stream dimension {stream.dimension} does not match codebook dimension {codebook.k}"
        )
    if len(stream) == 0:
        return np.empty((0, codebook.k), dtype=np.float64)
    indices = stream.indices
    if int(indices.max()) >= codebook.size:
        raise FormatError(
            f"corrupt stream: index {int(indices.max())} >= codebook size {codebook.size}"
        )
    return codebook.codevectors[indices.astype(np.int64)]


def rate(codebook_size: int, dimension: int) -> RateReport:
    """Bits per vector and per sample for a codebook of the given size."""
    if not is_power_of_two(codebook_size):
        raise ConfigError(
            f"codebook size must be a power of two, got {codebook_size}"
        )
    if dimension < 1:
        raise UsageError(f"dimension must be >= 1, got {dimension}")
    bits_per_vector = float(codebook_size.bit_length() - 1)
    bits_per_sample = bits_per_vector / dimension
    ratio = (
        (RAW_BITS_PER_SAMPLE * dimension) / bits_per_vector
        if bits_per_vector > 0
        else math.inf
    )
    return RateReport(bits_per_vector, bits_per_sample, ratio)


def reconstruction_distortion(
    data, reconstructed, metric: str = SQUARED_EUCLIDEAN
) -> tuple[float, float]:
    """Total and per-vector mean distortion between data and its reconstruction."""
    a = _rows_of(data)
    b = _rows_of(reconstructed)
    if a.shape[0] != b.shape[0]:
        raise UsageError(
            f"length mismatch: {a.shape[0]} data rows vs {b.shape[0]} reconstructed"
        )
    if a.shape[1] != b.shape[1]:
        raise UsageError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]} components"
        )
    if a.shape[0] == 0:
        return 0.0, 0.0
    code = metric_code(metric)
    dists = np.empty(a.shape[0], dtype=np.float64)
    for j in range(a.shape[0]):
        dists[j] = _kernels.pair_distance(a[j], b[j], code)
    total = float(_kernels.sum_inorder(dists))
    return total, total / a.shape[0]
