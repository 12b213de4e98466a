"""Compiled inner loops shared by the sequential trainer and the thread engine.

Every kernel fixes its accumulation order (ascending dimension, ascending
training index) and fastmath stays off, so results are bit-reproducible and
independent of how the work is chunked across workers.  ``nogil`` lets the
thread engine overlap kernel execution on real cores.
"""

import math

import numpy as np
from numba import njit

SQUARED_EUCLIDEAN = 0
EUCLIDEAN = 1


@njit(cache=True, nogil=True)
def assign_range(vectors, codebook, start, stop, metric, out_cells, out_dists):
    """Nearest-codevector scan over rows [start, stop); lowest index wins ties."""
    size, dim = codebook.shape
    for z in range(start, stop):
        best = 0
        best_d = math.inf
        for i in range(size):
            d = 0.0
            for c in range(dim):
                diff = vectors[z, c] - codebook[i, c]
                d += diff * diff
            if d < best_d:
                best_d = d
                best = i
        if metric == EUCLIDEAN:
            best_d = math.sqrt(best_d)
        out_cells[z] = best
        out_dists[z] = best_d


@njit(cache=True, nogil=True)
def update_rows(vectors, cells, old_codebook, worker, stride, out_codebook, out_counts):
    """Recompute centroids for codevector rows congruent to ``worker`` mod ``stride``.

    Members are accumulated in ascending training index, so any
    (worker, stride) decomposition reproduces the single-worker result bit
    for bit.  Rows with no members keep their previous codevector.
    """
    m, dim = vectors.shape
    size = old_codebook.shape[0]
    for i in range(worker, size, stride):
        out_counts[i] = 0
        for c in range(dim):
            out_codebook[i, c] = 0.0
    for j in range(m):
        idx = cells[j]
        if idx % stride == worker:
            out_counts[idx] += 1
            for c in range(dim):
                out_codebook[idx, c] += vectors[j, c]
    for i in range(worker, size, stride):
        n = out_counts[i]
        if n > 0:
            for c in range(dim):
                out_codebook[i, c] /= n
        else:
            for c in range(dim):
                out_codebook[i, c] = old_codebook[i, c]


@njit(cache=True)
def pair_distance(a, b, metric):
    """Distance between two vectors in the requested metric."""
    d = 0.0
    for c in range(a.shape[0]):
        diff = a[c] - b[c]
        d += diff * diff
    if metric == EUCLIDEAN:
        return math.sqrt(d)
    return d


@njit(cache=True)
def column_sums(vectors):
    """Column sums accumulated in ascending row order (matches update_rows)."""
    m, dim = vectors.shape
    out = np.zeros(dim)
    for j in range(m):
        for c in range(dim):
            out[c] += vectors[j, c]
    return out


@njit(cache=True)
def sum_inorder(values):
    """Strict left-to-right accumulation; the canonical distortion reduction."""
    total = 0.0
    for i in range(values.shape[0]):
        total += values[i]
    return total
