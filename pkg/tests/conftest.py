import numpy as np
import pytest

from vqkit import Codebook, LbgConfig, TrainingSet


@pytest.fixture
def trace_ts():
    """Four-vector hand trace: two clusters around x=0 and x=4."""
    return TrainingSet(np.array([[0.0, 0.0], [0.0, 1.0], [4.0, 0.0], [4.0, 1.0]]))


@pytest.fixture
def trace_config():
    return LbgConfig(target_size=2, epsilon=1e-3, delta=0.5)


@pytest.fixture
def trace_split_codebook():
    """The trace's first split codebook: centroid (2, 0.5) +/- 0.5."""
    return Codebook(np.array([[2.5, 1.0], [1.5, 0.0]]))


@pytest.fixture
def trace_final_codebook():
    return Codebook(np.array([[4.0, 0.5], [0.0, 0.5]]))
