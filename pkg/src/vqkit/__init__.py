"""Vector-quantization toolkit.

Builds optimum codebooks from training data with the LBG splitting
algorithm, runs the allocation and update phases across worker threads with
deterministic integration, and uses the trained codebooks to encode/decode
arbitrary vector data and grayscale PGM images.
"""

from .bench import (
    AmdahlParams,
    BenchRecord,
    amdahl_speedup,
    run_sweep,
    speedup_report,
    synthetic_training_set,
    write_bench_csv,
)
from .codec import (
    EncodedStream,
    RateReport,
    decode,
    encode,
    rate,
    reconstruction_distortion,
)
from .core import (
    EUCLIDEAN,
    SQUARED_EUCLIDEAN,
    CellTable,
    Codebook,
    DistortionStats,
    LbgConfig,
    LevelIteration,
    TrainingSet,
    assign_cells,
    centroid,
    convergence_check,
    distance,
    lbg_train,
    nearest_codevector,
    split_codebook,
    update_codebook,
)
from .errors import (
    ConfigError,
    DomainError,
    FormatError,
    InternalError,
    UsageError,
    VqError,
)
from .parallel import (
    ChunkPlan,
    UpdateAssignment,
    integrate,
    parallel_assign,
    parallel_lbg_train,
    parallel_update,
    partition_training,
)
from .storage import (
    BlockGrid,
    blocks_to_image,
    image_to_blocks,
    load_codebook,
    load_encoded,
    load_training_csv,
    parse_pgm,
    pgm_bytes,
    pixels_to_blocks,
    read_pgm,
    save_codebook,
    save_encoded,
    save_vectors_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AmdahlParams",
    "BenchRecord",
    "BlockGrid",
    "CellTable",
    "ChunkPlan",
    "Codebook",
    "ConfigError",
    "DistortionStats",
    "DomainError",
    "EncodedStream",
    "EUCLIDEAN",
    "FormatError",
    "InternalError",
    "LbgConfig",
    "LevelIteration",
    "RateReport",
    "SQUARED_EUCLIDEAN",
    "TrainingSet",
    "UpdateAssignment",
    "UsageError",
    "VqError",
    "amdahl_speedup",
    "assign_cells",
    "blocks_to_image",
    "centroid",
    "convergence_check",
    "decode",
    "distance",
    "encode",
    "image_to_blocks",
    "integrate",
    "lbg_train",
    "load_codebook",
    "load_encoded",
    "load_training_csv",
    "nearest_codevector",
    "parallel_assign",
    "parallel_lbg_train",
    "parallel_update",
    "parse_pgm",
    "partition_training",
    "pgm_bytes",
    "pixels_to_blocks",
    "rate",
    "read_pgm",
    "reconstruction_distortion",
    "run_sweep",
    "save_codebook",
    "save_encoded",
    "save_vectors_csv",
    "speedup_report",
    "split_codebook",
    "synthetic_training_set",
    "update_codebook",
    "write_bench_csv",
]
