"""Data ingestion and persistence.

Training data arrives as CSV (one vector per row).  Codebooks and encoded
streams use little-endian fixed-width binary formats with a magic tag and a
version so corrupt or foreign files fail loudly:

* codebook:  ``VQCB`` | version u32 | N u32 | k u32 | N*k float64 rows | metric u8
* encoded:   ``VQEN`` | version u32 | N u32 | k u32 | count u64 | count u32 indices

Grayscale images are binary PGM ("P5", maxval 255), vectorized as
non-overlapping b x b blocks flattened row-major; ragged right/bottom edges
are padded by replicating the last column/row so the codebook is not biased
by artificial dark borders.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import EncodedStream
from .core import EUCLIDEAN, SQUARED_EUCLIDEAN, Codebook, TrainingSet
from .errors import FormatError, UsageError

CODEBOOK_MAGIC = b"VQCB"
ENCODED_MAGIC = b"VQEN"
FORMAT_VERSION = 1

_METRIC_TAGS = {SQUARED_EUCLIDEAN: 0, EUCLIDEAN: 1}
_TAG_METRICS = {tag: name for name, tag in _METRIC_TAGS.items()}

_CODEBOOK_HEADER = struct.Struct("<III")
_ENCODED_HEADER = struct.Struct("<IIIQ")


def load_training_csv(path) -> TrainingSet:
    """Read an M x k training set; every row must have the same number of
    finite numeric fields, and problems are reported with row/column."""
    path = Path(path)
    rows: list[list[float]] = []
    width: int | None = None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(
                    f"{path}: row {lineno}: expected {width} columns, found {len(row)}"
                )
            parsed = []
            for column, cell in enumerate(row, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise FormatError(
                        f"{path}: row {lineno}, column {column}: not a number: {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise FormatError(
                        f"{path}: row {lineno}, column {column}: non-finite value {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return TrainingSet(np.asarray(rows, dtype=np.float64))


def save_vectors_csv(vectors: np.ndarray, path) -> None:
    """Write float64 rows with shortest round-tripping decimal representation."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for row in np.asarray(vectors, dtype=np.float64):
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def save_codebook(codebook: Codebook, metric: str, path) -> None:
    if metric not in _METRIC_TAGS:
        raise UsageError(f"unknown metric {metric!r}; expected one of {sorted(_METRIC_TAGS)}")
    payload = np.ascontiguousarray(codebook.codevectors, dtype="<f8").tobytes()
    blob = (
        CODEBOOK_MAGIC
        + _CODEBOOK_HEADER.pack(FORMAT_VERSION, codebook.size, codebook.k)
        + payload
        + struct.pack("<B", _METRIC_TAGS[metric])
    )
    Path(path).write_bytes(blob)


def load_codebook(path) -> tuple[Codebook, str]:
    """Load a codebook file; the float64 payload round-trips bit-exactly."""
    path = Path(path)
    data = path.read_bytes()
    header_len = 4 + _CODEBOOK_HEADER.size
    if len(data) < header_len:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic = data[:4]
    if magic != CODEBOOK_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {CODEBOOK_MAGIC!r}")
    version, size, dim = _CODEBOOK_HEADER.unpack_from(data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if size < 1 or dim < 1:
        raise FormatError(f"{path}: invalid codebook shape {size}x{dim}")
    expected = header_len + size * dim * 8 + 1
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload size mismatch: expected {expected} bytes for "
            f"{size}x{dim} codevectors, found {len(data)}"
        )
    rows = (
        np.frombuffer(data, dtype="<f8", count=size * dim, offset=header_len)
        .reshape(size, dim)
        .astype(np.float64)
    )
    if not np.all(np.isfinite(rows)):
        raise FormatError(f"{path}: codebook payload contains non-finite values")
    tag = data[-1]
    if tag not in _TAG_METRICS:
        raise FormatError(f"{path}: unknown metric tag {tag}")
    return Codebook(rows), _TAG_METRICS[tag]


def save_encoded(stream: EncodedStream, path) -> None:
    blob = (
        ENCODED_MAGIC
        + _ENCODED_HEADER.pack(
            FORMAT_VERSION, stream.codebook_size, stream.dimension, len(stream)
        )
        + np.ascontiguousarray(stream.indices, dtype="<u4").tobytes()
    )
    Path(path).write_bytes(blob)


def load_encoded(path) -> EncodedStream:
    """Load an encoded stream; any stored index >= N fails loudly."""
    path = Path(path)
    data = path.read_bytes()
    header_len = 4 + _ENCODED_HEADER.size
    if len(data) < header_len:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic = data[:4]
    if magic != ENCODED_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {ENCODED_MAGIC!r}")
    version, size, dim, count = _ENCODED_HEADER.unpack_from(data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    expected = header_len + count * 4
    if len(data) != expected:
        raise FormatError(
            f"{path}: payload size mismatch: expected {expected} bytes for "
            f"{count} indices, found {len(data)}"
        )
    indices = np.frombuffer(data, dtype="<u4", count=count, offset=header_len).astype(
        np.uint32
    )
    if indices.size and int(indices.max()) >= size:
        raise FormatError(
            f"{path}: corrupt stream: index {int(indices.max())} >= codebook size {size}"
        )
    try:
        return EncodedStream(size, dim, indices)
    except UsageError as exc:
        raise FormatError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class BlockGrid:
    """Geometry of an image cut into b x b blocks (vectors of dimension b*b)."""

    width: int
    height: int
    block: int
    padding_mode: str = "edge"

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise UsageError(f"image must be at least 1x1, got {self.width}x{self.height}")
        if self.block < 1:
            raise UsageError(f"block side must be >= 1, got {self.block}")

    @property
    def block_cols(self) -> int:
        return -(-self.width // self.block)

    @property
    def block_rows(self) -> int:
        return -(-self.height // self.block)

    @property
    def count(self) -> int:
        return self.block_rows * self.block_cols

    @property
    def k(self) -> int:
        return self.block * self.block


def _next_pgm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    whitespace = b" \t\r\n\x0b\x0c"
    while pos < len(data):
        ch = data[pos]
        if ch in whitespace:
            pos += 1
        elif ch == ord("#"):
            while pos < len(data) and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < len(data) and data[pos] not in whitespace:
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return data[start:pos], pos


def parse_pgm(data: bytes) -> np.ndarray:
    """Decode binary 8-bit PGM bytes into an (height, width) uint8 array."""
    magic, pos = _next_pgm_token(data, 0)
    if magic != b"P5":
        raise FormatError(
            f"unsupported image format {magic!r}: need binary grayscale PGM ('P5')"
        )
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_pgm_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise FormatError(f"PGM {name} is not an integer: {token!r}") from None
        if value < 1:
            raise FormatError(f"PGM {name} must be positive, got {value}")
        fields.append(value)
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"unsupported PGM maxval {maxval}: only 255 is handled")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(data) or data[pos] not in b" \t\r\n":
        raise FormatError("PGM header not followed by whitespace")
    raster = data[pos + 1 :]
    if len(raster) < width * height:
        raise FormatError(
            f"PGM raster truncated: expected {width * height} bytes, found {len(raster)}"
        )
    if len(raster) > width * height:
        raise FormatError(
            f"PGM raster has {len(raster) - width * height} trailing bytes"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def pgm_bytes(pixels: np.ndarray) -> bytes:
    """Encode an (height, width) uint8 array as binary PGM."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    if arr.ndim != 2:
        raise UsageError(f"pixels must be a 2-D array, got shape {arr.shape}")
    height, width = arr.shape
    return b"P5\n%d %d\n255\n" % (width, height) + arr.tobytes()


def read_pgm(path) -> np.ndarray:
    return parse_pgm(Path(path).read_bytes())


def image_to_blocks(path, block: int) -> tuple[np.ndarray, BlockGrid]:
    """Vectorize a PGM image into b x b blocks (pixel values as float64 in
    [0, 255]); ragged edges are padded by replication."""
    pixels = read_pgm(path)
    return pixels_to_blocks(pixels, block)


def pixels_to_blocks(pixels: np.ndarray, block: int) -> tuple[np.ndarray, BlockGrid]:
    height, width = pixels.shape
    grid = BlockGrid(width=width, height=height, block=block)
    pad_bottom = grid.block_rows * block - height
    pad_right = grid.block_cols * block - width
    padded = np.pad(pixels, ((0, pad_bottom), (0, pad_right)), mode="edge")
    vectors = (
        padded.reshape(grid.block_rows, block, grid.block_cols, block)
        .swapaxes(1, 2)
        .reshape(grid.count, grid.k)
        .astype(np.float64)
    )
    return vectors, grid


def blocks_to_image(vectors: np.ndarray, grid: BlockGrid) -> bytes:
    """Reassemble block vectors into PGM bytes: clamp to [0, 255], round
    half-up to integers, and crop the replication padding."""
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.shape != (grid.count, grid.k):
        raise UsageError(
            f"expected {grid.count} vectors of dimension {grid.k}, got shape {arr.shape}"
        )
    quantized = np.floor(np.clip(arr, 0.0, 255.0) + 0.5).astype(np.uint8)
    b = grid.block
    padded = (
        quantized.reshape(grid.block_rows, grid.block_cols, b, b)
        .swapaxes(1, 2)
        .reshape(grid.block_rows * b, grid.block_cols * b)
    )
    return pgm_bytes(padded[: grid.height, : grid.width])
