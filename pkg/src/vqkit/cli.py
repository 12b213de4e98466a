"""Command-line front end.

Exit codes are a stable scripting contract: 0 success, 1 usage error,
2 data/format error.  The default worker count is the number of physical
cores, overridable by --threads or the VQ_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

from .bench import (
    DEFAULT_REPEATS,
    DEFAULT_SERIAL_FRACTION,
    DEFAULT_SIZES,
    DEFAULT_THREADS,
    run_sweep,
    speedup_report,
    synthetic_training_set,
    write_bench_csv,
)
from .codec import decode, encode, rate, reconstruction_distortion
from .core import EUCLIDEAN, SQUARED_EUCLIDEAN, LbgConfig, TrainingSet
from .errors import DomainError, FormatError, InternalError, UsageError
from .parallel import parallel_lbg_train
from .storage import (
    BlockGrid,
    blocks_to_image,
    image_to_blocks,
    load_codebook,
    load_encoded,
    load_training_csv,
    save_codebook,
    save_encoded,
    save_vectors_csv,
)

HISTORY_CSV_HEADER = "level_size,iteration,td,empty_cells,seconds"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def detect_workers() -> int:
    env = os.environ.get("VQ_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"VQ_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise UsageError(f"VQ_THREADS must be >= 1, got {value}")
        return value
    try:
        import psutil

        physical = psutil.cpu_count(logical=False)
    except ImportError:
        physical = None
    return physical or os.cpu_count() or 1


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        return args.threads
    return detect_workers()


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects a comma-separated integer list, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} must name at least one value")
    return values


def _train_config(args, workers: int) -> LbgConfig:
    return LbgConfig(
        target_size=args.codebook_size,
        epsilon=args.epsilon,
        delta=args.delta,
        workers=workers,
        max_iterations_per_level=args.max_iters,
        distortion_metric=args.metric,
    )


def _write_history(stats, path) -> None:
    lines = [HISTORY_CSV_HEADER]
    for h in stats.history:
        lines.append(
            f"{h.codebook_size},{h.iteration},{h.td!r},{h.empty_cells},{h.seconds:.6f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _print_train_summary(codebook, stats, metric, elapsed) -> None:
    report = rate(codebook.size, codebook.k)
    print(
        f"trained {codebook.size}-codevector codebook "
        f"(dimension {codebook.k}, metric {metric}) in {elapsed:.3f}s"
    )
    print(f"final distortion: total {stats.total:.6g}, mean {stats.mean:.6g} per vector")
    print(
        f"rate: {report.bits_per_vector:g} bits/vector, "
        f"{report.bits_per_sample:g} bits/sample, "
        f"compression {report.compression_ratio:.2f}x vs 64-bit samples"
    )
    for warning in stats.warnings:
        print(f"warning: {warning}", file=sys.stderr)


def cmd_train(args) -> int:
    workers = _resolve_threads(args)
    ts = load_training_csv(args.input)
    config = _train_config(args, workers)
    start = time.perf_counter()
    codebook, stats = parallel_lbg_train(ts, config)
    elapsed = time.perf_counter() - start
    save_codebook(codebook, args.metric, args.out)
    if args.history:
        _write_history(stats, args.history)
    print(f"trained on {ts.m} vectors with {workers} worker(s)")
    _print_train_summary(codebook, stats, args.metric, elapsed)
    print(f"codebook written to {args.out}")
    return 0


def cmd_encode(args) -> int:
    workers = _resolve_threads(args)
    ts = load_training_csv(args.input)
    codebook, _ = load_codebook(args.codebook)
    stream = encode(ts, codebook, workers=workers)
    save_encoded(stream, args.out)
    print(
        f"encoded {len(stream)} vectors against {codebook.size} codevectors "
        f"-> {args.out}"
    )
    return 0


def cmd_decode(args) -> int:
    stream = load_encoded(args.input)
    codebook, _ = load_codebook(args.codebook)
    rows = decode(stream, codebook)
    save_vectors_csv(rows, args.out)
    print(f"decoded {len(stream)} vectors -> {args.out}")
    return 0


def cmd_rate(args) -> int:
    codebook, metric = load_codebook(args.codebook)
    report = rate(codebook.size, codebook.k)
    print(f"codebook: {codebook.size} codevectors, dimension {codebook.k}, metric {metric}")
    print(f"{report.bits_per_vector:g} bits/vector")
    print(f"{report.bits_per_sample:g} bits/sample")
    print(f"compression {report.compression_ratio:.2f}x vs 64-bit samples")
    return 0


def cmd_image_train(args) -> int:
    workers = _resolve_threads(args)
    vectors, grid = image_to_blocks(args.image, args.block)
    ts = TrainingSet(vectors)
    config = _train_config(args, workers)
    start = time.perf_counter()
    codebook, stats = parallel_lbg_train(ts, config)
    elapsed = time.perf_counter() - start
    save_codebook(codebook, args.metric, args.out)
    if args.history:
        _write_history(stats, args.history)
    print(
        f"vectorized {grid.width}x{grid.height} image into {grid.count} "
        f"{args.block}x{args.block} blocks"
    )
    _print_train_summary(codebook, stats, args.metric, elapsed)
    print(f"codebook written to {args.out}")
    return 0


def _block_side(codebook) -> int:
    side = math.isqrt(codebook.k)
    if side * side != codebook.k:
        raise UsageError(
            f"codebook dimension {codebook.k} is not a square; "
            f"it cannot encode image blocks"
        )
    return side


def cmd_image_encode(args) -> int:
    codebook, metric = load_codebook(args.codebook)
    side = _block_side(codebook)
    vectors, grid = image_to_blocks(args.image, side)
    stream = encode(vectors, codebook)
    save_encoded(stream, args.out)
    print(
        f"encoded {grid.width}x{grid.height} image as {grid.count} blocks "
        f"(block {side}, codebook {codebook.size}) -> {args.out}"
    )
    print(f"decode with: --width {grid.width} --height {grid.height}")
    if args.report:
        reconstructed = decode(stream, codebook)
        total, mean = reconstruction_distortion(vectors, reconstructed, metric)
        print(
            f"reconstruction distortion ({metric}): total {total:.6g}, "
            f"mean {mean:.6g} per block"
        )
    return 0


def cmd_image_decode(args) -> int:
    stream = load_encoded(args.input)
    codebook, _ = load_codebook(args.codebook)
    side = _block_side(codebook)
    grid = BlockGrid(width=args.width, height=args.height, block=side)
    if grid.count != len(stream):
        raise UsageError(
            f"stream holds {len(stream)} blocks but a {args.width}x{args.height} "
            f"image with block {side} needs {grid.count}"
        )
    rows = decode(stream, codebook)
    Path(args.out).write_bytes(blocks_to_image(rows, grid))
    print(f"decoded {args.width}x{args.height} image -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    if args.input:
        ts = load_training_csv(args.input)
        source = f"input={args.input}"
    else:
        parts = _parse_int_list(args.synthetic, "--synthetic")
        if len(parts) != 3:
            raise UsageError(f"--synthetic expects M,k,seed, got {args.synthetic!r}")
        m, k, seed = parts
        ts = synthetic_training_set(m, k, seed)
        source = f"synthetic m={m} k={k} seed={seed}"
    sizes = _parse_int_list(args.sizes, "--sizes")
    threads = _parse_int_list(args.threads, "--threads")
    repeats = args.repeats

    def progress(record):
        print(
            f"N={record.codebook_size} P={record.workers}: "
            f"{record.seconds:.4f}s, td {record.td:.6g}, "
            f"{record.iterations} iterations"
        )

    records = run_sweep(
        ts,
        sizes=sizes,
        thread_counts=threads,
        repeats=repeats,
        epsilon=args.epsilon,
        delta=args.delta,
        metric=args.metric,
        max_iterations=args.max_iters,
        progress=progress,
    )
    comment = f"{source} repeats={repeats} metric={args.metric} min-of-repeats wall seconds"
    write_bench_csv(records, args.out, comment)
    for line in speedup_report(records, args.serial_fraction):
        print(line)
    print(f"benchmark CSV written to {args.out}")
    return 0


def _add_train_flags(parser) -> None:
    parser.add_argument("--codebook-size", type=int, required=True,
                        help="target number of codevectors (power of two)")
    parser.add_argument("--epsilon", type=float, default=1e-3,
                        help="relative distortion-improvement threshold (default 0.001)")
    parser.add_argument("--delta", type=float, default=0.01,
                        help="codebook split offset (default 0.01)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker count (default: VQ_THREADS or physical cores)")
    parser.add_argument("--metric", choices=[SQUARED_EUCLIDEAN, EUCLIDEAN],
                        default=SQUARED_EUCLIDEAN, help="distortion metric")
    parser.add_argument("--max-iters", type=int, default=100,
                        help="iteration guard per codebook level (default 100)")
    parser.add_argument("--out", required=True, help="output codebook file")
    parser.add_argument("--history", default=None,
                        help="optional per-iteration history CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vq", description="Vector-quantization toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("train",
                       help="train a codebook from CSV training vectors")
    p.add_argument("--input", required=True, help="training CSV (one vector per row)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("encode",
                       help="quantize CSV vectors to codevector indices")
    p.add_argument("--input", required=True, help="data CSV")
    p.add_argument("--codebook", required=True, help="codebook file")
    p.add_argument("--threads", type=int, default=None, help="worker count")
    p.add_argument("--out", required=True, help="output encoded stream")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode",
                       help="reconstruct vectors from an encoded stream")
    p.add_argument("--input", required=True, help="encoded stream file")
    p.add_argument("--codebook", required=True, help="codebook file")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("rate",
                       help="report bits/vector, bits/sample, compression ratio")
    p.add_argument("--codebook", required=True, help="codebook file")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("image-train",
                       help="train a codebook on image blocks")
    p.add_argument("--image", required=True, help="binary PGM (P5) image")
    p.add_argument("--block", type=int, required=True, help="block side b (vectors are b*b)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_image_train)

    p = sub.add_parser("image-encode",
                       help="quantize an image with a block codebook")
    p.add_argument("--image", required=True, help="binary PGM (P5) image")
    p.add_argument("--codebook", required=True, help="codebook file (square block dimension)")
    p.add_argument("--out", required=True, help="output encoded stream")
    p.add_argument("--report", action="store_true",
                   help="also print reconstruction distortion")
    p.set_defaults(func=cmd_image_encode)

    p = sub.add_parser("image-decode",
                       help="reconstruct a PGM image from an encoded stream")
    p.add_argument("--input", required=True, help="encoded stream file")
    p.add_argument("--codebook", required=True, help="codebook file")
    p.add_argument("--width", type=int, required=True, help="original image width")
    p.add_argument("--height", type=int, required=True, help="original image height")
    p.add_argument("--out", required=True, help="output PGM file")
    p.set_defaults(func=cmd_image_decode)

    p = sub.add_parser("bench",
                       help="sweep codebook sizes and worker counts, write timing CSV")
    p.add_argument("--input", default=None, help="training CSV (overrides --synthetic)")
    p.add_argument("--synthetic", default="2000,10,42",
                   help="M,k,seed for generated uniform data (default 2000,10,42)")
    p.add_argument("--sizes", default=",".join(str(s) for s in DEFAULT_SIZES),
                   help="comma-separated codebook sizes")
    p.add_argument("--threads", default=",".join(str(t) for t in DEFAULT_THREADS),
                   help="comma-separated worker counts")
    p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS,
                   help="repeats per cell; minimum wall time is reported")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--metric", choices=[SQUARED_EUCLIDEAN, EUCLIDEAN],
                   default=SQUARED_EUCLIDEAN)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--serial-fraction", type=float, default=DEFAULT_SERIAL_FRACTION,
                   help="serial fraction for the Amdahl comparison (default 0.15)")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, DomainError, InternalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
