"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Run with ``pytest tests/test_acceptance.py -v -s``.

Expected values are frozen from independent oracles computed here (brute
force scans, a reference Lloyd refinement) rather than from the
implementation under test.
"""

import math
import time

import numpy as np
import psutil
import pytest

from vqkit import (
    AmdahlParams,
    Codebook,
    FormatError,
    LbgConfig,
    TrainingSet,
    amdahl_speedup,
    assign_cells,
    decode,
    encode,
    lbg_train,
    load_codebook,
    load_encoded,
    nearest_codevector,
    parallel_lbg_train,
    parse_pgm,
    partition_training,
    pgm_bytes,
    pixels_to_blocks,
    rate,
    reconstruction_distortion,
    save_codebook,
    save_encoded,
)


def _report(number, description):
    print(f"ACCEPTANCE {number:02d} PASS - {description}", flush=True)


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def oracle_nearest(x, rows):
    best, best_d = 0, math.inf
    for i, row in enumerate(rows):
        d = 0.0
        for a, b in zip(x, row):
            diff = float(a) - float(b)
            d += diff * diff
        if d < best_d:
            best, best_d = i, d
    return best, best_d


def reference_two_level_lloyd(data, delta):
    """Independent check of the hand trace: split the mean once, then run
    plain numpy Lloyd iterations to a fixpoint."""
    data = np.asarray(data, dtype=np.float64)
    mean = data.mean(axis=0)
    rows = np.stack([mean + delta, mean - delta])
    for _ in range(50):
        d2 = ((data[:, None, :] - rows[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_rows = np.stack(
            [data[labels == i].mean(axis=0) if (labels == i).any() else rows[i]
             for i in range(2)]
        )
        if np.array_equal(new_rows, rows):
            break
        rows = new_rows
    d2 = ((data[:, None, :] - rows[None, :, :]) ** 2).sum(axis=2)
    return rows, float(d2.min(axis=1).sum())


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_oracle_equivalence_across_worker_counts(tmp_path):
    """Parallel training is byte-identical to the sequential trainer for
    P in {1, 2, 4, 8} on 2000 seeded vectors."""
    started = time.perf_counter()
    rng = np.random.default_rng(42)
    ts = TrainingSet(rng.random((2000, 8)))
    seq_cb, seq_stats = lbg_train(ts, LbgConfig(target_size=64))
    seq_path = tmp_path / "sequential.vqcb"
    save_codebook(seq_cb, "squared_euclidean", seq_path)
    reference_bytes = seq_path.read_bytes()
    for workers in (1, 2, 4, 8):
        cb, stats = parallel_lbg_train(ts, LbgConfig(target_size=64, workers=workers))
        par_path = tmp_path / f"parallel-{workers}.vqcb"
        save_codebook(cb, "squared_euclidean", par_path)
        assert par_path.read_bytes() == reference_bytes, f"codebook file differs at P={workers}"
        assert stats.td_history() == seq_stats.td_history(), f"TD history differs at P={workers}"
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"
    _report(1, f"bit-identical codebooks and TD histories for P in {{1,2,4,8}} ({elapsed:.1f}s)")


def test_criterion_02_worked_trace_regression():
    """The four-vector hand trace, cross-checked by an independent Lloyd
    refinement before trusting the frozen values."""
    data = [[0.0, 0.0], [0.0, 1.0], [4.0, 0.0], [4.0, 1.0]]
    ref_rows, ref_td = reference_two_level_lloyd(data, delta=0.5)
    assert sorted(ref_rows.tolist()) == [[0.0, 0.5], [4.0, 0.5]]
    assert ref_td == 1.0

    cb, stats = lbg_train(
        TrainingSet(np.asarray(data)), LbgConfig(target_size=2, epsilon=1e-3, delta=0.5)
    )
    assert cb.codevectors.tolist() == [[4.0, 0.5], [0.0, 0.5]]
    assert stats.total == 1.0
    _report(2, "hand trace reproduces codebook {(4,0.5),(0,0.5)} with TD exactly 1.0")


def test_criterion_03_amdahl_reproduction():
    value = amdahl_speedup(AmdahlParams(serial_fraction=0.15, processors=4))
    assert abs(value - 2.76) <= 0.005
    _report(3, f"amdahl_speedup(0.15, 4) = {value:.4f} (target 2.76 +/- 0.005)")


def test_criterion_04_distortion_monotonicity_suite():
    """Within every codebook level, TD never increases (squared metric)."""
    started = time.perf_counter()
    rng = np.random.default_rng(20240)
    checks = 0
    for _ in range(50):
        m = int(rng.integers(2, 501))
        k = int(rng.integers(1, 11))
        target = int(2 ** rng.integers(1, 7))  # 2..64
        ts = TrainingSet(rng.random((m, k)))
        _, stats = lbg_train(ts, LbgConfig(target_size=target))
        by_level = {}
        for h in stats.history:
            by_level.setdefault(h.codebook_size, []).append(h.td)
        for tds in by_level.values():
            for prev, cur in zip(tds, tds[1:]):
                assert cur <= prev * (1.0 + 1e-9), f"TD rose {prev} -> {cur}"
                checks += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"took {elapsed:.1f}s, budget 30s"
    _report(4, f"TD non-increasing across {checks} iteration pairs in 50 instances ({elapsed:.1f}s)")


def test_criterion_05_nearest_neighbour_oracle():
    """1000 random queries match an exhaustive scan, plus constructed ties."""
    rng = np.random.default_rng(515)
    queries = 0
    for _ in range(20):
        size = int(rng.integers(1, 65))
        k = int(rng.integers(1, 9))
        rows = rng.normal(size=(size, k))
        cb = Codebook(rows)
        for _ in range(50):
            x = rng.normal(size=k)
            assert nearest_codevector(x, cb) == oracle_nearest(x, rows)
            queries += 1
    assert queries == 1000

    # constructed ties: duplicated rows and mirrored rows resolve to the lowest index
    dup = Codebook([(3.0, 3.0), (1.0, 2.0), (1.0, 2.0)])
    assert nearest_codevector((1.0, 2.0), dup)[0] == 1
    mirror = Codebook([(9.0, 9.0), (1.0, 0.0), (-1.0, 0.0)])
    assert nearest_codevector((0.0, 0.0), mirror) == (1, 1.0)
    _report(5, "1000 random queries + tie fixtures match the exhaustive scan exactly")


def test_criterion_06_structural_invariants():
    """Codebook sizes, cell-table ranges, and partition shapes, randomized."""
    rng = np.random.default_rng(606)
    for _ in range(25):
        m = int(rng.integers(1, 400))
        p = int(rng.integers(1, 17))
        plan = partition_training(m, p)
        sizes = [hi - lo for lo, hi in plan.ranges]
        assert sum(sizes) == m and len(sizes) == p
        assert max(sizes) - min(sizes) <= 1
        cursor = 0
        for lo, hi in plan.ranges:
            assert lo == cursor
            cursor = hi

    for _ in range(10):
        m = int(rng.integers(4, 200))
        k = int(rng.integers(1, 6))
        target = int(2 ** rng.integers(0, 6))
        workers = int(rng.integers(1, 7))
        ts = TrainingSet(rng.random((m, k)))
        cb, stats = parallel_lbg_train(ts, LbgConfig(target_size=target, workers=workers))
        assert cb.size == target
        levels = [h.codebook_size for h in stats.history]
        expected = [2 ** t for t in range(1, target.bit_length())]
        assert sorted(set(levels)) == expected  # exactly the powers of two up to N
        assert levels == sorted(levels)
        table, _ = assign_cells(ts, cb)
        assert int(table.cells.max()) < cb.size
        assert int(table.cells.min()) >= 0
    _report(6, "level sizes are exact powers of two; cell and partition ranges hold")


def test_criterion_07_codec_roundtrip_optimality():
    """decode(encode(X)) is the brute-force nearest row and beats sampled
    alternative assignments."""
    rng = np.random.default_rng(707)
    ts = TrainingSet(rng.random((120, 5)))
    cb, _ = lbg_train(ts, LbgConfig(target_size=16))
    data = rng.random((40, 5))
    stream = encode(data, cb)
    reconstructed = decode(stream, cb)
    for j, x in enumerate(data):
        idx, _ = oracle_nearest(x, cb.codevectors)
        assert stream.indices[j] == idx
        assert reconstructed[j].tolist() == cb.codevectors[idx].tolist()
    best_total, _ = reconstruction_distortion(data, reconstructed)
    for _ in range(100):
        alternative = rng.integers(0, cb.size, size=len(data))
        alt_total, _ = reconstruction_distortion(data, cb.codevectors[alternative])
        assert best_total <= alt_total
    _report(7, "roundtrip rows equal brute-force nearest; no sampled assignment beats it")


def test_criterion_08_rate_formula():
    assert rate(128, 10).bits_per_sample == 0.7
    assert rate(256, 16).bits_per_sample == 0.5
    _report(8, "rate(128,10) = 0.7 and rate(256,16) = 0.5 bits/sample exactly")


def test_criterion_09_file_formats(tmp_path):
    rng = np.random.default_rng(909)
    cb = Codebook(rng.normal(size=(8, 6)))
    cb_path = tmp_path / "cb.vqcb"
    save_codebook(cb, "squared_euclidean", cb_path)
    loaded, metric = load_codebook(cb_path)
    assert loaded.codevectors.tobytes() == cb.codevectors.tobytes()
    assert metric == "squared_euclidean"

    stream = encode(rng.normal(size=(25, 6)), cb)
    en_path = tmp_path / "data.vqen"
    save_encoded(stream, en_path)
    assert load_encoded(en_path).indices.tobytes() == stream.indices.tobytes()

    bad_magic = tmp_path / "bad.vqcb"
    bad_magic.write_bytes(b"XXXX" + cb_path.read_bytes()[4:])
    with pytest.raises(FormatError):
        load_codebook(bad_magic)
    truncated = tmp_path / "trunc.vqen"
    truncated.write_bytes(en_path.read_bytes()[:-3])
    with pytest.raises(FormatError):
        load_encoded(truncated)
    _report(9, "save/load round-trips are bit-exact; corrupt fixtures raise FormatError")


def test_criterion_10_benchmark_trend():
    """Wall-time speedup from threading on a multi-core host: P=4 must reach
    1.5x on >= 4 physical cores, P=2 must reach 1.2x on 2-3 cores.  A
    single-core host cannot exhibit a speedup, so the criterion's hardware
    precondition is unmet and the check is skipped."""
    cores = psutil.cpu_count(logical=False) or 1
    if cores < 2:
        pytest.skip(
            f"benchmark trend needs >= 2 physical cores (host has {cores}); "
            f"criterion downgrade path P=2 is unmeasurable on a single core"
        )
    workers, floor = (4, 1.5) if cores >= 4 else (2, 1.2)
    started = time.perf_counter()
    rng = np.random.default_rng(42)
    ts = TrainingSet(rng.random((2000, 10)))

    def best_seconds(p, repeats=3):
        config = LbgConfig(target_size=128, workers=p)
        parallel_lbg_train(ts, config)  # warm-up, untimed
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            parallel_lbg_train(ts, config)
            best = min(best, time.perf_counter() - t0)
        return best

    t1 = best_seconds(1)
    tp = best_seconds(workers)
    speedup = t1 / tp
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0, f"took {elapsed:.1f}s, budget 2min"
    assert tp < t1, f"P={workers} ({tp:.3f}s) not faster than P=1 ({t1:.3f}s)"
    assert speedup >= floor, f"speedup {speedup:.2f} below the {floor} floor"
    _report(10, f"P={workers} speedup {speedup:.2f}x over P=1 (floor {floor})")


def test_criterion_11_image_pipeline_smoke():
    """64x64 gradient, 4x4 blocks, 32 codevectors: quality must beat the
    1-codevector codebook."""
    started = time.perf_counter()
    x = np.arange(64, dtype=np.float64)
    gradient = np.floor((x + x[:, None]) * 255.0 / 126.0 + 0.5).astype(np.uint8)
    pgm = pgm_bytes(gradient)

    vectors, grid = pixels_to_blocks(parse_pgm(pgm), 4)
    assert grid.k == 16
    ts = TrainingSet(vectors)

    def roundtrip_mae(target_size):
        cb, _ = lbg_train(ts, LbgConfig(target_size=target_size))
        from vqkit import blocks_to_image

        reconstructed = decode(encode(vectors, cb), cb)
        out = parse_pgm(blocks_to_image(reconstructed, grid))
        assert out.shape == gradient.shape
        return float(np.abs(out.astype(np.float64) - gradient.astype(np.float64)).mean())

    mae_32 = roundtrip_mae(32)
    mae_1 = roundtrip_mae(1)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"took {elapsed:.1f}s, budget 10s"
    assert mae_32 < mae_1, f"32-codevector MAE {mae_32:.3f} not below 1-codevector {mae_1:.3f}"
    _report(11, f"image roundtrip ok; MAE {mae_32:.2f} (N=32) < {mae_1:.2f} (N=1)")
