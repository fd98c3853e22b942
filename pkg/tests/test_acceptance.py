"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each criterion prints a PASS/FAIL line on the real stderr stream so the
verdicts are visible under any pytest capture mode; run with
``pytest tests/test_acceptance.py -v`` for the per-test breakdown.
"""

import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from vid2voxel import events, ingest, pipeline, sensor, verify
from vid2voxel.types import EventStream, HotPixelMap, SensorParams

SEED = 20260810
ORACLE_TIME_BUDGET_S = 10.0


@contextmanager
def reported(name):
    try:
        yield
    except BaseException:
        print(f"FAIL  {name}", file=sys.__stderr__)
        raise
    print(f"PASS  {name}", file=sys.__stderr__)


def run_cli(*argv, stdin=None):
    return subprocess.run([sys.executable, "-m", "vid2voxel", *map(str, argv)],
                          input=stdin, capture_output=True)


def kv(stdout: bytes) -> dict:
    fields = {}
    for line in stdout.decode().splitlines():
        if "=" in line:
            key, _, value = line.partition("=")
            fields[key] = value
    return fields


def make_corpus(root: Path, scenes=3, frames=15, height=16, width=20, seed=5):
    rng = np.random.default_rng(seed)
    for s in range(scenes):
        d = root / f"scene_{s}"
        d.mkdir(parents=True)
        for i in range(frames):
            Image.fromarray(rng.integers(0, 256, (height, width)).astype(np.uint8),
                            mode="L").save(d / f"{i:04d}.png")


def tree_bytes(root: Path) -> dict:
    return {p.relative_to(root): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_oracle_exactness_equal_thresholds():
    with reported("oracle exactness, equal thresholds (1000 trials, zero deviation)"):
        t0 = time.monotonic()
        report = verify.run_oracle_trials(verify.EQUAL_THRESHOLDS, 1000,
                                          grid=(8, 8), n_frames=6, seed=SEED)
        elapsed = time.monotonic() - t0
        assert report.max_abs_deviation == 0
        assert report.mismatched_trials == 0
        assert report.events_total > 0
        assert elapsed < ORACLE_TIME_BUDGET_S


def test_oracle_exactness_monotonic_regime():
    with reported("oracle exactness, monotonic regime (1000 trials, zero deviation)"):
        t0 = time.monotonic()
        report = verify.run_oracle_trials(verify.MONOTONIC, 1000,
                                          grid=(8, 8), n_frames=6, seed=SEED)
        elapsed = time.monotonic() - t0
        assert report.max_abs_deviation == 0
        assert report.mismatched_trials == 0
        assert elapsed < ORACLE_TIME_BUDGET_S


def test_free_regime_reports_deviation():
    with reported("free regime harness completes and reports max deviation"):
        report = verify.run_oracle_trials(verify.FREE, 1000,
                                          grid=(8, 8), n_frames=6, seed=SEED)
        assert report.trials == 1000
        assert report.max_abs_deviation >= 0  # informational, no bound asserted


def test_conservation_on_random_events():
    with reported("conservation: discrete exact, interpolated within 1e-9 x count "
                  "(10^5 events)"):
        rng = np.random.default_rng(SEED)
        n = 100_000
        width = height = 16
        stream = EventStream(
            t=np.sort(rng.uniform(0.0, 1.0, n)),
            x=rng.integers(0, width, n),
            y=rng.integers(0, height, n),
            p=rng.choice(np.array([-1, 1], dtype=np.int8), n),
            width=width, height=height)
        net = stream.net_polarity()
        counts = np.zeros((height, width), dtype=np.int64)
        np.add.at(counts, (stream.y, stream.x), 1)

        disc = events.discrete_voxel_from_events(stream, bins=5)
        assert np.array_equal(disc.data.sum(axis=0), net)

        intp = events.interpolated_voxel_from_events(stream, bins=5)
        err = np.abs(intp.data.sum(axis=0) - net)
        assert np.all(err <= 1e-9 * np.maximum(counts, 1))


def test_telescoping_conservation():
    with reported("telescoping: fired thresholds + residual change equal total "
                  "log change within 1e-9 x steps (100 sequences)"):
        rng = np.random.default_rng(SEED)
        for _ in range(100):
            height, width = 4, 5
            n_steps = int(rng.integers(1, 21))
            c_plus = float(rng.uniform(0.05, 1.0))
            c_minus = float(rng.uniform(0.05, 1.0))
            params = SensorParams(c_plus=c_plus, c_minus=c_minus, sigma_bg=0.0,
                                  hot_pixels=HotPixelMap.empty(width, height))
            logs = np.cumsum(rng.uniform(-1.0, 1.0, (n_steps + 1, height, width)),
                             axis=0)
            residual = rng.uniform(-c_minus, c_plus, (height, width))
            initial = residual.copy()
            fired = np.zeros((height, width))
            for i in range(n_steps):
                n_plus, n_minus, residual = sensor.step(
                    residual, logs[i + 1] - logs[i], params)
                fired += c_plus * n_plus - c_minus * n_minus
            lhs = fired + residual - initial
            rhs = logs[-1] - logs[0]
            assert np.all(np.abs(lhs - rhs) <= 1e-9 * n_steps)


def test_worker_count_determinism(tmp_path):
    with reported("determinism: simulate with workers 1/4/8 on a 3-scene corpus "
                  "is byte-identical"):
        make_corpus(tmp_path / "scenes")
        trees = []
        for workers in (1, 4, 8):
            out = tmp_path / f"out_{workers}"
            result = run_cli("simulate", "--input", tmp_path / "scenes",
                             "--output", out, "--bins", 2, "--voxels", 3,
                             "--epochs", 2, "--seed", SEED, "--workers", workers)
            assert result.returncode == 0, result.stderr.decode()
            trees.append(tree_bytes(out))
        assert trees[0] == trees[1] == trees[2]
        assert len(trees[0]) > 1


def test_fixed_vs_random_policy(tmp_path):
    with reported("policy: fixed mode bitwise-equal across epochs, randomized mode "
                  "draws distinct parameters"):
        make_corpus(tmp_path / "scenes", scenes=1)

        out_fixed = tmp_path / "fixed"
        result = run_cli("simulate", "--input", tmp_path / "scenes", "--output",
                         out_fixed, "--bins", 2, "--voxels", 3, "--epochs", 2,
                         "--seed", SEED, "--policy", "fixed", "--workers", 1)
        assert result.returncode == 0, result.stderr.decode()
        epoch0 = tree_bytes(out_fixed / "epoch_0")
        epoch1 = tree_bytes(out_fixed / "epoch_1")
        assert epoch0 == epoch1 and len(epoch0) == 2

        out_rand = tmp_path / "rand"
        result = run_cli("simulate", "--input", tmp_path / "scenes", "--output",
                         out_rand, "--bins", 2, "--voxels", 3, "--epochs", 2,
                         "--seed", SEED, "--policy", "random", "--workers", 1)
        assert result.returncode == 0
        assert tree_bytes(out_rand / "epoch_0") != tree_bytes(out_rand / "epoch_1")

        policy = pipeline.ParamPolicy(mode=pipeline.RANDOMIZED)
        draws = [pipeline.params_for_scene(policy, "scene_0", epoch, (16, 20), SEED)
                 for epoch in range(5)]
        c_values = {(p.c_plus, p.c_minus, p.sigma_bg) for p in draws}
        assert len(c_values) == 5


def test_storage_arithmetic(tmp_path):
    with reported("storage: one 201-frame 180x596 sequence prestacks to exactly "
                  "85,824,000 bytes (~45:1 vs per-video source average)"):
        raw_dir = tmp_path / "raw"
        raw_dir.mkdir()
        (raw_dir / "scene.raw").write_bytes(bytes([128]) * (201 * 180 * 596))
        result = run_cli("bench", "--input", raw_dir, "--raw-width", 596,
                         "--raw-height", 180, "--bins", 5, "--voxels", 40,
                         "--seed", SEED, "--sigma-bg", "0:0", "--hot-frac", "0")
        assert result.returncode == 0, result.stderr.decode()
        fields = kv(result.stdout)
        assert int(fields["prestacked_bytes"]) == 85_824_000
        assert int(fields["windows"]) == 1

        # Desk-scale restatement of the storage argument: prestacked voxels
        # for one sequence vs the per-video source average of a 10,000-video
        # 19.14 GB corpus. The headline 150x full-dataset figure is codec-
        # and environment-dependent: report-only, never asserted.
        per_video_source = 19.14e9 / 10_000
        ratio = 85_824_000 / per_video_source
        assert round(ratio) == 45
        assert ratio == pytest.approx(44.84, abs=0.05)


def test_degradation_identity_and_clipping():
    with reported("degradation: scale 1 is the identity on all 256 levels; "
                  "200 at scale 2 clips to 255"):
        levels = np.arange(256, dtype=np.uint8).reshape(16, 16)
        assert np.array_equal(ingest.degrade_dynamic_range(levels, 1.0), levels)
        assert ingest.degrade_dynamic_range(
            np.array([[200]], dtype=np.uint8), 2.0)[0, 0] == 255
