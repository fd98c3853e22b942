"""Command-line interface.

Subcommands bind ingestion, simulation, event conversion, verification,
and reporting into batch workflows. Progress goes to stderr; reports go
to stdout as line-delimited ``key=value``. Exit codes: 0 success,
1 runtime/data error, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import events, ingest, pipeline, sensor, verify
from .types import ConfigError, DataError, FrameSequence

log = logging.getLogger("vid2voxel")

SEED_ENV_VAR = "V2V_SEED"


def _parse_range(text: str, flag: str) -> tuple[float, float]:
    """Parse 'lo:hi' (or a single 'v' meaning v:v) into an ordered pair."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"{flag}: expected 'lo:hi' or 'v', got {text!r}") from exc
    if len(values) == 1:
        return values[0], values[0]
    if len(values) == 2:
        return values[0], values[1]
    raise ConfigError(f"{flag}: expected 'lo:hi' or 'v', got {text!r}")


def _parse_crop(text: str) -> tuple[int, int, int, int]:
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError(f"--crop: expected 't:l:h:w', got {text!r}")
    try:
        top, left, height, width = (int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"--crop: expected integers 't:l:h:w', got {text!r}") from exc
    return top, left, height, width


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"--size: expected 'HxW', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"--size: expected integers 'HxW', got {text!r}") from exc


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    return 0


def _ranges_from_args(args: argparse.Namespace) -> sensor.ParamRanges:
    return sensor.ParamRanges(
        c_plus_range=_parse_range(args.c_pos, "--c-pos"),
        c_minus_range=_parse_range(args.c_neg, "--c-neg"),
        sigma_bg_range=_parse_range(args.sigma_bg, "--sigma-bg"),
        hot_pixel_fraction_range=_parse_range(args.hot_frac, "--hot-frac"),
        hot_pixel_magnitude_range=_parse_range(args.hot_mag, "--hot-mag"),
    )


def _emit(**fields: object) -> None:
    for key, value in fields.items():
        print(f"{key}={value}")


def _load_scenes(args: argparse.Namespace) -> list[tuple[FrameSequence, int, str, str]]:
    """Return (sequence, source_bytes, source_kind, source_path) per scene."""
    if args.input == "-":
        if args.raw_width is None or args.raw_height is None:
            raise ConfigError("raw input needs --raw-width and --raw-height")
        data = sys.stdin.buffer.read()
        import io
        seq = ingest.read_frames_raw(io.BytesIO(data), args.raw_width, args.raw_height,
                                     frame_rate=args.frame_rate, scene_id=args.scene_id)
        return [(seq, len(data), "raw", "-")]
    root = Path(args.input)
    if not root.is_dir():
        raise ConfigError(f"--input: {root} is not a directory")
    if args.raw_width is not None or args.raw_height is not None:
        raw_files = sorted(p for p in root.iterdir() if p.is_file())
        if not raw_files:
            raise DataError(f"{root}: no raw frame files")
        out = []
        for f in raw_files:
            with f.open("rb") as fh:
                seq = ingest.read_frames_raw(fh, args.raw_width, args.raw_height,
                                             frame_rate=args.frame_rate, scene_id=f.stem)
            out.append((seq, f.stat().st_size, "raw", str(f)))
        return out
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    scene_dirs = subdirs if subdirs else [root]
    out = []
    for d in scene_dirs:
        seq = ingest.read_frames_dir(d, frame_rate=args.frame_rate)
        size = sum(p.stat().st_size for p in d.glob("*")
                   if p.is_file() and p.suffix.lower() in ingest.IMAGE_EXTENSIONS)
        out.append((seq, size, "dir", str(d)))
    if not out:
        raise DataError(f"{root}: no scenes found")
    return out


def _window_task(payload: dict) -> str:
    """Simulate one (epoch, scene, window) and write its voxel file.

    Runs in worker processes; everything it needs arrives in the payload
    and the result depends only on the payload, never on scheduling.
    """
    sample = pipeline.build_sample(
        payload["frames"],
        payload["policy"],
        scene_id=payload["scene_id"],
        window_start=payload["window_start"],
        epoch=payload["epoch"],
        global_seed=payload["seed"],
        bins_per_voxel=payload["bins"],
        gamma=payload["gamma"],
        log_eps=payload["log_eps"],
        degrade_prob=payload["degrade_prob"],
        degrade_scale=payload["degrade_scale"],
    )
    n_voxels, bins, height, width = sample.voxels.shape
    stacked = sample.voxels.reshape(n_voxels * bins, height, width)
    out_path = Path(payload["out_path"])
    out_path.parent.mkdir(parents=True, exist_ok=True)
    pipeline.write_voxels(stacked, out_path)
    return str(out_path)


def cmd_simulate(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    ranges = _ranges_from_args(args)
    mode = pipeline.RANDOMIZED if args.policy == "random" else pipeline.FIXED
    policy = pipeline.ParamPolicy(mode=mode, ranges=ranges)
    plan = pipeline.SlicePlan(bins_per_voxel=args.bins,
                              voxels_per_sequence=args.voxels)
    degrade_scale = _parse_range(args.degrade_scale, "--degrade-scale")
    if not 0.0 <= args.degrade_prob <= 1.0:
        raise ConfigError(f"--degrade-prob must be in [0, 1], got {args.degrade_prob}")
    out_root = Path(args.output)
    out_root.mkdir(parents=True, exist_ok=True)

    scenes = _load_scenes(args)
    crop_rect = _parse_crop(args.crop) if args.crop else None

    records = []
    tasks = []
    for seq, source_bytes, kind, source_path in scenes:
        if crop_rect is not None:
            seq = ingest.crop(seq, *crop_rect)
        records.append(pipeline.SceneRecord(
            scene_id=seq.scene_id, frame_count=seq.frame_count, width=seq.width,
            height=seq.height, frame_rate=seq.frame_rate, source_bytes=source_bytes,
            source_kind=kind, source_path=source_path))
        windows = pipeline.plan_slices(seq.frame_count, plan)
        if not windows:
            log.warning("scene %s: %d frames < window length %d, skipped",
                        seq.scene_id, seq.frame_count, plan.window_length)
        for epoch in range(args.epochs):
            epoch_root = out_root / f"epoch_{epoch}" if args.epochs > 1 else out_root
            for idx, (start, end) in enumerate(windows):
                tasks.append({
                    "frames": seq.frames[start:end],
                    "policy": policy,
                    "scene_id": seq.scene_id,
                    "window_start": start,
                    "epoch": epoch,
                    "seed": seed,
                    "bins": args.bins,
                    "gamma": args.gamma,
                    "log_eps": args.log_eps,
                    "degrade_prob": args.degrade_prob,
                    "degrade_scale": degrade_scale,
                    "out_path": str(epoch_root / seq.scene_id / f"{idx}{pipeline.VOXEL_SUFFIX}"),
                })

    t0 = time.monotonic()
    if args.workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            _window_task(task)
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for path in pool.map(_window_task, tasks):
                log.debug("wrote %s", path)
    elapsed = time.monotonic() - t0

    manifest = pipeline.DatasetManifest(scenes=tuple(records))
    manifest_path = out_root / "manifest.json"
    pipeline.write_manifest(manifest, manifest_path)
    log.info("simulated %d windows in %.2fs", len(tasks), elapsed)
    _emit(scenes=len(records), windows=len(tasks) // max(args.epochs, 1),
          epochs=args.epochs, files=len(tasks), manifest=manifest_path)
    return 0


def cmd_convert_events(args: argparse.Namespace) -> int:
    if not (0.0 <= args.t0 < args.t1 <= 1.0):
        raise ConfigError(f"need 0 <= t0 < t1 <= 1, got t0={args.t0}, t1={args.t1}")
    stream = events.read_events(args.events, args.format,
                                width=args.width, height=args.height, sort=args.sort)
    mask = (stream.t >= args.t0)
    # A window ending at 1.0 keeps the final-timestamp events.
    mask &= (stream.t <= args.t1) if args.t1 == 1.0 else (stream.t < args.t1)
    span = args.t1 - args.t0
    windowed = events.EventStream(
        t=(stream.t[mask] - args.t0) / span,
        x=stream.x[mask], y=stream.y[mask], p=stream.p[mask],
        width=stream.width, height=stream.height)
    if args.repr == "discrete":
        voxel = events.discrete_voxel_from_events(windowed, args.bins)
    else:
        voxel = events.interpolated_voxel_from_events(windowed, args.bins)
    pipeline.write_voxels(voxel, args.out)
    _emit(events=len(windowed), bins=args.bins, repr=args.repr, out=args.out)
    return 0


def cmd_oracle_check(args: argparse.Namespace) -> int:
    grid = _parse_size(args.size)
    report = verify.run_oracle_trials(args.regime, args.trials, grid=grid,
                                      n_frames=args.frames, seed=_resolve_seed(args.seed))
    _emit(regime=report.regime, trials=report.trials, events=report.events_total,
          max_deviation=report.max_abs_deviation,
          mismatched_trials=report.mismatched_trials)
    if args.regime == verify.FREE:
        return 0
    return 0 if report.exact else 1


def _print_stats(report: pipeline.StatsReport) -> None:
    _emit(scenes=report.scene_count,
          frames=report.total_frames,
          duration_s=f"{report.duration_seconds:.3f}",
          resolutions=",".join(report.resolutions),
          sequences=report.sequences,
          frames_div_40=f"{report.frames_div_40:.2f}",
          source_bytes=report.source_bytes,
          prestacked_bytes=report.prestacked_bytes,
          ratio=f"{report.source_to_prestacked_ratio:.3g}")


def cmd_stats(args: argparse.Namespace) -> int:
    path = Path(args.manifest)
    if not path.is_file():
        raise ConfigError(f"--manifest: {path} does not exist")
    manifest = pipeline.read_manifest(path)
    plan = pipeline.SlicePlan(bins_per_voxel=args.bins, voxels_per_sequence=args.voxels)
    _print_stats(pipeline.compute_stats(manifest, plan))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    plan = pipeline.SlicePlan(bins_per_voxel=args.bins, voxels_per_sequence=args.voxels)
    policy = pipeline.ParamPolicy(mode=pipeline.RANDOMIZED, ranges=_ranges_from_args(args))
    scenes = _load_scenes(args)

    records = []
    n_windows = 0
    n_voxels = 0
    t0 = time.monotonic()
    for seq, source_bytes, kind, source_path in scenes:
        records.append(pipeline.SceneRecord(
            scene_id=seq.scene_id, frame_count=seq.frame_count, width=seq.width,
            height=seq.height, frame_rate=seq.frame_rate, source_bytes=source_bytes,
            source_kind=kind, source_path=source_path))
        for start, end in pipeline.plan_slices(seq.frame_count, plan):
            pipeline.build_sample(
                seq.frames[start:end], policy, scene_id=seq.scene_id,
                window_start=start, epoch=0, global_seed=seed,
                bins_per_voxel=args.bins, gamma=args.gamma, log_eps=args.log_eps)
            n_windows += 1
            n_voxels += args.voxels
    elapsed = time.monotonic() - t0

    manifest = pipeline.DatasetManifest(scenes=tuple(records))
    report = pipeline.compute_stats(manifest, plan)
    _print_stats(report)
    _emit(windows=n_windows, voxels=n_voxels, elapsed_s=f"{elapsed:.3f}",
          voxels_per_second=f"{n_voxels / elapsed:.1f}" if elapsed > 0 else "inf")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vid2voxel",
        description="Convert video frames directly into event voxel grids; "
                    "convert, verify, and measure event datasets.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="convert frame scenes into voxel files")
    sim.add_argument("--input", required=True,
                     help="scene directory (subdirectories = scenes) or '-' for raw stdin")
    sim.add_argument("--output", required=True, help="output dataset directory")
    sim.add_argument("--raw-width", type=int, default=None)
    sim.add_argument("--raw-height", type=int, default=None)
    sim.add_argument("--scene-id", default="stdin", help="scene name for raw stdin input")
    sim.add_argument("--bins", type=int, default=5)
    sim.add_argument("--voxels", type=int, default=40)
    sim.add_argument("--epochs", type=int, default=1)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--policy", choices=("random", "fixed"), default="random")
    sim.add_argument("--c-pos", default="0.1:1.0")
    sim.add_argument("--c-neg", default="0.1:1.0")
    sim.add_argument("--sigma-bg", default="0:0.05")
    sim.add_argument("--hot-frac", default="0:0.0005")
    sim.add_argument("--hot-mag", default="0.1:1.0")
    sim.add_argument("--gamma", type=float, default=sensor.DEFAULT_GAMMA)
    sim.add_argument("--log-eps", type=float, default=sensor.DEFAULT_LOG_EPS)
    sim.add_argument("--crop", default=None, help="t:l:h:w rectangle applied to all frames")
    sim.add_argument("--degrade-prob", type=float, default=0.0)
    sim.add_argument("--degrade-scale", default="1:3")
    sim.add_argument("--frame-rate", type=float, default=30.0)
    sim.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sim.set_defaults(func=cmd_simulate)

    conv = sub.add_parser("convert-events", help="bin an event stream file into a voxel file")
    conv.add_argument("--events", required=True)
    conv.add_argument("--format", choices=(events.TEXT_FORMAT, events.BINARY_FORMAT),
                      default=events.TEXT_FORMAT)
    conv.add_argument("--bins", type=int, default=5)
    conv.add_argument("--repr", choices=("discrete", "interpolated"), default="discrete")
    conv.add_argument("--t0", type=float, default=0.0)
    conv.add_argument("--t1", type=float, default=1.0)
    conv.add_argument("--width", type=int, default=None)
    conv.add_argument("--height", type=int, default=None)
    conv.add_argument("--sort", action="store_true",
                      help="sort unsorted input instead of rejecting it")
    conv.add_argument("--out", required=True)
    conv.set_defaults(func=cmd_convert_events)

    oc = sub.add_parser("oracle-check",
                        help="randomized agreement trials against the event-stream oracle")
    oc.add_argument("--trials", type=int, default=1000)
    oc.add_argument("--seed", type=int, default=None)
    oc.add_argument("--size", default="8x8")
    oc.add_argument("--frames", type=int, default=6)
    oc.add_argument("--regime", choices=verify.REGIMES, default=verify.EQUAL_THRESHOLDS)
    oc.set_defaults(func=cmd_oracle_check)

    st = sub.add_parser("stats", help="dataset statistics from a manifest")
    st.add_argument("--manifest", required=True)
    st.add_argument("--bins", type=int, default=5)
    st.add_argument("--voxels", type=int, default=40)
    st.set_defaults(func=cmd_stats)

    bench = sub.add_parser("bench", help="measure conversion throughput and storage")
    bench.add_argument("--input", required=True)
    bench.add_argument("--raw-width", type=int, default=None)
    bench.add_argument("--raw-height", type=int, default=None)
    bench.add_argument("--bins", type=int, default=5)
    bench.add_argument("--voxels", type=int, default=40)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--c-pos", default="0.1:1.0")
    bench.add_argument("--c-neg", default="0.1:1.0")
    bench.add_argument("--sigma-bg", default="0:0.05")
    bench.add_argument("--hot-frac", default="0:0.0005")
    bench.add_argument("--hot-mag", default="0.1:1.0")
    bench.add_argument("--gamma", type=float, default=sensor.DEFAULT_GAMMA)
    bench.add_argument("--log-eps", type=float, default=sensor.DEFAULT_LOG_EPS)
    bench.add_argument("--frame-rate", type=float, default=30.0)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
