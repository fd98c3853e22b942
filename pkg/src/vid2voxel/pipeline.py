"""Dataset assembly: slicing, parameter policy, serialization, statistics.

A training sequence (one sample) consumes ``V * B + 1`` frames: V voxels
of B bins each, with the boundary frame between consecutive voxels
shared. The window arithmetic, RNG keying, and output naming depend only
on (scene, window index, epoch), so windows can be processed in any
order on any number of workers with identical results.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from . import ingest, sensor
from .rng import RngKey, StreamTag, derive_rng, scene_hash
from .types import (
    ConfigError,
    DataError,
    DiscreteVoxel,
    InterpolatedVoxel,
    SensorParams,
)

VOXEL_SUFFIX = ".v2vx"
_VOXEL_MAGIC = b"V2VX"
_VOXEL_VERSION = 1
_VOXEL_DTYPE_F32LE = 1
_VOXEL_HEADER = struct.Struct("<4sHHIII4x")  # magic, version, dtype, B, H, W, reserved

# Largest integer magnitude exactly representable in a 32-bit float payload.
_EXACT_F32_LIMIT = 2 ** 24

RANDOMIZED = "randomized"
FIXED = "fixed"


@dataclass(frozen=True)
class SlicePlan:
    """How a scene's frames split into training sequences."""

    bins_per_voxel: int = 5
    voxels_per_sequence: int = 40
    stride: int | None = None

    def __post_init__(self) -> None:
        if self.bins_per_voxel < 1:
            raise ConfigError(f"bins_per_voxel must be >= 1, got {self.bins_per_voxel}")
        if self.voxels_per_sequence < 1:
            raise ConfigError(
                f"voxels_per_sequence must be >= 1, got {self.voxels_per_sequence}")
        if self.stride is not None and self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")

    @property
    def window_length(self) -> int:
        return self.voxels_per_sequence * self.bins_per_voxel + 1

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else self.window_length


@dataclass(frozen=True)
class ParamPolicy:
    """Whether camera parameters vary per epoch or stay pinned per scene.

    ``randomized`` draws per (scene, epoch); ``fixed`` pins the epoch
    component of every simulation key to 0, so a scene's voxels are
    bitwise identical in every epoch.
    """

    mode: str = RANDOMIZED
    ranges: sensor.ParamRanges = field(default_factory=sensor.ParamRanges)

    def __post_init__(self) -> None:
        if self.mode not in (RANDOMIZED, FIXED):
            raise ConfigError(f"policy mode must be {RANDOMIZED!r} or {FIXED!r}, "
                              f"got {self.mode!r}")

    def sim_epoch(self, epoch: int) -> int:
        return 0 if self.mode == FIXED else epoch


@dataclass(frozen=True)
class SceneRecord:
    scene_id: str
    frame_count: int
    width: int
    height: int
    frame_rate: float
    source_bytes: int
    source_kind: str = ""   # "dir" | "raw" | "" when not re-readable
    source_path: str = ""
    source_pattern: str = "*"


@dataclass(frozen=True)
class DatasetManifest:
    """Scene inventory with enough metadata to derive dataset statistics."""

    scenes: tuple[SceneRecord, ...]

    def total_frames(self) -> int:
        return sum(s.frame_count for s in self.scenes)

    def total_duration_seconds(self) -> float:
        return sum(s.frame_count / s.frame_rate for s in self.scenes)

    def total_source_bytes(self) -> int:
        return sum(s.source_bytes for s in self.scenes)

    def sequence_count(self, plan: SlicePlan) -> int:
        return sum(len(plan_slices(s.frame_count, plan)) for s in self.scenes)


def plan_slices(frame_count: int, plan: SlicePlan) -> list[tuple[int, int]]:
    """Window [start, end) pairs; remainder frames are dropped.

    Fewer frames than one window yields an empty list, not an error.
    """
    length = plan.window_length
    stride = plan.effective_stride
    out = []
    start = 0
    while start + length <= frame_count:
        out.append((start, start + length))
        start += stride
    return out


def params_for_scene(
    policy: ParamPolicy,
    scene_id: str,
    epoch: int,
    dims: tuple[int, int],
    global_seed: int,
) -> SensorParams:
    """One virtual camera per scene per epoch (or per scene when fixed)."""
    key = RngKey(global_seed=global_seed, scene_id=scene_hash(scene_id),
                 epoch=policy.sim_epoch(epoch), stream_tag=StreamTag.PARAMS, frame_index=0)
    return sensor.sample_params(policy.ranges, dims, key)


@dataclass(frozen=True, eq=False)
class Sample:
    """One training sequence: V voxels, V+1 boundary frames, the camera draw."""

    voxels: np.ndarray          # (V, B, H, W) int64
    boundary_frames: np.ndarray  # (V+1, H, W) uint8
    params: SensorParams


def build_sample(
    window_frames: np.ndarray,
    policy: ParamPolicy,
    *,
    scene_id: str,
    window_start: int,
    epoch: int,
    global_seed: int,
    bins_per_voxel: int,
    gamma: float = sensor.DEFAULT_GAMMA,
    log_eps: float = sensor.DEFAULT_LOG_EPS,
    degrade_prob: float = 0.0,
    degrade_scale: tuple[float, float] = (1.0, 3.0),
) -> Sample:
    """Simulate one window of ``V * B + 1`` frames into V chained voxels.

    The residual state threads across the V voxels, so consecutive voxels
    are temporally consistent; boundary frames (every B-th frame) come
    back as supervision targets. Noise keys carry absolute frame indices,
    making results independent of how windows are scheduled.
    """
    window_frames = np.asarray(window_frames)
    if window_frames.ndim != 3 or window_frames.dtype != np.uint8:
        raise DataError(f"window must be (K, H, W) uint8, got {window_frames.shape} "
                        f"{window_frames.dtype}")
    n_frames = window_frames.shape[0]
    if (n_frames - 1) % bins_per_voxel != 0 or n_frames < bins_per_voxel + 1:
        raise DataError(f"window of {n_frames} frames does not split into whole "
                        f"{bins_per_voxel}-bin voxels (need V*B+1)")
    n_voxels = (n_frames - 1) // bins_per_voxel
    height, width = window_frames.shape[1:]
    scene_key = scene_hash(scene_id)
    sim_epoch = policy.sim_epoch(epoch)

    if degrade_prob > 0.0:
        lo, hi = degrade_scale
        if not (1.0 <= lo <= hi):
            raise ConfigError(f"degrade scale range must satisfy 1 <= lo <= hi, "
                              f"got {degrade_scale}")
        # Augmentation draw: params stream, sub-index 1, true epoch (the
        # fixed policy pins sensor parameters only).
        g = derive_rng(RngKey(global_seed=global_seed, scene_id=scene_key, epoch=epoch,
                              stream_tag=StreamTag.PARAMS, frame_index=1))
        if g.uniform() < degrade_prob:
            s = g.uniform(lo, hi)
            window_frames = ingest.degrade_dynamic_range(window_frames, s)

    params = params_for_scene(policy, scene_id, epoch, (height, width), global_seed)
    residual = sensor.init_residual(
        params, (height, width),
        RngKey(global_seed=global_seed, scene_id=scene_key, epoch=sim_epoch,
               stream_tag=StreamTag.INIT, frame_index=window_start))

    log_frames = sensor.frames_to_log(window_frames, gamma, log_eps)
    voxels = np.zeros((n_voxels, bins_per_voxel, height, width), dtype=np.int64)
    for v in range(n_voxels):
        lo_f = v * bins_per_voxel
        hi_f = lo_f + bins_per_voxel + 1
        noise_keys = None
        if params.sigma_bg > 0.0:
            noise_keys = [
                RngKey(global_seed=global_seed, scene_id=scene_key, epoch=sim_epoch,
                       stream_tag=StreamTag.NOISE, frame_index=window_start + lo_f + j + 1)
                for j in range(bins_per_voxel)
            ]
        voxel, residual = sensor.simulate_log_frames(
            log_frames[lo_f:hi_f], params, residual, noise_keys)
        voxels[v] = voxel.data
    boundary = window_frames[::bins_per_voxel].copy()
    return Sample(voxels=voxels, boundary_frames=boundary, params=params)


def sample_crop(sample: Sample, size: int | tuple[int, int], key: RngKey) -> Sample:
    """Apply one random crop to all voxels and frames of a sample."""
    if key.stream_tag is not StreamTag.CROP:
        raise ValueError(f"sample_crop needs a CROP-tagged key, got {key.stream_tag!r}")
    crop_h, crop_w = (size, size) if isinstance(size, int) else size
    height, width = sample.boundary_frames.shape[1:]
    if crop_h > height or crop_w > width:
        raise ConfigError(f"crop {crop_h}x{crop_w} exceeds sample dims {height}x{width}")
    g = derive_rng(key)
    top = int(g.integers(0, height - crop_h + 1))
    left = int(g.integers(0, width - crop_w + 1))
    return Sample(
        voxels=sample.voxels[:, :, top:top + crop_h, left:left + crop_w].copy(),
        boundary_frames=sample.boundary_frames[:, top:top + crop_h,
                                               left:left + crop_w].copy(),
        params=sample.params,
    )


def write_voxels(voxels: DiscreteVoxel | InterpolatedVoxel | np.ndarray,
                 path: str | Path) -> None:
    """Serialize a (B, H, W) voxel grid as float32 little-endian.

    Integer grids are checked to be exactly representable in 32-bit
    floats (|count| < 2^24) before conversion.
    """
    data = voxels.data if isinstance(voxels, (DiscreteVoxel, InterpolatedVoxel)) else \
        np.asarray(voxels)
    if data.ndim != 3:
        raise DataError(f"voxel data must be (B, H, W), got shape {data.shape}")
    if np.issubdtype(data.dtype, np.integer):
        if data.size and int(np.abs(data).max()) >= _EXACT_F32_LIMIT:
            raise DataError(f"voxel counts reach {int(np.abs(data).max())}, not exactly "
                            f"representable as float32 (limit {_EXACT_F32_LIMIT})")
    bins, height, width = data.shape
    payload = np.ascontiguousarray(data, dtype="<f4")
    with Path(path).open("wb") as fh:
        fh.write(_VOXEL_HEADER.pack(_VOXEL_MAGIC, _VOXEL_VERSION, _VOXEL_DTYPE_F32LE,
                                    bins, height, width))
        fh.write(payload.tobytes())


def read_voxels(path: str | Path) -> np.ndarray:
    """Read a voxel file back as a (B, H, W) float32 array."""
    blob = Path(path).read_bytes()
    if len(blob) < _VOXEL_HEADER.size:
        raise DataError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, dtype_code, bins, height, width = _VOXEL_HEADER.unpack_from(blob)
    if magic != _VOXEL_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != _VOXEL_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if dtype_code != _VOXEL_DTYPE_F32LE:
        raise DataError(f"{path}: unsupported dtype code {dtype_code}")
    expected = _VOXEL_HEADER.size + bins * height * width * 4
    if len(blob) != expected:
        raise DataError(f"{path}: expected {expected} bytes, got {len(blob)}")
    payload = np.frombuffer(blob, dtype="<f4", offset=_VOXEL_HEADER.size)
    return payload.reshape(bins, height, width).astype(np.float32, copy=True)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    doc = {
        "schema_version": 1,
        "scenes": [
            {
                "scene_id": s.scene_id,
                "frame_count": s.frame_count,
                "width": s.width,
                "height": s.height,
                "frame_rate": s.frame_rate,
                "source_bytes": s.source_bytes,
                "source_kind": s.source_kind,
                "source_path": s.source_path,
                "source_pattern": s.source_pattern,
            }
            for s in sorted(manifest.scenes, key=lambda s: s.scene_id)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: unreadable manifest: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema_version") != 1:
        raise DataError(f"{path}: unsupported manifest schema")
    scenes = []
    for i, s in enumerate(doc.get("scenes", [])):
        try:
            scenes.append(SceneRecord(
                scene_id=str(s["scene_id"]),
                frame_count=int(s["frame_count"]),
                width=int(s["width"]),
                height=int(s["height"]),
                frame_rate=float(s["frame_rate"]),
                source_bytes=int(s["source_bytes"]),
                source_kind=str(s.get("source_kind", "")),
                source_path=str(s.get("source_path", "")),
                source_pattern=str(s.get("source_pattern", "*")),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: scene entry {i} malformed: {exc}") from exc
    return DatasetManifest(scenes=tuple(scenes))


@dataclass(frozen=True)
class StatsReport:
    """Dataset statistics under one slicing plan.

    ``sequences`` counts whole V*B+1-frame windows; ``frames_div_40`` is
    the cross-dataset normalization (total frames / 40) also in common
    use. ``prestacked_bytes`` is the exact raw float32 footprint if every
    window's voxels were stored densely: V*B*H*W*4 per window.
    """

    scene_count: int
    total_frames: int
    duration_seconds: float
    resolutions: tuple[str, ...]
    sequences: int
    frames_div_40: float
    source_bytes: int
    prestacked_bytes: int

    @property
    def source_to_prestacked_ratio(self) -> float:
        return self.source_bytes / self.prestacked_bytes if self.prestacked_bytes else 0.0


def compute_stats(manifest: DatasetManifest, plan: SlicePlan) -> StatsReport:
    voxel_values = plan.voxels_per_sequence * plan.bins_per_voxel
    prestacked = 0
    for s in manifest.scenes:
        windows = len(plan_slices(s.frame_count, plan))
        prestacked += windows * voxel_values * s.height * s.width * 4
    resolutions = tuple(sorted({f"{s.height}x{s.width}" for s in manifest.scenes}))
    return StatsReport(
        scene_count=len(manifest.scenes),
        total_frames=manifest.total_frames(),
        duration_seconds=manifest.total_duration_seconds(),
        resolutions=resolutions,
        sequences=manifest.sequence_count(plan),
        frames_div_40=manifest.total_frames() / 40.0,
        source_bytes=manifest.total_source_bytes(),
        prestacked_bytes=prestacked,
    )
