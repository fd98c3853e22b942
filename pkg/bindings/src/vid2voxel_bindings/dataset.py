"""Epoch-aware random-access view over the on-the-fly conversion pipeline.

Wraps the conversion library in-process: no files are written and no
subprocess is spawned per sample, so the hot loop pays only for the
simulation itself (numpy releases the interpreter lock inside its
kernels) plus one dtype-conversion copy per returned tensor. Samples
are derived purely from (index, epoch) and the configuration, so any
number of dataloader workers can pull items concurrently and two
handles with the same configuration always agree.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from vid2voxel import ingest, pipeline, sensor
from vid2voxel.rng import RngKey, StreamTag, scene_hash
from vid2voxel.types import ConfigError, DataError


def _as_range(value: Any, name: str) -> tuple[float, float]:
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ConfigError(f"{name}: expected 'lo:hi' or 'v', got {value!r}")
        return float(parts[0]), float(parts[1])
    if isinstance(value, (int, float)):
        return float(value), float(value)
    lo, hi = value
    return float(lo), float(hi)


def _as_crop_rect(value: Any) -> tuple[int, int, int, int] | None:
    if value is None:
        return None
    if isinstance(value, str):
        parts = value.split(":")
        if len(parts) != 4:
            raise ConfigError(f"crop_rect: expected 't:l:h:w', got {value!r}")
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    top, left, height, width = value
    return int(top), int(left), int(height), int(width)


class Dataset:
    """Random access to training sequences simulated on demand.

    ``config`` is a plain mapping mirroring the simulate CLI flags:

    ===============  =======================  ==================================
    key              default                  meaning
    ===============  =======================  ==================================
    bins             5                        B bins per voxel
    voxels           40                       V voxels per sequence
    seed             0                        global seed
    policy           "random"                 "random" or "fixed" parameter draw
    c_pos, c_neg     "0.1:1.0"                threshold ranges ('lo:hi' or pair)
    sigma_bg         "0:0.05"                 noise sigma range
    hot_frac         "0:0.0005"               hot-pixel fraction range
    hot_mag          "0.1:1.0"                hot-pixel magnitude range
    gamma, log_eps   2.2, 0.01                intensity mapping constants
    crop             None                     random training crop size (int)
    crop_rect        None                     deterministic 't:l:h:w' pre-crop
    degrade_prob     0.0                      contrast-stretch probability
    degrade_scale    "1:3"                    contrast-stretch scale range
    ===============  =======================  ==================================

    Epoch-variation contract: ``random`` policy re-draws camera
    parameters, initial state, and noise per epoch; ``fixed`` pins them
    so voxels repeat bitwise. The random training crop is re-drawn per
    (index, epoch) under either policy.
    """

    def __init__(self, manifest_path: str | Path, config: Mapping[str, Any]):
        manifest_path = Path(manifest_path)
        self._manifest = pipeline.read_manifest(manifest_path)

        self._bins = int(config.get("bins", 5))
        self._voxels = int(config.get("voxels", 40))
        self._seed = int(config.get("seed", 0))
        policy_name = str(config.get("policy", "random"))
        if policy_name not in ("random", "fixed"):
            raise ConfigError(f"policy must be 'random' or 'fixed', got {policy_name!r}")
        ranges = sensor.ParamRanges(
            c_plus_range=_as_range(config.get("c_pos", "0.1:1.0"), "c_pos"),
            c_minus_range=_as_range(config.get("c_neg", "0.1:1.0"), "c_neg"),
            sigma_bg_range=_as_range(config.get("sigma_bg", "0:0.05"), "sigma_bg"),
            hot_pixel_fraction_range=_as_range(config.get("hot_frac", "0:0.0005"),
                                               "hot_frac"),
            hot_pixel_magnitude_range=_as_range(config.get("hot_mag", "0.1:1.0"),
                                                "hot_mag"),
        )
        mode = pipeline.RANDOMIZED if policy_name == "random" else pipeline.FIXED
        self._policy = pipeline.ParamPolicy(mode=mode, ranges=ranges)
        self._gamma = float(config.get("gamma", sensor.DEFAULT_GAMMA))
        self._log_eps = float(config.get("log_eps", sensor.DEFAULT_LOG_EPS))
        crop = config.get("crop")
        self._crop_size = int(crop) if crop is not None else None
        self._crop_rect = _as_crop_rect(config.get("crop_rect"))
        self._degrade_prob = float(config.get("degrade_prob", 0.0))
        self._degrade_scale = _as_range(config.get("degrade_scale", "1:3"),
                                        "degrade_scale")

        plan = pipeline.SlicePlan(bins_per_voxel=self._bins,
                                  voxels_per_sequence=self._voxels)
        self._index: list[tuple[pipeline.SceneRecord, int]] = []
        for scene in self._manifest.scenes:
            for start, _ in pipeline.plan_slices(scene.frame_count, plan):
                self._index.append((scene, start))

        self._epoch = 0
        self._cache: dict[str, np.ndarray] = {}
        self._cache_lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._index)

    def set_epoch(self, epoch: int) -> None:
        self._epoch = int(epoch)

    def _scene_frames(self, scene: pipeline.SceneRecord) -> np.ndarray:
        with self._cache_lock:
            cached = self._cache.get(scene.scene_id)
        if cached is not None:
            return cached
        if scene.source_kind == "dir":
            seq = ingest.read_frames_dir(scene.source_path, scene.source_pattern,
                                         frame_rate=scene.frame_rate,
                                         scene_id=scene.scene_id)
        elif scene.source_kind == "raw":
            with open(scene.source_path, "rb") as fh:
                seq = ingest.read_frames_raw(fh, scene.width, scene.height,
                                             frame_rate=scene.frame_rate,
                                             scene_id=scene.scene_id)
        else:
            raise DataError(f"scene {scene.scene_id}: manifest has no readable "
                            f"source (kind={scene.source_kind!r})")
        if self._crop_rect is not None:
            seq = ingest.crop(seq, *self._crop_rect)
        frames = seq.frames
        with self._cache_lock:
            self._cache[scene.scene_id] = frames
        return frames

    def get_item(self, index: int) -> tuple[np.ndarray, np.ndarray, Any]:
        """Simulate sample ``index`` for the current epoch.

        Returns ``(voxels, frames, params)``: float32 voxels shaped
        (V, B, h, w), float32 frames shaped (V+1, h, w) scaled to
        [0, 1], and the camera parameter record used for the draw.
        """
        if not 0 <= index < len(self._index):
            raise IndexError(f"index {index} out of range [0, {len(self._index)})")
        scene, window_start = self._index[index]
        frames = self._scene_frames(scene)
        window = frames[window_start:window_start + self._voxels * self._bins + 1]
        sample = pipeline.build_sample(
            window, self._policy,
            scene_id=scene.scene_id,
            window_start=window_start,
            epoch=self._epoch,
            global_seed=self._seed,
            bins_per_voxel=self._bins,
            gamma=self._gamma,
            log_eps=self._log_eps,
            degrade_prob=self._degrade_prob,
            degrade_scale=self._degrade_scale,
        )
        if self._crop_size is not None:
            sample = pipeline.sample_crop(
                sample, self._crop_size,
                RngKey(global_seed=self._seed, scene_id=scene_hash(scene.scene_id),
                       epoch=self._epoch, stream_tag=StreamTag.CROP,
                       frame_index=window_start))
        voxels = sample.voxels.astype(np.float32)
        targets = sample.boundary_frames.astype(np.float32)
        targets /= 255.0
        return voxels, targets, sample.params

    __getitem__ = get_item


def open_dataset(manifest_path: str | Path, config: Mapping[str, Any]) -> Dataset:
    """Open a manifest as an epoch-aware random-access dataset."""
    return Dataset(manifest_path, config)
