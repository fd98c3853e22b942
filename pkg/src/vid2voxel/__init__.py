"""Direct video-frame to event-voxel conversion toolkit.

Converts conventional grayscale video into discrete event voxel grids
without materializing event streams, verifies the conversion against a
brute-force event-stream oracle, voxelizes real event recordings, and
packages/measures datasets for event-vision training.
"""

from .rng import RngKey, StreamTag, derive_rng, scene_hash
from .types import (
    ConfigError,
    DataError,
    DiscreteVoxel,
    EventStream,
    FrameSequence,
    HotPixelMap,
    InterpolatedVoxel,
    SensorParams,
)
from .sensor import (
    ParamRanges,
    init_residual,
    log_luminance,
    reverse_gamma,
    sample_params,
    simulate_log_frames,
    step,
    v2v_voxel,
)
from .events import (
    discrete_voxel_from_events,
    event_stack,
    interpolated_voxel_from_events,
    oracle_simulate,
    read_events,
    write_events,
)
from .ingest import crop, degrade_dynamic_range, read_frames_dir, read_frames_raw
from .pipeline import (
    DatasetManifest,
    ParamPolicy,
    Sample,
    SceneRecord,
    SlicePlan,
    build_sample,
    compute_stats,
    plan_slices,
    read_manifest,
    read_voxels,
    sample_crop,
    write_manifest,
    write_voxels,
)
from .verify import TrialReport, run_oracle_trials

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DatasetManifest",
    "DiscreteVoxel",
    "EventStream",
    "FrameSequence",
    "HotPixelMap",
    "InterpolatedVoxel",
    "ParamPolicy",
    "ParamRanges",
    "RngKey",
    "Sample",
    "SceneRecord",
    "SensorParams",
    "SlicePlan",
    "StreamTag",
    "TrialReport",
    "build_sample",
    "compute_stats",
    "crop",
    "degrade_dynamic_range",
    "derive_rng",
    "discrete_voxel_from_events",
    "event_stack",
    "init_residual",
    "interpolated_voxel_from_events",
    "log_luminance",
    "oracle_simulate",
    "plan_slices",
    "read_events",
    "read_frames_dir",
    "read_frames_raw",
    "read_manifest",
    "read_voxels",
    "reverse_gamma",
    "run_oracle_trials",
    "sample_crop",
    "sample_params",
    "scene_hash",
    "simulate_log_frames",
    "step",
    "v2v_voxel",
    "write_events",
    "write_manifest",
    "write_voxels",
]
