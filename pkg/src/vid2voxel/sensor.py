"""Frame-driven event sensor simulation.

Converts B+1 video frames plus one sampled virtual-camera configuration
into a B-bin discrete voxel grid, without materializing an event stream.
Per frame step the pixel accumulator gains the log-luminance difference
plus noise and defects; each whole threshold contained in the
accumulator fires one event, and the fired amount is subtracted so the
remainder carries into the next step:

    total      = residual + dlog + noise + hot
    n_plus     = max(0, floor(total / c_plus))
    n_minus    = max(0, floor(-total / c_minus))
    residual'  = total - c_plus * n_plus + c_minus * n_minus

Voxel bin i is ``n_plus(i) - n_minus(i)``. The residual threads across
steps (and across consecutive voxels of one sequence), so per-pixel
telescoping holds: the fired thresholds plus the residual change equal
the total log-luminance change exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import RngKey, StreamTag, derive_rng
from .types import ConfigError, DataError, DiscreteVoxel, HotPixelMap, SensorParams

DEFAULT_GAMMA = 2.2
DEFAULT_LOG_EPS = 0.01

# Quotients this close to an integer are snapped to it before flooring, so
# that a threshold reached up to rounding error fires identically on every
# platform (cross-platform byte-identical outputs).
FLOOR_SNAP = 1e-12


@dataclass(frozen=True)
class ParamRanges:
    """Uniform sampling ranges for virtual camera parameters.

    Each range is an inclusive (lo, hi) pair. Threshold ranges must be
    strictly positive, the hot-pixel fraction lives in [0, 1), and hot
    magnitudes are strictly positive (a random sign is applied on draw).
    """

    c_plus_range: tuple[float, float] = (0.1, 1.0)
    c_minus_range: tuple[float, float] = (0.1, 1.0)
    sigma_bg_range: tuple[float, float] = (0.0, 0.05)
    hot_pixel_fraction_range: tuple[float, float] = (0.0, 0.0005)
    hot_pixel_magnitude_range: tuple[float, float] = (0.1, 1.0)

    def __post_init__(self) -> None:
        def ordered(name: str, rng: tuple[float, float], lo_min: float,
                    lo_strict: bool, hi_max: float | None = None) -> None:
            lo, hi = rng
            if not (lo <= hi):
                raise ConfigError(f"{name} must be ordered lo <= hi, got {rng}")
            if lo < lo_min or (lo_strict and lo <= lo_min):
                bound = f"> {lo_min}" if lo_strict else f">= {lo_min}"
                raise ConfigError(f"{name} lower bound must be {bound}, got {lo}")
            if hi_max is not None and hi >= hi_max:
                raise ConfigError(f"{name} upper bound must be < {hi_max}, got {hi}")

        ordered("c_plus_range", self.c_plus_range, 0.0, True)
        ordered("c_minus_range", self.c_minus_range, 0.0, True)
        ordered("sigma_bg_range", self.sigma_bg_range, 0.0, False)
        ordered("hot_pixel_fraction_range", self.hot_pixel_fraction_range, 0.0, False, 1.0)
        ordered("hot_pixel_magnitude_range", self.hot_pixel_magnitude_range, 0.0, True)


def sample_params(ranges: ParamRanges, dims: tuple[int, int], key: RngKey) -> SensorParams:
    """Draw one virtual camera configuration.

    ``dims`` is (height, width). Thresholds and noise level are uniform
    on their ranges; round(fraction * H * W) hot pixels are chosen
    uniformly without replacement, each with a uniform magnitude and a
    uniform random sign. Draw order is fixed, so one key always yields
    one configuration.
    """
    if key.stream_tag is not StreamTag.PARAMS:
        raise ValueError(f"sample_params needs a PARAMS-tagged key, got {key.stream_tag!r}")
    height, width = dims
    g = derive_rng(key)
    c_plus = g.uniform(*ranges.c_plus_range)
    c_minus = g.uniform(*ranges.c_minus_range)
    sigma_bg = g.uniform(*ranges.sigma_bg_range)
    fraction = g.uniform(*ranges.hot_pixel_fraction_range)
    n_hot = int(round(fraction * height * width))
    if n_hot > 0:
        flat = g.choice(height * width, size=n_hot, replace=False)
        mags = g.uniform(*ranges.hot_pixel_magnitude_range, size=n_hot)
        signs = np.where(g.uniform(size=n_hot) < 0.5, -1.0, 1.0)
        hot = HotPixelMap(xs=flat % width, ys=flat // width,
                          magnitudes=mags * signs, width=width, height=height)
    else:
        hot = HotPixelMap.empty(width, height)
    return SensorParams(c_plus=c_plus, c_minus=c_minus, sigma_bg=sigma_bg, hot_pixels=hot)


def reverse_gamma(frame: np.ndarray, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
    """Map display-encoded 8-bit intensities to linear luminance in [0, 1].

    Per pixel ``(F / 255) ** gamma``; monotonic, with 0 -> 0 and 255 -> 1.
    """
    if gamma <= 0:
        raise ConfigError(f"gamma must be > 0, got {gamma}")
    return np.power(np.asarray(frame, dtype=np.float64) / 255.0, gamma)


def log_luminance(lum: np.ndarray, eps: float = DEFAULT_LOG_EPS) -> np.ndarray:
    """Natural log of offset luminance, ``ln(I + eps)``; finite on [0, 1]."""
    if eps <= 0:
        raise ConfigError(f"log offset eps must be > 0, got {eps}")
    return np.log(np.asarray(lum, dtype=np.float64) + eps)


def frames_to_log(frames: np.ndarray, gamma: float = DEFAULT_GAMMA,
                  eps: float = DEFAULT_LOG_EPS) -> np.ndarray:
    """Stacked log luminance for a (T, H, W) uint8 frame array."""
    return log_luminance(reverse_gamma(frames, gamma), eps)


def init_residual(params: SensorParams, dims: tuple[int, int], key: RngKey) -> np.ndarray:
    """Initial accumulator state, i.i.d. uniform on [-c_minus, c_plus].

    Models a sensor that has already been running: each pixel sits at an
    arbitrary point between its two thresholds.
    """
    if key.stream_tag is not StreamTag.INIT:
        raise ValueError(f"init_residual needs an INIT-tagged key, got {key.stream_tag!r}")
    height, width = dims
    g = derive_rng(key)
    return g.uniform(-params.c_minus, params.c_plus, size=(height, width))


def noise_for_step(params: SensorParams, dims: tuple[int, int], key: RngKey) -> np.ndarray:
    """Per-frame Gaussian noise grid for one step.

    Shared by the frame-step simulation and the event-stream oracle so
    both paths see identical inputs for identical keys. Always drawn as
    a full grid from the key alone, so results cannot depend on how
    pixels are partitioned across workers.
    """
    if key.stream_tag is not StreamTag.NOISE:
        raise ValueError(f"noise_for_step needs a NOISE-tagged key, got {key.stream_tag!r}")
    height, width = dims
    if params.sigma_bg == 0.0:
        return np.zeros((height, width))
    g = derive_rng(key)
    return g.normal(0.0, params.sigma_bg, size=(height, width))


def snapped_floor(q: np.ndarray) -> np.ndarray:
    """Floor with quotients within FLOOR_SNAP of an integer snapped first."""
    q = np.asarray(q, dtype=np.float64)
    nearest = np.rint(q)
    snapped = np.where(np.abs(q - nearest) <= FLOOR_SNAP, nearest, np.floor(q))
    return snapped.astype(np.int64)


def step(
    residual: np.ndarray,
    dlog: np.ndarray,
    params: SensorParams,
    key: RngKey | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance the accumulator by one frame and count fired events.

    Returns ``(n_plus, n_minus, residual')`` where the counts are int64
    grids and the new residual is a fresh array (inputs are never
    mutated). At most one of the two counts is nonzero per pixel, and
    with zero noise and no hot pixels the residual stays strictly inside
    (-c_minus, c_plus).

    ``key`` (NOISE-tagged, carrying this step's frame index) is required
    when ``params.sigma_bg > 0``.
    """
    residual = np.asarray(residual, dtype=np.float64)
    dlog = np.asarray(dlog, dtype=np.float64)
    if residual.shape != dlog.shape:
        raise DataError(f"shape mismatch: residual {residual.shape} vs dlog {dlog.shape}")
    total = residual + dlog
    if params.sigma_bg > 0.0:
        if key is None:
            raise ValueError("a NOISE-tagged key is required when sigma_bg > 0")
        total = total + noise_for_step(params, residual.shape, key)
    if len(params.hot_pixels):
        total = total + params.hot_pixels.to_grid()
    n_plus = np.maximum(0, snapped_floor(total / params.c_plus))
    n_minus = np.maximum(0, snapped_floor(-total / params.c_minus))
    new_residual = total - params.c_plus * n_plus + params.c_minus * n_minus
    return n_plus, n_minus, new_residual


def simulate_log_frames(
    log_frames: np.ndarray,
    params: SensorParams,
    initial_residual: np.ndarray,
    noise_keys: Sequence[RngKey] | None = None,
) -> tuple[DiscreteVoxel, np.ndarray]:
    """Run the per-frame simulation over a (K, H, W) log-luminance stack.

    Produces a K-1 bin voxel; bin i holds the signed event count fired by
    step i. The returned final residual lets the caller chain consecutive
    voxels of one sequence so they stay temporally consistent.
    """
    log_frames = np.asarray(log_frames, dtype=np.float64)
    if log_frames.ndim != 3 or log_frames.shape[0] < 2:
        raise DataError(f"need a (K>=2, H, W) log stack, got shape {log_frames.shape}")
    n_steps = log_frames.shape[0] - 1
    if noise_keys is not None and len(noise_keys) != n_steps:
        raise DataError(f"need {n_steps} noise keys, got {len(noise_keys)}")
    residual = np.array(initial_residual, dtype=np.float64, copy=True)
    if residual.shape != log_frames.shape[1:]:
        raise DataError(f"residual shape {residual.shape} does not match grid "
                        f"{log_frames.shape[1:]}")
    data = np.zeros((n_steps,) + log_frames.shape[1:], dtype=np.int64)
    for i in range(n_steps):
        dlog = log_frames[i + 1] - log_frames[i]
        key = noise_keys[i] if noise_keys is not None else None
        n_plus, n_minus, residual = step(residual, dlog, params, key)
        data[i] = n_plus - n_minus
    return DiscreteVoxel(data=data), residual


def v2v_voxel(
    frames: np.ndarray,
    params: SensorParams,
    initial_residual: np.ndarray,
    noise_keys: Sequence[RngKey] | None = None,
    *,
    gamma: float = DEFAULT_GAMMA,
    log_eps: float = DEFAULT_LOG_EPS,
) -> tuple[DiscreteVoxel, np.ndarray]:
    """Convert B+1 uint8 frames into one B-bin discrete voxel.

    Frames pass through reverse gamma correction and the log mapping,
    then :func:`simulate_log_frames`. Returns the voxel and the final
    residual for chaining.
    """
    frames = np.asarray(frames)
    if frames.ndim != 3 or frames.shape[0] < 2:
        raise DataError(f"need at least 2 frames shaped (K, H, W), got {frames.shape}")
    if frames.dtype != np.uint8:
        raise DataError(f"frames must be uint8, got {frames.dtype}")
    return simulate_log_frames(frames_to_log(frames, gamma, log_eps),
                               params, initial_residual, noise_keys)
