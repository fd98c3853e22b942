"""Shared domain types and numeric conventions.

Grid conventions used across the package:

* a frame is an ``(H, W)`` uint8 array of display-encoded intensities;
* linear luminance is an ``(H, W)`` float64 array with values in [0, 1];
* log luminance and residual state are ``(H, W)`` float64 arrays of finite
  values (natural log of offset linear luminance, and accumulated
  below-threshold change, respectively).

All types hold their arrays by value convention: no function in this
package mutates an array it received, and stepping a copied residual
never affects the original. That makes every type safe to hand across
threads or processes without locking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration or usage (CLI exit code 2)."""


class DataError(ValueError):
    """Malformed or inconsistent data encountered at runtime (CLI exit code 1)."""


def _require(cond: bool, exc_type: type[ValueError], msg: str) -> None:
    if not cond:
        raise exc_type(msg)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Ordered grayscale frames sharing one resolution.

    ``frames`` has shape (T, H, W), dtype uint8, with T >= 2. ``frame_rate``
    is informational (used only for duration bookkeeping).
    """

    frames: np.ndarray
    frame_rate: float = 30.0
    scene_id: str = ""

    def __post_init__(self) -> None:
        f = np.asarray(self.frames)
        _require(f.ndim == 3, DataError, f"frames must be (T, H, W), got shape {f.shape}")
        _require(f.dtype == np.uint8, DataError, f"frames must be uint8, got {f.dtype}")
        _require(f.shape[0] >= 2, DataError, f"need at least 2 frames, got {f.shape[0]}")
        _require(f.shape[1] >= 1 and f.shape[2] >= 1, DataError, "frame dims must be >= 1")
        _require(self.frame_rate > 0, ConfigError, "frame_rate must be positive")
        object.__setattr__(self, "frames", f)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True, eq=False)
class HotPixelMap:
    """Sparse additive defect map: listed pixels get a fixed per-step offset.

    Unlisted pixels are implicitly zero. Magnitudes are in log-luminance
    units per frame step and must be nonzero (zero entries would be
    indistinguishable from absent ones).
    """

    xs: np.ndarray
    ys: np.ndarray
    magnitudes: np.ndarray
    width: int
    height: int

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=np.int64)
        ys = np.asarray(self.ys, dtype=np.int64)
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        _require(xs.shape == ys.shape == mags.shape and xs.ndim == 1, DataError,
                 "hot pixel arrays must be 1-D and equal length")
        _require(self.width >= 1 and self.height >= 1, DataError, "grid dims must be >= 1")
        if xs.size:
            _require(bool(np.all((xs >= 0) & (xs < self.width))), DataError,
                     "hot pixel x out of bounds")
            _require(bool(np.all((ys >= 0) & (ys < self.height))), DataError,
                     "hot pixel y out of bounds")
            _require(bool(np.all(mags != 0.0)) and bool(np.all(np.isfinite(mags))), DataError,
                     "hot pixel magnitudes must be finite and nonzero")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "magnitudes", mags)

    @classmethod
    def empty(cls, width: int, height: int) -> "HotPixelMap":
        z = np.zeros(0)
        return cls(xs=z, ys=z, magnitudes=z, width=width, height=height)

    def __len__(self) -> int:
        return int(self.xs.size)

    def to_grid(self) -> np.ndarray:
        """Dense (H, W) float64 additive map."""
        grid = np.zeros((self.height, self.width), dtype=np.float64)
        if self.xs.size:
            grid[self.ys, self.xs] = self.magnitudes
        return grid


@dataclass(frozen=True, eq=False)
class SensorParams:
    """One virtual event camera: thresholds, noise level, defect map.

    ``c_plus``/``c_minus`` are the log-luminance changes that trigger one
    positive/negative event; both strictly positive. ``sigma_bg`` is the
    per-frame Gaussian noise standard deviation, >= 0.
    """

    c_plus: float
    c_minus: float
    sigma_bg: float
    hot_pixels: HotPixelMap

    def __post_init__(self) -> None:
        _require(self.c_plus > 0, ConfigError, f"c_plus must be > 0, got {self.c_plus}")
        _require(self.c_minus > 0, ConfigError, f"c_minus must be > 0, got {self.c_minus}")
        _require(self.sigma_bg >= 0, ConfigError, f"sigma_bg must be >= 0, got {self.sigma_bg}")


@dataclass(frozen=True, eq=False)
class DiscreteVoxel:
    """Signed per-bin event counts, shape (B, H, W), integer dtype."""

    data: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.data)
        _require(d.ndim == 3, DataError, f"voxel data must be (B, H, W), got shape {d.shape}")
        _require(np.issubdtype(d.dtype, np.integer), DataError,
                 f"discrete voxel must be integer-valued, got {d.dtype}")
        _require(all(s >= 1 for s in d.shape), DataError, "voxel dims must be >= 1")
        object.__setattr__(self, "data", d.astype(np.int64, copy=False))

    @property
    def bins(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class InterpolatedVoxel:
    """Real-valued voxel grid with per-event weight split across adjacent bins."""

    data: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.data, dtype=np.float64)
        _require(d.ndim == 3, DataError, f"voxel data must be (B, H, W), got shape {d.shape}")
        _require(all(s >= 1 for s in d.shape), DataError, "voxel dims must be >= 1")
        _require(bool(np.all(np.isfinite(d))), DataError, "voxel values must be finite")
        object.__setattr__(self, "data", d)

    @property
    def bins(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class EventStream:
    """Timestamped polarity events on a fixed grid, sorted by time.

    Stored as parallel arrays: ``t`` float64 in [0, 1] nondecreasing,
    ``x``/``y`` int64 pixel coordinates, ``p`` int8 polarity in {-1, +1}.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    width: int
    height: int

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        p = np.asarray(self.p, dtype=np.int8)
        n = t.size
        _require(t.ndim == 1 and x.shape == y.shape == p.shape == t.shape, DataError,
                 "event arrays must be 1-D and equal length")
        _require(self.width >= 1 and self.height >= 1, DataError, "grid dims must be >= 1")
        if n:
            _require(bool(np.all(np.isfinite(t))), DataError, "timestamps must be finite")
            _require(bool(np.all((t >= 0.0) & (t <= 1.0))), DataError,
                     "timestamps must lie in [0, 1]")
            _require(bool(np.all(np.diff(t) >= 0)), DataError,
                     "timestamps must be sorted nondecreasing")
            _require(bool(np.all((x >= 0) & (x < self.width))), DataError, "x out of bounds")
            _require(bool(np.all((y >= 0) & (y < self.height))), DataError, "y out of bounds")
            _require(bool(np.all((p == 1) | (p == -1))), DataError, "polarity must be -1 or +1")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "p", p)

    @classmethod
    def empty(cls, width: int, height: int) -> "EventStream":
        return cls(t=np.zeros(0), x=np.zeros(0, dtype=np.int64),
                   y=np.zeros(0, dtype=np.int64), p=np.zeros(0, dtype=np.int8),
                   width=width, height=height)

    def __len__(self) -> int:
        return int(self.t.size)

    def net_polarity(self) -> np.ndarray:
        """Per-pixel sum of polarities over the whole stream, int64 (H, W)."""
        grid = np.zeros((self.height, self.width), dtype=np.int64)
        if len(self):
            np.add.at(grid, (self.y, self.x), self.p.astype(np.int64))
        return grid
