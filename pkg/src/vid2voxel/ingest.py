"""Frame acquisition and pixel-space preprocessing.

Two ingestion paths: a directory of lossless 8-bit raster images, and a
raw byte stream of headerless grayscale frames (so any external decoder
can pipe frames in without a codec dependency here).
"""

from __future__ import annotations

from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np
from PIL import Image, UnidentifiedImageError

from .types import ConfigError, DataError, FrameSequence

IMAGE_EXTENSIONS = (".png", ".pgm", ".bmp", ".tif", ".tiff")

# ITU-R BT.601 luma weights for color inputs.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def bt601_luma(rgb: np.ndarray) -> np.ndarray:
    """Collapse an (H, W, 3) uint8 array to luma, rounded half-to-even."""
    weighted = np.asarray(rgb, dtype=np.float64) @ _LUMA_WEIGHTS
    return np.clip(np.rint(weighted), 0, 255).astype(np.uint8)


def _load_gray(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.mode == "L":
                return np.asarray(img, dtype=np.uint8)
            if img.mode in ("P", "RGBA"):
                img = img.convert("RGB")
            if img.mode == "RGB":
                return bt601_luma(np.asarray(img, dtype=np.uint8))
            raise DataError(f"{path}: unsupported image mode {img.mode!r} "
                            "(8-bit grayscale or color required)")
    except (OSError, UnidentifiedImageError) as exc:
        raise DataError(f"{path}: unreadable image: {exc}") from exc


def read_frames_dir(
    path: str | Path,
    pattern: str = "*",
    *,
    frame_rate: float = 30.0,
    scene_id: str | None = None,
) -> FrameSequence:
    """Load a directory of images as one sequence, ordered by filename.

    Color images are converted to luma with BT.601 weights. All frames
    must share one resolution; violations name the offending file.
    """
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"{path}: not a directory")
    files = sorted(p for p in path.glob(pattern)
                   if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)
    if not files:
        raise DataError(f"{path}: no image files matching {pattern!r}")
    frames = []
    shape: tuple[int, int] | None = None
    for f in files:
        frame = _load_gray(f)
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise DataError(f"{f}: resolution {frame.shape} differs from first frame {shape}")
        frames.append(frame)
    return FrameSequence(frames=np.stack(frames), frame_rate=frame_rate,
                         scene_id=scene_id if scene_id is not None else path.name)


def iter_raw_frames(source: BinaryIO, width: int, height: int) -> Iterator[np.ndarray]:
    """Yield (H, W) uint8 frames from a raw byte stream, without buffering it.

    The stream must be a whole number of width*height-byte frames; a
    trailing partial frame raises with its byte offset.
    """
    if width < 1 or height < 1:
        raise ConfigError(f"raw frame dims must be >= 1, got {width}x{height}")
    frame_bytes = width * height
    offset = 0
    while True:
        chunk = source.read(frame_bytes)
        if not chunk:
            return
        while len(chunk) < frame_bytes:
            more = source.read(frame_bytes - len(chunk))
            if not more:
                raise DataError(f"trailing partial frame at byte offset {offset} "
                                f"(need {frame_bytes} bytes per frame)")
            chunk += more
        yield np.frombuffer(chunk, dtype=np.uint8).reshape(height, width)
        offset += frame_bytes


def read_frames_raw(
    source: BinaryIO,
    width: int,
    height: int,
    *,
    frame_rate: float = 30.0,
    scene_id: str = "raw",
) -> FrameSequence:
    """Collect a raw byte stream into a sequence (>= 2 frames required)."""
    frames = list(iter_raw_frames(source, width, height))
    if len(frames) < 2:
        raise DataError(f"raw stream yielded {len(frames)} frame(s); at least 2 required")
    return FrameSequence(frames=np.stack(frames), frame_rate=frame_rate, scene_id=scene_id)


def crop(seq: FrameSequence, top: int, left: int, height: int, width: int) -> FrameSequence:
    """Crop every frame to the same rectangle; pixel values are untouched."""
    if top < 0 or left < 0 or height < 1 or width < 1:
        raise ConfigError(f"invalid crop rectangle {top}:{left}:{height}:{width}")
    if top + height > seq.height or left + width > seq.width:
        raise ConfigError(f"crop {top}:{left}:{height}:{width} exceeds frame "
                          f"dims {seq.height}x{seq.width}")
    return FrameSequence(frames=seq.frames[:, top:top + height, left:left + width].copy(),
                         frame_rate=seq.frame_rate, scene_id=seq.scene_id)


def degrade_dynamic_range(frame: np.ndarray, s: float) -> np.ndarray:
    """Stretch contrast about mid-gray: clip((F - 127.5) * s + 127.5, 0, 255).

    ``s = 1`` is the identity; larger scales push values toward the
    clipping rails, creating over/under-exposed regions. Rounds
    half-to-even back to uint8.
    """
    if s < 1:
        raise ConfigError(f"degradation scale must be >= 1, got {s}")
    stretched = (np.asarray(frame, dtype=np.float64) - 127.5) * s + 127.5
    return np.rint(np.clip(stretched, 0.0, 255.0)).astype(np.uint8)
