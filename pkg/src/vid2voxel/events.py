"""Event streams: a brute-force oracle, voxel builders, and file I/O.

The oracle generates a timestamped event stream the slow, literal way:
per pixel, log luminance is linearly interpolated between consecutive
frames (frame i at ``t = i / B``) and an event fires each time the
signal departs one threshold from the reference level set at the last
event, at the exact linear crossing time. It deliberately shares no
arithmetic with the frame-step simulation beyond the package numeric
conventions, so binning its output is an independent check of that
faster path. Voxel builders implement the two standard accumulation
schemes for event streams (real or simulated).
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sensor
from .rng import RngKey
from .types import (
    ConfigError,
    DataError,
    DiscreteVoxel,
    EventStream,
    InterpolatedVoxel,
    SensorParams,
)

TEXT_FORMAT = "text"
BINARY_FORMAT = "bin"

_BIN_MAGIC = b"EVT1"
_BIN_HEADER = struct.Struct("<4sHHI4x")  # magic, width, height, record count, reserved
_BIN_RECORD = struct.Struct("<dHHb")     # t, x, y, p: 13 bytes


def oracle_simulate(
    log_frames: np.ndarray,
    params: SensorParams,
    initial_residual: np.ndarray,
    noise_keys: Sequence[RngKey] | None = None,
) -> EventStream:
    """Generate the event stream for a (K, H, W) log-luminance stack.

    The initial residual shifts each pixel's starting reference level, so
    a pixel that has already accumulated most of a threshold fires early.
    Noise and hot-pixel offsets are injected as per-interval constants
    drawn exactly as the frame-step simulation would draw them for the
    same keys, keeping the two paths comparable.

    Events within one interval are emitted in crossing order; the merged
    stream is sorted by time with ties broken by (y, x, p). A crossing
    that only just touches a threshold at a frame instant is pulled one
    ulp inside the interval so it bins with the interval that caused it.
    """
    log_frames = np.asarray(log_frames, dtype=np.float64)
    if log_frames.ndim != 3 or log_frames.shape[0] < 2:
        raise DataError(f"need a (K>=2, H, W) log stack, got shape {log_frames.shape}")
    n_intervals = log_frames.shape[0] - 1
    height, width = log_frames.shape[1:]
    initial_residual = np.asarray(initial_residual, dtype=np.float64)
    if initial_residual.shape != (height, width):
        raise DataError(f"residual shape {initial_residual.shape} does not match grid "
                        f"{(height, width)}")
    if noise_keys is not None and len(noise_keys) != n_intervals:
        raise DataError(f"need {n_intervals} noise keys, got {len(noise_keys)}")

    deltas = np.diff(log_frames, axis=0)
    if params.sigma_bg > 0.0:
        if noise_keys is None:
            raise ValueError("noise keys are required when sigma_bg > 0")
        for i in range(n_intervals):
            deltas[i] += sensor.noise_for_step(params, (height, width), noise_keys[i])
    if len(params.hot_pixels):
        deltas += params.hot_pixels.to_grid()

    c_plus = params.c_plus
    c_minus = params.c_minus
    snap_plus = sensor.FLOOR_SNAP * c_plus
    snap_minus = sensor.FLOOR_SNAP * c_minus
    inv_b = 1.0 / n_intervals
    last = n_intervals - 1

    ts: list[float] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    emit_t = ts.append
    emit_x = xs.append
    emit_y = ys.append
    emit_p = ps.append

    def crossing_time(i: int, f: float) -> float:
        # Keep the timestamp inside this interval's half-open bin: a
        # crossing that only touches the threshold at the frame instant
        # belongs to the change that caused it, and rounding in the
        # fraction arithmetic must not push it over the edge.
        if f < 0.0:
            f = 0.0
        t = (i + f) * inv_b
        if i < last:
            edge = (i + 1) * inv_b
            if t >= edge:
                t = np.nextafter(edge, 0.0)
        elif t > 1.0:
            t = 1.0
        return t

    for y in range(height):
        for x in range(width):
            dev = float(initial_residual[y, x])
            col = deltas[:, y, x].tolist()
            for i in range(n_intervals):
                d = col[i]
                if d > 0.0:
                    pos = 0.0
                    while True:
                        need = c_plus - dev
                        if pos + need > d + snap_plus:
                            dev += d - pos
                            break
                        pos += need
                        dev = 0.0
                        emit_t(crossing_time(i, pos / d))
                        emit_x(x)
                        emit_y(y)
                        emit_p(1)
                elif d < 0.0:
                    pos = 0.0
                    while True:
                        need = c_minus + dev
                        if pos + need > -d + snap_minus:
                            dev += d + pos
                            break
                        pos += need
                        dev = 0.0
                        emit_t(crossing_time(i, pos / -d))
                        emit_x(x)
                        emit_y(y)
                        emit_p(-1)

    t_arr = np.asarray(ts, dtype=np.float64)
    x_arr = np.asarray(xs, dtype=np.int64)
    y_arr = np.asarray(ys, dtype=np.int64)
    p_arr = np.asarray(ps, dtype=np.int8)
    order = np.lexsort((p_arr, x_arr, y_arr, t_arr))
    return EventStream(t=t_arr[order], x=x_arr[order], y=y_arr[order], p=p_arr[order],
                       width=width, height=height)


def _check_bins(bins: int) -> None:
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")


def discrete_voxel_from_events(stream: EventStream, bins: int) -> DiscreteVoxel:
    """Bin events into signed counts: bin b collects t in [b/B, (b+1)/B).

    Events at exactly t = 1.0 clamp into the last bin so every event is
    counted; bin sums therefore equal net polarity per pixel exactly.
    """
    _check_bins(bins)
    data = np.zeros((bins, stream.height, stream.width), dtype=np.int64)
    if len(stream):
        b = np.minimum(np.floor(stream.t * bins).astype(np.int64), bins - 1)
        np.add.at(data, (b, stream.y, stream.x), stream.p.astype(np.int64))
    return DiscreteVoxel(data=data)


def interpolated_voxel_from_events(stream: EventStream, bins: int) -> InterpolatedVoxel:
    """Deposit each event's polarity onto its two nearest bins.

    With ``u = (B - 1) * t``, bin floor(u) receives weight ``1 - frac(u)``
    and the next bin receives ``frac(u)``, so each event contributes unit
    total weight.
    """
    if bins < 2:
        raise ConfigError(f"interpolated voxels need bins >= 2, got {bins}")
    flat = np.zeros(bins * stream.height * stream.width, dtype=np.float64)
    if len(stream):
        u = (bins - 1) * stream.t
        lo = np.floor(u).astype(np.int64)
        frac = u - lo
        pol = stream.p.astype(np.float64)
        plane = stream.height * stream.width
        idx = stream.y * stream.width + stream.x
        np.add.at(flat, lo * plane + idx, pol * (1.0 - frac))
        right_ok = lo + 1 < bins
        np.add.at(flat, (lo[right_ok] + 1) * plane + idx[right_ok],
                  (pol * frac)[right_ok])
    return InterpolatedVoxel(data=flat.reshape(bins, stream.height, stream.width))


def event_stack(stream: EventStream, t1: float, t2: float) -> np.ndarray:
    """Per-pixel net polarity over the half-open window [t1, t2), int64 (H, W)."""
    if not (0.0 <= t1 < t2 <= 1.0):
        raise ConfigError(f"need 0 <= t1 < t2 <= 1, got t1={t1}, t2={t2}")
    grid = np.zeros((stream.height, stream.width), dtype=np.int64)
    if len(stream):
        m = (stream.t >= t1) & (stream.t < t2)
        np.add.at(grid, (stream.y[m], stream.x[m]), stream.p[m].astype(np.int64))
    return grid


def write_events(stream: EventStream, path: str | Path, fmt: str = TEXT_FORMAT) -> None:
    """Write a stream losslessly in the text or binary format.

    Text: one ``t x y p`` line per event, t as a round-trippable decimal.
    Binary: 16-byte header (magic, u16 width, u16 height, u32 count,
    4 reserved bytes) then packed 13-byte little-endian records
    (f64 t, u16 x, u16 y, i8 p).
    """
    path = Path(path)
    if fmt == TEXT_FORMAT:
        with path.open("w", encoding="ascii") as fh:
            for t, x, y, p in zip(stream.t, stream.x, stream.y, stream.p):
                fh.write(f"{float(t)!r} {int(x)} {int(y)} {int(p)}\n")
    elif fmt == BINARY_FORMAT:
        if stream.width > 0xFFFF or stream.height > 0xFFFF:
            raise DataError(f"binary format caps dims at 65535, got "
                            f"{stream.width}x{stream.height}")
        with path.open("wb") as fh:
            fh.write(_BIN_HEADER.pack(_BIN_MAGIC, stream.width, stream.height, len(stream)))
            for t, x, y, p in zip(stream.t, stream.x, stream.y, stream.p):
                fh.write(_BIN_RECORD.pack(float(t), int(x), int(y), int(p)))
    else:
        raise ConfigError(f"unknown event format {fmt!r}")


def _validated_stream(t: np.ndarray, x: np.ndarray, y: np.ndarray, p: np.ndarray,
                      width: int, height: int, sort: bool, what: str) -> EventStream:
    if t.size and not np.all(np.diff(t) >= 0):
        if not sort:
            raise DataError(f"{what}: timestamps are not sorted (pass sort=True to sort)")
        order = np.lexsort((p, x, y, t))
        t, x, y, p = t[order], x[order], y[order], p[order]
    try:
        return EventStream(t=t, x=x, y=y, p=p, width=width, height=height)
    except DataError as exc:
        raise DataError(f"{what}: {exc}") from exc


def read_events(
    path: str | Path,
    fmt: str = TEXT_FORMAT,
    *,
    width: int | None = None,
    height: int | None = None,
    sort: bool = False,
) -> EventStream:
    """Read a stream, validating bounds, polarity, and sortedness.

    For the text format grid dims are taken from ``width``/``height`` or
    inferred as max coordinate + 1; the binary header carries its own.
    Malformed input raises :class:`DataError` naming the offending record.
    """
    path = Path(path)
    if fmt == TEXT_FORMAT:
        ts, xs, ys, ps = [], [], [], []
        with path.open("r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 4:
                    raise DataError(f"{path}:{lineno}: expected 't x y p', got {line!r}")
                try:
                    t = float(parts[0])
                    x = int(parts[1])
                    y = int(parts[2])
                    p = int(parts[3])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: unparseable record: {exc}") from exc
                if not np.isfinite(t):
                    raise DataError(f"{path}:{lineno}: non-finite timestamp {parts[0]}")
                if p not in (-1, 1):
                    raise DataError(f"{path}:{lineno}: polarity must be -1 or 1, got {p}")
                ts.append(t)
                xs.append(x)
                ys.append(y)
                ps.append(p)
        t_arr = np.asarray(ts, dtype=np.float64)
        x_arr = np.asarray(xs, dtype=np.int64)
        y_arr = np.asarray(ys, dtype=np.int64)
        p_arr = np.asarray(ps, dtype=np.int8)
        if width is None:
            width = int(x_arr.max()) + 1 if x_arr.size else 1
        if height is None:
            height = int(y_arr.max()) + 1 if y_arr.size else 1
        return _validated_stream(t_arr, x_arr, y_arr, p_arr, width, height, sort, str(path))
    if fmt == BINARY_FORMAT:
        blob = path.read_bytes()
        if len(blob) < _BIN_HEADER.size:
            raise DataError(f"{path}: truncated header ({len(blob)} bytes)")
        magic, w, h, count = _BIN_HEADER.unpack_from(blob)
        if magic != _BIN_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        expected = _BIN_HEADER.size + count * _BIN_RECORD.size
        if len(blob) != expected:
            raise DataError(f"{path}: expected {expected} bytes for {count} records, "
                            f"got {len(blob)}")
        t_arr = np.empty(count, dtype=np.float64)
        x_arr = np.empty(count, dtype=np.int64)
        y_arr = np.empty(count, dtype=np.int64)
        p_arr = np.empty(count, dtype=np.int8)
        for i, (t, x, y, p) in enumerate(_BIN_RECORD.iter_unpack(blob[_BIN_HEADER.size:])):
            if not np.isfinite(t):
                raise DataError(f"{path}: record {i}: non-finite timestamp")
            if p not in (-1, 1):
                raise DataError(f"{path}: record {i}: polarity must be -1 or 1, got {p}")
            t_arr[i] = t
            x_arr[i] = x
            y_arr[i] = y
            p_arr[i] = p
        return _validated_stream(t_arr, x_arr, y_arr, p_arr, int(w), int(h), sort, str(path))
    raise ConfigError(f"unknown event format {fmt!r}")
