"""Frames, videos, YUV4MPEG2 / raw planar I/O and synthetic test clips."""
from dataclasses import dataclass, field
from fractions import Fraction
import io
import math

import numpy as np
from scipy.ndimage import gaussian_filter

SUBSAMPLINGS = ("420", "444")
PATTERNS = ("moving-gradient", "textured-noise", "blocks")

_Y4M_MAGIC = b"YUV4MPEG2"
_CHROMA_TAGS = {
    "420": "420", "420jpeg": "420", "420mpeg2": "420", "420paldv": "420",
    "444": "444",
}


class VideoFormatError(ValueError):
    """Malformed or truncated video data."""


def chroma_shape(luma_shape, subsampling):
    rows, cols = luma_shape
    if subsampling == "420":
        return (rows + 1) // 2, (cols + 1) // 2
    if subsampling == "444":
        return rows, cols
    raise ValueError(f"unsupported subsampling {subsampling!r}")


@dataclass(frozen=True)
class Frame:
    """One frame as Y, U, V planes of real samples in [0, 255].

    Planes are numpy arrays indexed (row, col).  Under 4:2:0 the chroma
    planes are ceil(h/2) x ceil(w/2).
    """

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    subsampling: str = "420"

    def __post_init__(self):
        for name in ("y", "u", "v"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"{name} plane must be 2-D, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} plane has non-finite samples")
            if arr.flags.writeable:
                arr = arr.copy()
                arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        expected = chroma_shape(self.y.shape, self.subsampling)
        if self.u.shape != expected or self.v.shape != expected:
            raise ValueError(
                f"chroma planes {self.u.shape}/{self.v.shape} inconsistent with "
                f"{self.subsampling} luma {self.y.shape}; expected {expected}")

    @property
    def shape(self):
        return self.y.shape

    @property
    def planes(self):
        return (self.y, self.u, self.v)

    def replace(self, **planes):
        values = {"y": self.y, "u": self.u, "v": self.v}
        values.update(planes)
        return Frame(values["y"], values["u"], values["v"], self.subsampling)

    def map_planes(self, fn):
        return Frame(fn(self.y), fn(self.u), fn(self.v), self.subsampling)


@dataclass(frozen=True)
class Video:
    frames: tuple
    fps: float
    # original timestamps of each frame when an attack has dropped some
    source_times: tuple = field(default=None, compare=False)

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not self.fps > 0 or not math.isfinite(self.fps):
            raise ValueError(f"fps must be positive, got {self.fps}")
        if frames:
            first = frames[0]
            for i, f in enumerate(frames):
                if f.shape != first.shape or f.subsampling != first.subsampling:
                    raise ValueError(f"frame {i} geometry differs from frame 0")

    def __len__(self):
        return len(self.frames)

    @property
    def frame_count(self):
        return len(self.frames)

    @property
    def duration_seconds(self):
        return len(self.frames) / self.fps

    @property
    def shape(self):
        return self.frames[0].shape if self.frames else None

    @property
    def subsampling(self):
        return self.frames[0].subsampling if self.frames else None

    def with_frames(self, frames, fps=None, source_times=None):
        return Video(tuple(frames), self.fps if fps is None else fps, source_times)


# ---------------------------------------------------------------------------
# chroma resampling


def upsample_chroma(plane, luma_shape):
    """Nearest-neighbour 2x upsample, cropped to the luma geometry."""
    up = np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)
    return up[:luma_shape[0], :luma_shape[1]]


def downsample_chroma(plane):
    """2x2 mean; odd edges are padded by repeating the last row/column."""
    rows, cols = plane.shape
    padded = np.pad(plane, ((0, rows % 2), (0, cols % 2)), mode="edge")
    return padded.reshape(padded.shape[0] // 2, 2, padded.shape[1] // 2, 2).mean(axis=(1, 3))


def full_resolution_u(frame):
    if frame.subsampling == "420":
        return upsample_chroma(frame.u, frame.shape)
    return np.array(frame.u)


def with_full_resolution_u(frame, u_full):
    if frame.subsampling == "420":
        return frame.replace(u=downsample_chroma(u_full))
    return frame.replace(u=u_full)


# ---------------------------------------------------------------------------
# YUV4MPEG2


def _parse_rate(token):
    try:
        num, den = token[1:].split(":")
        rate = Fraction(int(num), int(den))
    except (ValueError, ZeroDivisionError):
        raise VideoFormatError(f"bad frame-rate token {token!r}") from None
    if rate <= 0:
        raise VideoFormatError(f"bad frame-rate token {token!r}")
    return rate


def _parse_header(line):
    tokens = line.split()
    if not tokens or tokens[0] != _Y4M_MAGIC.decode():
        raise VideoFormatError(f"missing YUV4MPEG2 signature, got {line[:20]!r}")
    width = height = rate = expected = None
    subsampling = "420"
    for token in tokens[1:]:
        tag, value = token[0], token[1:]
        if tag in "WH":
            try:
                n = int(value)
            except ValueError:
                raise VideoFormatError(f"bad dimension token {token!r}") from None
            if n <= 0:
                raise VideoFormatError(f"bad dimension token {token!r}")
            if tag == "W":
                width = n
            else:
                height = n
        elif tag == "F":
            rate = _parse_rate(token)
        elif tag == "I":
            if value not in ("p", "?"):
                raise VideoFormatError(f"interlaced content not supported: {token!r}")
        elif tag == "A":
            pass
        elif tag == "C":
            if value not in _CHROMA_TAGS:
                raise VideoFormatError(f"unsupported colour space token {token!r}")
            subsampling = _CHROMA_TAGS[value]
        elif tag == "X":
            if value.startswith("LENGTH="):
                try:
                    expected = int(value[len("LENGTH="):])
                except ValueError:
                    raise VideoFormatError(f"bad length token {token!r}") from None
        else:
            raise VideoFormatError(f"unknown header token {token!r}")
    for name, val in (("W", width), ("H", height), ("F", rate)):
        if val is None:
            raise VideoFormatError(f"header lacks required {name} token")
    return width, height, rate, subsampling, expected


def _frame_from_bytes(payload, width, height, subsampling):
    cr, cc = chroma_shape((height, width), subsampling)
    luma = width * height
    chroma = cr * cc
    buf = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    y = buf[:luma].reshape(height, width)
    u = buf[luma:luma + chroma].reshape(cr, cc)
    v = buf[luma + chroma:].reshape(cr, cc)
    return Frame(y, u, v, subsampling)


def _frame_size(width, height, subsampling):
    cr, cc = chroma_shape((height, width), subsampling)
    return width * height + 2 * cr * cc


def read_y4m(source) -> Video:
    """Decode a YUV4MPEG2 stream (bytes or a binary file object).

    An ``XLENGTH=n`` header extension, when present, declares the frame
    count and is checked against the payload.
    """
    data = source if isinstance(source, (bytes, bytearray, memoryview)) else source.read()
    data = bytes(data)
    end = data.find(b"\n")
    if end < 0:
        raise VideoFormatError("unterminated stream header")
    try:
        header = data[:end].decode("ascii")
    except UnicodeDecodeError:
        raise VideoFormatError("stream header is not ASCII") from None
    width, height, rate, subsampling, expected = _parse_header(header)
    size = _frame_size(width, height, subsampling)

    frames = []
    pos = end + 1
    while pos < len(data):
        index = len(frames)
        line_end = data.find(b"\n", pos)
        if line_end < 0 or not data[pos:line_end].startswith(b"FRAME"):
            raise VideoFormatError(f"frame {index}: missing FRAME marker")
        start = line_end + 1
        if start + size > len(data):
            raise VideoFormatError(
                f"frame {index}: truncated payload ({len(data) - start} of {size} bytes)")
        frames.append(_frame_from_bytes(data[start:start + size], width, height, subsampling))
        pos = start + size
    if expected is not None and len(frames) < expected:
        raise VideoFormatError(
            f"frame {len(frames)}: stream truncated, header declares {expected} frames")
    return Video(tuple(frames), float(rate))


def _rate_fraction(fps):
    return Fraction(fps).limit_denominator(1001)


def quantize_plane(plane):
    """Round and clamp to 8-bit, the only place samples lose precision."""
    return np.clip(np.rint(plane), 0, 255).astype(np.uint8)


def write_y4m(video: Video) -> bytes:
    if not video.frames:
        raise ValueError("cannot write an empty video")
    rows, cols = video.shape
    rate = _rate_fraction(video.fps)
    chroma = "444" if video.subsampling == "444" else "420jpeg"
    out = io.BytesIO()
    out.write(
        f"YUV4MPEG2 W{cols} H{rows} F{rate.numerator}:{rate.denominator} "
        f"Ip A1:1 C{chroma} XLENGTH={len(video)}\n".encode("ascii"))
    for frame in video.frames:
        out.write(b"FRAME\n")
        for plane in frame.planes:
            out.write(quantize_plane(plane).tobytes())
    return out.getvalue()


def load_y4m(path) -> Video:
    with open(path, "rb") as fh:
        return read_y4m(fh)


def save_y4m(video: Video, path):
    with open(path, "wb") as fh:
        fh.write(write_y4m(video))


def read_raw_yuv(source, width, height, fps, subsampling="420") -> Video:
    """Headerless planar 8-bit YUV; geometry comes from the caller."""
    data = source if isinstance(source, (bytes, bytearray, memoryview)) else source.read()
    data = bytes(data)
    if width <= 0 or height <= 0:
        raise VideoFormatError("raw video needs positive width and height")
    size = _frame_size(width, height, subsampling)
    if len(data) % size:
        raise VideoFormatError(
            f"frame {len(data) // size}: truncated payload ({len(data) % size} of {size} bytes)")
    frames = tuple(
        _frame_from_bytes(data[i:i + size], width, height, subsampling)
        for i in range(0, len(data), size))
    return Video(frames, float(fps))


def write_raw_yuv(video: Video) -> bytes:
    return b"".join(quantize_plane(p).tobytes() for f in video.frames for p in f.planes)


# ---------------------------------------------------------------------------
# colour conversion, BT.601 full range

_RGB_TO_YUV = np.array([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
])
_YUV_TO_RGB = np.linalg.inv(_RGB_TO_YUV)
_CHROMA_OFFSET = np.array([0.0, 128.0, 128.0])


def rgb_to_yuv(rgb) -> Frame:
    """(h, w, 3) RGB array to a 4:4:4 Frame."""
    rgb = np.asarray(rgb, dtype=np.float64)
    yuv = rgb @ _RGB_TO_YUV.T + _CHROMA_OFFSET
    return Frame(yuv[..., 0], yuv[..., 1], yuv[..., 2], "444")


def yuv_to_rgb(frame: Frame):
    u, v = frame.u, frame.v
    if frame.subsampling == "420":
        u = upsample_chroma(u, frame.shape)
        v = upsample_chroma(v, frame.shape)
    yuv = np.stack([frame.y, u, v], axis=-1) - _CHROMA_OFFSET
    return np.clip(yuv @ _YUV_TO_RGB.T, 0.0, 255.0)


# ---------------------------------------------------------------------------
# synthetic clips


def _texture(rng, shape, sigmas=(1.0, 2.5, 5.0), weights=(0.35, 0.4, 0.25)):
    """Zero-mean, unit-variance multi-octave smoothed noise."""
    out = np.zeros(shape)
    for sigma, weight in zip(sigmas, weights):
        layer = gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
        out += weight * layer / layer.std()
    return out / out.std()


def _pan(canvas, shape, offset):
    """Crop of ``canvas`` at a fractional (row, col) offset, bilinear."""
    r0, c0 = int(np.floor(offset[0])), int(np.floor(offset[1]))
    fr, fc = offset[0] - r0, offset[1] - c0
    h, w = shape
    a = canvas[r0:r0 + h + 1, c0:c0 + w + 1]
    rows = a[:-1] * (1 - fr) + a[1:] * fr
    return rows[:, :-1] * (1 - fc) + rows[:, 1:] * fc


def _textured_noise(rng, shape, n, margin):
    angle = rng.uniform(0, 2 * np.pi)
    speed = rng.uniform(0.15, 0.35)
    margin = 2 * int(np.ceil(speed * n)) + 2
    canvases = [_texture(rng, (shape[0] + margin, shape[1] + margin)) for _ in range(3)]
    amp = (40.0, 18.0, 18.0)
    base = (128.0, 128.0, 128.0)
    centre = margin / 2
    for t in range(n):
        off = (centre + speed * t * np.sin(angle), centre + speed * t * np.cos(angle))
        yield [b + a * _pan(c, shape, off) for b, a, c in zip(base, amp, canvases)]


def _moving_gradient(rng, shape, n, margin):
    rows, cols = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    grain = [_texture(rng, shape, sigmas=(1.0, 3.0), weights=(0.5, 0.5)) for _ in range(3)]
    theta = rng.uniform(0, np.pi, size=3)
    period = rng.uniform(0.8, 1.6, size=3) * max(shape)
    drift = rng.uniform(0.5, 1.5, size=3)
    amp = (60.0, 25.0, 25.0)
    grain_amp = (8.0, 6.0, 6.0)
    for t in range(n):
        planes = []
        for k in range(3):
            phase = (cols * np.cos(theta[k]) + rows * np.sin(theta[k]) + drift[k] * t) / period[k]
            planes.append(128.0 + amp[k] * np.sin(2 * np.pi * phase) + grain_amp[k] * grain[k])
        yield planes


def _blocks(rng, shape, n, margin):
    block = 8
    grid = ((shape[0] + margin) // block + 2, (shape[1] + margin) // block + 2)
    levels = [
        np.kron(rng.uniform(lo, hi, size=grid), np.ones((block, block)))
        for lo, hi in ((40, 215), (90, 166), (90, 166))
    ]
    step = rng.choice([-1, 1], size=2)
    centre = margin // 2
    for t in range(n):
        shift = (t // 4) % (margin // 2)
        r0 = centre + step[0] * shift
        c0 = centre + step[1] * shift
        yield [lv[r0:r0 + shape[0], c0:c0 + shape[1]] for lv in levels]


_GENERATORS = {
    "textured-noise": _textured_noise,
    "moving-gradient": _moving_gradient,
    "blocks": _blocks,
}


def synth_video(width, height, frame_count, fps, seed, pattern="textured-noise",
                subsampling="420") -> Video:
    """Deterministic synthetic clip; identical arguments give identical output."""
    if width <= 0 or height <= 0:
        raise ValueError(f"dimensions must be positive, got {width}x{height}")
    if frame_count <= 0:
        raise ValueError(f"frame_count must be positive, got {frame_count}")
    if not fps > 0:
        raise ValueError(f"fps must be positive, got {fps}")
    if pattern not in _GENERATORS:
        raise ValueError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")
    rng = np.random.default_rng(seed)
    shape = (height, width)
    margin = 64
    frames = []
    for y, u, v in _GENERATORS[pattern](rng, shape, frame_count, margin):
        y = np.clip(y, 0.0, 255.0)
        u = np.clip(u, 0.0, 255.0)
        v = np.clip(v, 0.0, 255.0)
        if subsampling == "420":
            u, v = downsample_chroma(u), downsample_chroma(v)
        frames.append(Frame(y, u, v, subsampling))
    return Video(tuple(frames), float(fps))
