"""Deterministic temporal, geometric and signal attacks.

Attacks can be chained from a compact string form::

    rotate_crop:angle=10+framerate:fps=15,mode=nearest

Each link is ``kind[:key=value,...]``; links apply left to right.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .kernels import bilinear_sample
from .video_io import Frame, Video

FRAME_RATE_MODES = ("nearest", "blend")


class AttackError(ValueError):
    pass


# ---------------------------------------------------------------------------
# temporal


def _nearest_index(x):
    # round half up, nudged so exact ratios do not fall on the wrong side
    return int(math.floor(x + 0.5 + 1e-9))


def convert_frame_rate(video: Video, target_fps, mode="nearest") -> Video:
    """Resample the timeline to ``target_fps`` keeping the duration."""
    if not target_fps > 0 or not math.isfinite(target_fps):
        raise AttackError(f"target fps must be > 0, got {target_fps}")
    if mode not in FRAME_RATE_MODES:
        raise AttackError(f"mode must be one of {FRAME_RATE_MODES}, got {mode!r}")
    n = video.frame_count
    if n == 0:
        return video.with_frames((), fps=target_fps)
    if target_fps == video.fps:
        return video.with_frames(video.frames, fps=target_fps)
    count = max(1, _nearest_index(video.duration_seconds * target_fps))
    ratio = video.fps / target_fps
    frames = []
    for i in range(count):
        x = i * ratio
        if mode == "nearest":
            frames.append(video.frames[min(_nearest_index(x), n - 1)])
            continue
        lo = min(int(math.floor(x + 1e-9)), n - 1)
        hi = min(lo + 1, n - 1)
        w = min(max(x - lo, 0.0), 1.0)
        if w < 1e-9 or lo == hi:
            frames.append(video.frames[lo])
        else:
            a, b = video.frames[lo], video.frames[hi]
            frames.append(Frame(*((1 - w) * pa + w * pb for pa, pb in zip(a.planes, b.planes)),
                                subsampling=a.subsampling))
    return video.with_frames(frames, fps=target_fps)


def _check_fraction(fraction):
    if not 0.0 <= fraction <= 0.5:
        raise AttackError(f"fraction must lie in [0, 0.5], got {fraction}")


def drop_frames(video: Video, fraction, seed=0) -> Video:
    """Remove a random subset of frames; fps metadata is left unchanged."""
    _check_fraction(fraction)
    n = video.frame_count
    k = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    dropped = set(rng.choice(n, size=k, replace=False).tolist()) if k else set()
    kept = [i for i in range(n) if i not in dropped]
    return video.with_frames(
        [video.frames[i] for i in kept],
        source_times=tuple(i / video.fps for i in kept))


def insert_frames(video: Video, fraction, seed=0) -> Video:
    """Duplicate a random subset of frames in place."""
    _check_fraction(fraction)
    n = video.frame_count
    k = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    doubled = set(rng.choice(n, size=k, replace=False).tolist()) if k else set()
    frames = []
    for i, f in enumerate(video.frames):
        frames.append(f)
        if i in doubled:
            frames.append(f)
    return video.with_frames(frames)


def swap_frames(video: Video, pair_count, seed=0, max_distance=3) -> Video:
    """Exchange ``pair_count`` frame pairs at most ``max_distance`` apart."""
    if pair_count < 0:
        raise AttackError(f"pair_count must be >= 0, got {pair_count}")
    frames = list(video.frames)
    n = len(frames)
    if n < 2:
        return video.with_frames(frames)
    rng = np.random.default_rng(seed)
    for _ in range(int(pair_count)):
        i = int(rng.integers(0, n - 1))
        j = min(n - 1, i + int(rng.integers(1, max_distance + 1)))
        frames[i], frames[j] = frames[j], frames[i]
    return video.with_frames(frames)


def average_frames(video: Video, fraction, seed=0) -> Video:
    """Replace random frames by the mean of themselves and their neighbours."""
    _check_fraction(fraction)
    n = video.frame_count
    k = int(round(fraction * n))
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(n, size=k, replace=False).tolist()) if k else []
    frames = list(video.frames)
    for i in chosen:
        window = video.frames[max(0, i - 1):i + 2]
        frames[i] = Frame(*(np.mean([f.planes[p] for f in window], axis=0) for p in range(3)),
                          subsampling=frames[i].subsampling)
    return video.with_frames(frames)


# ---------------------------------------------------------------------------
# geometric


def _warp_plane(plane, matrix):
    """Sample ``plane`` at centre + matrix @ (p - centre) for every output pixel p."""
    h, w = plane.shape
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    dr, dc = rows - cr, cols - cc
    ys = cr + matrix[0, 0] * dr + matrix[0, 1] * dc
    xs = cc + matrix[1, 0] * dr + matrix[1, 1] * dc
    return bilinear_sample(plane, ys, xs)


def _warp_video(video, matrix):
    return video.with_frames(
        [f.map_planes(lambda p: _warp_plane(p, matrix)) for f in video.frames],
        source_times=video.source_times)


def interior_scale(height, width, angle_degrees):
    """Largest same-aspect centred rectangle inside the rotated frame, as a fraction."""
    t = math.radians(abs(angle_degrees))
    c, s = math.cos(t), math.sin(t)
    return min(width / (width * c + height * s), height / (width * s + height * c))


def rotate_crop(video: Video, angle_degrees) -> Video:
    """Rotate about the centre, crop the interior, rescale to the original size.

    The three steps are folded into one bilinear resampling.
    """
    if abs(angle_degrees) > 45:
        raise AttackError(f"|angle| must be <= 45 degrees, got {angle_degrees}")
    if not video.frames:
        return video
    h, w = video.shape
    scale = interior_scale(h, w, angle_degrees)
    t = math.radians(angle_degrees)
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    return _warp_video(video, scale * rot)


def upscale_crop(video: Video, percent) -> Video:
    """Bilinear upscale by ``percent``/100 then centre-crop to the original size."""
    if not 100 <= percent <= 200:
        raise AttackError(f"percent must lie in [100, 200], got {percent}")
    return _warp_video(video, np.eye(2) * (100.0 / percent))


def _resize_plane(plane, shape):
    h, w = plane.shape
    rows = (np.arange(shape[0]) + 0.5) * (h / shape[0]) - 0.5
    cols = (np.arange(shape[1]) + 0.5) * (w / shape[1]) - 0.5
    ys, xs = np.meshgrid(rows, cols, indexing="ij")
    return bilinear_sample(plane, ys, xs)


def downscale(video: Video, factor) -> Video:
    """Bilinear downscale by ``factor`` and back up to the original size."""
    if not 0.0 < factor < 1.0:
        raise AttackError(f"factor must lie in (0, 1), got {factor}")

    def degrade(plane):
        small = (max(1, round(plane.shape[0] * factor)), max(1, round(plane.shape[1] * factor)))
        return _resize_plane(_resize_plane(plane, small), plane.shape)

    return video.with_frames([f.map_planes(degrade) for f in video.frames],
                             source_times=video.source_times)


# ---------------------------------------------------------------------------
# signal


def add_noise(video: Video, sigma, seed=0) -> Video:
    if sigma < 0:
        raise AttackError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)

    def noisy(plane):
        return np.clip(plane + rng.normal(0.0, sigma, plane.shape), 0.0, 255.0)

    return video.with_frames([f.map_planes(noisy) for f in video.frames],
                             source_times=video.source_times)


def dct_matrix(n=8):
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    m = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    m[0] /= np.sqrt(2.0)
    return m


_DCT8 = dct_matrix(8)


def quantize_plane(plane, step):
    """8x8 block DCT, uniform quantisation, inverse DCT (JPEG-like)."""
    h, w = plane.shape
    padded = np.pad(plane, ((0, -h % 8), (0, -w % 8)), mode="edge")
    blocks = padded.reshape(padded.shape[0] // 8, 8, padded.shape[1] // 8, 8)
    coeffs = np.einsum("ij,ajbk,lk->aibl", _DCT8, blocks, _DCT8)
    coeffs = np.round(coeffs / step) * step
    restored = np.einsum("ji,ajbk,kl->aibl", _DCT8, coeffs, _DCT8)
    return np.clip(restored.reshape(padded.shape)[:h, :w], 0.0, 255.0)


def quantize(video: Video, step) -> Video:
    if int(step) != step or not 1 <= step <= 64:
        raise AttackError(f"step must be an integer in 1..64, got {step}")
    return video.with_frames([f.map_planes(lambda p: quantize_plane(p, step))
                              for f in video.frames], source_times=video.source_times)


# ---------------------------------------------------------------------------
# attack specs

# kind -> (function, {param: (type, default or REQUIRED)})
REQUIRED = object()
_KINDS = {
    "none": (lambda v: v, {}),
    "framerate": (lambda v, fps, mode: convert_frame_rate(v, fps, mode),
                  {"fps": (float, REQUIRED), "mode": (str, "nearest")}),
    "drop": (lambda v, fraction, seed: drop_frames(v, fraction, seed),
             {"fraction": (float, REQUIRED), "seed": (int, 0)}),
    "insert": (lambda v, fraction, seed: insert_frames(v, fraction, seed),
               {"fraction": (float, REQUIRED), "seed": (int, 0)}),
    "swap": (lambda v, pairs, seed: swap_frames(v, pairs, seed),
             {"pairs": (int, REQUIRED), "seed": (int, 0)}),
    "average": (lambda v, fraction, seed: average_frames(v, fraction, seed),
                {"fraction": (float, REQUIRED), "seed": (int, 0)}),
    "rotate_crop": (lambda v, angle: rotate_crop(v, angle), {"angle": (float, REQUIRED)}),
    "upscale_crop": (lambda v, percent: upscale_crop(v, percent), {"percent": (float, REQUIRED)}),
    "downscale": (lambda v, factor: downscale(v, factor), {"factor": (float, REQUIRED)}),
    "noise": (lambda v, sigma, seed: add_noise(v, sigma, seed),
              {"sigma": (float, REQUIRED), "seed": (int, 0)}),
    "quantize": (lambda v, step: quantize(v, step), {"step": (int, REQUIRED)}),
}


def grammar():
    lines = ["attack chain: LINK[+LINK...], LINK = kind[:key=value[,key=value...]]"]
    for kind, (_, params) in _KINDS.items():
        args = ",".join(
            f"{k}=<{t.__name__}>" if d is REQUIRED else f"{k}=<{t.__name__}, default {d}>"
            for k, (t, d) in params.items())
        lines.append(f"  {kind}" + (f":{args}" if args else ""))
    return "\n".join(lines)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def apply(self, video: Video) -> Video:
        fn, _ = _KINDS[self.kind]
        return fn(video, **self.params)

    def __str__(self):
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())


def _fmt(value):
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def parse_attack(text) -> AttackSpec:
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind not in _KINDS:
        raise AttackError(f"unknown attack kind {kind!r}\n{grammar()}")
    _, schema = _KINDS[kind]
    given = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in schema:
                raise AttackError(f"bad parameter {item.strip()!r} for {kind}\n{grammar()}")
            typ, _ = schema[key]
            try:
                if typ is int:
                    as_float = float(value)
                    if not as_float.is_integer():
                        raise ValueError
                    given[key] = int(as_float)
                else:
                    given[key] = typ(value.strip())
            except ValueError:
                raise AttackError(f"parameter {key} of {kind} needs a {typ.__name__}, "
                                  f"got {value!r}\n{grammar()}") from None
    params = {}
    for key, (typ, default) in schema.items():
        if key in given:
            params[key] = given[key]
        elif default is REQUIRED:
            raise AttackError(f"{kind} requires parameter {key}\n{grammar()}")
        else:
            params[key] = default
    spec = AttackSpec(kind, params)
    _validate(spec)
    return spec


def _validate(spec):
    p = spec.params
    checks = {
        "framerate": lambda: p["fps"] > 0 and math.isfinite(p["fps"]) and p["mode"] in FRAME_RATE_MODES,
        "drop": lambda: 0 <= p["fraction"] <= 0.5,
        "insert": lambda: 0 <= p["fraction"] <= 0.5,
        "average": lambda: 0 <= p["fraction"] <= 0.5,
        "swap": lambda: p["pairs"] >= 0,
        "rotate_crop": lambda: abs(p["angle"]) <= 45,
        "upscale_crop": lambda: 100 <= p["percent"] <= 200,
        "downscale": lambda: 0 < p["factor"] < 1,
        "noise": lambda: p["sigma"] >= 0,
        "quantize": lambda: 1 <= p["step"] <= 64,
    }
    check = checks.get(spec.kind)
    if check is not None and not check():
        raise AttackError(f"parameters out of range: {spec}\n{grammar()}")


def parse_chain(text):
    links = [part for part in text.split("+")]
    if not text.strip() or any(not part.strip() for part in links):
        raise AttackError(f"empty attack chain link in {text!r}\n{grammar()}")
    return [parse_attack(part) for part in links]


def apply_chain(video: Video, chain) -> Video:
    if isinstance(chain, str):
        chain = parse_chain(chain)
    for spec in chain:
        video = spec.apply(video)
    return video
