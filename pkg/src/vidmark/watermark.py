"""Candidate curves, per-frame bit embedding and group-level voting.

A frame carries one bit in the shape of its *candidate curve*: the leading
singular values of the six deepest-level DTCWT sub-band magnitudes of the U
plane.  Embedding reshapes the curve into a line through its mean that rises
(bit +1) or falls (bit −1); extraction reads back the sign of the fitted
slope.  Bits are assigned to time intervals rather than frame indices, so
the same frames vote for the same bit after frame-rate conversion.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np

from . import dtcwt
from .svd import ConvergenceError, decompose, leading_singular_value
from .video_io import Frame, Video, full_resolution_u, with_full_resolution_u

log = logging.getLogger(__name__)

ERASURE = 0
EPS = 1e-6
RATIO_BOUNDS = (0.05, 20.0)
DIRECTIONS = np.arange(1, 7, dtype=np.float64)
DETECTORS = ("slope", "comparator")


class UnembeddableFrame(ValueError):
    """Frame has (numerically) no high-pass energy to reshape."""


@dataclass(frozen=True)
class EmbedParams:
    strength_k: float = 0.8
    depth: int = 3
    detector: str = "slope"

    def __post_init__(self):
        if not 0.0 < self.strength_k <= 1.0:
            raise ValueError(f"strength_k must lie in (0, 1], got {self.strength_k}")
        if not 1 <= self.depth <= dtcwt.MAX_LEVELS:
            raise ValueError(f"depth must lie in 1..{dtcwt.MAX_LEVELS}, got {self.depth}")
        if self.detector not in DETECTORS:
            raise ValueError(f"detector must be one of {DETECTORS}, got {self.detector!r}")


@dataclass(frozen=True)
class CandidateCurve:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.shape != (6,):
            raise ValueError(f"a candidate curve has six values, got {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("candidate values must be finite and non-negative")
        object.__setattr__(self, "values", values)

    @property
    def mean(self):
        return float(self.values.mean())


def _sigma1(matrix):
    try:
        return leading_singular_value(matrix)
    except ConvergenceError:
        return float(decompose(matrix).s[0])


def curve_from_pyramid(pyramid, depth) -> CandidateCurve:
    return CandidateCurve(np.array([
        _sigma1(dtcwt.subband_magnitude(pyramid, depth, d)) for d in range(1, 7)
    ]))


def _centred_u(frame):
    """Full-resolution U with its mean removed.

    The q-shift filters leak a small fraction of a constant plane into the
    deep high-pass bands near the borders; taking the mean out first makes a
    flat plane give an exactly flat (zero) curve.
    """
    u = full_resolution_u(frame)
    mean = float(u.mean())
    return u - mean, mean


def candidate_curve(frame: Frame, depth=3) -> CandidateCurve:
    pyramid = dtcwt.forward(_centred_u(frame)[0], depth)
    return curve_from_pyramid(pyramid, depth)


def target_curve(curve: CandidateCurve, w, k) -> CandidateCurve:
    """Line through (3.5, mean) whose endpoints sit at mean·(1 ∓ k)."""
    if w not in (1, -1):
        raise ValueError(f"bit must be +1 or -1, got {w}")
    if not 0.0 < k <= 1.0:
        raise ValueError(f"k must lie in (0, 1], got {k}")
    y0 = curve.mean
    if y0 <= EPS:
        raise UnembeddableFrame(f"candidate curve mean {y0:.3g} is below {EPS}")
    return CandidateCurve(y0 * (1.0 + w * k * (DIRECTIONS - 3.5) / 2.5))


def embed_bit(frame: Frame, w, params: EmbedParams = EmbedParams()) -> Frame:
    """Reshape the frame's candidate curve to carry ``w``; only U changes."""
    u, mean = _centred_u(frame)
    pyramid = dtcwt.forward(u, params.depth)
    curve = curve_from_pyramid(pyramid, params.depth)
    target = target_curve(curve, w, params.strength_k)
    for d in range(1, 7):
        y = curve.values[d - 1]
        if y <= EPS:
            continue
        ratio = float(np.clip(target.values[d - 1] / y, *RATIO_BOUNDS))
        pyramid = dtcwt.scale_subband(pyramid, params.depth, d, ratio)
    return with_full_resolution_u(frame, dtcwt.inverse(pyramid) + mean)


def fit_slope(values):
    """Least-squares slope of ``values`` against d = 1..6, skipping near-zero points."""
    values = np.asarray(values, dtype=np.float64)
    usable = values > EPS
    if usable.sum() < 2:
        return 0.0
    x = DIRECTIONS[usable]
    y = values[usable]
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


def detect(curve: CandidateCurve, detector="slope"):
    """Bit and confidence from a candidate curve."""
    values = curve.values
    mean = curve.mean
    if mean <= EPS:
        return ERASURE, 0.0
    slope = fit_slope(values)
    confidence = abs(slope) * 6.0 / (mean + EPS)
    if detector == "comparator":
        rising = values[1] < values[3] and values[2] < values[4]
        return (1 if rising else -1), confidence
    if slope > 0:
        return 1, confidence
    if slope < 0:
        return -1, confidence
    return ERASURE, 0.0


def extract_bit(frame: Frame, params: EmbedParams = EmbedParams()):
    return detect(candidate_curve(frame, params.depth), params.detector)


# ---------------------------------------------------------------------------
# group planning and sequence codec


@dataclass(frozen=True)
class GroupPlan:
    """Partition of a video's timeline into equal watermark-bit intervals."""

    group_duration_seconds: float
    group_count: int
    clip_ratio_c: float
    duration_seconds: float

    def group_of_time(self, t):
        g = math.floor(t / self.group_duration_seconds + 1e-9)
        return min(max(g, 0), self.group_count - 1)

    def assign(self, frame_count, fps):
        """Group index of each frame, timestamps taken as i / fps."""
        return np.array([self.group_of_time(i / fps) for i in range(frame_count)], dtype=int)

    def boundaries(self):
        return [j * self.group_duration_seconds for j in range(self.group_count + 1)]


def plan_groups(video: Video, clip_ratio_c=1 / 6) -> GroupPlan:
    if not 0.0 < clip_ratio_c <= 1.0:
        raise ValueError(f"clip_ratio_c must lie in (0, 1], got {clip_ratio_c}")
    if video.frame_count == 0:
        raise ValueError("cannot plan groups for an empty video")
    duration = video.duration_seconds
    return GroupPlan(
        group_duration_seconds=duration * clip_ratio_c,
        group_count=max(1, round(1.0 / clip_ratio_c)),
        clip_ratio_c=clip_ratio_c,
        duration_seconds=duration,
    )


@dataclass(frozen=True)
class EmbedLog:
    plan: GroupPlan
    frame_groups: np.ndarray
    skipped: tuple

    def per_group(self):
        """(frames, embedded) per group."""
        rows = []
        skipped = set(self.skipped)
        for j in range(self.plan.group_count):
            members = np.flatnonzero(self.frame_groups == j)
            rows.append((len(members), sum(1 for i in members if i not in skipped)))
        return rows


def embed_sequence_logged(video: Video, bits, params: EmbedParams = EmbedParams(),
                          clip_ratio_c=1 / 6):
    plan = plan_groups(video, clip_ratio_c)
    bits = [int(b) for b in bits]
    if len(bits) != plan.group_count:
        raise ValueError(
            f"payload has {len(bits)} bits but the plan needs group_count={plan.group_count}")
    if any(b not in (1, -1) for b in bits):
        raise ValueError("payload bits must be +1 or -1")
    groups = plan.assign(video.frame_count, video.fps)
    frames = []
    skipped = []
    for i, (frame, g) in enumerate(zip(video.frames, groups)):
        try:
            frames.append(embed_bit(frame, bits[g], params))
        except UnembeddableFrame as exc:
            log.info("frame %d skipped: %s", i, exc)
            skipped.append(i)
            frames.append(frame)
    out = Video(tuple(frames), video.fps, video.source_times)
    return out, EmbedLog(plan, groups, tuple(skipped))


def embed_sequence(video: Video, bits, params: EmbedParams = EmbedParams(),
                   clip_ratio_c=1 / 6) -> Video:
    return embed_sequence_logged(video, bits, params, clip_ratio_c)[0]


@dataclass(frozen=True)
class GroupVerdicts:
    symbols: tuple
    flags: tuple
    frame_bits: tuple
    frame_confidences: tuple
    occupancy: tuple

    def __post_init__(self):
        for s, f in zip(self.symbols, self.flags):
            assert s == vote(f), "symbol inconsistent with flag"

    def mean_confidence(self):
        """Average per-frame confidence within each group (0 for empty groups)."""
        out = []
        start = 0
        for n in self.occupancy:
            chunk = self.frame_confidences[start:start + n]
            out.append(float(np.mean(chunk)) if n else 0.0)
            start += n
        return out


def vote(flag):
    if flag > 0:
        return 1
    if flag < 0:
        return -1
    return ERASURE


def tally(frame_bits, frame_groups, group_count):
    """Per-group vote sums; erasure frames contribute nothing."""
    flags = [0] * group_count
    for b, g in zip(frame_bits, frame_groups):
        flags[g] += int(b)
    return flags


def extract_sequence(video: Video, params: EmbedParams = EmbedParams(),
                     clip_ratio_c=1 / 6) -> GroupVerdicts:
    plan = plan_groups(video, clip_ratio_c)
    groups = plan.assign(video.frame_count, video.fps)
    bits = []
    confidences = []
    for frame in video.frames:
        b, c = extract_bit(frame, params)
        bits.append(b)
        confidences.append(c)
    order = np.argsort(groups, kind="stable")
    flags = tally(bits, groups, plan.group_count)
    return GroupVerdicts(
        symbols=tuple(vote(f) for f in flags),
        flags=tuple(flags),
        frame_bits=tuple(bits[i] for i in order),
        frame_confidences=tuple(confidences[i] for i in order),
        occupancy=tuple(int(np.sum(groups == j)) for j in range(plan.group_count)),
    )


# ---------------------------------------------------------------------------
# payload helpers


def bits_from_string(text):
    """"1"/"0" characters to +1/−1."""
    text = text.strip()
    if not text or any(ch not in "01" for ch in text):
        raise ValueError(f"payload must be a non-empty string of 0/1, got {text!r}")
    return [1 if ch == "1" else -1 for ch in text]


def bits_from_seed(seed, count):
    rng = np.random.default_rng(seed)
    return [int(b) for b in rng.choice(np.array([-1, 1]), size=count)]


def symbols_to_string(symbols):
    return "".join({1: "1", -1: "0"}.get(int(s), "?") for s in symbols)
