"""PSNR between videos and NC / BER between watermark symbol sequences."""
from dataclasses import dataclass, field
import csv
import io
import math

import numpy as np

from .video_io import Video
from .watermark import ERASURE

PEAK = 255.0


class MetricError(ValueError):
    pass


def _check_pair(a: Video, b: Video):
    if a.frame_count != b.frame_count:
        raise MetricError(f"frame counts differ: {a.frame_count} vs {b.frame_count}")
    if a.frame_count == 0:
        raise MetricError("cannot compare empty videos")
    if a.shape != b.shape or a.subsampling != b.subsampling:
        raise MetricError(f"frame layouts differ: {a.shape}/{a.subsampling} "
                          f"vs {b.shape}/{b.subsampling}")


def _psnr_from(sq_error, count):
    if sq_error == 0:
        return math.inf
    return 10.0 * math.log10(PEAK ** 2 * count / sq_error)


def psnr_channels(a: Video, b: Video):
    """PSNR per plane as a dict with keys y, u, v and pooled."""
    _check_pair(a, b)
    sums = [0.0, 0.0, 0.0]
    counts = [0, 0, 0]
    for fa, fb in zip(a.frames, b.frames):
        for p, (pa, pb) in enumerate(zip(fa.planes, fb.planes)):
            diff = pa - pb
            sums[p] += float(np.sum(diff * diff))
            counts[p] += diff.size
    out = {name: _psnr_from(s, n) for name, s, n in zip("yuv", sums, counts)}
    out["pooled"] = _psnr_from(sum(sums), sum(counts))
    return out


def psnr(a: Video, b: Video):
    """Sample-count weighted PSNR over Y, U and V of every frame; inf if identical."""
    return psnr_channels(a, b)["pooled"]


def _check_sequences(reference, detected):
    reference = [int(x) for x in reference]
    detected = [int(x) for x in detected]
    if len(reference) != len(detected):
        raise MetricError(f"sequence lengths differ: {len(reference)} vs {len(detected)}")
    if not reference:
        raise MetricError("sequences are empty")
    if any(x not in (1, -1) for x in reference):
        raise MetricError("reference symbols must be +1 or -1")
    if any(x not in (1, -1, ERASURE) for x in detected):
        raise MetricError("detected symbols must be +1, -1 or erasure")
    return reference, detected


def nc(reference, detected):
    """Normalised correlation of +-1 sequences; erasures contribute zero."""
    reference, detected = _check_sequences(reference, detected)
    return sum(r * d for r, d in zip(reference, detected)) / len(reference)


def ber(reference, detected):
    """Fraction of positions that differ; an erasure always counts as an error."""
    reference, detected = _check_sequences(reference, detected)
    return sum(r != d for r, d in zip(reference, detected)) / len(reference)


@dataclass(frozen=True)
class RobustnessReport:
    video: str
    attack: str
    nc: float
    ber: float
    erasure_count: int
    verdicts: tuple = field(default=())
    psnr_embed: float = math.nan
    min_group_frames: int = 0

    @classmethod
    def score(cls, video, attack, reference, detected, psnr_embed=math.nan, occupancy=()):
        return cls(
            video=video,
            attack=attack,
            nc=nc(reference, detected),
            ber=ber(reference, detected),
            erasure_count=sum(1 for d in detected if d == ERASURE),
            verdicts=tuple(int(d) for d in detected),
            psnr_embed=psnr_embed,
            min_group_frames=min(occupancy) if occupancy else 0,
        )


CSV_COLUMNS = ("video", "attack", "nc", "ber", "psnr_embed", "erasures", "min_group_frames")


def format_db(value):
    if math.isinf(value):
        return "inf"
    if math.isnan(value):
        return "nan"
    return f"{value:.4f}"


def _row(report):
    return [report.video, report.attack, f"{report.nc:.4f}", f"{report.ber:.4f}",
            format_db(report.psnr_embed), str(report.erasure_count),
            str(report.min_group_frames)]


def reports_to_csv(reports):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(_row(r))
    return buf.getvalue()


def reports_to_table(reports):
    rows = [list(CSV_COLUMNS)] + [_row(r) for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(CSV_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def summarize(reports):
    """Mean NC and BER per attack, in first-seen order."""
    order = []
    acc = {}
    for r in reports:
        if r.attack not in acc:
            order.append(r.attack)
            acc[r.attack] = []
        acc[r.attack].append(r)
    return [(a, float(np.mean([r.nc for r in acc[a]])), float(np.mean([r.ber for r in acc[a]])),
             min(r.nc for r in acc[a])) for a in order]
