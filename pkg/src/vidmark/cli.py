"""vidmark command line: embed, extract, attack, psnr, nc, synth and bench."""
import argparse
from concurrent.futures import ProcessPoolExecutor
import logging
import sys
from pathlib import Path

from . import attacks, metrics, video_io
from . import watermark as wm
from .dtcwt import DtcwtError
from .svd import ConvergenceError, SvdError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PROCESSING = 0, 1, 2, 3

# (label, chain) pairs; one row per robustness condition
ATTACK_MATRIX = (
    ("none", "none"),
    ("compression", "quantize:step=8"),
    ("downscale_0.5", "downscale:factor=0.5"),
    ("upscale_crop_110", "upscale_crop:percent=110"),
    ("upscale_crop_120", "upscale_crop:percent=120"),
    ("upscale_crop_130", "upscale_crop:percent=130"),
    ("rotate_crop_5", "rotate_crop:angle=5"),
    ("rotate_crop_10", "rotate_crop:angle=10"),
    ("rotate_crop_15", "rotate_crop:angle=15"),
    ("framerate_50", "framerate:fps=50"),
    ("framerate_40", "framerate:fps=40"),
    ("framerate_15", "framerate:fps=15"),
    ("framerate_5", "framerate:fps=5"),
    ("rotate_crop_10+framerate_15", "rotate_crop:angle=10+framerate:fps=15"),
)

CORPUS_SIZE = 5
CORPUS_SHAPE = (64, 64)
CORPUS_FRAMES = 300
CORPUS_FPS = 30.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# corpus and benchmark


def corpus_video(index, seed=0, frames=CORPUS_FRAMES, shape=CORPUS_SHAPE, fps=CORPUS_FPS):
    pattern = video_io.PATTERNS[index % len(video_io.PATTERNS)]
    video = video_io.synth_video(shape[1], shape[0], frames, fps,
                                 seed=seed * 1000 + index, pattern=pattern)
    return f"v{index}-{pattern}", video


def corpus_payload(index, seed, count):
    return wm.bits_from_seed(seed * 1000 + 500 + index, count)


def bench_video(index, seed=0, params=wm.EmbedParams(), clip_ratio_c=1 / 6,
                matrix=ATTACK_MATRIX, frames=CORPUS_FRAMES):
    """Embed one corpus video and score every attack row against it."""
    name, video = corpus_video(index, seed, frames)
    plan = wm.plan_groups(video, clip_ratio_c)
    bits = corpus_payload(index, seed, plan.group_count)
    marked = wm.embed_sequence(video, bits, params, clip_ratio_c)
    quality = metrics.psnr(video, marked)
    reports = []
    for label, chain in matrix:
        attacked = attacks.apply_chain(marked, chain)
        verdicts = wm.extract_sequence(attacked, params, clip_ratio_c)
        reports.append(metrics.RobustnessReport.score(
            name, label, bits, verdicts.symbols, quality, verdicts.occupancy))
    return reports


def run_bench(seed=0, params=wm.EmbedParams(), clip_ratio_c=1 / 6, videos=CORPUS_SIZE,
              jobs=1, matrix=ATTACK_MATRIX, frames=CORPUS_FRAMES):
    """Reports for every corpus video and attack row, in corpus order."""
    args = [(i, seed, params, clip_ratio_c, matrix, frames) for i in range(videos)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_video = list(pool.map(_bench_star, args))
    else:
        per_video = [_bench_star(a) for a in args]
    return [r for rows in per_video for r in rows]


def _bench_star(args):
    return bench_video(*args)


# ---------------------------------------------------------------------------
# helpers


def _load(args):
    path = Path(args.input)
    if path.suffix.lower() == ".y4m":
        return video_io.load_y4m(path)
    if args.width is None or args.height is None:
        raise UsageError("raw YUV input needs --width and --height (and optionally --fps)")
    return video_io.read_raw_yuv(path.read_bytes(), args.width, args.height,
                                 args.fps, args.subsampling)


def _save(video, path):
    path = Path(path)
    if path.suffix.lower() in (".yuv", ".raw"):
        path.write_bytes(video_io.write_raw_yuv(video))
    else:
        video_io.save_y4m(video, path)


def _params(args):
    try:
        return wm.EmbedParams(strength_k=args.strength, depth=args.depth, detector=args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_symbols(text):
    table = {"1": 1, "0": -1, "?": wm.ERASURE}
    if not text or any(ch not in table for ch in text):
        raise UsageError(f"expected a string of 0/1/? symbols, got {text!r}")
    return [table[ch] for ch in text]


# ---------------------------------------------------------------------------
# subcommands


def cmd_embed(args):
    video = _load(args)
    params = _params(args)
    plan = wm.plan_groups(video, args.clip_ratio)
    if args.payload is not None:
        try:
            bits = wm.bits_from_string(args.payload)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if len(bits) != plan.group_count:
            raise UsageError(f"payload has {len(bits)} bits; this video needs "
                             f"{plan.group_count} (one per group)")
    else:
        bits = wm.bits_from_seed(args.seed, plan.group_count)
    marked, log = wm.embed_sequence_logged(video, bits, params, args.clip_ratio)
    _save(marked, args.output)
    # score what was written, i.e. after 8-bit rounding
    written = marked.with_frames([f.map_planes(lambda p: video_io.quantize_plane(p).astype(float))
                                  for f in marked.frames])
    quality = metrics.psnr_channels(video, written)
    print(f"payload {wm.symbols_to_string(bits)}")
    print("psnr pooled {} dB (y {} u {} v {})".format(
        *(metrics.format_db(quality[k]) for k in ("pooled", "y", "u", "v"))))
    for j, (frames, embedded) in enumerate(log.per_group()):
        print(f"group {j}: bit {bits[j]:+d} frames {frames} embedded {embedded}")
    return EXIT_OK


def cmd_extract(args):
    video = _load(args)
    verdicts = wm.extract_sequence(video, _params(args), args.clip_ratio)
    print(wm.symbols_to_string(verdicts.symbols))
    for j, (flag, n, conf) in enumerate(zip(verdicts.flags, verdicts.occupancy,
                                            verdicts.mean_confidence())):
        print(f"group {j}: flag {flag:+d} frames {n} confidence {conf:.4f}")
    if args.payload is not None:
        reference = wm.bits_from_string(args.payload)
        if len(reference) != len(verdicts.symbols):
            raise UsageError(f"reference payload has {len(reference)} bits, "
                             f"extraction produced {len(verdicts.symbols)}")
        print(f"nc {metrics.nc(reference, verdicts.symbols):.4f} "
              f"ber {metrics.ber(reference, verdicts.symbols):.4f}")
    return EXIT_OK


def cmd_attack(args):
    try:
        chain = attacks.parse_chain(args.attack)
    except attacks.AttackError as exc:
        raise UsageError(str(exc)) from None
    video = _load(args)
    out = attacks.apply_chain(video, chain)
    _save(out, args.output)
    print(f"{' + '.join(str(s) for s in chain)}: {video.frame_count} frames @ "
          f"{video.fps:g} fps -> {out.frame_count} frames @ {out.fps:g} fps")
    return EXIT_OK


def cmd_psnr(args):
    a = _load(args)
    ref_args = argparse.Namespace(**{**vars(args), "input": args.reference})
    b = _load(ref_args)
    quality = metrics.psnr_channels(b, a)
    for key in ("pooled", "y", "u", "v"):
        print(f"{key} {metrics.format_db(quality[key])}")
    return EXIT_OK


def cmd_nc(args):
    reference = _parse_symbols(args.reference)
    detected = _parse_symbols(args.detected)
    if wm.ERASURE in reference:
        raise UsageError("reference may not contain erasures")
    if len(reference) != len(detected):
        raise UsageError(f"lengths differ: {len(reference)} vs {len(detected)}")
    print(f"nc {metrics.nc(reference, detected):.4f}")
    print(f"ber {metrics.ber(reference, detected):.4f}")
    return EXIT_OK


def cmd_synth(args):
    video = video_io.synth_video(args.width or 64, args.height or 64, args.frames,
                                 args.fps, args.seed, args.pattern, args.subsampling)
    _save(video, args.output)
    print(f"wrote {video.frame_count} frames {video.shape[1]}x{video.shape[0]} "
          f"@ {video.fps:g} fps to {args.output}")
    return EXIT_OK


def cmd_bench(args):
    params = _params(args)
    reports = run_bench(args.seed, params, args.clip_ratio, args.videos, args.jobs)
    text = metrics.reports_to_csv(reports)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    print(metrics.reports_to_table(reports), file=sys.stderr if not args.report else sys.stdout)
    print("\nattack                         mean_nc  mean_ber  min_nc",
          file=sys.stderr if not args.report else sys.stdout)
    for attack, mean_nc, mean_ber, min_nc in metrics.summarize(reports):
        print(f"{attack:<30} {mean_nc:7.4f}  {mean_ber:8.4f}  {min_nc:6.4f}",
              file=sys.stderr if not args.report else sys.stdout)
    empty = [r for r in reports if r.min_group_frames == 0]
    if empty:
        print(f"warning: {len(empty)} rows have an empty group", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_io(p, output=True):
    p.add_argument("--input", required=True, help="Y4M file, or raw planar YUV with --width/--height")
    if output:
        p.add_argument("--output", required=True, help="output path (.y4m, or .yuv for raw)")
    p.add_argument("--width", type=int, help="raw YUV width")
    p.add_argument("--height", type=int, help="raw YUV height")
    p.add_argument("--fps", type=float, default=30.0, help="raw YUV frame rate")
    p.add_argument("--subsampling", choices=video_io.SUBSAMPLINGS, default="420")


def _add_codec(p):
    p.add_argument("--strength", type=float, default=0.8, help="embedding strength k in (0, 1]")
    p.add_argument("--clip-ratio", type=float, default=1 / 6,
                   help="group duration as a fraction of the video duration")
    p.add_argument("--depth", type=int, default=3, help="DTCWT level used for the curve")
    p.add_argument("--mode", choices=wm.DETECTORS, default="slope", help="bit detector")


def build_parser():
    parser = _Parser(prog="vidmark", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", help="embed a payload")
    _add_io(p)
    _add_codec(p)
    p.add_argument("--payload", help="bitstring of 0/1, one bit per group")
    p.add_argument("--seed", type=int, default=0, help="payload seed when --payload is absent")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover a payload")
    _add_io(p, output=False)
    _add_codec(p)
    p.add_argument("--payload", help="reference bitstring; prints NC and BER when given")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("attack", help="apply an attack chain")
    _add_io(p)
    p.add_argument("--attack", required=True, help="chain such as rotate_crop:angle=10+framerate:fps=15")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("psnr", help="PSNR between two videos")
    _add_io(p, output=False)
    p.add_argument("--reference", required=True, help="reference video path")
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("nc", help="NC and BER between two symbol strings")
    p.add_argument("--reference", required=True, help="reference bits, e.g. 101100")
    p.add_argument("--detected", required=True, help="detected symbols, '?' for erasure")
    p.set_defaults(func=cmd_nc)

    p = sub.add_parser("synth", help="write a synthetic test clip")
    p.add_argument("--output", required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--frames", type=int, default=CORPUS_FRAMES)
    p.add_argument("--fps", type=float, default=CORPUS_FPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pattern", choices=video_io.PATTERNS, default="textured-noise")
    p.add_argument("--subsampling", choices=video_io.SUBSAMPLINGS, default="420")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="run the robustness matrix on the synthetic corpus")
    _add_codec(p)
    p.add_argument("--seed", type=int, default=0, help="corpus and payload seed")
    p.add_argument("--videos", type=int, default=CORPUS_SIZE)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--report", help="CSV output path (stdout when absent)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"vidmark: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, video_io.VideoFormatError) as exc:
        print(f"vidmark: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, DtcwtError, SvdError, ConvergenceError, ArithmeticError) as exc:
        print(f"vidmark: processing error: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
