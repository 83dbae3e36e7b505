"""Time the numba and pure-numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--repeat N]

Also times one frame of embedding under whichever backend is active
(set VIDMARK_NO_NUMBA=1 to force numpy).
"""
import argparse
import time

import numpy as np

from vidmark import kernels, watermark
from vidmark.video_io import synth_video


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng):
    x = rng.normal(size=(70, 64))
    h = rng.normal(size=19)
    a = rng.normal(size=(32, 32))
    plane = rng.uniform(0, 255, (64, 64))
    ys = rng.uniform(0, 63, (64, 64))
    xs = rng.uniform(0, 63, (64, 64))

    def jacobi(fn):
        def go():
            w = a.copy()
            fn(w, np.eye(a.shape[1]), a.shape[0] * np.finfo(float).eps, 60)
        return go

    return [
        ("convolve 70x64 * 19 taps", lambda: kernels.convolve_columns_numba(x, h),
         lambda: kernels.convolve_columns_numpy(x, h)),
        ("jacobi svd 32x32", jacobi(kernels.jacobi_sweeps_numba),
         jacobi(kernels.jacobi_sweeps_numpy)),
        ("bilinear 64x64", lambda: kernels.bilinear_sample_numba(plane, ys, xs),
         lambda: kernels.bilinear_sample_numpy(plane, ys, xs)),
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, fast, slow in cases(rng):
        fast()  # compile outside the timed region
        tn = best_of(fast, args.repeat)
        tp = best_of(slow, args.repeat)
        print(f"{name:<28}{1e3 * tn:>10.3f}{1e3 * tp:>10.3f}{tp / tn:>8.1f}x")

    frame = synth_video(64, 64, 1, 30, seed=0).frames[0]
    watermark.embed_bit(frame, 1)
    t = best_of(lambda: watermark.embed_bit(frame, 1), max(3, args.repeat // 5))
    print(f"\nembed_bit 64x64 ({kernels.backend()} backend): {1e3 * t:.2f} ms")


if __name__ == "__main__":
    main()
