"""Compare the compiled and NumPy co-occurrence kernels.

    python benchmarks/bench_glcm.py [--sizes 32 128 512] [--levels 16] [--repeats 50]

Also times a plain nested-loop reference on the smallest size so the gap to
interpreted Python is visible.
"""

import argparse
import timeit

import numpy as np

from opstage import _glcm_py

try:
    from opstage import _glcm_core
except ImportError:
    _glcm_core = None

OFFSETS = [(1, 0), (0, 1), (2, 0), (1, 1)]


def loop_counts(pixels, levels, dx, dy):
    h, w = pixels.shape
    rows = pixels.tolist()
    out = [[0] * levels for _ in range(levels)]
    for r in range(h - dy):
        for c in range(w - dx):
            out[rows[r][c]][rows[r + dy][c + dx]] += 1
    return out


def bench(fn, px, levels, repeats):
    def run():
        for dx, dy in OFFSETS:
            fn(px, levels, dx, dy)

    return min(timeit.repeat(run, number=1, repeat=repeats))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 128, 512, 1024])
    ap.add_argument("--levels", type=int, default=16)
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()

    kernels = {"numpy": _glcm_py.glcm_counts}
    if _glcm_core is not None:
        kernels["cython"] = _glcm_core.glcm_counts
    else:
        print("compiled kernel not built; timing the NumPy fallback only")

    rng = np.random.default_rng(0)
    print(f"{'size':>6} " + " ".join(f"{k:>12}" for k in kernels) + f" {'speedup':>9}")
    for size in args.sizes:
        px = rng.integers(0, args.levels, size=(size, size)).astype(np.int32)
        ref = _glcm_py.glcm_counts(px, args.levels, 1, 1)
        for fn in kernels.values():
            assert np.array_equal(fn(px, args.levels, 1, 1), ref)
        times = {k: bench(fn, px, args.levels, args.repeats) for k, fn in kernels.items()}
        speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{size:>6} " + " ".join(f"{t * 1e3:>10.3f}ms" for t in times.values()) + f" {speed:>8.1f}x")

    size = args.sizes[0]
    px = rng.integers(0, args.levels, size=(size, size)).astype(np.int32)
    t = bench(loop_counts, px, args.levels, 3)
    print(f"pure-Python nested loop at {size}x{size}: {t * 1e3:.3f} ms")


if __name__ == "__main__":
    main()
