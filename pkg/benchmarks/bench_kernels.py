"""Compare the compiled kernels with their pure-Python fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Each kernel is run on the same seeded input by both backends; outputs are
checked for equality before timing.
"""

import argparse
import timeit

import numpy as np

from ppgdtuq import _pykernels

try:
    from ppgdtuq import _ckernels
except ImportError:
    _ckernels = None


def cases(scale, rng):
    n = int(800 * scale)
    x = rng.normal(size=n)
    taps = rng.normal(size=65)
    u = rng.uniform(size=int(100_000 * scale))
    err = (rng.uniform(size=u.size) < 0.2).astype(np.float64)
    starts = np.arange(0, n - 64 + 1, 16, dtype=np.int64)
    windows = rng.normal(size=(starts.size, 64))
    return {
        "local_peaks (800 samples)": ("local_peaks", (x, 9, -np.inf)),
        "reflect_convolve (800 x 65 taps)": ("reflect_convolve", (x, taps)),
        "bin_accumulate (100k items, 10 bins)": ("bin_accumulate", (u, err, 10)),
        "overlap_add (47 windows of 64)": ("overlap_add", (windows, starts, n)),
    }


def best_time(fn, args, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-7)))
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply input sizes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; build with `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':40s} {'python':>12s} {'cython':>12s} {'speedup':>9s}")
    for label, (name, fargs) in cases(args.scale, rng).items():
        py, cy = getattr(_pykernels, name), getattr(_ckernels, name)
        a, b = py(*fargs), cy(*fargs)
        for u, v in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.array_equal(u, v), f"{name}: backends disagree"
        t_py = best_time(py, fargs, args.repeat)
        t_cy = best_time(cy, fargs, args.repeat)
        print(f"{label:40s} {t_py * 1e6:10.1f}us {t_cy * 1e6:10.1f}us {t_py / t_cy:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
