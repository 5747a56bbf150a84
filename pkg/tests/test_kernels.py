"""The compiled kernels and their pure-Python twins must agree exactly."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppgdtuq import _pykernels, kernels

try:
    from ppgdtuq import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_reported():
    import os

    expected = "python" if os.environ.get("PPGDTUQ_NO_EXT") or _ckernels is None else "cython"
    assert kernels.BACKEND == expected


def _reflect_oracle(x, taps):
    n, k = x.size, taps.size
    h = k // 2
    padded = np.pad(x, (h, h), mode="symmetric")
    return np.array([sum(taps[j] * padded[i + h - j + h] for j in range(k)) for i in range(n)])


@pytest.mark.parametrize("mod", [_pykernels, pytest.param(_ckernels, marks=needs_ext)])
def test_reflect_convolve_matches_padded_oracle(mod, rng):
    for n, k in [(10, 3), (40, 9), (9, 9), (65, 65)]:
        x = rng.normal(size=n)
        taps = rng.normal(size=k)
        np.testing.assert_allclose(mod.reflect_convolve(x, taps), _reflect_oracle(x, taps), atol=1e-12)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.integers(3, 200), st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_local_peaks_parity(n, seed, distance):
    x = np.random.default_rng(seed).normal(size=n)
    x[::7] = x[-1]  # force plateaus and ties
    a = _pykernels.local_peaks(x, distance, -np.inf)
    b = _ckernels.local_peaks(x, distance, -np.inf)
    np.testing.assert_array_equal(a, b)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_convolve_parity(n, half, seed):
    r = np.random.default_rng(seed)
    k = 2 * half + 1
    if k > n:
        k = n | 1 if n % 2 else max(1, n - 1)
    x, taps = r.normal(size=n), r.normal(size=k)
    np.testing.assert_array_equal(_pykernels.reflect_convolve(x, taps), _ckernels.reflect_convolve(x, taps))


@needs_ext
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 500), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_bin_accumulate_parity(n, m, seed):
    r = np.random.default_rng(seed)
    u = r.uniform(size=n)
    if n:
        u[0] = 1.0
    err = (r.uniform(size=n) < 0.3).astype(float)
    for a, b in zip(_pykernels.bin_accumulate(u, err, m), _ckernels.bin_accumulate(u, err, m)):
        np.testing.assert_array_equal(a, b)


@needs_ext
def test_overlap_add_parity(rng):
    starts = np.array([0, 16, 32, 36], dtype=np.int64)
    windows = rng.normal(size=(4, 64))
    for a, b in zip(_pykernels.overlap_add(windows, starts, 100), _ckernels.overlap_add(windows, starts, 100)):
        np.testing.assert_array_equal(a, b)


def test_local_peaks_plateau_and_distance():
    x = np.array([0, 1, 1, 1, 0, 3, 0, 2, 0], dtype=float)
    assert list(kernels.local_peaks(x, 1)) == [2, 5, 7]
    # 5 wins over its weaker neighbours once they are too close
    assert list(kernels.local_peaks(x, 3)) == [2, 5]


def test_bin_accumulate_closes_last_bin():
    counts, su, se = kernels.bin_accumulate([0.0, 0.5, 1.0], [0.0, 1.0, 1.0], 2)
    assert list(counts) == [1, 2]
    assert se[1] == 2.0


def test_pure_python_fallback_selected_by_env():
    import os
    import subprocess
    import sys

    code = ("from ppgdtuq import kernels; from ppgdtuq.calibration import uce_from_items; "
            "print(kernels.BACKEND, uce_from_items([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 1], 2))")
    env = dict(os.environ, PPGDTUQ_NO_EXT="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = out.stdout.split()
    assert backend == "python"
    assert abs(float(value) - 0.075) < 1e-12


@needs_ext
def test_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    script = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    bench = runpy.run_path(str(script))
    assert bench["main"](["--repeat", "1", "--scale", "0.05"]) == 0
    assert "speedup" in capsys.readouterr().out
