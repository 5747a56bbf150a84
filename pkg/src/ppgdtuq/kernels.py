"""Backend selection for the hot loops.

The compiled extension ``_ckernels`` is preferred. Setting the environment
variable ``PPGDTUQ_NO_EXT=1`` (or a failed build) selects the pure-Python
twins in ``_pykernels``. ``BACKEND`` records which one is active.
"""

import os

import numpy as np

from . import _pykernels

if os.environ.get("PPGDTUQ_NO_EXT"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def local_peaks(x, distance, min_height=-np.inf):
    """Indices of local maxima at least ``distance`` samples apart.

    Plateaus report their middle sample. When two maxima are closer than
    ``distance``, the higher one wins (earlier index on equal height).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl.local_peaks(x, int(distance), float(min_height))


def reflect_convolve(x, taps):
    """Same-length convolution with half-sample symmetric padding.

    Output is centered on the middle tap, so odd-length symmetric kernels
    introduce no delay.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return _impl.reflect_convolve(x, taps)


def bin_accumulate(u, err, n_bins):
    """Per-bin count, sum of ``u`` and sum of ``err`` on equal-width bins of [0, 1]."""
    u = np.ascontiguousarray(u, dtype=np.float64)
    err = np.ascontiguousarray(err, dtype=np.float64)
    return _impl.bin_accumulate(u, err, int(n_bins))


def overlap_add(windows, starts, n):
    """Accumulate windows into a length-``n`` buffer; returns (sum, coverage)."""
    windows = np.ascontiguousarray(windows, dtype=np.float64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    return _impl.overlap_add(windows, starts, int(n))
