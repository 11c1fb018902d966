"""Dynamic time warping with an optional Sakoe-Chiba band."""

import numba as nb
import numpy as np


class DtwBandError(ValueError):
    pass


@nb.njit(cache=True, nogil=True)
def _dtw_kernel(a, b, window):
    n, m = a.size, b.size
    inf = np.inf
    prev = np.full(m + 1, inf)
    cur = np.full(m + 1, inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[:] = inf
        if window > 0:
            lo = max(1, i - window)
            hi = min(m, i + window)
        else:
            lo = 1
            hi = m
        for j in range(lo, hi + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(a[i - 1] - b[j - 1]) + best
        prev, cur = cur, prev
        prev[0] = inf
    return prev[m]


def dtw_distance(a, b, window: int = 0) -> float:
    """DTW cost with absolute-difference local cost and symmetric unit steps.

    ``window`` is the Sakoe-Chiba half-width in samples; 0 means unconstrained.
    """
    a = np.ascontiguousarray(a, dtype=np.float64).ravel()
    b = np.ascontiguousarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("dtw needs nonempty sequences")
    window = int(window)
    if window < 0:
        raise ValueError("window must be non-negative")
    if window and abs(a.size - b.size) > window:
        raise DtwBandError(f"band half-width {window} admits no path for lengths {a.size}, {b.size}")
    return float(_dtw_kernel(a, b, window))
