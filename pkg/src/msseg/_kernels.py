"""Fused primal-dual iterations compiled with numba.

Performs the same arithmetic as the numpy path in :mod:`msseg.solver`
(forward-difference gradient, dual projection, backward-difference
divergence, clamped primal step, extrapolation), one sweep over the pixels
per half-step. Pixel loops run under ``prange``; the thread count is set with
:func:`set_threads`.
"""

import math
import os

import numba
import numpy as np

# the bundled TBB is too old for numba and only produces a warning
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

GAMMA_CODES = {"l1": 0, "l2": 1, "linf": 2}
_SLACK = 1e-12


@numba.njit(cache=True, parallel=True)
def cp_iterate(u, u_bar, p, shift, tau, sigma, theta, max_its, tol, gamma_code):
    """Run up to ``max_its`` iterations in place.

    Returns ``(n_iter, converged, diverged)``.
    """
    h, w = u.shape
    n_pix = h * w
    u_new = np.empty_like(u)
    row_change = np.empty(h)
    for n in range(1, max_its + 1):
        # dual ascent + projection onto the unit dual ball
        for i in numba.prange(h):
            for j in range(w):
                gx = u_bar[i + 1, j] - u_bar[i, j] if i < h - 1 else 0.0
                gy = u_bar[i, j + 1] - u_bar[i, j] if j < w - 1 else 0.0
                a = gx * sigma + p[0, i, j]
                b = gy * sigma + p[1, i, j]
                if gamma_code == 0:
                    a = min(max(a, -1.0), 1.0)
                    b = min(max(b, -1.0), 1.0)
                elif gamma_code == 1:
                    nrm = math.sqrt(a * a + b * b)
                    if nrm > 1.0 + _SLACK:
                        a = a / nrm
                        b = b / nrm
                else:
                    aa = abs(a)
                    bb = abs(b)
                    if aa + bb > 1.0 + _SLACK:
                        x = min(max(0.5 * (aa - bb + 1.0), 0.0), 1.0)
                        a = math.copysign(x, a)
                        b = math.copysign(1.0 - x, b)
                p[0, i, j] = a
                p[1, i, j] = b
        # primal descent, box projection, extrapolation
        for i in numba.prange(h):
            acc = 0.0
            for j in range(w):
                if h > 1:
                    if i == 0:
                        dx = p[0, 0, j]
                    elif i == h - 1:
                        dx = -p[0, h - 2, j]
                    else:
                        dx = p[0, i, j] - p[0, i - 1, j]
                else:
                    dx = 0.0
                if w > 1:
                    if j == 0:
                        dv = dx + p[1, i, 0]
                    elif j == w - 1:
                        dv = dx - p[1, i, w - 2]
                    else:
                        dv = dx + (p[1, i, j] - p[1, i, j - 1])
                else:
                    dv = dx
                t = dv * tau + u[i, j] - shift[i, j]
                t = min(max(t, 0.0), 1.0)
                d = t - u[i, j]
                acc += abs(d)
                u_new[i, j] = t
                u_bar[i, j] = t + d * theta
            row_change[i] = acc
        # rows are summed in a fixed order so the stopping test does not
        # depend on the thread count
        change = 0.0
        for i in range(h):
            change += row_change[i]
        for i in numba.prange(h):
            for j in range(w):
                u[i, j] = u_new[i, j]
        change = change / n_pix
        if not math.isfinite(change):
            return n, False, True
        if change < tol:
            return n, True, False
    return max_its, False, False


def available_threads():
    return numba.config.NUMBA_NUM_THREADS


def set_threads(n):
    """Set the kernel thread count; ``None`` reads ``MSSEG_THREADS`` (default 1)."""
    if n is None:
        n = int(os.environ.get("MSSEG_THREADS", "1") or 1)
    n = max(1, min(int(n), available_threads()))
    numba.set_num_threads(n)
    return n
