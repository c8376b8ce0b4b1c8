"""numba implementations of the hot loops.

Every function here has a twin with the same signature in ``_kernels_numpy``.
Summation orders are fixed (angles ascending, pixels row-major) and each
parallel worker writes a disjoint slice, so results do not depend on the
thread count.
"""

import math

import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old on some installs; avoid the noisy probe
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_SNAP = 1e-14


@njit(cache=True, inline="always")
def _eval_one(sums, signs, n, half, total, scale, x):
    u = x + half
    if u < 0.0 or u >= total:
        return 0.0
    if n == 1:
        return scale
    if u > total - u:
        u = total - u
    acc = 0.0
    comp = 0.0
    for i in range(sums.shape[0]):
        s = sums[i]
        if s >= u:
            break
        d = u - s
        pw = d
        for _ in range(n - 2):
            pw = pw * d
        y = signs[i] * pw - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    return scale * acc


@njit(cache=True)
def eval_points(sums, signs, n, half, total, scale, xs):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _eval_one(sums, signs, n, half, total, scale, xs[i])
    return out


@njit(cache=True)
def eval_grid(sums, signs, n, half, total, scale, start, step, count):
    out = np.empty(count)
    for j in range(count):
        out[j] = _eval_one(sums, signs, n, half, total, scale, start + j * step)
    return out


@njit(cache=True, inline="always")
def _locate(z, step, breaks, n_pieces):
    # points within rounding distance of a knot go to the piece on its right
    tol = _SNAP * (abs(z) + step)
    j = int(math.floor(z / step))
    f = z - j * step
    if f >= step - tol:
        j += 1
        f -= step
    if f < 0.0:
        f = 0.0
    a = 0
    while a + 1 < n_pieces and breaks[a + 1] <= f + tol:
        a += 1
    return j, a, max(f - breaks[a], 0.0)


@njit(parallel=True, cache=True)
def forward_tables(coeffs, xs, sin_t, cos_t, y0, step,
                   breaks, n_pieces, r_lo, n_r, n_coef, qtab, out):
    n_views = out.shape[0]
    n_det = out.shape[1]
    n = coeffs.shape[0]
    for v in prange(n_views):
        s = sin_t[v]
        c = cos_t[v]
        nc = n_coef[v]
        for k1 in range(n):
            for k2 in range(n):
                val = coeffs[k1, k2]
                if val == 0.0:
                    continue
                t = -s * xs[k1] + c * xs[k2]
                j, a, fp = _locate(t - y0, step, breaks[v], n_pieces[v])
                for ri in range(n_r[v]):
                    m = j - (r_lo[v] + ri)
                    if m < 0 or m >= n_det:
                        continue
                    acc = qtab[v, a, ri, nc - 1]
                    for p in range(nc - 2, -1, -1):
                        acc = acc * fp + qtab[v, a, ri, p]
                    out[v, m] += val * acc


@njit(parallel=True, cache=True)
def backproject_tables(samples, xs, sin_t, cos_t, y0, step,
                       breaks, n_pieces, r_lo, n_r, n_coef, qtab, out):
    n_views = samples.shape[0]
    n_det = samples.shape[1]
    n = out.shape[0]
    table = np.zeros((n_det, qtab.shape[1], qtab.shape[3]))
    for v in range(n_views):
        na = n_pieces[v]
        nc = n_coef[v]
        nr = n_r[v]
        rl = r_lo[v]
        # cell-wise polynomial coefficients of the interpolated-and-smoothed row
        for j in prange(n_det):
            for a in range(na):
                for p in range(nc):
                    acc = 0.0
                    for ri in range(nr):
                        m = j - (rl + ri)
                        if m >= 0 and m < n_det:
                            acc += samples[v, m] * qtab[v, a, ri, p]
                    table[j, a, p] = acc
        s = sin_t[v]
        c = cos_t[v]
        for k1 in prange(n):
            for k2 in range(n):
                t = -s * xs[k1] + c * xs[k2]
                j, a, fp = _locate(t - y0, step, breaks[v], na)
                if j < 0 or j >= n_det:
                    continue
                acc = table[j, a, nc - 1]
                for p in range(nc - 2, -1, -1):
                    acc = acc * fp + table[j, a, p]
                out[k1, k2] += acc


@njit(parallel=True, cache=True)
def gram_taps(sin_t, cos_t, spacing, sums, signs, n_w, half, total, scale, n, out):
    size = 2 * n - 1
    center = (n - 1) * size + (n - 1)
    n_views = sin_t.shape[0]
    for i1 in prange(size):
        d1 = (i1 - (n - 1)) * spacing
        for i2 in range(size):
            if i1 * size + i2 < center:
                continue
            d2 = (i2 - (n - 1)) * spacing
            acc = 0.0
            for v in range(n_views):
                x = -sin_t[v] * d1 + cos_t[v] * d2
                acc += _eval_one(sums[v], signs[v], n_w[v], half[v], total[v], scale[v], x)
            out[i1, i2] = acc


@njit(parallel=True, cache=True)
def convolve_central(coeffs, taps, out):
    n = coeffs.shape[0]
    for k1 in prange(n):
        for k2 in range(n):
            acc = 0.0
            for j1 in range(n):
                for j2 in range(n):
                    acc += taps[k1 - j1 + n - 1, k2 - j2 + n - 1] * coeffs[j1, j2]
            out[k1, k2] = acc
