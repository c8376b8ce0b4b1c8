"""Pure-numpy twins of the compiled kernels (selected with BOXCT_BACKEND=numpy)."""

import numpy as np
from scipy.signal import convolve2d

_SNAP = 1e-14


def _eval_array(sums, signs, n, half, total, scale, xs):
    u = xs + half
    inside = (u >= 0.0) & (u < total)
    out = np.zeros_like(u)
    if n == 1:
        out[inside] = scale
        return out
    u = np.where(inside, np.minimum(u, total - u), 0.0)
    acc = np.zeros_like(u)
    comp = np.zeros_like(u)
    top = u.max(initial=0.0)
    for i in range(sums.shape[0]):
        s = sums[i]
        if s >= top:
            break
        live = inside & (s < u)
        d = u - s
        pw = d.copy()
        for _ in range(n - 2):
            pw = pw * d
        y = signs[i] * pw - comp
        t = acc + y
        comp = np.where(live, (t - acc) - y, comp)
        acc = np.where(live, t, acc)
    out[inside] = scale * acc[inside]
    return out


def eval_points(sums, signs, n, half, total, scale, xs):
    return _eval_array(sums, signs, n, half, total, scale, np.asarray(xs, dtype=np.float64))


def eval_grid(sums, signs, n, half, total, scale, start, step, count):
    xs = start + np.arange(count, dtype=np.float64) * step
    return _eval_array(sums, signs, n, half, total, scale, xs)


def _locate(z, step, breaks, n_pieces):
    # points within rounding distance of a knot go to the piece on its right
    tol = _SNAP * (np.abs(z) + step)
    j = np.floor(z / step).astype(np.int64)
    f = z - j * step
    over = f >= step - tol
    j = np.where(over, j + 1, j)
    f = np.where(over, f - step, f)
    f = np.maximum(f, 0.0)
    inner = breaks[1:n_pieces]
    a = np.searchsorted(inner, f + tol, side="right")
    return j, a, np.maximum(f - breaks[a], 0.0)


def _horner(c, fp):
    acc = c[..., -1]
    for p in range(c.shape[-1] - 2, -1, -1):
        acc = acc * fp + c[..., p]
    return acc


def forward_tables(coeffs, xs, sin_t, cos_t, y0, step,
                   breaks, n_pieces, r_lo, n_r, n_coef, qtab, out):
    n_det = out.shape[1]
    k1, k2 = np.nonzero(coeffs)
    vals = coeffs[k1, k2]
    for v in range(out.shape[0]):
        t = -sin_t[v] * xs[k1] + cos_t[v] * xs[k2]
        j, a, fp = _locate(t - y0, step, breaks[v], n_pieces[v])
        nc = n_coef[v]
        row = np.zeros(n_det)
        for ri in range(n_r[v]):
            m = j - (r_lo[v] + ri)
            ok = (m >= 0) & (m < n_det)
            w = vals[ok] * _horner(qtab[v, a[ok], ri, :nc], fp[ok])
            row += np.bincount(m[ok], weights=w, minlength=n_det)
        out[v] += row


def backproject_tables(samples, xs, sin_t, cos_t, y0, step,
                       breaks, n_pieces, r_lo, n_r, n_coef, qtab, out):
    n_views, n_det = samples.shape
    n = out.shape[0]
    k1 = np.repeat(np.arange(n), n)
    k2 = np.tile(np.arange(n), n)
    for v in range(n_views):
        na, nc, nr, rl = n_pieces[v], n_coef[v], n_r[v], r_lo[v]
        table = np.zeros((n_det, na, nc))
        for ri in range(nr):
            r = rl + ri
            src = np.arange(n_det) - r
            ok = (src >= 0) & (src < n_det)
            table[ok] += samples[v, src[ok], None, None] * qtab[v, None, :na, ri, :nc]
        t = -sin_t[v] * xs[k1] + cos_t[v] * xs[k2]
        j, a, fp = _locate(t - y0, step, breaks[v], na)
        ok = (j >= 0) & (j < n_det)
        vals = np.zeros(n * n)
        vals[ok] = _horner(table[j[ok], a[ok]], fp[ok])
        out += vals.reshape(n, n)


def gram_taps(sin_t, cos_t, spacing, sums, signs, n_w, half, total, scale, n, out):
    size = 2 * n - 1
    d = (np.arange(size) - (n - 1)) * spacing
    d1, d2 = np.meshgrid(d, d, indexing="ij")
    acc = np.zeros((size, size))
    for v in range(sin_t.shape[0]):
        x = -sin_t[v] * d1 + cos_t[v] * d2
        acc += _eval_array(sums[v], signs[v], n_w[v], half[v], total[v], scale[v], x)
    lin = np.arange(size * size).reshape(size, size)
    upper = lin >= (n - 1) * size + (n - 1)
    out[upper] = acc[upper]


def convolve_central(coeffs, taps, out):
    n = coeffs.shape[0]
    out[...] = convolve2d(coeffs, taps, mode="full")[n - 1:2 * n - 1, n - 1:2 * n - 1]
