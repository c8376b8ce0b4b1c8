"""Brute-force references for the operators.

Nothing here touches the box-spline formulas: projections come from exact
ray/pixel intersection lengths, Gram taps from integrating chord-length
profiles of a single pixel, kernels from explicit piecewise-polynomial
convolution.  Speed is not a goal.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.interpolate import PPoly

from .geometry import Lattice, ProjectionGeometry
from .operators import Image

_GL2 = np.polynomial.legendre.leggauss(2)
_GL4 = np.polynomial.legendre.leggauss(4)


def _grid_lines(n: int, lam: float) -> np.ndarray:
    return lam * (np.arange(n + 1) - n / 2.0)


def siddon_integral(image: Image, origin, direction) -> float:
    """Exact line integral of the pixel-basis image along a ray.

    Pixels are half-open ``[lo, hi)`` along each axis, which only matters for
    rays running exactly on a grid line.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    n, lam = image.n, image.lambda_x
    lines = _grid_lines(n, lam)
    lo, hi = lines[0], lines[-1]

    t_in, t_out = 0.0, np.inf
    crossings = []
    for axis in range(2):
        if d[axis] == 0.0:
            if not (lo <= o[axis] < hi):
                return 0.0
            continue
        ta = (lo - o[axis]) / d[axis]
        tb = (hi - o[axis]) / d[axis]
        t_in = max(t_in, min(ta, tb))
        t_out = min(t_out, max(ta, tb))
        crossings.append((lines - o[axis]) / d[axis])
    if not t_out > t_in:
        return 0.0
    ts = np.concatenate([[t_in, t_out]] + crossings)
    ts = np.unique(ts[(ts >= t_in) & (ts <= t_out)])
    mids = 0.5 * (ts[:-1] + ts[1:])
    seg = np.diff(ts)
    p = o[None, :] + mids[:, None] * d[None, :]
    idx = np.floor((p - lo) / lam).astype(np.int64)
    ok = np.all((idx >= 0) & (idx < n), axis=1) & (seg > 0)
    return float(np.sum(image.coeffs[idx[ok, 0], idx[ok, 1]] * seg[ok]))


def _ray_sum(image: Image, c: float, s: float, y: float) -> float:
    perp = np.array([-s, c])
    d = np.array([c, s])
    reach = image.n * image.lambda_x
    return siddon_integral(image, y * perp - reach * d, d)


def _corner_projections(image: Image, c: float, s: float) -> np.ndarray:
    lines = _grid_lines(image.n, image.lambda_x)
    return np.unique((-s * lines[:, None] + c * lines[None, :]).ravel())


def quadrature_forward(image: Image, geometry: ProjectionGeometry, angle_index: int,
                       y: float) -> float:
    """Sinogram value at detector position ``y`` from ray sums.

    The ray sum is piecewise linear in ``y`` with kinks where the ray crosses a
    pixel corner.  Without blur the value is the right limit at ``y``
    (matching half-open pixel footprints); with blur the cell average is
    integrated exactly by two-point Gauss-Legendre on every linear piece.
    """
    c = float(geometry.cos[angle_index])
    s = float(geometry.sin[angle_index])
    kinks = _corner_projections(image, c, s)
    zeta = geometry.blur_width
    if zeta == 0.0:
        tol = 1e-12 * max(1.0, abs(y))
        ahead = kinks[kinks > y + tol]
        if ahead.size == 0:
            return 0.0
        h = (ahead[0] - y) / 3.0
        return 2.0 * _ray_sum(image, c, s, y + h) - _ray_sum(image, c, s, y + 2.0 * h)
    a, b = y - zeta / 2.0, y + zeta / 2.0
    pts = np.unique(np.concatenate(([a, b], kinks[(kinks > a) & (kinks < b)])))
    nodes, weights = _GL2
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for x, w in zip(nodes, weights):
            total += w * half * _ray_sum(image, c, s, mid + half * x)
    return total / zeta


def quadrature_sinogram(image: Image, geometry: ProjectionGeometry) -> np.ndarray:
    ys = geometry.detector_positions
    return np.array([[quadrature_forward(image, geometry, i, y) for y in ys]
                     for i in range(geometry.n_views)])


class _PixelProfile:
    """Chord length of a single ``lam``-sided pixel along rays at offset y, optionally cell-averaged."""

    def __init__(self, lam: float, c: float, s: float, blur: float):
        self.lam, self.c, self.s, self.blur = lam, c, s, blur
        h = lam / 2.0
        corners = np.array([[-h, -h], [-h, h], [h, -h], [h, h]])
        self.knots = np.unique(-s * corners[:, 0] + c * corners[:, 1])
        # one-sided end values of each linear piece (the profile jumps at
        # knots when the rays are axis-aligned)
        lo, hi = self.knots[:-1], self.knots[1:]
        width = hi - lo
        a = self.chord(lo + width / 3.0)
        b = self.chord(lo + 2.0 * width / 3.0)
        self.left = 2.0 * a - b
        self.slope = 3.0 * (b - a) / width
        areas = width * (self.left + 0.5 * self.slope * width)
        self.knot_area = np.concatenate(([0.0], np.cumsum(areas)))

    def chord(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        h = self.lam / 2.0
        px, py = -self.s * y, self.c * y
        t_in = np.full(y.shape, -np.inf)
        t_out = np.full(y.shape, np.inf)
        inside = np.ones(y.shape, dtype=bool)
        for p, d in ((px, self.c), (py, self.s)):
            if d == 0.0:
                inside &= (p >= -h) & (p < h)
                continue
            ta, tb = (-h - p) / d, (h - p) / d
            t_in = np.maximum(t_in, np.minimum(ta, tb))
            t_out = np.minimum(t_out, np.maximum(ta, tb))
        return np.where(inside, np.clip(t_out - t_in, 0.0, None), 0.0)

    def cumulative(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        last = self.knots.size - 1
        k = np.clip(np.searchsorted(self.knots, y, side="right") - 1, 0, last)
        piece = np.minimum(k, last - 1)
        dy = np.where(k < last, np.clip(y, self.knots[0], None) - self.knots[k], 0.0)
        part = dy * (self.left[piece] + 0.5 * self.slope[piece] * dy)
        return self.knot_area[k] + part

    def breaks(self) -> np.ndarray:
        if self.blur == 0.0:
            return self.knots
        return np.unique(np.concatenate((self.knots - self.blur / 2, self.knots + self.blur / 2)))

    def __call__(self, y) -> np.ndarray:
        if self.blur == 0.0:
            return self.chord(y)
        y = np.asarray(y, dtype=np.float64)
        z = self.blur / 2.0
        return (self.cumulative(y + z) - self.cumulative(y - z)) / self.blur


def quadrature_gram_tap(lattice: Lattice, geometry: ProjectionGeometry, dk) -> float:
    """Sum over views of the overlap integral of two pixel profiles offset by ``dk``."""
    n = lattice.n
    if abs(dk[0]) > n - 1 or abs(dk[1]) > n - 1:
        raise ValueError(f"offset {dk} outside the (2N-1)^2 filter")
    lam = lattice.lambda_x
    nodes, weights = _GL4
    total = 0.0
    for i in range(geometry.n_views):
        c = float(geometry.cos[i])
        s = float(geometry.sin[i])
        prof = _PixelProfile(lam, c, s, geometry.blur_width)
        shift = lam * (-s * dk[0] + c * dk[1])
        b = prof.breaks()
        pts = np.unique(np.concatenate((b, b + shift)))
        half = 0.5 * np.diff(pts)[:, None]
        mid = 0.5 * (pts[:-1] + pts[1:])[:, None]
        y = mid + half * nodes[None, :]
        vals = prof(y) * prof(y - shift)
        total += float(np.sum(half * weights[None, :] * vals))
    return total


def quadrature_gram(lattice: Lattice, geometry: ProjectionGeometry) -> np.ndarray:
    n = lattice.n
    out = np.empty((2 * n - 1, 2 * n - 1))
    for i in range(2 * n - 1):
        for j in range(2 * n - 1):
            out[i, j] = quadrature_gram_tap(lattice, geometry, (i - n + 1, j - n + 1))
    return out


def dense_gram(taps: np.ndarray) -> np.ndarray:
    """Expand filter taps into the N^2 x N^2 Toeplitz-block-Toeplitz matrix (row-major pixels)."""
    n = (taps.shape[0] + 1) // 2
    k = np.arange(n)
    d1 = k[:, None, None, None] - k[None, None, :, None] + n - 1
    d2 = k[None, :, None, None] - k[None, None, None, :] + n - 1
    return taps[d1, d2].reshape(n * n, n * n)


def dense_solve(taps: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = (taps.shape[0] + 1) // 2
    if n > 32:
        raise ValueError(f"dense solve limited to N <= 32, got N={n}")
    g = dense_gram(taps)
    try:
        factor = scipy.linalg.cho_factor(g)
    except np.linalg.LinAlgError as exc:
        w = np.linalg.eigvalsh(g)
        raise ValueError(
            f"Gram matrix is not positive definite (min eigenvalue {w[0]:.3e}): {exc}"
        ) from exc
    return scipy.linalg.cho_solve(factor, np.asarray(b, dtype=np.float64).reshape(-1)).reshape(n, n)


def convolve_boxes(widths) -> PPoly:
    """Unit-integral convolution of centered boxes as an explicit piecewise polynomial.

    Each step uses ``(f * box_w)(x) = (F(x + w/2) - F(x - w/2)) / w`` with the
    exact antiderivative ``F``; new pieces are refit at Chebyshev nodes, which is
    exact for polynomials of the known degree.
    """
    widths = [float(w) for w in widths if w > 0]
    if not widths:
        raise ValueError("need at least one positive width")
    reach = sum(widths) + 1.0
    w0 = widths[0]
    pp = PPoly(np.array([[0.0, 1.0 / w0, 0.0]]), np.array([-reach, -w0 / 2, w0 / 2, reach]))
    for w in widths[1:]:
        anti = pp.antiderivative()
        inner = pp.x[1:-1]
        x = np.unique(np.concatenate(([-reach], inner - w / 2, inner + w / 2, [reach])))
        deg = pp.c.shape[0]
        m = deg + 1
        cheb = 0.5 * (1 - np.cos(np.pi * (np.arange(m) + 0.5) / m))
        coeffs = np.zeros((m, x.size - 1))
        for i, (lo, hi) in enumerate(zip(x[:-1], x[1:])):
            if hi - lo <= 0:
                continue
            local = cheb * (hi - lo)
            vals = (anti(lo + local + w / 2) - anti(lo + local - w / 2)) / w
            fit = np.polynomial.polynomial.polyfit(local / (hi - lo), vals, deg)
            coeffs[:, i] = (fit / (hi - lo) ** np.arange(m))[::-1]
        coeffs[:, 0] = 0.0
        coeffs[:, -1] = 0.0
        pp = PPoly(coeffs, x)
    return pp
