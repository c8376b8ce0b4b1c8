"""Forward projector, interpolated back projector and Gram filter.

Amplitudes: a pixel of side ``lambda_x`` and unit height projects to mass
``lambda_x**2``, so the forward model is ``lambda_x**2`` times a unit-integral
box spline; the Gram filter carries ``lambda_x**4``; back projection picks up
an extra ``lambda_y`` because the interpolating B-spline on the detector grid
integrates to ``lambda_y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft
from scipy.ndimage import convolve1d

from ._backend import kernels
from .boxspline import BoxSplineKernel, evaluate, make_kernel, piece_table
from .geometry import (Lattice, ProjectionGeometry, detector_extent, effective_directions,
                       projected_widths)

DEFAULT_Q_HALF_WIDTH = 25
_Q_POLE = 2.0 * math.sqrt(2.0) - 3.0


@dataclass
class Image:
    coeffs: np.ndarray
    lambda_x: float = 1.0

    def __post_init__(self) -> None:
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim != 2 or self.coeffs.shape[0] != self.coeffs.shape[1]:
            raise ValueError(f"image must be square, got shape {self.coeffs.shape}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("image contains non-finite values")

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.n, self.lambda_x)

    @classmethod
    def zeros(cls, lattice: Lattice) -> "Image":
        return cls(np.zeros((lattice.n, lattice.n)), lattice.lambda_x)


@dataclass
class Sinogram:
    geometry: ProjectionGeometry
    samples: np.ndarray

    def __post_init__(self) -> None:
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        expected = (self.geometry.n_views, self.geometry.detector_count)
        if self.samples.shape != expected:
            raise ValueError(f"sinogram shape {self.samples.shape} does not match geometry {expected}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("sinogram contains non-finite values")


@dataclass
class GramFilter:
    """(2N-1) x (2N-1) taps of the Toeplitz-block-Toeplitz normal operator."""

    taps: np.ndarray
    lambda_x: float = 1.0
    blur_width: float = 0.0

    def __post_init__(self) -> None:
        self.taps = np.ascontiguousarray(self.taps, dtype=np.float64)
        size = self.taps.shape[0]
        if self.taps.ndim != 2 or self.taps.shape[1] != size or size % 2 == 0:
            raise ValueError(f"taps must be (2N-1) x (2N-1), got {self.taps.shape}")

    @property
    def n(self) -> int:
        return (self.taps.shape[0] + 1) // 2

    @cached_property
    def _spectrum(self) -> np.ndarray:
        return scipy.fft.rfft2(scipy.fft.ifftshift(self.taps))


def _stack_tables(tables, step: float):
    v = len(tables)
    a_max = max(t.n_pieces for t in tables)
    r_max = max(t.coeffs.shape[1] for t in tables)
    c_max = max(t.coeffs.shape[2] for t in tables)
    breaks = np.full((v, a_max + 1), np.inf)
    qtab = np.zeros((v, a_max, r_max, c_max))
    n_pieces = np.empty(v, dtype=np.int64)
    r_lo = np.empty(v, dtype=np.int64)
    n_r = np.empty(v, dtype=np.int64)
    n_coef = np.empty(v, dtype=np.int64)
    for i, t in enumerate(tables):
        a, r, c = t.coeffs.shape
        breaks[i, :a + 1] = t.breaks
        qtab[i, :a, :r, :c] = t.coeffs
        n_pieces[i], r_lo[i], n_r[i], n_coef[i] = a, t.r_lo, r, c
    return breaks, n_pieces, r_lo, n_r, n_coef, qtab


def forward_kernel(geometry: ProjectionGeometry, angle_index: int, lambda_x: float) -> BoxSplineKernel:
    return make_kernel(projected_widths(geometry, angle_index, True, lambda_x))


def forward(image: Image, geometry: ProjectionGeometry) -> Sinogram:
    """Sampled X-ray transform (with detector blur when the geometry has one)."""
    need = detector_extent(image.lattice, geometry)
    if geometry.detector_count < need:
        raise ValueError(
            f"detector grid too small: {geometry.detector_count} cells, need at least {need}"
        )
    lam = image.lambda_x
    step = geometry.lambda_y
    tables = [piece_table(forward_kernel(geometry, i, lam), step) for i in range(geometry.n_views)]
    out = np.zeros((geometry.n_views, geometry.detector_count))
    # The tables hold K(t - y_m); the model needs K(y_m - t), which differs at
    # the jump points of single-box kernels. Work in mirrored coordinates
    # (t -> -t, m -> M-1-m) on the symmetric detector grid instead.
    kernels().forward_tables(
        image.coeffs, image.lattice.positions, -geometry.sin, -geometry.cos,
        geometry.y0, step, *_stack_tables(tables, step), out,
    )
    out = out[:, ::-1] * (lam * lam)
    return Sinogram(geometry, out)


def line_integrals(image: Image, geometry: ProjectionGeometry, angle_index: int, y) -> np.ndarray:
    """Continuous (blurred) projection at arbitrary detector positions ``y``.

    Direct pixel sum, O(N^2) per point; meant for checks, not throughput.
    """
    kernel = forward_kernel(geometry, angle_index, image.lambda_x)
    c = geometry.cos[angle_index]
    s = geometry.sin[angle_index]
    x = image.lattice.positions
    kth = (-s * x[:, None] + c * x[None, :]).reshape(-1)
    coeffs = image.coeffs.reshape(-1)
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    out = np.empty(y.shape)
    for i, yi in enumerate(y.flat):
        out.flat[i] = coeffs @ evaluate(kernel, yi - kth)
    return out * image.lambda_x ** 2


def correction_filter(degree: int, half_width: int = DEFAULT_Q_HALF_WIDTH,
                      cutoff: float = 1e-15) -> np.ndarray:
    """Taps ``q[-h..h]`` of the inverse of the sampled B-spline of ``degree``.

    Degrees 0 and 1 sample to a unit impulse. Degree 2 samples to
    ``[1/8, 6/8, 1/8]`` whose inverse is ``sqrt(2) * (2 sqrt(2) - 3)**|m|``.
    """
    if half_width < 0:
        raise ValueError("half_width must be non-negative")
    m = np.arange(-half_width, half_width + 1)
    if degree in (0, 1):
        return (m == 0).astype(np.float64)
    if degree != 2:
        raise ValueError(f"unsupported interpolation degree {degree}; expected 0, 1 or 2")
    q = math.sqrt(2.0) * _Q_POLE ** np.abs(m).astype(np.float64)
    q[np.abs(q) < cutoff] = 0.0
    return q


def interpolation_degree(geometry: ProjectionGeometry, angle_index: int,
                         lambda_x: float | None = None) -> int:
    """B-spline degree matched to the continuity of the projected signal."""
    widths = projected_widths(geometry, angle_index, True, lambda_x)
    return effective_directions(widths) - 1


def _spline_coefficients(sinogram: Sinogram, lambda_x: float | None = None):
    """Per-view B-spline coefficients ``g_s * q_d`` and the first coefficient's position.

    The sinogram is zero beyond the detector, so rows needing a correction
    filter are zero-padded by its half width and filtered without wraparound;
    the padded coefficients keep the interpolant exact up to the filter edge.
    """
    geom = sinogram.geometry
    degrees = [interpolation_degree(geom, i, lambda_x) for i in range(geom.n_views)]
    pad = DEFAULT_Q_HALF_WIDTH if max(degrees) >= 2 else 0
    m = geom.detector_count
    rows = np.zeros((geom.n_views, m + 2 * pad))
    rows[:, pad:pad + m] = sinogram.samples
    for i, d in enumerate(degrees):
        if d >= 2:
            rows[i] = convolve1d(rows[i], correction_filter(d), mode="constant")
    return rows, geom.y0 - pad * geom.lambda_y, degrees


def interpolate(sinogram: Sinogram, angle_index: int, y, lambda_x: float | None = None) -> np.ndarray:
    """Spline interpolant of one sinogram row at detector positions ``y``."""
    geom = sinogram.geometry
    step = geom.lambda_y
    rows, y0, degrees = _spline_coefficients(sinogram, lambda_x)
    coeffs = rows[angle_index]
    spline = make_kernel([step] * (degrees[angle_index] + 1))
    knots = y0 + step * np.arange(coeffs.size)
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    diff = y.reshape(-1, 1) - knots[None, :]
    return (evaluate(spline, diff) @ coeffs).reshape(y.shape) * step


def backproject_kernel(geometry: ProjectionGeometry, angle_index: int, lambda_x: float) -> BoxSplineKernel:
    d = interpolation_degree(geometry, angle_index, lambda_x)
    widths = projected_widths(geometry, angle_index, True, lambda_x)
    return make_kernel(widths + [geometry.lambda_y] * (d + 1))


def backproject(sinogram: Sinogram, lattice: Lattice) -> Image:
    """Adjoint projection of the spline-interpolated sinogram.

    Each view is prefiltered by its correction filter, then smoothed against
    the pixel footprint convolved with the interpolating B-spline; both are
    box splines, so the fused kernel is one more box spline.
    """
    geom = sinogram.geometry
    lam = lattice.lambda_x
    step = geom.lambda_y
    rows, y0, _ = _spline_coefficients(sinogram, lam)
    tables = [piece_table(backproject_kernel(geom, i, lam), step) for i in range(geom.n_views)]
    out = np.zeros((lattice.n, lattice.n))
    kernels().backproject_tables(
        rows, lattice.positions, geom.sin, geom.cos, y0, step,
        *_stack_tables(tables, step), out,
    )
    out *= lam * lam * step
    return Image(out, lam)


def gram_kernel(geometry: ProjectionGeometry, angle_index: int, lambda_x: float) -> BoxSplineKernel:
    widths = projected_widths(geometry, angle_index, True, lambda_x)
    return make_kernel(widths + widths)


def gram_build(lattice: Lattice, geometry: ProjectionGeometry) -> GramFilter:
    lam = lattice.lambda_x
    ks = [gram_kernel(geometry, i, lam) for i in range(geometry.n_views)]
    s_max = max(1 << k.n for k in ks)
    v = len(ks)
    sums = np.full((v, s_max), np.inf)
    signs = np.zeros((v, s_max))
    n_w = np.empty(v, dtype=np.int64)
    half = np.empty(v)
    total = np.empty(v)
    scale = np.empty(v)
    for i, k in enumerate(ks):
        tab = k.table
        sums[i, :tab.sums.size] = tab.sums
        signs[i, :tab.signs.size] = tab.signs
        n_w[i], half[i], total[i], scale[i] = k.n, tab.half, tab.total, tab.scale
    n = lattice.n
    size = 2 * n - 1
    taps = np.zeros((size, size))
    kernels().gram_taps(geometry.sin, geometry.cos, lam, sums, signs, n_w, half, total,
                        scale, n, taps)
    lin = np.arange(size * size).reshape(size, size)
    lower = lin < (n - 1) * size + (n - 1)
    taps[lower] = taps[::-1, ::-1][lower]
    taps *= lam ** 4
    return GramFilter(taps, lam, geometry.blur_width)


def gram_apply(gram: GramFilter, image: Image, method: str = "fft") -> Image:
    """Apply the normal operator: central N x N block of ``taps * coeffs``."""
    n = image.n
    if gram.n != n:
        raise ValueError(f"filter is for N={gram.n}, image has N={n}")
    if method == "fft":
        size = 2 * n - 1
        spec = scipy.fft.rfft2(image.coeffs, s=(size, size))
        out = scipy.fft.irfft2(spec * gram._spectrum, s=(size, size))[:n, :n]
    elif method == "direct":
        out = np.empty((n, n))
        kernels().convolve_central(image.coeffs, gram.taps, out)
    else:
        raise ValueError(f"unknown method {method!r}")
    return Image(np.ascontiguousarray(out), image.lambda_x)
