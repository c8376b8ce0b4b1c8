"""Centered univariate box splines.

A univariate box spline with widths ``w_1..w_n`` is the convolution of the
normalized boxes ``(1/w_i) 1[-w_i/2, w_i/2)``, i.e. the density of a sum of
independent centered uniform variables.  Projecting the pixel indicator along
a ray direction gives such a spline, so every operator in this package reduces
to evaluating one of these kernels.

Values come from the subset-sum truncated-power formula

    M(x) = 1 / ((n-1)! prod(w)) * sum_S (-1)^|S| (u - sum_S w)_+^(n-1),  u = x + W/2,

with ``W = sum(w)``.  Evaluation is done on the nearer half of the support
(the kernel is even) and with compensated summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from ._backend import kernels

MAX_WIDTHS = 8
_REL_WIDTH_EPS = 1e-12


class DegenerateKernelError(ValueError):
    """Raised when a point evaluation of a Dirac kernel is requested."""


def degeneracy_threshold(raw_widths) -> float:
    return _REL_WIDTH_EPS * max(1.0, float(np.sum(raw_widths)))


class SubsetTable(NamedTuple):
    sums: np.ndarray  # subset sums, ascending
    signs: np.ndarray  # (-1)^|S| in the same order
    half: float
    total: float
    scale: float


@dataclass(frozen=True, eq=True)
class BoxSplineKernel:
    """Centered, unit-integral univariate box spline.

    ``widths`` holds only non-degenerate widths, sorted descending.  An empty
    tuple is the Dirac delta (the convolution identity), flagged by ``dirac``.
    """

    widths: tuple[float, ...]
    dirac: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dirac", len(self.widths) == 0)

    @property
    def n(self) -> int:
        return len(self.widths)

    @property
    def support(self) -> float:
        return float(sum(self.widths))

    @property
    def degree(self) -> int:
        return self.n - 1

    @cached_property
    def table(self) -> SubsetTable:
        if self.dirac:
            raise DegenerateKernelError("a Dirac kernel has no subset table")
        w = np.asarray(self.widths, dtype=np.float64)
        n = w.size
        masks = np.arange(1 << n)
        bits = (masks[:, None] >> np.arange(n)) & 1
        sums = bits @ w
        signs = np.where(bits.sum(axis=1) % 2 == 0, 1.0, -1.0)
        order = np.argsort(sums, kind="stable")
        total = float(w.sum())
        scale = 1.0 / (math.factorial(n - 1) * float(np.prod(w)))
        return SubsetTable(
            np.ascontiguousarray(sums[order]),
            np.ascontiguousarray(signs[order]),
            0.5 * total,
            total,
            scale,
        )

    def __call__(self, x):
        return evaluate(self, x)

    def convolve(self, other: "BoxSplineKernel") -> "BoxSplineKernel":
        return make_kernel(list(self.widths) + list(other.widths))


def make_kernel(raw_widths) -> BoxSplineKernel:
    """Build a kernel from raw direction lengths, dropping zero-width ones."""
    raw = np.atleast_1d(np.asarray(raw_widths, dtype=np.float64))
    if raw.ndim != 1:
        raise ValueError("widths must be a flat sequence")
    if raw.size > MAX_WIDTHS:
        raise ValueError(f"at most {MAX_WIDTHS} widths are supported, got {raw.size}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("widths must be finite")
    if np.any(raw < 0):
        raise ValueError(f"widths must be non-negative, got {raw.tolist()}")
    eps = degeneracy_threshold(raw)
    kept = sorted((float(w) for w in raw if w > eps), reverse=True)
    return BoxSplineKernel(tuple(kept))


def _check_evaluable(kernel: BoxSplineKernel) -> SubsetTable:
    if kernel.dirac:
        raise DegenerateKernelError(
            "cannot evaluate a Dirac kernel pointwise; handle it analytically"
        )
    return kernel.table


def evaluate(kernel: BoxSplineKernel, x):
    """Kernel value at ``x`` (scalar or array)."""
    tab = _check_evaluable(kernel)
    arr = np.asarray(x, dtype=np.float64)
    flat = np.ascontiguousarray(arr.reshape(-1))
    out = kernels().eval_points(
        tab.sums, tab.signs, kernel.n, tab.half, tab.total, tab.scale, flat
    )
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def eval_sampled(kernel: BoxSplineKernel, start: float, step: float, count: int) -> np.ndarray:
    """Values at ``start + j*step`` for ``j = 0..count-1``."""
    if not step > 0:
        raise ValueError("step must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    tab = _check_evaluable(kernel)
    return kernels().eval_grid(
        tab.sums, tab.signs, kernel.n, tab.half, tab.total, tab.scale,
        float(start), float(step), int(count),
    )


class PieceTable(NamedTuple):
    """Piecewise-polynomial form of ``f -> K(f + r*step)`` for ``f`` in ``[0, step)``.

    ``breaks`` splits the cell into ``A`` sub-intervals; ``coeffs[a, r - r_lo, p]``
    is the coefficient of ``(f - breaks[a])**p`` on sub-interval ``a``.
    """

    breaks: np.ndarray
    r_lo: int
    coeffs: np.ndarray

    @property
    def n_pieces(self) -> int:
        return self.breaks.size - 1

    def value(self, f, r: int):
        f = np.asarray(f, dtype=np.float64)
        a = np.clip(np.searchsorted(self.breaks, f, side="right") - 1, 0, self.n_pieces - 1)
        ri = r - self.r_lo
        if ri < 0 or ri >= self.coeffs.shape[1]:
            return np.zeros_like(f)
        c = self.coeffs[a, ri]
        fp = f - self.breaks[a]
        acc = c[..., -1]
        for p in range(c.shape[-1] - 2, -1, -1):
            acc = acc * fp + c[..., p]
        return acc


def piece_table(kernel: BoxSplineKernel, step: float) -> PieceTable:
    """Tabulate the kernel as polynomial pieces relative to a sampling grid.

    A point ``t = y_j + f`` lies at distance ``f + r*step`` from sample
    ``y_{j-r}``; the knots of the kernel fall at the same offsets ``f`` in
    every cell, so the kernel restricted to that cell offset is one polynomial
    per (sub-interval, r).  Coefficients are expanded from the subset-sum
    formula about the sub-interval start, mirrored to the nearer half of the
    support.
    """
    tab = _check_evaluable(kernel)
    n = kernel.n
    total, half = tab.total, tab.half
    tol = 1e-12 * max(step, total)

    frac = np.mod(tab.sums - half, step)
    frac[np.abs(frac - step) <= tol] = 0.0
    frac = np.sort(np.concatenate(([0.0], frac)))
    keep = np.concatenate(([True], np.diff(frac) > tol))
    breaks = np.concatenate((frac[keep], [step]))
    if breaks.size > 2 and step - breaks[-2] <= tol:
        breaks = np.delete(breaks, -2)

    r_lo = int(math.floor(-half / step)) - 1
    r_hi = int(math.ceil(half / step))
    r = np.arange(r_lo, r_hi + 1, dtype=np.float64)

    start = breaks[:-1, None]
    length = np.diff(breaks)[:, None]
    u0 = start + r[None, :] * step + half
    mid = u0 + 0.5 * length
    mirror = mid > half
    base = np.where(mirror, total - u0, u0)
    lim = np.where(mirror, total - mid, mid)
    live = (mid > 0.0) & (mid < total)

    active = tab.sums[None, None, :] < lim[..., None]
    weights = np.where(active, tab.signs[None, None, :], 0.0)
    d = base[..., None] - tab.sums[None, None, :]

    coeffs = np.zeros(base.shape + (n,))
    power = np.ones_like(d)
    # coefficient of f'^p uses (u0 - s)^(n-1-p)
    for k in range(n):
        p = n - 1 - k
        s = np.sum(weights * power, axis=-1)
        sign = np.where(mirror, (-1.0) ** p, 1.0)
        coeffs[..., p] = tab.scale * math.comb(n - 1, p) * sign * s
        power = power * d
    coeffs[~live] = 0.0
    return PieceTable(breaks, r_lo, np.ascontiguousarray(coeffs))
