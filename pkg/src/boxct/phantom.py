"""Test images: ellipse phantoms, random "spots", ingested rasters, fine-grid ground truth."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Lattice, ProjectionGeometry
from .io import read_raster
from .metrics import block_average
from .operators import Image, Sinogram, forward

GROUND_TRUTH_FACTOR = 10
MAX_FINE_PIXELS = 40_000_000
_SUPERSAMPLE = 4


@dataclass(frozen=True)
class EllipseSpec:
    cx: float
    cy: float
    a: float
    b: float
    phi_deg: float = 0.0
    intensity: float = 1.0

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"semi-axes must be positive, got a={self.a}, b={self.b}")

    def scaled(self, factor: float) -> "EllipseSpec":
        return EllipseSpec(self.cx * factor, self.cy * factor, self.a * factor, self.b * factor,
                           self.phi_deg, self.intensity)


def read_ellipses(path) -> list[EllipseSpec]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [EllipseSpec(*(float(r[k]) for k in ("cx", "cy", "a", "b", "phi_deg", "intensity")))
            for r in rows]


def write_ellipses(path, ellipses) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cx", "cy", "a", "b", "phi_deg", "intensity"])
        for e in ellipses:
            w.writerow([repr(float(v)) for v in (e.cx, e.cy, e.a, e.b, e.phi_deg, e.intensity)])


def rasterize(ellipses, lattice: Lattice) -> Image:
    """Pixel coefficients = intensity times covered area fraction (4x4 supersampling)."""
    n, lam = lattice.n, lattice.lambda_x
    out = np.zeros((n, n))
    origin = -n * lam / 2.0
    sub = (np.arange(_SUPERSAMPLE) + 0.5) / _SUPERSAMPLE
    for e in ellipses:
        phi = math.radians(e.phi_deg)
        cp, sp = math.cos(phi), math.sin(phi)
        ex = math.hypot(e.a * cp, e.b * sp)
        ey = math.hypot(e.a * sp, e.b * cp)
        i0 = max(int(math.floor((e.cx - ex - origin) / lam)), 0)
        i1 = min(int(math.ceil((e.cx + ex - origin) / lam)), n)
        j0 = max(int(math.floor((e.cy - ey - origin) / lam)), 0)
        j1 = min(int(math.ceil((e.cy + ey - origin) / lam)), n)
        if i0 >= i1 or j0 >= j1:
            continue
        xs = origin + lam * (np.arange(i0, i1)[:, None] + sub[None, :]) - e.cx
        ys = origin + lam * (np.arange(j0, j1)[:, None] + sub[None, :]) - e.cy
        x = xs[:, :, None, None]
        y = ys[None, None, :, :]
        u = (cp * x + sp * y) / e.a
        v = (-sp * x + cp * y) / e.b
        frac = (u * u + v * v <= 1.0).mean(axis=(1, 3))
        out[i0:i1, j0:j1] += e.intensity * frac
    return Image(out, lam)


def spots(seed: int, count: int, lattice: Lattice):
    """Seeded random ellipses inside the inscribed disk of the field of view."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    width = lattice.extent
    radius = width / 2.0
    ellipses = []
    for _ in range(count):
        a, b = rng.uniform(0.02, 0.15, size=2) * width
        room = radius - max(a, b)
        r = room * math.sqrt(rng.uniform())
        t = rng.uniform(0.0, 2.0 * math.pi)
        ellipses.append(EllipseSpec(float(r * math.cos(t)), float(r * math.sin(t)), float(a), float(b),
                                    float(rng.uniform(0.0, 180.0)),
                                    float(rng.uniform(0.2, 1.0))))
    return ellipses, rasterize(ellipses, lattice)


# (cx, cy, a, b, phi_deg, intensity) in units of the half field of view
_HEAD = [
    (0.0, 0.0, 0.72, 0.92, 0.0, 1.0),
    (0.0, -0.01, 0.66, 0.86, 0.0, -0.75),
    (0.0, 0.0, 0.62, 0.82, 0.0, 0.05),
    (0.20, 0.0, 0.10, 0.30, -18.0, -0.08),
    (-0.20, 0.0, 0.13, 0.38, 18.0, -0.08),
    (0.0, 0.35, 0.20, 0.24, 0.0, 0.04),
    (0.0, 0.10, 0.045, 0.045, 0.0, 0.04),
    (0.0, -0.10, 0.045, 0.045, 0.0, 0.04),
    (-0.08, -0.60, 0.045, 0.022, 0.0, 0.06),
    (0.06, -0.60, 0.022, 0.022, 0.0, 0.06),
    (0.0, -0.82, 0.16, 0.06, 0.0, 0.3),
]


def forbild_like(lattice: Lattice) -> list[EllipseSpec]:
    """A head-shaped ellipse phantom for demos (not the exact FORBILD definition)."""
    half = lattice.extent / 2.0
    return [EllipseSpec(*row).scaled(half) for row in _HEAD]


def fine_lattice(lattice: Lattice, factor: int = GROUND_TRUTH_FACTOR) -> Lattice:
    fine = lattice.refine(factor)
    if fine.n * fine.n > MAX_FINE_PIXELS:
        raise MemoryError(
            f"ground truth at {fine.n}x{fine.n} exceeds the {MAX_FINE_PIXELS} pixel budget"
        )
    return fine


def ground_truth_sinogram(ellipses, lattice: Lattice, geometry: ProjectionGeometry,
                          factor: int = GROUND_TRUTH_FACTOR) -> Sinogram:
    """Sinogram of the phantom discretized ``factor`` times finer than the lattice."""
    if not ellipses:
        return Sinogram(geometry, np.zeros((geometry.n_views, geometry.detector_count)))
    fine = rasterize(ellipses, fine_lattice(lattice, factor))
    return forward(fine, geometry)


def ground_truth_image(ellipses, lattice: Lattice, factor: int = GROUND_TRUTH_FACTOR) -> Image:
    """The fine rasterization block-averaged back onto the reconstruction lattice."""
    fine = rasterize(ellipses, fine_lattice(lattice, factor))
    return Image(block_average(fine.coeffs, factor), lattice.lambda_x)


def ingest_image(path, lattice: Lattice) -> Image:
    """Load an 8/16-bit grayscale PGM or PNG, scale to [0, 1] and block-average to N x N."""
    data, full_scale = read_raster(path)
    rows, cols = data.shape
    if rows != cols:
        raise ValueError(f"{path}: image is {rows}x{cols}, must be square")
    if rows % lattice.n:
        raise ValueError(
            f"{path}: size {rows} is not an integer multiple of N={lattice.n}"
        )
    scaled = data / float(full_scale)
    return Image(block_average(scaled, rows // lattice.n), lattice.lambda_x)
