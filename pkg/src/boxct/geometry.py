"""Image lattice, parallel-beam angle set and detector grid."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boxspline import degeneracy_threshold

DEFAULT_VIEWS = 180


@dataclass(frozen=True)
class Lattice:
    """N x N pixel grid with isotropic spacing, centered on the origin."""

    n: int
    lambda_x: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"lattice size must be a positive integer, got {self.n}")
        if not self.lambda_x > 0:
            raise ValueError("lambda_x must be positive")

    @property
    def positions(self) -> np.ndarray:
        return self.lambda_x * (np.arange(self.n) - (self.n - 1) / 2.0)

    @property
    def extent(self) -> float:
        """Side length of the field of view."""
        return self.n * self.lambda_x

    def refine(self, factor: int) -> "Lattice":
        return Lattice(self.n * factor, self.lambda_x / factor)


def _snap(v: np.ndarray) -> np.ndarray:
    # exact zeros/ones at axis-aligned angles keep pixel edges on detector samples
    v = np.where(np.abs(v) < 1e-14, 0.0, v)
    return np.where(np.abs(np.abs(v) - 1.0) < 1e-15, np.sign(v), v)


@dataclass(frozen=True)
class ProjectionGeometry:
    """Parallel-beam acquisition: angles, detector grid and detector blur.

    ``lambda_x`` is the pixel step of the reconstruction lattice the geometry
    was laid out for; operators take the pixel step from the image itself so
    finer images (ground truth) can share the detector grid.
    """

    angles: tuple[float, ...]
    lambda_x: float
    lambda_y: float
    detector_count: int
    blur_width: float = 0.0

    def __post_init__(self) -> None:
        if len(self.angles) < 1:
            raise ValueError("at least one angle is required")
        if not (self.lambda_x > 0 and self.lambda_y > 0):
            raise ValueError("sampling steps must be positive")
        if self.detector_count < 1 or self.detector_count % 2 == 0:
            raise ValueError(f"detector_count must be odd and positive, got {self.detector_count}")
        if self.blur_width < 0:
            raise ValueError("blur_width must be non-negative")

    @property
    def n_views(self) -> int:
        return len(self.angles)

    @property
    def cos(self) -> np.ndarray:
        return _snap(np.cos(np.asarray(self.angles)))

    @property
    def sin(self) -> np.ndarray:
        return _snap(np.sin(np.asarray(self.angles)))

    @property
    def y0(self) -> float:
        return -self.lambda_y * (self.detector_count - 1) / 2.0

    @property
    def detector_positions(self) -> np.ndarray:
        return self.lambda_y * (np.arange(self.detector_count) - (self.detector_count - 1) / 2.0)

    @property
    def rate(self) -> float:
        return self.lambda_y / self.lambda_x

    def with_blur(self, blur_width: float) -> "ProjectionGeometry":
        return ProjectionGeometry(self.angles, self.lambda_x, self.lambda_y,
                                  self.detector_count, blur_width)

    def to_json(self) -> dict:
        return {
            "n_views": self.n_views,
            "angles_deg": [math.degrees(a) for a in self.angles],
            "lambda_x": self.lambda_x,
            "lambda_y": self.lambda_y,
            "detector_count": self.detector_count,
            "blur_width": self.blur_width,
        }

    @classmethod
    def from_json(cls, doc: dict, lattice: Lattice | None = None) -> "ProjectionGeometry":
        lambda_x = float(doc.get("lambda_x", lattice.lambda_x if lattice else 1.0))
        lambda_y = float(doc.get("lambda_y", lambda_x))
        blur = float(doc.get("blur_width", 0.0))
        if doc.get("angles_deg"):
            angles = tuple(math.radians(a) for a in doc["angles_deg"])
        else:
            angles = uniform_angles(int(doc.get("n_views", DEFAULT_VIEWS)))
        count = int(doc.get("detector_count", 0))
        if count == 0:
            if lattice is None:
                raise ValueError("detector_count is 0 (auto) but no lattice was given")
            count = _extent(lattice.n, lattice.lambda_x, lambda_y, blur)
        return cls(angles, lambda_x, lambda_y, count, blur)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path, lattice: Lattice | None = None) -> "ProjectionGeometry":
        return cls.from_json(json.loads(Path(path).read_text()), lattice)


def uniform_angles(n_views: int) -> tuple[float, ...]:
    if n_views < 1:
        raise ValueError("n_views must be positive")
    return tuple(i * math.pi / n_views for i in range(n_views))


def _extent(n: int, lambda_x: float, lambda_y: float, blur: float) -> int:
    half = math.sqrt(2) / 2
    need = lambda_x * (n - 1) * half + lambda_x * half + blur / 2 + lambda_y
    m = 2 * math.ceil(need / lambda_y - 1e-12) + 1
    return max(m, 1)


def detector_extent(lattice: Lattice, geometry: ProjectionGeometry) -> int:
    """Smallest odd detector count covering every projected pixel plus a guard cell."""
    return _extent(lattice.n, lattice.lambda_x, geometry.lambda_y, geometry.blur_width)


def make_geometry(lattice: Lattice, n_views: int = DEFAULT_VIEWS, rate: float = 1.0,
                  blur: float = 0.0, angles=None, detector_count: int | None = None
                  ) -> ProjectionGeometry:
    """Geometry with ``lambda_y = rate * lambda_x``; ``blur`` is in units of ``lambda_y``."""
    lambda_y = rate * lattice.lambda_x
    blur_width = blur * lambda_y
    if angles is None:
        angles = uniform_angles(n_views)
    else:
        angles = tuple(float(a) for a in angles)
    if detector_count is None:
        detector_count = _extent(lattice.n, lattice.lambda_x, lambda_y, blur_width)
    return ProjectionGeometry(angles, lattice.lambda_x, lambda_y, detector_count, blur_width)


def project_lattice(geometry: ProjectionGeometry, lattice: Lattice, angle_index: int) -> np.ndarray:
    """Signed detector coordinate of every pixel center, row-major (length N^2)."""
    c = geometry.cos[angle_index]
    s = geometry.sin[angle_index]
    x = lattice.positions
    return (-s * x[:, None] + c * x[None, :]).reshape(-1)


def projected_widths(geometry: ProjectionGeometry, angle_index: int, include_blur: bool = True,
                     lambda_x: float | None = None) -> list[float]:
    lam = geometry.lambda_x if lambda_x is None else lambda_x
    widths = [lam * abs(float(geometry.cos[angle_index])),
              lam * abs(float(geometry.sin[angle_index]))]
    if include_blur and geometry.blur_width > 0:
        widths.append(geometry.blur_width)
    return widths


def effective_directions(widths) -> int:
    """Number of widths that survive degeneracy dropping."""
    eps = degeneracy_threshold(widths)
    return sum(1 for w in widths if w > eps)
