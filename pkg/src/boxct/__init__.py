"""Box-spline forward/back projection and Gram-filter reconstruction for parallel-beam CT."""

from ._backend import get_backend, set_backend
from .boxspline import BoxSplineKernel, DegenerateKernelError, eval_sampled, evaluate, make_kernel
from .geometry import Lattice, ProjectionGeometry, make_geometry, uniform_angles
from .metrics import error_map, snr_db, ssim
from .operators import (GramFilter, Image, Sinogram, backproject, correction_filter, forward,
                        gram_apply, gram_build, interpolate)
from .solver import NumericalBreakdown, ReconstructionTrace, reconstruct

__version__ = "0.1.0"

__all__ = [
    "BoxSplineKernel", "DegenerateKernelError", "GramFilter", "Image", "Lattice",
    "NumericalBreakdown", "ProjectionGeometry", "ReconstructionTrace", "Sinogram",
    "backproject", "correction_filter", "error_map", "eval_sampled", "evaluate", "forward",
    "get_backend", "gram_apply", "gram_build", "interpolate", "make_geometry", "make_kernel",
    "reconstruct", "set_backend", "snr_db", "ssim", "uniform_angles",
]
