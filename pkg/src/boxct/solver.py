"""Unregularized least squares via steepest descent on the normal equations."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Lattice
from .metrics import snr_db
from .operators import GramFilter, Image, Sinogram, backproject, gram_apply, gram_build

DEFAULT_MAX_ITERS = 100
DEFAULT_REL_TOL = 1e-6
_RESIDUAL_REFRESH = 50


class NumericalBreakdown(ArithmeticError):
    pass


@dataclass
class IterationRecord:
    iteration: int
    residual: float
    alpha: float
    snr: float | None = None


@dataclass
class ReconstructionTrace:
    records: list[IterationRecord] = field(default_factory=list)
    status: str = "max-iterations"
    initial_residual: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.records)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "residual", "alpha", "snr"])
            for r in self.records:
                w.writerow([r.iteration, repr(r.residual), repr(r.alpha),
                            "" if r.snr is None else repr(r.snr)])


def steepest_descent(apply: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
                     max_iters: int = DEFAULT_MAX_ITERS, rel_tol: float = DEFAULT_REL_TOL,
                     x0: np.ndarray | None = None,
                     monitor: Callable[[np.ndarray], float] | None = None):
    """Solve ``A x = b`` for SPD ``A`` given only ``apply(x) = A x``.

    Exact line search; the residual is updated recursively and recomputed from
    scratch every 50 steps. Returns ``(x, trace)``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply(x) if x0 is not None else b.copy()
    b_norm = float(np.linalg.norm(b))
    trace = ReconstructionTrace(initial_residual=float(np.linalg.norm(r)))
    if b_norm == 0.0:
        trace.status = "converged"
        return x, trace

    rr = float(np.vdot(r, r))
    if math.sqrt(rr) <= rel_tol * b_norm:
        trace.status = "converged"
        return x, trace
    for it in range(1, max_iters + 1):
        ar = apply(r)
        curv = float(np.vdot(r, ar))
        if not curv > 0.0:
            raise NumericalBreakdown(
                f"non-positive curvature <r, Ar> = {curv:.3e} at iteration {it}; operator is not SPD"
            )
        alpha = rr / curv
        x = x + alpha * r
        if it % _RESIDUAL_REFRESH == 0:
            r = b - apply(x)
        else:
            r = r - alpha * ar
        rr = float(np.vdot(r, r))
        res = math.sqrt(rr)
        trace.records.append(IterationRecord(it, res, alpha, monitor(x) if monitor else None))
        if res <= rel_tol * b_norm:
            trace.status = "converged"
            break
    return x, trace


def reconstruct(sinogram: Sinogram, lattice: Lattice, max_iters: int = DEFAULT_MAX_ITERS,
                rel_tol: float = DEFAULT_REL_TOL, reference: Image | None = None,
                gram: GramFilter | None = None):
    """One back projection, then Gram-filter iterations from zero."""
    b = backproject(sinogram, lattice)
    if gram is None:
        gram = gram_build(lattice, sinogram.geometry)
    lam = lattice.lambda_x

    def apply(x):
        return gram_apply(gram, Image(x, lam)).coeffs

    def monitor(x):
        return snr_db(reference, Image(x, lam))

    x, trace = steepest_descent(apply, b.coeffs, max_iters, rel_tol,
                                monitor=monitor if reference is not None else None)
    return Image(x, lam), trace
