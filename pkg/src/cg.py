"""
Conjugate gradients in a Hilbert space given by an inner-product callable.

The iteration always starts at x_0 = 0. With that start every iterate
satisfies <x_k, b> >= ||b||^2 / ||A||, so an inexact Newton step computed
this way is a descent direction no matter where CG is stopped.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import NotPositiveDefiniteError

logger = logging.getLogger(__name__)

Operator = Callable[[np.ndarray], np.ndarray]
InnerProduct = Callable[[np.ndarray, np.ndarray], float]


def euclidean(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))


@dataclass(frozen=True)
class CgOutcome:
    x: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool
    inner_products_trace: Optional[List[float]] = None
    residual_trace: Optional[List[np.ndarray]] = field(default=None, repr=False)


def solve(
    A: Operator,
    b: np.ndarray,
    inner: InnerProduct = euclidean,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
    record: bool = False,
) -> CgOutcome:
    """
    Solve A x = b for A self-adjoint and positive definite w.r.t. inner.

    Stops once ||b - A x|| <= tol in the norm of inner. Hitting max_iter
    (default 10 * len(b)) returns with converged=False rather than raising.
    With record=True the outcome carries <x_k, b> and r_k for every k.
    """
    if tol < 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    if max_iter is None:
        max_iter = 10 * b.size

    x = np.zeros_like(b, dtype=float)
    r = np.array(b, dtype=float, copy=True)
    p = r.copy()
    rr = inner(r, r)
    products = [0.0] if record else None
    residuals = [r.copy()] if record else None

    k = 0
    while np.sqrt(rr) > tol and rr > 0.0:
        if k >= max_iter:
            logger.warning(
                "CG stopped at the iteration cap %d with residual %.3e > %.3e",
                max_iter,
                np.sqrt(rr),
                tol,
            )
            break
        Ap = A(p)
        curvature = inner(Ap, p)
        if curvature <= 0.0:
            raise NotPositiveDefiniteError(curvature, k)
        step = rr / curvature
        x += step * p
        r -= step * Ap
        rr_next = inner(r, r)
        p = r + (rr_next / rr) * p
        rr = rr_next
        k += 1
        if record:
            products.append(inner(x, b))
            residuals.append(r.copy())

    residual_norm = float(np.sqrt(max(rr, 0.0)))
    return CgOutcome(
        x=x,
        iterations=k,
        final_residual_norm=residual_norm,
        converged=residual_norm <= tol,
        inner_products_trace=products,
        residual_trace=residuals,
    )
