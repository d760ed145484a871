"""
Globalized inexact semismooth Newton method on the dual problem.

Each outer step builds the generalized Hessian M_k at xi_k, solves
M_k d = -grad Phi(xi_k) inexactly with CG, and backtracks along d until the
Armijo condition holds. The loop ends when ||grad Phi|| <= delta_tol, or
when |<d_k, grad Phi(xi_k)>| no longer exceeds the spacing of floating
point numbers at Phi(xi_k), after which no representable decrease of Phi
is left.
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import cg
from .dual_objective import DualPoint, DualProblem, primal_value
from .fem import GridFunction

logger = logging.getLogger(__name__)


class InexactRule(str, Enum):
    # eta * ||grad||^(1 + tau)
    FORCING = "forcing"
    # min(1e-4, 0.1 ||grad||, ||grad||^2)
    CAPPED = "capped"


class StopReason(str, Enum):
    RESIDUAL_TOL = "ResidualTol"
    DUAL_ULP = "DualUlp"
    MAX_ITER = "MaxIter"
    LINESEARCH_STALL = "LinesearchStall"
    DIVERGED = "Diverged"

    @property
    def clean(self) -> bool:
        return self in (StopReason.RESIDUAL_TOL, StopReason.DUAL_ULP)


@dataclass(frozen=True)
class SolverConfig:
    sigma: float = 0.1
    ls_backtrack: float = 0.5
    eta: float = 1.0
    tau: float = 1.0
    delta_tol: float = 1e-12
    max_outer: int = 200
    max_backtracks: int = 60
    inexact_rule: InexactRule = InexactRule.CAPPED
    globalized: bool = True
    keep_iterates: bool = False
    cg_max_iter: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "inexact_rule", InexactRule(self.inexact_rule))
        if not 0.0 < self.sigma < 0.5:
            raise ValueError(f"sigma must lie in (0, 1/2), got {self.sigma}")
        if not 0.0 < self.ls_backtrack < 1.0:
            raise ValueError(f"backtracking factor must lie in (0, 1), got {self.ls_backtrack}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not self.delta_tol > 0:
            raise ValueError(f"delta_tol must be > 0, got {self.delta_tol}")
        if self.max_outer < 1 or self.max_backtracks < 0:
            raise ValueError("iteration caps must be positive")


@dataclass(frozen=True)
class IterationRecord:
    k: int
    phi: float
    residual: float
    step: float
    cg_iterations: int
    slope: float  # <d_k, grad Phi(xi_k)>
    direction_norm: float
    backtracks: int


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    cg_total: int
    phi_final: float
    gap_final: float
    residual_final: float
    inactive_l1: float
    stop_reason: StopReason
    trace: Tuple[IterationRecord, ...]
    xi: GridFunction = field(repr=False)
    alpha: float = 0.0
    h: float = 0.0
    elapsed: float = 0.0
    iterates: Optional[Tuple[np.ndarray, ...]] = field(default=None, repr=False)
    # CG iterations of a last direction that was rejected by the DualUlp test;
    # counted in cg_total but not in any trace record
    stopping_cg: int = 0

    @property
    def converged(self) -> bool:
        return self.stop_reason.clean


def inexact_tolerance(
    rule: InexactRule, grad_norm: float, eta: float = 1.0, tau: float = 1.0
) -> float:
    """CG tolerance for the Newton equation at a point with ||grad Phi|| = grad_norm."""
    if InexactRule(rule) is InexactRule.FORCING:
        return eta * grad_norm ** (1.0 + tau)
    return min(1e-4, 0.1 * grad_norm, grad_norm**2)


def dual_ulp(value: float) -> float:
    """Distance from value to the next larger binary64 number."""
    return float(np.nextafter(value, np.inf) - value)


def _armijo(
    pb: DualProblem, point: DualPoint, d: np.ndarray, slope: float, cfg: SolverConfig
):
    t = 1.0
    for l in range(cfg.max_backtracks + 1):
        trial = pb.at(point.xi + t * d)
        if trial.value - point.value <= cfg.sigma * t * slope:
            return trial, t, l
        t *= cfg.ls_backtrack
    return None, t, cfg.max_backtracks


def solve(
    pb: DualProblem, cfg: SolverConfig = SolverConfig(), xi0=None
) -> SolveReport:
    """Run the globalized (or, on request, the plain) semismooth Newton method."""
    start = time.perf_counter()
    ops = pb.ops
    point = pb.at(pb.initial_guess() if xi0 is None else xi0)
    trace: List[IterationRecord] = []
    iterates = [point.xi.copy()] if cfg.keep_iterates else None
    cg_total = 0
    stopping_cg = 0
    stop = StopReason.MAX_ITER

    for k in range(cfg.max_outer + 1):
        phi_k = point.value
        grad = point.gradient
        grad_norm = point.gradient_norm
        if not (np.isfinite(phi_k) and np.isfinite(grad_norm)):
            stop = StopReason.DIVERGED
            break
        if grad_norm <= cfg.delta_tol:
            stop = StopReason.RESIDUAL_TOL
            break
        if k == cfg.max_outer:
            stop = StopReason.MAX_ITER
            break

        tol = inexact_tolerance(cfg.inexact_rule, grad_norm, cfg.eta, cfg.tau)
        outcome = cg.solve(
            point.newton_operator(), -grad, ops.inner, tol, cfg.cg_max_iter
        )
        cg_total += outcome.iterations
        d = outcome.x
        slope = ops.inner(d, grad)
        if abs(slope) <= dual_ulp(phi_k):
            stopping_cg = outcome.iterations
            stop = StopReason.DUAL_ULP
            break

        if cfg.globalized:
            trial, t, backtracks = _armijo(pb, point, d, slope, cfg)
            if trial is None:
                stop = StopReason.LINESEARCH_STALL
                logger.warning(
                    "line search stalled after %d backtracks at k=%d", backtracks, k
                )
                break
        else:
            trial, t, backtracks = pb.at(point.xi + d), 1.0, 0

        trace.append(
            IterationRecord(
                k=k,
                phi=phi_k,
                residual=grad_norm,
                step=t,
                cg_iterations=outcome.iterations,
                slope=slope,
                direction_norm=ops.norm(d),
                backtracks=backtracks,
            )
        )
        logger.info(
            "k=%3d  phi=% .10e  |grad|=%.3e  t=%.3e  cg=%d",
            k,
            phi_k,
            grad_norm,
            t,
            outcome.iterations,
        )
        point = trial
        if iterates is not None:
            iterates.append(point.xi.copy())

    if stop.clean:
        logger.info("stopped after %d iterations: %s", len(trace), stop.value)
    else:
        logger.warning("stopped after %d iterations: %s", len(trace), stop.value)

    gap = np.nan
    inactive = np.nan
    if stop is not StopReason.DIVERGED:
        gap = primal_value(pb, point.control) + point.value
        inactive = point.inactive_measure
    return SolveReport(
        iterations=len(trace),
        cg_total=cg_total,
        phi_final=point.value,
        gap_final=gap,
        residual_final=point.gradient_norm,
        inactive_l1=inactive,
        stop_reason=stop,
        trace=tuple(trace),
        xi=GridFunction.p1(point.xi),
        alpha=pb.alpha,
        h=pb.mesh.h,
        elapsed=time.perf_counter() - start,
        iterates=tuple(iterates) if iterates is not None else None,
        stopping_cg=stopping_cg,
    )


def continuation_solve(
    pb: DualProblem,
    alphas: Sequence[float],
    cfg: SolverConfig = SolverConfig(),
    xi0=None,
) -> List[SolveReport]:
    """Solve for each alpha in turn, starting every solve from the previous solution."""
    alphas = list(alphas)
    if any(b >= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError(f"continuation needs strictly decreasing alphas, got {alphas}")
    reports = []
    xi = xi0
    for alpha in alphas:
        logger.info("continuation: alpha=%.2e", alpha)
        report = solve(pb.with_alpha(alpha), cfg, xi)
        reports.append(report)
        xi = report.xi
    return reports
