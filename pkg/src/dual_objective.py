"""
Dual objective of the control problem

    min_u 0.5*||S u - z||^2 + alpha/2*||u||^2 + g(u),

namely Phi(xi) = 0.5*||xi - z||^2 - 0.5*||z||^2 + 1/(2 alpha)*||S* xi||^2
- alpha*env_{g/alpha}(S* xi/alpha), its gradient, the generalized Hessian
used by the Newton iteration, primal recovery and the primal-dual gap.

Two discretizations of the control are supported. In P0 mode S* xi is
projected onto piecewise constants before the prox is applied. In
variational mode the control prox(S* xi/alpha) is kept as the prox of a P1
function and integrated exactly with KinkQuadrature.
"""

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import sparse as sp

from .errors import ProxFamilyError
from .fem import DiscreteOperators, GridFunction, KinkQuadrature, Space, _values
from .prox_ops import (
    FamilyKind,
    ProxFamily,
    ScaledProx,
    conjugate_scalar,
    conjugate_vector,
    dprox_scalar,
    dprox_vector_apply,
    penalty,
    prox_scalar,
    prox_vector,
    taylor_remainders,
)

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    P0 = "p0"
    VARIATIONAL = "variational"


@dataclass(frozen=True, eq=False)
class DualProblem:
    ops: DiscreteOperators
    z: GridFunction
    alpha: float
    prox: ProxFamily
    mode: Mode = Mode.P0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.mode is Mode.VARIATIONAL and not self.prox.separable:
            raise ProxFamilyError(
                f"{self.prox.kind.value} cannot be used with the variational discretization"
            )
        z = _values(self.z, Space.P1, self.ops.mesh.num_nodes)
        object.__setattr__(self, "z", GridFunction.p1(z))

    @property
    def scaled(self) -> ScaledProx:
        return ScaledProx.for_alpha(self.prox, self.alpha)

    @property
    def mesh(self):
        return self.ops.mesh

    def with_alpha(self, alpha: float) -> "DualProblem":
        return dataclasses.replace(self, alpha=alpha)

    def with_mode(self, mode: Mode) -> "DualProblem":
        return dataclasses.replace(self, mode=mode)

    def initial_guess(self) -> GridFunction:
        """xi_0 = -z, the dual point belonging to the control u_0 = 0."""
        return GridFunction.p1(-self.z.values)

    def at(self, xi) -> "DualPoint":
        return DualPoint(self, xi)


class DualPoint:
    """
    Everything the solver needs at one dual iterate, computed lazily and
    at most once: the adjoint S* xi, the prox argument, Phi and its gradient.
    """

    def __init__(self, problem: DualProblem, xi):
        self.problem = problem
        self.xi = _values(xi, Space.P1, problem.mesh.num_nodes)

    @cached_property
    def adjoint(self) -> np.ndarray:
        """S_h* xi as a P1 function."""
        ops = self.problem.ops
        return ops.solve_stiffness(ops.M @ self.xi)

    @cached_property
    def argument(self) -> np.ndarray:
        """q = S* xi / alpha: per cell in P0 mode, per node in variational mode."""
        w = self.adjoint
        if self.problem.mode is Mode.P0:
            w = self.problem.ops.cell_mean(w)
        return w / self.problem.alpha

    @cached_property
    def argument_norm(self) -> float:
        q = self.argument
        return float(np.sqrt(self.problem.ops.inner_p0(q, q)))

    @cached_property
    def quadrature(self) -> Optional[KinkQuadrature]:
        if self.problem.mode is not Mode.VARIATIONAL:
            return None
        return KinkQuadrature(self.problem.mesh, self.argument, self.problem.scaled)

    @cached_property
    def control(self) -> GridFunction:
        pb = self.problem
        q = self.argument
        if pb.mode is Mode.VARIATIONAL:
            return GridFunction(Space.P1_PROX, q, pb.scaled)
        if pb.prox.kind is FamilyKind.L2_BALL:
            return GridFunction.p0(prox_vector(pb.prox, q, self.argument_norm))
        return GridFunction.p0(prox_scalar(pb.scaled, q))

    @cached_property
    def state(self) -> np.ndarray:
        """S u for the recovered control u."""
        ops = self.problem.ops
        if self.problem.mode is Mode.VARIATIONAL:
            quad = self.quadrature
            return ops.solve_stiffness(quad.load(quad.prox_values()))
        return ops.solve_stiffness(ops.B @ self.control.values)

    @cached_property
    def value(self) -> float:
        pb = self.problem
        ops = pb.ops
        xi, z = self.xi, pb.z.values
        q = self.argument
        if pb.mode is Mode.VARIATIONAL:
            conj = self.quadrature.integrate(self.quadrature.conjugate_values())
        elif pb.prox.kind is FamilyKind.L2_BALL:
            conj = conjugate_vector(pb.prox, self.argument_norm)
        else:
            conj = float(np.sum(ops.cell_areas * conjugate_scalar(pb.scaled, q)))
        # 1/(2 alpha)||S* xi||^2 - alpha*env(S* xi/alpha) == alpha * conj
        return 0.5 * ops.inner(xi, xi) - ops.inner(xi, z) + pb.alpha * conj

    @cached_property
    def gradient(self) -> np.ndarray:
        return self.xi - self.problem.z.values + self.state

    @cached_property
    def gradient_norm(self) -> float:
        return self.problem.ops.norm(self.gradient)

    def newton_operator(self) -> "NewtonOperator":
        return NewtonOperator(self)

    @cached_property
    def inactive_measure(self) -> float:
        pb = self.problem
        if pb.mode is Mode.VARIATIONAL:
            return self.quadrature.measure()
        if pb.prox.kind is FamilyKind.L2_BALL:
            nq = self.argument_norm
            factor = 1.0 if nq <= pb.prox.gamma else pb.prox.gamma / nq
            return factor * float(np.sum(pb.ops.cell_areas))
        return float(np.sum(pb.ops.cell_areas * dprox_scalar(pb.scaled, self.argument)))


class NewtonOperator:
    """
    M = I + 1/alpha * S dprox(S* xi/alpha) S*, frozen at xi.

    The derivative weights are per cell in P0 mode and a slope-weighted mass
    matrix over the clipped pieces in variational mode.
    """

    def __init__(self, point: DualPoint):
        self.problem = point.problem
        pb = self.problem
        self._ball_center = None
        self._weighted_mass = None
        self.weights = None
        if pb.mode is Mode.VARIATIONAL:
            self._weighted_mass = point.quadrature.weighted_mass()
        elif pb.prox.kind is FamilyKind.L2_BALL:
            self._ball_center = point.argument.copy()
        else:
            self.weights = dprox_scalar(pb.scaled, point.argument)

    def _dprox(self, p: np.ndarray) -> np.ndarray:
        pb = self.problem
        if self._ball_center is not None:
            return dprox_vector_apply(pb.prox, self._ball_center, p, pb.ops.inner_p0)
        return self.weights * p

    def apply(self, v: np.ndarray) -> np.ndarray:
        ops = self.problem.ops
        w = ops.solve_stiffness(ops.M @ v)
        if self._weighted_mass is not None:
            rhs = self._weighted_mass @ w
        else:
            rhs = ops.B @ self._dprox(ops.cell_mean(w))
        return v + ops.solve_stiffness(rhs) / self.problem.alpha

    __call__ = apply


def phi(pb: DualProblem, xi) -> float:
    return pb.at(xi).value


def grad_phi(pb: DualProblem, xi) -> GridFunction:
    return GridFunction.p1(pb.at(xi).gradient)


def newton_operator_at(pb: DualProblem, xi) -> NewtonOperator:
    return pb.at(xi).newton_operator()


def recover_primal(pb: DualProblem, xi) -> GridFunction:
    """u = prox_{g/alpha}(S* xi / alpha)."""
    return pb.at(xi).control


def primal_value(pb: DualProblem, u: GridFunction) -> float:
    """J(u) = 0.5*||S u - z||^2 + alpha/2*||u||^2 + int g(u)."""
    ops = pb.ops
    z = pb.z.values
    alpha = pb.alpha
    if u.space is Space.P1_PROX:
        quad = KinkQuadrature(pb.mesh, u.values, u.prox)
        prox_values = quad.prox_values()
        y = ops.solve_stiffness(quad.load(prox_values))
        control_terms = quad.integrate(
            0.5 * alpha * prox_values**2 + alpha * quad.penalty_values()
        )
    else:
        u_values = _values(u, Space.P0, pb.mesh.num_cells)
        y = ops.solve_stiffness(ops.B @ u_values)
        norm2 = ops.inner_p0(u_values, u_values)
        if pb.prox.kind is FamilyKind.L2_BALL:
            radius = pb.prox.gamma * (1.0 + 1e-12)
            g_value = 0.0 if np.sqrt(norm2) <= radius else np.inf
        else:
            g_value = alpha * float(np.sum(ops.cell_areas * penalty(pb.scaled, u_values)))
        control_terms = 0.5 * alpha * norm2 + g_value
    r = y - z
    return 0.5 * ops.inner(r, r) + control_terms


def duality_gap(pb: DualProblem, xi) -> float:
    point = pb.at(xi)
    return primal_value(pb, point.control) + point.value


def inactive_measure(pb: DualProblem, xi) -> float:
    """Integral of dprox(S* xi/alpha) over the domain, the size of the inactive set."""
    return pb.at(xi).inactive_measure


def random_direction(pb: DualProblem, rng: np.random.Generator) -> np.ndarray:
    """Random P1 function with zero boundary values and unit Y norm."""
    v = rng.standard_normal(pb.mesh.num_nodes)
    v[pb.mesh.boundary_mask] = 0.0
    return v / pb.ops.norm(v)


def check_gradient(
    pb: DualProblem,
    xi,
    directions: Iterable[np.ndarray],
    t: float = 1e-5,
) -> pd.DataFrame:
    """
    Central differences of Phi against <grad Phi, h> along each direction.
    Errors are relative to ||grad Phi|| ||h||.
    """
    point = pb.at(xi)
    rows = []
    for i, h in enumerate(directions):
        fd = (phi(pb, point.xi + t * h) - phi(pb, point.xi - t * h)) / (2.0 * t)
        exact = pb.ops.inner(point.gradient, h)
        scale = max(pb.ops.norm(point.gradient) * pb.ops.norm(h), 1e-300)
        rows.append(
            {
                "direction": i,
                "finite_difference": fd,
                "directional_derivative": exact,
                "relative_error": abs(fd - exact) / scale,
            }
        )
    return pd.DataFrame(rows)


def semismooth_taylor_check(
    pb: DualProblem,
    xi,
    h: np.ndarray,
    ts: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6),
) -> pd.DataFrame:
    """
    First- and second-order remainders of the expansion at xi along h, with
    the generalized Hessian taken at the perturbed point:

        r1(t) = ||grad(xi+th) - grad(xi) - M(xi+th) th|| / t
        r2(t) = |Phi(xi+th) - Phi(xi) - <grad(xi), th> - 0.5 <M(xi+th) th, th>| / t^2

    In P0 mode with a separable g the quadratic parts cancel analytically and
    what is left is S applied to the cellwise prox remainders (r1) and their
    integral (r2), see taylor_remainders. Otherwise both are evaluated
    directly and bottom out at round-off of order eps*|Phi|/t^2.
    """
    ops = pb.ops
    base = pb.at(xi)
    cellwise = pb.mode is Mode.P0 and pb.prox.separable
    rows = []
    for t in ts:
        step = t * h
        if cellwise:
            dq = pb.at(step).argument
            first, second = taylor_remainders(pb.scaled, base.argument, dq)
            r1 = ops.norm(ops.solve_stiffness(ops.B @ first)) / t
            r2 = abs(pb.alpha * float(np.sum(ops.cell_areas * second))) / t**2
        else:
            moved = pb.at(base.xi + step)
            Mstep = moved.newton_operator().apply(step)
            r1 = ops.norm(moved.gradient - base.gradient - Mstep) / t
            r2 = (
                abs(
                    moved.value
                    - base.value
                    - ops.inner(base.gradient, step)
                    - 0.5 * ops.inner(Mstep, step)
                )
                / t**2
            )
        rows.append({"t": t, "r1": r1, "r2": r2})
    return pd.DataFrame(rows)


def estimate_sstar_norm(
    pb: DualProblem, iterations: int = 100, seed: int = 0
) -> float:
    """Power-iteration estimate of lambda_max(S S*) in the Y inner product."""
    ops = pb.ops
    rng = np.random.default_rng(seed)
    v = random_direction(pb, rng)
    lam = 0.0
    for _ in range(iterations):
        w = ops.solve_stiffness(ops.M @ v)
        if pb.mode is Mode.P0:
            Av = ops.solve_stiffness(ops.B @ ops.cell_mean(w))
        else:
            Av = ops.solve_stiffness(ops.M @ w)
        lam = ops.inner(v, Av)
        v = Av / ops.norm(Av)
    return lam


def dense_newton_matrix(op: NewtonOperator) -> np.ndarray:
    """Matrix of the Newton operator on interior nodes (small meshes only)."""
    mesh = op.problem.mesh
    interior = mesh.interior
    cols = []
    for i in interior:
        e = np.zeros(mesh.num_nodes)
        e[i] = 1.0
        cols.append(op.apply(e)[interior])
    return np.column_stack(cols)


def interior_mass(pb: DualProblem) -> sp.csr_matrix:
    interior = pb.mesh.interior
    return pb.ops.M[interior][:, interior]
