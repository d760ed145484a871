"""
Experiment problems on the unit square.

Example 1: desired state z = 10 x1 sin(5 x1) cos(7 x2), box constraints plus
L1 cost. Example 2: z = S f for the perturbation
f = chi_[0, 0.2](x1) * 5 sin(pi x2), box constraints. Quadratic: g = 0, for
closed-form oracles.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .dual_objective import DualProblem, Mode
from .fem import apply_S, assemble, build_mesh, interpolate, sample_midpoints
from .prox_ops import FamilyKind, ProxFamily

# Example 1: alpha = 1e-5 unless stated otherwise, beta = 1e-2, R = 1000.
EXAMPLE1_ALPHA = 1e-5
EXAMPLE1_BETA = 1e-2
EXAMPLE1_R = 1000.0
# Example 2: box with R = 1.
EXAMPLE2_ALPHA = 1e-4
EXAMPLE2_R = 1.0
QUADRATIC_ALPHA = 1e-2


class ProblemName(str, Enum):
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class ProblemSpec:
    """
    Which problem to build and with which parameters. family overrides the
    problem's own choice of g; beta, R and gamma feed whichever family is used.
    """

    name: ProblemName = ProblemName.EXAMPLE1
    n: int = 32
    alpha: Optional[float] = None
    beta: Optional[float] = None
    R: Optional[float] = None
    gamma: float = 1.0
    family: Optional[FamilyKind] = None

    def __post_init__(self):
        object.__setattr__(self, "name", ProblemName(self.name))
        if self.family is not None:
            object.__setattr__(self, "family", FamilyKind(self.family))
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta is not None and self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.R is not None and not self.R > 0:
            raise ValueError(f"R must be > 0, got {self.R}")

    def default_alpha(self) -> float:
        return {
            ProblemName.EXAMPLE1: EXAMPLE1_ALPHA,
            ProblemName.EXAMPLE2: EXAMPLE2_ALPHA,
            ProblemName.QUADRATIC: QUADRATIC_ALPHA,
        }[self.name]

    def resolved_alpha(self) -> float:
        return self.default_alpha() if self.alpha is None else self.alpha

    def prox_family(self) -> ProxFamily:
        default_kind = {
            ProblemName.EXAMPLE1: FamilyKind.BOX_L1,
            ProblemName.EXAMPLE2: FamilyKind.BOX,
            ProblemName.QUADRATIC: FamilyKind.ZERO,
        }[self.name]
        default_R = EXAMPLE2_R if self.name is ProblemName.EXAMPLE2 else EXAMPLE1_R
        kind = self.family or default_kind
        beta = EXAMPLE1_BETA if self.beta is None else self.beta
        R = default_R if self.R is None else self.R
        return ProxFamily(kind, R=R, beta=beta, gamma=self.gamma)


def example1_desired_state(x1, x2):
    return 10.0 * x1 * np.sin(5.0 * x1) * np.cos(7.0 * x2)


def example2_perturbation(x1, x2):
    return np.where((x1 >= 0.0) & (x1 <= 0.2), 5.0 * np.sin(np.pi * x2), 0.0)


def quadratic_desired_state(x1, x2):
    return np.sin(np.pi * x1) * np.sin(2.0 * np.pi * x2)


def build_example1(
    n: int,
    alpha: float = EXAMPLE1_ALPHA,
    mode: Mode = Mode.P0,
    family: Optional[ProxFamily] = None,
) -> DualProblem:
    mesh = build_mesh(n)
    ops = assemble(mesh)
    z = interpolate(mesh, example1_desired_state)
    family = family or ProxFamily.box_l1(EXAMPLE1_BETA, EXAMPLE1_R)
    return DualProblem(ops=ops, z=z, alpha=alpha, prox=family, mode=mode)


def build_example2(
    n: int,
    alpha: float = EXAMPLE2_ALPHA,
    mode: Mode = Mode.P0,
    family: Optional[ProxFamily] = None,
) -> DualProblem:
    mesh = build_mesh(n)
    ops = assemble(mesh)
    f = sample_midpoints(mesh, example2_perturbation)
    z = apply_S(ops, f)
    family = family or ProxFamily.box(EXAMPLE2_R)
    return DualProblem(ops=ops, z=z, alpha=alpha, prox=family, mode=mode)


def build_quadratic(
    n: int,
    alpha: float = QUADRATIC_ALPHA,
    mode: Mode = Mode.P0,
    family: Optional[ProxFamily] = None,
) -> DualProblem:
    mesh = build_mesh(n)
    ops = assemble(mesh)
    z = interpolate(mesh, quadratic_desired_state)
    return DualProblem(
        ops=ops, z=z, alpha=alpha, prox=family or ProxFamily.zero(), mode=mode
    )


_BUILDERS = {
    ProblemName.EXAMPLE1: build_example1,
    ProblemName.EXAMPLE2: build_example2,
    ProblemName.QUADRATIC: build_quadratic,
}


def build_problem(
    spec: ProblemSpec,
    mode: Mode = Mode.P0,
    n: Optional[int] = None,
    alpha: Optional[float] = None,
) -> DualProblem:
    """Build the problem described by spec, optionally overriding n or alpha."""
    builder = _BUILDERS[spec.name]
    return builder(
        spec.n if n is None else n,
        spec.resolved_alpha() if alpha is None else alpha,
        mode=mode,
        family=spec.prox_family(),
    )
