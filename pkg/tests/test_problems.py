import numpy as np
import pytest

from src.dual_objective import Mode
from src.prox_ops import FamilyKind
from src.problems import (
    EXAMPLE1_ALPHA,
    EXAMPLE2_ALPHA,
    ProblemName,
    ProblemSpec,
    build_example1,
    build_example2,
    build_problem,
    example1_desired_state,
    example2_perturbation,
    quadratic_desired_state,
)


def test_example1_desired_state_values():
    assert example1_desired_state(0.5, 0.0) == pytest.approx(2.9924, abs=1e-4)
    assert example1_desired_state(0.0, 0.3) == 0.0


def test_example2_perturbation_values():
    assert example2_perturbation(0.1, 0.5) == pytest.approx(5.0)
    assert example2_perturbation(0.3, 0.5) == 0.0
    assert example2_perturbation(0.2, 0.5) == pytest.approx(5.0)


def test_quadratic_desired_state_vanishes_on_boundary():
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(quadratic_desired_state(x, 0.0), 0.0, atol=1e-15)
    np.testing.assert_allclose(quadratic_desired_state(0.0, x), 0.0, atol=1e-15)


def test_example1_defaults():
    pb = build_example1(8)
    assert pb.alpha == EXAMPLE1_ALPHA
    assert pb.prox.kind is FamilyKind.BOX_L1
    assert pb.prox.beta == 1e-2
    assert pb.prox.R == 1000.0
    np.testing.assert_array_equal(pb.z.values[pb.mesh.boundary_mask], 0.0)


def test_example2_desired_state_is_a_state():
    pb = build_example2(8)
    assert pb.alpha == EXAMPLE2_ALPHA
    assert pb.prox.kind is FamilyKind.BOX
    z = pb.z.values
    np.testing.assert_array_equal(z[pb.mesh.boundary_mask], 0.0)
    # 5 sin(pi x2) on the strip x1 <= 0.2 is a non-negative load
    assert z.min() >= 0.0
    assert z.max() > 0.0


def test_problem_data_is_deterministic():
    a, b = build_example1(8), build_example1(8)
    np.testing.assert_array_equal(a.z.values, b.z.values)


def test_problem_spec_defaults_follow_problem():
    assert ProblemSpec(name="example2").resolved_alpha() == EXAMPLE2_ALPHA
    assert ProblemSpec(name="quadratic").prox_family().kind is FamilyKind.ZERO
    assert ProblemSpec(name="example2").prox_family().R == 1.0


def test_problem_spec_family_override():
    spec = ProblemSpec(name="example1", family="l2ball", gamma=0.5)
    family = spec.prox_family()
    assert family.kind is FamilyKind.L2_BALL
    assert family.gamma == 0.5


@pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"beta": -1.0}, {"R": 0.0}])
def test_problem_spec_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        ProblemSpec(**kwargs)


def test_problem_spec_rejects_unknown_problem():
    with pytest.raises(ValueError):
        ProblemSpec(name="example3")


def test_build_problem_overrides():
    spec = ProblemSpec(name=ProblemName.EXAMPLE2, n=4, alpha=1e-3, R=2.0)
    pb = build_problem(spec, mode=Mode.VARIATIONAL, n=6, alpha=1e-2)
    assert pb.mesh.n == 6
    assert pb.alpha == 1e-2
    assert pb.mode is Mode.VARIATIONAL
    assert pb.prox.R == 2.0
    assert build_problem(spec).mesh.n == 4
