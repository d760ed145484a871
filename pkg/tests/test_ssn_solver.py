import numpy as np
import pytest

from src.dual_objective import Mode, dense_newton_matrix, newton_operator_at
from src.problems import build_example1, build_example2, build_quadratic
from src.ssn_solver import (
    InexactRule,
    SolverConfig,
    StopReason,
    continuation_solve,
    dual_ulp,
    inexact_tolerance,
    solve,
)


@pytest.mark.parametrize(
    "grad_norm,expected",
    [(1.0, 1e-4), (1e-3, 1e-6), (1e-2, 1e-4), (5e-2, 1e-4)],
)
def test_capped_tolerance(grad_norm, expected):
    assert inexact_tolerance(InexactRule.CAPPED, grad_norm) == pytest.approx(expected)


def test_forcing_tolerance_follows_eta_and_tau():
    assert inexact_tolerance(InexactRule.FORCING, 0.5, eta=0.0) == 0.0
    assert inexact_tolerance(InexactRule.FORCING, 1e-2, eta=1.0, tau=1.0) == pytest.approx(1e-4)
    assert inexact_tolerance("forcing", 1e-2, eta=2.0, tau=0.5) == pytest.approx(2e-3)


def test_dual_ulp():
    assert dual_ulp(1.0) == np.finfo(float).eps
    assert dual_ulp(-2.0) == np.finfo(float).eps
    assert dual_ulp(0.0) > 0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"sigma": 0.0},
        {"sigma": 0.5},
        {"ls_backtrack": 1.0},
        {"eta": -1.0},
        {"tau": 0.0},
        {"tau": 1.5},
        {"delta_tol": 0.0},
        {"max_outer": 0},
        {"inexact_rule": "sometimes"},
    ],
)
def test_invalid_solver_config(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_quadratic_solves_in_one_newton_step():
    pb = build_quadratic(8)
    cfg = SolverConfig(eta=1e-12, inexact_rule=InexactRule.FORCING, delta_tol=1e-10)
    report = solve(pb, cfg)
    assert report.stop_reason in (StopReason.RESIDUAL_TOL, StopReason.DUAL_ULP)
    assert report.iterations == 1
    assert report.trace[0].step == 1.0

    interior = pb.mesh.interior
    A = dense_newton_matrix(newton_operator_at(pb, pb.initial_guess()))
    expected = np.linalg.solve(A, pb.z.values[interior])
    np.testing.assert_allclose(report.xi.values[interior], expected, atol=1e-9)
    assert abs(report.gap_final) <= 1e-10


@pytest.mark.parametrize("mode", [Mode.P0, Mode.VARIATIONAL])
def test_example1_converges_cleanly(mode):
    report = solve(build_example1(8, 1e-4, mode=mode))
    assert report.converged
    assert report.stop_reason.clean
    assert report.residual_final <= 1e-6
    assert report.gap_final >= -1e-10
    assert 0.0 <= report.inactive_l1 <= 1.0
    assert report.cg_total == sum(r.cg_iterations for r in report.trace) + report.stopping_cg
    assert report.h == pytest.approx(np.sqrt(2) / 8)
    assert report.alpha == 1e-4


def test_trace_is_monotone_descent():
    report = solve(build_example2(8, 1e-4))
    phis = [r.phi for r in report.trace] + [report.phi_final]
    assert all(b <= a for a, b in zip(phis, phis[1:]))
    assert all(r.slope < 0 for r in report.trace)
    assert all(0 < r.step <= 1.0 for r in report.trace)
    assert [r.k for r in report.trace] == list(range(report.iterations))


def test_armijo_condition_holds_along_trace():
    cfg = SolverConfig()
    report = solve(build_example1(8, 1e-4), cfg)
    phis = [r.phi for r in report.trace] + [report.phi_final]
    for rec, nxt in zip(report.trace, phis[1:]):
        assert nxt - rec.phi <= cfg.sigma * rec.step * rec.slope + 1e-12 * abs(rec.phi)


def test_keep_iterates():
    report = solve(build_quadratic(6), SolverConfig(keep_iterates=True))
    assert len(report.iterates) == report.iterations + 1
    np.testing.assert_array_equal(report.iterates[-1], report.xi.values)
    assert solve(build_quadratic(6)).iterates is None


def test_unglobalized_takes_full_steps():
    report = solve(build_example2(8, 1e-3), SolverConfig(globalized=False, max_outer=50))
    assert all(r.step == 1.0 and r.backtracks == 0 for r in report.trace)


def test_iteration_cap():
    report = solve(build_example1(8, 1e-5), SolverConfig(max_outer=1))
    assert report.stop_reason is StopReason.MAX_ITER
    assert report.iterations == 1
    assert not report.converged


def test_warm_start_at_solution_stops_immediately():
    pb = build_example2(8, 1e-3)
    first = solve(pb)
    again = solve(pb, xi0=first.xi)
    assert again.iterations <= 1
    assert again.converged


def test_continuation_with_one_alpha_matches_solve():
    pb = build_example1(8, 1e-3)
    (report,) = continuation_solve(pb, [1e-3])
    direct = solve(pb)
    assert report.iterations == direct.iterations
    np.testing.assert_array_equal(report.xi.values, direct.xi.values)


def test_continuation_reports_every_alpha():
    pb = build_example1(8, 1e-3)
    alphas = [1e-3, 1e-4, 1e-5]
    reports = continuation_solve(pb, alphas)
    assert [r.alpha for r in reports] == alphas
    assert all(r.converged for r in reports)


def test_rejected_last_direction_is_counted_separately():
    pb = build_quadratic(6)
    solved = solve(pb)
    # from a converged point an unreachable residual tolerance leaves only the
    # round-off stop, decided after one CG solve
    report = solve(pb, SolverConfig(delta_tol=1e-300), xi0=solved.xi)
    assert report.stop_reason is StopReason.DUAL_ULP
    assert report.iterations == 0
    assert report.trace == ()
    assert report.stopping_cg >= 1
    assert report.cg_total == report.stopping_cg


def test_residual_stop_has_no_rejected_direction():
    report = solve(build_quadratic(6), SolverConfig(delta_tol=1e-6))
    assert report.stop_reason is StopReason.RESIDUAL_TOL
    assert report.stopping_cg == 0
    assert report.cg_total == sum(r.cg_iterations for r in report.trace)


@pytest.mark.parametrize("alphas", [[1e-4, 1e-3], [1e-3, 1e-3], [1e-3, 1e-4, 1e-2]])
def test_continuation_rejects_non_descending_schedule(alphas):
    with pytest.raises(ValueError, match="strictly decreasing"):
        continuation_solve(build_example1(4, 1e-3), alphas)
