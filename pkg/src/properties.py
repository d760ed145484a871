"""
Runtime property suite.

Each check turns a convergence or structure result about the method into
a numeric inequality on a small mesh and reports one row: which module it
exercises, the measured value, the bound it is compared against and
whether it held.
"""

import logging
import time
from typing import Callable, List

import numpy as np
import pandas as pd

from . import cg
from .dual_objective import (
    DualProblem,
    check_gradient,
    estimate_sstar_norm,
    random_direction,
)
from .fem import apply_S, apply_Sstar, assemble, build_mesh, prolongate
from .problems import build_example1, build_quadratic
from .prox_ops import (
    ProxFamily,
    ScaledProx,
    dprox_scalar,
    dprox_vector_apply,
    env_scalar,
    penalty,
    prox_scalar,
    prox_vector,
)
from .ssn_solver import InexactRule, SolverConfig, solve

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["module", "check", "value", "bound", "passed", "detail"]

SCALAR_FAMILIES = (
    ProxFamily.zero(),
    ProxFamily.box(1.0),
    ProxFamily.l1(0.5),
    ProxFamily.box_l1(0.5, 1.0),
)


def _row(module, check, value, bound, passed, detail=""):
    return {
        "module": module,
        "check": check,
        "value": float(value),
        "bound": float(bound),
        "passed": bool(passed),
        "detail": detail,
    }


def brute_force_prox(p: ScaledProx, v: np.ndarray, lo=-4.0, hi=4.0, step=1e-4):
    """Grid minimizer and minimum of 0.5*(x - v)^2 + (g/alpha)(x)."""
    grid = np.arange(lo, hi + 0.5 * step, step)
    g = penalty(p, grid)
    xs = np.empty(v.size)
    mins = np.empty(v.size)
    for start in range(0, v.size, 64):
        chunk = v[start : start + 64, None]
        obj = 0.5 * (grid[None, :] - chunk) ** 2 + g[None, :]
        k = np.argmin(obj, axis=1)
        xs[start : start + 64] = grid[k]
        mins[start : start + 64] = obj[np.arange(k.size), k]
    return xs, mins


def _away_from_kinks(p: ScaledProx, v: np.ndarray, margin: float) -> np.ndarray:
    kinks = p.breakpoints()
    if kinks.size == 0:
        return v
    dist = np.min(np.abs(v[:, None] - kinks[None, :]), axis=1)
    return v[dist > margin]


# prox_ops


def check_prox_nonexpansive(rng: np.random.Generator) -> List[dict]:
    rows = []
    for fam in SCALAR_FAMILIES:
        p = ScaledProx.for_alpha(fam, 1.0)
        a = rng.uniform(-3, 3, 10_000)
        b = rng.uniform(-3, 3, 10_000)
        excess = np.max(np.abs(prox_scalar(p, a) - prox_scalar(p, b)) - np.abs(a - b))
        rows.append(
            _row("prox_ops", f"nonexpansive[{fam.describe()}]", excess, 1e-14, excess <= 1e-14)
        )
    return rows


def check_prox_oracle(rng: np.random.Generator) -> List[dict]:
    rows = []
    for fam in SCALAR_FAMILIES:
        p = ScaledProx.for_alpha(fam, 1.0)
        v = rng.uniform(-3, 3, 1000)
        xs, mins = brute_force_prox(p, v)
        err = max(
            np.max(np.abs(prox_scalar(p, v) - xs)),
            np.max(np.abs(env_scalar(p, v) - mins)),
        )
        rows.append(_row("prox_ops", f"oracle[{fam.describe()}]", err, 5e-4, err <= 5e-4))
    return rows


def check_envelope_gradient(rng: np.random.Generator) -> List[dict]:
    rows = []
    t = 1e-6
    for fam in SCALAR_FAMILIES:
        p = ScaledProx.for_alpha(fam, 1.0)
        v = _away_from_kinks(p, rng.uniform(-3, 3, 1000), 1e-3)
        fd = (env_scalar(p, v + t) - env_scalar(p, v - t)) / (2 * t)
        err = np.max(np.abs(fd - (v - prox_scalar(p, v))))
        rows.append(_row("prox_ops", f"envelope_gradient[{fam.describe()}]", err, 1e-6, err <= 1e-6))
    return rows


def check_prox_characterization(rng: np.random.Generator) -> List[dict]:
    v = rng.uniform(-3, 3, 1000)
    box = ScaledProx.for_alpha(ProxFamily.box(1.0), 1.0)
    outside = np.max(np.maximum(np.abs(prox_scalar(box, v)) - 1.0, 0.0))

    l1 = ScaledProx.for_alpha(ProxFamily.l1(0.5), 1.0)
    x = prox_scalar(l1, v)
    moved = x != 0
    shrink = np.max(
        np.abs(np.abs(x[moved]) - (np.abs(v[moved]) - l1.threshold)), initial=0.0
    )
    return [
        _row("prox_ops", "box_feasible", outside, 0.0, outside == 0.0),
        _row("prox_ops", "l1_shrinkage", shrink, 0.0, shrink == 0.0),
    ]


def check_dprox_difference_quotient(rng: np.random.Generator) -> List[dict]:
    rows = []
    t = 1e-8
    for fam in SCALAR_FAMILIES:
        p = ScaledProx.for_alpha(fam, 1.0)
        v = rng.uniform(-3, 3, 1000)
        d = dprox_scalar(p, v)
        right = np.abs((prox_scalar(p, v + t) - prox_scalar(p, v)) / t - d)
        left = np.abs((prox_scalar(p, v) - prox_scalar(p, v - t)) / t - d)
        err = np.max(np.minimum(left, right))
        rows.append(_row("prox_ops", f"dprox_quotient[{fam.describe()}]", err, 1e-6, err <= 1e-6))
    return rows


def check_ball_derivative(rng: np.random.Generator) -> List[dict]:
    fam = ProxFamily.l2_ball(1.0)
    worst = 0.0
    for _ in range(20):
        v = rng.standard_normal(12)
        v *= rng.uniform(1.5, 3.0) / np.linalg.norm(v)
        h = rng.standard_normal(12)
        t = 1e-6 * np.linalg.norm(v)
        plus = v + t * h
        minus = v - t * h
        fd = (
            prox_vector(fam, plus, np.linalg.norm(plus))
            - prox_vector(fam, minus, np.linalg.norm(minus))
        ) / (2 * t)
        exact = dprox_vector_apply(fam, v, h, cg.euclidean)
        worst = max(worst, np.linalg.norm(fd - exact) / np.linalg.norm(exact))
    return [_row("prox_ops", "ball_derivative", worst, 1e-6, worst <= 1e-6)]


# fem


def check_adjoint_identity(rng: np.random.Generator) -> List[dict]:
    ops = assemble(build_mesh(8))
    mesh = ops.mesh
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(mesh.num_cells)
        xi = rng.standard_normal(mesh.num_nodes)
        xi[mesh.boundary_mask] = 0.0
        y = apply_S(ops, u).values
        lhs = ops.inner(y, xi)
        rhs = ops.inner_p0(u, apply_Sstar(ops, xi).values)
        worst = max(worst, abs(lhs - rhs) / (ops.norm(y) * ops.norm(xi)))
    return [_row("fem", "adjoint_identity", worst, 1e-12, worst <= 1e-12)]


def check_refinement_order(rng: np.random.Generator) -> List[dict]:
    # ||y_n - y_2n|| for the load u = 1, with y_n prolongated to the finer mesh
    meshes = [build_mesh(n) for n in (8, 16, 32, 64)]
    states = []
    for mesh in meshes:
        ops = assemble(mesh)
        states.append((ops, apply_S(ops, np.ones(mesh.num_cells)).values))
    diffs = []
    for (coarse_ops, y_coarse), (fine_ops, y_fine) in zip(states, states[1:]):
        lifted = prolongate(coarse_ops.mesh, y_coarse, fine_ops.mesh)
        diffs.append(fine_ops.norm(lifted - y_fine))
    ratios = [a / b for a, b in zip(diffs, diffs[1:])]
    passed = all(3.5 <= r <= 4.5 for r in ratios)
    return [
        _row(
            "fem",
            "refinement_order",
            min(ratios),
            3.5,
            passed,
            "ratios " + ", ".join(f"{r:.2f}" for r in ratios),
        )
    ]


# dual_objective


def _small_problem(alpha: float = 1e-2, n: int = 8) -> DualProblem:
    return build_example1(n, alpha)


def check_gradient_fd(rng: np.random.Generator) -> List[dict]:
    pb = _small_problem()
    xi = pb.initial_guess().values + 0.5 * random_direction(pb, rng)
    report = check_gradient(pb, xi, [random_direction(pb, rng) for _ in range(5)], t=1e-6)
    err = report["relative_error"].max()
    return [_row("dual_objective", "gradient_fd", err, 1e-6, err <= 1e-6)]


def check_strong_monotonicity(rng: np.random.Generator) -> List[dict]:
    pb = _small_problem(alpha=1e-4)
    ops = pb.ops
    lipschitz = 1.0 + estimate_sstar_norm(pb) / pb.alpha
    worst = np.inf
    steepest = 0.0
    for _ in range(100):
        a = pb.initial_guess().values + random_direction(pb, rng)
        b = a + rng.uniform(0.01, 1.0) * random_direction(pb, rng)
        diff = a - b
        dgrad = pb.at(a).gradient - pb.at(b).gradient
        worst = min(worst, ops.inner(dgrad, diff) / ops.inner(diff, diff))
        steepest = max(steepest, ops.norm(dgrad) / ops.norm(diff))
    return [
        _row("dual_objective", "strong_monotonicity", worst, 1.0 - 1e-10, worst >= 1.0 - 1e-10),
        _row(
            "dual_objective",
            "gradient_lipschitz",
            steepest,
            lipschitz,
            steepest <= lipschitz * (1 + 1e-8),
        ),
    ]


# cg


def check_cg(rng: np.random.Generator) -> List[dict]:
    # I + S S*/alpha on a coarse mesh: condition number close to 1
    pb = build_quadratic(4, alpha=1e-2)
    ops = pb.ops
    op = pb.at(pb.initial_guess()).newton_operator()
    b = random_direction(pb, rng)
    # stopping at 1e-6 keeps the round-off floor eps * |r_0| / |r_k| below 1e-8
    outcome = cg.solve(op, b, ops.inner, tol=1e-6 * ops.norm(b), record=True)
    L = 1.0 + estimate_sstar_norm(pb) / pb.alpha
    bound = ops.inner(b, b) / L
    lowest = min(outcome.inner_products_trace[1:], default=bound)

    residuals = outcome.residual_trace
    worst = 0.0
    for k in range(len(residuals)):
        for j in range(k):
            scale = ops.norm(residuals[k]) * ops.norm(residuals[j])
            if scale > 0:
                worst = max(worst, abs(ops.inner(residuals[k], residuals[j])) / scale)
    return [
        _row("cg", "lower_bound", lowest, bound * (1 - 1e-8), lowest >= bound * (1 - 1e-8)),
        _row(
            "cg",
            "residual_orthogonality",
            worst,
            1e-8,
            worst <= 1e-8,
            f"{outcome.iterations} iterations",
        ),
    ]


# ssn_solver


def _reference_solution(pb: DualProblem) -> np.ndarray:
    """A tightly solved dual point, polished by Newton steps with near-exact CG."""
    xi = solve(pb, SolverConfig(delta_tol=1e-13)).xi.values
    point = pb.at(xi)
    for _ in range(3):
        outcome = cg.solve(
            point.newton_operator(),
            -point.gradient,
            pb.ops.inner,
            tol=1e-6 * point.gradient_norm,
        )
        polished = pb.at(point.xi + outcome.x)
        if not polished.gradient_norm < point.gradient_norm:
            break
        point = polished
    return point.xi


def _superlinear_row(pb: DualProblem, xi_bar: np.ndarray) -> dict:
    # q-superlinear rates hold once every cell sits on its final prox piece;
    # with the eta * ||grad||^2 rule each ratio there is at most eta L^2 e_k
    run = solve(
        pb, SolverConfig(inexact_rule=InexactRule.FORCING, eta=0.05, keep_iterates=True)
    )
    final_pieces = pb.scaled.piece_index(pb.at(xi_bar).argument)
    start = len(run.iterates)
    while start > 0 and np.array_equal(
        pb.scaled.piece_index(pb.at(run.iterates[start - 1]).argument), final_pieces
    ):
        start -= 1
    errors = [pb.ops.norm(x - xi_bar) for x in run.iterates[start:]]
    # ratios are only meaningful well above the reference's own accuracy
    errors = [e for e in errors if e > 1e-10]
    ratios = [b / a for a, b in zip(errors, errors[1:])][-3:]
    decreasing = len(ratios) >= 2 and all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
    return _row(
        "ssn_solver",
        "superlinear_tail",
        ratios[-1] if ratios else np.nan,
        ratios[0] if ratios else np.nan,
        decreasing,
        f"settled from k={start}; ratios " + ", ".join(f"{r:.2e}" for r in ratios),
    )


def check_solver(rng: np.random.Generator) -> List[dict]:
    pb = _small_problem(alpha=1e-4)
    ops = pb.ops
    xi_bar = _reference_solution(pb)
    run = solve(pb, SolverConfig(keep_iterates=True))
    trace = run.trace
    rows = []

    excess = max(
        (ops.norm(run.iterates[r.k] - xi_bar) - r.residual for r in trace), default=0.0
    )
    rows.append(_row("ssn_solver", "error_bound", excess, 1e-10, excess <= 1e-10))

    tail = [r.step for r in trace[-3:]]
    rows.append(
        _row(
            "ssn_solver",
            "full_step_tail",
            min(tail, default=1.0),
            1.0,
            run.converged and all(t == 1.0 for t in tail),
            f"steps {tail}",
        )
    )

    rows.append(_superlinear_row(pb, xi_bar))

    c_hat = estimate_sstar_norm(pb) / pb.alpha
    margin = max(
        (r.slope + r.residual**2 / (1 + c_hat) * (1 - 1e-6) for r in trace), default=-1.0
    )
    rows.append(_row("ssn_solver", "descent_bound", margin, 0.0, margin <= 0.0))

    cfg = SolverConfig()
    L_hat = 1.0 + c_hat
    shortfall = 0.0
    for r in trace:
        if r.step < 1.0:
            lower = 0.9 * 2 * cfg.ls_backtrack * (1 - cfg.sigma) * abs(r.slope) / (
                L_hat * r.direction_norm**2
            )
            shortfall = max(shortfall, lower - r.step)
    rows.append(_row("ssn_solver", "step_lower_bound", shortfall, 0.0, shortfall <= 0.0))

    phis = [r.phi for r in trace] + [run.phi_final]
    rises = max((b - a for a, b in zip(phis, phis[1:])), default=0.0)
    rows.append(_row("ssn_solver", "monotone_phi", rises, 0.0, rises <= 0.0))
    worst_slope = max((r.slope for r in trace), default=-1.0)
    rows.append(_row("ssn_solver", "negative_slopes", worst_slope, 0.0, worst_slope < 0.0))
    return rows


CHECKS: List[Callable[[np.random.Generator], List[dict]]] = [
    check_prox_nonexpansive,
    check_prox_oracle,
    check_envelope_gradient,
    check_prox_characterization,
    check_dprox_difference_quotient,
    check_ball_derivative,
    check_adjoint_identity,
    check_refinement_order,
    check_gradient_fd,
    check_strong_monotonicity,
    check_cg,
    check_solver,
]


def run_properties(seed: int = 0) -> pd.DataFrame:
    """Run every check with one seeded generator and collect the rows."""
    rng = np.random.default_rng(seed)
    rows = []
    for check in CHECKS:
        start = time.perf_counter()
        rows.extend(check(rng))
        logger.debug("%s took %.2f s", check.__name__, time.perf_counter() - start)
    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    failed = int((~df["passed"]).sum())
    if failed:
        logger.warning("%d of %d property checks failed", failed, len(df))
    else:
        logger.info("all %d property checks passed", len(df))
    return df
