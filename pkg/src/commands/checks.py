"""
check-gradient and check-semismooth: finite-difference and Taylor-remainder
checks of the dual objective at a random point of the configured problem.
"""

import logging

import numpy as np
import pandas as pd

from src.commands import EXIT_CHECK_FAILED, EXIT_OK, write_frame
from src.config import (
    CHECK_DIRECTIONS,
    CHECK_FD_STEP,
    CHECK_FD_TOL,
    CHECK_TS,
    RunConfig,
)
from src.dual_objective import (
    DualProblem,
    check_gradient,
    random_direction,
    semismooth_taylor_check,
)
from src.problems import build_problem
from src.prox_ops import FamilyKind

logger = logging.getLogger(__name__)

# Zero family: the expansion is exact up to round-off
EXACT_TOL = 1e-10
# allowed growth between consecutive t
NOISE = 1.1
FLOOR = 1e-14


def _check_point(pb: DualProblem, rng: np.random.Generator) -> np.ndarray:
    return pb.initial_guess().values + random_direction(pb, rng)


def gradient_report(cfg: RunConfig) -> pd.DataFrame:
    pb = build_problem(cfg.problem, cfg.mode)
    rng = np.random.default_rng(cfg.seed)
    xi = _check_point(pb, rng)
    directions = [random_direction(pb, rng) for _ in range(CHECK_DIRECTIONS)]
    df = check_gradient(pb, xi, directions, t=CHECK_FD_STEP)
    df["passed"] = df["relative_error"] <= CHECK_FD_TOL
    return df


def _monotone(values: pd.Series) -> bool:
    v = values.to_numpy()
    return bool(np.all(v[1:] <= NOISE * v[:-1] + FLOOR))


def semismooth_report(cfg: RunConfig) -> pd.DataFrame:
    pb = build_problem(cfg.problem, cfg.mode)
    rng = np.random.default_rng(cfg.seed)
    xi = _check_point(pb, rng)
    h = random_direction(pb, rng)
    df = semismooth_taylor_check(pb, xi, h, CHECK_TS)
    if pb.prox.kind is FamilyKind.ZERO:
        df["passed"] = (df["r1"] <= EXACT_TOL) & (df["r2"] <= EXACT_TOL)
    else:
        ok = _monotone(df["r1"]) and _monotone(df["r2"])
        df["passed"] = ok
    return df


def _finish(df: pd.DataFrame, cfg: RunConfig, what: str) -> int:
    print(df.to_string(index=False))
    write_frame(df, cfg.output)
    if df["passed"].all():
        logger.info("%s check passed", what)
        return EXIT_OK
    logger.error("%s check failed", what)
    return EXIT_CHECK_FAILED


def run_gradient(cfg: RunConfig) -> int:
    return _finish(gradient_report(cfg), cfg, "gradient")


def run_semismooth(cfg: RunConfig) -> int:
    return _finish(semismooth_report(cfg), cfg, "semismoothness")
