"""
Mesh and alpha sweeps. Entries are independent solves and may run on
DUALPROX_THREADS worker threads; rows always come out in sweep order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from src.commands import EXIT_DEGRADED, EXIT_OK
from src.config import RunConfig
from src.problems import build_problem
from src.results import ResultsManager
from src.ssn_solver import SolveReport, solve

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _map_in_order(
    fn: Callable[[T], SolveReport], items: Sequence[T], threads: int
) -> List[SolveReport]:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


def _finish(results: ResultsManager, cfg: RunConfig) -> int:
    print(results.format_table())
    if cfg.output is not None:
        results.write_csv(cfg.output)
    return EXIT_OK if results.all_clean else EXIT_DEGRADED


def mesh_reports(cfg: RunConfig) -> List[SolveReport]:
    def solve_one(n: int) -> SolveReport:
        logger.info("mesh sweep: n=%d", n)
        return solve(build_problem(cfg.problem, cfg.mode, n=n), cfg.solver)

    return _map_in_order(solve_one, list(cfg.ns), cfg.threads)


def alpha_reports(cfg: RunConfig) -> List[SolveReport]:
    # every solve assembles its own operators; a SuperLU factorization is
    # never shared between worker threads
    def solve_one(alpha: float) -> SolveReport:
        logger.info("alpha sweep: alpha=%.2e", alpha)
        return solve(build_problem(cfg.problem, cfg.mode, alpha=alpha), cfg.solver)

    return _map_in_order(solve_one, list(cfg.alphas), cfg.threads)


def run_mesh(cfg: RunConfig) -> int:
    results = ResultsManager("h")
    results.add_reports(mesh_reports(cfg))
    return _finish(results, cfg)


def run_alpha(cfg: RunConfig) -> int:
    results = ResultsManager("alpha")
    results.add_reports(alpha_reports(cfg))
    return _finish(results, cfg)
