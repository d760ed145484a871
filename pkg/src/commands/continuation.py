import logging

from src.commands import EXIT_DEGRADED, EXIT_OK
from src.config import RunConfig
from src.problems import build_problem
from src.results import ResultsManager
from src.ssn_solver import continuation_solve

logger = logging.getLogger(__name__)


def run(cfg: RunConfig) -> int:
    alphas = sorted(set(cfg.alphas), reverse=True)
    if alphas != list(cfg.alphas):
        logger.warning("continuation schedule reordered to strictly descending alpha")
    pb = build_problem(cfg.problem, cfg.mode, alpha=alphas[0])
    reports = continuation_solve(pb, alphas, cfg.solver)

    results = ResultsManager("alpha")
    results.add_continuation(reports)
    print(results.format_table())
    if cfg.output is not None:
        results.write_csv(cfg.output)
    return EXIT_OK if results.all_clean else EXIT_DEGRADED
