import logging

from src.commands import EXIT_DEGRADED, EXIT_OK
from src.config import RunConfig
from src.problems import build_problem
from src.results import ResultsManager, write_fields
from src.ssn_solver import solve

logger = logging.getLogger(__name__)


def run(cfg: RunConfig) -> int:
    pb = build_problem(cfg.problem, cfg.mode)
    logger.info(
        "solving %s: n=%d alpha=%.2e g=%s mode=%s%s",
        cfg.problem.name.value,
        pb.mesh.n,
        pb.alpha,
        pb.prox.describe(),
        pb.mode.value,
        "" if cfg.solver.globalized else " (unglobalized)",
    )
    report = solve(pb, cfg.solver)

    results = ResultsManager("h")
    results.add_report(report)
    print(results.format_table())
    if cfg.output is not None:
        results.write_csv(cfg.output)
    write_fields(pb, report.xi, cfg.fields)
    return EXIT_OK if report.converged else EXIT_DEGRADED
