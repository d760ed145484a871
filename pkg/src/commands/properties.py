import logging

from src.commands import EXIT_CHECK_FAILED, EXIT_OK, write_frame
from src.config import RunConfig
from src.properties import run_properties

logger = logging.getLogger(__name__)


def run(cfg: RunConfig) -> int:
    df = run_properties(cfg.seed)
    print(df.to_string(index=False))
    write_frame(df, cfg.output)
    failed = df[~df["passed"]]
    for _, row in failed.iterrows():
        logger.error(
            "%s/%s failed: %.3e vs %.3e %s",
            row["module"],
            row["check"],
            row["value"],
            row["bound"],
            row["detail"],
        )
    return EXIT_OK if failed.empty else EXIT_CHECK_FAILED
