"""
Subcommand handlers. Each module exposes run(cfg) -> exit code.
"""

import logging
from pathlib import Path
from typing import Optional

import pandas as pd

from src.results import FLOAT_FORMAT

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DEGRADED = 1
EXIT_CONFIG = 2
EXIT_CHECK_FAILED = 3


def write_frame(df: pd.DataFrame, path: Optional[Path]) -> None:
    """CSV with a header row and every float as %.6e."""
    if path is None:
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %d rows to %s", len(df), path)
