"""
Collects solve reports into pandas tables and writes them as CSV.
"""

import logging
from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd

from .dual_objective import DualProblem, Mode
from .prox_ops import FamilyKind, dprox_scalar, prox_scalar
from .ssn_solver import SolveReport

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6e"
COLUMNS = ["it", "cg", "inactive_l1", "phi", "gap", "residual", "stop_reason"]
CONTINUATION_COLUMNS = ["it_total", "cg_total"]
FIELD_COLUMNS = ["x1", "x2", "u", "dprox"]


class ResultsManager:
    """
    One row per solve, in the order the rows were added. key names the
    swept quantity and is the first column ("h" for meshes, "alpha" otherwise).
    """

    def __init__(self, key: str = "h"):
        if key not in ("h", "alpha"):
            raise ValueError(f"key must be 'h' or 'alpha', got {key!r}")
        self.key = key
        self._rows: List[dict] = []
        self._continuation = False

    def __len__(self) -> int:
        return len(self._rows)

    def add_report(self, report: SolveReport) -> None:
        self._rows.append(
            {
                self.key: report.h if self.key == "h" else report.alpha,
                "it": report.iterations,
                "cg": report.cg_total,
                "inactive_l1": report.inactive_l1,
                "phi": report.phi_final,
                "gap": report.gap_final,
                "residual": report.residual_final,
                "stop_reason": report.stop_reason.value,
            }
        )

    def add_reports(self, reports: Iterable[SolveReport]) -> None:
        for report in reports:
            self.add_report(report)

    def add_continuation(self, reports: Iterable[SolveReport]) -> None:
        """Rows of a warm-started schedule with running totals of it and cg."""
        self._continuation = True
        it_total = 0
        cg_total = 0
        for report in reports:
            self.add_report(report)
            it_total += report.iterations
            cg_total += report.cg_total
            self._rows[-1]["it_total"] = it_total
            self._rows[-1]["cg_total"] = cg_total

    def to_frame(self) -> pd.DataFrame:
        columns = [self.key] + COLUMNS
        if self._continuation:
            columns += CONTINUATION_COLUMNS
        return pd.DataFrame(self._rows, columns=columns)

    def write_csv(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info("wrote %d rows to %s", len(self), path)

    def format_table(self) -> str:
        df = self.to_frame()
        if df.empty:
            return "(no results)"
        sci = "{:.2e}".format
        formatters = {
            self.key: sci,
            "inactive_l1": sci,
            "phi": sci,
            "gap": sci,
            "residual": sci,
        }
        return df.to_string(index=False, formatters=formatters)

    @property
    def all_clean(self) -> bool:
        clean = {"ResidualTol", "DualUlp"}
        return all(row["stop_reason"] in clean for row in self._rows)


def cell_fields(pb: DualProblem, xi) -> pd.DataFrame:
    """
    Control and prox derivative at every cell centroid, for plotting the
    control and its active set.
    """
    point = pb.at(xi)
    mesh = pb.mesh
    q = point.argument
    if pb.mode is Mode.VARIATIONAL:
        # P1 value at the centroid is the vertex mean
        q = q[mesh.triangles].mean(axis=1)
    if pb.prox.kind is FamilyKind.L2_BALL:
        u = point.control.values
        nq = point.argument_norm
        dprox = np.full(mesh.num_cells, 1.0 if nq <= pb.prox.gamma else pb.prox.gamma / nq)
    else:
        u = prox_scalar(pb.scaled, q)
        dprox = dprox_scalar(pb.scaled, q)
    centroids = mesh.centroids
    return pd.DataFrame(
        {"x1": centroids[:, 0], "x2": centroids[:, 1], "u": u, "dprox": dprox},
        columns=FIELD_COLUMNS,
    )


def write_fields(pb: DualProblem, xi, path: Optional[Path]) -> None:
    if path is None:
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cell_fields(pb, xi).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote cell fields to %s", path)
