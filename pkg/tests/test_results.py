import numpy as np
import pandas as pd
import pytest

from src.dual_objective import Mode
from src.fem import GridFunction
from src.problems import build_example1, build_quadratic
from src.prox_ops import ProxFamily
from src.results import COLUMNS, FIELD_COLUMNS, ResultsManager, cell_fields, write_fields
from src.ssn_solver import SolveReport, StopReason


def fake_report(it=3, cg_total=10, alpha=1e-4, h=0.1, stop=StopReason.RESIDUAL_TOL):
    return SolveReport(
        iterations=it,
        cg_total=cg_total,
        phi_final=-1.25,
        gap_final=1e-13,
        residual_final=1e-13,
        inactive_l1=0.5,
        stop_reason=stop,
        trace=(),
        xi=GridFunction.p1(np.zeros(4)),
        alpha=alpha,
        h=h,
    )


def test_key_column_comes_first():
    results = ResultsManager("alpha")
    results.add_report(fake_report())
    df = results.to_frame()
    assert list(df.columns) == ["alpha"] + COLUMNS
    assert df.loc[0, "alpha"] == 1e-4
    assert df.loc[0, "stop_reason"] == "ResidualTol"


def test_unknown_key_rejected():
    with pytest.raises(ValueError):
        ResultsManager("n")


def test_continuation_totals():
    results = ResultsManager("alpha")
    results.add_continuation(
        [fake_report(it=4, cg_total=12), fake_report(it=2, cg_total=5, alpha=1e-5)]
    )
    df = results.to_frame()
    assert list(df["it_total"]) == [4, 6]
    assert list(df["cg_total"]) == [12, 17]
    assert list(df["cg"]) == [12, 5]


def test_csv_uses_scientific_floats(tmp_path):
    results = ResultsManager("h")
    results.add_reports([fake_report(h=0.125), fake_report(h=0.0625)])
    path = tmp_path / "nested" / "table.csv"
    results.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "h,it,cg,inactive_l1,phi,gap,residual,stop_reason"
    assert lines[1] == "1.250000e-01,3,10,5.000000e-01,-1.250000e+00,1.000000e-13,1.000000e-13,ResidualTol"
    assert len(lines) == 3


def test_all_clean():
    results = ResultsManager("h")
    results.add_report(fake_report(stop=StopReason.DUAL_ULP))
    assert results.all_clean
    results.add_report(fake_report(stop=StopReason.MAX_ITER))
    assert not results.all_clean


def test_format_table():
    results = ResultsManager("h")
    assert results.format_table() == "(no results)"
    results.add_report(fake_report())
    table = results.format_table()
    assert "stop_reason" in table
    assert "1.00e-01" in table


@pytest.mark.parametrize("mode", [Mode.P0, Mode.VARIATIONAL])
def test_cell_fields(mode):
    pb = build_example1(4, 1e-3, mode=mode)
    df = cell_fields(pb, pb.initial_guess())
    assert list(df.columns) == FIELD_COLUMNS
    assert len(df) == pb.mesh.num_cells
    assert df["u"].abs().max() <= 1000.0
    assert set(np.unique(df["dprox"])) <= {0.0, 1.0}


def test_cell_fields_for_ball():
    pb = build_example1(4, 1e-2, family=ProxFamily.l2_ball(1e-6))
    df = cell_fields(pb, pb.initial_guess())
    assert df["dprox"].nunique() == 1
    assert 0.0 < df.loc[0, "dprox"] < 1.0


def test_quadratic_fields_are_the_scaled_adjoint():
    pb = build_quadratic(4)
    xi = pb.initial_guess()
    df = cell_fields(pb, xi)
    np.testing.assert_allclose(df["u"], pb.at(xi).argument)
    assert (df["dprox"] == 1.0).all()


def test_write_fields(tmp_path):
    pb = build_quadratic(4)
    write_fields(pb, pb.initial_guess(), None)
    path = tmp_path / "fields.csv"
    write_fields(pb, pb.initial_guess(), path)
    df = pd.read_csv(path)
    assert list(df.columns) == FIELD_COLUMNS
    assert len(df) == pb.mesh.num_cells
