from pathlib import Path

import pytest

from src.config import (
    ALPHA_SWEEP_ALPHAS,
    CONTINUATION_ALPHAS,
    DEFAULT_N,
    THREADS_ENV,
    RunKind,
    build_run_config,
    load_run_config,
    parse_config_text,
    parse_overrides,
    read_config_file,
    threads_from_env,
)
from src.dual_objective import Mode
from src.errors import ConfigError
from src.problems import ProblemName
from src.prox_ops import FamilyKind
from src.ssn_solver import InexactRule


@pytest.fixture(autouse=True)
def no_thread_env(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)


def test_parse_config_text():
    text = """
# Example 2 on a coarse mesh
problem=example2
n=16

alphas=1e-3, 1e-4
globalized=false
inexact_rule=forcing
output=out/table.csv
"""
    values = parse_config_text(text)
    assert values == {
        "problem": ProblemName.EXAMPLE2,
        "n": 16,
        "alphas": (1e-3, 1e-4),
        "globalized": False,
        "inexact_rule": InexactRule.FORCING,
        "output": Path("out/table.csv"),
    }


@pytest.mark.parametrize(
    "text,line",
    [
        ("n=8\nfoo=1\n", 2),
        ("n=8\n\n\nalpha=abc\n", 4),
        ("# comment\nmode=quadratic\n", 2),
        ("problem=example1\nsigma\n", 2),
        ("this is not valid\n", 1),
    ],
)
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, source="run.cfg")
    assert info.value.line == line
    assert str(info.value).startswith(f"run.cfg:{line}: ")


def test_read_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("problem=quadratic\nn=4\n")
    assert read_config_file(path) == {"problem": ProblemName.QUADRATIC, "n": 4}


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "absent.cfg")


def test_parse_overrides():
    assert parse_overrides(["n=8", "family = box"]) == {"n": 8, "family": FamilyKind.BOX}
    with pytest.raises(ConfigError):
        parse_overrides(["n"])
    with pytest.raises(ConfigError):
        parse_overrides(["nope=1"])


def test_threads_from_env(monkeypatch):
    assert threads_from_env() == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert threads_from_env() == 4
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        threads_from_env()
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        threads_from_env()


def test_defaults():
    cfg = build_run_config(RunKind.SOLVE, {})
    assert cfg.problem.name is ProblemName.EXAMPLE1
    assert cfg.problem.n == DEFAULT_N
    assert cfg.mode is Mode.P0
    assert cfg.solver.sigma == 0.1
    assert cfg.solver.globalized
    assert cfg.alphas == ALPHA_SWEEP_ALPHAS
    assert build_run_config(RunKind.CONTINUATION, {}).alphas == CONTINUATION_ALPHAS


def test_mesh_sizes_depend_on_kind():
    values = {"n": 8, "ns": (4, 8)}
    assert build_run_config(RunKind.SWEEP_MESH, values).mesh_sizes() == (4, 8)
    assert build_run_config(RunKind.SOLVE, values).mesh_sizes() == (8,)


def test_desk_scale_limit():
    with pytest.raises(ConfigError):
        build_run_config(RunKind.SOLVE, {"n": 256})
    assert build_run_config(RunKind.SOLVE, {"n": 256}, large=True).large
    with pytest.raises(ConfigError):
        build_run_config(RunKind.SWEEP_MESH, {"ns": (32, 256)})


@pytest.mark.parametrize(
    "values",
    [
        {"family": FamilyKind.L2_BALL, "mode": Mode.VARIATIONAL},
        {"n": 1},
        {"alphas": (1e-3, 0.0)},
        {"sigma": 0.9},
        {"alpha": -1.0},
        {"family": FamilyKind.BOX, "R": 0.0},
    ],
)
def test_invalid_values_become_config_errors(values):
    with pytest.raises(ConfigError):
        build_run_config(RunKind.SOLVE, values)


def test_load_run_config_precedence(tmp_path, monkeypatch):
    path = tmp_path / "run.cfg"
    path.write_text("problem=example2\nn=16\nmode=variational\n")
    monkeypatch.setenv(THREADS_ENV, "2")
    cfg = load_run_config(
        RunKind.SOLVE,
        config_path=path,
        overrides=["n=8"],
        mode="p0",
        unglobalized=True,
        output=tmp_path / "out.csv",
    )
    assert cfg.problem.name is ProblemName.EXAMPLE2
    assert cfg.problem.n == 8
    assert cfg.mode is Mode.P0
    assert not cfg.solver.globalized
    assert cfg.output == tmp_path / "out.csv"
    assert cfg.threads == 2


def test_bad_mode_flag():
    with pytest.raises(ConfigError):
        load_run_config(RunKind.SOLVE, mode="p2")
