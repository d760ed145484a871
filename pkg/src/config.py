"""
Run configuration: defaults, the flat key=value config file and --set overrides.
"""

import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from io import StringIO
from pathlib import Path
from typing import Callable, Dict, Iterable, Optional, Tuple

from dotenv.parser import parse_stream

from .dual_objective import Mode
from .errors import ConfigError
from .problems import (  # noqa: F401  (re-exported defaults)
    EXAMPLE1_ALPHA,
    EXAMPLE1_BETA,
    EXAMPLE1_R,
    EXAMPLE2_ALPHA,
    EXAMPLE2_R,
    QUADRATIC_ALPHA,
    ProblemName,
    ProblemSpec,
)
from .prox_ops import FamilyKind
from .ssn_solver import InexactRule, SolverConfig

logger = logging.getLogger(__name__)


# Line search and stopping defaults used for every table.
SIGMA = 0.1
BACKTRACK = 0.5
ETA = 1.0
TAU = 1.0
DELTA_TOL = 1e-12
MAX_OUTER = 200
MAX_BACKTRACKS = 60

# Sweep defaults.
DEFAULT_N = 32
MESH_SWEEP_NS = (32, 64, 128)
ALPHA_SWEEP_ALPHAS = (1e-4, 1e-5, 1e-6, 1e-7)
CONTINUATION_ALPHAS = (1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
CHECK_TS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
CHECK_DIRECTIONS = 5
CHECK_FD_STEP = 1e-7
CHECK_FD_TOL = 1e-6

# Meshes finer than this need --large.
DESK_SCALE_MAX_N = 128

THREADS_ENV = "DUALPROX_THREADS"
LOG_LEVEL_ENV = "DUALPROX_LOG_LEVEL"


class RunKind(str, Enum):
    SOLVE = "solve"
    SWEEP_MESH = "sweep-mesh"
    SWEEP_ALPHA = "sweep-alpha"
    CONTINUATION = "continuation"
    CHECK_GRADIENT = "check-gradient"
    CHECK_SEMISMOOTH = "check-semismooth"
    PROPERTIES = "properties"


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation. kind selects exactly one of the run protocols."""

    kind: RunKind
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    mode: Mode = Mode.P0
    solver: SolverConfig = field(default_factory=SolverConfig)
    ns: Tuple[int, ...] = MESH_SWEEP_NS
    alphas: Tuple[float, ...] = ALPHA_SWEEP_ALPHAS
    output: Optional[Path] = None
    fields: Optional[Path] = None
    seed: int = 0
    threads: int = 1
    large: bool = False

    def mesh_sizes(self) -> Tuple[int, ...]:
        if self.kind is RunKind.SWEEP_MESH:
            return self.ns
        return (self.problem.n,)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_list(item: Callable[[str], object]) -> Callable[[str], tuple]:
    def parse(text: str) -> tuple:
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("expected a comma-separated list")
        return tuple(item(p) for p in parts)

    return parse


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    return float(text.strip())


# Documented keys and how their text is read.
KEYS: Dict[str, Callable[[str], object]] = {
    "problem": ProblemName,
    "n": _parse_int,
    "alpha": _parse_float,
    "beta": _parse_float,
    "R": _parse_float,
    "gamma": _parse_float,
    "family": FamilyKind,
    "mode": Mode,
    "sigma": _parse_float,
    "backtrack": _parse_float,
    "eta": _parse_float,
    "tau": _parse_float,
    "delta_tol": _parse_float,
    "inexact_rule": InexactRule,
    "globalized": _parse_bool,
    "alphas": _parse_list(_parse_float),
    "ns": _parse_list(_parse_int),
    "output": Path,
    "max_outer": _parse_int,
    "max_backtracks": _parse_int,
    "seed": _parse_int,
}


def _convert(key: str, raw: Optional[str], line: Optional[int], source: str):
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line, source)
    if raw is None or raw.strip() == "":
        raise ConfigError(f"missing value for {key!r}", line, source)
    try:
        return KEYS[key](raw.strip())
    except ValueError as e:
        raise ConfigError(f"bad value for {key!r}: {e}", line, source) from None


def read_config_file(path: Path) -> Dict[str, object]:
    """Parse a flat key=value file. Blank lines and # comments are skipped."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}", source=str(path)) from None
    return parse_config_text(text, source=str(path))


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, object]:
    values: Dict[str, object] = {}
    for binding in parse_stream(StringIO(text)):
        # a binding's original text starts with any blank lines before it
        raw = binding.original.string
        line = binding.original.line + raw[: len(raw) - len(raw.lstrip())].count("\n")
        if binding.error:
            raise ConfigError(
                f"cannot parse {binding.original.string.strip()!r}", line, source
            )
        if binding.key is None:
            continue
        values[binding.key] = _convert(binding.key, binding.value, line, source)
    return values


def parse_overrides(pairs: Iterable[str]) -> Dict[str, object]:
    """Read repeated --set key=value arguments."""
    values: Dict[str, object] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {pair!r}", source="--set")
        values[key.strip()] = _convert(key.strip(), raw, None, "--set")
    return values


def threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {threads}")
    return threads


def _default_alphas(kind: RunKind) -> Tuple[float, ...]:
    if kind is RunKind.CONTINUATION:
        return CONTINUATION_ALPHAS
    return ALPHA_SWEEP_ALPHAS


def build_run_config(
    kind: RunKind,
    values: Dict[str, object],
    output: Optional[Path] = None,
    fields: Optional[Path] = None,
    large: bool = False,
    threads: int = 1,
) -> RunConfig:
    """Turn merged key values into a validated RunConfig."""
    kind = RunKind(kind)
    try:
        problem = ProblemSpec(
            name=values.get("problem", ProblemName.EXAMPLE1),
            n=values.get("n", DEFAULT_N),
            alpha=values.get("alpha"),
            beta=values.get("beta"),
            R=values.get("R"),
            gamma=values.get("gamma", 1.0),
            family=values.get("family"),
        )
        solver = SolverConfig(
            sigma=values.get("sigma", SIGMA),
            ls_backtrack=values.get("backtrack", BACKTRACK),
            eta=values.get("eta", ETA),
            tau=values.get("tau", TAU),
            delta_tol=values.get("delta_tol", DELTA_TOL),
            max_outer=values.get("max_outer", MAX_OUTER),
            max_backtracks=values.get("max_backtracks", MAX_BACKTRACKS),
            inexact_rule=values.get("inexact_rule", InexactRule.CAPPED),
            globalized=values.get("globalized", True),
        )
        family = problem.prox_family()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    mode = Mode(values.get("mode", Mode.P0))
    if mode is Mode.VARIATIONAL and not family.separable:
        raise ConfigError(f"family {family.kind.value} is not available in variational mode")

    cfg = RunConfig(
        kind=kind,
        problem=problem,
        mode=mode,
        solver=solver,
        ns=values.get("ns", MESH_SWEEP_NS),
        alphas=values.get("alphas", _default_alphas(kind)),
        output=output if output is not None else values.get("output"),
        fields=fields,
        seed=values.get("seed", 0),
        threads=threads,
        large=large,
    )
    if any(n < 2 for n in cfg.mesh_sizes()):
        raise ConfigError("mesh sizes must be >= 2")
    if any(not a > 0 for a in cfg.alphas):
        raise ConfigError("every alpha must be > 0")
    finest = max(cfg.mesh_sizes())
    if finest > DESK_SCALE_MAX_N:
        if not large:
            raise ConfigError(
                f"n={finest} is above desk scale ({DESK_SCALE_MAX_N}); pass --large to run it"
            )
        logger.warning("running n=%d, expect long runtimes and high memory use", finest)
    return cfg


def load_run_config(
    kind: RunKind,
    config_path: Optional[Path] = None,
    overrides: Iterable[str] = (),
    mode: Optional[str] = None,
    unglobalized: bool = False,
    output: Optional[Path] = None,
    fields: Optional[Path] = None,
    large: bool = False,
) -> RunConfig:
    """Defaults, then the config file, then --set overrides, then dedicated flags."""
    values: Dict[str, object] = {}
    if config_path is not None:
        values.update(read_config_file(config_path))
    values.update(parse_overrides(overrides))
    if mode is not None:
        values["mode"] = _convert("mode", mode, None, "--mode")
    if unglobalized:
        values["globalized"] = False
    cfg = build_run_config(
        kind, values, output=output, fields=fields, large=large, threads=threads_from_env()
    )
    logger.debug("run config: %s", cfg)
    return cfg
