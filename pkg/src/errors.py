"""
Exception types shared across the dualprox package
"""

from typing import Optional


class DualProxError(Exception):
    """Base class for every error raised by the package."""


class ProxFamilyError(DualProxError, ValueError):
    """An operation is not defined for the requested family of g."""


class MeshError(DualProxError, ValueError):
    """Invalid mesh parameters or data that does not live on the mesh."""


class NotPositiveDefiniteError(DualProxError, ArithmeticError):
    """CG met a direction with <Ap, p> <= 0."""

    def __init__(self, curvature: float, iteration: int):
        super().__init__(
            f"operator is not positive definite: <Ap,p> = {curvature:.3e} "
            f"at CG iteration {iteration}"
        )
        self.curvature = curvature
        self.iteration = iteration


class ConfigError(DualProxError, ValueError):
    """Bad run configuration, optionally tied to a line of the config file."""

    def __init__(self, message: str, line: Optional[int] = None, source: str = ""):
        prefix = f"{source}:{line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
        self.source = source
