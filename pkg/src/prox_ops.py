"""
Proximal operators, Moreau-Yosida envelopes and generalized derivatives
for the control costs g in scope: zero, box, L1, box+L1 and the L2-ball.

Separable families act pointwise on scalars (or elementwise on arrays) and
are described by a table of affine pieces; the L2-ball acts on whole vectors.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Tuple, Union

import numpy as np

from .errors import ProxFamilyError

ArrayLike = Union[float, np.ndarray]
InnerProduct = Callable[[np.ndarray, np.ndarray], float]


class FamilyKind(str, Enum):
    ZERO = "zero"
    BOX = "box"
    L1 = "l1"
    BOX_L1 = "boxl1"
    L2_BALL = "l2ball"


@dataclass(frozen=True)
class ProxFamily:
    """
    Tagged description of g with its (unscaled) parameters.

    R is the box bound, beta the L1 weight and gamma the ball radius; each
    kind only reads the parameters it needs.
    """

    kind: FamilyKind
    R: float = 0.0
    beta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        kind = FamilyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (FamilyKind.BOX, FamilyKind.BOX_L1) and not self.R > 0:
            raise ProxFamilyError(f"{kind.value}: bound R must be > 0, got {self.R}")
        if kind in (FamilyKind.L1, FamilyKind.BOX_L1) and not self.beta >= 0:
            raise ProxFamilyError(f"{kind.value}: beta must be >= 0, got {self.beta}")
        if kind is FamilyKind.L2_BALL and not self.gamma > 0:
            raise ProxFamilyError(f"l2ball: radius gamma must be > 0, got {self.gamma}")

    @classmethod
    def zero(cls) -> "ProxFamily":
        return cls(FamilyKind.ZERO)

    @classmethod
    def box(cls, R: float) -> "ProxFamily":
        return cls(FamilyKind.BOX, R=R)

    @classmethod
    def l1(cls, beta: float) -> "ProxFamily":
        return cls(FamilyKind.L1, beta=beta)

    @classmethod
    def box_l1(cls, beta: float, R: float) -> "ProxFamily":
        return cls(FamilyKind.BOX_L1, R=R, beta=beta)

    @classmethod
    def l2_ball(cls, gamma: float) -> "ProxFamily":
        return cls(FamilyKind.L2_BALL, gamma=gamma)

    @property
    def separable(self) -> bool:
        return self.kind is not FamilyKind.L2_BALL

    def describe(self) -> str:
        if self.kind is FamilyKind.BOX:
            return f"box(R={self.R:g})"
        if self.kind is FamilyKind.L1:
            return f"l1(beta={self.beta:g})"
        if self.kind is FamilyKind.BOX_L1:
            return f"boxl1(beta={self.beta:g}, R={self.R:g})"
        if self.kind is FamilyKind.L2_BALL:
            return f"l2ball(gamma={self.gamma:g})"
        return "zero"


@dataclass(frozen=True)
class AffinePiece:
    """
    One piece [lo, hi) of a piecewise affine prox.

    On the piece prox(v) = slope*v + offset and (g/alpha)(prox(v)) equals
    g_weight*prox(v).
    """

    lo: float
    hi: float
    slope: float
    offset: float
    g_weight: float = 0.0


@dataclass(frozen=True)
class ScaledProx:
    """prox of g/alpha, with scale = 1/alpha applied at call time."""

    family: ProxFamily
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ProxFamilyError(f"scale must be > 0, got {self.scale}")

    @classmethod
    def for_alpha(cls, family: ProxFamily, alpha: float) -> "ScaledProx":
        return cls(family, 1.0 / alpha)

    @property
    def threshold(self) -> float:
        """Effective L1 threshold beta/alpha."""
        return self.family.beta * self.scale

    def pieces(self) -> Tuple[AffinePiece, ...]:
        """Affine pieces ordered left to right; ties at kinks go right."""
        fam = self.family
        inf = np.inf
        if fam.kind is FamilyKind.ZERO:
            return (AffinePiece(-inf, inf, 1.0, 0.0),)
        if fam.kind is FamilyKind.BOX or (
            fam.kind is FamilyKind.BOX_L1 and fam.beta == 0
        ):
            R = fam.R
            return (
                AffinePiece(-inf, -R, 0.0, -R),
                AffinePiece(-R, R, 1.0, 0.0),
                AffinePiece(R, inf, 0.0, R),
            )
        b = self.threshold
        if fam.kind is FamilyKind.L1:
            return (
                AffinePiece(-inf, -b, 1.0, b, -b),
                AffinePiece(-b, b, 0.0, 0.0, 0.0),
                AffinePiece(b, inf, 1.0, -b, b),
            )
        if fam.kind is FamilyKind.BOX_L1:
            R = fam.R
            return (
                AffinePiece(-inf, -b - R, 0.0, -R, -b),
                AffinePiece(-b - R, -b, 1.0, b, -b),
                AffinePiece(-b, b, 0.0, 0.0, 0.0),
                AffinePiece(b, b + R, 1.0, -b, b),
                AffinePiece(b + R, inf, 0.0, R, b),
            )
        raise ProxFamilyError(
            f"{fam.kind.value} is not separable; use prox_vector instead"
        )

    def breakpoints(self) -> np.ndarray:
        """Interior kink values v_1 < ... < v_m."""
        return np.array([piece.lo for piece in self.pieces()[1:]], dtype=float)

    def piece_index(self, v: ArrayLike) -> np.ndarray:
        return np.searchsorted(self.breakpoints(), v, side="right")

    def _table(self):
        pieces = self.pieces()
        slope = np.array([p.slope for p in pieces])
        offset = np.array([p.offset for p in pieces])
        return slope, offset


def _require_separable(p: ScaledProx):
    if not p.family.separable:
        raise ProxFamilyError(
            f"{p.family.kind.value} is not separable; scalar operations are undefined"
        )


def _as_output(v, out):
    return float(out) if np.ndim(v) == 0 else out


def prox_scalar(p: ScaledProx, v: ArrayLike) -> ArrayLike:
    """Minimizer of 0.5*(x - v)^2 + g(x)/alpha, elementwise."""
    _require_separable(p)
    v = np.asarray(v, dtype=float)
    slope, offset = p._table()
    idx = p.piece_index(v)
    return _as_output(v, slope[idx] * v + offset[idx])


def penalty(p: ScaledProx, x: ArrayLike) -> ArrayLike:
    """(g/alpha)(x) elementwise; +inf outside the box."""
    _require_separable(p)
    x = np.asarray(x, dtype=float)
    fam = p.family
    value = np.zeros_like(x)
    if fam.kind in (FamilyKind.L1, FamilyKind.BOX_L1):
        value = p.threshold * np.abs(x)
    if fam.kind in (FamilyKind.BOX, FamilyKind.BOX_L1):
        value = np.where(np.abs(x) > fam.R, np.inf, value)
    return _as_output(x, value)


def env_scalar(p: ScaledProx, v: ArrayLike) -> ArrayLike:
    """Moreau-Yosida envelope of g/alpha, via env = 0.5*(v - prox)^2 + (g/alpha)(prox)."""
    v = np.asarray(v, dtype=float)
    x = prox_scalar(p, v)
    return _as_output(v, 0.5 * (v - x) ** 2 + penalty(p, x))


def conjugate_scalar(p: ScaledProx, v: ArrayLike) -> ArrayLike:
    """
    0.5*v^2 - env(v), the pointwise conjugate of 0.5*x^2 + (g/alpha)(x).

    Evaluated as v*prox - 0.5*prox^2 - (g/alpha)(prox), which keeps full
    relative accuracy when v is large (small alpha).
    """
    v = np.asarray(v, dtype=float)
    x = prox_scalar(p, v)
    return _as_output(v, v * x - 0.5 * x * x - penalty(p, x))


def dprox_scalar(p: ScaledProx, v: ArrayLike) -> ArrayLike:
    """Slope of the active piece; kinks belong to the piece on their right."""
    _require_separable(p)
    v = np.asarray(v, dtype=float)
    slope, _ = p._table()
    return _as_output(v, slope[p.piece_index(v)])


def _require_ball(family: ProxFamily):
    if family.kind is not FamilyKind.L2_BALL:
        raise ProxFamilyError(
            f"vector prox is only implemented for l2ball, got {family.kind.value}"
        )


def prox_vector(family: ProxFamily, v: np.ndarray, norm_v: float) -> np.ndarray:
    """Projection of v onto the ball of radius gamma (norm_v = ||v||)."""
    _require_ball(family)
    if norm_v < 0:
        raise ProxFamilyError(f"norm_v must be >= 0, got {norm_v}")
    if norm_v <= family.gamma:
        return np.array(v, dtype=float, copy=True)
    return v * (family.gamma / norm_v)


def env_vector(family: ProxFamily, norm_v: float) -> float:
    """Envelope of the ball indicator: half the squared distance to the ball."""
    _require_ball(family)
    return 0.5 * max(0.0, norm_v - family.gamma) ** 2


def conjugate_vector(family: ProxFamily, norm_v: float) -> float:
    _require_ball(family)
    if norm_v <= family.gamma:
        return 0.5 * norm_v**2
    return family.gamma * norm_v - 0.5 * family.gamma**2


def dprox_vector_apply(
    family: ProxFamily, v: np.ndarray, h: np.ndarray, inner: InnerProduct
) -> np.ndarray:
    """
    Generalized derivative of the ball projection at v applied to h:
    h inside the ball, gamma*h/|v| - gamma*v<v,h>/|v|^3 outside.
    """
    _require_ball(family)
    norm_v = float(np.sqrt(inner(v, v)))
    if norm_v <= family.gamma:
        return np.array(h, dtype=float, copy=True)
    gamma = family.gamma
    return gamma * h / norm_v - gamma * v * (inner(v, h) / norm_v**3)


def taylor_remainders(p: ScaledProx, q: np.ndarray, dq: np.ndarray):
    """
    Elementwise first- and second-order remainders of the prox expansion
    from q to q + dq, with the derivative taken at the far end:

        first  = prox(q + dq) - prox(q) - dprox(q + dq) * dq
        second = int_q^{q+dq} (prox(v) - prox(q)) dv - dprox(q + dq) * dq^2 / 2

    The path is split at the kinks and integrated piece by piece, so both
    vanish exactly wherever no kink lies between q and q + dq.
    """
    _require_separable(p)
    q = np.asarray(q, dtype=float)
    dq = np.asarray(dq, dtype=float)
    kinks = p.breakpoints()
    lo = np.minimum(dq, 0.0)[:, None]
    hi = np.maximum(dq, 0.0)[:, None]
    crossed = np.clip(kinks[None, :] - q[:, None], lo, hi)
    crossed = np.where(dq[:, None] >= 0, crossed, crossed[:, ::-1])
    offsets = np.hstack([np.zeros((q.size, 1)), crossed, dq[:, None]])

    lengths = np.diff(offsets, axis=1)
    mids = q[:, None] + 0.5 * (offsets[:, :-1] + offsets[:, 1:])
    slopes = dprox_scalar(p, mids)
    rise = slopes * lengths
    before = np.cumsum(rise, axis=1) - rise
    end_slope = dprox_scalar(p, q + dq)

    first = rise.sum(axis=1) - end_slope * dq
    second = (before * lengths + 0.5 * slopes * lengths**2).sum(axis=1) - 0.5 * end_slope * dq**2
    return first, second
