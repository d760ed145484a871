"""
P1/P0 finite elements on a uniform triangulation of the unit square.

States and dual quantities are continuous piecewise linear (P1) functions,
stored as one value per mesh node with zeros on the boundary; controls are
piecewise constant (P0), one value per triangle. The solution operator S of
-Laplace(y) = u with homogeneous Dirichlet conditions and its adjoint are
applied through a cached sparse LU factorization of the stiffness matrix.
"""

import logging
import time
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import sparse as sp
from scipy.sparse.linalg import splu

from .errors import MeshError, ProxFamilyError
from .prox_ops import ScaledProx, prox_scalar

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Uniform right-triangle mesh with n cells per side.

    Node (i, j) sits at (i/n, j/n) and has index j*(n+1) + i. Every square is
    split along its south-west/north-east diagonal into two counterclockwise
    triangles.
    """

    n: int
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_mask: np.ndarray

    @property
    def h(self) -> float:
        return np.sqrt(2.0) / self.n

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_cells(self) -> int:
        return self.triangles.shape[0]

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self) -> np.ndarray:
        return np.abs(self.signed_areas)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)


def build_mesh(n: int) -> Mesh:
    if int(n) != n or n < 2:
        raise MeshError(f"mesh needs n >= 2 cells per side, got {n}")
    n = int(n)
    ticks = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    a = (j * (n + 1) + i).ravel()
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    triangles = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])

    boundary_mask = (
        (nodes[:, 0] == 0.0)
        | (nodes[:, 0] == 1.0)
        | (nodes[:, 1] == 0.0)
        | (nodes[:, 1] == 1.0)
    )
    return Mesh(n=n, nodes=nodes, triangles=triangles, boundary_mask=boundary_mask)


class Space(str, Enum):
    P1 = "p1"
    P0 = "p0"
    P1_PROX = "p1prox"


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    A finite-element function.

    P1_PROX holds a P1 argument q_h together with the prox it is pushed
    through; it represents the control prox(q_h) of the variational
    discretization, which lives in no finite-element space.
    """

    space: Space
    values: np.ndarray
    prox: Optional[ScaledProx] = None

    def pointwise(self) -> np.ndarray:
        """Nodal (P1, P1_PROX) or cell (P0) values of the represented function."""
        if self.space is Space.P1_PROX:
            return prox_scalar(self.prox, self.values)
        return self.values

    @classmethod
    def p1(cls, values) -> "GridFunction":
        return cls(Space.P1, np.asarray(values, dtype=float))

    @classmethod
    def p0(cls, values) -> "GridFunction":
        return cls(Space.P0, np.asarray(values, dtype=float))


def _values(f, space: Space, size: int) -> np.ndarray:
    if isinstance(f, GridFunction):
        if f.space is not space:
            raise MeshError(f"expected a {space.value} function, got {f.space.value}")
        f = f.values
    f = np.asarray(f, dtype=float)
    if f.shape != (size,):
        raise MeshError(f"{space.value} function needs shape ({size},), got {f.shape}")
    return f


def _element_matrices(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]
    area = mesh.areas
    # gradients of the barycentric coordinates, one row per local vertex
    grads = np.empty((mesh.num_cells, 3, 2))
    for k in range(3):
        nxt, prv = p[:, (k + 1) % 3], p[:, (k + 2) % 3]
        grads[:, k, 0] = nxt[:, 1] - prv[:, 1]
        grads[:, k, 1] = prv[:, 0] - nxt[:, 0]
    grads /= (2.0 * mesh.signed_areas)[:, None, None]
    Ke = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    Me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    return Ke, Me


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    N = mesh.num_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(N, N)).tocsr()


@dataclass
class DiscreteOperators:
    """
    Assembled matrices realizing S, S* and the Y inner product.

    K is the stiffness matrix on interior nodes, M the full P1 mass matrix,
    B the P1 x P0 mixed mass matrix and cell_areas the diagonal of the P0
    mass matrix A0.
    """

    mesh: Mesh
    K: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix
    cell_areas: np.ndarray
    factorization: object

    @property
    def A0(self) -> sp.dia_matrix:
        return sp.diags(self.cell_areas)

    def solve_stiffness(self, rhs: np.ndarray) -> np.ndarray:
        """y with K y = rhs on interior nodes and y = 0 on the boundary."""
        y = np.zeros(self.mesh.num_nodes)
        y[self.mesh.interior] = self.factorization.solve(rhs[self.mesh.interior])
        return y

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """L2 inner product of two P1 functions."""
        return float(a @ (self.M @ b))

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(a, a), 0.0)))

    def inner_p0(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(self.cell_areas * a * b))

    def cell_mean(self, w: np.ndarray) -> np.ndarray:
        """L2 projection of a P1 function onto P0."""
        return w[self.mesh.triangles].mean(axis=1)


def assemble(mesh: Mesh) -> DiscreteOperators:
    start = time.perf_counter()
    Ke, Me = _element_matrices(mesh)
    K_full = _scatter(mesh, Ke)
    M = _scatter(mesh, Me)

    cells = np.arange(mesh.num_cells)
    B = sp.coo_matrix(
        (
            np.repeat(mesh.areas / 3.0, 3),
            (mesh.triangles.ravel(), np.repeat(cells, 3)),
        ),
        shape=(mesh.num_nodes, mesh.num_cells),
    ).tocsr()

    interior = mesh.interior
    K = K_full[interior][:, interior].tocsc()
    factorization = splu(K)
    logger.debug(
        "assembled n=%d (%d interior dofs, %d cells) in %.3f s",
        mesh.n,
        interior.size,
        mesh.num_cells,
        time.perf_counter() - start,
    )
    return DiscreteOperators(
        mesh=mesh,
        K=K.tocsr(),
        M=M,
        B=B,
        cell_areas=mesh.areas.copy(),
        factorization=factorization,
    )


def apply_S(ops: DiscreteOperators, u) -> GridFunction:
    """State y = S u of a P0 control."""
    u = _values(u, Space.P0, ops.mesh.num_cells)
    return GridFunction.p1(ops.solve_stiffness(ops.B @ u))


def apply_Sstar_p1(ops: DiscreteOperators, xi) -> GridFunction:
    """Adjoint state w with K w = M xi, kept as a P1 function."""
    xi = _values(xi, Space.P1, ops.mesh.num_nodes)
    return GridFunction.p1(ops.solve_stiffness(ops.M @ xi))


def apply_Sstar(ops: DiscreteOperators, xi) -> GridFunction:
    """Discrete adjoint of apply_S in the (M, A0) inner products."""
    w = apply_Sstar_p1(ops, xi).values
    return GridFunction.p0(ops.cell_mean(w))


def interpolate(mesh: Mesh, fn, zero_boundary: bool = True) -> GridFunction:
    """Nodal interpolant of fn(x1, x2)."""
    values = np.asarray(fn(mesh.nodes[:, 0], mesh.nodes[:, 1]), dtype=float)
    values = np.broadcast_to(values, (mesh.num_nodes,)).copy()
    if zero_boundary:
        values[mesh.boundary_mask] = 0.0
    return GridFunction.p1(values)


def sample_midpoints(mesh: Mesh, fn) -> GridFunction:
    """P0 function with the value of fn(x1, x2) at each triangle's centroid."""
    c = mesh.centroids
    values = np.asarray(fn(c[:, 0], c[:, 1]), dtype=float)
    return GridFunction.p0(np.broadcast_to(values, (mesh.num_cells,)).copy())


def prolongate(coarse: Mesh, y: np.ndarray, fine: Mesh) -> np.ndarray:
    """Exact P1 injection of a coarse function into the uniformly refined mesh."""
    if fine.n != 2 * coarse.n:
        raise MeshError(f"fine mesh must have n = {2 * coarse.n}, got {fine.n}")
    nc = coarse.n + 1
    Y = y.reshape(nc, nc)  # Y[j, i] is the value at (i/n, j/n)
    F = np.zeros((2 * coarse.n + 1, 2 * coarse.n + 1))
    F[::2, ::2] = Y
    F[::2, 1::2] = 0.5 * (Y[:, :-1] + Y[:, 1:])
    F[1::2, ::2] = 0.5 * (Y[:-1, :] + Y[1:, :])
    # square centres lie on the south-west/north-east diagonal
    F[1::2, 1::2] = 0.5 * (Y[:-1, :-1] + Y[1:, 1:])
    return F.ravel()


class KinkQuadrature:
    """
    Exact integration over the pieces {v_k <= q_h < v_{k+1}} of every triangle.

    q_h is a P1 function and v_k the kinks of a piecewise affine prox. On a
    triangle, the sub-level set {q_h <= c} is empty, the whole triangle, a
    corner triangle at the lowest vertex, or the whole triangle minus a corner
    triangle at the highest vertex. Each piece is therefore a signed sum of
    sub-triangles, and products of two affine functions are integrated
    exactly with the edge-midpoint rule on them.

    Sub-triangles are stored by their vertices in barycentric coordinates of
    the parent cell.
    """

    def __init__(self, mesh: Mesh, q: np.ndarray, prox: ScaledProx):
        if not prox.family.separable:
            raise ProxFamilyError(
                "variational discretization needs a separable piecewise affine prox"
            )
        self.mesh = mesh
        self.prox = prox
        self.pieces = prox.pieces()
        qv = q[mesh.triangles]

        cells, lam, signed_ratio, piece = [], [], [], []
        for k, pc in enumerate(self.pieces):
            for c_idx, c_lam, c_sign in self._piece_parts(qv, pc.lo, pc.hi):
                cells.append(c_idx)
                lam.append(c_lam)
                signed_ratio.append(c_sign)
                piece.append(np.full(c_idx.size, k))
        self.cell = np.concatenate(cells)
        self.lam = np.concatenate(lam) if lam else np.zeros((0, 3, 3))
        self.area = np.concatenate(signed_ratio) * mesh.areas[self.cell]
        self.piece = np.concatenate(piece)

        l0, l1, l2 = self.lam[:, 0], self.lam[:, 1], self.lam[:, 2]
        self.lam_mid = np.stack([0.5 * (l0 + l1), 0.5 * (l1 + l2), 0.5 * (l2 + l0)], axis=1)
        self.q_mid = np.einsum("mpk,mk->mp", self.lam_mid, qv[self.cell])
        self._slope = np.array([pc.slope for pc in self.pieces])[self.piece]
        self._offset = np.array([pc.offset for pc in self.pieces])[self.piece]
        self._g_weight = np.array([pc.g_weight for pc in self.pieces])[self.piece]

    def _piece_parts(self, qv: np.ndarray, lo: float, hi: float):
        q_min, q_max = qv.min(axis=1), qv.max(axis=1)
        inside = (q_min >= lo) & (q_max < hi)
        outside = (q_max < lo) | (q_min >= hi)
        straddle = np.flatnonzero(~inside & ~outside)

        whole = np.flatnonzero(inside)
        parts = [(whole, np.broadcast_to(np.eye(3), (whole.size, 3, 3)), np.ones(whole.size))]
        if straddle.size:
            for idx, lam, sign in _sublevel_triangles(qv[straddle], hi):
                parts.append((straddle[idx], lam, sign))
            for idx, lam, sign in _sublevel_triangles(qv[straddle], lo):
                parts.append((straddle[idx], lam, -sign))
        return parts

    # values: (m, 3) samples at the three edge midpoints of every sub-triangle
    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.area[:, None] / 3.0 * values))

    def load(self, values: np.ndarray) -> np.ndarray:
        """Vector of integrals of values * phi_i over every node i."""
        local = np.einsum("m,mp,mpk->mk", self.area / 3.0, values, self.lam_mid)
        nodes = self.mesh.triangles[self.cell]
        return np.bincount(
            nodes.ravel(), weights=local.ravel(), minlength=self.mesh.num_nodes
        )

    def weighted_mass(self) -> sp.csr_matrix:
        """Mass matrix restricted to the pieces, weighted by the prox slope."""
        w = self.area / 3.0 * self._slope
        local = np.einsum("m,mpi,mpj->mij", w, self.lam_mid, self.lam_mid)
        nodes = self.mesh.triangles[self.cell]
        rows = np.repeat(nodes, 3, axis=1).ravel()
        cols = np.tile(nodes, (1, 3)).ravel()
        N = self.mesh.num_nodes
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(N, N)).tocsr()

    def measure(self) -> float:
        """Integral of the prox slope over the domain."""
        return float(np.sum(self.area * self._slope))

    def prox_values(self) -> np.ndarray:
        return self._slope[:, None] * self.q_mid + self._offset[:, None]

    def conjugate_values(self) -> np.ndarray:
        p = self.prox_values()
        return self.q_mid * p - 0.5 * p * p - self._g_weight[:, None] * p

    def envelope_values(self) -> np.ndarray:
        p = self.prox_values()
        return 0.5 * (self.q_mid - p) ** 2 + self._g_weight[:, None] * p

    def penalty_values(self) -> np.ndarray:
        """(g/alpha)(prox(q)) on each piece."""
        return self._g_weight[:, None] * self.prox_values()


def _sublevel_triangles(qv: np.ndarray, c: float):
    """Signed sub-triangles whose sum is {q <= c} on each cell of qv."""
    if c == -np.inf:
        return []
    order = np.argsort(qv, axis=1, kind="stable")
    qs = np.take_along_axis(qv, order, axis=1)
    E = np.eye(3)[order]  # E[t, r] = barycentric vertex with the r-th smallest q
    q0, q1, q2 = qs[:, 0], qs[:, 1], qs[:, 2]
    parts = []

    whole = np.flatnonzero((c >= q2) | ((q1 < c) & (c < q2)))
    parts.append((whole, np.broadcast_to(np.eye(3), (whole.size, 3, 3)), np.ones(whole.size)))

    low = np.flatnonzero((q0 < c) & (c <= q1))
    if low.size:
        s1 = (c - q0[low]) / (q1[low] - q0[low])
        s2 = (c - q0[low]) / (q2[low] - q0[low])
        e0, e1, e2 = E[low, 0], E[low, 1], E[low, 2]
        lam = np.stack([e0, e0 + s1[:, None] * (e1 - e0), e0 + s2[:, None] * (e2 - e0)], axis=1)
        parts.append((low, lam, s1 * s2))

    high = np.flatnonzero((q1 < c) & (c < q2))
    if high.size:
        t0 = (q2[high] - c) / (q2[high] - q0[high])
        t1 = (q2[high] - c) / (q2[high] - q1[high])
        e0, e1, e2 = E[high, 0], E[high, 1], E[high, 2]
        lam = np.stack([e2, e2 + t0[:, None] * (e0 - e2), e2 + t1[:, None] * (e1 - e2)], axis=1)
        parts.append((high, lam, -(t0 * t1)))
    return parts


def apply_S_prox_variational(ops: DiscreteOperators, q, p: ScaledProx) -> GridFunction:
    """S applied to prox(q_h) for a P1 function q_h, with kink-exact load vector."""
    q = _values(q, Space.P1, ops.mesh.num_nodes)
    quad = KinkQuadrature(ops.mesh, q, p)
    return GridFunction.p1(ops.solve_stiffness(quad.load(quad.prox_values())))
