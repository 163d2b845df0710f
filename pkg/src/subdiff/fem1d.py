"""Uniform 1D linear finite elements with homogeneous Dirichlet boundary.

Mass/stiffness assembly, L2 and Ritz projections, tridiagonal solves and
the discrete L2 norm. Loads use 3-point Gauss quadrature per cell for
smooth integrands and exact overlap integrals for interval indicators.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import get_backend

# Gauss-Legendre, 3 points on [-1, 1]
_GX = np.array([-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)])
_GW = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    n_cells: int

    def __post_init__(self):
        if not self.a < self.b:
            raise MeshError(f"empty interval ({self.a}, {self.b})")
        if self.n_cells < 2:
            raise MeshError("mesh needs at least 2 cells for an interior node")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def n_interior(self) -> int:
        return self.n_cells - 1

    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_cells + 1)

    def interior_nodes(self) -> np.ndarray:
        return self.nodes()[1:-1]


@dataclass(frozen=True)
class TriDiag:
    """Symmetric-structure tridiagonal matrix stored by diagonals."""

    sub: np.ndarray = field(repr=False)
    main: np.ndarray = field(repr=False)
    sup: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = self.main.shape[0]
        if self.sub.shape[0] != max(m - 1, 0) or self.sup.shape[0] != max(m - 1, 0):
            raise ValueError("off-diagonal lengths must be m-1")
        for arr in (self.sub, self.main, self.sup):
            arr.flags.writeable = False

    @property
    def size(self) -> int:
        return self.main.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return get_backend().tridiag_matvec(self.sub, self.main, self.sup, x)

    def dense(self) -> np.ndarray:
        m = self.size
        out = np.diag(self.main)
        if m > 1:
            out += np.diag(self.sub, -1) + np.diag(self.sup, 1)
        return out


def assemble_mass(mesh: Mesh1D) -> TriDiag:
    m = mesh.n_interior
    h = mesh.h
    return TriDiag(np.full(m - 1, h / 6.0), np.full(m, 2.0 * h / 3.0),
                   np.full(m - 1, h / 6.0))


def assemble_stiffness(mesh: Mesh1D) -> TriDiag:
    m = mesh.n_interior
    h = mesh.h
    return TriDiag(np.full(m - 1, -1.0 / h), np.full(m, 2.0 / h),
                   np.full(m - 1, -1.0 / h))


def thomas_solve(T: TriDiag, rhs: np.ndarray) -> np.ndarray:
    if rhs.shape[0] != T.size:
        raise ValueError("rhs length does not match system size")
    be = get_backend()
    cp, dinv = be.thomas_factor(T.sub, T.main, T.sup)
    return be.thomas_solve_factored(T.sub, cp, dinv, rhs)


def load_vector(mesh: Mesh1D, f) -> np.ndarray:
    """Pairings (f, phi_i) for all interior hat functions, 3-point Gauss per
    cell (exact for the polynomial degrees the projections produce)."""
    n = mesh.n_cells
    h = mesh.h
    x_left = mesh.a + h * np.arange(n)
    # quadrature points per cell, shape (n, 3)
    xq = x_left[:, None] + (0.5 * (_GX + 1.0) * h)[None, :]
    fq = np.asarray(f(xq), dtype=float)
    if fq.shape != xq.shape:
        fq = np.broadcast_to(fq, xq.shape)
    if not np.all(np.isfinite(fq)):
        raise ValueError("non-finite integrand in load quadrature")
    lam = 0.5 * (_GX + 1.0)  # local coordinate in [0, 1]
    w_right = (_GW * lam) * (h / 2.0)
    w_left = (_GW * (1.0 - lam)) * (h / 2.0)
    contrib_left = fq @ w_left    # weight on node j of cell j
    contrib_right = fq @ w_right  # weight on node j+1 of cell j
    b = np.zeros(mesh.n_interior)
    b += contrib_right[:-1]
    b += contrib_left[1:]
    return b


@dataclass(frozen=True)
class Indicator:
    """Characteristic function of (lo, hi), integrated exactly against hats."""

    lo: float
    hi: float


def _hat_antiderivative(mesh: Mesh1D, x: np.ndarray) -> np.ndarray:
    """F_i(x) = integral of hat_i from x_{i-1} to x, for all interior i;
    returns shape (n_interior, len(x))."""
    h = mesh.h
    xi = mesh.interior_nodes()[:, None]
    t = np.asarray(x, dtype=float)[None, :] - xi
    rise = 0.5 * (t + h) ** 2 / h
    fall = 0.5 * h + t - 0.5 * t * t / h
    out = np.where(t <= -h, 0.0, np.where(t <= 0.0, rise, np.where(t <= h, fall, h)))
    return out


def indicator_load(mesh: Mesh1D, ind: Indicator) -> np.ndarray:
    lo = max(ind.lo, mesh.a)
    hi = min(ind.hi, mesh.b)
    if hi <= lo:
        return np.zeros(mesh.n_interior)
    ends = _hat_antiderivative(mesh, np.array([lo, hi]))
    return ends[:, 1] - ends[:, 0]


def l2_project(mesh: Mesh1D, v) -> np.ndarray:
    """Coefficients of the L2 projection: M c = (v, phi_i)."""
    if isinstance(v, Indicator):
        b = indicator_load(mesh, v)
    else:
        b = load_vector(mesh, v)
    return thomas_solve(assemble_mass(mesh), b)


def ritz_project(mesh: Mesh1D, v, laplacian=None) -> np.ndarray:
    """Coefficients of the Ritz projection, assembled through the Laplacian:
    A c = -(lap v, phi_i). The Laplacian descriptor is required."""
    if laplacian is None:
        raise ValueError("ritz_project requires the Laplacian of v")
    b = -load_vector(mesh, laplacian)
    return thomas_solve(assemble_stiffness(mesh), b)


def discrete_l2_norm(mesh: Mesh1D, coeffs: np.ndarray) -> float:
    if coeffs.shape[0] != mesh.n_interior:
        raise ValueError("coefficient length does not match interior nodes")
    M = assemble_mass(mesh)
    return float(np.sqrt(coeffs @ M.matvec(np.ascontiguousarray(coeffs))))
