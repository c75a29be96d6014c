"""Scalar boundary interpolation in ``H(K_s)`` for a finite Blaschke product ``s``.

Conditions prescribe the boundary Taylor coefficients ``f_j(t_i)``,
``j = 0..n_i``, at distinct unimodular points ``t_i``.  They are the
values ``<f, K_{t_i,j}>`` against the boundary kernels

    K_{t,j}(z) = z^j / (1 - z conj(t))^{j+1}
                 - s(z) sum_{l<=j} z^{j-l} conj(s_l) / (1 - z conj(t))^{j+1-l},

where ``s_l`` are the boundary Taylor coefficients of ``s`` at ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
from scipy.linalg import block_diag

from .aipdata import AipDataSet, solvability, stein_residual
from .errors import DimensionError, DomainError, InconsistencyError, RecoveryError, UnsolvableError
from .numlin import DEFAULT_TOL, Tolerances, fro, pinv
from .rational import Realization, SchurFunction, blaschke, evaluate, resolvent
from .redheffer import build_colligation, recover_parameter
from .solve import SolutionFamily, aip_solve, pointwise_parameter

__all__ = [
    "BoundaryDataSet",
    "boundary_taylor",
    "taylor_at",
    "boundary_kernel",
    "build_boundary_data",
    "psi_matrix",
    "compute_P_boundary",
    "kernel_vectors",
    "kernel_gram",
    "radial_limits",
    "BoundarySolution",
    "solve_boundary",
]


@dataclass(frozen=True)
class BoundaryDataSet:
    """Finite Blaschke product (zeros, phase), nodes ``t_i = exp(i angle_i)``,
    orders ``n_i`` and targets ``f_{i,0..n_i}``."""

    zeros: tuple
    phase: complex
    angles: tuple
    orders: tuple
    targets: tuple

    def __post_init__(self):
        zeros = tuple(complex(a) for a in np.atleast_1d(np.asarray(self.zeros, dtype=complex)))
        angles = tuple(float(a) for a in np.atleast_1d(np.asarray(self.angles, dtype=float)))
        orders = tuple(int(n) for n in np.atleast_1d(self.orders))
        if len(angles) != len(orders):
            raise DimensionError(f"{len(angles)} nodes but {len(orders)} orders")
        if any(n < 0 for n in orders):
            raise DomainError("orders must be nonnegative")
        if len(self.targets) != len(angles):
            raise DimensionError(f"{len(angles)} nodes but {len(self.targets)} target lists")
        targets = []
        for n, f in zip(orders, self.targets):
            f = tuple(complex(v) for v in np.atleast_1d(np.asarray(f, dtype=complex)))
            if len(f) != n + 1:
                raise DimensionError(f"order {n} needs {n + 1} targets, got {len(f)}")
            targets.append(f)
        ts = np.exp(1j * np.asarray(angles))
        for i in range(len(ts)):
            for j in range(i):
                if abs(ts[i] - ts[j]) <= 1e-12:
                    raise DomainError(f"boundary nodes {i} and {j} coincide")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "phase", complex(self.phase))
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "targets", tuple(targets))

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.angles, dtype=float))

    @property
    def size(self) -> int:
        return sum(n + 1 for n in self.orders)

    def inner(self, tol: Tolerances = DEFAULT_TOL) -> SchurFunction:
        return blaschke(self.zeros, self.phase, tol)

    def x(self) -> np.ndarray:
        return np.concatenate([np.asarray(f, dtype=complex) for f in self.targets]).reshape(-1, 1)


def _real(s) -> Realization:
    return s.realization if isinstance(s, SchurFunction) else s


def taylor_at(s, z0, m: int, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Taylor coefficients ``s_0..s_m`` of a realization at the point ``z0``.

    ``s_0 = s(z0)`` and ``s_j = C (R A)^{j-1} R^2 B`` with ``R = (I - z0 A)^{-1}``.
    """
    r = _real(s)
    z0 = complex(z0)
    res = resolvent(r.A, z0, tol)
    out = np.zeros(m + 1, dtype=complex)
    out[0] = (r.D + z0 * r.C @ res @ r.B)[0, 0]
    v = res @ res @ r.B
    ra = res @ r.A
    for j in range(1, m + 1):
        out[j] = (r.C @ v)[0, 0]
        v = ra @ v
    return out


def boundary_taylor(s, t, m: int, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Boundary Taylor coefficients ``s_j(t)``, ``j = 0..m``, of a rational ``s`` analytic at ``t``."""
    return taylor_at(s, t, m, tol)


def boundary_kernel(s, t0, j: int, z, s_coeffs=None, tol: Tolerances = DEFAULT_TOL) -> complex:
    """Value of the boundary kernel ``K_{t0,j}`` at ``z``."""
    z, t0 = complex(z), complex(t0)
    sj = boundary_taylor(s, t0, j, tol) if s_coeffs is None else np.asarray(s_coeffs, dtype=complex)
    w = 1.0 - z * t0.conjugate()
    sz = evaluate(_real(s), z, tol)[0, 0]
    tail = sum(z ** (j - l) * np.conj(sj[l]) / w ** (j + 1 - l) for l in range(j + 1))
    return complex(z ** j / w ** (j + 1) - sz * tail)


def build_boundary_data(bd: BoundaryDataSet, tol: Tolerances = DEFAULT_TOL):
    """``(T, E, N, x)``: ``T_i = conj(t_i) I + J``, ``E_i = e_1^T``, ``N_i = conj(s_{i,0..n_i})``, ``x_i = f_{i,.}``."""
    s = bd.inner(tol)
    ts, es, ns = [], [], []
    for t, n in zip(bd.nodes, bd.orders):
        sj = boundary_taylor(s, t, n, tol)
        ts.append(np.conj(t) * np.eye(n + 1) + np.eye(n + 1, k=1))
        e = np.zeros((1, n + 1), dtype=complex)
        e[0, 0] = 1.0
        es.append(e)
        ns.append(np.conj(sj)[None, :])
    return block_diag(*ts).astype(complex), np.hstack(es), np.hstack(ns), bd.x()


def psi_matrix(n: int, t: complex) -> np.ndarray:
    """Upper triangular ``Psi_{jl} = (-1)^l C(l, j) t^{l+j+1}``, ``0 <= j <= l <= n``."""
    t = complex(t)
    m = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n + 1):
        for l in range(j, n + 1):
            m[j, l] = (-1) ** l * comb(l, j) * t ** (l + j + 1)
    return m


def _toeplitz_conj(sj, n):
    m = np.zeros((n + 1, n + 1), dtype=complex)
    for r in range(n + 1):
        for c in range(r, n + 1):
            m[r, c] = np.conj(sj[c - r])
    return m


def _h_block(si, sj, ti, tj, ni, nj, same):
    h = np.zeros((ni + 1, nj + 1), dtype=complex)
    if same:
        for r in range(ni + 1):
            for m in range(nj + 1):
                h[r, m] = si[r + m + 1]
        return h
    d = ti - tj
    for r in range(ni + 1):
        for m in range(nj + 1):
            a = sum((-1) ** (r - l) * comb(m + r - l, m) * si[l] / d ** (m + r - l + 1) for l in range(r + 1))
            b = sum((-1) ** r * comb(m + r - l, r) * sj[l] / d ** (m + r - l + 1) for l in range(m + 1))
            h[r, m] = a - b
    return h


def compute_P_boundary(bd: BoundaryDataSet, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Gram matrix from boundary Taylor data of ``s`` to order ``2 n_i + 1``.

    ``P_ij = H_ij Psi_{n_j}(t_j) Ups_j`` with ``H_ii`` the Hankel matrix
    ``[s_{i, r+m+1}]`` and ``Ups_j`` upper triangular Toeplitz in ``conj(s_j)``.
    Entry ``(a, b)`` equals ``<K_b, K_a>``.  Raises :class:`DomainError` if the
    result is not Hermitian.
    """
    s = bd.inner(tol)
    ts = bd.nodes
    coeffs = [boundary_taylor(s, t, 2 * n + 1, tol) for t, n in zip(ts, bd.orders)]
    k = len(ts)
    rows = []
    for i in range(k):
        row = []
        for j in range(k):
            ni, nj = bd.orders[i], bd.orders[j]
            h = _h_block(coeffs[i], coeffs[j], ts[i], ts[j], ni, nj, i == j)
            row.append(h @ psi_matrix(nj, ts[j]) @ _toeplitz_conj(coeffs[j], nj))
        rows.append(row)
    p = np.block(rows) if k else np.zeros((0, 0), dtype=complex)
    herm = fro(p - p.conj().T)
    if herm > tol.residual_tol * (1.0 + fro(p)):
        raise DomainError(f"boundary Gram matrix is not Hermitian (residual {herm:.3e}); check the data")
    return 0.5 * (p + p.conj().T)


def kernel_vectors(bd: BoundaryDataSet, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Columns ``v`` with ``K_{t,j}(z) = C (I - zA)^{-1} v`` for the unitary realization of ``s``.

    ``v_{t,j} = (A^*)^j (I - conj(t) A^*)^{-(j+1)} C^*``; no cancellation occurs.
    """
    r = bd.inner(tol).realization
    ah = r.A.conj().T
    cols = []
    for t, n in zip(bd.nodes, bd.orders):
        res = resolvent(ah, np.conj(t), tol)
        v = res @ r.C.conj().T
        for _ in range(n + 1):
            cols.append(v)
            v = ah @ res @ v
    return np.hstack(cols) if cols else np.zeros((r.n, 0), dtype=complex)


def kernel_gram(bd: BoundaryDataSet, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Gram matrix ``[<K_b, K_a>]`` of the boundary kernels from their realizations."""
    v = kernel_vectors(bd, tol)
    return v.conj().T @ v


def radial_limits(f: Realization, t, m: int, levels=range(4, 13), tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Boundary coefficients ``f_j(t)``, ``j = 0..m``, by Richardson extrapolation
    of ``f^(j)(r t)/j!`` along ``r = 1 - 2^-k``."""
    levels = list(levels)
    h = np.array([2.0 ** (-k) for k in levels])
    vals = np.array([taylor_at(f, (1.0 - hk) * complex(t), m, tol) for hk in h])
    # Neville extrapolation to h = 0, column by column
    out = np.zeros(m + 1, dtype=complex)
    for j in range(m + 1):
        p = list(vals[:, j])
        for lev in range(1, len(h)):
            for i in range(len(h) - lev):
                p[i] = (h[i] * p[i + 1] - h[i + lev] * p[i]) / (h[i] - h[i + lev])
        out[j] = p[0]
    return out


@dataclass(frozen=True)
class BoundarySolution:
    family: SolutionFamily
    f_min: Realization
    P: np.ndarray
    data: AipDataSet
    stein_residual: float
    margin: float
    radial: tuple
    max_radial_error: float
    recovery_residual: Optional[float]
    extras: dict = field(default_factory=dict)


def solve_boundary(bd: BoundaryDataSet, tol: Tolerances = DEFAULT_TOL, verify_radial: bool = True) -> BoundarySolution:
    """Solve the boundary problem through the closed-form Gram matrix and the colligation."""
    s = bd.inner(tol)
    t, e, n, x = build_boundary_data(bd, tol)
    p = compute_P_boundary(bd, tol)
    data = AipDataSet(s, t, e, n, x, P_injected=p, tol=tol)
    q = e.conj().T @ e - n.conj().T @ n
    res = stein_residual(p, t, e, n)
    if res > tol.residual_tol * (1.0 + fro(q)):
        raise InconsistencyError(f"boundary Gram matrix violates the Stein identity: residual {res:.3e}", residual=res)
    sol = solvability(p, x, tol)
    if not sol.solvable:
        raise UnsolvableError(f"boundary problem has no solution in the unit ball: margin {sol.margin:.6g}", margin=sol.margin)
    col = build_colligation(p, t, e, n, tol)
    param = pointwise_parameter(col, s.realization, tol)
    fam = aip_solve(data, col, param, tol=tol)

    r = s.realization
    c = kernel_vectors(bd, tol) @ pinv(p, tol) @ x
    f_min = Realization(r.A, r.A @ c, r.C, r.C @ c)

    try:
        rec = recover_parameter(col, s.realization, [0.05 + 0.1j, -0.3 + 0.2j, 0.4j], tol)
        rec_res = float(rec.residuals.max())
    except RecoveryError as exc:
        rec_res = exc.residual

    radial, worst = [], 0.0
    if verify_radial:
        for i, (node, order) in enumerate(zip(bd.nodes, bd.orders)):
            lim = radial_limits(f_min, node, order, tol=tol)
            for j in range(order + 1):
                err = abs(lim[j] - bd.targets[i][j])
                worst = max(worst, err)
                radial.append((i, j, bd.targets[i][j], complex(lim[j]), float(err)))
    return BoundarySolution(fam, f_min, p, data, res, sol.margin, tuple(radial), worst, rec_res)
