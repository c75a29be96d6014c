"""Operator-argument interpolation and the explicit Hardy-space solver.

The left-tangential condition on ``f`` reads ``sum_k T^*k E^* f_k = x``.
Nevanlinna-Pick and Caratheodory-Fejer problems are special choices of
``(E, T)``; see :func:`np_data` and :func:`cf_data`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .aipdata import AipDataSet, obs_gramian, solvability
from .errors import DimensionError, DomainError, PreconditionError, UnsolvableError, UnstableError
from .numlin import (
    DEFAULT_TOL,
    Tolerances,
    as_column,
    as_matrix,
    psd_check,
    solve_stein_sylvester,
    spectral_radius,
    sqrt_psd,
    unitary_completion,
)
from .rational import Realization, SchurFunction, certify_schur, evaluate, resolvent

__all__ = [
    "build_N",
    "oap_to_aip",
    "H2Solution",
    "h2_solve",
    "inner_kernel_residual",
    "np_data",
    "cf_data",
]


def build_N(s, e, t, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``N = sum_j S_j^* E T^j`` over the Taylor coefficients ``S_j`` of ``S``.

    With ``S = (A, B, C, D)`` this is ``D^* E + B^* Z T`` where
    ``Z - A^* Z T = C^* E``.
    """
    r = s.realization if isinstance(s, SchurFunction) else s
    e = as_matrix(e, rows=r.q, name="E")
    t = as_matrix(t, rows=e.shape[1], cols=e.shape[1], name="T")
    rho_t = spectral_radius(t)
    if rho_t >= 1.0:
        raise UnstableError(f"spectral radius of T is {rho_t:.6g} >= 1")
    if r.rho * rho_t >= 1.0:
        raise UnstableError(f"series for N diverges: rho(A_S) * rho(T) = {r.rho * rho_t:.6g}")
    n = r.D.conj().T @ e
    if r.n:
        z = solve_stein_sylvester(r.A.conj().T, t, r.C.conj().T @ e, tol)
        n = n + r.B.conj().T @ z @ t
    return n


def oap_to_aip(s, e, t, x, tol: Tolerances = DEFAULT_TOL) -> AipDataSet:
    """Data set ``{S, T, E, N, x}`` with ``N`` from :func:`build_N`."""
    sf = s if isinstance(s, SchurFunction) else SchurFunction(s)
    return AipDataSet(sf, t, e, build_N(sf, e, t, tol), x, tol=tol)


@dataclass(frozen=True)
class H2Solution:
    """Minimal-norm Hardy-space solution ``f_min`` and the inner function ``B``.

    Every solution of norm at most one is ``f_min + B h`` with
    ``||h||_{H^2} <= budget``.
    """

    f_min: Realization
    B: SchurFunction
    budget: float
    P: np.ndarray
    margin: float
    norm_sq: float


def h2_solve(e, t, x, tol: Tolerances = DEFAULT_TOL) -> H2Solution:
    """Solve the left-tangential problem in the unit ball of ``H^2``."""
    e = as_matrix(e, name="E")
    t = as_matrix(t, rows=e.shape[1], cols=e.shape[1], name="T")
    x = as_column(x)
    n = t.shape[0]
    p = obs_gramian(e, t, tol)
    verdict = psd_check(p, tol)
    if n and verdict.min_eigenvalue < tol.psd_tol:
        raise PreconditionError(
            f"Gram matrix is singular (min eigenvalue {verdict.min_eigenvalue:.3e}); degenerate H2 instance"
        )
    sol = solvability(p, x, tol)
    if not sol.solvable:
        raise UnsolvableError(f"no solution in the unit ball: margin {sol.margin:.6g}", margin=sol.margin)
    y = np.linalg.solve(p, x)
    norm_sq = float(np.real(x.conj().T @ y)[0, 0]) if n else 0.0
    f_min = Realization(t, t @ y, e, e @ y)

    r = sqrt_psd(p, tol)
    r_inv = np.linalg.inv(r) if n else r
    a = r @ t @ r_inv
    c1 = e @ r_inv
    u = unitary_completion(np.vstack([a, c1]), tol)
    b2, d12 = u[:n, n:], u[n:, n:]
    b = certify_schur(Realization(a, b2, c1, d12), tol=tol)
    return H2Solution(f_min, b, float(np.sqrt(max(0.0, 1.0 - norm_sq))), p, sol.margin, norm_sq)


def inner_kernel_residual(sol: H2Solution, e, t, z, zeta, tol: Tolerances = DEFAULT_TOL) -> float:
    """Residual of ``(I - B(z)B(zeta)^*)/(1 - z conj(zeta)) = E(I-zT)^{-1} P^{-1} (I-zeta T)^{-*} E^*``."""
    e = as_matrix(e, name="E")
    t = as_matrix(t, name="T")
    z, zeta = complex(z), complex(zeta)
    bz, bw = evaluate(sol.B.realization, z, tol), evaluate(sol.B.realization, zeta, tol)
    lhs = (np.eye(e.shape[0]) - bz @ bw.conj().T) / (1.0 - z * zeta.conjugate())
    fz = e @ resolvent(t, z, tol)
    fw = e @ resolvent(t, zeta, tol)
    rhs = fz @ np.linalg.solve(sol.P, fw.conj().T)
    return float(np.linalg.norm(lhs - rhs))


def _check_nodes(nodes):
    w = np.atleast_1d(np.asarray(nodes, dtype=complex))
    if np.any(np.abs(w) >= 1.0):
        raise DomainError("interpolation nodes must lie in the open unit disk")
    for i in range(w.size):
        for j in range(i):
            if abs(w[i] - w[j]) <= 1e-14 * max(1.0, abs(w[i])):
                raise DomainError(f"repeated node {w[i]}; use the Caratheodory-Fejer form")
    return w


def np_data(nodes, targets, directions: Optional[np.ndarray] = None):
    """``(E, T, x)`` for the conditions ``u_i^* f(w_i) = x_i``.

    ``directions`` holds the vectors ``u_i`` as columns (``q x k``); without it
    the problem is scalar and ``E`` is a row of ones.
    """
    w = _check_nodes(nodes)
    x = as_column(targets)
    if x.shape[0] != w.size:
        raise DimensionError(f"{w.size} nodes but {x.shape[0]} targets")
    e = np.ones((1, w.size), dtype=complex) if directions is None else as_matrix(directions, cols=w.size, name="directions")
    return e, np.diag(w.conj()), x


def cf_data(point, coeffs):
    """``(E, T, x)`` for the conditions ``f^(j)(w)/j! = c_j``, ``j = 0..m-1``.

    ``T = conj(w) I + J`` with ``J`` the upper shift and ``E = e_1^T``.
    """
    w = complex(point)
    if abs(w) >= 1.0:
        raise DomainError("the point must lie in the open unit disk")
    x = as_column(coeffs)
    m = x.shape[0]
    t = w.conjugate() * np.eye(m, dtype=complex) + np.eye(m, k=1, dtype=complex)
    e = np.zeros((1, m), dtype=complex)
    e[0, 0] = 1.0
    return e, t, x
