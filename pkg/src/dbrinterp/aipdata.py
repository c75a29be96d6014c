"""Interpolation data sets ``{S, T, E, N, x}`` and their Gram operator.

For a data set the function ``F^S(z) = (E - S(z) N)(I - zT)^{-1}`` carries
the interpolation conditions, and the Gram matrix ``P`` solves

    P - T^* P T = E^* E - N^* N.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionError, DomainError, UnstableError
from .numlin import (
    DEFAULT_TOL,
    Tolerances,
    as_column,
    as_matrix,
    fro,
    psd_check,
    solve_stein,
    solve_stein_sylvester,
    spectral_radius,
)
from .rational import (
    Realization,
    SchurFunction,
    automorphism_weight,
    compose_disk_automorphism,
    evaluate,
    kernel_KS,
    parallel,
    resolvent,
    scale,
    series,
)

__all__ = [
    "AipDataSet",
    "AdmissibilityReport",
    "Solvability",
    "PositivityResult",
    "obs_gramian",
    "eval_FS",
    "fs_realization",
    "compute_P_oap",
    "stein_residual",
    "check_admissible",
    "solvability",
    "kernel_positivity_test",
    "interp_functional",
    "mobius_transform",
    "mobius_solution",
    "membership_points",
]


def _as_schur(s) -> SchurFunction:
    if isinstance(s, SchurFunction):
        return s
    if isinstance(s, Realization):
        return SchurFunction(s)
    raise TypeError(f"expected SchurFunction or Realization, got {type(s).__name__}")


@dataclass(frozen=True)
class AipDataSet:
    """Data ``{S, T, E, N, x}``; ``S`` maps ``C^p`` to ``C^q`` and ``T`` is ``n x n``.

    ``P_injected`` is set only by constructions that know ``P`` in closed form
    (boundary data, where the Stein equation is singular).
    """

    S: SchurFunction
    T: np.ndarray
    E: np.ndarray
    N: np.ndarray
    x: np.ndarray
    P_injected: Optional[np.ndarray] = field(default=None, compare=False)
    tol: Tolerances = field(default=DEFAULT_TOL, compare=False)

    def __post_init__(self):
        s = _as_schur(self.S)
        t = as_matrix(self.T, name="T")
        n = t.shape[0]
        if t.shape[1] != n:
            raise DimensionError(f"T must be square, got {t.shape}")
        e = as_matrix(self.E, rows=s.q, cols=n, name="E")
        nn = as_matrix(self.N, rows=s.p, cols=n, name="N")
        x = as_column(self.x) if np.size(self.x) else np.zeros((n, 1), dtype=complex)
        if x.shape[0] != n:
            raise DimensionError(f"x has length {x.shape[0]}, expected {n}")
        rho = spectral_radius(t)
        if rho > 1.0 + self.tol.rank_tol:
            raise DomainError(f"spectral radius of T is {rho:.6g} > 1; (I - zT)^(-1) is not analytic on the disk")
        pin = self.P_injected
        if pin is not None:
            pin = as_matrix(pin, n, n, "P")
            pin.setflags(write=False)
        for name, val in (("T", t), ("E", e), ("N", nn), ("x", x)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "P_injected", pin)

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def p(self) -> int:
        return self.S.p

    @property
    def q(self) -> int:
        return self.S.q

    @property
    def rho(self) -> float:
        return spectral_radius(self.T)

    def gram(self) -> np.ndarray:
        """The injected ``P`` if present, otherwise the Stein solution."""
        if self.P_injected is not None:
            return np.array(self.P_injected)
        return compute_P_oap(self)

    def with_x(self, x) -> "AipDataSet":
        return AipDataSet(self.S, self.T, self.E, self.N, x, self.P_injected, self.tol)


def obs_gramian(e, t, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Observability Gramian of the output pair ``(E, T)``: ``sum_k T^*k E^* E T^k``."""
    e = as_matrix(e, name="E")
    t = as_matrix(t, name="T")
    rho = spectral_radius(t)
    if rho >= 1.0:
        raise UnstableError(f"pair (E, T) is not output stable: spectral radius {rho:.6g} >= 1")
    return solve_stein(t, e.conj().T @ e, tol)


def eval_FS(data: AipDataSet, z, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``F^S(z) = (E - S(z) N)(I - zT)^{-1}``."""
    z = complex(z)
    res = resolvent(data.T, z, tol)
    return (data.E - evaluate(data.S.realization, z, tol) @ data.N) @ res


def fs_realization(data: AipDataSet) -> Realization:
    """Realization of ``F^S`` with input space ``C^n``."""
    t = data.T
    obs_e = Realization(t, t, data.E, data.E)
    obs_n = Realization(t, t, data.N, data.N)
    return parallel(obs_e, scale(series(data.S.realization, obs_n), -1.0))


def compute_P_oap(data: AipDataSet, tol: Optional[Tolerances] = None) -> np.ndarray:
    """Gram matrix ``O_{E,T}^* O_{E,T} - O_{N,T}^* O_{N,T}`` from the Stein equation."""
    tol = tol or data.tol
    rho = spectral_radius(data.T)
    if rho >= 1.0:
        raise UnstableError(
            f"spectral radius of T is {rho:.6g}; the Stein equation is singular, supply P in closed form"
        )
    q = data.E.conj().T @ data.E - data.N.conj().T @ data.N
    return solve_stein(data.T, q, tol)


def stein_residual(p, t, e, n) -> float:
    """``||P - T^* P T - (E^* E - N^* N)||_F``."""
    p = as_matrix(p, name="P")
    t = as_matrix(t, name="T")
    e = as_matrix(e, name="E")
    n = as_matrix(n, name="N")
    return fro(p - t.conj().T @ p @ t - (e.conj().T @ e - n.conj().T @ n))


def membership_points() -> np.ndarray:
    """Sixteen deterministic interior points used by the kernel membership test."""
    pts = [0.0]
    for k, r in enumerate((0.35, 0.7, 0.9)):
        pts.extend(r * np.exp(1j * (2 * np.pi * np.arange(5) / 5 + 0.3 * (k + 1))))
    return np.asarray(pts, dtype=complex)


@dataclass(frozen=True)
class AdmissibilityReport:
    P: np.ndarray
    stein_residual: float
    stein_ok: bool
    obs_pairs_ok: bool
    fs_membership_residual: float
    membership_ok: bool
    psd_ok: bool
    min_eig_P: float

    @property
    def admissible(self) -> bool:
        return self.stein_ok and self.obs_pairs_ok and self.membership_ok and self.psd_ok


def _block_kernel_min_eig(data: AipDataSet, p, points, tol, top=None):
    """Smallest eigenvalue (relative to scale) of ``[[top?], [P, F*], [F, K_S]]`` on ``points``."""
    pts = np.asarray(points, dtype=complex).ravel()
    n, q, m = data.n, data.q, pts.size
    fs = [eval_FS(data, z, tol) for z in pts]
    big = np.zeros((n + m * q, n + m * q), dtype=complex)
    big[:n, :n] = p
    for i, zi in enumerate(pts):
        sl_i = slice(n + i * q, n + (i + 1) * q)
        big[sl_i, :n] = fs[i]
        big[:n, sl_i] = fs[i].conj().T
        for j, zj in enumerate(pts):
            big[sl_i, n + j * q:n + (j + 1) * q] = kernel_KS(data.S, zi, zj, tol)
    if top is not None:
        big = np.block([[top[0], top[1]], [top[1].conj().T, big]])
    big = 0.5 * (big + big.conj().T)
    lam = psd_check(big, tol).min_eigenvalue
    return lam / max(1.0, float(np.linalg.norm(big, 2))), big


def check_admissible(
    data: AipDataSet, P_candidate=None, tol: Optional[Tolerances] = None, points=None
) -> AdmissibilityReport:
    """Check the admissibility items for ``data``.

    Without ``P_candidate`` the Gram matrix is recomputed (or taken from the
    data's closed form); with it, the candidate's own Stein residual is reported.
    ``x`` plays no role.
    """
    tol = tol or data.tol
    if P_candidate is not None:
        p = as_matrix(P_candidate, data.n, data.n, "P")
    else:
        p = data.gram()
    q = data.E.conj().T @ data.E - data.N.conj().T @ data.N
    res = stein_residual(p, data.T, data.E, data.N)
    stein_ok = res <= tol.residual_tol * (1.0 + fro(q))
    obs_ok = spectral_radius(data.T) <= 1.0 + tol.rank_tol
    verdict = psd_check(p, tol)
    lam, _ = _block_kernel_min_eig(data, p, membership_points() if points is None else points, tol)
    mem_res = max(0.0, -lam)
    return AdmissibilityReport(
        P=p,
        stein_residual=res,
        stein_ok=bool(stein_ok),
        obs_pairs_ok=bool(obs_ok),
        fs_membership_residual=mem_res,
        membership_ok=bool(mem_res <= tol.psd_tol),
        psd_ok=verdict.is_psd,
        min_eig_P=verdict.min_eigenvalue,
    )


class Solvability(NamedTuple):
    solvable: bool
    margin: float


def solvability(p, x, tol: Tolerances = DEFAULT_TOL) -> Solvability:
    """Solvable iff ``P - x x^*`` is PSD; ``margin`` is its smallest eigenvalue."""
    p = as_matrix(p, name="P")
    x = as_column(x) if np.size(x) else np.zeros((p.shape[0], 1), dtype=complex)
    if x.shape[0] != p.shape[0]:
        raise DimensionError(f"x has length {x.shape[0]}, P is {p.shape}")
    v = psd_check(p - x @ x.conj().T, tol)
    return Solvability(v.is_psd, v.min_eigenvalue)


class PositivityResult(NamedTuple):
    psd: bool
    min_eig: float


def kernel_positivity_test(data: AipDataSet, p, f: Realization, points, tol: Tolerances = DEFAULT_TOL):
    """Positivity of the block kernel ``[[1, x^*, f^*], [x, P, F^*], [f, F, K_S]]`` on ``points``.

    ``f`` is a ``q x 1`` function; the first block row is shared by all points.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    p = as_matrix(p, data.n, data.n, "P")
    fv = np.vstack([evaluate(f, z, tol) for z in pts]) if pts.size else np.zeros((0, 1))
    x = data.x
    # row/column order: [1 | x-part | point blocks]; the Gram of (c, x, y) vectors
    top_left = np.array([[1.0 + 0j]])
    top_right = np.hstack([x.conj().T, fv.conj().T])
    lam, _ = _block_kernel_min_eig(data, p, pts, tol, top=(top_left, top_right))
    return PositivityResult(bool(lam >= -tol.psd_tol), float(lam))


def interp_functional(data: AipDataSet, f: Realization, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``sum_k T^*k E^* f_k`` over the Taylor coefficients ``f_k`` of ``f``.

    Evaluated exactly as ``E^* D_f + T^* Y B_f`` with ``Y - T^* Y A_f = E^* C_f``.
    """
    if f.q != data.q:
        raise DimensionError(f"f has {f.q} outputs, data expects {data.q}")
    if not f.stable:
        raise UnstableError(f"f is not stable (spectral radius {f.rho:.6g})")
    if spectral_radius(data.T) >= 1.0:
        raise UnstableError("interpolation functional needs spectral radius of T below 1")
    th = data.T.conj().T
    out = data.E.conj().T @ f.D
    if f.n:
        y = solve_stein_sylvester(th, f.A, data.E.conj().T @ f.C, tol)
        out = out + th @ y @ f.B
    return out


def mobius_transform(data: AipDataSet, w: complex, tol: Optional[Tolerances] = None) -> AipDataSet:
    """Move the data by the disk automorphism ``psi(z) = (w - z) / (1 - conj(w) z)``.

    ``T`` becomes ``(conj(w) I - T)(I - wT)^{-1}``, ``E`` and ``N`` are multiplied
    by ``sqrt(1 - |w|^2)(I - wT)^{-1}`` and ``S`` becomes ``S o psi``.  Then
    ``F~(z) = c(z) F^S(psi(z))`` with ``c(z) = sqrt(1 - |w|^2) / (1 - conj(w) z)``,
    the Gram matrix and ``x`` are unchanged, and solutions correspond through
    :func:`mobius_solution`.
    """
    tol = tol or data.tol
    w = complex(w)
    if abs(w) >= 1.0:
        raise DomainError(f"w must lie in the open disk, got {w}")
    k = resolvent(data.T, w, tol)
    s = np.sqrt(1.0 - abs(w) ** 2)
    t_new = (w.conjugate() * np.eye(data.n) - data.T) @ k
    s_new = SchurFunction(compose_disk_automorphism(data.S.realization, w, tol))
    return AipDataSet(s_new, t_new, s * data.E @ k, s * data.N @ k, data.x, data.P_injected, tol)


def mobius_solution(f: Realization, w: complex, tol: Tolerances = DEFAULT_TOL) -> Realization:
    """Image ``c(z) f(psi(z))`` of a solution under :func:`mobius_transform`."""
    return series(automorphism_weight(w, f.q), compose_disk_automorphism(f, w, tol))
