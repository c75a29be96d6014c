"""Solution sets: Douglas factorization, the invertible-Gram route and the
Redheffer parametrization ``f = Gamma x~ + G h``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .aipdata import AipDataSet, eval_FS, fs_realization, solvability
from .errors import (
    BudgetExceededError,
    DomainError,
    PreconditionError,
    RecoveryError,
    RouteUnavailableError,
    UnsolvableError,
)
from .numlin import DEFAULT_TOL, Tolerances, as_column, as_matrix, fro, pinv, psd_check
from .rational import (
    Realization,
    SchurFunction,
    certify_schur,
    constant,
    h2_norm,
    kernel_KS,
    mul_const,
    parallel,
    series,
)
from .redheffer import (
    RedhefferColligation,
    build_colligation,
    closed_loop,
    compute_G_Gamma,
    param_value,
    recover_parameter,
)

__all__ = [
    "DouglasParametrization",
    "douglas_factors",
    "douglas_solve",
    "InverseRouteResult",
    "solve_inverse_route",
    "pointwise_parameter",
    "x_tilde",
    "SolutionFamily",
    "aip_solve",
    "classify_uniqueness",
    "solve_problem",
    "UNIQUE_BY_BUDGET",
    "UNIQUE_BY_DENSE_RANGE",
    "NON_UNIQUE",
]

UNIQUE_BY_BUDGET = "unique_by_budget"
UNIQUE_BY_DENSE_RANGE = "unique_by_dense_range"
NON_UNIQUE = "non_unique"


@dataclass(frozen=True)
class DouglasParametrization:
    """Factors of ``A X = B`` over contractions ``X``.

    ``H X1 = B`` and ``H X2 = A`` with ``H = (AA^*)^{1/2}`` restricted to
    ``Ran A`` (orthonormal basis ``Q``).  All solutions are
    ``X = X2^* X1 + D2 K D1`` with ``D2 = (I - X2^* X2)^{1/2}``,
    ``D1 = (I - X1^* X1)^{1/2}`` and ``K`` a contraction.
    """

    X1: np.ndarray
    X2: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    Q: np.ndarray
    margin: float

    @property
    def unique(self) -> bool:
        return self.D1.size == 0 or self.D2.size == 0 or fro(self.D1) == 0.0 or fro(self.D2) == 0.0


def douglas_factors(a, b, tol: Tolerances = DEFAULT_TOL) -> DouglasParametrization:
    a = as_matrix(a, name="A")
    b = as_matrix(b, rows=a.shape[0], name="B")
    gap = a @ a.conj().T - b @ b.conj().T
    verdict = psd_check(gap, tol)
    if not verdict.is_psd:
        raise UnsolvableError(
            f"AA^* - BB^* is not PSD (min eigenvalue {verdict.min_eigenvalue:.3e}); no contractive solution",
            margin=verdict.min_eigenvalue,
        )
    # A = U s V^*: H = U s U^*, so on Ran A the factors are s^-1 U^* B and V^*
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    r = int(np.count_nonzero(s > tol.rank_tol * s[0])) if s.size and s[0] > 0 else 0
    q = u[:, :r]
    x1 = (q.conj().T @ b) / s[:r, None]
    x2 = vh[:r]
    k, l = a.shape[1], b.shape[1]
    d1 = _defect(x1, l, tol)
    d2 = _defect(x2, k, tol)
    return DouglasParametrization(x1, x2, d1, d2, q, verdict.min_eigenvalue)


def _defect(x, dim, tol):
    g = np.eye(dim) - x.conj().T @ x
    g = 0.5 * (g + g.conj().T)
    lam, v = np.linalg.eigh(g) if dim else (np.zeros(0), np.zeros((0, 0)))
    lam = np.clip(lam, 0.0, None)
    lam[lam <= tol.rank_tol] = 0.0
    return (v * np.sqrt(lam)) @ v.conj().T


def douglas_solve(a, b, k=None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """A contractive solution of ``A X = B``; ``K = None`` gives the minimal-norm one."""
    f = douglas_factors(a, b, tol)
    x = f.X2.conj().T @ f.X1
    if k is not None:
        k = as_matrix(k, rows=f.D2.shape[0], cols=f.D1.shape[0], name="K")
        nk = float(np.linalg.norm(k, 2)) if k.size else 0.0
        if nk > 1.0 + tol.psd_tol:
            raise DomainError(f"parameter K is not a contraction (norm {nk:.6g})")
        x = x + f.D2 @ k @ f.D1
    return x


@dataclass(frozen=True)
class InverseRouteResult:
    f_min: Realization
    budget: float
    Pinv_x: np.ndarray
    ktilde: Callable
    unique_by_budget: bool


def solve_inverse_route(data: AipDataSet, P=None, tol: Optional[Tolerances] = None) -> InverseRouteResult:
    """All solutions ``F^S P^{-1} x + h`` when ``P`` is positive definite.

    ``h`` ranges over the space with kernel ``K_S - F^S P^{-1} F^{S*}`` with
    norm at most ``budget = sqrt(1 - x^* P^{-1} x)``.
    """
    tol = tol or data.tol
    p = data.gram() if P is None else as_matrix(P, data.n, data.n, "P")
    verdict = psd_check(p, tol)
    if data.n and verdict.min_eigenvalue < tol.psd_tol:
        raise RouteUnavailableError(
            f"P is not positive definite (min eigenvalue {verdict.min_eigenvalue:.3e}); use the Redheffer route"
        )
    sol = solvability(p, data.x, tol)
    if not sol.solvable:
        raise UnsolvableError(f"P - xx^* is not PSD: margin {sol.margin:.6g}", margin=sol.margin)
    y = np.linalg.solve(p, data.x) if data.n else data.x
    norm_sq = float(np.real(data.x.conj().T @ y)[0, 0]) if data.n else 0.0
    f_min = mul_const(fs_realization(data), right=y)

    def ktilde(z, zeta):
        fz = eval_FS(data, z, tol)
        fw = eval_FS(data, zeta, tol)
        return kernel_KS(data.S, z, zeta, tol) - fz @ np.linalg.solve(p, fw.conj().T)

    budget = float(np.sqrt(max(0.0, 1.0 - norm_sq)))
    return InverseRouteResult(f_min, budget, y, ktilde, bool(abs(1.0 - norm_sq) <= tol.psd_tol))


def pointwise_parameter(col: RedhefferColligation, s, tol: Tolerances = DEFAULT_TOL, max_residual: float = 1e-7):
    """Callable ``z -> E(z)`` with ``S = R_Sigma[E]``, recovered one point at a time."""

    def f(z):
        return recover_parameter(col, s, [z], tol, max_residual=max_residual, unique=False).values[0]

    return f


def x_tilde(col: RedhefferColligation, x, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Coordinates in ``X0`` of the vector ``x~`` with ``P^{1/2} x~ = x``."""
    x = as_column(x)
    q0, r0 = col.X0_basis, col.R0
    if q0.shape[1] == 0:
        xt = np.zeros((0, 1), dtype=complex)
    else:
        xt = np.linalg.solve(r0 @ q0, q0.conj().T @ x)
    resid = fro(q0 @ (r0 @ q0) @ xt - x)
    scale = max(fro(x), np.sqrt(float(np.linalg.norm(col.P, 2))) if col.P.size else 0.0)
    # a leak d outside the range moves P - xx^* by about |d|^2, so match the PSD floor
    if resid > np.sqrt(tol.psd_tol) * scale + 1e-300:
        raise UnsolvableError(f"x is not in the range of P^(1/2): residual {resid:.3e}")
    return xt


@dataclass(frozen=True)
class SolutionFamily:
    """Minimal-norm solution and the free part of the solution set.

    ``gamma(z)`` is ``q x dim X0``, ``g_mult(z)`` is ``q x dim Delta~_*``.
    """

    x_tilde: np.ndarray
    gamma: Callable
    g_mult: Callable
    budget: float
    uniqueness: str
    case_tag: str
    colligation: RedhefferColligation
    param: object = None
    f_min: Optional[Realization] = None
    f_real: Optional[Realization] = None
    h: Optional[Realization] = None
    h_norm: Optional[float] = None
    f_norm: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def __call__(self, z) -> np.ndarray:
        v = self.gamma(z) @ self.x_tilde
        if self.h is not None:
            v = v + self.g_mult(z) @ self.h(z)
        return v

    @property
    def unique(self) -> bool:
        return self.uniqueness != NON_UNIQUE


def _case_tag(col):
    if col.ds == 0:
        return "delta_star_trivial"
    if col.d == 0:
        return "delta_trivial"
    return "general"


def _param_constant(param, col, tol, points=(0.0, 0.31 + 0.2j, -0.45j, 0.6, -0.5 + 0.4j)):
    """The constant value of ``param`` if it is (numerically) constant, else ``None``."""
    shape = (col.ds, col.d)
    if param is None:
        return np.zeros(shape, dtype=complex)
    if isinstance(param, SchurFunction):
        param = param.realization
    if isinstance(param, Realization):
        if param.n == 0 or fro(param.C) * fro(param.B) == 0.0:
            return np.array(param.D)
    try:
        vals = [param_value(param, z, shape, tol) for z in points]
    except RecoveryError:
        return None
    v0 = vals[0]
    if all(fro(v - v0) <= np.sqrt(tol.residual_tol) * (1.0 + fro(v0)) for v in vals[1:]):
        return v0
    return None


def classify_uniqueness(col: RedhefferColligation, data: AipDataSet, P, x, param=None, tol: Optional[Tolerances] = None):
    """``(uniqueness, case_tag)`` for the problem with parameter ``param`` of ``S``.

    Uniqueness holds when ``||x~|| = 1``, when ``Delta_*`` is trivial, or when
    ``param`` is a coisometric constant.  ``param`` may be a realization, a
    constant matrix, or a pointwise callable.
    """
    tol = tol or data.tol
    tag = _case_tag(col)
    xt = x_tilde(col, x, tol)
    if abs(fro(xt) - 1.0) <= tol.psd_tol:
        return UNIQUE_BY_BUDGET, tag
    if col.ds == 0:
        return UNIQUE_BY_DENSE_RANGE, tag
    if col.d >= col.ds:
        c = _param_constant(param, col, tol)
        if c is not None and fro(c @ c.conj().T - np.eye(col.ds)) <= np.sqrt(tol.residual_tol):
            return UNIQUE_BY_DENSE_RANGE, tag
    return NON_UNIQUE, tag


def _param_is_exact_h2(param, col, tol):
    """True when ``H(K_E)`` sits isometrically in ``H^2`` (zero or inner parameter)."""
    if param is None:
        return True
    if isinstance(param, np.ndarray):
        return fro(param) == 0.0
    if isinstance(param, (Realization, SchurFunction)):
        c = _param_constant(param, col, tol)
        return (c is not None and fro(c) == 0.0) or certify_schur(param, tol=tol).certified_inner
    return False


def aip_solve(
    data: AipDataSet,
    col: RedhefferColligation,
    param=None,
    h: Optional[Realization] = None,
    h_norm: Optional[float] = None,
    tol: Optional[Tolerances] = None,
) -> SolutionFamily:
    """Solution ``f = Gamma x~ + G h`` for the parameter ``param`` of ``S``.

    ``param`` is ``None`` (the zero function, i.e. ``S = Sigma11``), a
    realization, a constant matrix, or a pointwise callable.  The norm of
    ``h`` is computed in ``H^2`` when the parameter is zero or inner;
    otherwise ``h_norm`` supplied by the caller is used.
    """
    tol = tol or data.tol
    p = col.P
    sol = solvability(p, data.x, tol)
    if not sol.solvable:
        raise UnsolvableError(f"P - xx^* is not PSD: margin {sol.margin:.6g}", margin=sol.margin)
    xt = x_tilde(col, data.x, tol)
    nx = fro(xt)
    budget = float(np.sqrt(max(0.0, 1.0 - nx * nx)))

    hn = None
    if h is not None:
        if h.D.shape != (col.ds, 1):
            raise PreconditionError(f"h must be a {col.ds}-vector function, got {h.D.shape}")
        if _param_is_exact_h2(param, col, tol) and h.stable:
            hn = h2_norm(h, tol)
        else:
            hn = h_norm
        if hn is not None and hn > budget + tol.psd_tol:
            raise BudgetExceededError(f"||h|| = {hn:.6g} exceeds the budget {budget:.6g}", norm=hn, budget=budget)

    def gamma(z):
        return compute_G_Gamma(col, param, z, tol)[1]

    def g_mult(z):
        return compute_G_Gamma(col, param, z, tol)[0]

    f_min = f_real = None
    rparam = param.realization if isinstance(param, SchurFunction) else param
    if rparam is None or isinstance(rparam, Realization) or (
        isinstance(rparam, np.ndarray) and rparam.shape == (col.ds, col.d)
    ):
        if isinstance(rparam, np.ndarray):
            rparam = constant(rparam)
        loop = closed_loop(col, rparam)
        f_min = mul_const(loop.Gamma, right=xt)
        f_real = f_min if h is None else parallel(f_min, series(loop.G, h))
    uniq, tag = classify_uniqueness(col, data, p, data.x, param, tol)
    f_norm = None
    if hn is not None:
        f_norm = float(np.sqrt(nx * nx + hn * hn))
    elif h is None:
        f_norm = nx
    return SolutionFamily(
        x_tilde=xt,
        gamma=gamma,
        g_mult=g_mult,
        budget=budget,
        uniqueness=uniq,
        case_tag=tag,
        colligation=col,
        param=param,
        f_min=f_min,
        f_real=f_real,
        h=h,
        h_norm=hn,
        f_norm=f_norm,
        extras={"margin": sol.margin},
    )


def solve_problem(data: AipDataSet, tol: Optional[Tolerances] = None, param=None) -> SolutionFamily:
    """End-to-end: Gram matrix, solvability, colligation and minimal-norm solution.

    Without ``param`` the parameter of ``S`` is recovered pointwise; the
    minimal-norm solution is then realized exactly as ``F^S P^+ x``.
    """
    tol = tol or data.tol
    p = data.gram()
    sol = solvability(p, data.x, tol)
    if not sol.solvable:
        raise UnsolvableError(f"P - xx^* is not PSD: margin {sol.margin:.6g}", margin=sol.margin)
    col = build_colligation(p, data.T, data.E, data.N, tol)
    if param is None:
        param = pointwise_parameter(col, data.S.realization, tol)
    fam = aip_solve(data, col, param, tol=tol)
    if fam.f_min is None:
        f_min = mul_const(fs_realization(data), right=pinv(p, tol) @ data.x)
        fam = replace(fam, f_min=f_min, f_real=f_min)
    return fam
