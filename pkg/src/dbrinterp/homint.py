"""Model spaces of finite Blaschke products and the intersections
``K_S`` meet ``B H^2`` as ranges of a multiplier ``G``.

For an inner ``B`` with orthonormal basis of ``K_B = H^2 - B H^2``, the
backward shift ``T`` and evaluation at zero ``E`` give an output-stable pair
whose homogeneous interpolation problem (``x = 0``) singles out the functions
of ``H(K_S)`` orthogonal to ``K_B``, i.e. those in ``B H^2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .aipdata import obs_gramian, solvability
from .errors import DomainError, PreconditionError
from .numlin import DEFAULT_TOL, Tolerances, fro, psd_check, solve_stein, sqrt_psd
from .oap import build_N
from .rational import Realization, SchurFunction, certify_schur, evaluate
from .redheffer import RedhefferColligation, build_colligation, compute_G_Gamma, param_value
from .solve import pointwise_parameter

__all__ = [
    "ModelSpace",
    "model_space",
    "IntersectionSpace",
    "intersection_space",
    "hankel_rank",
    "taylor_from_samples",
    "h2_inner_sampled",
    "coinner_residual",
]


@dataclass(frozen=True)
class ModelSpace:
    """Orthonormal basis of ``K_B`` with the matrices of the backward shift and ``h -> h(0)``."""

    basis: tuple
    T: np.ndarray
    E: np.ndarray

    @property
    def dim(self) -> int:
        return self.T.shape[0]


def model_space(b, tol: Tolerances = DEFAULT_TOL) -> ModelSpace:
    """Model space of a scalar inner function given by a stable realization.

    With ``B = (A, B_, C, D)`` the space is ``{C (I - zA)^{-1} x}``; in the
    coordinates where the observability Gramian is the identity the backward
    shift acts as ``A`` and evaluation at zero as ``C``.  For the cascade
    realization of :func:`blaschke` this is the Takenaka-Malmquist basis.
    """
    sf = b if isinstance(b, SchurFunction) else certify_schur(b, tol=tol)
    r = sf.realization
    if r.p != 1 or r.q != 1:
        raise DomainError("model_space expects a scalar inner function")
    if not sf.certified_inner:
        raise DomainError(f"function is not inner on the circle grid (residual {sf.inner_residual:.3e})")
    if not r.stable:
        raise DomainError("realization of B is not stable")
    n = r.n
    g = obs_gramian(r.C, r.A, tol) if n else np.zeros((0, 0))
    verdict = psd_check(g, tol)
    if n and verdict.min_eigenvalue < tol.psd_tol:
        raise PreconditionError("realization of B is not observable; pass a minimal realization")
    if n and fro(g - np.eye(n)) <= tol.residual_tol * n:
        t, e = np.array(r.A), np.array(r.C)
    else:
        root = sqrt_psd(g, tol)
        rinv = np.linalg.inv(root) if n else root
        t, e = root @ r.A @ rinv, r.C @ rinv
    basis = tuple(Realization(t, t[:, [j]], e, e[:, [j]]) for j in range(n))
    return ModelSpace(basis, t, e)


def hankel_rank(s: Realization, tol: Tolerances = DEFAULT_TOL) -> int:
    """McMillan degree of a stable realization: number of nonzero Hankel singular values."""
    if s.n == 0:
        return 0
    wo = solve_stein(s.A, s.C.conj().T @ s.C, tol)
    wc = solve_stein(s.A.conj().T, s.B @ s.B.conj().T, tol)
    hsv = np.sqrt(np.clip(np.real(np.linalg.eigvals(wc @ wo)), 0.0, None))
    if hsv.max() == 0.0:
        return 0
    return int(np.count_nonzero(hsv > np.sqrt(tol.rank_tol) * hsv.max()))


def coinner_residual(s: Realization, m: int = 64, tol: Tolerances = DEFAULT_TOL) -> float:
    """``max ||S(t) S(t)^* - I||_F`` over ``m`` equispaced circle points."""
    out = 0.0
    for t in np.exp(2j * np.pi * np.arange(m) / m):
        v = evaluate(s, t, tol)
        out = max(out, fro(v @ v.conj().T - np.eye(s.q)))
    return out


def taylor_from_samples(f: Callable, m: int, radius: float = 1.0, npts: int = 256) -> np.ndarray:
    """First ``m`` Taylor coefficients of an analytic function from circle samples (FFT)."""
    t = radius * np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = np.array([np.asarray(f(z), dtype=complex).reshape(-1) for z in t])
    coef = np.fft.fft(vals, axis=0) / npts
    return coef[:m] / (radius ** np.arange(m))[:, None]


def h2_inner_sampled(f: Callable, g: Callable, npts: int = 256) -> complex:
    """``<f, g>_{H^2}`` by the trapezoid rule on the unit circle."""
    t = np.exp(2j * np.pi * np.arange(npts) / npts)
    acc = 0.0 + 0.0j
    for z in t:
        acc += np.vdot(np.asarray(g(z)).reshape(-1), np.asarray(f(z)).reshape(-1))
    return complex(acc / npts)


@dataclass(frozen=True)
class IntersectionSpace:
    """``M = H(K_S)`` meet ``B H^2`` as ``G H(K_E)``.

    ``parameter_space_dim`` is ``dim M`` (``None`` when infinite).  ``param``
    evaluates the Redheffer parameter of ``S`` pointwise.
    """

    G: Callable
    param: Callable
    parameter_space_dim: Optional[int]
    P: np.ndarray
    T: np.ndarray
    E: np.ndarray
    N: np.ndarray
    colligation: RedhefferColligation
    s_inner: bool
    isometry_residual: Optional[float]

    def param_kernel(self, z, zeta) -> np.ndarray:
        """``K_E(z, zeta)``."""
        col = self.colligation
        ez = param_value(self.param, z, (col.ds, col.d))
        ew = param_value(self.param, zeta, (col.ds, col.d))
        return (np.eye(col.ds) - ez @ ew.conj().T) / (1.0 - complex(z) * np.conj(complex(zeta)))

    def kernel(self, z, zeta) -> np.ndarray:
        """Reproducing kernel ``G(z) K_E(z, zeta) G(zeta)^*`` of ``M``."""
        return self.G(z) @ self.param_kernel(z, zeta) @ self.G(zeta).conj().T

    def element(self, zeta, v) -> Callable:
        """``z -> G(z) K_E(z, zeta) v``, the image of a kernel function of ``H(K_E)``."""
        v = np.asarray(v, dtype=complex).reshape(-1, 1)

        def f(z):
            return self.G(z) @ self.param_kernel(z, zeta) @ v

        return f


def _isometry_residual(space: IntersectionSpace, zetas, npts=256) -> float:
    """Max entry of ``Gram_H2(G h_i, G h_j) - Gram_{H(K_E)}(h_i, h_j)`` for kernel functions ``h_i``."""
    col = space.colligation
    if col.ds == 0:
        return 0.0
    items = [(zeta, np.eye(col.ds)[:, k]) for zeta in zetas for k in range(col.ds)]
    ts = np.exp(2j * np.pi * np.arange(npts) / npts)
    samples = []
    for zeta, v in items:
        f = space.element(zeta, v)
        samples.append(np.array([f(t).reshape(-1) for t in ts]))
    m = len(items)
    worst = 0.0
    for i in range(m):
        for j in range(m):
            h2 = np.sum(np.conj(samples[i]) * samples[j]) / npts
            zi, vi = items[i]
            zj, vj = items[j]
            ref = np.vdot(vi, space.param_kernel(zi, zj) @ vj)
            worst = max(worst, abs(h2 - ref))
    return float(worst)


def intersection_space(s, b, tol: Tolerances = DEFAULT_TOL, check_isometry: bool = True) -> IntersectionSpace:
    """Describe ``H(K_S)`` meet ``B H^2`` through the homogeneous problem for ``K_B``.

    ``dim M = dim H(K_S) - rank P``; ``dim H(K_S)`` is the McMillan degree of
    ``S`` when ``S`` is co-inner and infinite otherwise.  The isometry of
    ``M_G`` is checked (trapezoid rule on the circle) only for inner ``S``.
    """
    sr = s.realization if isinstance(s, SchurFunction) else s
    ms = model_space(b, tol)
    t, e = ms.T, ms.E
    n = build_N(sr, e, t, tol)
    p = solve_stein(t, e.conj().T @ e - n.conj().T @ n, tol)
    if not psd_check(p, tol).is_psd or not solvability(p, np.zeros((t.shape[0], 1)), tol).solvable:
        raise DomainError("Gram matrix is not PSD: S is not a Schur function")
    col = build_colligation(p, t, e, n, tol)
    raw_param = pointwise_parameter(col, sr, tol)

    # pointwise recovery is the expensive step; kernels revisit the same points
    @lru_cache(maxsize=8192)
    def _param(z: complex):
        v = raw_param(z)
        v.setflags(write=False)
        return v

    @lru_cache(maxsize=8192)
    def _g(z: complex):
        v = compute_G_Gamma(col, _param(z), z, tol)[0]
        v.setflags(write=False)
        return v

    def param(z):
        return _param(complex(z))

    def g_eval(z):
        return _g(complex(z))

    co_inner = coinner_residual(sr, tol=tol) <= np.sqrt(tol.residual_tol)
    dim = hankel_rank(sr, tol) - col.r if co_inner else None
    s_inner = certify_schur(sr, tol=tol).certified_inner
    space = IntersectionSpace(g_eval, param, dim, p, t, e, n, col, s_inner, None)
    if check_isometry and s_inner:
        res = _isometry_residual(space, (0.0, 0.4 + 0.1j, -0.3j))
        space = IntersectionSpace(g_eval, param, dim, p, t, e, n, col, s_inner, res)
    return space
