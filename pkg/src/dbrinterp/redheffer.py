"""Unitary colligation of an admissible data set and its Redheffer transform.

Coordinates: ``X0`` is ``Ran P^{1/2}`` expressed in an orthonormal basis
``Q0`` (so ``P^{1/2} = Q0 R0``), ``U = C^p`` and ``Y = C^q``.  The isometry

    V [R0 x; N x] = [R0 T x; E x]

maps ``D_V`` in ``X0 + U`` onto ``R_V`` in ``X0 + Y``.  With ``Delta`` and
``Delta_*`` the orthogonal complements of ``D_V`` and ``R_V``, the unitary

    U = [[V P_{D_V}, i_*^*], [i P_Delta, 0]] : X0+U+Delta~_* -> X0+Y+Delta~

is partitioned as ``[[A, B1, B2], [C1, D11, D12], [C2, D21, 0]]``.  The
identification maps are the orthonormal bases themselves, so every block is
canonical only up to constant unitaries on the defect spaces.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import ConditioningError, DimensionError, InconsistencyError, NotAdmissibleError, RecoveryError
from .numlin import DEFAULT_TOL, Tolerances, as_matrix, fro, pinv, range_basis, sqrt_psd
from .rational import Realization, SchurFunction, certify_schur, evaluate, resolvent

__all__ = [
    "RedhefferColligation",
    "SigmaBlocks",
    "build_colligation",
    "sigma_eval",
    "sigma_kernel_residual",
    "certify_sigma",
    "redheffer_apply",
    "compute_G_Gamma",
    "kernel_decomposition_residual",
    "closed_loop",
    "ClosedLoop",
    "recover_parameter",
    "RecoveredParameter",
    "injectivity_diagnostics",
    "InjectivityReport",
    "param_value",
]

Parameter = Union[None, Realization, SchurFunction, np.ndarray, Callable]


@dataclass(frozen=True)
class RedhefferColligation:
    """Bases, blocks and assembled unitary of the colligation.

    ``blocks`` maps ``"A", "B1", "B2", "C1", "C2", "D11", "D12", "D21"`` to
    matrices; ``dims`` holds ``x0, delta, delta_star, p, q``.
    """

    X0_basis: np.ndarray
    R0: np.ndarray
    DV_basis: np.ndarray
    RV_basis: np.ndarray
    Delta_basis: np.ndarray
    DeltaStar_basis: np.ndarray
    ident_i: np.ndarray
    ident_istar: np.ndarray
    blocks: dict
    dims: dict
    U: np.ndarray
    sigma: Realization
    isometry_residual: float
    unitarity_residual: float
    P: np.ndarray
    T: np.ndarray
    generic_ranks: tuple = (0, 0)

    @property
    def r(self) -> int:
        return self.dims["x0"]

    @property
    def d(self) -> int:
        return self.dims["delta"]

    @property
    def ds(self) -> int:
        return self.dims["delta_star"]

    def __getattr__(self, name):
        if name in ("A", "B1", "B2", "C1", "C2", "D11", "D12", "D21"):
            return self.blocks[name]
        raise AttributeError(name)


_GENERIC_POINTS = (0.137 + 0.291j, -0.412 + 0.083j, 0.052 - 0.371j)
# rank cutoff for detecting isolated rank drops of Sigma12 / Sigma21
_SIGMA_CUTOFF = 1e-10


def _stein_ok(p, t, e, n, tol):
    q = e.conj().T @ e - n.conj().T @ n
    res = fro(p - t.conj().T @ p @ t - q)
    return res, res <= tol.residual_tol * (1.0 + fro(q))


def build_colligation(p, t, e, n, tol: Tolerances = DEFAULT_TOL) -> RedhefferColligation:
    """Build the unitary colligation from ``{P, T, E, N}``."""
    p = as_matrix(p, name="P")
    t = as_matrix(t, name="T")
    nx = t.shape[0]
    e = as_matrix(e, cols=nx, name="E")
    n = as_matrix(n, cols=nx, name="N")
    if p.shape != (nx, nx):
        raise DimensionError(f"P has shape {p.shape}, expected {(nx, nx)}")
    q_dim, p_dim = e.shape[0], n.shape[0]
    res, ok = _stein_ok(p, t, e, n, tol)
    if not ok:
        raise NotAdmissibleError(f"Stein residual {res:.3e} exceeds tolerance")

    root = sqrt_psd(p, tol)
    q0, _ = range_basis(root, tol)
    r = q0.shape[1]
    r0 = q0.conj().T @ root
    dgen = np.vstack([r0, n])
    rgen = np.vstack([r0 @ t, e])

    _, ker = range_basis(dgen, tol)
    leak = fro(rgen @ ker)
    if leak > np.sqrt(tol.residual_tol) * (1.0 + fro(rgen)):
        raise InconsistencyError(f"V is not well defined: kernel leak {leak:.3e}", residual=leak)

    wd, _ = range_basis(dgen, tol)
    dv = wd.shape[1]
    wr = rgen @ pinv(dgen, tol) @ wd
    iso = fro(wr.conj().T @ wr - np.eye(dv))
    # the Stein identity only pins V down to (its residual) / sigma_min(D)^2
    sv = np.linalg.svd(dgen, compute_uv=False)[:dv] if dv else np.ones(1)
    floor = max(res, 10 * nx * np.finfo(float).eps * fro(p))
    if iso > np.sqrt(tol.residual_tol) + 10 * floor / sv[-1] ** 2:
        raise InconsistencyError(f"V is not isometric on its domain: residual {iso:.3e}", residual=iso)
    # polar correction removes the roundoff left by the pseudoinverse
    u_, _, vh = np.linalg.svd(wr, full_matrices=False)
    wr = u_ @ vh

    _, wdelta = range_basis(wd.conj().T, tol)
    _, wds = range_basis(wr.conj().T, tol)
    d, ds = wdelta.shape[1], wds.shape[1]

    top = np.hstack([wr @ wd.conj().T, wds])
    bottom = np.hstack([wdelta.conj().T, np.zeros((d, ds), dtype=complex)])
    u = np.vstack([top, bottom])
    unit = max(fro(u.conj().T @ u - np.eye(u.shape[1])), fro(u @ u.conj().T - np.eye(u.shape[0])))
    if unit > np.sqrt(tol.residual_tol):
        raise InconsistencyError(f"assembled colligation is not unitary: residual {unit:.3e}", residual=unit)

    blocks = {
        "A": top[:r, :r],
        "B1": top[:r, r:r + p_dim],
        "B2": top[:r, r + p_dim:],
        "C1": top[r:, :r],
        "D11": top[r:, r:r + p_dim],
        "D12": top[r:, r + p_dim:],
        "C2": bottom[:, :r],
        "D21": bottom[:, r:r + p_dim],
    }
    for v in blocks.values():
        v.setflags(write=False)
    sig = Realization(
        blocks["A"],
        np.hstack([blocks["B1"], blocks["B2"]]),
        np.vstack([blocks["C1"], blocks["C2"]]),
        np.block([[blocks["D11"], blocks["D12"]], [blocks["D21"], np.zeros((d, ds))]]),
    )
    probe = [evaluate(sig, z, tol) for z in _GENERIC_POINTS]
    ranks = (
        max(_sigma_rank(v[:q_dim, p_dim:]) for v in probe),
        max(_sigma_rank(v[q_dim:, :p_dim]) for v in probe),
    )
    return RedhefferColligation(
        X0_basis=q0,
        R0=r0,
        DV_basis=wd,
        RV_basis=wr,
        Delta_basis=wdelta,
        DeltaStar_basis=wds,
        ident_i=np.eye(d, dtype=complex),
        ident_istar=np.eye(ds, dtype=complex),
        blocks=blocks,
        dims={"x0": r, "delta": d, "delta_star": ds, "p": p_dim, "q": q_dim, "dv": dv},
        U=u,
        sigma=sig,
        isometry_residual=iso,
        unitarity_residual=unit,
        P=p,
        T=t,
        generic_ranks=ranks,
    )


class SigmaBlocks(NamedTuple):
    S11: np.ndarray
    S12: np.ndarray
    S21: np.ndarray
    S22: np.ndarray


def sigma_eval(col: RedhefferColligation, z, tol: Tolerances = DEFAULT_TOL) -> SigmaBlocks:
    """The four blocks of the characteristic function at ``z``."""
    v = evaluate(col.sigma, z, tol)
    q, p = col.dims["q"], col.dims["p"]
    return SigmaBlocks(v[:q, :p], v[:q, p:], v[q:, :p], v[q:, p:])


def sigma_kernel_residual(col: RedhefferColligation, z, zeta, tol: Tolerances = DEFAULT_TOL) -> float:
    """Residual of ``(I - Sigma(z)Sigma(zeta)^*)/(1 - z conj(zeta)) = C (I-zA)^{-1}(I-zeta A)^{-*} C^*``."""
    z, zeta = complex(z), complex(zeta)
    sz, sw = evaluate(col.sigma, z, tol), evaluate(col.sigma, zeta, tol)
    lhs = (np.eye(sz.shape[0]) - sz @ sw.conj().T) / (1.0 - z * zeta.conjugate())
    c = col.sigma.C
    rz, rw = c @ resolvent(col.A, z, tol), c @ resolvent(col.A, zeta, tol)
    return fro(lhs - rz @ rw.conj().T)


def certify_sigma(col: RedhefferColligation, tol: Tolerances = DEFAULT_TOL) -> SchurFunction:
    return certify_schur(col.sigma, tol=tol)


def param_value(param: Parameter, z, shape, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Value of a parameter function at ``z``; ``None`` means the zero function."""
    if param is None:
        return np.zeros(shape, dtype=complex)
    if isinstance(param, (Realization, SchurFunction)):
        v = param(z, tol)
    elif callable(param):
        v = np.asarray(param(z), dtype=complex)
    else:
        v = np.asarray(param, dtype=complex)
    v = v.reshape(shape) if v.size == shape[0] * shape[1] else v
    if v.shape != tuple(shape):
        raise DimensionError(f"parameter value has shape {v.shape}, expected {tuple(shape)}")
    return v


def _loop(blocks: SigmaBlocks, ev, tol):
    ds = blocks.S12.shape[1]
    m = np.eye(ds) - ev @ blocks.S22
    if ds:
        s = np.linalg.svd(m, compute_uv=False)
        if s[-1] <= tol.rank_tol * max(1.0, s[0]):
            raise ConditioningError("I - E(z) Sigma22(z) is numerically singular")
    return m


def redheffer_apply(col: RedhefferColligation, param: Parameter, z, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``Sigma11 + Sigma12 (I - E Sigma22)^{-1} E Sigma21`` at ``z``."""
    b = sigma_eval(col, z, tol)
    ev = param_value(param, z, (col.ds, col.d), tol)
    m = _loop(b, ev, tol)
    return b.S11 + b.S12 @ np.linalg.solve(m, ev @ b.S21) if col.ds else b.S11.copy()


def compute_G_Gamma(col: RedhefferColligation, param: Parameter, z, tol: Tolerances = DEFAULT_TOL):
    """``G = Sigma12 (I - E Sigma22)^{-1}`` and ``Gamma = (C1 + G E C2)(I - zA)^{-1}`` at ``z``."""
    b = sigma_eval(col, z, tol)
    ev = param_value(param, z, (col.ds, col.d), tol)
    m = _loop(b, ev, tol)
    g = np.linalg.solve(m.T, b.S12.T).T if col.ds else b.S12.copy()
    gamma = (col.C1 + g @ ev @ col.C2) @ resolvent(col.A, z, tol)
    return g, gamma


def kernel_decomposition_residual(col: RedhefferColligation, param: Parameter, z, zeta, tol: Tolerances = DEFAULT_TOL) -> float:
    """Residual of ``K_S(z,zeta) = G(z) K_E(z,zeta) G(zeta)^* + Gamma(z) Gamma(zeta)^*`` with ``S = R_Sigma[E]``."""
    z, zeta = complex(z), complex(zeta)
    den = 1.0 - z * zeta.conjugate()
    sz, sw = redheffer_apply(col, param, z, tol), redheffer_apply(col, param, zeta, tol)
    ez = param_value(param, z, (col.ds, col.d), tol)
    ew = param_value(param, zeta, (col.ds, col.d), tol)
    gz, gmz = compute_G_Gamma(col, param, z, tol)
    gw, gmw = compute_G_Gamma(col, param, zeta, tol)
    ks = (np.eye(col.dims["q"]) - sz @ sw.conj().T) / den
    ke = (np.eye(col.ds) - ez @ ew.conj().T) / den
    return fro(ks - gz @ ke @ gw.conj().T - gmz @ gmw.conj().T)


class ClosedLoop(NamedTuple):
    S: Realization
    G: Realization
    Gamma: Realization


def closed_loop(col: RedhefferColligation, param: Optional[Realization] = None) -> ClosedLoop:
    """Realizations of ``S = R_Sigma[E]``, ``G`` and ``Gamma`` for a rational parameter.

    ``Sigma22(0) = 0`` rules out an algebraic loop, so the interconnection has
    state ``[x; x_E]``.  ``Gamma`` takes the initial state in ``X0`` coordinates.
    """
    a, b1, b2 = col.A, col.B1, col.B2
    c1, c2, d11, d12, d21 = col.C1, col.C2, col.D11, col.D12, col.D21
    r, d, ds = col.r, col.d, col.ds
    if param is None:
        param = Realization(np.zeros((0, 0)), np.zeros((0, d)), np.zeros((ds, 0)), np.zeros((ds, d)))
    if isinstance(param, SchurFunction):
        param = param.realization
    if param.D.shape != (ds, d):
        raise DimensionError(f"parameter must be {ds}x{d}, got {param.D.shape}")
    ae, be, ce, de = param.A, param.B, param.C, param.D
    ne = ae.shape[0]
    a_cl = np.block([[a + b2 @ de @ c2, b2 @ ce], [be @ c2, ae]])
    c_cl = np.hstack([c1 + d12 @ de @ c2, d12 @ ce])
    s = Realization(a_cl, np.vstack([b1 + b2 @ de @ d21, be @ d21]), c_cl, d11 + d12 @ de @ d21)
    g = Realization(a_cl, np.vstack([b2, np.zeros((ne, ds))]), c_cl, d12)
    e0 = np.vstack([np.eye(r), np.zeros((ne, r))])
    gamma = Realization(a_cl, a_cl @ e0, c_cl, c_cl @ e0)
    return ClosedLoop(s, g, gamma)


@dataclass(frozen=True)
class RecoveredParameter:
    points: np.ndarray
    values: tuple
    residuals: np.ndarray
    max_norm: float
    unique: bool

    def as_function(self):
        """Lookup of the recovered value at one of the sample points."""
        table = {complex(z): v for z, v in zip(self.points, self.values)}

        def f(z):
            return table[complex(z)]

        return f


_RING = 32


def _recover_at(col, s, z, tol):
    """Pointwise inversion, or ``None`` when Sigma12(z) / Sigma21(z) drop below their generic rank."""
    b = sigma_eval(col, z, tol)
    r12, r21 = col.generic_ranks
    if _sigma_rank(b.S12) < r12 or _sigma_rank(b.S21) < r21:
        return None
    sz = param_value(s, z, (col.dims["q"], col.dims["p"]), tol)
    w = pinv(b.S12, tol) @ (sz - b.S11) @ pinv(b.S21, tol)
    m = np.eye(col.d) + b.S22 @ w
    return np.linalg.solve(m.T, w.T).T


def _ring_mean(col, s, z, tol):
    # E is analytic in the disk, so its value is the mean over any circle inside it;
    # widen the circle until Sigma12 / Sigma21 are generic all around it
    room = 1.0 - abs(z)
    rad = min(0.04, 0.5 * room)
    nodes = np.exp(2j * np.pi * (np.arange(_RING) + 0.5) / _RING)
    while rad < room:
        vs = [_recover_at(col, s, z + rad * u, tol) for u in nodes]
        if all(v is not None for v in vs):
            return sum(vs) / _RING
        rad = 0.5 * (rad + room)
        if rad > 0.9 * room:
            break
    raise RecoveryError(f"Sigma12/Sigma21 lose rank near z = {complex(z)}")


def recover_parameter(
    col: RedhefferColligation,
    s,
    points,
    tol: Tolerances = DEFAULT_TOL,
    max_residual: float = 1e-7,
    unique: Optional[bool] = None,
) -> RecoveredParameter:
    """Recover ``E(z)`` with ``S(z) = R_Sigma[E](z)`` at each sample point.

    ``W = Sigma12^+ (S - Sigma11) Sigma21^+`` and ``E = W (I + Sigma22 W)^{-1}``.
    Raises :class:`RecoveryError` if the reconstruction residual exceeds
    ``max_residual * (1 + ||S(z)||)`` or a value is not contractive.
    ``s`` may be a realization, Schur function or callable.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    q, p = col.dims["q"], col.dims["p"]
    vals, res = [], []
    max_norm = 0.0
    for z in pts:
        sz = param_value(s, z, (q, p), tol)
        if col.d and col.ds:
            ev = _recover_at(col, s, z, tol)
            if ev is None:
                # Sigma12 or Sigma21 loses rank at z: use the mean value over a small circle
                ev = _ring_mean(col, s, z, tol)
        else:
            ev = np.zeros((col.ds, col.d), dtype=complex)
        vals.append(ev)
        recon = redheffer_apply(col, ev, z, tol)
        res.append(fro(recon - sz) / (1.0 + fro(sz)))
        if ev.size:
            max_norm = max(max_norm, float(np.linalg.norm(ev, 2)))
    res = np.asarray(res)
    worst = float(res.max()) if res.size else 0.0
    if worst > max_residual:
        raise RecoveryError(
            f"S is not reproduced by the recovered parameter: relative residual {worst:.3e}",
            residual=worst,
            max_norm=max_norm,
        )
    if max_norm > 1.0 + np.sqrt(tol.psd_tol):
        raise RecoveryError(
            f"recovered parameter is not contractive: norm {max_norm:.6g}", residual=worst, max_norm=max_norm
        )
    if unique is None:
        unique = injectivity_diagnostics(col.T, col.P, col, tol).passes
    return RecoveredParameter(pts, tuple(vals), res, max_norm, bool(unique))


class InjectivityReport(NamedTuple):
    Tstar_injective: bool
    range_meets_kernel_trivially: bool
    kerD12_dim: int
    kerTstarP_dim: int
    D21_dense_range: bool

    @property
    def passes(self) -> bool:
        return self.Tstar_injective or self.range_meets_kernel_trivially


def _sigma_rank(m):
    # blocks of Sigma(z) are contractions, so the cutoff is absolute
    if m.size == 0:
        return 0
    return int(np.count_nonzero(np.linalg.svd(m, compute_uv=False) > _SIGMA_CUTOFF))


def _rank(m, tol):
    if m.size == 0:
        return 0
    return range_basis(m, tol)[0].shape[1]


def injectivity_diagnostics(t, p, col: RedhefferColligation, tol: Tolerances = DEFAULT_TOL) -> InjectivityReport:
    """Sufficient conditions for uniqueness of the Redheffer parameter.

    ``range_meets_kernel_trivially`` tests ``Ran (T^*)^n`` meets ``Ker T^*`` only in zero, ``n``
    the state dimension.  ``Ker D21^*`` must be trivial for every colligation.
    """
    t = as_matrix(t, name="T")
    n = t.shape[0]
    ts = t.conj().T
    t_inj = _rank(ts, tol) == n
    ran, _ = range_basis(np.linalg.matrix_power(ts, n) if n else ts, tol)
    _, ker = range_basis(ts, tol)
    both = np.hstack([ran, ker])
    inter = ran.shape[1] + ker.shape[1] - _rank(both, tol)
    d12_null = col.ds - _rank(col.D12, tol)
    tp_null = col.r - _rank(ts @ col.X0_basis, tol)
    d21_full = _rank(col.D21, tol) == col.d
    if not d21_full:
        raise InconsistencyError("D21^* has a nontrivial kernel")
    return InjectivityReport(bool(t_inj), bool(inter == 0), int(d12_null), int(tp_null), True)
