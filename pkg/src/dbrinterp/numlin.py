"""Dense complex linear algebra kernel.

All routines take and return ``complex128`` numpy arrays and never mutate
their inputs.  Numerical rank decisions are relative: a singular value
``sigma`` counts as zero when ``sigma < rank_tol * sigma_max``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    IllPosedError,
    NumericalError,
    PreconditionError,
)

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "as_matrix",
    "as_column",
    "fro",
    "spectral_radius",
    "PsdVerdict",
    "psd_check",
    "sqrt_psd",
    "pinv",
    "range_basis",
    "solve_stein",
    "solve_stein_sylvester",
    "schur_complement",
    "psd_by_schur",
    "unitary_completion",
]

# Above this many unknowns the Kronecker system is replaced by Smith doubling.
_VECTORIZE_LIMIT = 3600


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every module.

    rank_tol
        Relative singular-value cutoff.
    psd_tol
        Eigenvalue floor for positive semidefiniteness.
    residual_tol
        Relative bound for equation residuals.
    """

    rank_tol: float = 1e-10
    psd_tol: float = 1e-9
    residual_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rank_tol", "psd_tol", "residual_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    @classmethod
    def from_mapping(cls, m) -> "Tolerances":
        known = {k: float(m[k]) for k in ("rank_tol", "psd_tol", "residual_tol") if k in m}
        return cls(**known)


DEFAULT_TOL = Tolerances()


def as_matrix(a, rows=None, cols=None, name="matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array, checking the shape if given."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1) if rows == 1 else m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if rows is not None and m.shape[0] != rows:
        raise DimensionError(f"{name} has {m.shape[0]} rows, expected {rows}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"{name} has {m.shape[1]} columns, expected {cols}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} has non-finite entries")
    return m


def as_column(x, name="x") -> np.ndarray:
    v = np.array(x, dtype=complex)
    if v.ndim == 0:
        v = v.reshape(1, 1)
    elif v.ndim == 1:
        v = v.reshape(-1, 1)
    if v.ndim != 2 or v.shape[1] != 1:
        raise DimensionError(f"{name} must be a column vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries")
    return v


def fro(a) -> float:
    return float(np.linalg.norm(a)) if np.size(a) else 0.0


def spectral_radius(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def _require_square(h, name="matrix"):
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"{name} must be square, got {h.shape}")


class PsdVerdict(NamedTuple):
    is_hermitian: bool
    is_psd: bool
    min_eigenvalue: float


def psd_check(h, tol: Tolerances = DEFAULT_TOL) -> PsdVerdict:
    """Hermitian and PSD verdict for a square matrix.

    The minimum eigenvalue is that of the Hermitian part ``(H + H*)/2``.
    An empty matrix is reported as Hermitian PSD with minimum eigenvalue 0.
    """
    h = as_matrix(h, name="H")
    _require_square(h, "H")
    if h.size == 0:
        return PsdVerdict(True, True, 0.0)
    herm = fro(h - h.conj().T) <= tol.residual_tol * (1.0 + fro(h))
    lam = float(np.linalg.eigvalsh(0.5 * (h + h.conj().T))[0])
    return PsdVerdict(bool(herm), bool(herm and lam >= -tol.psd_tol), lam)


def sqrt_psd(h, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Hermitian PSD square root.

    Eigenvalues in ``[-psd_tol, 0)`` are clamped to 0, and so are those within
    the eigensolver's roundoff (``10 n eps lambda_max``): the root would
    otherwise lift them to the square root of machine precision.
    """
    verdict = psd_check(h, tol)
    if not verdict.is_psd:
        raise DomainError(
            f"matrix is not Hermitian PSD (min eigenvalue {verdict.min_eigenvalue:.3e})",
            min_eigenvalue=verdict.min_eigenvalue,
        )
    h = as_matrix(h)
    if h.size == 0:
        return h.copy()
    lam, q = np.linalg.eigh(0.5 * (h + h.conj().T))
    lam = np.clip(lam, 0.0, None)
    lam[lam <= 10 * lam.size * np.finfo(float).eps * lam[-1]] = 0.0
    r = (q * np.sqrt(lam)) @ q.conj().T
    return 0.5 * (r + r.conj().T)


def _svd_rank(s, rank_tol):
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s >= rank_tol * s[0]))


def pinv(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with relative cutoff ``rank_tol``."""
    m = as_matrix(m, name="M")
    rows, cols = m.shape
    if m.size == 0:
        return np.zeros((cols, rows), dtype=complex)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    r = _svd_rank(s, tol.rank_tol)
    return (vh[:r].conj().T / s[:r]) @ u[:, :r].conj().T


def range_basis(m, tol: Tolerances = DEFAULT_TOL):
    """Orthonormal bases of the numerical range and kernel of ``m``.

    Returns ``(range_onb, kernel_onb)`` with shapes ``(rows, r)`` and
    ``(cols, cols - r)``.
    """
    m = as_matrix(m, name="M")
    rows, cols = m.shape
    if m.size == 0:
        return np.zeros((rows, 0), dtype=complex), np.eye(cols, dtype=complex)
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    r = _svd_rank(s, tol.rank_tol)
    return u[:, :r].copy(), vh[r:].conj().T.copy()


def solve_stein_sylvester(left, right, q, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Solve ``X - L X R = Q`` for ``X`` when ``rho(L) * rho(R) < 1``.

    The solution is the convergent series ``sum_k L^k Q R^k``.
    """
    left = as_matrix(left, name="L")
    right = as_matrix(right, name="R")
    q = as_matrix(q, name="Q")
    _require_square(left, "L")
    _require_square(right, "R")
    n, m = left.shape[0], right.shape[0]
    if q.shape != (n, m):
        raise DimensionError(f"Q has shape {q.shape}, expected {(n, m)}")
    if q.size == 0:
        return q.copy()
    rho = spectral_radius(left) * spectral_radius(right)
    if rho >= 1.0:
        raise IllPosedError(f"Stein equation is not uniquely solvable: rho(L)*rho(R) = {rho:.6g} >= 1")
    if n * m <= _VECTORIZE_LIMIT:
        # column-major vec: vec(L X R) = (R^T kron L) vec(X)
        k = np.eye(n * m, dtype=complex) - np.kron(right.T, left)
        try:
            x = np.linalg.solve(k, q.reshape(-1, order="F")).reshape((n, m), order="F")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular Stein system: {exc}") from exc
    else:
        x, lk, rk = q.copy(), left.copy(), right.copy()
        for _ in range(64):
            step = lk @ x @ rk
            x = x + step
            if fro(step) <= 1e-17 * (1.0 + fro(x)):
                break
            lk, rk = lk @ lk, rk @ rk
    res = fro(x - left @ x @ right - q)
    if res > tol.residual_tol * (1.0 + fro(q)):
        raise NumericalError(f"Stein residual {res:.3e} exceeds tolerance")
    return x


def solve_stein(t, q, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Solve ``P - T* P T = Q`` (``Q`` Hermitian, ``rho(T) < 1``); returns Hermitian ``P``.

    >>> float(solve_stein([[0.5]], [[1.0]])[0, 0].real)  # doctest: +ELLIPSIS
    1.333333333333...
    """
    t = as_matrix(t, name="T")
    _require_square(t, "T")
    rho = spectral_radius(t)
    if rho >= 1.0:
        raise IllPosedError(f"spectral radius of T is {rho:.6g} >= 1; Stein solution not unique")
    p = solve_stein_sylvester(t.conj().T, t, q, tol)
    return 0.5 * (p + p.conj().T)


def _split(m, k):
    return m[:k, :k], m[:k, k:], m[k:, :k], m[k:, k:]


def schur_complement(m, split: int, pivot: str = "upper-left", tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Schur complement of a 2x2-partitioned matrix.

    ``pivot="upper-left"`` eliminates the leading ``split x split`` block and
    returns ``D - C A^+ B``; ``pivot="lower-right"`` returns ``A - B D^+ C``.
    Pseudoinverses cover singular pivots.
    """
    m = as_matrix(m, name="M")
    _require_square(m, "M")
    if not 0 <= split <= m.shape[0]:
        raise DimensionError(f"split {split} out of range for size {m.shape[0]}")
    a, b, c, d = _split(m, split)
    if pivot == "upper-left":
        return d - c @ pinv(a, tol) @ b
    if pivot == "lower-right":
        return a - b @ pinv(d, tol) @ c
    raise ValueError(f"pivot must be 'upper-left' or 'lower-right', got {pivot!r}")


def psd_by_schur(m, split: int, tol: Tolerances = DEFAULT_TOL) -> bool:
    """PSD test through the upper-left pivot and its Schur complement.

    ``M >= 0`` iff ``A >= 0``, ``Ran B`` lies in ``Ran A`` and ``D - B* A^+ B >= 0``.
    """
    m = as_matrix(m, name="M")
    if not psd_check(m, tol).is_hermitian:
        return False
    a, b, _, _ = _split(m, split)
    if not psd_check(a, tol).is_psd:
        return False
    if b.size:
        leak = b - a @ pinv(a, tol) @ b
        if fro(leak) > np.sqrt(tol.psd_tol) * (1.0 + fro(b)):
            return False
    return psd_check(schur_complement(m, split, "upper-left", tol), tol).is_psd


def unitary_completion(v, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Complete an isometry ``V`` (rows >= cols) to a square unitary ``[V, W]``.

    The added columns come from Gram-Schmidt over the standard basis,
    taking at each step the basis vector with the largest residual (ties
    resolved by index), so the result is deterministic.
    """
    v = as_matrix(v, name="V")
    rows, cols = v.shape
    if cols > rows:
        raise PreconditionError(f"V has more columns ({cols}) than rows ({rows})")
    gram_err = fro(v.conj().T @ v - np.eye(cols))
    if gram_err > tol.residual_tol:
        raise PreconditionError(f"V is not isometric: ||V*V - I||_F = {gram_err:.3e}")
    basis = [v[:, j] for j in range(cols)]
    q = v.copy()
    cand = np.eye(rows, dtype=complex)
    for _ in range(rows - cols):
        # two passes of classical Gram-Schmidt against the current basis
        res = cand - q @ (q.conj().T @ cand)
        res = res - q @ (q.conj().T @ res)
        norms = np.linalg.norm(res, axis=0)
        k = int(np.argmax(norms))
        w = res[:, k] / norms[k]
        w = w - q @ (q.conj().T @ w)
        w = w / np.linalg.norm(w)
        basis.append(w)
        q = np.column_stack(basis)
    return q
