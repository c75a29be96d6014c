"""Rational matrix functions in state-space form.

A :class:`Realization` ``(A, B, C, D)`` represents

    R(z) = D + z C (I - z A)^{-1} B,

so its Taylor coefficients at the origin are ``D, CB, CAB, CA^2B, ...``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, PoleError, UnstableError
from .numlin import DEFAULT_TOL, Tolerances, as_matrix, fro, solve_stein_sylvester, spectral_radius

__all__ = [
    "Realization",
    "SchurFunction",
    "constant",
    "evaluate",
    "taylor_coeffs",
    "kernel_KS",
    "blaschke",
    "default_disk_grid",
    "default_circle_grid",
    "certify_schur",
    "h2_inner_product",
    "h2_norm",
    "series",
    "parallel",
    "scale",
    "mul_const",
    "select",
    "compose_disk_automorphism",
    "automorphism_weight",
]


@dataclass(frozen=True)
class Realization:
    """State-space quadruple with state dim ``n``, input dim ``p``, output dim ``q``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    rho: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = as_matrix(self.A, name="A")
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"A must be square, got {a.shape}")
        n = a.shape[0]
        d = as_matrix(self.D, name="D")
        q, p = d.shape
        b = as_matrix(np.reshape(self.B, (n, p)) if np.size(self.B) == n * p else self.B, n, p, "B")
        c = as_matrix(np.reshape(self.C, (q, n)) if np.size(self.C) == q * n else self.C, q, n, "C")
        for name, val in (("A", a), ("B", b), ("C", c), ("D", d)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "rho", spectral_radius(a))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.D.shape[1]

    @property
    def q(self) -> int:
        return self.D.shape[0]

    @property
    def stable(self) -> bool:
        return self.rho < 1.0

    def __call__(self, z, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
        return evaluate(self, z, tol)


def constant(d) -> Realization:
    """Realization with no states and value ``d``."""
    d = as_matrix(d, name="D")
    q, p = d.shape
    return Realization(np.zeros((0, 0)), np.zeros((0, p)), np.zeros((q, 0)), d)


def resolvent(a: np.ndarray, z: complex, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``(I - z a)^{-1}``, raising :class:`PoleError` when numerically singular."""
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    m = np.eye(n) - z * a
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] <= tol.rank_tol * max(1.0, s[0]):
        raise PoleError(f"I - zA is singular at z = {z!r}", location=complex(z))
    return np.linalg.inv(m)


def evaluate(r: Realization, z, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Value ``D + z C (I - zA)^{-1} B`` at the point ``z``."""
    z = complex(z)
    if r.n == 0:
        return r.D.copy()
    m = np.eye(r.n) - z * r.A
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] <= tol.rank_tol * max(1.0, s[0]):
        raise PoleError(f"I - zA is singular at z = {z!r}", location=z)
    return r.D + z * (r.C @ np.linalg.solve(m, r.B))


def taylor_coeffs(r: Realization, m: int) -> list:
    """Return ``[D, CB, CAB, ..., CA^{m-1}B]`` (``m + 1`` matrices)."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    out = [r.D.copy()]
    v = r.B.copy()
    for _ in range(m):
        out.append(r.C @ v)
        v = r.A @ v
    return out


@dataclass(frozen=True)
class SchurFunction:
    """A realization together with grid certificates of contractivity and innerness.

    The flags certify behaviour on the recorded grids only.
    """

    realization: Realization
    certified_contractive: bool = False
    certified_inner: bool = False
    disk_grid: tuple = ()
    circle_grid: tuple = ()
    max_norm: float = float("nan")
    inner_residual: float = float("nan")

    @property
    def p(self) -> int:
        return self.realization.p

    @property
    def q(self) -> int:
        return self.realization.q

    def __call__(self, z, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
        return evaluate(self.realization, z, tol)


def _real(s) -> Realization:
    return s.realization if isinstance(s, SchurFunction) else s


def kernel_KS(s, z, zeta, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """de Branges-Rovnyak kernel ``(I - S(z) S(zeta)^*) / (1 - z conj(zeta))``."""
    r = _real(s)
    z, zeta = complex(z), complex(zeta)
    den = 1.0 - z * zeta.conjugate()
    if abs(den) <= tol.rank_tol:
        raise DomainError(f"kernel denominator vanishes at z={z}, zeta={zeta}")
    sz = evaluate(r, z, tol)
    sw = sz if z == zeta else evaluate(r, zeta, tol)
    return (np.eye(r.q) - sz @ sw.conj().T) / den


def default_disk_grid(m: int = 21, rmax: float = 0.995) -> np.ndarray:
    """Polar ``m x m`` grid: radii ``linspace(0, rmax, m)`` by ``m`` equispaced angles."""
    radii = np.linspace(0.0, rmax, m)
    angles = 2 * np.pi * np.arange(m) / m
    return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


def default_circle_grid(m: int = 64) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(m) / m)


def certify_schur(s, disk_grid=None, circle_grid=None, tol: Tolerances = DEFAULT_TOL) -> SchurFunction:
    """Set contractivity and innerness flags from grid evaluations.

    Contractive: largest singular value at most ``1 + psd_tol`` on ``disk_grid``.
    Inner: ``||S(t)^* S(t) - I||_F <= residual_tol`` on ``circle_grid``.
    A pole on a grid leaves the corresponding flag unset.
    """
    r = _real(s)
    disk = default_disk_grid() if disk_grid is None else np.asarray(disk_grid, dtype=complex).ravel()
    circ = default_circle_grid() if circle_grid is None else np.asarray(circle_grid, dtype=complex).ravel()
    max_norm = 0.0
    try:
        for z in disk:
            v = evaluate(r, z, tol)
            if v.size:
                max_norm = max(max_norm, float(np.linalg.norm(v, 2)))
    except PoleError:
        max_norm = float("inf")
    inner_res = 0.0
    try:
        eye = np.eye(r.p)
        for t in circ:
            v = evaluate(r, t, tol)
            inner_res = max(inner_res, fro(v.conj().T @ v - eye))
    except PoleError:
        inner_res = float("inf")
    return SchurFunction(
        realization=r,
        certified_contractive=bool(max_norm <= 1.0 + tol.psd_tol),
        certified_inner=bool(inner_res <= tol.residual_tol and max_norm <= 1.0 + tol.psd_tol),
        disk_grid=tuple(disk.tolist()),
        circle_grid=tuple(circ.tolist()),
        max_norm=max_norm,
        inner_residual=inner_res,
    )


def series(r1: Realization, r2: Realization) -> Realization:
    """Realization of the product ``R1(z) R2(z)``."""
    if r1.p != r2.q:
        raise DimensionError(f"cannot multiply {r1.q}x{r1.p} by {r2.q}x{r2.p}")
    n1, n2 = r1.n, r2.n
    a = np.block([[r1.A, r1.B @ r2.C], [np.zeros((n2, n1)), r2.A]])
    b = np.vstack([r1.B @ r2.D, r2.B])
    c = np.hstack([r1.C, r1.D @ r2.C])
    return Realization(a, b, c, r1.D @ r2.D)


def parallel(r1: Realization, r2: Realization) -> Realization:
    """Realization of the sum ``R1(z) + R2(z)``."""
    if r1.D.shape != r2.D.shape:
        raise DimensionError(f"cannot add {r1.D.shape} and {r2.D.shape}")
    n1, n2 = r1.n, r2.n
    a = np.block([[r1.A, np.zeros((n1, n2))], [np.zeros((n2, n1)), r2.A]])
    return Realization(a, np.vstack([r1.B, r2.B]), np.hstack([r1.C, r2.C]), r1.D + r2.D)


def scale(r: Realization, c: complex) -> Realization:
    return Realization(r.A, r.B, c * r.C, c * r.D)


def mul_const(r: Realization, left=None, right=None) -> Realization:
    """Realization of ``L R(z) M`` for constant matrices ``L`` and ``M``."""
    b, c, d = r.B, r.C, r.D
    if left is not None:
        left = as_matrix(left, cols=r.q, name="left")
        c, d = left @ c, left @ d
    if right is not None:
        right = as_matrix(right, rows=r.p, name="right")
        b, d = b @ right, d @ right
    return Realization(r.A, b, c, d)


def select(r: Realization, rows=slice(None), cols=slice(None)) -> Realization:
    """Sub-block of outputs ``rows`` and inputs ``cols``."""
    return Realization(r.A, r.B[:, cols], r.C[rows, :], r.D[rows, cols])


def compose_disk_automorphism(r: Realization, w: complex, tol: Tolerances = DEFAULT_TOL) -> Realization:
    """Realization of ``R(psi(z))`` with ``psi(z) = (w - z) / (1 - conj(w) z)``.

    ``psi`` is the involutive disk automorphism exchanging ``0`` and ``w``.
    """
    w = complex(w)
    if abs(w) >= 1.0:
        raise DomainError(f"automorphism point must lie in the open disk, got {w}")
    k = resolvent(r.A, w, tol)
    s = np.sqrt(1.0 - abs(w) ** 2)
    a = (w.conjugate() * np.eye(r.n) - r.A) @ k
    return Realization(a, s * (k @ r.B), -s * (r.C @ k), r.D + w * (r.C @ k @ r.B))


def automorphism_weight(w: complex, dim: int = 1) -> Realization:
    """Realization of ``sqrt(1 - |w|^2) / (1 - conj(w) z)`` times ``I_dim``."""
    w = complex(w)
    s = np.sqrt(1.0 - abs(w) ** 2)
    eye = np.eye(dim)
    return Realization(w.conjugate() * eye, w.conjugate() * s * eye, eye, s * eye)


def h2_inner_product(f: Realization, g: Realization, tol: Tolerances = DEFAULT_TOL) -> complex:
    """``<f, g>`` in H^2, i.e. ``sum_n trace(g_n^* f_n)`` over Taylor coefficients.

    Computed exactly: the tail ``sum_{n>=1}`` equals ``trace(B_g^* X B_f)`` with
    ``X - A_g^* X A_f = C_g^* C_f``.
    """
    if f.D.shape != g.D.shape:
        raise DimensionError(f"shape mismatch {f.D.shape} vs {g.D.shape}")
    if not (f.stable and g.stable):
        raise UnstableError(f"H2 inner product needs stable realizations (rho = {f.rho:.4g}, {g.rho:.4g})")
    val = np.trace(g.D.conj().T @ f.D)
    if f.n and g.n:
        x = solve_stein_sylvester(g.A.conj().T, f.A, g.C.conj().T @ f.C, tol)
        val = val + np.trace(g.B.conj().T @ x @ f.B)
    return complex(val)


def h2_norm(f: Realization, tol: Tolerances = DEFAULT_TOL) -> float:
    return float(np.sqrt(max(0.0, h2_inner_product(f, f, tol).real)))


def blaschke(zeros, phase: complex = 1.0, tol: Tolerances = DEFAULT_TOL) -> SchurFunction:
    """Finite Blaschke product ``phase * prod_k (z - a_k) / (1 - conj(a_k) z)``.

    Built as a cascade of degree-one unitary colligations, so the realization
    matrix is unitary and the state dimension equals the number of zeros.
    """
    zeros = [complex(a) for a in np.atleast_1d(np.asarray(zeros, dtype=complex))]
    phase = complex(phase)
    if abs(abs(phase) - 1.0) > tol.residual_tol:
        raise DomainError(f"phase must be unimodular, got |phase| = {abs(phase)}")
    for a in zeros:
        if not abs(a) < 1.0:
            raise DomainError(f"Blaschke zero {a} is not inside the open unit disk")
    r = constant([[1.0]])
    for a in reversed(zeros):
        s = np.sqrt(1.0 - abs(a) ** 2)
        r = series(Realization([[a.conjugate()]], [[s]], [[s]], [[-a]]), r)
    r = Realization(r.A, r.B, phase * r.C, phase * r.D)
    return certify_schur(r, tol=tol)
