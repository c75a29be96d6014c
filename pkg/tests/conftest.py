"""Shared generators for random admissible data sets."""
from __future__ import annotations

import numpy as np
import pytest

from dbrinterp.numlin import sqrt_psd
from dbrinterp.oap import oap_to_aip
from dbrinterp.rational import Realization


def haar_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_schur(rng, ns, p, q, inner=False):
    """Corner of a Haar unitary: a contractive colligation, hence a Schur function."""
    m = max(p, q) if not inner else p
    if inner and p != q:
        raise ValueError("inner test functions are square here")
    u = haar_unitary(rng, ns + m)
    if not inner:
        u = 0.97 * u
    return Realization(u[:ns, :ns], u[:ns, ns:ns + p], u[ns:ns + q, :ns], u[ns:ns + q, ns:ns + p])


def random_stable(rng, n, rho=0.8):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r = max(abs(np.linalg.eigvals(a)))
    return a * (rho * rng.uniform(0.3, 1.0) / r)


MAX_COND = 1e8


def random_instance(rng, n=None, p=None, q=None, ns=None, fill=0.8):
    """``(data, S)`` for a random left-tangential problem, with ``x`` inside the solvable set.

    ``(T, E)`` is redrawn until ``cond(P) <= MAX_COND``; beyond that the
    interpolation residual is dominated by ``eps * cond(P)``.
    """
    n = n or int(rng.integers(1, 9))
    p = p or int(rng.integers(1, 4))
    q = q or int(rng.integers(1, 4))
    ns = ns if ns is not None else int(rng.integers(0, 4))
    s = random_schur(rng, ns, p, q)
    while True:
        t = random_stable(rng, n)
        e = rng.standard_normal((q, n)) + 1j * rng.standard_normal((q, n))
        data0 = oap_to_aip(s, e, t, np.zeros(n))
        pm = data0.gram()
        lam = np.linalg.eigvalsh(pm)
        if lam[0] > 0 and lam[-1] <= MAX_COND * lam[0]:
            break
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x = fill * sqrt_psd(pm) @ (u / np.linalg.norm(u))
    return data0.with_x(x), s


def disk_points(rng, k, rmax=0.9):
    r = rmax * np.sqrt(rng.uniform(0, 1, k))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, k))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
