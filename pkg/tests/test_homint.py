import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbrinterp.errors import DomainError
from dbrinterp.homint import (
    coinner_residual,
    h2_inner_sampled,
    hankel_rank,
    intersection_space,
    model_space,
    taylor_from_samples,
)
from dbrinterp.numlin import range_basis
from dbrinterp.rational import blaschke, constant, evaluate, series

from conftest import disk_points

DEG = 10


def monomial(a):
    return blaschke([0.0] * a)


def scalar(r, z):
    return complex(evaluate(r, z)[0, 0])


def brute_force_intersection(a, b, deg=DEG):
    """Orthonormal basis (monomial coordinates up to ``deg``) of span{1..z^(a-1)} meet span{z^b..z^deg}."""
    ks = np.eye(deg + 1)[:, :a]
    bh = np.eye(deg + 1)[:, b:]
    # x in both iff x = ks u = bh v, i.e. [ks, -bh] [u; v] = 0
    _, ker = range_basis(np.hstack([ks, -bh]))
    return range_basis(ks @ ker[:a, :])[0] if ker.shape[1] else np.zeros((deg + 1, 0))


def element_coeffs(space, zeta, v, m=48):
    return taylor_from_samples(space.element(zeta, v), m, radius=1.0, npts=128)[:, 0]


# --- model spaces -----------------------------------------------------------------


def test_model_space_z():
    ms = model_space(blaschke([0.0]))
    np.testing.assert_allclose(ms.T, [[0.0]], atol=1e-15)
    assert abs(abs(ms.E[0, 0]) - 1) < 1e-15


def test_model_space_z_squared():
    ms = model_space(monomial(2))
    assert ms.dim == 2
    for f in ms.basis:
        c = taylor_from_samples(lambda z: evaluate(f, z), 6)[:, 0]
        assert np.all(np.abs(c[2:]) < 1e-12)
    # Jordan structure: T nilpotent of index 2, E T^0 != 0
    np.testing.assert_allclose(ms.T @ ms.T, 0, atol=1e-14)
    assert np.linalg.norm(ms.T) == pytest.approx(1.0)
    assert np.linalg.norm(ms.E) == pytest.approx(1.0)


def test_model_space_single_zero():
    ms = model_space(blaschke([0.5]))
    np.testing.assert_allclose(ms.T, [[0.5]], atol=1e-15)
    f = ms.basis[0]
    for z in (0.0, 0.3, -0.4j):
        assert abs(scalar(f, z)) == pytest.approx(np.sqrt(0.75) / abs(1 - z / 2))


def test_model_space_rejects_non_inner():
    with pytest.raises(DomainError):
        model_space(constant(np.array([[0.5]])))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_model_space_structure(seed):
    g = np.random.default_rng(seed)
    zeros = disk_points(g, int(g.integers(1, 5)), 0.85)
    ms = model_space(blaschke(zeros))
    # eigenvalues of the backward shift on K_B are the conjugated zeros
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(ms.T)), np.sort_complex(np.conj(zeros)), atol=1e-8)
    # orthonormal basis, E = evaluation at 0, T = backward shift
    gram = np.array([[h2_inner_sampled(lambda z: evaluate(fi, z), lambda z: evaluate(fj, z)) for fj in ms.basis] for fi in ms.basis])
    np.testing.assert_allclose(gram, np.eye(ms.dim), atol=1e-9)
    np.testing.assert_allclose([scalar(f, 0.0) for f in ms.basis], ms.E[0], atol=1e-12)
    z = 0.37 - 0.21j
    vals = np.array([scalar(f, z) for f in ms.basis])
    np.testing.assert_allclose((vals - ms.E[0]) / z, vals @ ms.T, atol=1e-10)


# --- helpers ----------------------------------------------------------------------


def test_hankel_rank_and_coinner():
    assert hankel_rank(monomial(3).realization) == 3
    assert hankel_rank(constant(np.eye(1))) == 0
    assert coinner_residual(blaschke([0.2, -0.5j]).realization) < 1e-12
    assert coinner_residual(constant(np.array([[0.5]]))) > 0.1


# --- intersections: polynomial oracle --------------------------------------------


@pytest.mark.parametrize("a", range(0, 7))
@pytest.mark.parametrize("b", range(1, 7))
def test_monomial_intersection(a, b):
    sp = intersection_space(monomial(a), monomial(b))
    oracle = brute_force_intersection(a, b)
    assert sp.parameter_space_dim == oracle.shape[1] == max(0, a - b)
    proj = oracle @ oracle.conj().T
    sampled = []
    for zeta in [0.0, *disk_points(np.random.default_rng(a * 7 + b), 7, 0.6)]:
        for k in range(sp.colligation.ds):
            c = element_coeffs(sp, zeta, np.eye(sp.colligation.ds)[:, k])
            assert np.all(np.abs(c[DEG + 1:]) <= 1e-8)
            head = c[: DEG + 1]
            assert np.linalg.norm(head - proj @ head) <= 1e-8
            sampled.append(head)
    if sampled:
        rank = np.linalg.matrix_rank(np.array(sampled), tol=1e-8)
        assert rank == oracle.shape[1]
    assert sp.isometry_residual is not None and sp.isometry_residual <= 1e-7


def test_s_z2_b_z_contains_z():
    sp = intersection_space(monomial(2), monomial(1))
    c = element_coeffs(sp, 0.0, np.ones(sp.colligation.ds))
    assert abs(c[1]) > 1e-3
    assert np.all(np.abs(np.delete(c, 1)) < 1e-10)


def test_s_equals_b_is_trivial():
    b = blaschke([0.3, -0.2 + 0.4j])
    sp = intersection_space(b, b)
    assert sp.parameter_space_dim == 0


def test_zero_S_gives_full_BH2():
    b = blaschke([0.5])
    sp = intersection_space(constant(np.zeros((1, 1))), b)
    assert sp.parameter_space_dim is None
    for z in disk_points(np.random.default_rng(5), 8):
        g = sp.G(z)
        assert abs(abs(g[0, 0]) - abs(scalar(b.realization, z))) < 1e-10


# --- intersections: random inner S, B ---------------------------------------------


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_elements_lie_in_KS_and_BH2(seed):
    g = np.random.default_rng(seed)
    zs = disk_points(g, int(g.integers(2, 5)), 0.7)
    zb = disk_points(g, int(g.integers(1, 3)), 0.7)
    s, b = blaschke(zs), blaschke(zb)
    sp = intersection_space(s, b)
    assert sp.isometry_residual <= 1e-7
    if sp.colligation.ds == 0:
        return
    f = sp.element(0.2 - 0.1j, np.ones(sp.colligation.ds))
    # in B H^2: vanishes at the zeros of B
    for w in zb:
        assert abs(f(w)[0, 0]) <= 1e-8
    # in K_S: orthogonal to S z^k
    for k in range(6):
        sk = series(s.realization, monomial(k).realization)
        assert abs(h2_inner_sampled(f, lambda z: evaluate(sk, z))) <= 1e-8
