from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbrinterp.aipdata import check_admissible, compute_P_oap, interp_functional, obs_gramian
from dbrinterp.errors import DomainError, PreconditionError, UnsolvableError
from dbrinterp.oap import build_N, cf_data, h2_solve, inner_kernel_residual, np_data, oap_to_aip
from dbrinterp.rational import Realization, constant, evaluate, h2_norm, parallel, series, taylor_coeffs

from conftest import disk_points, random_schur, random_stable

SHIFT = Realization(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)), np.zeros((1, 1)))


def scalar(r, z):
    return complex(evaluate(r, z)[0, 0])


def least_norm_poly(rows, x):
    """Minimal-norm coefficient vector of a degree-200 polynomial meeting ``rows @ c = x``."""
    return np.linalg.pinv(rows) @ np.asarray(x, dtype=complex)


def np_rows(nodes, deg=200):
    return np.array([[w**k for k in range(deg + 1)] for w in nodes], dtype=complex)


def cf_rows(w, m, deg=200):
    return np.array([[comb(k, j) * w ** (k - j) if k >= j else 0 for k in range(deg + 1)] for j in range(m)], dtype=complex)


def h2_distance_to_poly(f, c):
    fc = np.array([v[0, 0] for v in taylor_coeffs(f, len(c) - 1)])
    head = np.sum(np.abs(fc - c) ** 2)
    tail = max(0.0, h2_norm(f) ** 2 - np.sum(np.abs(fc) ** 2))
    return float(np.sqrt(head + tail))


# --- build_N ------------------------------------------------------------------


def test_N_examples():
    e, t = np.eye(1), np.array([[0.5]])
    assert np.all(build_N(constant(np.zeros((1, 1))), e, t) == 0)
    d = np.array([[0.3 + 0.2j, -0.1]])
    np.testing.assert_allclose(build_N(constant(d), np.eye(1), t), d.conj().T @ np.eye(1), atol=1e-15)
    assert build_N(SHIFT, e, t)[0, 0] == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_N_matches_truncated_sum(seed):
    g = np.random.default_rng(seed)
    n, p, q = (int(v) for v in g.integers(1, 4, 3))
    s = random_schur(g, int(g.integers(0, 3)), p, q)
    t = random_stable(g, n, 0.8)
    e = g.standard_normal((q, n)) + 1j * g.standard_normal((q, n))
    acc, tk = np.zeros((p, n), dtype=complex), np.eye(n)
    for sk in taylor_coeffs(s, 300):
        acc += sk.conj().T @ e @ tk
        tk = tk @ t
    np.testing.assert_allclose(build_N(s, e, t), acc, atol=1e-9)


# --- oap_to_aip -----------------------------------------------------------------


def test_szego_reduces_to_point_evaluation():
    e, t, x = np_data([0.5], [1.0])
    d = oap_to_aip(constant(np.zeros((1, 1))), e, t, x)
    f = Realization(np.array([[0.3]]), np.array([[1.0]]), np.ones((1, 1)), np.array([[0.2]]))
    assert interp_functional(d, f)[0, 0] == pytest.approx(scalar(f, 0.5))


def test_cf_at_zero_gram_identity():
    e, t, x = cf_data(0.0, [1.0, 2.0])
    d = oap_to_aip(constant(np.zeros((1, 1))), e, t, x)
    np.testing.assert_allclose(compute_P_oap(d), np.eye(2), atol=1e-15)
    f = Realization(np.array([[0.5]]), np.array([[1.0]]), np.ones((1, 1)), np.array([[3.0]]))
    np.testing.assert_allclose(interp_functional(d, f)[:, 0], [3.0, 1.0])


def test_oap_admissible_for_any_x(rng):
    s = random_schur(rng, 2, 2, 1)
    e, t, _ = np_data([0.2, -0.5j], [0, 0])
    for x in ([0, 0], [5, 7j]):
        assert check_admissible(oap_to_aip(s, e, t, x)).admissible


# --- H2 solver ------------------------------------------------------------------


def test_szego_h2():
    e, t, x = np_data([0.5], [1.0])
    sol = h2_solve(e, t, x)
    for z in disk_points(np.random.default_rng(0), 10):
        assert scalar(sol.f_min, z) == pytest.approx(0.75 / (1 - z / 2), abs=1e-12)
        b = scalar(sol.B.realization, z)
        ref = (z - 0.5) / (1 - z / 2)
        assert abs(abs(b) - abs(ref)) < 1e-12
    phase = scalar(sol.B.realization, 0.0) / -0.5
    assert abs(abs(phase) - 1) < 1e-12
    assert sol.budget == pytest.approx(0.5)
    assert sol.B.certified_inner


def test_cf_order_two_gives_z_squared():
    e, t, x = cf_data(0.0, [0.3, -0.2j])
    sol = h2_solve(e, t, x)
    np.testing.assert_allclose(sol.P, np.eye(2), atol=1e-15)
    for z in (0.1, 0.4j, -0.6 + 0.2j):
        assert scalar(sol.f_min, z) == pytest.approx(0.3 - 0.2j * z)
        assert abs(scalar(sol.B.realization, z)) == pytest.approx(abs(z) ** 2)


def test_zero_target():
    e, t, x = np_data([0.5, -0.3], [0, 0])
    sol = h2_solve(e, t, x)
    assert h2_norm(sol.f_min) == 0.0 and sol.budget == pytest.approx(1.0)


def test_h2_unsolvable():
    with pytest.raises(UnsolvableError) as exc:
        h2_solve(*np_data([0.5], [2.0]))
    assert exc.value.margin == pytest.approx(4 / 3 - 4)


def test_h2_singular_gram():
    with pytest.raises(PreconditionError):
        h2_solve(np.array([[1.0, 1.0]]), np.diag([0.5, 0.5]), [0.1, 0.1])


def test_np_data_errors():
    with pytest.raises(DomainError):
        np_data([0.5, 0.5], [1, 1])
    with pytest.raises(DomainError):
        np_data([1.0], [0.1])
    with pytest.raises(DomainError):
        cf_data(1.2, [0.1])


def test_two_node_gram_is_pick_type():
    w = np.array([0.3 + 0.1j, -0.4j])
    e, t, _ = np_data(w, [0, 0])
    ref = np.array([[1 / (1 - wi * np.conj(wj)) for wj in w] for wi in w])
    np.testing.assert_allclose(obs_gramian(e, t), ref, atol=1e-14)


def test_cf_at_zero_gram():
    e, t, _ = cf_data(0.0, [0, 0, 0, 0])
    np.testing.assert_allclose(obs_gramian(e, t), np.eye(4), atol=1e-15)


def random_h2_problem(g):
    if g.uniform() < 0.5:
        k = int(g.integers(1, 4))
        return np_data(disk_points(g, k, 0.8), 0.2 * (g.standard_normal(k) + 1j * g.standard_normal(k)))
    m = int(g.integers(1, 4))
    return cf_data(complex(disk_points(g, 1, 0.7)[0]), 0.2 * (g.standard_normal(m) + 1j * g.standard_normal(m)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_inner_B_properties(seed):
    g = np.random.default_rng(seed)
    e, t, x = random_h2_problem(g)
    try:
        sol = h2_solve(e, t, x)
    except UnsolvableError:
        return
    for tt in np.exp(2j * np.pi * np.arange(64) / 64):
        assert abs(abs(scalar(sol.B.realization, tt)) - 1) <= 1e-9
    pts = disk_points(g, 60, 0.9)
    for z, w in zip(pts[:30], pts[30:]):
        assert inner_kernel_residual(sol, e, t, z, w) <= 1e-8
    assert h2_norm(sol.f_min) ** 2 == pytest.approx(float(np.real(x.conj().T @ np.linalg.solve(sol.P, x))[0, 0]), abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_B_h_annihilated(seed):
    g = np.random.default_rng(seed)
    e, t, x = random_h2_problem(g)
    try:
        sol = h2_solve(e, t, x)
    except UnsolvableError:
        return
    d = oap_to_aip(constant(np.zeros((1, 1))), e, t, x)
    for _ in range(10):
        n = int(g.integers(1, 3))
        h = Realization(random_stable(g, n), g.standard_normal((n, 1)), g.standard_normal((1, n)), g.standard_normal((1, 1)))
        f = parallel(sol.f_min, series(sol.B.realization, h))
        np.testing.assert_allclose(interp_functional(d, f), d.x, atol=1e-8)


@pytest.mark.parametrize(
    "problem",
    [
        ("np", [0.5], [0.8]),
        ("np", [0.3 + 0.2j], [0.1 - 0.4j]),
        ("np", [0.5, -0.4j], [0.3, 0.2 + 0.1j]),
        ("np", [0.2, 0.6 * np.exp(2j)], [-0.2j, 0.4]),
        ("cf", 0.0, [0.3, 0.2, -0.1]),
        ("cf", 0.4 - 0.1j, [0.2, 0.1j]),
        ("cf", -0.3j, [0.1, 0.2, 0.05]),
    ],
)
def test_truncated_taylor_oracle(problem):
    kind, where, vals = problem
    if kind == "np":
        e, t, x = np_data(where, vals)
        rows = np_rows(where)
    else:
        e, t, x = cf_data(where, vals)
        rows = cf_rows(where, len(vals))
    sol = h2_solve(e, t, x)
    c = least_norm_poly(rows, vals)
    assert h2_distance_to_poly(sol.f_min, c) <= 1e-5
