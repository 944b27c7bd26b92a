import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dmdrom import linalg
from dmdrom.errors import DomainError, PreconditionError

from conftest import random_orthonormal

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
shapes = st.tuples(st.integers(1, 8), st.integers(1, 8))


def test_svd_identity():
    f = linalg.thin_svd(np.eye(2))
    np.testing.assert_allclose(f.singular_values, [1.0, 1.0])


def test_svd_diagonal():
    f = linalg.thin_svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(f.singular_values, [3.0, 1.0])


def test_svd_reconstruction(rng):
    m = rng.standard_normal((6, 4))
    f = linalg.thin_svd(m)
    assert f.left.shape == (6, 4) and f.right_t.shape == (4, 4)
    assert np.linalg.norm(f.reconstruct() - m) / np.linalg.norm(m) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite)))
def test_svd_invariants(m):
    f = linalg.thin_svd(m)
    k = min(m.shape)
    assert f.singular_values.size == k
    assert np.max(np.abs(f.left.T @ f.left - np.eye(k))) <= 1e-10
    assert np.max(np.abs(f.right_t @ f.right_t.T - np.eye(k))) <= 1e-10
    assert np.all(np.diff(f.singular_values) <= 0)
    assert np.linalg.norm(f.reconstruct() - m) <= 1e-10 * max(np.linalg.norm(m), 1e-300)


def test_svd_rejects_non_finite():
    with pytest.raises(DomainError):
        linalg.thin_svd(np.array([[1.0, np.nan]]))


@pytest.mark.parametrize("s, threshold, expected", [
    ([9.0, 1.0], 0.9, 1),
    ([9.0, 1.0], 0.91, 2),
    ([5.0], 0.9999, 1),
    ([9.0, 1.0], 1.0, 2),
])
def test_truncate_by_energy(s, threshold, expected):
    assert linalg.truncate_by_energy(np.array(s), threshold) == expected


def test_truncate_sum_of_squares():
    # squares: 9/10 meets 0.9; plain sum: 3/4 does not
    assert linalg.truncate_by_energy(np.array([3.0, 1.0]), 0.9, "sum_of_squares") == 1
    assert linalg.truncate_by_energy(np.array([3.0, 1.0]), 0.9, "sum") == 2


def test_truncate_zero_values():
    with pytest.raises(DomainError):
        linalg.truncate_by_energy(np.zeros(3), 0.5)


def test_truncate_clamps_roundoff_tail():
    assert linalg.truncate_by_energy(np.array([1.0, 1e-15]), 1.0) == 1


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.0, 100.0), min_size=1, max_size=12).filter(lambda v: max(v) > 1e-3),
    st.floats(1e-3, 1.0),
    st.floats(1e-3, 1.0),
)
def test_truncate_monotone(values, t1, t2):
    s = np.sort(np.array(values))[::-1]
    lo, hi = sorted((t1, t2))
    assert linalg.truncate_by_energy(s, lo) <= linalg.truncate_by_energy(s, hi)


def test_truncate_brute_force(rng):
    for _ in range(50):
        s = np.sort(rng.exponential(size=rng.integers(1, 10)))[::-1]
        tau = rng.uniform(0.05, 1.0)
        total = s.sum()
        want = next(L for L in range(1, s.size + 1) if s[:L].sum() / total >= tau - 1e-15)
        assert linalg.truncate_by_energy(s, tau) == want


def test_pinv_diagonal():
    np.testing.assert_allclose(linalg.pseudoinverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


def test_pinv_zero():
    out = linalg.pseudoinverse(np.zeros((3, 2)))
    assert out.shape == (2, 3) and not out.any()


def test_pinv_rank_one_moore_penrose(rng):
    a, b = rng.standard_normal(5), rng.standard_normal(3)
    x = np.outer(a, b)
    xp = linalg.pseudoinverse(x)
    tol = 1e-12
    assert np.linalg.norm(x @ xp @ x - x) <= tol * np.linalg.norm(x)
    assert np.linalg.norm(xp @ x @ xp - xp) <= tol * np.linalg.norm(xp)
    assert np.linalg.norm((x @ xp).T - x @ xp) <= tol
    assert np.linalg.norm((xp @ x).T - xp @ x) <= tol
    np.testing.assert_allclose(xp, np.outer(b, a) / (a @ a * (b @ b)), rtol=1e-12)


def test_pinv_identity_random(rng):
    for _ in range(20):
        x = rng.standard_normal((7, 3)) @ rng.standard_normal((3, 5))
        xp = linalg.pseudoinverse(x)
        assert np.linalg.norm(x @ xp @ x - x) <= 1e-9 * np.linalg.norm(x)


def test_angles_identical(rng):
    u = random_orthonormal(rng, 6, 3)
    assert np.all(linalg.principal_angles(u, u) <= 1e-12)


def test_angles_orthogonal_lines():
    e = np.eye(3)
    np.testing.assert_allclose(linalg.principal_angles(e[:, :1], e[:, 1:2]), [np.pi / 2])


def test_angles_quarter_pi():
    e = np.eye(3)
    v = ((e[:, 0] + e[:, 1]) / np.sqrt(2))[:, None]
    np.testing.assert_allclose(linalg.principal_angles(e[:, :1], v), [np.pi / 4], atol=1e-15)


def test_angles_small_angle_precision():
    alpha = 1e-9
    u = np.array([[1.0], [0.0]])
    v = np.array([[np.cos(alpha)], [np.sin(alpha)]])
    np.testing.assert_allclose(linalg.principal_angles(u, v), [alpha], rtol=1e-6)


def test_angles_precondition():
    with pytest.raises(PreconditionError):
        linalg.principal_angles(np.array([[2.0], [0.0]]), np.array([[1.0], [0.0]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 10), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_angles_symmetric_and_match_scipy(n, k1, k2, seed):
    rng = np.random.default_rng(seed)
    k1, k2 = min(k1, n), min(k2, n)
    u, v = random_orthonormal(rng, n, k1), random_orthonormal(rng, n, k2)
    a, b = linalg.principal_angles(u, v), linalg.principal_angles(v, u)
    assert np.max(np.abs(a - b)) <= 1e-10
    assert np.all(np.diff(a) >= 0) and np.all((a >= 0) & (a <= np.pi / 2))
    np.testing.assert_allclose(a, np.sort(scipy.linalg.subspace_angles(u, v)), atol=1e-10)


def test_projection_error_identity(rng):
    for _ in range(100):
        m, n = rng.integers(3, 15, size=2)
        s = rng.standard_normal((m, n))
        f = linalg.thin_svd(s)
        L = int(rng.integers(1, min(m, n) + 1))
        ul = f.left[:, :L]
        lhs = np.linalg.norm(s - ul @ (ul.T @ s))
        rhs = np.sqrt(np.sum(f.singular_values[L:] ** 2))
        assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(s) * max(m, n)
