import numpy as np
import pytest

from renyidecomp.linalg import (
    ValidationError,
    eig_hermitian,
    mat_power_on_support,
    partial_trace,
    schatten_norm,
    support_relation,
    tensor_product,
)


def _bisect_roots(H, lo, hi, n=4000):
    """Eigenvalues as sign changes of det(H - x I), refined by bisection."""
    def f(x):
        return np.linalg.det(H - x * np.eye(len(H))).real

    xs = np.linspace(lo, hi, n)
    vals = [f(x) for x in xs]
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            for _ in range(80):
                m = (a + b) / 2
                if f(a) * f(m) <= 0:
                    b = m
                else:
                    a = m
            roots.append((a + b) / 2)
    return np.array(roots)


def test_eig_trivial_cases():
    assert np.allclose(eig_hermitian(np.eye(3)).values, [1, 1, 1])
    assert np.allclose(eig_hermitian(np.diag([0.25, 0.75])).values, [0.25, 0.75])


def test_eig_matches_bisection():
    rng = np.random.default_rng(4)
    G = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = (G + G.conj().T) / 2
    bound = np.abs(H).sum()
    roots = _bisect_roots(H, -bound, bound)
    assert len(roots) == 4
    assert np.allclose(np.sort(eig_hermitian(H).values), roots, atol=1e-8)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_powers_on_support():
    assert np.allclose(mat_power_on_support(np.eye(2), -0.5), np.eye(2))
    assert np.allclose(mat_power_on_support(np.diag([4.0, 0.0]), 0.5), np.diag([2.0, 0.0]))
    assert np.allclose(mat_power_on_support(np.diag([0.25, 0.75]), -1), np.diag([4.0, 4 / 3]))


def test_schatten_norms():
    for d in (1, 2, 5):
        assert schatten_norm(np.eye(d), 2) == pytest.approx(np.sqrt(d))
    assert schatten_norm(np.diag([3.0, 4.0]), 1) == pytest.approx(7.0)
    assert schatten_norm(np.eye(2), 0.5) == pytest.approx(4.0)
    X = np.random.default_rng(1).normal(size=(3, 2))
    s = np.linalg.svd(X, compute_uv=False)
    assert schatten_norm(X, 3) == pytest.approx(np.sum(s ** 3) ** (1 / 3))


def test_tensor_product():
    assert np.allclose(tensor_product(np.eye(2), np.eye(3)), np.eye(6))
    assert np.allclose(tensor_product(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))
    rng = np.random.default_rng(2)
    a, b = rng.random((2, 2)), rng.random((3, 3))
    assert np.trace(tensor_product(a, b)) == pytest.approx(np.trace(a) * np.trace(b))


def test_partial_trace():
    rho_a = np.diag([0.3, 0.7])
    sigma_b = np.diag([0.2, 0.5, 0.3])
    assert np.allclose(partial_trace(np.kron(rho_a, sigma_b), (2, 3), [0]), rho_a)
    bell = np.zeros(4)
    bell[[0, 3]] = 1 / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(bell, bell), (2, 2), [1]), np.eye(2) / 2)
    M = np.random.default_rng(3).random((4, 4))
    assert np.allclose(partial_trace(M, (2, 2), [0, 1]), M)


def test_partial_trace_shape_error():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4), (2, 3), [0])


def test_support_relation():
    rho = np.diag([0.4, 0.6])
    assert tuple(support_relation(rho, rho)) == (True, False)
    assert tuple(support_relation(np.diag([1.0, 0]), np.diag([0, 1.0]))) == (False, True)
    assert tuple(support_relation(np.diag([0.5, 0.5]), np.diag([1.0, 0]))) == (False, False)
