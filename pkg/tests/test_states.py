import numpy as np
import pytest

from renyidecomp.linalg import ValidationError, partial_trace
from renyidecomp.mutual import mutual_info
from renyidecomp.states import (
    DensityMatrix,
    MeasurementPair,
    fourier_basis,
    op_vec,
    overlap_c,
    pinch_measure,
    purify,
    random_state,
    stinespring_dilate,
)


def test_max_entangled_marginals():
    rho = random_state("max_entangled", (2, 2), 5)
    assert rho.is_pure()
    assert np.allclose(rho.marginal(0).matrix, np.eye(2) / 2)
    assert np.allclose(rho.marginal(1).matrix, np.eye(2) / 2)


def test_product_has_no_correlation():
    rho = random_state("product", (2, 3), 11)
    for a in (0.7, 1.0, 2.0):
        assert abs(mutual_info(rho, a)) < 1e-6


def test_hs_gap_self_consistency():
    # mean eigenvalue gap of HS qubits: two independent halves of the sample agree,
    # and both agree with a direct Ginibre construction
    gaps = np.array([np.ptp(random_state("hs_mixed", (2,), s).eigenvalues()) for s in range(10_000)])
    rng = np.random.default_rng(0)
    direct = []
    for _ in range(10_000):
        G = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        M = G @ G.conj().T
        direct.append(np.ptp(np.linalg.eigvalsh(M / np.trace(M).real)))
    assert abs(gaps.mean() - np.mean(direct)) < 0.01
    assert abs(gaps[:5000].mean() - gaps[5000:].mean()) < 0.015


def test_sampling_is_deterministic():
    a = random_state("hs_mixed", (2, 3), 42).matrix
    b = random_state("hs_mixed", (2, 3), 42).matrix
    assert np.array_equal(a, b)


def test_invalid_states():
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([0.5, 0.6]), (2,))
    with pytest.raises(ValidationError):
        DensityMatrix(np.diag([1.5, -0.5]), (2,))
    with pytest.raises(ValidationError):
        random_state("max_entangled", (2, 3), 0)


def test_purify():
    bell = purify(DensityMatrix(np.eye(2) / 2, (2,)))
    assert bell.is_pure() and bell.dims == (2, 2)
    assert np.allclose(bell.marginal(0).matrix, np.eye(2) / 2)
    v = np.array([0.6, 0.8])
    pure = DensityMatrix(np.outer(v, v), (2,))
    out = purify(pure)
    assert out.is_pure()
    assert np.allclose(out.marginal(0).matrix, pure.matrix)
    rho = random_state("hs_mixed", (2, 3), 9)
    p = purify(rho)
    assert np.allclose(partial_trace(p.matrix, p.dims, [0, 1]), rho.matrix)


def test_op_vec():
    v = np.kron([1, 0], [0, 1])
    X = op_vec(v, (2, 2), inputs=[0]).matrix
    assert np.allclose(X, np.outer([0, 1], [1, 0]))
    assert np.allclose(op_vec(np.array([1, 0, 0, 1]), (2, 2), inputs=[0]).matrix, np.eye(2))
    psi = np.random.default_rng(1).normal(size=6) + 0j
    X = op_vec(psi, (2, 3), inputs=[0]).matrix
    assert np.trace(X.conj().T @ X).real == pytest.approx(np.vdot(psi, psi).real)


def test_pinching():
    rho = DensityMatrix(np.diag([0.3, 0.7]), (2,))
    assert np.allclose(pinch_measure(rho, np.eye(2)).matrix, rho.matrix)
    plus = np.ones(2) / np.sqrt(2)
    assert np.allclose(pinch_measure(DensityMatrix(np.outer(plus, plus), (2,)), np.eye(2)).matrix, np.eye(2) / 2)
    bell = random_state("max_entangled", (2, 2), 0)
    assert np.allclose(pinch_measure(bell, np.eye(2), 0).matrix, np.diag([0.5, 0, 0, 0.5]))


def test_stinespring():
    rho = DensityMatrix(np.diag([0.3, 0.7]), (2,))
    out = stinespring_dilate(rho, np.eye(2))
    off = out.matrix.reshape(2, 2, 2, 2)
    assert np.allclose(off[0, 1], 0) and np.allclose(off[1, 0], 0)
    plus = np.ones(2) / np.sqrt(2)
    out = stinespring_dilate(DensityMatrix(np.outer(plus, plus), (2,)), np.eye(2))
    assert out.is_pure()
    assert np.allclose(out.marginal(0).matrix, np.eye(2) / 2)
    pure = random_state("haar_pure", (2, 2), 3)
    dil = stinespring_dilate(pure, fourier_basis(2), 0)
    assert dil.is_pure()
    assert np.allclose(dil.marginal(0, 2).matrix, dil.marginal(1, 2).matrix)


def test_overlap():
    assert overlap_c(np.eye(3), np.eye(3)) == pytest.approx(1.0)
    assert overlap_c(np.eye(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2)) == pytest.approx(0.5)
    for d in (3, 5):
        assert overlap_c(np.eye(d), fourier_basis(d)) == pytest.approx(1 / d)
    assert MeasurementPair.mub(2).overlap == 0.5
    assert 1 / 3 <= MeasurementPair.haar(3, 1).overlap <= 1
