import math

import numpy as np
import pytest

from renyidecomp.entropies import cond_entropy, renyi_divergence, renyi_divergence_stack, renyi_entropy
from renyidecomp.linalg import ValidationError
from renyidecomp.states import DensityMatrix, random_state

ORDERS = (0.5, 0.75, 1.0, 1.5, 2.0, 5.0, math.inf)


def _dm(*p):
    return DensityMatrix(np.diag(p), (len(p),))


@pytest.mark.parametrize("a", ORDERS)
def test_divergence_of_equal_arguments(a):
    rho = random_state("hs_mixed", (2, 2), 1)
    assert renyi_divergence(rho, rho, a) == pytest.approx(0, abs=1e-10)


def test_commuting_divergence():
    assert renyi_divergence(_dm(0.5, 0.5), _dm(0.25, 0.75), 2) == pytest.approx(math.log2(4 / 3))
    p, q = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.1, 0.3])
    for a in (0.6, 1.5, 3.0):
        want = math.log2(np.sum(p ** a * q ** (1 - a))) / (a - 1)
        assert renyi_divergence(_dm(*p), _dm(*q), a) == pytest.approx(want)
    assert renyi_divergence(_dm(*p), _dm(*q), 1) == pytest.approx(np.sum(p * np.log2(p / q)))
    assert renyi_divergence(_dm(*p), _dm(*q), math.inf) == pytest.approx(math.log2(np.max(p / q)))


@pytest.mark.parametrize("a", ORDERS)
def test_orthogonal_supports(a):
    assert math.isinf(renyi_divergence(_dm(1, 0), _dm(0, 1), a))


def test_divergence_rejects_bad_order():
    with pytest.raises(ValidationError):
        renyi_divergence(_dm(1, 0), _dm(0.5, 0.5), 0)


def test_stack_matches_scalar():
    rho = random_state("hs_mixed", (2, 2), 3)
    sig = [random_state(k, (2, 2), s).matrix for k in ("hs_mixed", "product", "haar_pure") for s in range(3)]
    for a in (0.6, 1.0, 2.0):
        got = renyi_divergence_stack(rho, np.stack(sig), a)
        want = [renyi_divergence(rho, s, a) for s in sig]
        assert np.allclose(got, want)


@pytest.mark.parametrize("a", ORDERS)
def test_entropy_extremes(a):
    assert renyi_entropy(DensityMatrix(np.eye(3) / 3, (3,)), a) == pytest.approx(math.log2(3))
    assert renyi_entropy(random_state("haar_pure", (3,), 2), a) == pytest.approx(0, abs=1e-9)


def test_entropy_closed_forms():
    rho = _dm(0.75, 0.25)
    assert renyi_entropy(rho, 2) == pytest.approx(math.log2(8 / 5))
    assert renyi_entropy(rho, math.inf) == pytest.approx(math.log2(4 / 3))
    assert renyi_entropy(rho, 0.5) == pytest.approx(2 * math.log2((math.sqrt(3) + 1) / 2))


@pytest.mark.parametrize("a", (0.6, 1.0, 2.0))
def test_product_conditional(a):
    ra, rb = random_state("hs_mixed", (2,), 1), random_state("hs_mixed", (3,), 2)
    rho = DensityMatrix(np.kron(ra.matrix, rb.matrix), (2, 3))
    assert cond_entropy(rho, a, "down") == pytest.approx(renyi_entropy(ra, a), abs=1e-9)
    assert cond_entropy(rho, a, "up") == pytest.approx(renyi_entropy(ra, a), abs=1e-6)


@pytest.mark.parametrize("a", (0.5, 2 / 3, 1.0, 2.0, 5.0))
def test_bell_conditional(a):
    bell = random_state("max_entangled", (2, 2), 0)
    assert cond_entropy(bell, a, "down") == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("a", (0.5, 0.8, 1.0, 2.0, 4.0))
def test_classical_conditional(a):
    # H_down(A|B) of a joint distribution: -(1/(a-1)) log sum_ab p(a,b)^a p(b)^(1-a)
    rng = np.random.default_rng(7)
    P = rng.dirichlet(np.ones(6)).reshape(2, 3)
    rho = DensityMatrix(np.diag(P.ravel()), (2, 3))
    pb = P.sum(axis=0)
    if a == 1.0:
        want = -np.sum(P * np.log2(P / pb[None, :]))
    else:
        want = -math.log2(np.sum(P ** a * pb[None, :] ** (1 - a))) / (a - 1)
    assert cond_entropy(rho, a, "down") == pytest.approx(want)


def test_up_exceeds_down():
    for s in range(5):
        rho = random_state("hs_mixed", (2, 2), s)
        for a in (0.7, 2.0):
            assert cond_entropy(rho, a, "up") >= cond_entropy(rho, a, "down") - 1e-9
