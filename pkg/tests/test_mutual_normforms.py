import math

import numpy as np
import pytest

from renyidecomp.entropies import cond_entropy, renyi_divergence, renyi_entropy
from renyidecomp.linalg import ValidationError
from renyidecomp.mutual import duality_gap, mutual_info
from renyidecomp.normforms import index_identities, norm_form_value
from renyidecomp.states import DensityMatrix, haar_vector, pure_state, purify, random_state


def _h1(rho):
    w = rho.eigenvalues()
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


@pytest.mark.parametrize("a", (0.6, 1.0, 2.0))
@pytest.mark.parametrize("variant", ("up", "down"))
def test_product_state_mutual_info(a, variant):
    rho = random_state("product", (2, 2), 3)
    assert mutual_info(rho, a, variant) == pytest.approx(0, abs=1e-6)


def test_order1_mutual_info():
    for s in range(10):
        rho = random_state("hs_mixed", (2, 2), s)
        want = _h1(rho.marginal(0)) + _h1(rho.marginal(1)) - _h1(rho)
        assert mutual_info(rho, 1.0) == pytest.approx(want, abs=1e-6)


def test_bell_mutual_info():
    bell = random_state("max_entangled", (2, 2), 0)
    assert mutual_info(bell, 1.0) == pytest.approx(2.0, abs=1e-6)
    assert mutual_info(bell, 1.0, "down") == pytest.approx(2.0, abs=1e-6)


def test_down_below_up():
    for s in range(4):
        rho = random_state("hs_mixed", (2, 3), s)
        for a in (0.7, 2.0):
            assert mutual_info(rho, a, "down") <= mutual_info(rho, a, "up") + 1e-8


def test_generalized_needs_tau():
    with pytest.raises(ValidationError):
        mutual_info(random_state("hs_mixed", (2, 2), 0), 2.0, "generalized")


def test_duality_examples():
    rho = random_state("hs_mixed", (2, 2), 5)
    pure = purify(rho)
    assert abs(duality_gap(pure, rho.marginal(0), 1.0)) <= 1e-5
    psi = pure_state(haar_vector(16, 9), (2, 2, 4))
    assert abs(duality_gap(psi, psi.marginal(0), 2.0)) <= 1e-4


def test_duality_rejects_mixed_and_low_orders():
    rho = random_state("hs_mixed", (2, 2, 2), 1)
    with pytest.raises(ValidationError):
        duality_gap(rho, rho.marginal(0), 2.0)
    psi = pure_state(haar_vector(8, 2), (2, 2, 2))
    with pytest.raises(ValidationError):
        duality_gap(psi, psi.marginal(0), 0.4)


def test_entropy_norm_form():
    rho = DensityMatrix(np.diag([0.75, 0.25]), (2,))
    assert norm_form_value(rho, 2, "entropy_RE") == pytest.approx(math.log2(8 / 5))


def test_mutual_norm_form_product():
    rho = random_state("product", (2, 2), 4)
    assert norm_form_value(rho, 2, "mutual_MI", rho.marginal(0)) == pytest.approx(0, abs=1e-5)


@pytest.mark.parametrize("a", (0.6, 2.0, 3.0))
def test_conditional_norm_form(a):
    rho = random_state("hs_mixed", (2, 2), 13)
    sa = rho.marginal(0).matrix
    direct = -renyi_divergence(rho, np.kron(sa, np.eye(2)), a)
    assert norm_form_value(rho, a, "cond_CRE", sa) == pytest.approx(direct, abs=1e-6)
    assert direct == pytest.approx(cond_entropy(rho, a, "generalized", given=0, tau=rho.marginal(0)), abs=1e-9)


def test_norm_form_entropy_matches_marginal():
    rho = random_state("hs_mixed", (2, 3), 2)
    for a in (0.6, 0.75, 2.0, 3.0):
        assert norm_form_value(rho, a, "entropy_RE") == pytest.approx(renyi_entropy(rho.marginal(1), a), abs=1e-9)


def test_norm_form_errors():
    rho = random_state("hs_mixed", (2, 2), 0)
    with pytest.raises(ValidationError):
        norm_form_value(rho, 1.0, "entropy_RE")
    with pytest.raises(ValidationError):
        norm_form_value(rho, 2.0, "cond_CRE")
    with pytest.raises(ValidationError):
        norm_form_value(rho, 2.0, "bogus")


def test_index_identities():
    for a in np.geomspace(0.51, 100, 25):
        res = index_identities(a)
        assert max(res.values()) < 1e-12
