import math

import numpy as np
import pytest

from renyidecomp.acceptance import range_oracle
from renyidecomp.linalg import ValidationError
from renyidecomp.orders import (
    CASES,
    classify_triple,
    cor4_partner,
    derived_quantities,
    hat,
    prime,
    relation_residual,
    sample_triple,
    solve_third,
    theorem2_feasible,
)


def test_derived_quantities():
    assert derived_quantities(2) == pytest.approx((0.5, 2 / 3))
    assert derived_quantities(1) == pytest.approx((0.0, 1.0))
    assert math.isinf(hat(0.5))
    with pytest.raises(ValidationError):
        prime(0)


@pytest.mark.parametrize("a", np.geomspace(0.51, 100, 40))
def test_order_identities(a):
    p, h = derived_quantities(a)
    assert 1 / a + 1 / h == pytest.approx(2)
    assert p * h == pytest.approx(p / (1 + p))
    assert -p == pytest.approx(prime(h))


def test_solve_third():
    assert solve_third(4 / 3, 2) == pytest.approx(2)
    assert solve_third(2 / 3, 0.5) == pytest.approx(0.5)
    assert solve_third(1, 1) == 1


def test_classify_examples():
    t = classify_triple(4 / 3, 2, 2)
    assert (t.case, t.sign) == ("Case1", "positive")
    t = classify_triple(2 / 3, 0.5, 0.5)
    assert (t.case, t.sign) == ("Case2", "negative")
    assert classify_triple(3, 0.8, 0.9).case == "Invalid"
    assert classify_triple(1, 1, 1).case == "Order1"


def test_classify_symmetric_in_beta_gamma():
    assert relation_residual(3, 9 / 7, 0.75) < 1e-12
    assert classify_triple(3, 9 / 7, 0.75).case == classify_triple(3, 0.75, 9 / 7).case == "Case3"


@pytest.mark.parametrize("case", CASES)
def test_samples_lie_in_their_case(case):
    rng = np.random.default_rng(3)
    for _ in range(200):
        t = sample_triple(case, rng)
        assert t.case == case
        assert range_oracle(t.alpha, t.beta, t.gamma) == case


def test_theorem2_feasibility():
    assert theorem2_feasible(math.inf, 0.5, 4 / 3)
    assert theorem2_feasible(2, 0.5, 1.25)
    assert theorem2_feasible(1, 1, 1)
    assert not theorem2_feasible(2, 0.5, 1.5)
    assert not theorem2_feasible(0.6, 0.5, 1.25)


def test_cor4_partner():
    assert cor4_partner(0.5) == pytest.approx(4 / 3)
    assert math.isinf(cor4_partner(2))
