import math

import numpy as np
import pytest

from renyidecomp.linalg import ValidationError
from renyidecomp.orders import classify_triple, make_quad, solve_delta
from renyidecomp.relations import (
    Batch,
    chain_batch,
    corollary1_batch,
    exclusion_batch,
    gbur_batch,
    sanity_batch,
    sanity_partner,
    theorem1_batch,
    theorem1_trial_batch,
    verify_chain_rules,
    verify_corollary1,
    verify_exclusion,
    verify_gbur,
    verify_monotone_extension,
    verify_theorem1,
)
from renyidecomp.states import MeasurementPair, haar_vector, pure_state, random_state

TOL = 1e-6


def _batch(dims=(2, 2), n=30, kinds=("hs_mixed", "haar_pure", "product")):
    rhos = [random_state(kinds[i % len(kinds)], dims, 1000 + i) for i in range(n)]
    return Batch(rhos, [1000 + i for i in range(n)])


@pytest.mark.parametrize("which", ("res1-1", "res1-2", "res1-3", "app"))
def test_order1_equality(which):
    rho = random_state("hs_mixed", (2, 3), 4)
    rec = verify_theorem1(rho, (1, 1, 1), which)
    assert abs(rec.margin) <= TOL


def test_case1_sweep():
    recs = theorem1_batch(_batch(n=100), classify_triple(4 / 3, 2, 2), "res1-1")
    assert len(recs) == 100
    assert min(r.margin for r in recs) >= -TOL
    # an optimized infimum on the larger side can only be overestimated
    assert all(r.soundness == "heuristic" for r in recs)
    recs = theorem1_batch(_batch(n=5), classify_triple(2 / 3, 0.5, 0.5), "res1-3")
    assert all(r.soundness == "certified" for r in recs)


def test_bell_case2():
    bell = random_state("max_entangled", (2, 2), 0)
    rec = verify_theorem1(bell, (2 / 3, 0.5, 0.5), "res1-3")
    assert rec.margin >= -TOL
    b = Batch([bell], [0])
    assert b.cond_down(2 / 3, given=0).value[0] == pytest.approx(-1.0, abs=1e-9)


def test_direction_follows_sign():
    rho = random_state("hs_mixed", (2, 2), 1)
    with pytest.raises(ValidationError):
        verify_theorem1(rho, (4 / 3, 2, 2), "res1-3")
    with pytest.raises(ValidationError):
        verify_theorem1(rho, (2 / 3, 0.5, 0.5), "res1-1")
    with pytest.raises(ValidationError):
        verify_theorem1(rho, (4 / 3, 2, 2), "res1-1", swap_ab=True)
    with pytest.raises(ValidationError):
        verify_theorem1(rho, (3, 0.8, 0.9), "res1-3")


def test_trial_has_four_records():
    b = _batch(n=5)
    recs = theorem1_trial_batch(b, classify_triple(2 / 3, 0.5, 0.5))
    assert len(recs) == 20
    assert [r.name for r in recs[:4]] == ["res1-3", "res1-3-ba", "app", "app-swap"]


def test_monotone_extension():
    b = _batch(n=20)
    recs = [verify_monotone_extension(r, 1.2, 2, 2, "res1-1", seed=s) for r, s in zip(b.rhos, b.seeds)]
    assert min(r.margin for r in recs) >= -TOL
    recs = [verify_monotone_extension(r, 0.8, 0.6, 0.6, "app", seed=s) for r, s in zip(b.rhos, b.seeds)]
    assert min(r.margin for r in recs) >= -TOL
    # with equality the relaxed check is the decomposition inequality itself
    rho = b.rhos[0]
    assert verify_monotone_extension(rho, 4 / 3, 2, 2, "res1-1").margin == pytest.approx(
        verify_theorem1(rho, (4 / 3, 2, 2), "res1-1").margin)
    with pytest.raises(ValidationError):
        verify_monotone_extension(rho, 1.2, 2, 2, "app")


def test_quad_relation():
    rho = random_state("hs_mixed", (2, 2), 3)
    assert abs(verify_corollary1(rho, (1, 1, 1, 1), "lower").margin) <= TOL
    assert abs(verify_corollary1(rho, (1, 1, 1, 1), "upper").margin) <= TOL
    d = solve_delta(2.0, 3.0, 2.5)
    assert d < 2.0
    recs = corollary1_batch(_batch(n=30), make_quad(2.0, 3.0, 2.5, d), "lower")
    assert min(r.margin for r in recs) >= -TOL
    prod = random_state("product", (2, 2), 8)
    rec = verify_corollary1(prod, make_quad(2.0, 3.0, 2.5, d), "lower")
    assert rec.lhs == pytest.approx(0, abs=1e-6)
    with pytest.raises(ValidationError):
        verify_corollary1(rho, make_quad(2.0, 3.0, 2.5, d), "upper")


def test_chain_rules():
    b = _batch(n=30)
    recs = chain_batch(b, classify_triple(4 / 3, 2, 2), "cr1")
    assert min(r.margin for r in recs) >= -TOL
    bell = random_state("max_entangled", (2, 2), 0)
    assert verify_chain_rules(bell, (2 / 3, 0.5, 0.5), "cr2").margin >= -TOL
    prod = random_state("product", (2, 2), 5)
    assert abs(verify_chain_rules(prod, (1, 1, 1), "cr1").margin) <= TOL


def test_generalized_chain_rule_with_random_reference():
    tri = [pure_state(haar_vector(8, s), (2, 2, 2)) for s in range(30)]
    sig = [random_state("hs_mixed", (2,), 50 + s).matrix for s in range(30)]
    recs = chain_batch(Batch(tri, range(30)), classify_triple(2 / 3, 0.5, 0.5), "generalized", sig)
    assert min(r.margin for r in recs) >= -TOL


def test_generalized_chain_rule_needs_tripartite_state():
    with pytest.raises(ValidationError):
        verify_chain_rules(random_state("hs_mixed", (2, 2), 0), (2 / 3, 0.5, 0.5), "generalized")


def test_gbur_examples():
    b = _batch(n=30)
    same = MeasurementPair(np.eye(2), np.eye(2))
    mub = MeasurementPair.mub(2)
    for pair in (same, mub):
        recs = gbur_batch(b, pair, 2 / 3, 0.5, 0.5)
        assert min(r.margin for r in recs) >= -TOL
    mixed = random_state("product", (2, 2), 0)
    flat = type(mixed)(np.eye(4) / 4, (2, 2))
    rec = verify_gbur(flat, mub, 2 / 3, 0.5, 0.5)
    assert rec.lhs == pytest.approx(2.0)
    assert rec.margin >= 0
    rho = random_state("hs_mixed", (2, 2), 6)
    assert verify_gbur(rho, mub, 1, 1, 1).margin >= -TOL


def test_gbur_printed_relation_is_violated():
    # the relation with the beta term negated is not implied; it fails by about a quarter bit
    rhos = [random_state("haar_pure", (2, 2), s) for s in range(20)]
    recs = gbur_batch(Batch(rhos, range(20)), MeasurementPair.mub(2), 0.75, 1.25, 2.0, relation="printed")
    assert min(r.margin for r in recs) < -0.1
    with pytest.raises(ValidationError):
        gbur_batch(Batch(rhos, range(20)), MeasurementPair.mub(2), 0.75, 1.25, 2.0)


def test_gbur_with_foreign_reference_fails_at_order1():
    # with s_B != rho_B the two sides differ by D(rho_B || s_B) at order 1
    rho = random_state("hs_mixed", (2, 2), 2)
    s = random_state("hs_mixed", (2,), 3).matrix
    rec = verify_gbur(rho, MeasurementPair(np.eye(2), np.eye(2)), 1, 1, 1, sigma_b=s)
    from renyidecomp.entropies import renyi_divergence
    assert rec.margin == pytest.approx(verify_gbur(rho, MeasurementPair(np.eye(2), np.eye(2)), 1, 1, 1).margin
                                       - renyi_divergence(rho.marginal(1), s, 1), abs=1e-9)


def test_exclusion_modes():
    mub = MeasurementPair.mub(2)
    b = _batch(n=20)
    hall = exclusion_batch(b, mub, None, "hall_limit")
    assert all(r.rhs == 1.0 for r in hall)
    assert min(r.margin for r in hall) >= 0
    assert min(r.margin for r in exclusion_batch(b, mub, (2, 0.5, 1.25), "thm2")) >= -TOL
    rec = verify_exclusion(b.rhos[0], mub, (0.5,), "res2c")
    assert rec.orders[:3] == (math.inf, 0.5, pytest.approx(4 / 3))
    with pytest.raises(ValidationError):
        exclusion_batch(b, mub, (2, 0.5, 1.5), "thm2")


def test_sanity_battery():
    bell = random_state("max_entangled", (2, 2), 0)
    prod = random_state("product", (2, 2), 1)
    b = Batch([bell, prod], [0, 1])
    for profile in range(3):
        recs = sanity_batch(b, profile, [sanity_partner(r, 9) for r in b.rhos])
        assert min(r.margin for r in recs) >= -TOL
    assert b.mi_down(0.5).value[1] == pytest.approx(0, abs=1e-6)


def test_sanity_classical_battery():
    # fully classical state: conditional entropies match scalar formulas
    P = np.array([[0.1, 0.2], [0.3, 0.4]])
    rho = type(random_state("product", (2, 2), 0))(np.diag(P.ravel()), (2, 2))
    b = Batch([rho], [0])
    pb = P.sum(axis=0)
    for a in (0.5, 2.0):
        want = -math.log2(np.sum(P ** a * pb[None, :] ** (1 - a))) / (a - 1)
        assert b.cond_down(a, given=1).value[0] == pytest.approx(want)
    recs = sanity_batch(b, 0, [sanity_partner(rho, 4)])
    assert min(r.margin for r in recs) >= -TOL


def test_generalized_chain_rule_fails_with_fixed_marginal_reference():
    # taking the BC reference equal to rho_BC instead of optimizing it breaks the relation
    from renyidecomp.entropies import renyi_divergence
    a, b, g = 6.716499272227079, 0.5312049400748652, 1.7644906237100668
    assert classify_triple(a, b, g).case == "Case3"
    rho = pure_state(haar_vector(8, 5023), (2, 2, 2))
    sc = random_state("hs_mixed", (2,), 10023).matrix
    lhs = -renyi_divergence(rho, np.kron(np.eye(2), rho.marginal(1, 2).matrix), b)
    rhs = -renyi_divergence(rho, np.kron(np.eye(4), sc), a) + renyi_divergence(rho.marginal(1, 2), np.kron(np.eye(2), sc), g)
    assert lhs - rhs < -0.1
