import math

import numpy as np
import pytest

from renyidecomp.entropies import renyi_divergence, renyi_divergence_stack
from renyidecomp.linalg import ValidationError
from renyidecomp.mutual import optimize_reference
from renyidecomp.optimize import SimplexOptConfig, bloch_grid, optimize_over_density, qubit_grid_oracle
from renyidecomp.states import DensityMatrix, random_state


def test_config_validation():
    with pytest.raises(ValidationError):
        SimplexOptConfig(sense="sideways")
    with pytest.raises(ValidationError):
        SimplexOptConfig(restarts=0)
    with pytest.raises(ValidationError):
        SimplexOptConfig(method="newton")
    t = SimplexOptConfig().tightened()
    assert t.tol_objective < SimplexOptConfig().tol_objective and t.restarts >= 3


def test_minimize_divergence_at_equal_argument():
    rho_b = random_state("hs_mixed", (2,), 4)
    res = optimize_over_density(lambda s: renyi_divergence(rho_b, s, 2), 2, SimplexOptConfig(restarts=2))
    assert res.converged
    assert res.value == pytest.approx(0, abs=1e-8)
    assert np.allclose(res.optimizer.matrix, rho_b.matrix, atol=1e-5)


@pytest.mark.parametrize("method", ("lbfgs", "scipy", "mirror"))
def test_order1_reference_is_marginal(method):
    rho = random_state("hs_mixed", (2, 3), 6)
    res = optimize_reference(rho, 1.0, fixed=rho.marginal(0), fixed_system=0,
                             cfg=SimplexOptConfig(restarts=1, method=method))
    h = [-np.sum(w * np.log2(w)) for w in (rho.marginal(0).eigenvalues(), rho.marginal(1).eigenvalues(),
                                            rho.eigenvalues())]
    assert res.value == pytest.approx(h[0] + h[1] - h[2], abs=1e-6)
    assert np.allclose(res.factors[0], rho.marginal(1).matrix, atol=1e-4)


def test_qubit_objective_against_grid():
    rho_b = random_state("hs_mixed", (2,), 12)

    def f(s):
        return renyi_divergence(rho_b, s, 2)

    res = optimize_over_density(f, 2, SimplexOptConfig(restarts=2))
    grid = qubit_grid_oracle(f, 60)
    assert abs(res.value - grid.value) < 1e-4


def test_two_term_objective_never_worse_than_grid():
    rho_b = random_state("hs_mixed", (2,), 12)
    target = DensityMatrix(np.diag([0.6, 0.4]), (2,))

    def f(s):
        return renyi_divergence(rho_b, s, 2) + renyi_divergence(target, s, 2)

    res = optimize_over_density(f, 2, SimplexOptConfig(restarts=2))
    grid = qubit_grid_oracle(f, 60)
    assert res.value <= grid.value + 1e-9
    assert grid.value - res.value < 1e-3


def test_grid_examples():
    rho = DensityMatrix(np.diag([0.7, 0.3]), (2,))
    g = qubit_grid_oracle(lambda s: renyi_divergence(rho, s, 2), 60)
    assert np.allclose(g.optimizer.matrix, rho.matrix, atol=0.03)
    g = qubit_grid_oracle(lambda s: float(np.real(s.matrix[0, 0])), 20, "maximize")
    assert g.value == pytest.approx(1.0)
    assert g.optimizer.is_pure()


def test_grid_self_refinement():
    rho = random_state("hs_mixed", (2, 2), 21)
    F = rho.marginal(0).matrix

    def batch(S):
        return renyi_divergence_stack(rho, np.einsum("ij,nkl->nikjl", F, S).reshape(-1, 4, 4), 1.5)

    coarse = qubit_grid_oracle(None, 40, batch=batch).value
    fine = qubit_grid_oracle(None, 80, batch=batch).value
    assert abs(coarse - fine) < 5e-3


def test_grid_contains_center_and_shell():
    g = bloch_grid(5)
    assert np.allclose(g[0], np.eye(2) / 2)
    purity = np.einsum("nij,nji->n", g, g).real
    assert np.isclose(purity.max(), 1.0)


def test_restart_spread_on_convex_objective():
    rho = random_state("hs_mixed", (2, 2), 8)
    res = optimize_reference(rho, 2.0, fixed=rho.marginal(0), fixed_system=0, cfg=SimplexOptConfig(restarts=5))
    assert res.converged
    assert max(res.restart_values) - min(res.restart_values) <= 1e-6
    assert not math.isnan(res.value)
