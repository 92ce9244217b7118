"""Schatten-norm expressions for conditional entropy, entropy and mutual information.

With |phi> a purification of rho_AB on ABC and X = Op_{B->AC}(|phi>) (rows
indexed by (a, c), columns by b), the three forms are

    cond_CRE:   -log sup_tau ||(sigma_A^-1 (x) tau_C)^(a'/2) X||_2^(2/a')
    entropy_RE: -log ||X||_(2a)^(2/a')
    mutual_MI:   log sup_tau ||(sigma_A^-1 (x) tau_C)^(a'/2) X||_(2 a_hat)^(2/a')

with a' = (a-1)/a and a_hat = a/(2a-1). The sup runs over density matrices
on C and applies to the whole powered norm, so for a < 1 (negative 2/a') it
selects the smallest norm.
"""

from __future__ import annotations

import math

import numpy as np

from .entropies import SandwichFunctional, _support_power
from .linalg import ValidationError, schatten_norm
from .optimize import SimplexOptConfig, optimize_batch
from .orders import check_order, hat, prime
from .states import DensityMatrix, as_density, op_vec, purification_vector

FORMS = ("cond_CRE", "entropy_RE", "mutual_MI")


def _bipartite(rho) -> DensityMatrix:
    rho = as_density(rho)
    if len(rho.dims) == 1:
        # a single system is read as B with a trivial A
        return rho.relabel((1, rho.dims[0]))
    if len(rho.dims) != 2:
        raise ValidationError("norm forms take a state on A and B")
    return rho


def purified_operator(rho, purification=None):
    """X = Op_{B->AC}(|phi>) for a purification |phi> of rho_AB on ABC.

    `purification` may supply the vector (length dA*dB*dC); by default the
    canonical one with dC = dA*dB is used. Returns (X, dC).
    """
    rho = _bipartite(rho)
    dA, dB = rho.dims
    if purification is None:
        v = purification_vector(rho)
    else:
        v = np.asarray(purification, dtype=complex).ravel()
        check = np.outer(v, v.conj())
        dC = v.size // (dA * dB)
        if dC * dA * dB != v.size:
            raise ValidationError("purification length is not a multiple of dim(AB)")
        M = check.reshape(dA * dB, dC, dA * dB, dC)
        if np.max(np.abs(np.einsum("icjc->ij", M) - rho.matrix)) > 1e-9:
            raise ValidationError("vector does not purify rho")
    dC = v.size // (dA * dB)
    X = op_vec(v, (dA, dB, dC), inputs=[1]).matrix
    return X, dC


def _log2_powered_norm(X: np.ndarray, p: float, a_prime: float) -> float:
    return (2.0 / a_prime) * math.log2(schatten_norm(X, p))


def _dominated(rho: DensityMatrix, sigma_a: np.ndarray) -> None:
    w, U = np.linalg.eigh((sigma_a + sigma_a.conj().T) / 2)
    keep = w > 1e-12 * max(w.max(), 0.0)
    P = U[:, keep] @ U[:, keep].conj().T
    rho_a = rho.marginal(0).matrix
    if np.linalg.norm(rho_a - P @ rho_a @ P) > 1e-10:
        raise ValidationError("sigma_A does not dominate rho_A")


def norm_form_value(rho, alpha, which: str, sigma_a=None, *, purification=None, cfg=None, seed=0) -> float:
    """Evaluate one of the Schatten-norm forms in bits.

    cond_CRE equals the conditional entropy of B given A relative to sigma_A,
    -D_alpha(rho_AB || sigma_A (x) 1_B); entropy_RE equals H_alpha(B);
    mutual_MI equals inf over sigma_B of D_alpha(rho_AB || sigma_A (x) sigma_B).
    """
    alpha = check_order(alpha)
    if which not in FORMS:
        raise ValidationError(f"unknown form {which!r}; expected one of {FORMS}")
    if alpha == 1.0 or math.isinf(alpha):
        raise ValidationError("norm forms need alpha in (0, 1) or (1, inf)")
    if which == "mutual_MI" and alpha < 0.5:
        raise ValidationError("the mutual-information form needs alpha >= 1/2")
    rho = _bipartite(rho)
    a_prime = prime(alpha)
    X, dC = purified_operator(rho, purification)
    if which == "entropy_RE":
        return -_log2_powered_norm(X, 2.0 * alpha, a_prime)
    if sigma_a is None:
        raise ValidationError(f"{which} needs sigma_A")
    sigma_a = np.asarray(sigma_a.matrix if isinstance(sigma_a, DensityMatrix) else sigma_a, dtype=complex)
    if sigma_a.shape != (rho.dims[0],) * 2:
        raise ValidationError("sigma_A has the wrong shape")
    _dominated(rho, sigma_a)
    p = 2.0 if which == "cond_CRE" else 2.0 * hat(alpha)
    value = sup_over_tau(X, (rho.dims[0], dC), sigma_a, a_prime, p, cfg=cfg, seed=seed)
    return -value if which == "cond_CRE" else value


def sup_over_tau(X, dims, sigma_a, a_prime: float, p: float, *, cfg=None, seed=0, init=None) -> float:
    """sup over tau_C of (2/a') log2 ||(sigma_A^-1 (x) tau_C)^(a'/2) X||_p."""
    dA, dC = dims
    fixed = {0: _support_power(np.asarray(sigma_a, dtype=complex)[None], -a_prime)}
    fun = SandwichFunctional(X, (dA, dC), p / 2.0, a_prime, fixed)
    scale = 2.0 / (a_prime * p)

    def fg(S, idx):
        t, grads = fun.value_and_grad(S, idx)
        return t * scale, [g * scale for g in grads]

    cfg = cfg or SimplexOptConfig(restarts=1, sense="maximize")
    if cfg.sense != "maximize":
        raise ValidationError("the supremum over tau needs sense='maximize'")
    if init is None:
        init = holder_start(X, dims, fixed[0][0], a_prime)
    res = optimize_batch(fg, 1, [dC], cfg, [seed], [np.asarray(init)[None]])[0]
    if not res.converged:
        from .mutual import ConvergenceError
        raise ConvergenceError(res)
    return res.value


def holder_start(X, dims, p0: np.ndarray, a_prime: float) -> np.ndarray:
    """Maximizer of the p = 2 form, tau proportional to M^(1/(1-a')).

    M = tr_A[(P_0 (x) 1) X X^dagger] with P_0 = sigma_A^(-a'); the p = 2
    objective is tr[tau^a' M], whose optimum over density matrices follows
    from Hoelder's inequality. Used as the starting point for every index p.
    """
    dA, dC = dims
    M = np.einsum("acbd,ab->cd", (np.kron(p0, np.eye(dC)) @ X @ X.conj().T).reshape(dA, dC, dA, dC), np.eye(dA))
    w, U = np.linalg.eigh((M + M.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    t = w ** (1.0 / (1.0 - a_prime))
    tau = (U * (t / t.sum())) @ U.conj().T
    return (1 - 1e-9) * tau + 1e-9 * np.eye(dC) / dC


def index_identities(alpha: float) -> dict:
    """Residuals of the index arithmetic behind the norm forms (alpha > 1/2).

    1/a + 1/a_hat = 2, and interpolating between the indices 2a and 2 a_hat
    at theta = 1/2 lands on the Hilbert-Schmidt index 2.
    """
    a = check_order(alpha)
    ah = hat(a)
    out = {"reciprocal_sum": abs(1.0 / a + 1.0 / ah - 2.0)}
    p0, p1 = 2.0 * a, 2.0 * ah
    out["interpolation"] = abs(0.5 / p0 + 0.5 / p1 - 0.5)
    return out


__all__ = ["FORMS", "norm_form_value", "purified_operator", "sup_over_tau", "index_identities"]
