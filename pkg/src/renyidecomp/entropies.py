"""Sandwiched Renyi divergence and the entropies built from it (all in bits)."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import (
    KERNEL_EPS,
    ValidationError,
    check_psd,
    eig_hermitian,
    frechet_adjoint,
    hermitize,
    partial_trace,
    psd_eig,
    support_mask,
)
from .orders import check_order
from .states import DensityMatrix, as_density

LN2 = math.log(2.0)
SUPPORT_TOL = 1e-10


def _psd(M) -> np.ndarray:
    if isinstance(M, DensityMatrix):
        return M.matrix
    A = hermitize(M)
    check_psd(np.linalg.eigvalsh(A))
    return A


def _log2_sum_pow(q: np.ndarray, a: float) -> float:
    """log2 sum_i q_i^a over the support of q, without overflow."""
    q = q[support_mask(q)]
    if q.size == 0:
        return -math.inf
    x = a * np.log(q)
    top = x.max()
    return float((top + np.log(np.sum(np.exp(x - top)))) / LN2)


def renyi_divergence(rho, sigma, alpha: float) -> float:
    """D_alpha(rho || sigma) in bits; sigma may be any PSD operator.

    Orders 1 and inf are the Umegaki relative entropy and D_max. Returns
    +inf when the supports are orthogonal, or when sigma does not dominate
    rho and alpha >= 1.
    """
    alpha = check_order(alpha)
    R = _psd(rho)
    S = _psd(sigma)
    if R.shape != S.shape:
        raise ValidationError(f"operator shapes differ: {R.shape} vs {S.shape}")
    s, V = psd_eig(S)
    tr_r = float(np.trace(R).real)
    if s.size == 0 or tr_r <= 0:
        return math.inf
    Rc = V.conj().T @ R @ V
    inside = float(np.trace(Rc).real)
    if inside <= SUPPORT_TOL * tr_r:
        return math.inf
    dominated = tr_r - inside <= SUPPORT_TOL * tr_r
    if alpha >= 1 and not dominated:
        return math.inf
    if math.isinf(alpha):
        k = s ** -0.5
        return float(np.log2(np.linalg.eigvalsh(k[:, None] * Rc * k[None, :]).max()))
    if alpha == 1.0:
        r = np.linalg.eigvalsh(R)
        r = r[support_mask(r)]
        return float(np.sum(r * np.log2(r)) - np.real(np.sum(np.diag(Rc) * np.log2(s))))
    k = s ** ((1.0 - alpha) / (2.0 * alpha))
    q = np.linalg.eigvalsh(k[:, None] * Rc * k[None, :])
    return _log2_sum_pow(np.clip(q, 0.0, None), alpha) / (alpha - 1.0)


def renyi_divergence_stack(rho, sigmas, alpha: float) -> np.ndarray:
    """D_alpha(rho || sigma_k) for a stack (N, d, d) of operators, orders in (0, inf)."""
    alpha = check_order(alpha)
    if math.isinf(alpha):
        raise ValidationError("the stacked divergence does not cover order inf")
    R = _psd(rho)
    S = np.asarray(sigmas, dtype=complex)
    S = (S + np.conj(np.swapaxes(S, -1, -2))) / 2
    s, V = np.linalg.eigh(S)
    keep = s > KERNEL_EPS * np.max(s, axis=-1, keepdims=True)
    Rc = np.conj(np.swapaxes(V, -1, -2)) @ R @ V
    diag = np.real(np.diagonal(Rc, axis1=-2, axis2=-1))
    tr_r = float(np.trace(R).real)
    inside = np.sum(np.where(keep, diag, 0.0), axis=-1)
    dominated = tr_r - inside <= SUPPORT_TOL * tr_r
    safe = np.where(keep, s, 1.0)
    if alpha == 1.0:
        r = np.linalg.eigvalsh(R)
        r = r[support_mask(r)]
        out = float(np.sum(r * np.log2(r))) - np.sum(np.where(keep, diag * np.log2(safe), 0.0), axis=-1)
    else:
        k = np.where(keep, safe ** ((1.0 - alpha) / (2.0 * alpha)), 0.0)
        q = np.clip(np.linalg.eigvalsh(k[..., :, None] * Rc * k[..., None, :]), 0.0, None)
        with np.errstate(divide="ignore"):
            out = np.log2(np.sum(np.where(q > KERNEL_EPS, q, 0.0) ** alpha, axis=-1)) / (alpha - 1.0)
    out = np.where(inside <= SUPPORT_TOL * tr_r, math.inf, out)
    if alpha >= 1:
        out = np.where(dominated, out, math.inf)
    return out


def renyi_entropy(rho, alpha: float) -> float:
    """H_alpha from the spectrum: von Neumann at 1, -log max eigenvalue at inf."""
    alpha = check_order(alpha)
    lam = as_density(rho).eigenvalues()
    lam = lam[support_mask(lam)]
    if math.isinf(alpha):
        return float(-np.log2(lam.max()))
    if alpha == 1.0:
        return float(-np.sum(lam * np.log2(lam)))
    return _log2_sum_pow(lam, alpha) / (1.0 - alpha)


def _identity(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex)


def _embed(rho: DensityMatrix, given: int, fixed_other: np.ndarray, given_op: np.ndarray) -> np.ndarray:
    """Operator on rho's two systems with `given_op` on system `given`."""
    return np.kron(fixed_other, given_op) if given == 1 else np.kron(given_op, fixed_other)


def cond_entropy(rho, alpha: float, variant: str = "down", *, given: int = 1, tau=None, cfg=None, seed: int = 0) -> float:
    """Conditional entropy of the other system given system `given` of a bipartite state.

    variant "down" conditions on the marginal, "generalized" on the supplied
    `tau`, and "up" maximizes over all density matrices (numerically, so the
    returned value is a lower bound on the supremum).
    """
    rho = as_density(rho)
    if len(rho.dims) != 2:
        raise ValidationError("cond_entropy expects a bipartite state")
    other = 1 - given
    I_other = _identity(rho.dims[other])
    if variant == "down":
        tau = rho.marginal(given).matrix
    elif variant == "generalized":
        if tau is None:
            raise ValidationError("generalized conditional entropy needs tau")
        tau = as_density(tau).matrix
    elif variant == "up":
        from .mutual import ConvergenceError, optimize_reference
        res = optimize_reference(rho, alpha, fixed=I_other, fixed_system=other, cfg=cfg, seed=seed)
        if not res.converged:
            raise ConvergenceError(res)
        return -res.value
    else:
        raise ValidationError(f"unknown conditional-entropy variant {variant!r}")
    return -renyi_divergence(rho, _embed(rho, given, I_other, tau), alpha)


def max_cond_entropy_batch(rhos, alpha: float, *, given: int = 1, cfg=None, seed=0):
    """H^up of the other system given `given` for a list of states.

    Returns (values, converged flags); values are lower bounds on the supremum.
    """
    from .mutual import reference_batch
    rhos = [as_density(r) for r in rhos]
    other = 1 - given
    res = reference_batch(rhos, alpha, {other: _identity(rhos[0].dims[other])}, cfg=cfg, seed=seed)
    return np.array([-r.value for r in res]), np.array([r.converged for r in res])


# -- differentiable trace functionals (batched) ----------------------------------------
#
# Objectives below act on a stack of n problem instances sharing dimensions and
# order. value_and_grad(sigmas, idx) evaluates instances `idx` at the stacked
# variable factors `sigmas` (one (m, d, d) array per variable factor) and
# returns values of shape (m,) plus one gradient stack per variable factor.

EIG_FLOOR = 1e-300


def _dag(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def _herm(M: np.ndarray) -> np.ndarray:
    return (M + _dag(M)) / 2


def _stack(M, n: int) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    return np.broadcast_to(M, (n,) + M.shape[-2:]) if M.ndim == 2 else M


def batch_kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n, a, _ = A.shape
    b = B.shape[-1]
    return np.einsum("nij,nkl->nikjl", A, B).reshape(n, a * b, a * b)


class Spectral(NamedTuple):
    """A stack of Hermitian matrices given by eigenvalues w (m, d) and eigenvectors U (m, d, d).

    Objectives accept this in place of a matrix stack, which avoids
    re-diagonalizing (and losing tiny eigenvalues) when the caller already
    knows the spectrum.
    """

    w: np.ndarray
    U: np.ndarray


def _eig(S):
    if isinstance(S, Spectral):
        return S.w, S.U
    return np.linalg.eigh(_herm(S))


def _powered(S, e: float):
    w, U = _eig(S)
    w = np.clip(w, EIG_FLOOR, None)
    return (U * w[..., None, :] ** e) @ _dag(U), w, U


def _support_power(F: np.ndarray, e: float) -> np.ndarray:
    """F**e on the support of each F in a stack."""
    w, U = np.linalg.eigh(_herm(F))
    keep = w > KERNEL_EPS * np.max(w, axis=-1, keepdims=True)
    we = np.where(keep, np.where(keep, w, 1.0) ** e, 0.0)
    return (U * we[..., None, :]) @ _dag(U)


class SandwichFunctional:
    """log2 tr[(L^dagger (P_0 (x) P_1) L)^q] as a function of the tensor factors.

    Fixed factors are given already raised to their exponent; each variable
    factor sigma enters as sigma**exponent. Sandwiched divergences use
    L = rho^(1/2), exponent (1-a)/a and q = a; the operator-norm forms of the
    entropies use L = Op(|phi>).
    """

    def __init__(self, L, dims: Sequence[int], q: float, exponent: float, fixed: dict):
        L = np.asarray(L, dtype=complex)
        self.L = L[None] if L.ndim == 2 else L
        self.n = self.L.shape[0]
        self.dims = tuple(dims)
        if len(self.dims) != 2:
            raise ValidationError("SandwichFunctional supports two tensor factors")
        self.q = float(q)
        self.exponent = float(exponent)
        self.fixed = {int(k): _stack(v, self.n) for k, v in fixed.items()}
        self.variables = [k for k in range(2) if k not in self.fixed]

    def _K(self, sigmas, idx):
        P, eig = {k: F[idx] for k, F in self.fixed.items()}, {}
        for k, S in zip(self.variables, sigmas):
            P[k], w, U = _powered(S, self.exponent)
            eig[k] = (w, U)
        L = self.L[idx]
        K = _herm(_dag(L) @ batch_kron(P[0], P[1]) @ L)
        return L, K, P, eig

    def value(self, sigmas, idx=None) -> np.ndarray:
        idx = np.arange(self.n) if idx is None else idx
        _, K, _, _ = self._K(sigmas, idx)
        kap = np.clip(np.linalg.eigvalsh(K), 0.0, None)
        return self._lse(kap)[0] / LN2

    def _lse(self, kap):
        keep = kap > KERNEL_EPS * np.max(kap, axis=-1, keepdims=True)
        logk = np.log(np.where(keep, kap, 1.0))
        x = np.where(keep, self.q * logk, -np.inf)
        top = x.max(axis=-1)
        lse = top + np.log(np.exp(x - top[:, None]).sum(axis=-1))
        return lse, keep, logk

    def value_and_grad(self, sigmas, idx=None):
        idx = np.arange(self.n) if idx is None else idx
        L, K, P, eig = self._K(sigmas, idx)
        kap, W = np.linalg.eigh(K)
        kap = np.clip(kap, 0.0, None)
        lse, keep, logk = self._lse(kap)
        # Y = L K^(q-1) L^dagger / tr K^q
        c = np.where(keep, np.exp((self.q - 1.0) * logk - lse[:, None]), 0.0)
        LW = L @ W
        Y = (LW * c[:, None, :]) @ _dag(LW)
        d0, d1 = self.dims
        Yt = Y.reshape(-1, d0, d1, d0, d1)
        e = self.exponent
        grads = []
        for k in self.variables:
            if k == 1:
                G = np.einsum("nabcd,nca->nbd", Yt, P[0])
            else:
                G = np.einsum("nabcd,ndb->nac", Yt, P[1])
            w, U = eig[k]
            D = frechet_adjoint(w, U, lambda x: x**e, lambda x: e * x ** (e - 1.0), _herm(G))
            grads.append(self.q / LN2 * D)
        return lse / LN2, grads


def sqrt_factor(rho) -> np.ndarray:
    """L with L L^dagger = rho (stackable, zero columns off the support)."""
    lam, V = np.linalg.eigh(_herm(np.asarray(rho, dtype=complex)))
    return V * np.sqrt(np.clip(lam, 0.0, None))[..., None, :]


def _matrices(rhos) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(rhos, DensityMatrix):
        rhos = [rhos]
    rhos = [as_density(r) for r in rhos]
    dims = rhos[0].dims
    if any(r.dims != dims for r in rhos):
        raise ValidationError("all states in a batch must share subsystem dimensions")
    return np.stack([r.matrix for r in rhos]), dims


class DivergenceObjective:
    """sigma-factors -> D_alpha(rho || F_0 (x) F_1) for a stack of bipartite states.

    `fixed` maps a factor index to one operator or a stack of operators (one
    per state); the remaining factors are the variables. Fixed factors may be
    rank deficient; callers check domination for alpha >= 1 first.
    """

    def __init__(self, rhos, alpha: float, fixed: dict):
        self.alpha = check_order(alpha)
        if math.isinf(self.alpha):
            raise ValidationError("optimization at alpha = inf is not supported")
        R, self.dims = _matrices(rhos)
        self.n = R.shape[0]
        if len(self.dims) != 2:
            raise ValidationError("divergence objectives need bipartite states")
        self.variables = [k for k in range(2) if k not in fixed]
        fixed = {int(k): _stack(v, self.n) for k, v in fixed.items()}
        if self.alpha == 1.0:
            lam = np.clip(np.linalg.eigvalsh(R), 0.0, None)
            self._neg_entropy = np.sum(np.where(lam > 0, lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0), axis=-1)
            self._marg = {k: np.stack([partial_trace(M, self.dims, [k]) for M in R]) for k in range(2)}
            self._const = np.zeros(self.n)
            for k, F in fixed.items():
                self._const -= np.real(np.einsum("nij,nji->n", self._marg[k], _support_log2(F)))
        else:
            e = (1.0 - self.alpha) / self.alpha
            powered = {k: _support_power(F, e) for k, F in fixed.items()}
            self._fun = SandwichFunctional(sqrt_factor(R), self.dims, self.alpha, e, powered)

    def value(self, sigmas, idx=None) -> np.ndarray:
        return self.value_and_grad(sigmas, idx)[0]

    def value_and_grad(self, sigmas, idx=None):
        idx = np.arange(self.n) if idx is None else idx
        if self.alpha == 1.0:
            val = self._neg_entropy[idx] + self._const[idx]
            grads = []
            for k, S in zip(self.variables, sigmas):
                w, U = _eig(S)
                w = np.clip(w, EIG_FLOOR, None)
                logS = (U * np.log2(w)[..., None, :]) @ _dag(U)
                M = self._marg[k][idx]
                val = val - np.real(np.einsum("nij,nji->n", M, logS))
                grads.append(-frechet_adjoint(w, U, np.log2, lambda x: 1.0 / (x * LN2), M))
            return val, grads
        t, grads = self._fun.value_and_grad(sigmas, idx)
        scale = 1.0 / (self.alpha - 1.0)
        return t * scale, [g * scale for g in grads]


def _support_log2(F: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(_herm(F))
    keep = w > KERNEL_EPS * np.max(w, axis=-1, keepdims=True)
    lw = np.where(keep, np.log2(np.where(keep, w, 1.0)), 0.0)
    return (U * lw[..., None, :]) @ _dag(U)


def dominated_by_fixed(rho: DensityMatrix, fixed: dict) -> bool:
    """Whether supp(rho) lies inside supp(F_0) (x) supp(F_1) for the fixed factors."""
    M = rho.matrix
    for k, F in fixed.items():
        w, U = eig_hermitian(F)
        keep = support_mask(w)
        Pk = U[:, keep] @ U[:, keep].conj().T
        ops = [np.eye(d) for d in rho.dims]
        ops[k] = Pk
        P = np.kron(ops[0], ops[1])
        M = P @ M @ P
    tr = float(np.trace(rho.matrix).real)
    return tr - float(np.trace(M).real) <= SUPPORT_TOL * tr
