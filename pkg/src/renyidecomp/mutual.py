"""Renyi mutual informations and the duality between the AB and AC forms.

Infima are computed numerically, so every returned value is an upper bound
on the exact quantity (up to float noise).
"""

from __future__ import annotations

import math

import numpy as np

from .entropies import DivergenceObjective, dominated_by_fixed
from .linalg import ValidationError, mat_power_on_support, psd_eig
from .optimize import OptResult, SimplexOptConfig, optimize_batch
from .orders import check_order, hat
from .states import DensityMatrix, as_density, derive_seed


def default_config(alpha: float, joint: bool = False) -> SimplexOptConfig:
    """One start where the problem is convex (one reference, alpha >= 1/2), three otherwise."""
    convex = alpha >= 0.5 and not joint
    return SimplexOptConfig(restarts=1 if convex else 3)


def _states(rhos) -> list[DensityMatrix]:
    if isinstance(rhos, DensityMatrix):
        return [rhos]
    return [as_density(r) for r in rhos]


def _infinite(dims) -> OptResult:
    factors = tuple(np.eye(d) / d for d in dims)
    joint = factors[0] if len(factors) == 1 else np.kron(*factors)
    return OptResult(DensityMatrix(joint, tuple(dims)), math.inf, 0, True, factors, (math.inf,))


def _interior(S, floor: float = 1e-6) -> np.ndarray:
    """Mix a warm start slightly with the identity so its logarithm is finite."""
    S = np.asarray(S, dtype=complex)
    d = S.shape[-1]
    return (1 - floor) * S + floor * np.eye(d) / d


def _seeds(seed, n: int) -> list[int]:
    if np.ndim(seed) == 0:
        return [derive_seed(int(seed), i) for i in range(n)] if n > 1 else [int(seed)]
    seeds = [int(x) for x in seed]
    if len(seeds) != n:
        raise ValidationError(f"expected {n} seeds, got {len(seeds)}")
    return seeds


def reference_batch(rhos, alpha, fixed: dict, *, cfg=None, seed=0, init=None) -> list[OptResult]:
    """inf over the non-fixed factors of D_alpha(rho || F_0 (x) F_1), for each state.

    `fixed` maps a factor index to one operator or a list (one per state).
    Unfixed factors are warm-started at the state's marginals.
    """
    rhos = _states(rhos)
    alpha = check_order(alpha)
    n = len(rhos)
    dims = rhos[0].dims
    seeds = _seeds(seed, n)
    fixed = {int(k): [np.asarray(_mat(v), dtype=complex)] * n if np.ndim(_mat(v)) == 2
             else [np.asarray(_mat(x), dtype=complex) for x in v] for k, v in fixed.items()}
    free = [k for k in range(2) if k not in fixed]
    cfg = cfg or default_config(alpha, joint=len(free) > 1)
    if cfg.sense != "minimize":
        raise ValidationError("reference optimization is a minimization")
    out: list[OptResult | None] = [None] * n
    todo = []
    for i, r in enumerate(rhos):
        if alpha >= 1 and not dominated_by_fixed(r, {k: v[i] for k, v in fixed.items()}):
            out[i] = _infinite([dims[k] for k in free])
        else:
            todo.append(i)
    # for alpha >= 1/2 an optimal free factor lives on the support of the
    # matching marginal (pinch onto it and renormalize), so solve there
    groups: dict = {}
    for i in todo:
        iso = {k: _support_isometry(rhos[i].marginal(k).matrix) if alpha >= 0.5 else np.eye(dims[k])
               for k in free}
        key = tuple(iso[k].shape[1] for k in free)
        groups.setdefault(key, []).append((i, iso))
    for key, members in groups.items():
        idx = [i for i, _ in members]
        small = [_compress(rhos[i], iso) for i, iso in members]
        obj = DivergenceObjective(small, alpha, {k: np.stack([v[i] for i in idx]) for k, v in fixed.items()})
        if init is None:
            start = [np.stack([_interior(r.marginal(k).matrix) for r in small]) for k in free]
        else:
            start = [np.stack([_interior(iso[k].conj().T @ np.asarray(_mat(init[j][i]), dtype=complex) @ iso[k])
                               for i, iso in members]) for j, k in enumerate(free)]
        res = optimize_batch(obj.value_and_grad, len(idx), list(key), cfg, [seeds[i] for i in idx], start)
        for (i, iso), r in zip(members, res):
            out[i] = _expand(r, [iso[k] for k in free])
    return out


def _support_isometry(M) -> np.ndarray:
    return psd_eig(M)[1]


def _compress(rho: DensityMatrix, iso: dict) -> DensityMatrix:
    W = [iso.get(k, np.eye(d)) for k, d in enumerate(rho.dims)]
    K = np.kron(W[0], W[1])
    M = K.conj().T @ rho.matrix @ K
    return DensityMatrix(M / np.trace(M).real, (W[0].shape[1], W[1].shape[1]))


def _expand(r: OptResult, isos) -> OptResult:
    factors = tuple(V @ f @ V.conj().T for V, f in zip(isos, r.factors))
    joint = factors[0] if len(factors) == 1 else np.kron(*factors)
    return OptResult(DensityMatrix(joint, tuple(f.shape[0] for f in factors)), r.value, r.iterations,
                     r.converged, factors, r.restart_values)


def _mat(x):
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, (list, tuple)):
        return [_mat(y) for y in x]
    return x


def optimize_reference(rho, alpha, *, fixed, fixed_system: int, cfg=None, seed=0, init=None) -> OptResult:
    """inf over sigma of D_alpha(rho || fixed (x) sigma), `fixed` sitting on `fixed_system`."""
    init = None if init is None else [[init]]
    return reference_batch([as_density(rho)], alpha, {fixed_system: _mat(fixed)}, cfg=cfg, seed=[seed],
                           init=init)[0]


def mutual_info_batch(rhos, alpha, variant: str = "up", *, tau=None, marginal: int = 0, cfg=None,
                      seed=0) -> list[OptResult]:
    """Batched mutual information; see `mutual_info`."""
    rhos = _states(rhos)
    alpha = check_order(alpha)
    if any(len(r.dims) != 2 for r in rhos):
        raise ValidationError("mutual information needs a bipartite state")
    if variant == "up":
        fixed = {marginal: [r.marginal(marginal).matrix for r in rhos]}
    elif variant == "generalized":
        if tau is None:
            raise ValidationError("generalized mutual information needs tau")
        fixed = {marginal: _mat(tau)}
    elif variant == "down":
        fixed = {}
    else:
        raise ValidationError(f"unknown mutual-information variant {variant!r}")
    return reference_batch(rhos, alpha, fixed, cfg=cfg, seed=seed)


def mutual_info_result(rho, alpha, variant: str = "up", *, tau=None, marginal: int = 0, cfg=None, seed=0) -> OptResult:
    return mutual_info_batch([as_density(rho)], alpha, variant, tau=tau, marginal=marginal, cfg=cfg,
                             seed=[seed])[0]


def mutual_info(rho, alpha, variant: str = "up", *, tau=None, marginal: int = 0, cfg=None, seed=0) -> float:
    """I^up (marginal of system `marginal` fixed), I^down (both optimized) or I(rho || tau).

    Values are numerical infima, so they are upper bounds on the exact
    quantity. Raises ConvergenceError carrying the last iterate when the
    optimizer does not converge.
    """
    res = mutual_info_result(rho, alpha, variant, tau=tau, marginal=marginal, cfg=cfg, seed=seed)
    if not res.converged:
        raise ConvergenceError(res)
    return res.value


class ConvergenceError(RuntimeError):
    def __init__(self, result: OptResult):
        super().__init__(f"optimizer did not converge after {result.iterations} iterations "
                         f"(last value {result.value!r})")
        self.result = result


def duality_gap(rho_pure, tau_a, alpha, *, cfg=None, seed=0) -> float:
    """I_alpha(rho_AB || tau_A) + I_hat(rho_AC || tau_A^-1); zero up to optimizer error.

    `rho_pure` is a pure state on A, B, C (in that order).
    """
    gaps, conv = duality_gap_batch([rho_pure], [tau_a], alpha, cfg=cfg, seed=[seed])
    if not conv[0]:
        raise ConvergenceError(OptResult(as_density(rho_pure), float(gaps[0]), 0, False))
    return float(gaps[0])


def duality_gap_batch(rhos, taus, alpha, *, cfg=None, seed=0):
    """Duality gaps for a list of pure tripartite states; returns (gaps, converged)."""
    rhos = _states(rhos)
    alpha = check_order(alpha)
    if alpha < 0.5:
        raise ValidationError("duality holds for alpha >= 1/2")
    a_hat = hat(alpha)
    if math.isinf(a_hat):
        raise ValidationError("alpha = 1/2 maps to the dual order inf, which is not optimized")
    tau_inv = []
    for rho, tau_a in zip(rhos, taus):
        if len(rho.dims) != 3 or not rho.is_pure():
            raise ValidationError("duality_gap needs a pure tripartite state")
        tau = np.asarray(_mat(tau_a), dtype=complex)
        lam, V = psd_eig(tau)
        rho_a = rho.marginal(0).matrix
        P = V @ V.conj().T
        if np.linalg.norm(rho_a - P @ rho_a @ P) > 1e-10:
            raise ValidationError("tau_A must be full rank on the support of rho_A")
        tau_inv.append(mat_power_on_support(tau, -1.0))
    seeds = _seeds(seed, len(rhos))
    first = reference_batch([r.marginal(0, 1) for r in rhos], alpha, {0: [_mat(t) for t in taus]}, cfg=cfg,
                            seed=seeds)
    second = reference_batch([r.marginal(0, 2) for r in rhos], a_hat, {0: tau_inv}, cfg=cfg, seed=seeds)
    gaps = np.array([x.value + y.value for x, y in zip(first, second)])
    conv = np.array([x.converged and y.converged for x, y in zip(first, second)])
    return gaps, conv
