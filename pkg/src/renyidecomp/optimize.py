"""Optimization of entropic objectives over density matrices.

Iterates are parameterized as sigma = exp(H)/tr exp(H) with H Hermitian, so
every iterate is strictly positive with unit trace and no projection is
needed. Two solvers share that parameterization:

- "lbfgs" (default): L-BFGS on the real coordinates of H with the exact
  chain rule through the matrix exponential, vectorized over a stack of
  independent instances (scipy has no batched L-BFGS);
- "scipy": scipy's L-BFGS-B on the same coordinates, one instance at a time,
  kept as a reference implementation;
- "mirror": entropic mirror descent H <- H - eta * G (G the gradient with
  respect to sigma), Barzilai-Borwein steps with Armijo backtracking,
  vectorized like "lbfgs".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from scipy.optimize import minimize

from .entropies import Spectral
from .linalg import ValidationError, divided_differences
from .states import DensityMatrix

GradFn = Callable[[Sequence[np.ndarray]], "tuple[float, list[np.ndarray]]"]
# batched form: (stacked factors, instance indices) -> (values (m,), gradient stacks)
BatchGradFn = Callable[[Sequence[np.ndarray], np.ndarray], "tuple[np.ndarray, list[np.ndarray]]"]


METHODS = ("lbfgs", "scipy", "mirror")


@dataclass(frozen=True)
class SimplexOptConfig:
    tol_objective: float = 1e-9
    max_iters: int = 10_000
    restarts: int = 3
    sense: str = "minimize"
    patience: int = 5
    fd_step: float = 1e-5
    method: str = "lbfgs"

    def __post_init__(self):
        if not self.tol_objective > 0:
            raise ValidationError("tol_objective must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.sense not in ("minimize", "maximize"):
            raise ValidationError(f"sense must be minimize or maximize, got {self.sense!r}")
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}, got {self.method!r}")

    def tightened(self) -> "SimplexOptConfig":
        """Doubled-precision settings used when re-checking a suspected violation."""
        return replace(self, tol_objective=self.tol_objective / 100, max_iters=2 * self.max_iters,
                       restarts=max(3, 2 * self.restarts), patience=2 * self.patience)


@dataclass
class OptResult:
    optimizer: DensityMatrix
    value: float
    iterations: int
    converged: bool
    factors: tuple[np.ndarray, ...] = ()
    restart_values: tuple[float, ...] = field(default_factory=tuple)


LOG_SPREAD = 60.0


def _dag(M):
    return np.conj(np.swapaxes(M, -1, -2))


def density_from_log(H: np.ndarray) -> np.ndarray:
    """exp(H)/tr exp(H) (stackable), eigenvalue ratios floored at exp(-LOG_SPREAD)."""
    w, U = np.linalg.eigh((H + _dag(H)) / 2)
    e = np.exp(np.maximum(w - w.max(axis=-1, keepdims=True), -LOG_SPREAD))
    e = e / e.sum(axis=-1, keepdims=True)
    return (U * e[..., None, :]) @ _dag(U)


def log_of_density(S: np.ndarray, floor: float = 1e-14) -> np.ndarray:
    w, U = np.linalg.eigh((S + _dag(S)) / 2)
    return (U * np.log(np.clip(w, floor, None))[..., None, :]) @ _dag(U)


def _inner(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("nij,nij->n", np.conj(A), B))


def _fw_gap(S: np.ndarray, G: np.ndarray) -> np.ndarray:
    """tr(S G) - lambda_min(G) per instance: the largest first-order decrease on the simplex."""
    return _inner(G, S) - np.linalg.eigvalsh((G + _dag(G)) / 2)[:, 0]


def _safe(fg: BatchGradFn, sign: float) -> BatchGradFn:
    """Failed or non-finite evaluations count as +inf so the line search backs off."""
    def one(S, idx):
        with np.errstate(all="ignore"):
            f, G = fg(S, idx)
        f = sign * np.asarray(f, dtype=float)
        G = [sign * g for g in G]
        bad = ~np.isfinite(f)
        for g in G:
            bad |= ~np.all(np.isfinite(g), axis=(-2, -1))
        f = np.where(bad, np.inf, f)
        G = [np.where(bad[:, None, None], 0.0, g) for g in G]
        return f, G

    def wrapped(S, idx):
        try:
            return one(S, idx)
        except np.linalg.LinAlgError:
            fs, Gs = [], []
            if not all(isinstance(s, np.ndarray) for s in S):
                return np.full(len(idx), np.inf), [np.zeros((len(idx), d, d)) for d in _dims(S)]
            for j in range(len(idx)):
                try:
                    f, G = one([s[j:j + 1] for s in S], idx[j:j + 1])
                except np.linalg.LinAlgError:
                    f, G = np.array([np.inf]), [np.zeros_like(s[j:j + 1]) for s in S]
                fs.append(f)
                Gs.append(G)
            return np.concatenate(fs), [np.concatenate(g) for g in zip(*Gs)]
    return wrapped


def _dims(S):
    return [s.shape[-1] if isinstance(s, np.ndarray) else s.U.shape[-1] for s in S]


def mirror_descent(fg: BatchGradFn, H0: Sequence[np.ndarray], sign: float, tol: float, max_iters: int, patience: int):
    """Minimize sign * f for every instance of a stack, from log-iterates H0.

    Each iteration tries one step per active instance; a rejected step halves
    that instance's step size and leaves it in place. Stops an instance when
    its Frank-Wolfe gap drops to `tol` or its value moves by less than `tol`
    for `patience` accepted steps in a row.
    """
    fg = _safe(fg, sign)
    Hs = [np.array(H, dtype=complex) for H in H0]
    n = Hs[0].shape[0]
    S = [density_from_log(H) for H in Hs]
    f, G = fg(S, np.arange(n))
    eta = 1.0 / np.maximum(1e-12, np.max([np.max(np.abs(g), axis=(1, 2)) for g in G], axis=0))
    quiet = np.zeros(n, dtype=int)
    iters = np.zeros(n, dtype=int)
    done = ~np.isfinite(f)
    conv = np.zeros(n, dtype=bool)
    for _ in range(max_iters):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        gap = sum(_fw_gap(s[act], g[act]) for s, g in zip(S, G))
        small = gap <= tol
        done[act[small]] = conv[act[small]] = True
        act = act[~small]
        if act.size == 0:
            break
        iters[act] += 1
        Hn = [H[act] - eta[act, None, None] * g[act] for H, g in zip(Hs, G)]
        Sn = [density_from_log(H) for H in Hn]
        fn, Gn = fg(Sn, act)
        decrease = sum(_inner(g[act], s[act] - sn) for g, s, sn in zip(G, S, Sn))
        fa = f[act]
        ok = fn <= fa - 1e-4 * np.maximum(decrease, 0.0) + 1e-14 * (1.0 + np.abs(fa))
        rej = act[~ok]
        eta[rej] *= 0.5
        dead = rej[eta[rej] < 1e-14]
        done[dead] = True
        conv[dead] = quiet[dead] > 0
        loc, acc = np.flatnonzero(ok), act[ok]
        if acc.size == 0:
            continue
        sy = sum(_inner(hn[loc] - H[acc], gn[loc] - g[acc]) for hn, H, gn, g in zip(Hn, Hs, Gn, G))
        ss = sum(_inner(hn[loc] - H[acc], hn[loc] - H[acc]) for hn, H in zip(Hn, Hs))
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = np.where(sy > 0, np.minimum(ss / sy, 4.0 * eta[acc]), 2.0 * eta[acc])
        eta[acc] = np.clip(bb, 1e-8, 1e8)
        quiet[acc] = np.where(np.abs(fa[loc] - fn[loc]) < tol, quiet[acc] + 1, 0)
        for k in range(len(Hs)):
            h = Hn[k][loc]
            d = h.shape[-1]
            Hs[k][acc] = h - (np.trace(h, axis1=1, axis2=2).real / d)[:, None, None] * np.eye(d)
            S[k][acc] = Sn[k][loc]
            G[k][acc] = Gn[k][loc]
        f[acc] = fn[loc]
        fin = acc[quiet[acc] >= patience]
        done[fin] = conv[fin] = True
    return S, sign * f, iters, conv


def _coords(bases, dims):
    cuts = np.cumsum([0] + [d * d for d in dims])

    def to_x(Hs):
        return np.concatenate([np.real(np.asarray(H).reshape(H.shape[0], -1) @ B.conj().T)
                               for B, H in zip(bases, Hs)], axis=1)

    def spectra(x):
        out = []
        for k, (B, d) in enumerate(zip(bases, dims)):
            H = (x[:, cuts[k]:cuts[k + 1]] @ B).reshape(-1, d, d)
            w, U = np.linalg.eigh(H)
            w = np.maximum(w - w.max(axis=1, keepdims=True), -LOG_SPREAD)
            e = np.exp(w)
            out.append(Spectral(e / e.sum(axis=1, keepdims=True), U))
        return out

    return to_x, spectra


def _log_coord_grad(spec: Spectral, G: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gradient with respect to the coordinates of H, given G = df/dsigma (stacked)."""
    s_, U = spec.w, spec.U
    Uh = np.conj(np.swapaxes(U, -1, -2))
    M = Uh @ G @ U
    L = divided_differences(np.log(s_), np.exp, np.exp)
    tr = np.real(np.einsum("ni,nii->n", s_, M))
    De = L * M
    i = np.arange(s_.shape[1])
    De[:, i, i] -= tr[:, None] * s_
    D = U @ De @ Uh
    return np.real(D.reshape(D.shape[0], -1) @ B.conj().T)


def batched_lbfgs(fg: BatchGradFn, H0: Sequence[np.ndarray], sign: float, cfg: SimplexOptConfig,
                  memory: int = 20):
    """L-BFGS with backtracking, run independently on every instance of a stack.

    Each outer iteration tries one step per active instance. An instance
    stops when its gradient (in H coordinates) is below GRAD_TOL, when a
    step reduces the value by less than FTOL_SCALE * tol_objective relative
    to max(|f|, 1), or when the line search stalls (converged if the
    gradient is below STALL_GRAD_TOL). Every stop is then probed along the
    Frank-Wolfe direction; if that still descends, the run resumes from the
    better point.
    """
    fg = _safe(fg, sign)
    dims = [H.shape[-1] for H in H0]
    bases = [_basis_matrix(d) for d in dims]
    to_x, spectra = _coords(bases, dims)

    def F(xs, idx):
        spec = spectra(xs)
        f, G = fg(spec, idx)
        g = np.concatenate([_log_coord_grad(sp, Gk, B) for sp, Gk, B in zip(spec, G, bases)], axis=1)
        return f, g, spec, G

    x = to_x(H0)
    n = x.shape[0]
    f = np.full(n, np.inf)
    S = [np.zeros((n, d, d), dtype=complex) for d in dims]
    conv = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    todo = np.arange(n)
    for round_ in range(PROBE_ROUNDS + 1):
        xr, fr, Sr, Gr, cr, it = _lbfgs_core(F, x[todo], todo, cfg, memory)
        iters[todo] += it
        better = ~(fr > f[todo])
        upd = todo[better]
        f[upd], conv[upd] = fr[better], cr[better]
        for k in range(len(dims)):
            S[k][upd] = Sr[k][better]
        if round_ == PROBE_ROUNDS:
            break
        # probe the stopped points: move towards the best extreme point
        ok = np.flatnonzero(better & cr)
        if ok.size == 0:
            break
        ids = todo[ok]
        V = [np.linalg.eigh((G[ok] + _dag(G[ok])) / 2)[1][:, :, :1] for G in Gr]
        best = f[ids].copy()
        best_S = None
        for gam in PROBE_STEPS:
            P = [(1 - gam) * S[k][ids] + gam * (V[k] @ _dag(V[k])) for k in range(len(dims))]
            fp, _ = fg(P, ids)
            gain = fp < best - PROBE_TOL * np.maximum(1.0, np.abs(best))
            if best_S is None:
                best_S = [Sk[ids].copy() for Sk in S]
            best = np.where(gain, fp, best)
            for k in range(len(dims)):
                best_S[k][gain] = P[k][gain]
        moved = np.flatnonzero(best < f[ids] - PROBE_TOL * np.maximum(1.0, np.abs(f[ids])))
        if moved.size == 0:
            break
        todo = ids[moved]
        x[todo] = to_x([log_of_density(Bk[moved]) for Bk in best_S])
        conv[todo] = False
    return S, sign * f, iters, conv


def _lbfgs_core(F, x, idx, cfg: SimplexOptConfig, memory: int):
    n, p = x.shape
    f, g, spec, Gs = F(x, idx)
    spec = [Spectral(sp.w.copy(), sp.U.copy()) for sp in spec]
    Gs = [G.copy() for G in Gs]
    ftol = cfg.tol_objective * FTOL_SCALE
    Sm = np.zeros((n, memory, p))
    Ym = np.zeros((n, memory, p))
    rho = np.zeros((n, memory))
    cnt = np.zeros(n, dtype=int)
    d = -g
    t = np.minimum(1.0, 1.0 / np.maximum(np.linalg.norm(g, axis=1), 1e-300))
    done = ~np.isfinite(f)
    conv = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    for _ in range(cfg.max_iters):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        small = np.max(np.abs(g[act]), axis=1) <= GRAD_TOL
        done[act[small]] = conv[act[small]] = True
        act = act[~small]
        if act.size == 0:
            break
        iters[act] += 1
        # long steps in log coordinates can jump onto the flat boundary region
        reach = t[act] * np.max(np.abs(d[act]), axis=1)
        t[act] *= np.minimum(1.0, MAX_STEP / np.maximum(reach, 1e-300))
        xt = x[act] + t[act, None] * d[act]
        ft, gt, spt, Gt = F(xt, idx[act])
        fa = f[act]
        gd = np.sum(g[act] * d[act], axis=1)
        ok = ft <= fa + 1e-4 * t[act] * gd
        # rejected: shrink by safeguarded quadratic interpolation
        rej, lr = act[~ok], np.flatnonzero(~ok)
        if rej.size:
            tr_, gdr = t[rej], gd[lr]
            with np.errstate(all="ignore"):
                curv = ft[lr] - fa[lr] - gdr * tr_
                tq = np.where(np.isfinite(curv) & (curv > 0), -gdr * tr_ ** 2 / (2 * curv), 0.5 * tr_)
            t[rej] = np.clip(tq, 0.1 * tr_, 0.5 * tr_)
            dead = rej[t[rej] < 1e-20]
            done[dead] = True
            conv[dead] = np.max(np.abs(g[dead]), axis=1) <= STALL_GRAD_TOL
        acc, la = act[ok], np.flatnonzero(ok)
        if acc.size == 0:
            continue
        s_ = xt[la] - x[acc]
        y_ = gt[la] - g[acc]
        sy = np.sum(s_ * y_, axis=1)
        keep = sy > 1e-12 * np.linalg.norm(s_, axis=1) * np.linalg.norm(y_, axis=1)
        upd = acc[keep]
        Sm[upd] = np.roll(Sm[upd], 1, axis=1)
        Ym[upd] = np.roll(Ym[upd], 1, axis=1)
        rho[upd] = np.roll(rho[upd], 1, axis=1)
        Sm[upd, 0] = s_[keep]
        Ym[upd, 0] = y_[keep]
        rho[upd, 0] = 1.0 / sy[keep]
        cnt[upd] = np.minimum(cnt[upd] + 1, memory)
        rel = (fa[la] - ft[la]) / np.maximum(np.maximum(np.abs(fa[la]), np.abs(ft[la])), 1.0)
        x[acc], f[acc], g[acc] = xt[la], ft[la], gt[la]
        for k in range(len(spec)):
            spec[k].w[acc] = spt[k].w[la]
            spec[k].U[acc] = spt[k].U[la]
            Gs[k][acc] = Gt[k][la]
        flat = acc[rel <= ftol]
        done[flat] = conv[flat] = True
        # two-loop recursion for the new directions
        q = g[acc].copy()
        c = cnt[acc]
        A = np.zeros((acc.size, memory))
        for i in range(memory):
            v = i < c
            a = np.where(v, rho[acc, i] * np.sum(Sm[acc, i] * q, axis=1), 0.0)
            q -= a[:, None] * Ym[acc, i]
            A[:, i] = a
        y0, s0 = Ym[acc, 0], Sm[acc, 0]
        yy = np.sum(y0 * y0, axis=1)
        gamma = np.where((c > 0) & (yy > 0), np.sum(s0 * y0, axis=1) / np.where(yy > 0, yy, 1.0), 1.0)
        r = gamma[:, None] * q
        for i in reversed(range(memory)):
            v = i < c
            b = np.where(v, rho[acc, i] * np.sum(Ym[acc, i] * r, axis=1), 0.0)
            r += Sm[acc, i] * (A[:, i] - b)[:, None]
        dn = -r
        bad = np.sum(dn * g[acc], axis=1) >= 0
        gn = np.linalg.norm(g[acc], axis=1)
        dn[bad] = -g[acc][bad]
        cnt[acc[bad]] = 0
        d[acc] = dn
        t[acc] = np.where(bad | (c == 0), np.minimum(1.0, 1.0 / np.maximum(gn, 1e-300)), 1.0)
    S = [(sp.U * sp.w[:, None, :]) @ np.conj(np.swapaxes(sp.U, -1, -2)) for sp in spec]
    return x, f, S, Gs, conv, iters


FTOL_SCALE = 1e-6
MAX_STEP = 8.0
PROBE_ROUNDS = 3
PROBE_STEPS = (1e-6, 1e-4, 1e-2, 0.1, 0.5)
PROBE_TOL = 1e-10


def _lbfgs_all(fg: BatchGradFn, H0: Sequence[np.ndarray], sign: float, cfg: SimplexOptConfig):
    """Run L-BFGS separately on every instance of the stack."""
    m = H0[0].shape[0]
    S = [np.empty_like(H) for H in H0]
    f = np.empty(m)
    iters = np.zeros(m, dtype=int)
    conv = np.zeros(m, dtype=bool)
    for j in range(m):
        idx = np.array([j])
        Sj, f[j], iters[j], conv[j] = lbfgs(lambda X, _, idx=idx: fg(X, idx), [H[j] for H in H0], sign, cfg)
        for k in range(len(S)):
            S[k][j] = Sj[k]
    return S, f, iters, conv


def _basis_matrix(d: int) -> np.ndarray:
    """Rows are the flattened orthonormal Hermitian basis of d x d matrices."""
    return np.array(_hermitian_basis(d)).reshape(d * d, d * d)


def lbfgs(fg, H0: Sequence[np.ndarray], sign: float, cfg: SimplexOptConfig):
    """Minimize sign * f over a product of density simplices for one instance.

    `fg` is a batched objective evaluated at instance 0 only. Returns
    (factors, best value, evaluations, converged).
    """
    fg = _safe(fg, sign)
    dims = [H.shape[-1] for H in H0]
    bases = [_basis_matrix(d) for d in dims]
    cuts = np.cumsum([0] + [d * d for d in dims])
    x0 = np.concatenate([np.real(B.conj() @ np.asarray(H).ravel()) for B, H in zip(bases, H0)])
    best = [np.inf, None]
    calls = [0]

    def fun(x):
        calls[0] += 1
        spec = []
        for k, (B, d) in enumerate(zip(bases, dims)):
            H = (x[cuts[k]:cuts[k + 1]] @ B).reshape(d, d)
            w, U = np.linalg.eigh(H)
            w = np.maximum(w - w.max(), -LOG_SPREAD)
            e = np.exp(w)
            spec.append(Spectral((e / e.sum())[None], U[None]))
        fv, G = fg(spec, _ONE)
        fv = float(fv[0])
        if not np.isfinite(fv):
            return fv, np.zeros_like(x)
        if fv < best[0]:
            best[0] = fv
            best[1] = [(sp.U[0] * sp.w[0]) @ sp.U[0].conj().T for sp in spec]
        grad = []
        for sp, Gk, B in zip(spec, G, bases):
            s_, U = sp.w[0], sp.U[0]
            M = U.conj().T @ Gk[0] @ U
            # chain rule through sigma = exp(H)/tr exp(H), in the eigenbasis of H
            L = divided_differences(np.log(s_), np.exp, np.exp)
            De = L * M - np.real(np.dot(s_, np.diag(M))) * np.diag(s_)
            grad.append(np.real(B.conj() @ (U @ De @ U.conj().T).ravel()))
        return fv, np.concatenate(grad)

    f0, _ = fun(x0)
    if not np.isfinite(f0):
        S0 = [density_from_log(np.asarray(H)[None])[0] for H in H0]
        return S0, sign * f0, calls[0], False
    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options=dict(maxiter=cfg.max_iters, maxfun=2 * cfg.max_iters, ftol=cfg.tol_objective * 1e-6,
                                gtol=GRAD_TOL, maxcor=20))
    # a line-search stall at float precision with a tiny gradient is a converged point
    conv = bool(res.success) or bool(np.max(np.abs(res.jac), initial=0.0) <= STALL_GRAD_TOL)
    return best[1], sign * best[0], calls[0], conv


_ONE = np.array([0])
GRAD_TOL = 1e-10
STALL_GRAD_TOL = 1e-6


def _hermitian_basis(d: int) -> list[np.ndarray]:
    basis = []
    for j in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[j, j] = 1.0
        basis.append(E)
    r = 1 / math.sqrt(2)
    for j in range(d):
        for k in range(j + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[j, k] = E[k, j] = r
            basis.append(E)
            E = np.zeros((d, d), dtype=complex)
            E[j, k], E[k, j] = -1j * r, 1j * r
            basis.append(E)
    return basis


def finite_difference_grad(objective: Callable[[DensityMatrix], float], d: int, step: float) -> GradFn:
    """Central differences over a Hermitian operator basis.

    Perturbed points are renormalized to unit trace, which shifts the
    gradient by a multiple of the identity; mirror steps ignore that shift.
    """
    basis = _hermitian_basis(d)

    def fg(sigmas):
        S = sigmas[0]
        f0 = objective(_as_state(S))
        lam_min = float(np.linalg.eigvalsh(S)[0])
        h = min(step, 0.5 * lam_min) if lam_min > 0 else step
        G = np.zeros((d, d), dtype=complex)
        for E in basis:
            fp = objective(_as_state(S + h * E))
            fm = objective(_as_state(S - h * E))
            G += (fp - fm) / (2 * h) * E
        return f0, [G]

    return fg


def _as_state(S: np.ndarray) -> DensityMatrix:
    S = (S + S.conj().T) / 2
    return DensityMatrix(S / np.trace(S).real, (S.shape[0],))


def _random_log(d: int, rng: np.random.Generator) -> np.ndarray:
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (A + A.conj().T) / 2


def optimize_batch(fg: BatchGradFn, n: int, dims: Sequence[int], cfg: SimplexOptConfig, seeds,
                   init: Sequence[np.ndarray] | None = None) -> list[OptResult]:
    """Optimize n instances over a product of density simplices, all restarts at once.

    Restart 0 starts at `init` (one (n, d, d) stack per factor) or at the
    maximally mixed state; later restarts start from random points drawn
    from each instance's own seed, so results do not depend on batching.
    """
    dims = [int(d) for d in dims]
    seeds = [int(x) for x in np.broadcast_to(np.asarray(seeds), (n,))]
    R = cfg.restarts
    H0 = []
    for k, d in enumerate(dims):
        if init is not None:
            first = log_of_density(np.asarray(init[k], dtype=complex).reshape(n, d, d))
        else:
            first = np.zeros((n, d, d), dtype=complex)
        H0.append([first])
    rngs = [np.random.default_rng(x) for x in seeds]
    for _ in range(1, R):
        draws = [[_random_log(d, rng) for d in dims] for rng in rngs]
        for k in range(len(dims)):
            H0[k].append(np.stack([dr[k] for dr in draws]))
    H0 = [np.concatenate(h) for h in H0]

    def rep(S, idx):
        return fg(S, idx % n)

    sign = 1.0 if cfg.sense == "minimize" else -1.0
    if cfg.method == "mirror":
        S, f, iters, conv = mirror_descent(rep, H0, sign, cfg.tol_objective, cfg.max_iters, cfg.patience)
    elif cfg.method == "scipy":
        S, f, iters, conv = _lbfgs_all(rep, H0, sign, cfg)
    else:
        S, f, iters, conv = batched_lbfgs(rep, H0, sign, cfg)
    f = f.reshape(R, n)
    out = []
    for i in range(n):
        vals = f[:, i]
        r = int(np.argmin(sign * vals))
        j = r * n + i
        factors = tuple(_normalized(s[j]) for s in S)
        joint = factors[0]
        for x in factors[1:]:
            joint = np.kron(joint, x)
        out.append(OptResult(DensityMatrix(joint, tuple(dims)), float(vals[r]),
                             int(iters.reshape(R, n)[:, i].sum()), bool(conv[j]), factors,
                             tuple(float(v) for v in vals)))
    return out


def _normalized(s: np.ndarray) -> np.ndarray:
    s = (s + s.conj().T) / 2
    return s / np.trace(s).real


def optimize_blocks(fg: GradFn, dims: Sequence[int], cfg: SimplexOptConfig, seed=0,
                    init: Sequence[np.ndarray] | None = None) -> OptResult:
    """Single-instance version of `optimize_batch` for an unbatched objective."""
    def batched(S, idx):
        S = [s if isinstance(s, np.ndarray) else (s.U * s.w[:, None, :]) @ _dag(s.U) for s in S]
        vals, grads = [], []
        for j in range(len(idx)):
            v, g = fg([s[j] for s in S])
            vals.append(v)
            grads.append(g)
        return np.array(vals, dtype=float), [np.stack(g) for g in zip(*grads)]

    init = None if init is None else [np.asarray(x, dtype=complex)[None] for x in init]
    return optimize_batch(batched, 1, dims, cfg, [seed], init)[0]


def optimize_over_density(objective: Callable[[DensityMatrix], float], dim: int,
                          cfg: SimplexOptConfig = SimplexOptConfig(), seed=0, *,
                          grad: GradFn | None = None, init=None) -> OptResult:
    """Minimize or maximize `objective` over dim x dim density matrices.

    Without `grad`, gradients come from central finite differences. The
    returned value is the best over all restarts; callers decide what to do
    when `converged` is False.
    """
    if grad is None:
        grad = finite_difference_grad(objective, dim, cfg.fd_step)
    return optimize_blocks(grad, [dim], cfg, seed, None if init is None else [_matrix(init)])


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityMatrix) else np.asarray(x, dtype=complex)


# -- independent oracle ----------------------------------------------------------

_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def bloch_grid(resolution: int) -> np.ndarray:
    """Stack of qubit states on a radius x polar x azimuth grid (center and pure shell included)."""
    n = int(resolution)
    if n < 2:
        raise ValidationError("resolution must be >= 2")
    r = np.linspace(0.0, 1.0, n)[1:]
    th = np.linspace(0.0, np.pi, n)
    ph = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    R, T, P = np.meshgrid(r, th, ph, indexing="ij")
    vec = np.stack([R * np.sin(T) * np.cos(P), R * np.sin(T) * np.sin(P), R * np.cos(T)], axis=-1).reshape(-1, 3)
    vec = np.vstack([np.zeros((1, 3)), vec])
    return 0.5 * (np.eye(2)[None] + np.einsum("ni,ijk->njk", vec, _PAULI))


def qubit_grid_oracle(objective, resolution: int, sense: str = "minimize", *, batch=None) -> OptResult:
    """Exhaustive Bloch-ball scan; returns the best grid point.

    `batch`, if given, maps an (N, 2, 2) stack to N objective values and is
    used instead of calling `objective` point by point.
    """
    grid = bloch_grid(resolution)
    if batch is not None:
        vals = np.asarray(batch(grid), dtype=float)
    else:
        vals = np.array([objective(DensityMatrix(S, (2,))) for S in grid], dtype=float)
    vals = np.where(np.isnan(vals), np.inf if sense == "minimize" else -np.inf, vals)
    i = int(np.argmin(vals) if sense == "minimize" else np.argmax(vals))
    return OptResult(DensityMatrix(grid[i], (2,)), float(vals[i]), len(grid), True, (grid[i],))
