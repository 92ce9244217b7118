"""Dense complex linear algebra for small Hermitian operators.

Every spectral routine works on the support of its argument: eigenvalues
below ``KERNEL_EPS * lambda_max`` are exact zeros, so negative and fractional
powers leave kernel directions at zero instead of amplifying round-off.
"""

from __future__ import annotations

from functools import reduce
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

KERNEL_EPS = 1e-12
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class EigenSystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class SupportRelation(NamedTuple):
    dominates: bool
    perpendicular: bool


def as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    return A


def hermitize(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (M + M^dagger)/2, rejecting inputs that are not Hermitian within `tol`."""
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"matrix is not square: {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    asym = float(np.max(np.abs(A - A.conj().T), initial=0.0))
    if asym > tol * scale:
        raise ValidationError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return (A + A.conj().T) / 2


def eig_hermitian(M, tol: float = HERMITIAN_TOL) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    w, U = np.linalg.eigh(hermitize(M, tol))
    return EigenSystem(w, U)


def support_mask(values: np.ndarray, eps: float = KERNEL_EPS) -> np.ndarray:
    top = float(np.max(values, initial=0.0))
    if top <= 0.0:
        return np.zeros(values.shape, dtype=bool)
    return values > eps * top


def check_psd(values: np.ndarray, tol: float = PSD_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    low = float(np.min(values, initial=0.0))
    if low < -tol * scale:
        raise ValidationError(f"matrix is not positive semidefinite (eigenvalue {low:.3e})")


def psd_eig(M, eps: float = KERNEL_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues/vectors of a PSD matrix restricted to its support."""
    w, U = eig_hermitian(M)
    check_psd(w)
    keep = support_mask(w, eps)
    return w[keep], U[:, keep]


def spectral_apply(M, f: Callable[[np.ndarray], np.ndarray], eps: float = KERNEL_EPS) -> np.ndarray:
    """Apply `f` to the nonzero spectrum of PSD `M`; kernel maps to zero."""
    w, V = psd_eig(M, eps)
    return (V * f(w)) @ V.conj().T


def mat_power_on_support(M, p: float, eps: float = KERNEL_EPS) -> np.ndarray:
    if not np.isfinite(p):
        raise ValidationError("power must be finite")
    return spectral_apply(M, lambda w: w**p, eps)


def mat_log_on_support(M, eps: float = KERNEL_EPS) -> np.ndarray:
    """Base-2 logarithm on the support."""
    return spectral_apply(M, np.log2, eps)


def support_projector(M, eps: float = KERNEL_EPS) -> np.ndarray:
    _, V = psd_eig(M, eps)
    return V @ V.conj().T


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(as_matrix(M), compute_uv=False)


def schatten_norm(M, p: float) -> float:
    """(sum_i s_i^p)^(1/p); a quasi-norm for p < 1, the operator norm for p = inf."""
    if not p > 0:
        raise ValidationError(f"Schatten index must be positive, got {p}")
    s = singular_values(M)
    if np.isinf(p):
        return float(np.max(s, initial=0.0))
    s = s[s > 0]
    if s.size == 0:
        return 0.0
    # factor out the largest value so large p cannot overflow
    top = s.max()
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def tensor_product(*mats) -> np.ndarray:
    """Kronecker product, first argument outermost."""
    if not mats:
        raise ValidationError("tensor_product needs at least one factor")
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def check_shape(M: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValidationError(f"subsystem dimensions must be >= 1: {dims}")
    n = int(np.prod(dims))
    if M.shape != (n, n):
        raise ValidationError(f"shape {dims} inconsistent with matrix of size {M.shape}")
    return dims


def partial_trace(M, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in `keep` (kept order is ascending)."""
    A = as_matrix(M)
    dims = check_shape(A, dims)
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if any(k < 0 or k >= n for k in keep):
        raise ValidationError(f"keep indices {keep} out of range for {n} subsystems")
    T = A.reshape(dims + dims)
    rows = list(range(n))
    cols = [k + n if k in keep else k for k in range(n)]
    out = [k for k in keep] + [k + n for k in keep]
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(T, rows + cols, out).reshape(d, d)


def support_relation(rho, sigma, tol: float = 1e-10, eps: float = KERNEL_EPS) -> SupportRelation:
    """Kernel containment (sigma >> rho) and orthogonality of the two supports."""
    P_sigma = support_projector(sigma, eps)
    P_rho = support_projector(rho, eps)
    R = as_matrix(rho)
    Q = np.eye(R.shape[0]) - P_sigma
    scale = max(1.0, float(np.linalg.norm(R, 2)))
    dominates = float(np.linalg.norm(Q @ R @ Q, 2)) <= tol * scale
    perpendicular = float(np.linalg.norm(P_sigma @ P_rho, 2)) <= tol
    return SupportRelation(dominates, perpendicular)


def divided_differences(w: np.ndarray, f: Callable, df: Callable, rtol: float = 1e-7) -> np.ndarray:
    """First divided differences of f on the eigenvalues w (Loewner matrix).

    Works on a stack: w of shape (..., d) gives (..., d, d).
    """
    fw = f(w)
    a, b = w[..., :, None], w[..., None, :]
    dw = a - b
    close = np.abs(dw) <= rtol * (np.abs(a) + np.abs(b)) + 1e-300
    safe = np.where(close, 1.0, dw)
    L = (fw[..., :, None] - fw[..., None, :]) / safe
    return np.where(close, df((a + b) / 2), L)


def frechet_adjoint(w: np.ndarray, U: np.ndarray, f: Callable, df: Callable, E: np.ndarray) -> np.ndarray:
    """Directional derivative Df(M)[E] for M = U diag(w) U^dagger (stackable).

    Df(M) is self-adjoint under the trace inner product, so this is also the
    gradient of M -> tr[E f(M)].
    """
    L = divided_differences(w, f, df)
    Uh = np.conj(np.swapaxes(U, -1, -2))
    return U @ (L * (Uh @ E @ U)) @ Uh
