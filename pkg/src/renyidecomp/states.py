"""Density matrices, purifications, operator-vector correspondence and measurements."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import (
    ValidationError,
    as_matrix,
    check_psd,
    check_shape,
    hermitize,
    partial_trace,
    tensor_product,
)

STATE_TOL = 1e-10

KINDS = ("haar_pure", "hs_mixed", "product", "classical_quantum", "max_entangled")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A unit-trace PSD operator on a composite system with subsystem dimensions `dims`."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        M = hermitize(self.matrix)
        dims = check_shape(M, self.dims)
        w = np.linalg.eigvalsh(M)
        check_psd(w, STATE_TOL)
        tr = float(np.trace(M).real)
        if abs(tr - 1.0) > STATE_TOL:
            raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def marginal(self, *keep: int) -> "DensityMatrix":
        keep = sorted(keep)
        M = partial_trace(self.matrix, self.dims, keep)
        return DensityMatrix(M, tuple(self.dims[k] for k in keep), self.seed)

    def eigenvalues(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    def is_pure(self, tol: float = 1e-8) -> bool:
        return abs(float(np.trace(self.matrix @ self.matrix).real) - 1.0) <= tol

    def relabel(self, dims: Sequence[int]) -> "DensityMatrix":
        return DensityMatrix(self.matrix, tuple(dims), self.seed)


def as_density(rho, dims: Sequence[int] | None = None) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho if dims is None or tuple(dims) == rho.dims else rho.relabel(dims)
    M = as_matrix(rho)
    return DensityMatrix(M, tuple(dims) if dims is not None else (M.shape[0],))


def pure_state(vec, dims: Sequence[int] | None = None) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), tuple(dims) if dims else (v.size,))


def swap_systems(rho: DensityMatrix, order: Sequence[int]) -> DensityMatrix:
    """Permute the tensor factors of `rho` into `order`."""
    n = len(rho.dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValidationError(f"{order} is not a permutation of {n} systems")
    T = rho.matrix.reshape(rho.dims + rho.dims)
    T = T.transpose(order + [k + n for k in order])
    dims = tuple(rho.dims[k] for k in order)
    D = rho.dim
    return DensityMatrix(T.reshape(D, D), dims, rho.seed)


# -- randomness ---------------------------------------------------------------


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed for (seed, keys), stable across runs and platforms."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar unitary from QR of a complex Ginibre matrix with phase-fixed R diagonal."""
    rng = _rng(seed)
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def haar_vector(d: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _hs_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = haar_vector(d * d, rng).reshape(d, d)
    return psi @ psi.conj().T


def random_state(kind: str, dims: Sequence[int], seed: int) -> DensityMatrix:
    """Sample a state of the requested ensemble; deterministic in `seed`."""
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValidationError(f"invalid subsystem dimensions {dims}")
    if kind not in KINDS:
        raise ValidationError(f"unknown state kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    D = int(np.prod(dims))
    if kind == "haar_pure":
        v = haar_vector(D, rng)
        M = np.outer(v, v.conj())
    elif kind == "hs_mixed":
        M = _hs_matrix(D, rng)
    elif kind == "product":
        M = tensor_product(*(_hs_matrix(d, rng) for d in dims))
    elif kind == "classical_quantum":
        if len(dims) != 2:
            raise ValidationError("classical_quantum states need exactly two systems")
        dx, db = dims
        p = rng.dirichlet(np.ones(dx))
        blocks = [p[x] * np.diag(rng.dirichlet(np.ones(db))) for x in range(dx)]
        M = np.zeros((D, D), dtype=complex)
        for x, blk in enumerate(blocks):
            M[x * db:(x + 1) * db, x * db:(x + 1) * db] = blk
    else:
        if len(dims) != 2 or dims[0] != dims[1]:
            raise ValidationError("max_entangled needs two systems of equal dimension")
        d = dims[0]
        v = np.eye(d).ravel() / np.sqrt(d)
        M = np.outer(v, v.conj())
    M = (M + M.conj().T) / 2
    return DensityMatrix(M / np.trace(M).real, dims, seed)


# -- purification and operator-vector correspondence --------------------------


def purification_vector(rho: DensityMatrix) -> np.ndarray:
    """|phi> = sum_i sqrt(lambda_i) |v_i>|i>, eigenvalues in descending order."""
    w, V = np.linalg.eigh(rho.matrix)
    w, V = np.clip(w[::-1], 0.0, None), V[:, ::-1]
    # entry (a, c) of the vector is V[a, c] sqrt(w[c])
    return (V * np.sqrt(w)).reshape(-1)


def purify(rho: DensityMatrix) -> DensityMatrix:
    """Pure state on (dims..., C) with dim C = dim(rho) whose marginal is rho."""
    v = purification_vector(rho)
    return DensityMatrix(np.outer(v, v.conj()), rho.dims + (rho.dim,), rho.seed)


@dataclass(frozen=True)
class OperatorForm:
    """Op(|psi>): the linear map from the input factors to the output factors."""

    matrix: np.ndarray
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    @property
    def in_dim(self) -> int:
        return int(np.prod(self.in_dims))

    @property
    def out_dim(self) -> int:
        return int(np.prod(self.out_dims))


def op_vec(psi, dims: Sequence[int], inputs: Iterable[int]) -> OperatorForm:
    """Map |e_i>|f_j> to |f_j><e_i|, with the `inputs` factors as the domain.

    Output factors keep their relative order, as do the input factors.
    """
    v = np.asarray(psi, dtype=complex).ravel()
    dims = tuple(int(d) for d in dims)
    if v.size != int(np.prod(dims)):
        raise ValidationError(f"vector of length {v.size} does not match dims {dims}")
    inputs = sorted(set(inputs))
    outputs = [k for k in range(len(dims)) if k not in inputs]
    T = v.reshape(dims).transpose(outputs + inputs)
    in_dims = tuple(dims[k] for k in inputs)
    out_dims = tuple(dims[k] for k in outputs)
    X = T.reshape(int(np.prod(out_dims)), int(np.prod(in_dims)))
    return OperatorForm(X, in_dims, out_dims)


# -- measurements ---------------------------------------------------------------


def check_basis(basis, d: int | None = None, tol: float = 1e-10) -> np.ndarray:
    U = as_matrix(basis)
    if U.shape[0] != U.shape[1] or (d is not None and U.shape[0] != d):
        raise ValidationError(f"basis has shape {U.shape}, expected ({d}, {d})")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > tol:
        raise ValidationError("basis is not orthonormal")
    return U


def overlap_c(basis_x, basis_z) -> float:
    """max_{x,z} |<e_x|f_z>|^2 for bases given as column matrices."""
    Ux, Uz = check_basis(basis_x), check_basis(basis_z)
    return float(np.max(np.abs(Ux.conj().T @ Uz) ** 2))


def fourier_basis(d: int) -> np.ndarray:
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


@dataclass(frozen=True)
class MeasurementPair:
    basis_x: np.ndarray
    basis_z: np.ndarray
    overlap: float = field(init=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "overlap", overlap_c(self.basis_x, self.basis_z))

    @property
    def d(self) -> int:
        return self.basis_x.shape[0]

    @classmethod
    def mub(cls, d: int) -> "MeasurementPair":
        pair = cls(np.eye(d, dtype=complex), fourier_basis(d), label=f"mub{d}")
        # the computed overlap carries rounding; it is exactly 1/d here
        object.__setattr__(pair, "overlap", 1.0 / d)
        return pair

    @classmethod
    def haar(cls, d: int, seed: int) -> "MeasurementPair":
        rng = np.random.default_rng(seed)
        return cls(random_unitary(d, rng), random_unitary(d, rng), label=f"haar{d}:{seed}")


def _embed_projectors(basis: np.ndarray, dims: tuple[int, ...], system: int) -> list[np.ndarray]:
    out = []
    for x in range(basis.shape[1]):
        P = np.outer(basis[:, x], basis[:, x].conj())
        factors = [P if k == system else np.eye(d) for k, d in enumerate(dims)]
        out.append(tensor_product(*factors))
    return out


def pinch_measure(rho: DensityMatrix, basis, system: int = 0) -> DensityMatrix:
    """Measure `system` in `basis`; the register X stays in the same space, block-diagonal in the basis."""
    U = check_basis(basis, rho.dims[system])
    M = sum(P @ rho.matrix @ P for P in _embed_projectors(U, rho.dims, system))
    return DensityMatrix(M, rho.dims, rho.seed)


def stinespring_isometry(basis) -> np.ndarray:
    """V = sum_z |f_z>|f_z><f_z| from A into Z Z'."""
    U = check_basis(basis)
    d = U.shape[0]
    V = np.zeros((d * d, d), dtype=complex)
    for z in range(d):
        f = U[:, z]
        V += np.outer(np.kron(f, f), f.conj())
    return V


def stinespring_dilate(rho: DensityMatrix, basis, system: int = 0) -> DensityMatrix:
    """Coherent copy of `system` in `basis`; output systems are (Z, Z', rest...)."""
    d = rho.dims[system]
    V = stinespring_isometry(check_basis(basis, d))
    rest = [k for k in range(len(rho.dims)) if k != system]
    ordered = swap_systems(rho, [system] + rest) if system != 0 else rho
    rest_dim = int(np.prod([rho.dims[k] for k in rest])) if rest else 1
    W = np.kron(V, np.eye(rest_dim))
    M = W @ ordered.matrix @ W.conj().T
    return DensityMatrix(M, (d, d) + tuple(rho.dims[k] for k in rest), rho.seed)
