"""Matrix helpers: the fixed orthonormal Hermitian basis, partial traces, random states.

Every PSD cone in the package stores matrices as real coordinate vectors in
the basis built here, so the Euclidean dot product of two coordinate vectors
equals the trace inner product of the matrices.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _basis(n: int, is_complex: bool) -> np.ndarray:
    dtype = complex if is_complex else float
    mats = []
    mats.append(np.eye(n, dtype=dtype) / np.sqrt(n))
    for ell in range(1, n):
        m = np.zeros((n, n), dtype=dtype)
        m[np.arange(ell), np.arange(ell)] = 1.0
        m[ell, ell] = -float(ell)
        mats.append(m / np.sqrt(ell * (ell + 1)))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for i, j in pairs:
        m = np.zeros((n, n), dtype=dtype)
        m[i, j] = m[j, i] = 1.0 / np.sqrt(2.0)
        mats.append(m)
    if is_complex:
        for i, j in pairs:
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = -1j / np.sqrt(2.0)
            m[j, i] = 1j / np.sqrt(2.0)
            mats.append(m)
    out = np.stack(mats).reshape(len(mats), n * n)
    out.setflags(write=False)
    return out


def hermitian_basis(n: int, is_complex: bool = True) -> np.ndarray:
    """Orthonormal basis of n x n Hermitian (or real symmetric) matrices.

    Returns an array of shape ``(K, n, n)`` with K = n**2 (complex) or
    n(n+1)/2 (real). Order: scaled diagonal Gell-Mann matrices starting with
    I/sqrt(n), then symmetric off-diagonal pairs, then antisymmetric ones.
    """
    b = _basis(n, is_complex)
    return b.reshape(b.shape[0], n, n)


def psd_dim(n: int, is_complex: bool) -> int:
    return n * n if is_complex else n * (n + 1) // 2


def side_from_dim(dim: int, is_complex: bool) -> int:
    if is_complex:
        n = int(round(np.sqrt(dim)))
        ok = n * n == dim
    else:
        n = int(round((np.sqrt(8 * dim + 1) - 1) / 2))
        ok = n * (n + 1) // 2 == dim
    if not ok:
        raise ValueError(f"{dim} is not a valid PSD coordinate dimension")
    return n


def to_vector(mat: np.ndarray, is_complex: bool = True) -> np.ndarray:
    """Coordinates of a Hermitian matrix (or a stack of them) in the fixed basis."""
    mat = np.asarray(mat)
    n = mat.shape[-1]
    b = _basis(n, is_complex)
    flat = mat.reshape(*mat.shape[:-2], n * n)
    return (flat @ b.conj().T).real


def to_matrix(vec: np.ndarray, is_complex: bool = True) -> np.ndarray:
    """Inverse of :func:`to_vector`; accepts a single vector or a stack."""
    vec = np.asarray(vec, dtype=float)
    n = side_from_dim(vec.shape[-1], is_complex)
    b = _basis(n, is_complex)
    return (vec @ b).reshape(*vec.shape[:-1], n, n)


def partial_trace(mat: np.ndarray, dims: tuple[int, ...], keep) -> np.ndarray:
    """Partial trace of ``mat`` over every subsystem not listed in ``keep``."""
    if isinstance(keep, int):
        keep = (keep,)
    keep = tuple(sorted(keep))
    k = len(dims)
    t = np.asarray(mat).reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:k])
    col = list(letters[k:2 * k])
    for i in range(k):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(d, d)


def hermitian_part(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + np.conj(np.swapaxes(mat, -1, -2)))


def random_density_matrix(rng: np.random.Generator, d: int, rank: int | None = None,
                          is_complex: bool = True) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank))
    if is_complex:
        g = g + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure_state(rng: np.random.Generator, d: int, is_complex: bool = True) -> np.ndarray:
    psi = rng.standard_normal(d)
    if is_complex:
        psi = psi + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)


def random_unitary(rng: np.random.Generator, d: int, is_complex: bool = True) -> np.ndarray:
    z = rng.standard_normal((d, d))
    if is_complex:
        z = z + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def ket_bra(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())
