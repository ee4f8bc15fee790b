"""Purifications, dilations and steering for quantum-type systems.

Kets on a bipartite space are handled as matrices ``psi[c, b]`` with the
purifying factor as row index; the reduced state on the second factor is
``psi.T @ psi.conj()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .errors import ContractViolation, UnsupportedTheory
from .gpt import GptState, GptSystem, compose, quantum_system, real_quantum_system

RANK_TOL = 1e-12


def _aux_system(like: GptSystem, d: int) -> GptSystem:
    return quantum_system(d) if like.is_complex else real_quantum_system(d)


def _require_quantum(sys: GptSystem):
    if not sys.is_quantum:
        raise UnsupportedTheory(
            f"constructive purification needs a quantum-type system, got {sys.theory}")


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-9 * np.max(np.abs(v))))
    return v * (np.abs(v[k]) / v[k])


def spectral_factors(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``rho`` above the rank tolerance in canonical order.

    Order: descending eigenvalue, ties broken by descending lexicographic
    order of the (real, imag) parts of the phase-fixed eigenvectors, so a
    degenerate diagonal state lists e_0 first.
    """
    w, v = np.linalg.eigh(linalg.hermitian_part(rho))
    pairs = []
    for i in range(len(w)):
        if w[i] > RANK_TOL:
            vec = _fix_phase(v[:, i])
            key = (-round(float(w[i]), 12),) + tuple(
                -x for z in vec for x in (round(float(z.real), 12), round(float(np.imag(z)), 12)))
            pairs.append((key, w[i], vec))
    pairs.sort(key=lambda t: t[0])
    if not pairs:
        return np.zeros(0), np.zeros((rho.shape[0], 0), dtype=rho.dtype)
    return np.array([p[1] for p in pairs]), np.stack([p[2] for p in pairs], axis=1)


def purification_matrix(rho: np.ndarray, purifying_dim: int | None = None) -> np.ndarray:
    """Ket ``sum_i sqrt(lam_i) |i> (x) |v_i>`` as a (purifying_dim, d) matrix."""
    lam, vecs = spectral_factors(rho)
    rank = len(lam)
    dim = max(rank, 1) if purifying_dim is None else purifying_dim
    if dim < rank:
        raise ContractViolation(f"purifying dimension {dim} is below rank {rank}")
    psi = np.zeros((dim, rho.shape[0]), dtype=vecs.dtype if rank else rho.dtype)
    psi[:rank] = (np.sqrt(lam)[:, None] * vecs.T)
    return psi


@dataclass(frozen=True, eq=False)
class Purification:
    """Rank-one state on C(x)B, stored as its ket; coordinates are built on demand."""

    ket: np.ndarray             # shape (purifying_dim, dim B)
    purified_marginal: GptState  # the state on B being purified
    purifying_dim: int

    @cached_property
    def system(self) -> GptSystem:
        sys = self.purified_marginal.system
        return compose(_aux_system(sys, self.purifying_dim), sys, "quantum")

    @property
    def matrix(self) -> np.ndarray:
        flat = self.ket.reshape(-1)
        return np.outer(flat, flat.conj())

    @cached_property
    def state(self) -> GptState:
        return self.system.state_from_matrix(self.matrix)

    @property
    def rank_one_residual(self) -> float:
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return float(np.sum(s[1:]))

    def marginal_matrix(self) -> np.ndarray:
        """Reduced density matrix on B, computed from the ket."""
        return self.ket.T @ self.ket.conj()


def purify(rho: GptState, purifying_dim: int | None = None) -> Purification:
    """Spectral purification of a (possibly subnormalized) quantum state."""
    sys = rho.system
    _require_quantum(sys)
    if not rho.in_cone(1e-8) or rho.norm > 1.0 + 1e-8:
        raise ContractViolation("purify() needs a positive state with unit effect value <= 1")
    psi = purification_matrix(rho.matrix, purifying_dim)
    return Purification(psi, rho, psi.shape[0])


def dilate(r: GptState, system_ab: GptSystem, product_fallback: bool = False) -> GptState:
    """A state t on A(x)B with B-marginal r.

    The canonical dilation is the spectral purification of r with the
    purifying register embedded in A. If A is smaller than rank(r) this is a
    contract violation unless ``product_fallback`` is set, in which case
    ``|0><0| (x) r`` is returned.
    """
    _require_quantum(system_ab)
    a, b = system_ab.factors
    if r.system.dim != b.dim:
        raise ContractViolation("r does not live on the B factor")
    mat = r.matrix
    lam, _ = spectral_factors(mat)
    if len(lam) <= a.side:
        flat = purification_matrix(mat, a.side).reshape(-1)
        return system_ab.state_from_matrix(np.outer(flat, flat.conj()))
    if not product_fallback:
        raise ContractViolation(f"A has dimension {a.side} < rank(r) = {len(lam)}")
    zero = np.zeros((a.side, a.side))
    zero[0, 0] = 1.0
    return system_ab.state_from_matrix(np.kron(zero, mat))


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def procrustes_unitary(psi: np.ndarray, phi: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Unitary V with ``V @ psi`` as close as possible to ``phi``.

    On the orthogonal complement of the matched supports V is completed by
    the unitary nearest to the identity, so equal inputs return the identity.
    """
    m = phi @ psi.conj().T
    u, s, vh = np.linalg.svd(m)
    k = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    w_sup, z_sup = u[:, :k], vh[:k].conj().T
    v = w_sup @ z_sup.conj().T
    d = m.shape[0]
    if k < d:
        w_c, z_c = u[:, k:], vh[k:].conj().T
        v = v + w_c @ _polar_unitary(w_c.conj().T @ z_c) @ z_c.conj().T
    return v


@dataclass(frozen=True, eq=False)
class SteeringMap:
    """Reversible map on the purifying register A(x)C, then discard C."""

    unitary: np.ndarray
    target: int
    dims: tuple            # (dA, dC, dB)
    residual: float

    def apply(self, ket: np.ndarray) -> np.ndarray:
        """(V (x) I_B) applied to a ket given as an (dA*dC, dB) matrix."""
        return self.unitary @ ket

    def steer(self, ket: np.ndarray) -> np.ndarray:
        """Density matrix on A(x)B after applying V and discarding C."""
        da, dc, db = self.dims
        out = self.apply(_pad_rows(ket, da, dc)).reshape(da, dc, db)
        return np.einsum("acb,xcy->abxy", out, out.conj()).reshape(da * db, da * db)


def _pad_rows(ket: np.ndarray, da: int, dc: int) -> np.ndarray:
    cur = ket.shape[0] // da
    if cur == dc:
        return ket
    t = ket.reshape(da, cur, -1)
    pad = np.zeros((da, dc, t.shape[2]), dtype=t.dtype)
    pad[:, :cur] = t
    return pad.reshape(da * dc, -1)


def global_ket(p: Purification) -> np.ndarray:
    """A purification of a state on A(x)B, rearranged as an (A(x)C, B) matrix."""
    ab = p.purified_marginal.system
    da, db = (f.side for f in ab.factors)
    dc = p.purifying_dim
    return p.ket.reshape(dc, da, db).transpose(1, 0, 2).reshape(da * dc, db)


def steering_transform(global_: Purification, target: GptState, index: int = 0,
                       tol: float = 1e-8) -> SteeringMap:
    """Unitary on A(x)C turning the held purification into one of ``target``.

    ``global_`` purifies a state on A(x)B; regarded as a state on (A(x)C)(x)B
    it purifies the B-marginal. ``target`` must share that B-marginal.
    """
    ab = global_.purified_marginal.system
    _require_quantum(ab)
    if target.system.dim != ab.dim:
        raise ContractViolation("target lives on a different system")
    da, db = (f.side for f in ab.factors)
    psi = global_ket(global_)
    chi = target.matrix
    lam, _ = spectral_factors(chi)
    dc = max(global_.purifying_dim, len(lam), 1)
    psi = _pad_rows(psi, da, dc)

    rho_global = psi.T @ psi.conj()
    rho_target = linalg.partial_trace(chi, (da, db), 1)
    gap = float(np.abs(rho_global - rho_target).max())
    if gap > tol:
        raise ContractViolation(f"B-marginals differ by {gap:.3e}; steering impossible")

    phi_ket = purification_matrix(chi, dc).reshape(dc, da, db).transpose(1, 0, 2).reshape(da * dc, db)
    v = procrustes_unitary(psi, phi_ket)
    out = SteeringMap(v, index, (da, dc, db), 0.0)
    residual = float(np.abs(out.steer(psi) - chi).max())
    return SteeringMap(v, index, (da, dc, db), residual)
