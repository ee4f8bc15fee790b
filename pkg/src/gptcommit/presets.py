"""Named protocol families used by the command line and the tests."""

from __future__ import annotations

import numpy as np

from . import linalg
from .errors import ContractViolation
from .gpt import GBIT_VERTICES
from .protocol_file import ProtocolFile


def _basis_projector(d: int, j: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[j, j] = 1.0
    return m


def identical(n: int = 3, dim_b: int = 2, rho_b: np.ndarray | None = None) -> ProtocolFile:
    """Alice keeps |j> in A and sends the same state to Bob for every j."""
    rho = _basis_projector(dim_b, 0) if rho_b is None else np.asarray(rho_b, dtype=complex)
    states = [np.kron(_basis_projector(n, j), rho) for j in range(n)]
    effects = [np.kron(_basis_projector(n, j), np.eye(dim_b)) for j in range(n)]
    return ProtocolFile("quantum", (n, dim_b), states, effects, "quantum", label=f"identical-n{n}")


def classical_orthogonal(n: int = 2) -> ProtocolFile:
    """Bob receives the basis vector e_j: perfectly binding, not hiding at all."""
    states = [np.eye(n)[j] for j in range(n)]
    return ProtocolFile("classical", (1, n), states, [s.copy() for s in states], "min",
                        label=f"classical-orthogonal-n{n}")


def qubit_helstrom() -> ProtocolFile:
    """Commit |0> or |+> directly to Bob; Alice holds nothing."""
    plus = np.full((2, 2), 0.5, dtype=complex)
    states = [_basis_projector(2, 0), plus]
    return ProtocolFile("quantum", (1, 2), states, [s.copy() for s in states], "quantum",
                        label="qubit-helstrom")


def bb84_style() -> ProtocolFile:
    """Two bits encoded in the four BB84 states of one qubit."""
    kets = [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / np.sqrt(2),
            np.array([1, -1]) / np.sqrt(2)]
    states = [linalg.ket_bra(k.astype(complex)) for k in kets]
    return ProtocolFile("quantum", (1, 2), states, [s.copy() for s in states], "quantum",
                        label="bb84-style")


def random_quantum(seed: int = 0, dim_a: int = 2, dim_b: int = 2, n: int = 2) -> ProtocolFile:
    """Noisy pure commitments with matching noisy projective acceptance.

    ``s_j = (1-p) |psi_j><psi_j| + p I/D`` and ``e_j = (1-q) |psi_j><psi_j| + (q/2) I``
    with p, q uniform in [0, 1/4], so the honest acceptance exceeds 1/2.
    """
    rng = np.random.default_rng(seed)
    d = dim_a * dim_b
    states, effects = [], []
    for _ in range(n):
        proj = linalg.ket_bra(linalg.random_pure_state(rng, d))
        p, q = rng.uniform(0.0, 0.25, size=2)
        states.append((1 - p) * proj + p * np.eye(d) / d)
        effects.append((1 - q) * proj + 0.5 * q * np.eye(d))
    return ProtocolFile("quantum", (dim_a, dim_b), states, effects, "quantum",
                        label=f"random-quantum-s{seed}-{dim_a}x{dim_b}-n{n}")


def gbit_pair() -> ProtocolFile:
    """Two gbits (min composite); Alice's gbit holds the bit, Bob's a biased hint."""
    va = [GBIT_VERTICES[0], GBIT_VERTICES[3]]            # (1, 1, 1) and (1, -1, -1)
    vb = [np.array([1.0, 0.5, 0.5]), np.array([1.0, -0.5, 0.5])]
    fa = [np.array([0.5, 0.5, 0.0]), np.array([0.5, -0.5, 0.0])]
    u = np.array([1.0, 0.0, 0.0])
    states = [np.kron(a, b) for a, b in zip(va, vb)]
    effects = [np.kron(f, u) for f in fa]
    return ProtocolFile("gbit", (3, 3), states, effects, "min", label="gbit-pair")


def restricted(n: int = 2) -> ProtocolFile:
    """Correlated basis states where B on its own admits only trivial effects."""
    states = [np.kron(_basis_projector(n, j), _basis_projector(n, j)) for j in range(n)]
    return ProtocolFile("quantum", (n, n), states, [s.copy() for s in states], "quantum",
                        effects_b="trivial", label=f"restricted-n{n}")


PRESETS = {
    "identical": identical,
    "classical_orthogonal": classical_orthogonal,
    "qubit_helstrom": qubit_helstrom,
    "bb84_style": bb84_style,
    "random_quantum": random_quantum,
    "gbit_pair": gbit_pair,
    "restricted": restricted,
}


def build_preset(name: str, **params) -> ProtocolFile:
    try:
        fn = PRESETS[name]
    except KeyError:
        raise ContractViolation(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return fn(**params)


def random_battery(count: int = 50) -> list[ProtocolFile]:
    """Seed-deterministic random quantum protocols with factor dims <= 3 and n <= 3."""
    out = []
    for seed in range(count):
        dim_a = 1 + seed % 3
        dim_b = 2 + (seed // 3) % 2
        n = 2 + (seed // 6) % 2
        out.append(random_quantum(seed, dim_a, dim_b, n))
    return out
