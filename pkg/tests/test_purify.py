from __future__ import annotations

import numpy as np
import pytest

from gptcommit import linalg
from gptcommit.errors import ContractViolation, UnsupportedTheory
from gptcommit.gpt import classical_system, compose, gbit_system, marginal, quantum_system, real_quantum_system
from gptcommit.purify import (dilate, global_ket, procrustes_unitary, purification_matrix, purify,
                              spectral_factors, steering_transform)


def test_roundtrip_random_states():
    rng = np.random.default_rng(2024)
    for k in range(100):
        d = 2 + k % 3
        q = quantum_system(d)
        rho = q.state_from_matrix(linalg.random_density_matrix(rng, d, rank=int(rng.integers(1, d + 1))))
        p = purify(rho)
        assert np.abs(marginal(p.state, "B").matrix - rho.matrix).max() <= 1e-10
        assert p.rank_one_residual <= 1e-10
        assert p.purifying_dim == np.linalg.matrix_rank(rho.matrix, tol=1e-10)


def test_pure_input_gives_product():
    p = purify(quantum_system(2).state_from_matrix(np.diag([1.0, 0.0])))
    assert p.purifying_dim == 1
    assert np.allclose(p.ket, [[1.0, 0.0]])


def test_maximally_mixed_gives_bell_state():
    p = purify(quantum_system(2).state_from_matrix(np.eye(2) / 2))
    assert p.purifying_dim == 2
    assert np.allclose(p.ket, np.eye(2) / np.sqrt(2))


def test_subnormalised_input():
    p = purify(quantum_system(2).state_from_matrix(np.diag([0.5, 0.0])))
    assert np.isclose(np.linalg.norm(p.ket) ** 2, 0.5)


def test_real_quantum_purification(rng):
    q = real_quantum_system(3)
    rho = q.state_from_matrix(linalg.random_density_matrix(rng, 3, is_complex=False))
    p = purify(rho)
    assert not np.iscomplexobj(p.ket)
    assert np.allclose(marginal(p.state, "B").matrix, rho.matrix, atol=1e-10)


def test_non_quantum_rejected():
    with pytest.raises(UnsupportedTheory):
        purify(gbit_system().state([1.0, 0.0, 0.0]))
    with pytest.raises(UnsupportedTheory):
        dilate(classical_system(2).state([0.5, 0.5]), compose(classical_system(2), classical_system(2)))


def test_degenerate_spectrum_is_deterministic():
    lam, vecs = spectral_factors(np.eye(3) / 3)
    assert np.allclose(lam, 1 / 3)
    assert np.array_equal(vecs, spectral_factors(np.eye(3) / 3)[1])


def test_essential_uniqueness(rng):
    for _ in range(50):
        d = int(rng.integers(2, 5))
        rho = linalg.random_density_matrix(rng, d)
        psi = purification_matrix(rho, d)
        u = linalg.random_unitary(rng, d)
        phi = u @ psi
        v = procrustes_unitary(psi, phi)
        assert np.allclose(v @ v.conj().T, np.eye(d), atol=1e-10)
        assert np.abs(v @ psi - phi).max() <= 1e-8
        # Full-rank case: the unitary itself is recovered.
        assert np.abs(v - u).max() <= 1e-8


def test_identity_when_target_is_global(rng):
    ab = compose(quantum_system(2), quantum_system(2))
    chi = ab.state_from_matrix(linalg.random_density_matrix(rng, 4, rank=2))
    pur = purify(chi)
    m = steering_transform(pur, chi)
    assert m.residual <= 1e-10
    assert np.allclose(m.unitary, np.eye(m.unitary.shape[0]), atol=1e-10)


def test_steering_between_dilations(rng):
    ab = compose(quantum_system(2), quantum_system(2))
    x = linalg.random_density_matrix(rng, 2)
    targets = []
    for _ in range(4):
        sigma = linalg.random_density_matrix(rng, 2)
        joint = np.kron(sigma, x)
        targets.append(ab.state_from_matrix(joint))
    rank = max(np.linalg.matrix_rank(t.matrix, tol=1e-10) for t in targets)
    pur = purify(targets[0], rank)
    for j, t in enumerate(targets):
        m = steering_transform(pur, t, j)
        assert m.residual <= 1e-8
        assert np.abs(m.steer(global_ket(pur)) - t.matrix).max() <= 1e-8


def test_steering_requires_equal_marginals(rng):
    ab = compose(quantum_system(2), quantum_system(2))
    a = ab.state_from_matrix(np.kron(np.eye(2) / 2, np.diag([1.0, 0.0])))
    b = ab.state_from_matrix(np.kron(np.eye(2) / 2, np.diag([0.0, 1.0])))
    with pytest.raises(ContractViolation):
        steering_transform(purify(a), b)


def test_dilate_examples(rng):
    ab = compose(quantum_system(2), quantum_system(2))
    b = quantum_system(2)
    zero = dilate(b.state(np.zeros(4)), ab)
    assert np.allclose(zero.vec, 0)
    t = dilate(b.state_from_matrix(np.eye(2) / 2), ab)
    assert np.allclose(marginal(t, "B").matrix, np.eye(2) / 2, atol=1e-10)
    assert np.isclose(np.linalg.eigvalsh(t.matrix)[-1], 1.0)


def test_dilation_positivity_and_marginal(rng):
    for _ in range(50):
        da, db = int(rng.integers(1, 4)), int(rng.integers(2, 4))
        ab = compose(quantum_system(da), quantum_system(db))
        r = ab.factors[1].state_from_matrix(rng.uniform(0, 2) * linalg.random_density_matrix(rng, db))
        t = dilate(r, ab, product_fallback=True)
        assert t.in_cone(1e-8)
        assert np.abs(marginal(t, "B").vec - r.vec).max() <= 1e-10


def test_dilate_too_small_without_fallback(rng):
    ab = compose(quantum_system(1), quantum_system(3))
    r = ab.factors[1].state_from_matrix(np.eye(3) / 3)
    with pytest.raises(ContractViolation):
        dilate(r, ab)
