from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gptcommit import cones, linalg
from gptcommit.cones import (Free, Orthant, PolyhedralH, PolyhedralV, Product, PsdComplex, PsdReal,
                             Zero, tensor_compose, tensor_embedding)
from gptcommit.errors import ContractViolation
from gptcommit.gpt import GBIT_VERTICES

SQUARE = PolyhedralV(GBIT_VERTICES)
# Facets of the square cone, worked out by hand: 1 +- a >= 0 and 1 +- b >= 0.
SQUARE_FACETS = np.array([[1, 1, 0], [1, -1, 0], [1, 0, 1], [1, 0, -1]]) / np.sqrt(2)

CONES = {
    "orthant": Orthant(4),
    "psd_real": PsdReal(3),
    "psd_complex": PsdComplex(2),
    "polyhedral_v": SQUARE,
    "polyhedral_h": PolyhedralH(GBIT_VERTICES),
    "product": Product((Orthant(2), PsdComplex(2), SQUARE)),
}


@pytest.mark.parametrize("name", sorted(CONES))
def test_projection_idempotent_and_nonexpansive(name):
    cone = CONES[name]
    rng = np.random.default_rng(7)
    pts = rng.standard_normal((1000, cone.dim)) * 2.0
    prev = None
    for v in pts:
        p = cone.project(v)
        assert np.allclose(cone.project(p), p, atol=1e-9)
        assert cone.distance(p) <= 1e-9
        if prev is not None:
            pv, vv = prev
            assert np.linalg.norm(p - pv) <= np.linalg.norm(v - vv) + 1e-9
        prev = (p, v)


@pytest.mark.parametrize("name", sorted(CONES))
def test_moreau_decomposition(name):
    cone = CONES[name]
    dual = cone.dual()
    rng = np.random.default_rng(11)
    for v in rng.standard_normal((200, cone.dim)):
        p = cone.project(v)
        q = dual.project(-v)
        assert np.allclose(v, p - q, atol=1e-8)
        assert abs(p @ q) <= 1e-8 * (1 + np.linalg.norm(v) ** 2)


@pytest.mark.parametrize("name", sorted(CONES))
def test_dual_pairing_nonnegative(name):
    cone = CONES[name]
    rng = np.random.default_rng(3)
    k = cone.sample(rng, 100)
    kd = cone.dual().sample(rng, 100)
    assert np.min(k @ kd.T) >= -1e-9


@pytest.mark.parametrize("name", sorted(CONES))
def test_interior_point(name):
    cone = CONES[name]
    x = cone.interior_point()
    assert cone.is_interior(x, 1e-9)
    assert cone.contains(x)


@pytest.mark.parametrize("cone", [Orthant(3), PsdReal(2), PsdComplex(3)])
def test_self_dual_kinds(cone):
    assert cone.dual() == cone


def test_square_dual_matches_hand_facets():
    rays = SQUARE.facets
    assert rays.shape == (4, 3)
    for f in SQUARE_FACETS:
        assert np.min(np.linalg.norm(rays - f, axis=1)) < 1e-10
    # Every facet normal is nonnegative on every generator.
    assert np.min(rays @ GBIT_VERTICES.T) >= -1e-10


def test_dual_of_dual_is_original():
    assert np.array_equal(SQUARE.dual().dual().generators, SQUARE.generators)


def test_membership_examples():
    assert cones.contains(Orthant(2), [1.0, 0.0])
    assert not cones.contains(Orthant(2), [1.0, -1e-3])
    psd = PsdComplex(2)
    plus = psd.to_vector(np.full((2, 2), 0.5))
    assert psd.contains(plus)
    assert not psd.is_interior(plus)
    assert not psd.contains(psd.to_vector(np.diag([1.0, -0.01])))
    assert SQUARE.contains([1.0, 1.0, 1.0]) and not SQUARE.contains([1.0, 1.2, 0.0])


@given(arrays(float, 3, elements=st.floats(-5, 5)))
@settings(max_examples=200, deadline=None)
def test_free_and_zero(v):
    assert np.array_equal(Free(3).project(v), v)
    assert np.array_equal(Zero(3).project(v), np.zeros(3))
    assert Free(3).dual() == Zero(3)


def test_psd_projection_clips_eigenvalues():
    m = np.diag([2.0, -1.0])
    p = PsdReal(2).to_matrix(PsdReal(2).project(PsdReal(2).to_vector(m)))
    assert np.allclose(p, np.diag([2.0, 0.0]))


def test_quantum_tensor_compose_and_embedding(rng):
    ka, kb = PsdComplex(2), PsdComplex(3)
    k = tensor_compose(ka, kb, "quantum")
    assert k == PsdComplex(6)
    t = tensor_embedding(ka, kb, "quantum")
    assert np.allclose(t.T @ t, np.eye(ka.dim * kb.dim), atol=1e-12)
    a = linalg.random_density_matrix(rng, 2)
    b = linalg.random_density_matrix(rng, 3)
    v = t @ np.kron(ka.to_vector(a), kb.to_vector(b))
    assert np.allclose(k.to_matrix(v), np.kron(a, b), atol=1e-12)


def test_min_composite_inside_max_composite():
    kmin = tensor_compose(SQUARE, SQUARE, "min")
    kmax = tensor_compose(SQUARE, SQUARE, "max")
    rng = np.random.default_rng(5)
    for v in kmin.sample(rng, 200):
        assert kmax.contains(v, 1e-9)
    # The max composite is strictly larger for two squares (an entangled-like ray).
    outside = [v for v in kmax.sample(rng, 400) if kmin.distance(v) > 1e-6]
    assert outside


def test_orthant_composites_coincide():
    assert tensor_compose(Orthant(2), Orthant(3), "min") == Orthant(6)
    assert tensor_compose(Orthant(2), Orthant(3), "max") == Orthant(6)


def test_bad_inputs():
    with pytest.raises(ContractViolation):
        Orthant(0)
    with pytest.raises(ContractViolation):
        PolyhedralV(np.zeros((1, 3)))
    with pytest.raises(ContractViolation):
        Orthant(2).project(np.ones(3))
    with pytest.raises(ContractViolation):
        tensor_compose(PsdComplex(2), PsdReal(2), "quantum")
