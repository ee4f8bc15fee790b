from __future__ import annotations

import numpy as np
import pytest

from gptcommit import commitment as cm
from gptcommit import linalg
from gptcommit.coneprog import dualize, solve
from gptcommit.errors import ImpossibilityInapplicable, InvalidProtocol, UnsupportedTheory
from gptcommit.gpt import GptMeasurement, compose, marginal, quantum_system
from gptcommit.presets import (bb84_style, classical_orthogonal, gbit_pair, identical, qubit_helstrom,
                               random_quantum, restricted)
from gptcommit.protocol_file import ProtocolFile

HELSTROM_VALUE = 0.5 + np.sqrt(2) / 4


def _b_only(states, effects):
    """Protocol with a trivial A factor, given B matrices."""
    return ProtocolFile("quantum", (1, states[0].shape[0]), list(states), list(effects),
                        "quantum").to_protocol()


# -- protocol model ---------------------------------------------------------

def test_alpha_examples():
    assert cm.honest_alpha(qubit_helstrom().to_protocol()) == pytest.approx(1.0, abs=1e-14)
    zero, one = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    p = _b_only([zero, one], [0.6 * np.eye(2)] * 2)
    assert cm.honest_alpha(p) == pytest.approx(0.6, abs=1e-14)
    noisy = [0.9 * zero + 0.05 * np.eye(2), 0.9 * one + 0.05 * np.eye(2)]
    mixed = [np.diag([0.8, 0.2]), np.diag([0.1, 0.9])]
    p = _b_only(mixed, noisy)
    # 0.9 * 0.8 + 0.05 and 0.9 * 0.9 + 0.05, evaluated by hand.
    assert np.allclose(p.acceptance(), [0.77, 0.86])
    assert cm.honest_alpha(p) == pytest.approx(0.77, abs=1e-14)


def test_alpha_at_half_is_rejected():
    p = _b_only([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [0.5 * np.eye(2)] * 2)
    with pytest.raises(InvalidProtocol):
        cm.honest_alpha(p)


def test_protocol_validation():
    zero = np.diag([1.0, 0.0])
    with pytest.raises(InvalidProtocol):
        _b_only([zero], [zero])
    with pytest.raises(InvalidProtocol):
        _b_only([zero, 2 * zero], [zero, zero])
    with pytest.raises(InvalidProtocol):
        _b_only([zero, zero], [zero, np.diag([1.0, -0.1])])
    with pytest.raises(InvalidProtocol):
        _b_only([zero, zero], [zero, 1.2 * zero])


def test_reject_effects_complete_measurement():
    p = random_quantum(3, 2, 2, 3).to_protocol()
    for e, r in zip(p.accept_effects, p.reject_effects):
        GptMeasurement(p.system_ab, (e, r))


# -- Bob ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_identical_states_bob(n):
    p = identical(n).to_protocol()
    _, sol = cm.bob_cheat_primal(p)
    assert abs(sol.primal_value - 1 / n) < 1e-6
    assert sol.certificate["slater_interior"]
    value, x = cm.bob_cheat_dual(p)
    assert abs(value - 1 / n) < 1e-6
    rho = p.reduced_states()[0].vec
    assert np.abs(x - rho / n).max() < 1e-6


def test_classical_orthogonal_bob():
    p = classical_orthogonal(3).to_protocol()
    _, sol = cm.bob_cheat_primal(p)
    assert abs(sol.primal_value - 1.0) < 1e-6
    value, x = cm.bob_cheat_dual(p)
    assert abs(value - 1.0) < 1e-6
    assert np.abs(x - np.ones(3) / 3).max() < 1e-6


def test_helstrom_bob():
    p = qubit_helstrom().to_protocol()
    _, sol = cm.bob_cheat_primal(p)
    dual = cm.bob_cheat_dual(p)
    assert abs(sol.primal_value - HELSTROM_VALUE) < 1e-5
    assert abs(dual.value - HELSTROM_VALUE) < 1e-5
    assert cm.dual_violation(p, dual.x) <= 1e-8


def test_bb84_bob_value():
    # Upper bound 1/2 from the dual point I/4; a Z-basis measurement attains it.
    p = bb84_style().to_protocol()
    assert abs(cm.bob_cheat_dual(p).value - 0.5) < 1e-6


def test_dualised_primal_matches_dual_program():
    p = random_quantum(5, 2, 2, 3).to_protocol()
    via_dualize = solve(dualize(cm.bob_primal_program(p))).primal_value
    assert abs(via_dualize - cm.bob_cheat_dual(p).value) < 1e-5


def test_restricted_effects_make_impossibility_inapplicable():
    p = restricted().to_protocol()
    _, sol = cm.bob_cheat_primal(p)
    assert abs(sol.primal_value - 0.5) < 1e-6       # Bob can only guess
    with pytest.raises(ImpossibilityInapplicable):
        cm.bob_cheat_dual(p)


# -- Alice --------------------------------------------------------------------

def test_identical_states_alice_recommits_honestly():
    p = identical(3).to_protocol()
    _, x = cm.bob_cheat_dual(p)
    a = cm.alice_strategy(p, x)
    for c, s in zip(a.chi, p.committed_states):
        assert np.abs(c.vec - s.vec).max() < 1e-6
    assert a.value >= 1.0 - 1e-5
    assert a.diagnostics["steering_residual"] <= 1e-8


def test_helstrom_alice_bound():
    p = qubit_helstrom().to_protocol()
    value, x = cm.bob_cheat_dual(p)
    a = cm.alice_strategy(p, x)
    assert a.value >= 1.0 / (2 * HELSTROM_VALUE) - 1e-6
    assert a.value * value >= 0.5 - 1e-6
    assert a.diagnostics["chi_marginal_error"] <= 1e-8


def test_alice_purified_index_does_not_matter():
    p = random_quantum(11, 2, 2, 3).to_protocol()
    _, x = cm.bob_cheat_dual(p)
    values = [cm.alice_strategy(p, x, purified_index=k).diagnostics["steered_value"] for k in range(3)]
    assert max(values) - min(values) <= 1e-8


def test_polyhedral_alice_is_postulate_assumed():
    p = gbit_pair().to_protocol()
    _, x = cm.bob_cheat_dual(p)
    a = cm.alice_strategy(p, x)
    assert a.mode == cm.STEERING_POSTULATE and a.steering == []
    assert a.value >= a.bound - 1e-8
    for c in a.chi:
        assert c.is_physical(1e-8)


def test_exact_alice_examples():
    assert abs(cm.alice_exact_quantum(identical(2).to_protocol()) - 1.0) < 1e-5
    # Commitments held entirely by Bob: Alice has no freedom, any sigma gives 1/2.
    p = _b_only([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    assert abs(cm.alice_exact_quantum(p) - 0.5) < 1e-5
    with pytest.raises(UnsupportedTheory):
        cm.alice_exact_quantum(gbit_pair().to_protocol())


# -- trade-off ----------------------------------------------------------------

def test_identical_states_tight():
    rep = cm.verify_tradeoff(identical(3).to_protocol())
    assert rep.passed
    assert abs(rep.product - rep.alpha / 3) < 1e-6
    assert rep.alice_value >= 1 - 1e-5


def test_mixed_identical_states_perfect_cheating():
    rho = np.diag([0.7, 0.3])
    rep = cm.verify_tradeoff(identical(2, 2, rho).to_protocol())
    assert abs(rep.pb_dual - 0.5) < 1e-6 and rep.alice_value >= 1 - 1e-5


@pytest.mark.parametrize("seed", range(8))
def test_invariants_on_random_protocols(seed):
    pf = random_quantum(seed, 1 + seed % 3, 2 + seed % 2, 2 + seed % 2)
    p = pf.to_protocol()
    rep = cm.verify_tradeoff(p, exact=True)
    assert rep.failure is None, rep.failure_message
    assert abs(rep.pb_primal - rep.pb_dual) <= 1e-5
    assert rep.diagnostics["bob_dual"]["constraint_violation"] <= 1e-8
    assert rep.diagnostics["alice"]["chi_marginal_error"] <= 1e-8
    assert rep.diagnostics["alice"]["dilation_scores_min"] >= -1e-10
    assert rep.product >= rep.alpha / p.n - 1e-6
    assert rep.alice_value <= rep.alice_exact + 1e-6 <= 1 + 2e-6
    assert rep.passed


def test_marginal_of_chi_is_normalised_dual_point():
    p = bb84_style().to_protocol()
    _, x = cm.bob_cheat_dual(p)
    a = cm.alice_strategy(p, x)
    for c in a.chi:
        assert np.abs(marginal(c, "B").vec - a.x_normalised).max() <= 1e-8


def test_failures_are_reported_not_raised():
    rep = cm.verify_tradeoff(restricted().to_protocol())
    assert rep.failure == "impossibility_inapplicable" and not rep.passed
    p = _b_only([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], [0.5 * np.eye(2)] * 2)
    rep = cm.verify_tradeoff(p)
    assert rep.failure == "invalid_protocol" and not rep.product_bound_check


def test_report_is_deterministic():
    p = random_quantum(7, 2, 2, 2).to_protocol()
    assert cm.verify_tradeoff(p).to_dict() == cm.verify_tradeoff(p).to_dict()


def test_real_quantum_protocol():
    zero, plus = np.diag([1.0, 0.0]), np.full((2, 2), 0.5)
    p = ProtocolFile("real_quantum", (1, 2), [zero, plus], [zero, plus], "quantum").to_protocol()
    rep = cm.verify_tradeoff(p)
    assert rep.passed
    assert abs(rep.pb_dual - HELSTROM_VALUE) < 1e-5


def test_entangled_commitment_with_large_alice():
    # Alice holds a purification of a mixed B state; the steering step is non-trivial.
    rng = np.random.default_rng(0)
    ab = compose(quantum_system(2), quantum_system(2))
    states, effects = [], []
    for _ in range(2):
        psi = linalg.random_pure_state(rng, 4)
        states.append(linalg.ket_bra(psi))
        effects.append(linalg.ket_bra(psi))
    p = ProtocolFile("quantum", (2, 2), states, effects, "quantum").to_protocol()
    assert p.system_ab.dim == ab.dim
    rep = cm.verify_tradeoff(p)
    assert rep.passed and rep.steering_mode == cm.STEERING_CONSTRUCTED
