"""Cone-programming toolkit for integer commitment in generalised probabilistic theories."""

from .commitment import (CheatReport, ICProtocol, alice_exact_quantum, alice_strategy,
                         bob_cheat_dual, bob_cheat_primal, honest_alpha, verify_tradeoff)
from .coneprog import ConeProgram, ConeSolution, dualize, solve
from .gpt import (GptMeasurement, GptState, GptSystem, compose, evaluate, marginal,
                  validate_system)

__version__ = "0.1.0"

__all__ = [
    "CheatReport", "ConeProgram", "ConeSolution", "GptMeasurement", "GptState", "GptSystem",
    "ICProtocol", "alice_exact_quantum", "alice_strategy", "bob_cheat_dual", "bob_cheat_primal",
    "compose", "dualize", "evaluate", "honest_alpha", "marginal", "solve", "validate_system",
    "verify_tradeoff",
]
