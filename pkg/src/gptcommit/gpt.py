"""GPT systems as validated triples of state cone, effect cone and unit effect.

Effects are stored only as coordinate vectors (the Riesz representatives of
the functionals), so evaluating an effect on a state is a dot product.
Composites keep their factors and an orthogonal embedding from Kronecker
coordinates into the composite coordinates; marginals are computed by
contracting the discarded factor with its unit effect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .cones import (Cone, Orthant, PolyhedralV, PsdComplex, PsdReal, _Psd, tensor_compose,
                    tensor_embedding)
from .errors import ContractViolation

_DUAL_RULE = {"min": "max", "max": "min", "quantum": "quantum"}


@dataclass(frozen=True, eq=False)
class GptSystem:
    state_cone: Cone
    effect_cone: Cone
    unit_effect: np.ndarray
    label: str = ""
    theory: str = "custom"
    factors: tuple = ()
    rule: str | None = None
    embedding: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        u = np.asarray(self.unit_effect, dtype=float).copy()
        if u.shape != (self.effect_cone.dim,):
            raise ContractViolation("unit effect does not match the effect cone dimension")
        u.setflags(write=False)
        object.__setattr__(self, "unit_effect", u)

    @property
    def dim(self) -> int:
        return self.state_cone.dim

    @property
    def is_quantum(self) -> bool:
        return isinstance(self.state_cone, _Psd)

    @property
    def is_complex(self) -> bool:
        return bool(getattr(self.state_cone, "is_complex", False))

    @property
    def side(self) -> int:
        """Hilbert-space dimension for quantum-type systems."""
        if not self.is_quantum:
            raise ContractViolation(f"{self.label or self.theory} is not a quantum-type system")
        return self.state_cone.n

    @property
    def is_composite(self) -> bool:
        return len(self.factors) == 2

    def state(self, vec) -> "GptState":
        return GptState(self, vec)

    def state_from_matrix(self, mat) -> "GptState":
        return GptState(self, linalg.to_vector(mat, self.is_complex))

    def vector_from_matrix(self, mat) -> np.ndarray:
        if not self.is_quantum:
            raise ContractViolation("matrix input requires a quantum-type system")
        return linalg.to_vector(mat, self.is_complex)

    def to_matrix(self, vec) -> np.ndarray:
        if not self.is_quantum:
            raise ContractViolation("matrix form requires a quantum-type system")
        return linalg.to_matrix(vec, self.is_complex)

    def tensor(self, a, b) -> np.ndarray:
        """Composite coordinates of the product of factor vectors ``a`` and ``b``."""
        if not self.is_composite:
            raise ContractViolation("tensor() needs a composite system")
        return self.embedding @ np.kron(np.asarray(a, float), np.asarray(b, float))


@dataclass(frozen=True, eq=False)
class GptState:
    system: GptSystem
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=float).copy()
        if v.shape != (self.system.dim,):
            raise ContractViolation(f"state vector has shape {v.shape}, system dim is {self.system.dim}")
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    @property
    def norm(self) -> float:
        return float(self.system.unit_effect @ self.vec)

    @property
    def matrix(self) -> np.ndarray:
        return self.system.to_matrix(self.vec)

    def in_cone(self, tol: float = 1e-8) -> bool:
        return self.system.state_cone.contains(self.vec, tol)

    def is_physical(self, tol: float = 1e-8) -> bool:
        return self.in_cone(tol) and abs(self.norm - 1.0) <= tol


@dataclass(frozen=True, eq=False)
class GptMeasurement:
    system: GptSystem
    effects: tuple

    def __post_init__(self):
        effects = tuple(np.asarray(e, dtype=float) for e in self.effects)
        object.__setattr__(self, "effects", effects)
        for e in effects:
            if e.shape != (self.system.dim,):
                raise ContractViolation("effect dimension mismatch")
            if not self.system.effect_cone.contains(e, 1e-8):
                raise ContractViolation("effect lies outside the effect cone")
        total = np.sum(effects, axis=0)
        if np.linalg.norm(total - self.system.unit_effect) > 1e-10:
            raise ContractViolation("effects do not sum to the unit effect")

    def probabilities(self, state: GptState) -> np.ndarray:
        return np.array([evaluate(e, state) for e in self.effects])


def evaluate(effect, state: GptState) -> float:
    """Outcome probability: the dot product of the effect and state coordinates."""
    e = np.asarray(effect, dtype=float)
    if e.shape != state.vec.shape:
        raise ContractViolation(f"effect shape {e.shape} does not match state shape {state.vec.shape}")
    return float(e @ state.vec)


@dataclass
class ValidationReport:
    label: str
    checks: dict
    details: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def no_restriction(self) -> bool:
        return self.checks["no_restriction"]

    @property
    def restricted_effects(self) -> bool:
        return not self.checks["no_restriction"]

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def validate_system(sys: GptSystem, samples: int = 200, tol: float = 1e-8,
                    seed: int = 0) -> ValidationReport:
    """Sample-based check of the GPT axioms for a single system.

    Checks: equal dimensions, unit effect strictly inside the effect cone,
    effect cone inside the dual of the state cone and vice versa, and the
    No-Restriction Hypothesis (dual of the state cone inside the effect cone).
    """
    rng = np.random.default_rng(seed)
    K, E, u = sys.state_cone, sys.effect_cone, sys.unit_effect
    checks: dict = {}
    details: dict = {}

    checks["dimensions_equal"] = K.dim == E.dim
    if not checks["dimensions_equal"]:
        for key in ("unit_interior", "effects_in_dual_of_states", "states_in_dual_of_effects",
                    "no_restriction"):
            checks[key] = False
        return ValidationReport(sys.label, checks, details)

    checks["unit_interior"] = bool(E.is_interior(u, 1e-7 * max(1.0, np.linalg.norm(u))))

    def worst(cone: Cone, pts: np.ndarray) -> float:
        out = 0.0
        for p in pts:
            out = max(out, cone.distance(p) / max(1.0, np.linalg.norm(p)))
        return float(out)

    eff = np.vstack([u[None, :], E.sample(rng, samples)])
    sts = K.sample(rng, samples)
    k_dual, e_dual = K.dual(), E.dual()
    details["effects_in_dual_of_states"] = worst(k_dual, eff)
    details["states_in_dual_of_effects"] = worst(e_dual, sts)
    checks["effects_in_dual_of_states"] = bool(details["effects_in_dual_of_states"] <= tol)
    checks["states_in_dual_of_effects"] = bool(details["states_in_dual_of_effects"] <= tol)

    details["no_restriction"] = worst(E, k_dual.sample(rng, samples))
    checks["no_restriction"] = bool(checks["effects_in_dual_of_states"] and details["no_restriction"] <= tol)

    # Effects confined to the ray through u: only trivial measurements exist.
    sv = np.linalg.svd(eff, compute_uv=False)
    details["effect_span_rank"] = int(np.sum(sv > 1e-9 * sv[0]))
    details["trivial_effects"] = details["effect_span_rank"] == 1 and sys.dim > 1
    return ValidationReport(sys.label, checks, details)


# -- composites -----------------------------------------------------------

def default_rule(a: GptSystem, b: GptSystem) -> str:
    if a.is_quantum and b.is_quantum:
        return "quantum"
    if isinstance(a.state_cone, Orthant) and isinstance(b.state_cone, Orthant):
        return "min"
    raise ContractViolation(
        f"no default composite for {a.theory} and {b.theory}; pass rule='min' or rule='max'")


def compose(a: GptSystem, b: GptSystem, rule: str | None = None, *,
            effect_cone: Cone | None = None, label: str | None = None) -> GptSystem:
    """Composite system A(x)B.

    The effect cone uses the dual rule (min <-> max). ``effect_cone``
    overrides it, e.g. to allow every POVM on a composite whose factor has
    restricted effects.
    """
    rule = rule or default_rule(a, b)
    state = tensor_compose(a.state_cone, b.state_cone, rule)
    if effect_cone is None:
        effect_cone = tensor_compose(a.effect_cone, b.effect_cone, _DUAL_RULE[rule])
    emb = tensor_embedding(a.state_cone, b.state_cone, rule)
    unit = emb @ np.kron(a.unit_effect, b.unit_effect)
    theory = a.theory if a.theory == b.theory else "custom"
    return GptSystem(state, effect_cone, unit, label or f"{a.label}x{b.label}", theory,
                     (a, b), rule, emb)


def marginal(s: GptState, keep: str) -> GptState:
    """Reduced state on factor ``keep`` ("A" or "B") via the discarded unit effect."""
    sys = s.system
    if not sys.is_composite:
        raise ContractViolation("marginal() needs a state of a composite system")
    a, b = sys.factors
    m = (sys.embedding.T @ s.vec).reshape(a.dim, b.dim)
    if keep == "A":
        return GptState(a, m @ b.unit_effect)
    if keep == "B":
        return GptState(b, a.unit_effect @ m)
    raise ContractViolation("keep must be 'A' or 'B'")


def marginal_map(sys: GptSystem, keep: str) -> np.ndarray:
    """Matrix of the linear marginal map on composite coordinates."""
    a, b = sys.factors
    if keep == "A":
        return np.kron(np.eye(a.dim), b.unit_effect[None, :]) @ sys.embedding.T
    return np.kron(a.unit_effect[None, :], np.eye(b.dim)) @ sys.embedding.T


# -- presets --------------------------------------------------------------

def quantum_system(d: int) -> GptSystem:
    cone = PsdComplex(d)
    return GptSystem(cone, cone, cone.interior_point(), f"Q{d}", "quantum")


def real_quantum_system(d: int) -> GptSystem:
    cone = PsdReal(d)
    return GptSystem(cone, cone, cone.interior_point(), f"RQ{d}", "real_quantum")


def classical_system(d: int) -> GptSystem:
    cone = Orthant(d)
    return GptSystem(cone, cone, np.ones(d), f"C{d}", "classical")


GBIT_VERTICES = np.array([[1.0, a, b] for a in (1.0, -1.0) for b in (1.0, -1.0)])


def gbit_system() -> GptSystem:
    """Square state space at unit height; effects are the full dual cone."""
    cone = PolyhedralV(GBIT_VERTICES)
    return GptSystem(cone, cone.dual(), np.array([1.0, 0.0, 0.0]), "gbit", "gbit")


def restricted_quantum_system(d: int) -> GptSystem:
    """Quantum states with only trivial effects (multiples of the identity)."""
    cone = PsdComplex(d)
    u = cone.interior_point()
    return GptSystem(cone, PolyhedralV(u[None, :]), u, f"Q{d}-trivial", "restricted")


def product_state(sys_ab: GptSystem, s_a: GptState, s_b: GptState) -> GptState:
    return GptState(sys_ab, sys_ab.tensor(s_a.vec, s_b.vec))
