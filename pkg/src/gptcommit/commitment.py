"""Integer-commitment protocols and the cheating trade-off.

Bob's best guess of the committed integer after the commit phase is a cone
program over measurements on his share B. Its dual has an optimal point x
that Alice can turn into a cheating strategy: every committed state plus a
suitable dilation of ``n x - rho_j`` has the same B-marginal, so from one
purification she can steer to whichever commitment she wants to reveal.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import coneprog
from .cones import Free, Product
from .coneprog import ConeProgram, ConeSolution
from .errors import (ContractViolation, GptCommitError, ImpossibilityInapplicable, InvalidProtocol,
                     NumericalFailure, UnsupportedScale, UnsupportedTheory)
from .gpt import GptState, GptSystem, marginal, marginal_map, validate_system
from .purify import dilate, global_ket, purify, steering_transform

logger = logging.getLogger(__name__)

ALPHA_MARGIN = 1e-9
MEMBERSHIP_TOL = 1e-8
STRONG_DUALITY_TOL = 1e-5
PRODUCT_TOL = 1e-6
STEERING_TOL = 1e-8
# Composite dimension above which the exact quantum program is skipped by default.
EXACT_MAX_DIM = 16

STEERING_CONSTRUCTED = "constructed"
STEERING_POSTULATE = "postulate-assumed"


@dataclass(frozen=True, eq=False)
class ICProtocol:
    """Commit to j by sending the B share of s^j; reveal by sending A.

    Bob accepts a revealed j with the effect ``accept_effects[j]``; the
    rejecting effect is ``u - accept_effects[j]``.
    """

    system_ab: GptSystem
    committed_states: tuple
    accept_effects: tuple
    label: str = ""

    def __post_init__(self):
        sys = self.system_ab
        if not sys.is_composite:
            raise InvalidProtocol("protocol needs a composite system A(x)B")
        states = tuple(s if isinstance(s, GptState) else GptState(sys, s) for s in self.committed_states)
        effects = tuple(np.asarray(e, dtype=float).copy() for e in self.accept_effects)
        if len(states) < 2:
            raise InvalidProtocol("a commitment needs at least two integers")
        if len(effects) != len(states):
            raise InvalidProtocol(f"{len(states)} states but {len(effects)} accept effects")
        u = sys.unit_effect
        for j, s in enumerate(states):
            if s.system is not sys:
                raise InvalidProtocol(f"state {j} belongs to a different system")
            if not s.is_physical(MEMBERSHIP_TOL):
                raise InvalidProtocol(f"state {j} is not a normalised state (u[s] = {s.norm:.6g})")
        for j, e in enumerate(effects):
            if e.shape != (sys.dim,):
                raise InvalidProtocol(f"accept effect {j} has shape {e.shape}")
            if not sys.effect_cone.contains(e, MEMBERSHIP_TOL):
                raise InvalidProtocol(f"accept effect {j} is not an effect")
            if not sys.effect_cone.contains(u - e, MEMBERSHIP_TOL):
                raise InvalidProtocol(f"reject effect {j} (u - accept) is not an effect")
            e.setflags(write=False)
        object.__setattr__(self, "committed_states", states)
        object.__setattr__(self, "accept_effects", effects)

    @property
    def n(self) -> int:
        return len(self.committed_states)

    @property
    def factor_a(self) -> GptSystem:
        return self.system_ab.factors[0]

    @property
    def factor_b(self) -> GptSystem:
        return self.system_ab.factors[1]

    @property
    def reject_effects(self) -> tuple:
        u = self.system_ab.unit_effect
        return tuple(u - e for e in self.accept_effects)

    def reduced_states(self) -> list[GptState]:
        """What Bob holds after the commit phase."""
        return [marginal(s, "B") for s in self.committed_states]

    def acceptance(self) -> np.ndarray:
        """``e^j[s^j]`` for every j."""
        return np.array([float(e @ s.vec) for e, s in zip(self.accept_effects, self.committed_states)])


def honest_alpha(p: ICProtocol) -> float:
    alpha = float(np.min(p.acceptance()))
    if alpha < 0.5 + ALPHA_MARGIN:
        raise InvalidProtocol(f"honest acceptance {alpha:.9g} does not exceed 1/2")
    return alpha


# -- Bob ------------------------------------------------------------------

def bob_primal_program(p: ICProtocol) -> ConeProgram:
    """sup (1/n) sum_j <M_j, rho_j>  s.t.  sum_j M_j = u_B,  M_j in E_B."""
    b_sys = p.factor_b
    n, d = p.n, b_sys.dim
    cone = Product(tuple(b_sys.effect_cone for _ in range(n)))
    phi = np.hstack([np.eye(d)] * n)
    c = np.concatenate([r.vec for r in p.reduced_states()]) / n
    return ConeProgram(phi, b_sys.unit_effect, c, cone, "sup")


def bob_dual_program(p: ICProtocol) -> ConeProgram:
    """inf u_B[x]  s.t.  x - w_j = rho_j / n,  w_j in K_B, over (x, w_1..w_n)."""
    b_sys = p.factor_b
    n, d = p.n, b_sys.dim
    cone = Product((Free(d),) + tuple(b_sys.state_cone for _ in range(n)))
    phi = np.zeros((n * d, (n + 1) * d))
    for j in range(n):
        phi[j * d:(j + 1) * d, :d] = np.eye(d)
        phi[j * d:(j + 1) * d, (j + 1) * d:(j + 2) * d] = -np.eye(d)
    b = np.concatenate([r.vec for r in p.reduced_states()]) / n
    c = np.concatenate([b_sys.unit_effect, np.zeros(n * d)])
    return ConeProgram(phi, b, c, cone, "inf")


def _require_optimal(sol: ConeSolution, what: str):
    if sol.status != coneprog.OPTIMAL:
        raise NumericalFailure(f"{what}: solver ended with status {sol.status}", sol.residuals)


def bob_cheat_primal(p: ICProtocol, tol: float = coneprog.DEFAULT_TOL,
                     max_iter: int = coneprog.DEFAULT_MAX_ITER) -> tuple[ConeProgram, ConeSolution]:
    prog = bob_primal_program(p)
    # Guessing uniformly at random is strictly feasible whenever u_B is interior.
    slater = np.tile(p.factor_b.unit_effect / p.n, p.n)
    sol = coneprog.solve(prog, tol, max_iter)
    _require_optimal(sol, "Bob primal")
    sol.certificate["slater_point"] = slater.tolist()
    sol.certificate["slater_interior"] = bool(prog.cone.is_interior(slater, 1e-9))
    return prog, sol


@dataclass
class BobDual:
    """Optimal dual point; unpacks as ``value, x``."""

    value: float
    x: np.ndarray
    solver_value: float
    shift: float
    solution: ConeSolution
    program: ConeProgram

    def __iter__(self):
        return iter((self.value, self.x))


def dual_violation(p: ICProtocol, x: np.ndarray) -> float:
    """Largest distance of ``x - rho_j / n`` from K_B."""
    k = p.factor_b.state_cone
    return max(k.distance(x - r.vec / p.n) for r in p.reduced_states())


def repair_dual_point(p: ICProtocol, x: np.ndarray, target: float = 1e-12) -> tuple[np.ndarray, float]:
    """Move x along an interior direction until every dual constraint holds.

    The solver only satisfies the equality constraints up to its residual,
    so ``x - rho_j / n`` can leave K_B by that much. The shift is the
    smallest multiple of a normalised interior point (found by bisection)
    that restores membership, and it is reported alongside the value.
    """
    if dual_violation(p, x) <= target:
        return x, 0.0
    b_sys = p.factor_b
    e = b_sys.state_cone.interior_point()
    e = e / float(b_sys.unit_effect @ e)
    hi = max(dual_violation(p, x), 1e-14)
    while dual_violation(p, x + hi * e) > target:
        hi *= 2.0
        if hi > 1.0:
            raise NumericalFailure("dual point is too far from feasibility to repair")
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dual_violation(p, x + mid * e) <= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-3 * hi:
            break
    return x + hi * e, hi


def check_no_restriction(sys: GptSystem, seed: int = 0) -> None:
    report = validate_system(sys, seed=seed)
    if not report.no_restriction:
        raise ImpossibilityInapplicable(
            f"effects of {sys.label or sys.theory} are restricted "
            f"(failed checks: {', '.join(report.failures())})")


def bob_cheat_dual(p: ICProtocol, tol: float = coneprog.DEFAULT_TOL,
                   max_iter: int = coneprog.DEFAULT_MAX_ITER) -> BobDual:
    check_no_restriction(p.factor_b)
    prog = bob_dual_program(p)
    sol = coneprog.solve(prog, tol, max_iter)
    _require_optimal(sol, "Bob dual")
    d = p.factor_b.dim
    x, shift = repair_dual_point(p, sol.x[:d].copy())
    value = float(p.factor_b.unit_effect @ x)
    return BobDual(value, x, sol.primal_value, shift, sol, prog)


# -- Alice ----------------------------------------------------------------

@dataclass
class AliceStrategy:
    chi: list                 # GptState chi^j on A(x)B
    value: float              # (1/n) sum_j e^j[chi^j]
    bound: float              # alpha / (n u_B[x])
    x_normalised: np.ndarray
    mode: str
    steering: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def _product_dilation(p: ICProtocol, r: np.ndarray) -> GptState:
    """sigma_A (x) r with sigma_A a normalised interior state of A."""
    a = p.factor_a
    sigma = a.state_cone.interior_point()
    sigma = sigma / float(a.unit_effect @ sigma)
    return GptState(p.system_ab, p.system_ab.tensor(sigma, r))


def alice_strategy(p: ICProtocol, dual_x: np.ndarray, alpha: float | None = None,
                   purified_index: int = 0, compare_indices: bool = True) -> AliceStrategy:
    """Alice's cheating strategy built from an optimal point of Bob's dual.

    For quantum-type composites the dilations t^j are purifications into A
    when rank allows (otherwise ``|0><0| (x) r^j``), one chi is purified and
    a steering unitary to every chi^j is computed. For other theories the
    dilation is ``sigma_A (x) r^j`` and the steering step is only assumed.
    """
    sys, b_sys, n = p.system_ab, p.factor_b, p.n
    x = np.asarray(dual_x, dtype=float)
    ub = float(b_sys.unit_effect @ x)
    if ub <= 0:
        raise ContractViolation(f"u_B[x] = {ub:.3e} must be positive")
    if not 0 <= purified_index < n:
        raise ContractViolation(f"purified_index must lie in [0, {n})")
    if alpha is None:
        alpha = float(np.min(p.acceptance()))
    quantum = sys.is_quantum

    chi, t_scores, marg_err, norm_err, r_min = [], [], [], [], []
    for s, rho, e in zip(p.committed_states, p.reduced_states(), p.accept_effects):
        r = n * x - rho.vec
        r_min.append(-b_sys.state_cone.distance(r))
        if quantum:
            t = dilate(GptState(b_sys, r), sys, product_fallback=True)
        else:
            t = _product_dilation(p, r)
        t_scores.append(float(e @ t.vec))
        c = GptState(sys, (s.vec + t.vec) / (n * ub))
        chi.append(c)
        norm_err.append(abs(c.norm - 1.0))
        marg_err.append(float(np.abs(marginal(c, "B").vec - x / ub).max()))

    value = float(np.mean([e @ c.vec for e, c in zip(p.accept_effects, chi)]))
    diag = {
        "chi_norm_error": max(norm_err),
        "chi_marginal_error": max(marg_err),
        "dilation_scores_min": min(t_scores),
        "r_cone_violation": -min(r_min),
    }
    out = AliceStrategy(chi, value, alpha / (n * ub), x / ub,
                        STEERING_CONSTRUCTED if quantum else STEERING_POSTULATE, [], diag)
    if not quantum:
        return out

    maps, realised = _steer_all(p, chi, purified_index)
    out.steering = maps
    diag["steering_residual"] = max(m.residual for m in maps)
    diag["steered_value"] = realised
    diag["purified_index"] = purified_index
    if compare_indices:
        values = [realised] + [_steer_all(p, chi, k)[1] for k in range(n) if k != purified_index]
        diag["purified_index_spread"] = float(max(values) - min(values))
    return out


def _steer_all(p: ICProtocol, chi: list, index: int):
    rank = max(int(np.sum(np.linalg.eigvalsh(c.matrix) > 1e-12)) for c in chi)
    pur = purify(chi[index], max(rank, 1))
    maps = [steering_transform(pur, c, j) for j, c in enumerate(chi)]
    # Success probability of the physically steered states.
    ket = global_ket(pur)
    total = 0.0
    for e, m in zip(p.accept_effects, maps):
        total += float(e @ p.system_ab.vector_from_matrix(m.steer(ket)))
    return maps, total / p.n


def alice_exact_program(p: ICProtocol) -> ConeProgram:
    """sup (1/n) sum_j e^j[chi_j]  s.t.  tr_A chi_j = sigma,  u_B[sigma] = 1."""
    sys, b_sys, n = p.system_ab, p.factor_b, p.n
    if not sys.is_quantum:
        raise UnsupportedTheory("the exact cheating program is implemented for quantum composites")
    dab, db = sys.dim, b_sys.dim
    mb = marginal_map(sys, "B")
    cone = Product(tuple(sys.state_cone for _ in range(n)) + (b_sys.state_cone,))
    nv = n * dab + db
    phi = np.zeros((n * db + 1, nv))
    for j in range(n):
        phi[j * db:(j + 1) * db, j * dab:(j + 1) * dab] = mb
        phi[j * db:(j + 1) * db, n * dab:] = -np.eye(db)
    phi[-1, n * dab:] = b_sys.unit_effect
    b = np.zeros(n * db + 1)
    b[-1] = 1.0
    c = np.concatenate([np.asarray(e) for e in p.accept_effects] + [np.zeros(db)]) / n
    return ConeProgram(phi, b, c, cone, "sup")


def alice_exact_quantum(p: ICProtocol, tol: float = coneprog.DEFAULT_TOL,
                        max_iter: int = coneprog.DEFAULT_MAX_ITER) -> float:
    sol = coneprog.solve(alice_exact_program(p), tol, max_iter)
    _require_optimal(sol, "Alice exact")
    return float(sol.primal_value)


# -- report ---------------------------------------------------------------

@dataclass
class CheatReport:
    label: str
    n: int
    theory: str
    alpha: float | None = None
    pb_primal: float | None = None
    pb_dual: float | None = None
    pb_dual_solver: float | None = None
    dual_optimal_x: list | None = None
    alice_value: float | None = None
    alice_bound_analytic: float | None = None
    alice_exact: float | None = None
    steering_mode: str | None = None
    product: float | None = None
    product_bound_check: bool = False
    checks: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    failure: str | None = None
    failure_message: str | None = None

    @property
    def passed(self) -> bool:
        return self.failure is None and self.product_bound_check and all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "label": self.label, "n": self.n, "theory": self.theory, "alpha": self.alpha,
            "pb_primal": self.pb_primal, "pb_dual": self.pb_dual,
            "pb_dual_solver": self.pb_dual_solver, "dual_optimal_x": self.dual_optimal_x,
            "alice_value": self.alice_value, "alice_bound_analytic": self.alice_bound_analytic,
            "alice_exact": self.alice_exact, "steering_mode": self.steering_mode,
            "product": self.product, "product_bound_check": self.product_bound_check,
            "checks": dict(self.checks), "diagnostics": dict(self.diagnostics),
            "failure": self.failure, "failure_message": self.failure_message, "passed": self.passed,
        }


FAILURE_KINDS = {
    InvalidProtocol: "invalid_protocol",
    ImpossibilityInapplicable: "impossibility_inapplicable",
    NumericalFailure: "solver_failure",
    UnsupportedScale: "unsupported",
    UnsupportedTheory: "unsupported",
}


def failure_kind(err: Exception) -> str:
    for cls, kind in FAILURE_KINDS.items():
        if isinstance(err, cls):
            return kind
    return "error"


def verify_tradeoff(p: ICProtocol, tol: float = coneprog.DEFAULT_TOL,
                    max_iter: int = coneprog.DEFAULT_MAX_ITER, exact: bool | None = None,
                    purified_index: int = 0) -> CheatReport:
    """Run every stage and check ``alice_value * pb_dual >= alpha / n``.

    ``exact=None`` solves the exact quantum program when the composite is
    quantum with Hilbert dimension at most ``EXACT_MAX_DIM``. Errors from any
    stage are recorded in the report instead of being raised.
    """
    sys = p.system_ab
    rep = CheatReport(p.label, p.n, sys.theory)
    diag = rep.diagnostics
    try:
        rep.alpha = honest_alpha(p)
        _, primal = bob_cheat_primal(p, tol, max_iter)
        rep.pb_primal = float(primal.primal_value)
        diag["bob_primal"] = {"residuals": dict(primal.residuals), "iterations": primal.iterations,
                              "slater_interior": primal.certificate["slater_interior"]}
        dual = bob_cheat_dual(p, tol, max_iter)
        rep.pb_dual, rep.pb_dual_solver = dual.value, dual.solver_value
        rep.dual_optimal_x = [float(v) for v in dual.x]
        diag["bob_dual"] = {"residuals": dict(dual.solution.residuals),
                            "iterations": dual.solution.iterations, "repair_shift": dual.shift,
                            "constraint_violation": dual_violation(p, dual.x)}
        rep.checks["strong_duality"] = abs(rep.pb_primal - rep.pb_dual) <= STRONG_DUALITY_TOL
        rep.checks["dual_feasibility"] = diag["bob_dual"]["constraint_violation"] <= MEMBERSHIP_TOL

        alice = alice_strategy(p, dual.x, rep.alpha, purified_index)
        rep.alice_value = alice.value
        rep.alice_bound_analytic = alice.bound
        rep.steering_mode = alice.mode
        diag["alice"] = dict(alice.diagnostics)
        rep.checks["chi_normalised"] = alice.diagnostics["chi_norm_error"] <= MEMBERSHIP_TOL
        rep.checks["chi_marginal"] = alice.diagnostics["chi_marginal_error"] <= MEMBERSHIP_TOL
        rep.checks["dilation_nonnegative"] = alice.diagnostics["dilation_scores_min"] >= -1e-10
        rep.checks["analytic_bound"] = alice.value >= alice.bound - 1e-8
        if alice.steering:
            rep.checks["steering"] = alice.diagnostics["steering_residual"] <= STEERING_TOL

        rep.product = rep.alice_value * rep.pb_dual
        rep.product_bound_check = bool(rep.product >= rep.alpha / p.n - PRODUCT_TOL)

        if exact is None:
            exact = sys.is_quantum and sys.side <= EXACT_MAX_DIM
        if exact:
            rep.alice_exact = alice_exact_quantum(p, tol, max_iter)
            rep.checks["sandwich"] = rep.alice_value <= rep.alice_exact + PRODUCT_TOL <= 1.0 + 2 * PRODUCT_TOL
    except GptCommitError as err:
        rep.failure = failure_kind(err)
        rep.failure_message = str(err)
        if isinstance(err, NumericalFailure) and err.residual is not None:
            diag["failure_residuals"] = dict(err.residual)
        logger.info("trade-off verification failed: %s", err)
    return rep
