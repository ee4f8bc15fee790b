"""Closed-form and exhaustive oracles used to certify the conic solver.

Nothing here calls :mod:`gptcommit.coneprog`; the only shared code is the
cone data structures and the double description routine.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cones import Cone, Orthant, PolyhedralH, PolyhedralV, Product
from .errors import ContractViolation, UnsupportedScale
from .polyhedral import extreme_rays

LP_MAX_VARS = 24
LP_MAX_CONSTRAINTS = 24


@dataclass
class OracleResult:
    value: float
    witness: object = None
    method: str = ""
    extra: dict = field(default_factory=dict)


def helstrom(rho0: np.ndarray, rho1: np.ndarray) -> OracleResult:
    """Optimal success probability for two equiprobable states: 1/2 + |rho0 - rho1|_1 / 4."""
    rho0, rho1 = np.asarray(rho0), np.asarray(rho1)
    if rho0.shape != rho1.shape or rho0.shape[0] != rho0.shape[1]:
        raise ContractViolation("helstrom() needs two square matrices of equal size")
    w, v = np.linalg.eigh(rho0 - rho1)
    value = 0.5 + 0.25 * float(np.sum(np.abs(w)))
    pos = v[:, w > 0]
    proj = pos @ pos.conj().T
    return OracleResult(value, (proj, np.eye(len(w)) - proj), "helstrom_closed_form")


def _generator_matrix(cone: Cone) -> np.ndarray:
    """Rows g_k with cone = {sum_k lam_k g_k : lam >= 0} (block diagonal for products)."""
    if isinstance(cone, Orthant):
        return np.eye(cone.dim)
    if isinstance(cone, PolyhedralV):
        return np.asarray(cone.generators)
    if isinstance(cone, PolyhedralH):
        rays, lin = extreme_rays(cone.inequalities)
        return np.vstack([rays, lin, -lin]) if lin.size else rays
    if isinstance(cone, Product):
        blocks = [_generator_matrix(f) for f in cone.factors]
        rows = sum(b.shape[0] for b in blocks)
        out = np.zeros((rows, cone.dim))
        r = c = 0
        for b in blocks:
            out[r:r + b.shape[0], c:c + b.shape[1]] = b
            r += b.shape[0]
            c += b.shape[1]
        return out
    raise ContractViolation(f"vertex enumeration needs a polyhedral cone, got {cone.kind}")


def _basic_solutions(a: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Every basic feasible solution of {lam >= 0 : a lam = b}."""
    m, k = a.shape
    rank = np.linalg.matrix_rank(a, tol=1e-10)
    if rank == 0:
        if np.linalg.norm(b) <= tol:
            yield np.zeros(k)
        return
    for cols in itertools.combinations(range(k), rank):
        sub = a[:, cols]
        if np.linalg.matrix_rank(sub, tol=1e-10) < rank:
            continue
        lam_b, *_ = np.linalg.lstsq(sub, b, rcond=None)
        if np.linalg.norm(sub @ lam_b - b) > tol * (1 + np.linalg.norm(b)):
            continue
        if np.min(lam_b) < -tol:
            continue
        lam = np.zeros(k)
        lam[list(cols)] = np.maximum(lam_b, 0.0)
        yield lam


def lp_vertex_enumeration(phi, b, c, cone: Cone, sense: str = "sup") -> OracleResult:
    """Exact optimum of a bounded LP over a polyhedral cone by listing basic solutions.

    The cone is rewritten as nonnegative combinations of its generators, and
    every choice of basis columns is tried. Raises ContractViolation if the
    program is infeasible or unbounded.
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    g = _generator_matrix(cone)
    if g.shape[0] > LP_MAX_VARS or phi.shape[0] > LP_MAX_CONSTRAINTS:
        raise UnsupportedScale(
            f"vertex enumeration limited to {LP_MAX_VARS} generators and {LP_MAX_CONSTRAINTS} "
            f"constraints; got {g.shape[0]} and {phi.shape[0]}")
    sgn = 1.0 if sense == "sup" else -1.0
    a = phi @ g.T
    obj = sgn * (g @ c)

    # Recession directions: vertices of {a d = 0, sum d = 1, d >= 0}.
    a_rec = np.vstack([a, np.ones((1, a.shape[1]))])
    b_rec = np.r_[np.zeros(a.shape[0]), 1.0]
    for d in _basic_solutions(a_rec, b_rec):
        if obj @ d > 1e-10:
            raise ContractViolation("LP is unbounded; vertex enumeration needs a bounded optimum")

    best, best_lam, count = -np.inf, None, 0
    for lam in _basic_solutions(a, b):
        count += 1
        val = float(obj @ lam)
        if val > best:
            best, best_lam = val, lam
    if best_lam is None:
        raise ContractViolation("LP is infeasible")
    return OracleResult(sgn * best, best_lam @ g, "lp_vertex_enumeration", {"vertices": count})


def _effect_rays(state_generators: np.ndarray) -> np.ndarray:
    """Extremal effects of the dual cone, scaled so their maximum on states is 1."""
    rays, lin = extreme_rays(state_generators)
    if lin.size:
        raise ContractViolation("state cone is not full-dimensional")
    peaks = np.max(state_generators @ rays.T, axis=0)
    return rays / peaks[:, None]


def exhaustive_gbit_discrimination(states, grid_resolution: float = 1e-3,
                                   state_generators: np.ndarray | None = None,
                                   unit: np.ndarray | None = None) -> OracleResult:
    """Lower bound on Bob's optimal guessing probability for polyhedral systems.

    Every measurement on a polyhedral system is a mixture of refinements of
    "elementary" measurements, i.e. minimal sets of extremal effects with
    nonnegative weights summing to the unit effect. The routine lists all of
    them, tries every assignment of their effects to guesses, and then
    grid-searches mixtures of every pair of candidates in steps of
    ``grid_resolution``. The reported slack is ``grid_resolution``, since
    the objective is 1-Lipschitz in the mixing weight.
    """
    from .gpt import GBIT_VERTICES

    states = [np.asarray(s, dtype=float) for s in states]
    n = len(states)
    if n > 4 and state_generators is None:
        raise UnsupportedScale("gbit oracle supports at most 4 states")
    gens = GBIT_VERTICES if state_generators is None else np.asarray(state_generators, float)
    u = np.array([1.0, 0.0, 0.0]) if unit is None else np.asarray(unit, float)
    effects = _effect_rays(gens)
    scores = effects @ np.array(states).T            # (n_effects, n)

    candidates = []
    k = len(effects)
    for size in range(1, gens.shape[1] + 1):
        for support in itertools.combinations(range(k), size):
            sub = effects[list(support)].T
            if np.linalg.matrix_rank(sub, tol=1e-10) < size:
                continue
            w, *_ = np.linalg.lstsq(sub, u, rcond=None)
            if np.linalg.norm(sub @ w - u) > 1e-10 or np.min(w) < -1e-12:
                continue
            best_val, best_assign = -np.inf, None
            for assign in itertools.product(range(n), repeat=size):
                val = sum(w[i] * scores[support[i], assign[i]] for i in range(size)) / n
                if val > best_val:
                    best_val, best_assign = val, assign
            meas = np.zeros((n, len(u)))
            for i, j in enumerate(best_assign):
                meas[j] += w[i] * effects[support[i]]
            candidates.append((best_val, meas))

    if not candidates:
        raise ContractViolation("no measurement decomposes the unit effect")
    rho = np.array(states)

    def score(meas):
        return float(np.sum(meas * rho)) / n

    best_val, best_meas = max(candidates, key=lambda t: t[0])
    grid = np.linspace(0.0, 1.0, int(round(1.0 / grid_resolution)) + 1)
    for (_, ma), (_, mb) in itertools.combinations(candidates, 2):
        for p in grid:
            meas = p * ma + (1.0 - p) * mb
            val = score(meas)
            if val > best_val + 1e-15:
                best_val, best_meas = val, meas
    return OracleResult(float(best_val), best_meas, "gbit_exhaustive_grid",
                        {"slack": grid_resolution, "elementary_measurements": len(candidates)})
