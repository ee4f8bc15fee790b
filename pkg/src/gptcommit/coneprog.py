"""Cone programs, their duals, and a first-order solver.

A program in sup form reads::

    sup { <c, x> : phi @ x = b, x in K }

and its dual is::

    inf { <b, y> : phi.T @ y - s = c, s in K* }

Inf-form programs use ``phi.T @ y + s = c`` in the (sup-form) dual.

The solver is ADMM (Douglas-Rachford splitting) between the affine set
``{phi x = b}``, projected onto with a precomputed SVD, and the cone, projected
onto with the cone's own oracle. The scaled multiplier of the splitting is
the dual slack and stays inside K* exactly at every iterate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cones import Cone, Free, Product
from .errors import ContractViolation

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200_000

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE = "infeasible_detected"


@dataclass(frozen=True, eq=False)
class ConeProgram:
    phi: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cone: Cone
    sense: str = "sup"

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        c = np.asarray(self.c, dtype=float).ravel()
        if self.sense not in ("sup", "inf"):
            raise ContractViolation(f"sense must be 'sup' or 'inf', not {self.sense!r}")
        if phi.shape != (b.size, c.size) or c.size != self.cone.dim:
            raise ContractViolation(
                f"inconsistent shapes: phi {phi.shape}, b {b.size}, c {c.size}, cone dim {self.cone.dim}")
        for name, arr in (("phi", phi), ("b", b), ("c", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_constraints(self) -> int:
        return self.b.size


@dataclass
class ConeSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_value: float
    dual_value: float
    status: str
    residuals: dict
    iterations: int = 0
    certificate: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)


def dualize(p: ConeProgram) -> ConeProgram:
    """The Lagrange dual as a program over ``(y, s)`` in ``Free(m) x K*``."""
    m, n = p.phi.shape
    sign = -1.0 if p.sense == "sup" else 1.0
    phi = np.hstack([p.phi.T, sign * np.eye(n)])
    cone = Product((Free(m), p.cone.dual())) if m else p.cone.dual()
    c = np.concatenate([p.b, np.zeros(n)])
    return ConeProgram(phi, p.c, c, cone, "inf" if p.sense == "sup" else "sup")


class _AffineProjector:
    """Euclidean projection onto ``{x : phi x = b}`` from one SVD."""

    def __init__(self, phi: np.ndarray, b: np.ndarray):
        n = phi.shape[1]
        if phi.size:
            u, sv, vt = np.linalg.svd(phi, full_matrices=False)
            rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0])))
        else:
            u, sv, vt, rank = np.zeros((phi.shape[0], 0)), np.zeros(0), np.zeros((0, n)), 0
        ur, sr, vr = u[:, :rank], sv[:rank], vt[:rank]
        self.null_proj = np.eye(n) - vr.T @ vr
        self.particular = vr.T @ ((ur.T @ b) / sr) if rank else np.zeros(n)
        # y = pinv(phi.T) @ v recovers multipliers from a dual-slack vector.
        self.pinv_t = (ur / sr) @ vr if rank else np.zeros((phi.shape[0], n))
        self.inconsistency = float(np.linalg.norm(phi @ self.particular - b))

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.null_proj @ w + self.particular


def solve(p: ConeProgram, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, *,
          rho: float = 1.0, relax: float = 1.6, check_every: int = 10) -> ConeSolution:
    """Solve a cone program and its dual simultaneously.

    Terminates with status ``optimal`` once the affine residual
    ``|phi x - b|`` times ``1 + |y|``, the dual residual ``|phi.T y -+ s - c|``
    times ``1 + |x|``, and the gap are all below ``tol`` (absolute). The iterate x lies in K and s in K*
    exactly, up to floating point. If ``max_iter`` runs out the best iterate
    is returned with status ``max_iterations``.
    """
    if tol <= 0:
        raise ContractViolation("tol must be positive")
    sign = 1.0 if p.sense == "sup" else -1.0
    phi, b, cone = p.phi, p.b, p.cone
    c = sign * p.c
    n = p.n_vars
    aff = _AffineProjector(phi, b)
    scale_b = 1.0 + np.linalg.norm(b)

    if aff.inconsistency > 1e-9 * scale_b:
        # Farkas: phi.T y = 0 with <b, y> < 0.
        y_cert = -(b - phi @ aff.particular)
        return ConeSolution(
            x=np.zeros(n), y=y_cert, s=np.zeros(n), primal_value=float("nan"),
            dual_value=float("nan"), status=INFEASIBLE,
            residuals={"primal": aff.inconsistency, "dual": float("nan"), "gap": float("nan")},
            certificate={"kind": "affine_infeasible", "y": y_cert.tolist()})

    z = np.zeros(n)
    u = np.zeros(n)
    best = None
    u_hist = z_hist = None
    hist_iter = 0

    def evaluate(z, u, rho):
        s = -rho * u
        y = aff.pinv_t @ (c + s)
        pval = float(c @ z)
        dval = float(b @ y)
        r_p = float(np.linalg.norm(phi @ z - b))
        r_d = float(np.linalg.norm(phi.T @ y - c - s))
        gap = abs(pval - dval)
        # Weak duality with residual slack is an identity given z in K, s in K*.
        slack = np.linalg.norm(y) * r_p + np.linalg.norm(z) * r_d
        assert pval - dval <= slack + 1e-9 * (1 + abs(pval) + np.linalg.norm(z) * np.linalg.norm(s)), \
            "weak duality violated by more than the residual slack"
        return s, y, pval, dval, {"primal": r_p, "dual": r_d, "gap": gap}

    status = MAX_ITERATIONS
    certificate: dict = {}
    it = 0
    for it in range(1, max_iter + 1):
        x = aff(z - u + c / rho)
        xh = relax * x + (1.0 - relax) * z
        w = xh + u
        z_prev = z
        z = cone.project(w)
        u = w - z

        if it % check_every == 0:
            s, y, pval, dval, res = evaluate(z, u, rho)
            # Weighting by |y| and |z| bounds the induced error in the objective.
            score = max(res["primal"] * (1.0 + np.linalg.norm(y)),
                        res["dual"] * (1.0 + np.linalg.norm(z)), res["gap"])
            if best is None or score < best[0]:
                best = (score, z.copy(), y, s, pval, dval, res)
            if score <= tol:
                status = OPTIMAL
                break

            if it % (check_every * 5) == 0:
                r_admm_p = np.linalg.norm(x - z)
                r_admm_d = rho * np.linalg.norm(z - z_prev)
                if r_admm_p > 10 * r_admm_d and rho < 1e6:
                    rho *= 2.0
                    u /= 2.0
                elif r_admm_d > 10 * r_admm_p and rho > 1e-6:
                    rho /= 2.0
                    u *= 2.0

            if it % 1000 == 0:
                if u_hist is not None:
                    certificate = _infeasibility_certificate(
                        phi, b, c, cone, aff, (u * rho - u_hist) / (it - hist_iter),
                        (z - z_hist) / (it - hist_iter))
                    if certificate:
                        status = INFEASIBLE
                        break
                u_hist, z_hist, hist_iter = u * rho, z.copy(), it

    if status == OPTIMAL:
        _, xz, y, s, pval, dval, res = best
    elif status == INFEASIBLE:
        s, y, pval, dval, res = evaluate(z, u, rho)
        xz = z
    else:
        if best is None:
            s, y, pval, dval, res = evaluate(z, u, rho)
            xz = z
        else:
            _, xz, y, s, pval, dval, res = best
        logger.warning("solver stopped at max_iter=%d with residuals %s", max_iter, res)

    if sign < 0:
        y = -y
        pval, dval = -pval, -dval
    return ConeSolution(x=xz, y=y, s=s, primal_value=pval, dual_value=dval, status=status,
                        residuals=res, iterations=it, certificate=certificate)


def _infeasibility_certificate(phi, b, c, cone, aff, du, dz) -> dict:
    """Check whether the per-iteration drift of (u, z) certifies infeasibility."""
    nu = np.linalg.norm(du)
    if nu > 1e-6:
        s_dir = -du / nu
        y_dir = aff.pinv_t @ s_dir
        if (np.linalg.norm(phi.T @ y_dir - s_dir) < 1e-6 and b @ y_dir < -1e-6
                and cone.dual().distance(s_dir) < 1e-6):
            return {"kind": "primal_infeasible", "y": y_dir.tolist()}
    nz = np.linalg.norm(dz)
    if nz > 1e-6:
        d = dz / nz
        if np.linalg.norm(phi @ d) < 1e-6 and c @ d > 1e-6 and cone.distance(d) < 1e-6:
            return {"kind": "dual_infeasible", "direction": d.tolist()}
    return {}


def check_slater(p: ConeProgram, eps: float = 1e-7):
    """A strictly interior feasible point, or ``None`` if the construction fails.

    The candidate is the affine projection of a scaled canonical interior
    point of the cone; it is returned only if it passes the cone's strict
    interiority test.
    """
    aff = _AffineProjector(p.phi, p.b)
    if aff.inconsistency > 1e-9 * (1.0 + np.linalg.norm(p.b)):
        return None
    x0 = p.cone.interior_point()
    for t in (1.0, 10.0, 0.1, 100.0, 0.01):
        x = aff(t * x0)
        if np.linalg.norm(p.phi @ x - p.b) > 1e-9 * (1.0 + np.linalg.norm(p.b)):
            continue
        if p.cone.is_interior(x, eps * max(1.0, np.linalg.norm(x))):
            return x
    return None
