"""Double description and nonnegative least squares for finitely generated cones."""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls

from .errors import ContractViolation, NumericalFailure, UnsupportedScale

MAX_DD_DIM = 10
MAX_DD_ROWS = 64
NNLS_MAX_ITER = 10_000
NNLS_TOL = 1e-9


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0):
        raise ContractViolation("zero generator or inequality row")
    return m / norms[:, None]


def _dedupe(rays: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for r in rays:
        if all(np.linalg.norm(r - k) > tol for k in kept):
            kept.append(r)
    return np.array(kept).reshape(len(kept), rays.shape[1])


def extreme_rays(ineqs: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Generators of the cone ``{x : ineqs @ x >= 0}`` by double description.

    Returns ``(rays, lineality)``: the cone equals
    ``cone(rays) + span(lineality)``. Rays are unit-normalized and, when the
    lineality space is nontrivial, orthogonal to it.
    """
    h = np.atleast_2d(np.asarray(ineqs, dtype=float))
    m, d = h.shape
    if d > MAX_DD_DIM or m > MAX_DD_ROWS:
        raise UnsupportedScale(
            f"double description limited to dim <= {MAX_DD_DIM} and <= {MAX_DD_ROWS} rows; "
            f"got dim {d}, {m} rows")
    h = _normalize_rows(h)

    _, sv, vt = np.linalg.svd(h)
    rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0] if sv.size else 1.0)))
    lineality = vt[rank:]
    if rank == 0:
        return np.zeros((0, d)), np.eye(d)
    q = vt[:rank].T                         # d x r, orthonormal basis of the row space
    a = _normalize_rows(h @ q)              # inequalities in reduced coordinates

    # Greedy choice of r independent rows to seed the iteration.
    chosen: list[int] = []
    for i in range(m):
        trial = a[chosen + [i]]
        if np.linalg.matrix_rank(trial, tol=1e-10) == len(chosen) + 1:
            chosen.append(i)
        if len(chosen) == rank:
            break
    rays = np.linalg.inv(a[chosen]).T       # row k satisfies a[chosen] @ ray = e_k
    rays = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    processed = list(chosen)

    for i in range(m):
        if i in chosen:
            continue
        row = a[i]
        vals = rays @ row
        pos = vals > tol
        neg = vals < -tol
        zero = ~pos & ~neg
        active = np.abs(rays @ a[processed].T) <= tol     # (k, |processed|)
        new = [rays[pos | zero]]
        pos_idx = np.flatnonzero(pos)
        neg_idx = np.flatnonzero(neg)
        for p in pos_idx:
            for n in neg_idx:
                common = active[p] & active[n]
                if common.sum() < rank - 2:
                    continue
                others = np.ones(len(rays), dtype=bool)
                others[[p, n]] = False
                covers = np.all(active[others][:, common], axis=1)
                if np.any(covers):
                    continue
                r = vals[p] * rays[n] - vals[n] * rays[p]
                new.append((r / np.linalg.norm(r))[None, :])
        rays = np.vstack(new)
        processed.append(i)

    rays = _dedupe(rays, 1e-9)
    out = rays @ q.T
    out = out / np.linalg.norm(out, axis=1, keepdims=True)
    return out, lineality


def facet_normals(generators: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Inequality rows ``h`` with ``cone(generators) = {x : h @ x >= 0}``."""
    rays, lin = extreme_rays(generators, tol)
    return np.vstack([rays, lin, -lin]) if lin.size else rays


def nnls_project(generators: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean projection of ``v`` onto ``cone(generators)``.

    Returns ``(point, weights)`` with ``point = weights @ generators`` and
    nonnegative weights.
    """
    g = np.asarray(generators, dtype=float)
    try:
        w, _ = nnls(g.T, np.asarray(v, dtype=float), maxiter=NNLS_MAX_ITER)
    except RuntimeError as exc:
        raise NumericalFailure(f"NNLS projection did not converge: {exc}",
                               residual=float("nan")) from exc
    point = w @ g
    # First-order optimality: the residual must be polar to the cone.
    resid = v - point
    slack = float(np.max(g @ resid, initial=0.0))
    if slack > NNLS_TOL * max(1.0, np.linalg.norm(v)) * 1e3:
        raise NumericalFailure("NNLS projection failed optimality check", residual=slack)
    return point, w


def prune_redundant(generators: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Drop generators lying in the cone spanned by the others."""
    g = _normalize_rows(np.asarray(generators, dtype=float))
    g = _dedupe(g, tol)
    keep = list(range(len(g)))
    for i in range(len(g) - 1, -1, -1):
        others = [k for k in keep if k != i]
        if not others:
            continue
        point, _ = nnls_project(g[others], g[i])
        if np.linalg.norm(point - g[i]) <= tol:
            keep.remove(i)
    return g[keep]
