"""Closed convex cones in coordinate form.

A cone lives in R^dim with the standard dot product. PSD cones are stored
in the orthonormal Hermitian basis of :mod:`gptcommit.linalg`, so the dot
product of coordinates is the trace inner product of the matrices.

All cone objects are immutable and every method is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from . import linalg, polyhedral
from .errors import ContractViolation, NumericalFailure, UnsupportedCombination, UnsupportedScale

DEFAULT_TOL = 1e-8


class Cone:
    """Interface shared by all cone kinds."""

    dim: int
    kind: str = "cone"

    def project(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def distance(self, v: np.ndarray) -> float:
        v = self._check(v)
        return float(np.linalg.norm(v - self.project(v)))

    def contains(self, v: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
        return self.distance(v) <= tol

    def dual(self) -> "Cone":
        raise NotImplementedError

    def interior_point(self) -> np.ndarray:
        raise NotImplementedError

    def is_interior(self, v: np.ndarray, eps: float = 1e-7) -> bool:
        """True if ``v + eps * (+-e_i)`` stays in the cone for every unit vector e_i."""
        v = self._check(v)
        eye = np.eye(self.dim)
        return all(self.contains(v + s * eps * e, tol=1e-12) for e in eye for s in (1.0, -1.0))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        raise NotImplementedError

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ContractViolation(f"{self.kind} cone expects a vector of length {self.dim}, got shape {v.shape}")
        return v


@dataclass(frozen=True)
class Orthant(Cone):
    dim: int
    kind: str = field(default="orthant", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ContractViolation("orthant dimension must be positive")

    def project(self, v):
        return np.maximum(self._check(v), 0.0)

    def distance(self, v):
        return float(np.linalg.norm(np.minimum(self._check(v), 0.0)))

    def dual(self):
        return self

    def interior_point(self):
        return np.ones(self.dim)

    def is_interior(self, v, eps=1e-7):
        return bool(np.min(self._check(v)) > eps)

    def generators(self) -> np.ndarray:
        return np.eye(self.dim)

    def sample(self, rng, count):
        x = np.abs(rng.standard_normal((count, self.dim)))
        mask = rng.random((count, self.dim)) < 0.2
        return np.where(mask, 0.0, x)


@dataclass(frozen=True)
class _Psd(Cone):
    n: int
    is_complex: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolation("matrix size must be positive")

    @property
    def dim(self) -> int:
        return linalg.psd_dim(self.n, self.is_complex)

    def to_matrix(self, v) -> np.ndarray:
        return linalg.to_matrix(v, self.is_complex)

    def to_vector(self, m) -> np.ndarray:
        return linalg.to_vector(m, self.is_complex)

    def project(self, v):
        return _project_psd_batch(self._check(v)[None, :], self.is_complex)[0]

    def distance(self, v):
        w = np.linalg.eigvalsh(self.to_matrix(self._check(v)))
        return float(np.linalg.norm(np.minimum(w, 0.0)))

    def min_eigenvalue(self, v) -> float:
        return float(np.linalg.eigvalsh(self.to_matrix(self._check(v)))[0])

    def dual(self):
        return self

    def interior_point(self):
        return self.to_vector(np.eye(self.n))

    def is_interior(self, v, eps=1e-7):
        # Basis matrices have operator norm <= 1, so a margin of eps on the
        # smallest eigenvalue covers every coordinate perturbation.
        return self.min_eigenvalue(v) > eps

    def sample(self, rng, count):
        out = []
        for _ in range(count):
            rank = int(rng.integers(1, self.n + 1))
            scale = float(rng.exponential())
            out.append(self.to_vector(scale * linalg.random_density_matrix(rng, self.n, rank, self.is_complex)))
        return np.array(out)


@dataclass(frozen=True)
class PsdReal(_Psd):
    kind: str = field(default="psd_real", init=False)
    is_complex: bool = field(default=False, init=False)


@dataclass(frozen=True)
class PsdComplex(_Psd):
    kind: str = field(default="psd_complex", init=False)
    is_complex: bool = field(default=True, init=False)


def _project_psd_batch(vs: np.ndarray, is_complex: bool) -> np.ndarray:
    mats = linalg.to_matrix(vs, is_complex)
    w, u = np.linalg.eigh(mats)
    w = np.maximum(w, 0.0)
    proj = (u * w[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))
    return linalg.to_vector(proj, is_complex)


@dataclass(frozen=True, eq=False)
class PolyhedralV(Cone):
    """Cone generated by the rows of ``generators``."""

    generators: np.ndarray
    kind: str = field(default="polyhedral_v", init=False)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if g.shape[0] == 0:
            raise ContractViolation("PolyhedralV needs at least one generator")
        if np.any(np.linalg.norm(g, axis=1) == 0):
            raise ContractViolation("PolyhedralV generators must be nonzero")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    def project(self, v):
        point, _ = polyhedral.nnls_project(self.generators, self._check(v))
        return point

    def dual(self):
        return PolyhedralH(self.generators)

    def interior_point(self):
        return self.generators.mean(axis=0)

    @cached_property
    def _dual_rays(self):
        return polyhedral.extreme_rays(self.generators)

    @property
    def facets(self) -> np.ndarray:
        """Inequalities h with cone = {x : h @ x >= 0}, by double description."""
        rays, lin = self._dual_rays
        return np.vstack([rays, lin, -lin]) if lin.size else rays

    def is_interior(self, v, eps=1e-7):
        v = self._check(v)
        try:
            rays, lin = self._dual_rays
        except UnsupportedScale:
            return super().is_interior(v, eps)
        if lin.size or len(rays) == 0:
            return False
        return bool(np.min(rays @ v) > eps)

    def sample(self, rng, count):
        k = self.generators.shape[0]
        w = rng.exponential(size=(count, k))
        w *= rng.random((count, k)) < 0.6
        w[np.arange(count), rng.integers(0, k, count)] += rng.exponential(size=count)
        return w @ self.generators


@dataclass(frozen=True, eq=False)
class PolyhedralH(Cone):
    """Cone ``{x : inequalities @ x >= 0}``."""

    inequalities: np.ndarray
    kind: str = field(default="polyhedral_h", init=False)

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.inequalities, dtype=float))
        if h.shape[0] == 0:
            raise ContractViolation("PolyhedralH needs at least one inequality")
        if np.any(np.linalg.norm(h, axis=1) == 0):
            raise ContractViolation("PolyhedralH inequalities must be nonzero")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "inequalities", h)

    @property
    def dim(self) -> int:
        return self.inequalities.shape[1]

    @cached_property
    def _unit_rows(self) -> np.ndarray:
        return self.inequalities / np.linalg.norm(self.inequalities, axis=1, keepdims=True)

    def project(self, v):
        # Moreau: v = P_K(v) - P_{K*}(-v), and K* is generated by the rows.
        v = self._check(v)
        polar_part, _ = polyhedral.nnls_project(self.inequalities, -v)
        return v + polar_part

    def distance(self, v):
        v = self._check(v)
        if np.all(self.inequalities @ v >= 0):
            return 0.0
        return super().distance(v)

    def dual(self):
        return PolyhedralV(self.inequalities)

    def generators(self) -> np.ndarray:
        """Rows generating the cone (double description; lineality included as +-pairs)."""
        rays, lin = polyhedral.extreme_rays(self.inequalities)
        return np.vstack([rays, lin, -lin]) if lin.size else rays

    def is_interior(self, v, eps=1e-7):
        return bool(np.min(self._unit_rows @ self._check(v)) > eps)

    def interior_point(self):
        return _analytic_center(self._unit_rows)

    def sample(self, rng, count):
        try:
            return PolyhedralV(self.generators()).sample(rng, count)
        except UnsupportedScale:
            return np.array([self.project(x) for x in rng.standard_normal((count, self.dim))])


def _analytic_center(h: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Maximizer of sum(log(h x)) - |x|^2 / 2 over the interior of {h x >= 0}."""
    m, d = h.shape
    # Strictly feasible start: maximize t s.t. h x >= t, -1 <= x <= 1.
    res = linprog(np.r_[np.zeros(d), -1.0],
                  A_ub=np.c_[-h, np.ones(m)], b_ub=np.zeros(m),
                  bounds=[(-1, 1)] * d + [(None, 1)], method="highs")
    if res.status != 0 or -res.fun <= 1e-9:
        raise NumericalFailure("cone has empty interior; no analytic center", residual=-getattr(res, "fun", 0.0))
    x = res.x[:d]
    for _ in range(max_iter):
        s = h @ x
        grad = h.T @ (1.0 / s) - x
        hess = -(h.T * (1.0 / s**2)) @ h - np.eye(d)
        step = np.linalg.solve(hess, -grad)
        dec = float(-grad @ step)
        if dec < 1e-20:
            break
        t = 1.0
        while np.min(h @ (x + t * step)) <= 0:
            t *= 0.5
        x = x + t * step
    else:
        raise NumericalFailure("analytic center iteration did not converge", residual=dec)
    return x / np.linalg.norm(x)


@dataclass(frozen=True)
class Free(Cone):
    """The whole space; used for unconstrained variables in dual programs."""

    dim: int
    kind: str = field(default="free", init=False)

    def project(self, v):
        return self._check(v).copy()

    def distance(self, v):
        self._check(v)
        return 0.0

    def dual(self):
        return Zero(self.dim)

    def interior_point(self):
        return np.zeros(self.dim)

    def is_interior(self, v, eps=1e-7):
        self._check(v)
        return True

    def sample(self, rng, count):
        return rng.standard_normal((count, self.dim))


@dataclass(frozen=True)
class Zero(Cone):
    dim: int
    kind: str = field(default="zero", init=False)

    def project(self, v):
        return np.zeros_like(self._check(v))

    def dual(self):
        return Free(self.dim)

    def interior_point(self):
        return np.zeros(self.dim)

    def is_interior(self, v, eps=1e-7):
        self._check(v)
        return self.dim == 0

    def sample(self, rng, count):
        return np.zeros((count, self.dim))


@dataclass(frozen=True)
class Product(Cone):
    factors: tuple
    kind: str = field(default="product", init=False)

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ContractViolation("product of zero cones")

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.cumsum([0] + [f.dim for f in self.factors])

    @cached_property
    def _groups(self):
        # Runs of identical PSD factors are projected with one batched eigh.
        groups = []
        i = 0
        fs = self.factors
        while i < len(fs):
            j = i + 1
            if isinstance(fs[i], _Psd):
                while j < len(fs) and type(fs[j]) is type(fs[i]) and fs[j].n == fs[i].n:
                    j += 1
            groups.append((i, j))
            i = j
        return groups

    def split(self, v) -> list[np.ndarray]:
        v = self._check(v)
        o = self.offsets
        return [v[o[k]:o[k + 1]] for k in range(len(self.factors))]

    def project(self, v):
        v = self._check(v)
        out = np.empty_like(v)
        o = self.offsets
        for i, j in self._groups:
            f = self.factors[i]
            lo, hi = o[i], o[j]
            if isinstance(f, _Psd):
                out[lo:hi] = _project_psd_batch(v[lo:hi].reshape(j - i, f.dim), f.is_complex).ravel()
            else:
                out[lo:hi] = f.project(v[lo:hi])
        return out

    def distance(self, v):
        return float(np.sqrt(sum(f.distance(p) ** 2 for f, p in zip(self.factors, self.split(v)))))

    def dual(self):
        return Product(tuple(f.dual() for f in self.factors))

    def interior_point(self):
        return np.concatenate([f.interior_point() for f in self.factors])

    def is_interior(self, v, eps=1e-7):
        return all(f.is_interior(p, eps) for f, p in zip(self.factors, self.split(v)))

    def sample(self, rng, count):
        return np.hstack([f.sample(rng, count) for f in self.factors])


# -- functional front end -------------------------------------------------

def contains(cone: Cone, v, tol: float = DEFAULT_TOL) -> bool:
    return cone.contains(v, tol)


def project(cone: Cone, v) -> np.ndarray:
    return cone.project(v)


def dual_cone(cone: Cone) -> Cone:
    return cone.dual()


def interior_point(cone: Cone) -> np.ndarray:
    return cone.interior_point()


def generators_of(cone: Cone) -> np.ndarray:
    """Finite generating set for polyhedral kinds."""
    if isinstance(cone, (Orthant, PolyhedralH)):
        return cone.generators()
    if isinstance(cone, PolyhedralV):
        return cone.generators
    raise UnsupportedCombination(f"{cone.kind} cone is not finitely generated")


def tensor_compose(ka: Cone, kb: Cone, rule: str) -> Cone:
    """Composite cone on the tensor product space.

    ``rule`` is ``"min"`` (conic hull of product vectors), ``"max"`` (dual of
    the min composite of the dual factors) or ``"quantum"`` (PSD cone on the
    tensor product of matrix spaces). Polyhedral composites use Kronecker
    coordinates; see :func:`tensor_embedding` for the quantum coordinates.
    """
    if rule == "quantum":
        if isinstance(ka, _Psd) and type(ka) is type(kb):
            return type(ka)(ka.n * kb.n)
        raise ContractViolation("quantum rule needs two PSD cones of the same field")
    if rule not in ("min", "max"):
        raise ContractViolation(f"unknown composition rule {rule!r}")
    if isinstance(ka, Orthant) and isinstance(kb, Orthant):
        return Orthant(ka.dim * kb.dim)
    if rule == "max":
        return tensor_compose(ka.dual(), kb.dual(), "min").dual()
    ga, gb = generators_of(ka), generators_of(kb)
    prods = np.einsum("ai,bj->abij", ga, gb).reshape(len(ga) * len(gb), ka.dim * kb.dim)
    return PolyhedralV(prods)


def tensor_embedding(ka: Cone, kb: Cone, rule: str) -> np.ndarray:
    """Orthogonal matrix T with ``composite_coords = T @ kron(a, b)``.

    Identity for polyhedral rules; for the quantum rule column (k, l) is the
    coordinate vector of ``B_k (x) B_l`` in the composite Hermitian basis.
    """
    if rule != "quantum":
        return np.eye(ka.dim * kb.dim)
    ba = linalg.hermitian_basis(ka.n, ka.is_complex)
    bb = linalg.hermitian_basis(kb.n, kb.is_complex)
    kr = np.einsum("aij,bkl->abikjl", ba, bb).reshape(ka.dim * kb.dim, ka.n * kb.n, ka.n * kb.n)
    return linalg.to_vector(kr, ka.is_complex).T
