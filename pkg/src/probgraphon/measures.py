"""Signed measures on a finite weight space and the distances built on them.

Everything here works on dense mass vectors indexed by the points of a
`WeightSpace`. The Kantorovich-Rubinstein and Fortet-Mourier norms are
linear programs over test functions; the Prohorov distance is evaluated
exactly by scanning every subset of the space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Optional, Sequence

import numpy as np

from ._simplex import linprog_max
from .exceptions import CapabilityLimitError, InputError

PROB_TOL = 1e-12
MAX_PROHOROV_POINTS = 20
MAX_VERTEX_COMBINATIONS = 3_000_000


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightSpace:
    """Finite metric space of edge weights, optionally with a cemetery point."""

    points: tuple
    metric: np.ndarray
    cemetery_index: Optional[int] = None

    def __post_init__(self):
        points = tuple(self.points)
        metric = _frozen_array(self.metric)
        m = len(points)
        if m == 0:
            raise InputError("a weight space needs at least one point")
        if metric.shape != (m, m):
            raise InputError(f"metric must be {m}x{m}, got {metric.shape}")
        if not np.all(np.isfinite(metric)):
            raise InputError("metric entries must be finite")
        if not np.array_equal(metric, metric.T):
            raise InputError("metric must be symmetric")
        if np.any(np.diag(metric) != 0):
            raise InputError("metric must vanish on the diagonal")
        off = metric[~np.eye(m, dtype=bool)]
        if np.any(off <= 0):
            raise InputError("metric must be positive off the diagonal")
        # d(i,k) <= d(i,j) + d(j,k) for all triples
        via = metric[:, :, None] + metric[None, :, :]
        if np.any(metric[:, None, :] > via + 1e-12 * (1 + via)):
            raise InputError("metric violates the triangle inequality")
        if self.cemetery_index is not None:
            ci = int(self.cemetery_index)
            if not 0 <= ci < m:
                raise InputError(f"cemetery index {ci} out of range")
            object.__setattr__(self, "cemetery_index", ci)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "metric", metric)

    @classmethod
    def discrete(cls, points: Sequence, scale: float = 1.0, cemetery_index=None):
        m = len(points)
        return cls(tuple(points), scale * (1.0 - np.eye(m)), cemetery_index)

    @property
    def size(self) -> int:
        return len(self.points)

    def index(self, label) -> int:
        try:
            return self.points.index(label)
        except ValueError:
            raise InputError(f"unknown point {label!r}") from None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, WeightSpace):
            return NotImplemented
        return (
            self.points == other.points
            and self.cemetery_index == other.cemetery_index
            and np.array_equal(self.metric, other.metric)
        )

    def __hash__(self):
        return hash((self.points, self.cemetery_index, self.metric.tobytes()))


def check_same_space(a: WeightSpace, b: WeightSpace):
    if a != b:
        raise InputError("measures live on different weight spaces")


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    space: WeightSpace
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen_array(self.mass)
        if mass.shape != (self.space.size,):
            raise InputError(
                f"mass vector has shape {mass.shape}, expected ({self.space.size},)"
            )
        if not np.all(np.isfinite(mass)):
            raise InputError("mass entries must be finite")
        object.__setattr__(self, "mass", mass)
        self._validate()

    def _validate(self):
        pass

    def __eq__(self, other):
        if not isinstance(other, SignedMeasure):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.mass, other.mass)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}({self.mass.tolist()})"

    def __add__(self, other):
        check_same_space(self.space, other.space)
        return SignedMeasure(self.space, self.mass + other.mass)

    def __sub__(self, other):
        check_same_space(self.space, other.space)
        return SignedMeasure(self.space, self.mass - other.mass)

    def __neg__(self):
        return SignedMeasure(self.space, -self.mass)

    def __mul__(self, scalar):
        return SignedMeasure(self.space, float(scalar) * self.mass)

    __rmul__ = __mul__

    def integrate(self, f) -> float:
        """Integral of the function ``f`` (a vector over the points)."""
        return float(np.dot(self.mass, np.asarray(f, dtype=float)))

    @property
    def total(self) -> float:
        """Mass of the whole space, ``mu(Z)``."""
        return float(self.mass.sum())


class Measure(SignedMeasure):
    def _validate(self):
        if np.any(self.mass < 0):
            raise InputError("a measure must have nonnegative mass")


class SubProbabilityMeasure(Measure):
    def _validate(self):
        super()._validate()
        if self.mass.sum() > 1 + PROB_TOL:
            raise InputError("sub-probability mass exceeds 1")


class ProbabilityMeasure(SubProbabilityMeasure):
    def _validate(self):
        Measure._validate(self)
        if abs(self.mass.sum() - 1.0) > PROB_TOL:
            raise InputError(f"probability mass sums to {self.mass.sum()!r}")


def dirac(space: WeightSpace, index: int) -> ProbabilityMeasure:
    mass = np.zeros(space.size)
    mass[index] = 1.0
    return ProbabilityMeasure(space, mass)


def zero_measure(space: WeightSpace) -> Measure:
    return Measure(space, np.zeros(space.size))


def hahn_jordan(mu: SignedMeasure) -> tuple[Measure, Measure]:
    """Split ``mu`` into mutually singular parts with ``mu = pos - neg``."""
    pos = np.where(mu.mass > 0, mu.mass, 0.0)
    neg = np.where(mu.mass < 0, -mu.mass, 0.0)
    return Measure(mu.space, pos), Measure(mu.space, neg)


def total_mass(mu: SignedMeasure) -> float:
    """Total variation mass ``|mu|(Z)``."""
    return float(np.abs(mu.mass).sum())


@dataclass(frozen=True, eq=False)
class TestFamily:
    """Finite test-function family ``(f_0 = 1, f_1, ...)`` with weights ``2^-k``."""

    __test__ = False  # keep pytest from collecting this class

    space: WeightSpace
    functions: np.ndarray = field(repr=False)

    def __post_init__(self):
        funcs = _frozen_array(np.atleast_2d(self.functions))
        if funcs.ndim != 2 or funcs.shape[1] != self.space.size:
            raise InputError("each test function needs one value per point")
        if not np.all(funcs[0] == 1.0):
            raise InputError("the first test function must be identically 1")
        if np.any(funcs < 0) or np.any(funcs > 1):
            raise InputError("test functions must take values in [0, 1]")
        columns = {tuple(col) for col in funcs.T}
        if len(columns) != self.space.size:
            raise InputError("test family does not separate the points")
        object.__setattr__(self, "functions", funcs)

    @classmethod
    def canonical(cls, space: WeightSpace) -> "TestFamily":
        """``(1, indicator of point 1, ..., indicator of point m)``."""
        return cls(space, np.vstack([np.ones(space.size), np.eye(space.size)]))

    @property
    def weights(self) -> np.ndarray:
        return 0.5 ** np.arange(len(self.functions))

    def __len__(self):
        return len(self.functions)

    def __eq__(self, other):
        if not isinstance(other, TestFamily):
            return NotImplemented
        return self.space == other.space and np.array_equal(
            self.functions, other.functions
        )

    def __hash__(self):
        return hash((self.space, self.functions.tobytes()))


# ---------------------------------------------------------------------------
# norms


def f_norm(mu: SignedMeasure, fam: TestFamily) -> float:
    check_same_space(mu.space, fam.space)
    return float(np.dot(fam.weights, np.abs(fam.functions @ mu.mass)))


def _free_lp(space: WeightSpace, lipschitz_var: bool):
    """Constraint matrices for the KR / FM test-function polytopes.

    The free variable ``f`` is split as ``p - q``. For FM an extra
    nonnegative variable ``L`` carries the Lipschitz constant.
    """
    m = space.size
    d = space.metric
    n = 2 * m + (1 if lipschitz_var else 0)
    rows, rhs = [], []
    for i in range(m):
        for sign in (1.0, -1.0):
            row = np.zeros(n)
            row[i], row[m + i] = sign, -sign
            if lipschitz_var:
                row[-1] = 1.0
            rows.append(row)
            rhs.append(1.0)
    for i, j in itertools.permutations(range(m), 2):
        row = np.zeros(n)
        row[i] += 1.0
        row[m + i] -= 1.0
        row[j] -= 1.0
        row[m + j] += 1.0
        if lipschitz_var:
            row[-1] = -d[i, j]
            rhs.append(0.0)
        else:
            rhs.append(d[i, j])
        rows.append(row)
    return np.array(rows), np.array(rhs)


def _lp_norm(mu: SignedMeasure, lipschitz_var: bool) -> float:
    if not np.any(mu.mass):
        return 0.0
    A, b = _free_lp(mu.space, lipschitz_var)
    c = np.concatenate([mu.mass, -mu.mass] + ([[0.0]] if lipschitz_var else []))
    value, _ = linprog_max(c, A, b)
    return max(value, 0.0)


def kr_norm(mu: SignedMeasure) -> float:
    """Kantorovich-Rubinstein (bounded Lipschitz) norm.

    Supremum of ``mu(f)`` over ``f`` with ``|f| <= 1`` and Lipschitz
    constant at most 1.
    """
    return _lp_norm(mu, lipschitz_var=False)


def fm_norm(mu: SignedMeasure) -> float:
    """Fortet-Mourier norm: supremum of ``mu(f)`` over ``||f||_inf + Lip(f) <= 1``."""
    return _lp_norm(mu, lipschitz_var=True)


def _enumerate_vertices(G: np.ndarray, h: np.ndarray) -> np.ndarray:
    """All vertices of the bounded polytope ``{y : G y <= h}`` by brute force."""
    n_con, dim = G.shape
    if comb(n_con, dim) > MAX_VERTEX_COMBINATIONS:
        raise CapabilityLimitError(
            f"vertex enumeration needs {comb(n_con, dim)} linear solves; "
            "use a smaller weight space"
        )
    found = []
    combos = itertools.combinations(range(n_con), dim)
    while True:
        chunk = np.array(list(itertools.islice(combos, 50_000)), dtype=int)
        if chunk.size == 0:
            break
        mats = G[chunk]
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-10
        if not ok.any():
            continue
        sol = np.linalg.solve(mats[ok], h[chunk[ok]][..., None])[..., 0]
        feasible = np.all(sol @ G.T <= h + 1e-9, axis=1)
        found.append(sol[feasible])
    pts = np.concatenate(found) if found else np.zeros((0, dim))
    pts = np.round(pts, 12) + 0.0
    return np.unique(pts, axis=0)


@lru_cache(maxsize=64)
def dual_vertices(space: WeightSpace, kind: str) -> np.ndarray:
    """Extreme test functions of the KR or FM unit ball (rows are functions).

    The norm of any signed measure is the largest value of ``mu(f)`` over
    these rows, which lets cut norms avoid one LP per rectangle.
    """
    A, b = _free_lp(space, lipschitz_var=(kind == "fm"))
    m = space.size
    # back to the unsplit variables f (and L for FM)
    if kind == "fm":
        G = np.hstack([A[:, :m], A[:, -1:]])
        G = np.vstack([G, np.concatenate([np.zeros(m), [-1.0]])])
        h = np.concatenate([b, [0.0]])
    elif kind == "kr":
        G, h = A[:, :m], b
    else:
        raise InputError(f"no dual vertices for metric {kind!r}")
    verts = _enumerate_vertices(G, h)[:, :m]
    verts = np.unique(np.round(verts, 12) + 0.0, axis=0)
    verts.setflags(write=False)
    return verts


def sign_patterns(n: int) -> np.ndarray:
    """All ``2^n`` vectors in ``{+1, -1}^n``, in binary order (``+1`` first)."""
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return 1.0 - 2.0 * bits


def family_vertices(fam: TestFamily) -> tuple[np.ndarray, np.ndarray]:
    """Functions ``sum_n 2^-n eps_n f_n`` for every sign pattern ``eps``."""
    eps = sign_patterns(len(fam))
    return (eps * fam.weights) @ fam.functions, eps


# ---------------------------------------------------------------------------
# Prohorov


def _subset_matrix(m: int) -> np.ndarray:
    masks = np.arange(1, 2**m)
    return ((masks[:, None] >> np.arange(m)) & 1).astype(float)


def prohorov_batch(mu: np.ndarray, nu: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Prohorov distances between rows of ``mu`` and ``nu`` (nonnegative masses).

    For ``eps`` in an interval between consecutive distinct distances
    ``(r_l, r_{l+1}]`` the open enlargement ``A^eps`` is the fixed set
    ``{x : d(x, A) <= r_l}``, so the defining inequalities reduce to
    ``c_l <= eps`` with ``c_l`` the worst subset discrepancy at level
    ``l``. The distance is the smallest ``max(c_l, r_l)`` that still
    lies in its interval.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    nu = np.atleast_2d(np.asarray(nu, dtype=float))
    m = metric.shape[0]
    if m > MAX_PROHOROV_POINTS:
        raise CapabilityLimitError(
            f"exact Prohorov distance limited to {MAX_PROHOROV_POINTS} points"
        )
    B = _subset_matrix(m)
    mu_A = B @ mu.T
    nu_A = B @ nu.T
    levels = np.unique(metric)
    best = np.full(mu.shape[0], np.inf)
    for idx, r in enumerate(levels):
        upper = levels[idx + 1] if idx + 1 < len(levels) else np.inf
        close = (B @ (metric <= r)) > 0
        gap = np.maximum(mu_A - close @ nu.T, nu_A - close @ mu.T).max(axis=0)
        cand = np.maximum(np.maximum(gap, 0.0), r)
        valid = cand <= upper
        best = np.where(valid, np.minimum(best, cand), best)
    return best


def prohorov(mu: SignedMeasure, nu: SignedMeasure) -> float:
    """Prohorov distance between two (nonnegative) measures on a finite space."""
    check_same_space(mu.space, nu.space)
    if np.any(mu.mass < 0) or np.any(nu.mass < 0):
        raise InputError("the Prohorov distance needs nonnegative measures")
    return float(prohorov_batch(mu.mass, nu.mass, mu.space.metric)[0])
