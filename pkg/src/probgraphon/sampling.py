"""W-random graphs.

Stream discipline: for a given seed, vertex types are drawn from the
substream ``(seed, 0)`` and edge weights from ``(seed, 1)``, so
``sample_g(w, k, seed)`` equals ``sample_g_from_h(sample_h(w, k, seed)[0],
seed)``. Experiment runners key each trial as ``(seed, trial)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from .exceptions import InputError
from .graphon import StepGraphon
from .measures import PROB_TOL, WeightSpace
from .rng import make_rng

TYPE_STREAM = 0
EDGE_STREAM = 1


@dataclass(frozen=True, eq=False)
class MeasureGraph:
    """Complete graph on ``n`` vertices with a probability measure on every edge.

    ``cells[i, j]`` is the mass vector decorating edge ``(i, j)``.
    """

    space: WeightSpace
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=float, copy=True)
        if cells.ndim != 3 or cells.shape[0] != cells.shape[1] or cells.shape[2] != self.space.size:
            raise InputError("cells must have shape (n, n, |Z|)")
        if np.any(cells < 0) or np.any(np.abs(cells.sum(-1) - 1) > PROB_TOL):
            raise InputError("every edge must carry a probability measure")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    def to_graphon(self) -> StepGraphon:
        """The ``n``-block stepfunction carrying the edge measures."""
        return StepGraphon(self.space, (Fraction(1, self.n),) * self.n, self.cells, "probability")


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """Complete directed weighted graph; ``weights[i, j]`` indexes the weight space.

    A negative entry marks a missing edge. The diagonal holds the
    cemetery index when the space has one.
    """

    space: WeightSpace
    weights: np.ndarray
    symmetric: bool = False

    def __post_init__(self):
        wts = np.array(self.weights, dtype=np.int64, copy=True)
        if wts.ndim != 2 or wts.shape[0] != wts.shape[1]:
            raise InputError("weights must be a square matrix")
        if np.any(wts >= self.space.size):
            raise InputError("weight index out of range")
        if self.symmetric and not np.array_equal(wts, wts.T):
            raise InputError("symmetric graph has an asymmetric weight matrix")
        wts.setflags(write=False)
        object.__setattr__(self, "weights", wts)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SampledGraph):
            return NotImplemented
        return (
            self.space == other.space
            and self.symmetric == other.symmetric
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


def draw_types(w: StepGraphon, k: int, rng: np.random.Generator) -> np.ndarray:
    """Block indices of ``k`` i.i.d. uniform points of ``[0, 1]``.

    Draws are integers below the common denominator of the block lengths,
    so block boundaries are never decided by float comparisons.
    """
    den = lcm(*(x.denominator for x in w.lengths))
    ends = np.cumsum([int(x * den) for x in w.lengths])
    u = rng.integers(0, den, size=k)
    return np.searchsorted(ends, u, side="right")


def _diagonal_fill(space: WeightSpace, cells: np.ndarray) -> np.ndarray:
    if space.cemetery_index is None:
        return cells
    cells = cells.copy()
    n = cells.shape[0]
    cells[np.arange(n), np.arange(n)] = 0.0
    cells[np.arange(n), np.arange(n), space.cemetery_index] = 1.0
    return cells


def sample_h(w: StepGraphon, k: int, seed: int = 0) -> tuple[MeasureGraph, np.ndarray]:
    """The measure-decorated graph ``H(k, W)`` and the vertex types.

    Off-diagonal edge ``(i, j)`` carries ``W``'s cell at the blocks of
    vertices ``i`` and ``j``. Diagonal cells are the cemetery Dirac when
    the space has a cemetery point and ``W``'s own diagonal value
    otherwise.
    """
    if w.kind != "probability":
        raise InputError("sampling needs a probability-graphon")
    if k < 1:
        raise InputError("k must be at least 1")
    types = draw_types(w, k, make_rng(seed, TYPE_STREAM))
    cells = w.cells[np.ix_(types, types)]
    return MeasureGraph(w.space, _diagonal_fill(w.space, cells)), types


def _categorical(cells: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(cells, axis=-1)
    idx = (u[..., None] >= cdf).sum(axis=-1)
    return np.minimum(idx, cells.shape[-1] - 1)


def sample_g_from_h(h: MeasureGraph, seed: int = 0, symmetric: bool = False) -> SampledGraph:
    """Draw every off-diagonal edge weight independently from its decoration."""
    n = h.n
    rng = make_rng(seed, EDGE_STREAM)
    u = rng.random((n, n))
    if symmetric:
        u = np.triu(u) + np.triu(u, 1).T
    weights = _categorical(h.cells, u)
    if symmetric:
        weights = np.triu(weights) + np.triu(weights, 1).T
    diag = -1 if h.space.cemetery_index is None else h.space.cemetery_index
    np.fill_diagonal(weights, diag)
    return SampledGraph(h.space, weights, symmetric)


def sample_g(w: StepGraphon, k: int, seed: int = 0, symmetric: bool = False) -> SampledGraph:
    """The W-random weighted graph ``G(k, W)``."""
    h, _ = sample_h(w, k, seed)
    return sample_g_from_h(h, seed, symmetric)


def subsample(g: SampledGraph, k: int, seed: int = 0) -> SampledGraph:
    """Induced subgraph on ``k`` distinct uniformly chosen vertices, in draw order."""
    if not 1 <= k <= g.n:
        raise InputError(f"cannot pick {k} distinct vertices out of {g.n}")
    idx = make_rng(seed, TYPE_STREAM).choice(g.n, size=k, replace=False)
    return SampledGraph(g.space, g.weights[np.ix_(idx, idx)], g.symmetric)
