"""Homomorphism densities of edge-decorated graphs.

A decorated graph ``F^g`` has a test function on each directed edge.
Its density in a stepfunction ``W`` sums, over all maps from the
vertices of ``F`` to the blocks of ``W``, the product of block lengths
times the product over edges of the decoration integrated against the
cell measure. The sum is taken with `math.fsum` over terms computed in a
fixed factor order, so relabeling the blocks of ``W`` leaves the result
bit-identical.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .exceptions import CapabilityLimitError, InputError
from .graphon import StepGraphon
from .measures import TestFamily, WeightSpace
from .rng import make_rng
from .sampling import SampledGraph, draw_types

MAP_BUDGET = 10**8
TENSOR_BUDGET = 10**7
_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class DecoratedGraph:
    """Directed graph on vertices ``0..v-1`` with a function over Z on each edge."""

    v: int
    edges: tuple
    decorations: np.ndarray
    family_indices: Optional[tuple] = None

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        if self.v < 1:
            raise InputError("a decorated graph needs at least one vertex")
        for a, b in edges:
            if a == b:
                raise InputError("self-loops are not allowed")
            if not (0 <= a < self.v and 0 <= b < self.v):
                raise InputError(f"edge {(a, b)} out of range")
        if len(set(edges)) != len(edges):
            raise InputError("edges must be distinct")
        dec = np.array(self.decorations, dtype=float)
        if edges:
            dec = dec.reshape(len(edges), -1)
        else:
            dec = dec.reshape(0, dec.shape[-1] if dec.ndim == 2 else 0)
        if not np.all(np.isfinite(dec)):
            raise InputError("decorations must be finite")
        dec.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "decorations", dec)
        if self.family_indices is not None:
            object.__setattr__(self, "family_indices", tuple(int(n) for n in self.family_indices))

    @classmethod
    def from_family(cls, v: int, edges, fam: TestFamily, indices: Sequence[int]):
        """F-graph whose edge ``e`` carries ``fam.functions[indices[e]]``."""
        indices = tuple(int(n) for n in indices)
        if len(indices) != len(edges):
            raise InputError("one family index per edge is required")
        if any(not 0 <= n < len(fam) for n in indices):
            raise InputError("family index out of range")
        dec = fam.functions[list(indices)] if indices else np.zeros((0, fam.space.size))
        return cls(v, tuple(edges), dec, indices)

    @property
    def lipschitz_factor(self) -> int:
        """``sum_e 2^{n_e}``, the counting-lemma constant of an F-graph."""
        if self.family_indices is None:
            raise InputError("only F-graphs carry family indices")
        return sum(2**n for n in self.family_indices)


def _check_decorations(f: DecoratedGraph, space: WeightSpace):
    if f.edges and f.decorations.shape[1] != space.size:
        raise InputError("decoration length does not match the weight space")


def _sum_over_maps(lam: np.ndarray, mats: np.ndarray, v: int, edges, budget: int) -> float:
    """``fsum`` over all maps ``phi`` of ``prod_i lam[phi_i] * prod_e mats[e][phi_a, phi_b]``."""
    k = len(lam)
    total = k**v
    if total > budget:
        raise CapabilityLimitError(
            f"{k}^{v} = {total} vertex maps exceed the budget {budget}; use hom_density_mc"
        )
    terms = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK))
        phi = np.unravel_index(idx, (k,) * v)
        t = np.ones(len(idx))
        for i in range(v):
            t = t * lam[phi[i]]
        for e, (a, b) in enumerate(edges):
            t = t * mats[e][phi[a], phi[b]]
        terms.append(t)
    return math.fsum(itertools.chain.from_iterable(t.tolist() for t in terms))


def hom_density_exact(f: DecoratedGraph, w: StepGraphon, budget: int = MAP_BUDGET) -> float:
    _check_decorations(f, w.space)
    mats = np.einsum("ijz,ez->eij", w.cells, f.decorations) if f.edges else np.zeros((0, w.k, w.k))
    return _sum_over_maps(w.weights, mats, f.v, f.edges, budget)


def hom_density_mc(
    f: DecoratedGraph, w: StepGraphon, samples: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate over i.i.d. vertex types, with its standard error."""
    _check_decorations(f, w.space)
    if samples < 1:
        raise InputError("need at least one sample")
    rng = make_rng(seed)
    types = draw_types(w, samples * f.v, rng).reshape(samples, f.v)
    vals = np.ones(samples)
    for e, (a, b) in enumerate(f.edges):
        vals = vals * (w.cells[types[:, a], types[:, b]] @ f.decorations[e])
    mean = float(vals.mean())
    if samples < 2:
        return mean, float("inf")
    return mean, float(vals.std(ddof=1) / math.sqrt(samples))


def _graph_matrices(f: DecoratedGraph, g: SampledGraph) -> np.ndarray:
    wts = g.weights
    if np.any(wts < 0):
        if g.space.cemetery_index is None:
            raise InputError("graph has missing edges but no cemetery point")
        wts = np.where(wts < 0, g.space.cemetery_index, wts)
    return np.stack([f.decorations[e][wts] for e in range(len(f.edges))]) if f.edges else np.zeros((0, g.n, g.n))


def hom_density_graph(f: DecoratedGraph, g: SampledGraph, budget: int = MAP_BUDGET) -> float:
    """Density ``t(F^g, G)`` over all ``v(G)^{v(F)}`` maps, repetitions included."""
    _check_decorations(f, g.space)
    wts = g.weights.copy()
    if g.space.cemetery_index is not None:
        np.fill_diagonal(wts, g.space.cemetery_index)
    g = SampledGraph(g.space, wts, g.symmetric)
    lam = np.array([float(Fraction(1, g.n))] * g.n)
    return _sum_over_maps(lam, _graph_matrices(f, g), f.v, f.edges, budget)


def edge_joint_measure(v: int, edges, w: StepGraphon, budget: int = TENSOR_BUDGET) -> np.ndarray:
    """Joint law ``M_W^F`` of the edge weights, one tensor axis per edge.

    For the complete directed graph on ``k`` vertices this is the law of
    the off-diagonal weights of ``G(k, W)``.
    """
    edges = tuple((int(a), int(b)) for a, b in edges)
    m = w.space.size
    size = m ** len(edges)
    kv = w.k**v
    if size > budget or kv * size > 50 * budget:
        raise CapabilityLimitError("edge-joint tensor exceeds the budget")
    lam = w.weights
    out = np.zeros((m,) * len(edges))
    chunk = max(1, _CHUNK // max(1, size))
    for start in range(0, kv, chunk):
        idx = np.arange(start, min(kv, start + chunk))
        phi = np.unravel_index(idx, (w.k,) * v)
        acc = np.ones(len(idx))
        for i in range(v):
            acc = acc * lam[phi[i]]
        for a, b in edges:
            acc = acc[..., None] * w.cells[phi[a], phi[b]].reshape((len(idx),) + (1,) * (acc.ndim - 1) + (m,))
        out += acc.sum(axis=0)
    return out


def complete_edges(v: int) -> tuple:
    """Directed edges of the complete graph on ``v`` vertices, row-major order."""
    return tuple((a, b) for a in range(v) for b in range(v) if a != b)


def inverse_counting_decorations(fam: TestFamily, n0: int) -> list:
    """Products ``prod_n f_n^{s_n} (1 - f_n)^{1 - s_n}`` over ``s`` in ``{0,1}^n0``.

    Ordered lexicographically in ``s``; together they sum to 1 pointwise.
    """
    if not 0 <= n0 <= len(fam) - 1:
        raise InputError(f"n0 must lie in [0, {len(fam) - 1}]")
    out = []
    for s in itertools.product((0, 1), repeat=n0):
        vec = np.ones(fam.space.size)
        for n, bit in enumerate(s, start=1):
            vec = vec * (fam.functions[n] if bit else 1.0 - fam.functions[n])
        out.append(vec)
    return out
