"""Measure-valued stepfunction kernels.

A `StepGraphon` is constant on the rectangles ``S_i x S_j`` of a finite
interval partition of ``[0, 1]``. Block lengths are exact fractions so
that overlays, equipartitions and steppings never drift; only the masses
are floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .exceptions import InputError
from .measures import (
    PROB_TOL,
    Measure,
    ProbabilityMeasure,
    SignedMeasure,
    SubProbabilityMeasure,
    WeightSpace,
    check_same_space,
)

KINDS = ("probability", "subprobability", "positive", "signed")
_MEASURE_TYPE = {
    "probability": ProbabilityMeasure,
    "subprobability": SubProbabilityMeasure,
    "positive": Measure,
    "signed": SignedMeasure,
}


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise InputError(f"block length {x!r} is not an exact rational (use int, str or Fraction)")


def _infer_kind(cells: np.ndarray) -> str:
    if np.any(cells < 0):
        return "signed"
    sums = cells.sum(axis=-1)
    if np.all(np.abs(sums - 1.0) <= PROB_TOL):
        return "probability"
    if np.all(sums <= 1 + PROB_TOL):
        return "subprobability"
    return "positive"


def _check_kind(cells: np.ndarray, kind: str):
    if kind not in KINDS:
        raise InputError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")
    if kind == "signed":
        return
    if np.any(cells < 0):
        raise InputError(f"{kind} kernel has negative mass")
    sums = cells.sum(axis=-1)
    if kind == "probability" and np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise InputError("probability kernel has a cell not summing to 1")
    if kind == "subprobability" and np.any(sums > 1 + PROB_TOL):
        raise InputError("sub-probability kernel has a cell with mass above 1")


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Stepfunction kernel with ``cells[i, j]`` the mass vector on ``S_i x S_j``."""

    space: WeightSpace
    lengths: tuple
    cells: np.ndarray
    kind: Optional[str] = None
    # exact rational cell values, kept by steppings so that repeated
    # averaging rounds only once
    exact: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        lengths = tuple(as_fraction(x) for x in self.lengths)
        if not lengths:
            raise InputError("a stepfunction needs at least one block")
        if any(x <= 0 for x in lengths):
            raise InputError("block lengths must be positive")
        if sum(lengths) != 1:
            raise InputError(f"block lengths sum to {sum(lengths)}, not 1")
        cells = np.array(self.cells, dtype=float, copy=True)
        k, m = len(lengths), self.space.size
        if cells.shape != (k, k, m):
            raise InputError(f"cells must have shape {(k, k, m)}, got {cells.shape}")
        if not np.all(np.isfinite(cells)):
            raise InputError("cell masses must be finite")
        kind = self.kind or _infer_kind(cells)
        _check_kind(cells, kind)
        cells.setflags(write=False)
        if self.exact is not None and np.shape(self.exact) != cells.shape:
            raise InputError("exact cell array has the wrong shape")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "sup_norm", float(np.abs(cells).sum(axis=-1).max()))

    @property
    def k(self) -> int:
        return len(self.lengths)

    @property
    def weights(self) -> np.ndarray:
        """Block lengths as floats."""
        return np.array([float(x) for x in self.lengths])

    def cell(self, i: int, j: int) -> SignedMeasure:
        return _MEASURE_TYPE[self.kind](self.space, self.cells[i, j])

    def __eq__(self, other):
        if not isinstance(other, StepGraphon):
            return NotImplemented
        return (
            self.space == other.space
            and self.lengths == other.lengths
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None

    def __repr__(self):
        lengths = ", ".join(str(x) for x in self.lengths)
        return f"StepGraphon(k={self.k}, lengths=({lengths}), kind={self.kind!r})"

    def __sub__(self, other: "StepGraphon") -> "StepGraphon":
        check_same_space(self.space, other.space)
        u, w = refine_common(self, other)
        return StepGraphon(self.space, u.lengths, u.cells - w.cells, "signed")

    def __add__(self, other: "StepGraphon") -> "StepGraphon":
        check_same_space(self.space, other.space)
        u, w = refine_common(self, other)
        return StepGraphon(self.space, u.lengths, u.cells + w.cells, "signed")

    def __mul__(self, scalar) -> "StepGraphon":
        return StepGraphon(self.space, self.lengths, float(scalar) * self.cells, "signed")

    __rmul__ = __mul__

    def integrate(self, f) -> np.ndarray:
        """Real kernel ``W[f]`` as a ``k x k`` matrix of cell values."""
        return self.cells @ np.asarray(f, dtype=float)


def constant_graphon(mu: SignedMeasure, kind=None) -> StepGraphon:
    return StepGraphon(mu.space, (Fraction(1),), mu.mass[None, None, :], kind)


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class BlockPartitionMap:
    """Grouping of fine blocks into coarse classes.

    ``classes[c]`` lists the fine block indices forming class ``c``;
    classes need not be contiguous intervals.
    """

    fine_lengths: tuple
    classes: tuple

    def __post_init__(self):
        fine = tuple(as_fraction(x) for x in self.fine_lengths)
        classes = tuple(tuple(int(i) for i in c) for c in self.classes)
        seen = sorted(i for c in classes for i in c)
        if seen != list(range(len(fine))):
            raise InputError("classes must partition the fine blocks")
        if any(len(c) == 0 for c in classes):
            raise InputError("empty class in block partition")
        object.__setattr__(self, "fine_lengths", fine)
        object.__setattr__(self, "classes", classes)

    @classmethod
    def from_labels(cls, labels: Sequence[int], fine_lengths) -> "BlockPartitionMap":
        """Classes ordered by first appearance of each label."""
        order: dict = {}
        for i, lab in enumerate(labels):
            order.setdefault(lab, []).append(i)
        return cls(tuple(fine_lengths), tuple(tuple(v) for v in order.values()))

    @classmethod
    def identity(cls, fine_lengths) -> "BlockPartitionMap":
        return cls(tuple(fine_lengths), tuple((i,) for i in range(len(fine_lengths))))

    @classmethod
    def trivial(cls, fine_lengths) -> "BlockPartitionMap":
        return cls(tuple(fine_lengths), (tuple(range(len(fine_lengths))),))

    @property
    def target_count(self) -> int:
        return len(self.classes)

    @property
    def class_lengths(self) -> tuple:
        return tuple(sum(self.fine_lengths[i] for i in c) for c in self.classes)

    @property
    def labels(self) -> np.ndarray:
        out = np.empty(len(self.fine_lengths), dtype=int)
        for c, members in enumerate(self.classes):
            out[list(members)] = c
        return out

    @property
    def assignment(self) -> list:
        """Per class, the ``(fine index, length)`` pairs it is made of."""
        return [[(i, self.fine_lengths[i]) for i in c] for c in self.classes]

    def coarsen(self, coarser: "BlockPartitionMap") -> "BlockPartitionMap":
        """Compose with a grouping of this map's classes."""
        if coarser.fine_lengths != self.class_lengths:
            raise InputError("coarser map does not act on these classes")
        return BlockPartitionMap(
            self.fine_lengths,
            tuple(tuple(sorted(i for c in group for i in self.classes[c])) for group in coarser.classes),
        )


def _breakpoints(lengths: Iterable[Fraction]) -> list:
    out, acc = [], Fraction(0)
    for x in lengths:
        acc += x
        out.append(acc)
    return out


def _overlay(*length_lists) -> tuple[tuple, list]:
    """Common refinement of interval partitions.

    Returns the fine lengths and, per input, the source block of each
    fine block.
    """
    cuts = sorted(set().union(*(_breakpoints(ls) for ls in length_lists)))
    fine, start = [], Fraction(0)
    for c in cuts:
        fine.append(c - start)
        start = c
    maps = []
    for ls in length_lists:
        ends = _breakpoints(ls)
        src, b = [], 0
        acc = Fraction(0)
        for x in fine:
            acc += x
            while ends[b] < acc:
                b += 1
            src.append(b)
        maps.append(np.array(src, dtype=int))
    return tuple(fine), maps


def _reindex(w: StepGraphon, lengths, src: np.ndarray) -> StepGraphon:
    idx = np.ix_(src, src)
    exact = None if w.exact is None else w.exact[idx]
    return StepGraphon(w.space, lengths, w.cells[idx], w.kind, exact)


def refine_common(u: StepGraphon, w: StepGraphon) -> tuple[StepGraphon, StepGraphon]:
    """Copy both kernels onto the overlay of their partitions."""
    if u.lengths == w.lengths:
        return u, w
    fine, (su, sw) = _overlay(u.lengths, w.lengths)
    return _reindex(u, fine, su), _reindex(w, fine, sw)


def refine_to(w: StepGraphon, lengths) -> tuple[StepGraphon, np.ndarray]:
    """Refine ``w`` against an interval partition.

    Returns the refined kernel and, for each fine block, the index of the
    target interval containing it.
    """
    lengths = tuple(as_fraction(x) for x in lengths)
    if sum(lengths) != 1 or any(x <= 0 for x in lengths):
        raise InputError("target partition must have positive lengths summing to 1")
    fine, (sw, sp) = _overlay(w.lengths, lengths)
    return _reindex(w, fine, sw), sp


def equipartition(w: StepGraphon, L: int) -> StepGraphon:
    """Split every block into pieces of length ``1/L``."""
    L = int(L)
    if L < 1 or any((x * L).denominator != 1 for x in w.lengths):
        raise InputError(f"{L} is not a common denominator of the block lengths")
    src = np.repeat(np.arange(w.k), [int(x * L) for x in w.lengths])
    return _reindex(w, (Fraction(1, L),) * L, src)


def common_denominator(*graphons: StepGraphon) -> int:
    return lcm(*(x.denominator for g in graphons for x in g.lengths))


def _exact_cells(w: StepGraphon) -> np.ndarray:
    if w.exact is not None:
        return w.exact
    return np.array([Fraction(x) for x in w.cells.ravel().tolist()], dtype=object).reshape(
        w.cells.shape
    )


def _exact_average(exact: np.ndarray, fine: tuple, classes: tuple) -> np.ndarray:
    """Length-weighted class averages in rational arithmetic."""
    k = len(classes)
    m = exact.shape[-1]
    out = np.empty((k, k, m), dtype=object)
    lens = [sum(fine[i] for i in c) for c in classes]
    for a, ca in enumerate(classes):
        for b, cb in enumerate(classes):
            if len(ca) == 1 and len(cb) == 1:
                out[a, b] = exact[ca[0], cb[0]]
                continue
            norm = lens[a] * lens[b]
            acc = [Fraction(0)] * m
            for i in ca:
                for j in cb:
                    wgt = fine[i] * fine[j] / norm
                    vals = exact[i, j]
                    for z in range(m):
                        if vals[z]:
                            acc[z] += wgt * vals[z]
            out[a, b] = acc
    return out


def _to_float(exact: np.ndarray) -> np.ndarray:
    return np.array([float(x) for x in exact.ravel().tolist()]).reshape(exact.shape)


def stepping(
    w: StepGraphon,
    partition: Union[BlockPartitionMap, Sequence],
    keep_grid: bool = False,
) -> StepGraphon:
    """Average ``w`` over the classes of a partition.

    ``partition`` is either a `BlockPartitionMap` over ``w``'s blocks or
    an interval partition given by rational lengths (``w`` is refined
    against it first). With ``keep_grid`` the result stays on the fine
    grid, i.e. it is the stepped kernel as a function on ``[0, 1]``;
    otherwise each class becomes one block, classes in map order.
    """
    if isinstance(partition, BlockPartitionMap):
        if partition.fine_lengths != w.lengths:
            raise InputError("partition map was built for a different block structure")
        fine_w, pmap = w, partition
    else:
        fine_w, src = refine_to(w, partition)
        pmap = BlockPartitionMap.from_labels(src, fine_w.lengths)
    avg = _exact_average(_exact_cells(fine_w), fine_w.lengths, pmap.classes)
    if keep_grid:
        labels = pmap.labels
        avg = avg[np.ix_(labels, labels)]
        return StepGraphon(w.space, fine_w.lengths, _to_float(avg), w.kind, avg)
    return StepGraphon(w.space, pmap.class_lengths, _to_float(avg), w.kind, avg)


def relabel(w: StepGraphon, sigma: Sequence[int]) -> StepGraphon:
    """Kernel ``W^sigma`` with cell ``(i, j)`` taken from ``(sigma[i], sigma[j])``."""
    sigma = np.asarray(sigma, dtype=int)
    if sorted(sigma.tolist()) != list(range(w.k)):
        raise InputError("sigma must be a permutation of the block indices")
    if any(w.lengths[s] != w.lengths[i] for i, s in enumerate(sigma)):
        raise InputError("relabeling may only exchange blocks of equal length")
    return _reindex(w, w.lengths, sigma)


def from_weighted_graph(g) -> StepGraphon:
    """Graphon ``W_G`` of a weighted graph on ``n`` equal blocks.

    Diagonal cells and missing edges (weight index ``-1``) carry the
    Dirac mass at the cemetery point.
    """
    space = g.space
    n = g.n
    weights = np.array(g.weights, dtype=int)
    fill = weights < 0
    np.fill_diagonal(fill, True)
    if fill.any():
        if space.cemetery_index is None:
            raise InputError("graph needs a cemetery point for its diagonal or missing edges")
        weights = np.where(fill, space.cemetery_index, weights)
    cells = np.zeros((n, n, space.size))
    ii, jj = np.indices((n, n))
    cells[ii, jj, weights] = 1.0
    return StepGraphon(space, (Fraction(1, n),) * n, cells, "probability")


def marginal_measure(w: StepGraphon) -> Measure:
    """``M_W``: total-variation kernel integrated over the unit square."""
    lam = w.weights
    return Measure(w.space, np.einsum("i,j,ijz->z", lam, lam, np.abs(w.cells)))


BINARY_SPACE = WeightSpace((0, 1), np.array([[0.0, 1.0], [1.0, 0.0]]))


def embed_real_graphon(values, lengths, space: WeightSpace = BINARY_SPACE) -> StepGraphon:
    """Probability-graphon ``w delta_1 + (1 - w) delta_0`` of a ``[0,1]``-valued kernel."""
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
        raise InputError("values must be a square matrix")
    if np.any(vals < 0) or np.any(vals > 1):
        raise InputError("real graphon values must lie in [0, 1]")
    if space.size != 2:
        raise InputError("real graphons embed into a two-point space {0, 1}")
    cells = np.stack([1.0 - vals, vals], axis=-1)
    return StepGraphon(space, tuple(lengths), cells, "probability")
