"""scikit-learn style wrappers.

The objects here are kernels, not feature matrices, so the fit is only
partial: ``X`` is a `StepGraphon` or a list of them and ``transform``
returns kernels or a density matrix. Parameters follow the usual
``get_params``/``set_params`` contract.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cutmetric import (
    MetricChoice,
    compress,
    cut_distance,
    cut_norm_upper_bound,
    weak_regularity_partition,
)
from .exceptions import InputError
from .graphon import stepping
from .homdensity import hom_density_exact, hom_density_mc
from .validation import check_family, check_graphon, check_graphons, check_positive_int, check_seed


class WeakRegularityPartitioner(TransformerMixin, BaseEstimator):
    """Learn a weak-regularity partition of a stepfunction's blocks.

    After ``fit``: ``partition_``, ``stepped_``, ``error_`` (witnessed
    F-cut norm of ``W - W_P``) and ``error_upper_`` (a rigorous bound).
    ``transform`` steps any kernel on the same block grid with the
    learned partition.
    """

    def __init__(self, target_k=16, family=None, max_exact_blocks=14, restarts=20, seed=0):
        self.target_k = target_k
        self.family = family
        self.max_exact_blocks = max_exact_blocks
        self.restarts = restarts
        self.seed = seed

    def fit(self, X, y=None):
        w = check_graphon(X)
        fam = check_family(self.family, w.space)
        check_positive_int(self.target_k, "target_k")
        pmap, stepped, err = weak_regularity_partition(
            w, self.target_k, fam, self.max_exact_blocks, self.restarts, check_seed(self.seed)
        )
        self.partition_ = pmap
        self.stepped_ = stepped
        self.error_ = err
        on_grid = stepping(w, pmap, keep_grid=True)
        self.error_upper_ = cut_norm_upper_bound(compress(w - on_grid), MetricChoice.fnorm(fam))
        self.fine_lengths_ = w.lengths
        return self

    def transform(self, X):
        if not hasattr(self, "partition_"):
            raise NotFittedError("call fit first")
        w = check_graphon(X)
        if w.lengths != self.fine_lengths_:
            raise InputError("kernel is not on the block grid seen in fit")
        return stepping(w, self.partition_)


class HomomorphismDensityTransformer(TransformerMixin, BaseEstimator):
    """Map kernels to their homomorphism-density profile.

    ``transform`` returns an array of shape ``(n_kernels, n_graphs)``.
    ``mode="mc"`` uses ``samples`` Monte Carlo draws per entry.
    """

    def __init__(self, graphs: Sequence = (), mode="exact", samples=10_000, seed=0):
        self.graphs = graphs
        self.mode = mode
        self.samples = samples
        self.seed = seed

    def fit(self, X=None, y=None):
        if self.mode not in ("exact", "mc"):
            raise InputError(f"unknown mode {self.mode!r}")
        self.n_features_out_ = len(self.graphs)
        return self

    def transform(self, X):
        if not hasattr(self, "n_features_out_"):
            raise NotFittedError("call fit first")
        ws = check_graphons(X)
        out = np.empty((len(ws), len(self.graphs)))
        for i, w in enumerate(ws):
            for j, f in enumerate(self.graphs):
                if self.mode == "exact":
                    out[i, j] = hom_density_exact(f, w)
                else:
                    out[i, j] = hom_density_mc(f, w, self.samples, self.seed)[0]
        return out


class CutDistanceMatrix(TransformerMixin, BaseEstimator):
    """Labeled cut distances from each kernel to the kernels seen in ``fit``."""

    def __init__(self, metric: Optional[MetricChoice] = None, mode="exact", restarts=20, seed=0):
        self.metric = metric
        self.mode = mode
        self.restarts = restarts
        self.seed = seed

    def fit(self, X, y=None):
        self.reference_ = check_graphons(X)
        return self

    def transform(self, X):
        if not hasattr(self, "reference_"):
            raise NotFittedError("call fit first")
        ws = check_graphons(X)
        metric = self.metric or MetricChoice.kr()
        out = np.empty((len(ws), len(self.reference_)))
        for i, u in enumerate(ws):
            for j, w in enumerate(self.reference_):
                out[i, j] = cut_distance(u, w, metric, self.mode, self.restarts, self.seed)[0]
        return out
