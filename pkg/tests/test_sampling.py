from fractions import Fraction

import numpy as np
import pytest

from oracles import binomial_sigma, chi2_pvalue
from probgraphon.exceptions import InputError
from probgraphon.graphon import StepGraphon, constant_graphon, embed_real_graphon
from probgraphon.harness import random_graphon, random_space
from probgraphon.measures import ProbabilityMeasure, WeightSpace
from probgraphon.sampling import (
    MeasureGraph,
    SampledGraph,
    draw_types,
    sample_g,
    sample_g_from_h,
    sample_h,
    subsample,
)
from probgraphon.rng import make_rng

F = Fraction


def test_determinism(sbm):
    a = sample_g(sbm, 30, seed=5)
    assert a == sample_g(sbm, 30, seed=5)
    assert a != sample_g(sbm, 30, seed=6)
    h, types = sample_h(sbm, 30, seed=5)
    assert sample_g_from_h(h, seed=5) == a
    h2, types2 = sample_h(sbm, 30, seed=5)
    assert np.array_equal(h.cells, h2.cells) and np.array_equal(types, types2)


def test_single_vertex_and_diagonal():
    sp = WeightSpace.discrete((0, 1, "c"), cemetery_index=2)
    w = constant_graphon(ProbabilityMeasure(sp, [0.5, 0.5, 0.0]))
    g = sample_g(w, 1, seed=0)
    assert g.weights.tolist() == [[2]]
    h, _ = sample_h(w, 4, seed=0)
    assert np.all(h.cells[np.arange(4), np.arange(4), 2] == 1)
    g4 = sample_g(w, 4, seed=1)
    assert np.all(np.diag(g4.weights) == 2)


def test_no_cemetery_keeps_diagonal_cell(sbm):
    h, types = sample_h(sbm, 6, seed=3)
    for i, t in enumerate(types):
        assert np.array_equal(h.cells[i, i], sbm.cells[t, t])
    assert np.all(np.diag(sample_g(sbm, 6, seed=3).weights) == -1)


def test_deterministic_graphon_gives_exact_graph(two_point):
    cells = np.zeros((2, 2, 2))
    cells[0, 0, 1] = cells[1, 1, 1] = 1
    cells[0, 1, 0] = cells[1, 0, 0] = 1
    w = StepGraphon(two_point, (F(1, 2), F(1, 2)), cells)
    g = sample_g(w, 20, seed=4)
    _, types = sample_h(w, 20, seed=4)
    off = ~np.eye(20, dtype=bool)
    expected = (types[:, None] == types[None, :]).astype(int)
    assert np.array_equal(g.weights[off], expected[off])


def test_symmetric_flag(sbm):
    g = sample_g(sbm, 25, seed=7, symmetric=True)
    assert np.array_equal(g.weights, g.weights.T) and g.symmetric
    with pytest.raises(InputError):
        SampledGraph(sbm.space, [[0, 1], [0, 0]], symmetric=True)


def test_edge_frequency_within_binomial_band():
    sp = WeightSpace.discrete((0, 1))
    w = embed_real_graphon([[0.3]], ["1"])
    n = 60
    g = sample_g(w, n, seed=11)
    off = ~np.eye(n, dtype=bool)
    freq = g.weights[off].mean()
    assert abs(freq - 0.3) <= 4 * binomial_sigma(0.3, n * (n - 1))
    assert g.space == sp


def test_types_follow_lengths():
    sp = random_space(np.random.default_rng(0), 2)
    w = random_graphon(np.random.default_rng(1), sp, (F(1, 6), F(1, 3), F(1, 2)))
    types = draw_types(w, 60000, make_rng(2, 0))
    counts = np.bincount(types, minlength=3)
    assert chi2_pvalue(counts, [1 / 6, 1 / 3, 1 / 2]) > 1e-4


def test_edge_law_chi_square():
    rng = np.random.default_rng(3)
    sp = random_space(rng, 3)
    w = random_graphon(rng, sp, (F(1, 2), F(1, 2)))
    counts = np.zeros(3)
    for seed in range(3000):
        counts[sample_g(w, 2, seed=seed).weights[0, 1]] += 1
    expected = 0.25 * w.cells.sum(axis=(0, 1))
    assert chi2_pvalue(counts, expected) > 1e-4


def test_exchangeability():
    """Every vertex pair has the same law for the edge weight."""
    rng = np.random.default_rng(4)
    sp = random_space(rng, 2)
    w = random_graphon(rng, sp, (F(1, 3), F(2, 3)))
    ones = np.zeros((4, 4))
    trials = 3000
    for seed in range(trials):
        ones += sample_g(w, 4, seed=seed).weights == 1
    off = ~np.eye(4, dtype=bool)
    pooled = ones[off].mean() / trials
    for v in ones[off]:
        assert abs(v / trials - pooled) <= 4.5 * binomial_sigma(pooled, trials)


def test_subsample(sbm):
    g = sample_g(sbm, 12, seed=0)
    s = subsample(g, 5, seed=1)
    assert s.n == 5 and s == subsample(g, 5, seed=1)
    assert subsample(g, 12, seed=2).n == 12
    with pytest.raises(InputError):
        subsample(g, 13)


def test_input_checks(two_point, diff_kernel):
    with pytest.raises(InputError):
        sample_h(diff_kernel, 3)
    with pytest.raises(InputError):
        sample_g(constant_graphon(ProbabilityMeasure(two_point, [1, 0])), 0)
    with pytest.raises(InputError):
        MeasureGraph(two_point, np.full((2, 2, 2), 0.6))
    with pytest.raises(InputError):
        SampledGraph(two_point, [[0, 5], [0, 0]])


def test_measure_graph_to_graphon(sbm):
    h, _ = sample_h(sbm, 5, seed=0)
    g = h.to_graphon()
    assert g.k == 5 and g.lengths == (F(1, 5),) * 5
