import math
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import cut_dist_brute, cut_norm_brute, f_norm_direct, fm_lp, kr_lp, prohorov_definition
from probgraphon.cutmetric import (
    MetricChoice,
    compress,
    cut_dist_exact,
    cut_distance,
    cut_norm_exact,
    cut_norm_heuristic,
    cut_norm_upper_bound,
    delta_cut,
    f_inner_product,
    f_l2_norm,
    rectangle_measure,
    weak_regularity_partition,
)
from probgraphon.exceptions import CapabilityLimitError, InputError
from probgraphon.graphon import (
    BlockPartitionMap,
    StepGraphon,
    constant_graphon,
    equipartition,
    marginal_measure,
    relabel,
    stepping,
)
from probgraphon.harness import random_family, random_graphon, random_lengths, random_space
from probgraphon.measures import ProbabilityMeasure, SignedMeasure, TestFamily, dirac, kr_norm

F = Fraction


def random_signed(rng, space, k, den=None):
    lengths = random_lengths(rng, k, den) if den else (F(1, k),) * k
    return StepGraphon(space, lengths, rng.normal(size=(k, k, space.size)) * 0.3, "signed")


def oracle_norm(metric, space):
    if metric.name == "kr":
        return lambda m: kr_lp(m, space.metric)
    if metric.name == "fm":
        return lambda m: fm_lp(m, space.metric)
    return lambda m: f_norm_direct(m, metric.family.functions)


# ---------------------------------------------------------------------------
# cut norm


def test_difference_kernel_examples(diff_kernel, canonical):
    val, wit = cut_norm_exact(diff_kernel, MetricChoice.fnorm(canonical))
    assert val == pytest.approx(0.0375)
    assert (wit.rows, wit.cols) == ((0,), (0,))
    kr, wit = cut_norm_exact(diff_kernel, MetricChoice.kr())
    assert kr == pytest.approx(0.05)
    assert wit.to_json()["rows"] == [0]


def test_zero_kernel_empty_witness(two_point):
    z = StepGraphon(two_point, (F(1, 14),) * 14, np.zeros((14, 14, 2)), "signed")
    val, wit = cut_norm_exact(z, MetricChoice.kr())
    assert val == 0.0 and wit.rows == () and wit.cols == ()
    assert cut_norm_heuristic(z, MetricChoice.kr())[0] == 0.0


def test_exact_matches_brute_force_oracle():
    rng = np.random.default_rng(0)
    for _ in range(30):
        sp = random_space(rng, int(rng.integers(2, 4)))
        k = int(rng.integers(1, 4))
        d = random_signed(rng, sp, k, den=8 if k > 1 else None)
        for metric in (MetricChoice.kr(), MetricChoice.fm(), MetricChoice.fnorm(random_family(rng, sp, 2))):
            val, wit = cut_norm_exact(d, metric)
            ref = cut_norm_brute(d.lengths, d.cells, oracle_norm(metric, sp))
            assert val == pytest.approx(ref, abs=1e-9)
            again = metric.norm(SignedMeasure(sp, rectangle_measure(d, wit.rows, wit.cols)))
            assert abs(again - wit.value) <= 1e-12


def test_witness_signs_reproduce_value(diff_kernel, canonical):
    val, wit = cut_norm_exact(diff_kernel, MetricChoice.fnorm(canonical))
    rect = rectangle_measure(diff_kernel, wit.rows, wit.cols)
    signed = sum(s * w * float(f @ rect) for s, w, f in zip(wit.signs, canonical.weights, canonical.functions))
    assert signed == pytest.approx(val)


def test_exact_guard_and_runtime(two_point):
    rng = np.random.default_rng(1)
    with pytest.raises(CapabilityLimitError):
        cut_norm_exact(random_signed(rng, two_point, 15), MetricChoice.kr())
    d = random_signed(rng, two_point, 12)
    t0 = time.perf_counter()
    cut_norm_exact(d, MetricChoice.fnorm(TestFamily.canonical(two_point)))
    assert time.perf_counter() - t0 < 1.0


def test_heuristic_lower_bound_and_deterministic():
    rng = np.random.default_rng(2)
    for _ in range(20):
        sp = random_space(rng, 2)
        d = random_signed(rng, sp, 6)
        metric = MetricChoice.fnorm(TestFamily.canonical(sp))
        ex = cut_norm_exact(d, metric)[0]
        h1 = cut_norm_heuristic(d, metric, seed=3)
        h2 = cut_norm_heuristic(d, metric, seed=3)
        assert h1 == h2
        assert h1[0] <= ex + 1e-12
        assert cut_norm_upper_bound(d, metric) >= ex - 1e-12


def test_prohorov_not_a_norm(diff_kernel):
    with pytest.raises(InputError):
        cut_norm_exact(diff_kernel, MetricChoice.prohorov())
    with pytest.raises(InputError):
        MetricChoice("l2")
    with pytest.raises(InputError):
        MetricChoice("fnorm")


# ---------------------------------------------------------------------------
# cut distance


def test_cut_dist_identity_and_constant():
    rng = np.random.default_rng(3)
    sp = random_space(rng, 3)
    w = random_graphon(rng, sp, random_lengths(rng, 3, 6))
    for metric in (MetricChoice.kr(), MetricChoice.prohorov()):
        assert cut_distance(w, w, metric)[0] == 0.0
    mu = ProbabilityMeasure(sp, rng.dirichlet([1, 1, 1]))
    nu = ProbabilityMeasure(sp, rng.dirichlet([1, 1, 1]))
    val, wit = cut_distance(constant_graphon(mu), constant_graphon(nu), MetricChoice.kr())
    assert val == pytest.approx(kr_norm(mu - nu), abs=1e-9)
    assert wit.rows == (0,) and wit.cols == (0,)


def test_labeled_distance_sees_relabeling(two_point):
    cells = np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.2, 0.8]]])
    w = StepGraphon(two_point, (F(1, 2), F(1, 2)), cells)
    assert cut_distance(w, relabel(w, [1, 0]), MetricChoice.kr())[0] > 0.01


def test_prohorov_cut_dist_matches_oracle():
    rng = np.random.default_rng(4)
    for _ in range(6):
        sp = random_space(rng, 2)
        u = random_graphon(rng, sp, (F(1, 2), F(1, 2)))
        w = random_graphon(rng, sp, (F(1, 2), F(1, 2)))
        val, _ = cut_dist_exact(u, w, MetricChoice.prohorov())
        ref = cut_dist_brute(u.lengths, u.cells, w.cells, lambda a, b: prohorov_definition(a, b, sp.metric))
        assert val == pytest.approx(ref, abs=1e-8)


def test_cut_dist_relabel_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        sp = random_space(rng, 2)
        u = random_graphon(rng, sp, (F(1, 4),) * 4)
        w = random_graphon(rng, sp, (F(1, 4),) * 4)
        sigma = rng.permutation(4)
        for metric in (MetricChoice.fm(), MetricChoice.prohorov()):
            a = cut_distance(u, w, metric)[0]
            b = cut_distance(relabel(u, sigma), relabel(w, sigma), metric)[0]
            assert abs(a - b) <= 1e-12


def test_compression_is_lossless():
    rng = np.random.default_rng(6)
    sp = random_space(rng, 2)
    w = random_graphon(rng, sp, (F(1, 2), F(1, 2)))
    w4 = equipartition(w, 4)
    assert compress(w4) == w
    metric = MetricChoice.fnorm(TestFamily.canonical(sp))
    d = w4 - equipartition(random_graphon(rng, sp, (F(1, 2), F(1, 2))), 4)
    assert cut_norm_exact(d, metric)[0] == pytest.approx(cut_norm_exact(compress(d), metric)[0], abs=1e-15)


# ---------------------------------------------------------------------------
# unlabeled distance


def test_delta_zero_for_relabeling():
    rng = np.random.default_rng(7)
    for L in (2, 3, 4, 5):
        sp = random_space(rng, 2)
        w = random_graphon(rng, sp, (F(1, L),) * L)
        sigma = rng.permutation(L)
        res = delta_cut(w, relabel(w, sigma), MetricChoice.kr(), "brute")
        assert res.value == 0.0
        assert relabel(relabel(w, sigma), res.permutation) == w


def test_delta_constants_and_lower_bound():
    rng = np.random.default_rng(8)
    sp = random_space(rng, 3)
    mu = ProbabilityMeasure(sp, rng.dirichlet([1, 1, 1]))
    nu = ProbabilityMeasure(sp, rng.dirichlet([1, 1, 1]))
    val = delta_cut(constant_graphon(mu), constant_graphon(nu), MetricChoice.kr(), granularity=3).value
    assert val == pytest.approx(kr_norm(mu - nu), abs=1e-9)
    for _ in range(10):
        u = random_graphon(rng, sp, random_lengths(rng, 2, 4))
        w = random_graphon(rng, sp, random_lengths(rng, 2, 4))
        d = delta_cut(u, w, MetricChoice.kr(), "brute", 4).value
        assert d >= kr_norm(marginal_measure(u) - marginal_measure(w)) - 1e-9


def test_delta_metric_axioms():
    rng = np.random.default_rng(9)
    for _ in range(15):
        sp = random_space(rng, 2)
        a, b, c = (random_graphon(rng, sp, random_lengths(rng, 2, 4)) for _ in range(3))
        metric = MetricChoice.fm()
        ab = delta_cut(a, b, metric, "brute", 4).value
        ba = delta_cut(b, a, metric, "brute", 4).value
        bc = delta_cut(b, c, metric, "brute", 4).value
        ac = delta_cut(a, c, metric, "brute", 4).value
        assert abs(ab - ba) <= 1e-9
        assert ac <= ab + bc + 1e-9


def test_delta_anneal_upper_bounds_brute():
    rng = np.random.default_rng(10)
    sp = random_space(rng, 2)
    u = random_graphon(rng, sp, (F(1, 5),) * 5)
    w = random_graphon(rng, sp, (F(1, 5),) * 5)
    metric = MetricChoice.kr()
    brute = delta_cut(u, w, metric, "brute").value
    ann = delta_cut(u, w, metric, "anneal", seed=1)
    assert ann.value >= brute - 1e-12
    assert ann == delta_cut(u, w, metric, "anneal", seed=1)
    assert tuple(delta_cut(w, relabel(w, [4, 3, 2, 1, 0]), metric, "anneal", seed=0))[0] == 0.0


def test_delta_guards():
    rng = np.random.default_rng(11)
    sp = random_space(rng, 2)
    w = random_graphon(rng, sp, (F(1, 9),) * 9)
    with pytest.raises(CapabilityLimitError):
        delta_cut(w, w, MetricChoice.kr(), "brute")
    with pytest.raises(InputError):
        delta_cut(w, w, MetricChoice.kr(), "exhaustive")


# ---------------------------------------------------------------------------
# F geometry and regularity


def test_inner_product(two_point, canonical):
    w = constant_graphon(dirac(two_point, 0))
    assert f_inner_product(w, w, canonical) == pytest.approx(1.5)
    zero = constant_graphon(SignedMeasure(two_point, [0.0, 0.0]), "signed")
    assert f_inner_product(zero, w, canonical) == 0.0


def test_l2_and_cut_comparison():
    rng = np.random.default_rng(12)
    for _ in range(50):
        sp = random_space(rng, int(rng.integers(2, 4)))
        fam = random_family(rng, sp, 2)
        w = random_graphon(rng, sp, random_lengths(rng, 3, 6))
        assert f_l2_norm(w, fam) <= math.sqrt(2) + 1e-12
        d = random_signed(rng, sp, 4)
        assert cut_norm_exact(d, MetricChoice.fnorm(fam))[0] <= math.sqrt(2) * f_l2_norm(d, fam) + 1e-9


def test_f_norm_sign_truncation():
    """With a finite family the sign-pattern maximum equals the F-norm exactly."""
    rng = np.random.default_rng(13)
    sp = random_space(rng, 3)
    fam = random_family(rng, sp, 3)
    V, eps = MetricChoice.fnorm(fam).dual(sp)
    for _ in range(20):
        mass = rng.normal(size=3)
        assert float(np.max(np.abs(V @ mass))) == pytest.approx(f_norm_direct(mass, fam.functions))


def test_regularity_small_cases():
    rng = np.random.default_rng(14)
    sp = random_space(rng, 2)
    fam = TestFamily.canonical(sp)
    w = random_graphon(rng, sp, random_lengths(rng, 3, 6))
    pmap, stepped, err = weak_regularity_partition(w, 4, fam)
    assert err == 0.0 and stepped == w and pmap.target_count == 3
    pmap, stepped, err = weak_regularity_partition(w, 1, fam)
    assert pmap.target_count == 1
    direct = cut_norm_exact(compress(w - stepping(w, BlockPartitionMap.trivial(w.lengths))), MetricChoice.fnorm(fam))[0]
    assert err == pytest.approx(direct)


def test_regularity_bound_on_moderate_instance():
    rng = np.random.default_rng(15)
    sp = random_space(rng, 2)
    fam = TestFamily.canonical(sp)
    w = random_graphon(rng, sp, (F(1, 12),) * 12)
    pmap, stepped, err = weak_regularity_partition(w, 4, fam)
    assert pmap.target_count <= 4
    on_grid = stepping(w, pmap, keep_grid=True)
    assert np.allclose(stepping(on_grid, pmap).cells, stepped.cells)
    exact = cut_norm_exact(compress(w - on_grid), MetricChoice.fnorm(fam))[0]
    assert err == pytest.approx(exact)
    assert exact <= 4 / math.sqrt(math.log(4))
