"""Experiment runners that check the quantitative lemmas on random instances.

Every runner produces an `ExperimentReport`: one row per trial with the
seed, the trial index, a JSON ``params`` string, the measured and bound
values and a pass flag. Trial ``t`` of a run with seed ``s`` draws all of
its randomness from substreams keyed by ``(s, t)``, so any row can be
re-evaluated on its own (`rerun_row`). Trials run sequentially; the
aggregate only uses counts and sorted quantiles, so it does not depend
on trial order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Optional

import numpy as np

from . import io as jio
from .cutmetric import MetricChoice, cut_distance, delta_cut
from .exceptions import CapabilityLimitError, InputError
from .graphon import (
    BlockPartitionMap,
    StepGraphon,
    refine_common,
    stepping,
)
from .measures import Measure, TestFamily, WeightSpace, fm_norm, kr_norm, prohorov
from .rng import make_rng, trial_seed
from .sampling import TYPE_STREAM, MeasureGraph, draw_types, sample_g_from_h
from .validation import check_family, check_graphon, check_seed

TOL = 1e-9
_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


# ---------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    name: str
    columns: tuple  # ((name, type name), ...)
    rows: list
    measure: str
    extras: dict = field(default_factory=dict, compare=False)
    inputs: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def trials(self) -> int:
        return len(self.rows)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.rows if not r["passed"])

    @property
    def aggregate(self) -> dict:
        n = self.trials
        vals = sorted(float(r[self.measure]) for r in self.rows)
        out = {
            "experiment": self.name,
            "trials": n,
            "violations": self.violations,
            "violation_fraction": self.violations / n if n else 0.0,
        }
        for q in (0.05, 0.5, 0.95):
            out[f"q{int(q * 100):02d}"] = float(np.quantile(vals, q)) if vals else None
        out.update(self.extras)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["experiment:str"] + [f"{c}:{t}" for c, t in self.columns])
        for r in self.rows:
            writer.writerow([self.name] + [_format(r[c], t) for c, t in self.columns])
        return buf.getvalue()

    def write_csv(self, path: str):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, name: Optional[str] = None) -> "ExperimentReport":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        columns = []
        for cell in header[1:]:
            col, _, typ = cell.rpartition(":")
            if typ not in _TYPES:
                raise InputError(f"bad CSV header cell {cell!r}")
            columns.append((col, typ))
        rows, names = [], set()
        for rec in reader:
            if not rec:
                continue
            names.add(rec[0])
            rows.append({c: _parse(v, t) for (c, t), v in zip(columns, rec[1:])})
        if len(names) > 1:
            raise InputError("CSV mixes several experiments")
        name = names.pop() if names else name
        if name not in EXPERIMENTS:
            raise InputError(f"unknown experiment {name!r}")
        return cls(name, tuple(columns), rows, EXPERIMENTS[name].measure)


def _format(value, typ: str) -> str:
    if typ == "float":
        return repr(float(value))
    if typ == "bool":
        return "true" if value else "false"
    return str(value)


def _parse(text: str, typ: str):
    if typ == "bool":
        if text not in ("true", "false"):
            raise InputError(f"bad boolean {text!r}")
        return text == "true"
    return _TYPES[typ](text)


@dataclass(frozen=True)
class _Experiment:
    trial: Callable
    columns: tuple
    measure: str


EXPERIMENTS: dict = {}


def _report(name: str, rows: list, extras=None, inputs=None) -> ExperimentReport:
    exp = EXPERIMENTS[name]
    return ExperimentReport(name, exp.columns, rows, exp.measure, extras or {}, inputs or {})


def rerun_row(report: ExperimentReport, index: int, inputs: Optional[dict] = None) -> dict:
    """Re-evaluate one row from its recorded seed, trial index and parameters."""
    exp = EXPERIMENTS[report.name]
    row = report.rows[index]
    params = json.loads(row["params"])
    return exp.trial(row["seed"], row["trial"], _decode_inputs(inputs or report.inputs), **params)


def _decode_inputs(inputs: dict) -> dict:
    out = {}
    for key, val in inputs.items():
        if key in ("u", "w"):
            out[key] = jio.graphon_from_json(val)
        elif key == "h":
            out[key] = jio.measure_graph_from_json(val)
        else:
            out[key] = val
    return out


def _family_for(space: WeightSpace, fam_json) -> TestFamily:
    return TestFamily.canonical(space) if fam_json is None else TestFamily(space, np.array(fam_json))


# ---------------------------------------------------------------------------
# random instances


def random_space(rng: np.random.Generator, m: int, cemetery: bool = False) -> WeightSpace:
    """``m`` random points of the plane with their Euclidean distances."""
    while True:
        pts = rng.random((m, 2)) * rng.uniform(0.2, 4.0)
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, 0.0)
        if m == 1 or d[~np.eye(m, dtype=bool)].min() > 1e-6:
            break
    return WeightSpace(tuple(range(m)), d, m - 1 if cemetery else None)


def random_measure(rng: np.random.Generator, space: WeightSpace, sparse: float = 0.3) -> Measure:
    mass = rng.random(space.size) * (rng.random(space.size) >= sparse)
    if mass.sum() > 0:
        mass *= rng.uniform(0.05, 1.5) / mass.sum()
    return Measure(space, mass)


def random_lengths(rng: np.random.Generator, k: int, den: int) -> tuple:
    """Uniformly random composition of ``den`` into ``k`` positive parts."""
    cuts = np.sort(rng.choice(np.arange(1, den), size=k - 1, replace=False))
    parts = np.diff(np.concatenate([[0], cuts, [den]]))
    return tuple(Fraction(int(p), den) for p in parts)


def random_graphon(rng: np.random.Generator, space: WeightSpace, lengths) -> StepGraphon:
    k = len(lengths)
    cells = rng.dirichlet(np.ones(space.size), size=(k, k))
    return StepGraphon(space, tuple(lengths), cells, "probability")


def random_family(rng: np.random.Generator, space: WeightSpace, n: int) -> TestFamily:
    while True:
        funcs = np.vstack([np.ones(space.size), rng.random((n, space.size))])
        try:
            return TestFamily(space, funcs)
        except InputError:
            continue


def _sbm(space: WeightSpace, p: np.ndarray, lengths) -> StepGraphon:
    """Two-point-space stochastic block model with mass ``p`` on point 1."""
    p = np.asarray(p, dtype=float)
    cells = np.stack([1.0 - p, p], axis=-1)
    return StepGraphon(space, tuple(lengths), cells, "probability")


def default_pair() -> tuple[StepGraphon, StepGraphon]:
    """The two-block SBM pair used when no inputs are given."""
    space = WeightSpace.discrete((0, 1))
    half = (Fraction(1, 2), Fraction(1, 2))
    u = _sbm(space, [[0.9, 0.1], [0.1, 0.9]], half)
    w = _sbm(space, [[0.6, 0.3], [0.3, 0.6]], half)
    return u, w


# ---------------------------------------------------------------------------
# norm comparison


def _trial_norms(seed: int, trial: int, inputs: dict, m_min: int = 2, m_max: int = 8) -> dict:
    rng = make_rng(seed, trial)
    m = int(rng.integers(m_min, m_max + 1))
    space = random_space(rng, m)
    mu, nu = random_measure(rng, space), random_measure(rng, space)
    dp = prohorov(mu, nu)
    fm = fm_norm(mu - nu)
    kr = kr_norm(mu - nu)
    low = dp * dp / (1 + dp)
    cap = (2 + min(mu.total, nu.total)) * dp
    passed = low <= fm + TOL and fm <= kr + TOL and kr <= 2 * fm + TOL and kr <= cap + TOL
    return {
        "trial": trial,
        "seed": seed,
        "params": json.dumps({"m_min": m_min, "m_max": m_max}, sort_keys=True),
        "m": m,
        "prohorov": dp,
        "fm": fm,
        "kr": kr,
        "lower_bound": low,
        "upper_bound": cap,
        "slack": min(fm - low, kr - fm, 2 * fm - kr, cap - kr),
        "passed": bool(passed),
    }


EXPERIMENTS["norms"] = _Experiment(
    _trial_norms,
    (
        ("trial", "int"), ("seed", "int"), ("params", "str"), ("m", "int"),
        ("prohorov", "float"), ("fm", "float"), ("kr", "float"),
        ("lower_bound", "float"), ("upper_bound", "float"), ("slack", "float"),
        ("passed", "bool"),
    ),
    "slack",
)


def verify_norm_inequalities(trials: int, seed: int = 0) -> ExperimentReport:
    """``d_P^2/(1+d_P) <= FM <= KR <= min(2 FM, (2 + min mass) d_P)`` on random pairs."""
    seed = check_seed(seed)
    return _report("norms", [_trial_norms(seed, t, {}) for t in range(trials)])


# ---------------------------------------------------------------------------
# stepping


def _random_metric(rng: np.random.Generator, space: WeightSpace, allow_prohorov: bool) -> MetricChoice:
    names = ["kr", "fm", "fnorm"] + (["prohorov"] if allow_prohorov else [])
    name = names[int(rng.integers(len(names)))]
    if name == "fnorm":
        return MetricChoice.fnorm(random_family(rng, space, int(rng.integers(1, 4))))
    return MetricChoice(name)


def _trial_stepping(seed: int, trial: int, inputs: dict, max_blocks: int = 4, den: int = 12) -> dict:
    rng = make_rng(seed, trial)
    space = random_space(rng, int(rng.integers(2, 4)))
    ku, kw = (int(x) for x in rng.integers(1, max_blocks + 1, size=2))
    u = random_graphon(rng, space, random_lengths(rng, ku, den))
    w = random_graphon(rng, space, random_lengths(rng, kw, den))
    u, w = refine_common(u, w)
    metric = _random_metric(rng, space, allow_prohorov=u.k <= 4)
    fine_labels = rng.integers(0, max(1, u.k), size=u.k)
    fine = BlockPartitionMap.from_labels(fine_labels.tolist(), u.lengths)
    group = rng.integers(0, max(1, fine.target_count // 2 + 1), size=fine.target_count)
    coarse = fine.coarsen(BlockPartitionMap.from_labels(group.tolist(), fine.class_lengths))

    d_uw = cut_distance(u, w, metric)[0]
    d_step = cut_distance(stepping(u, fine), stepping(w, fine), metric)[0]
    d_w_wp = cut_distance(w, stepping(w, fine), metric)[0]
    d_w_up = cut_distance(w, stepping(u, fine), metric)[0]
    tower = stepping(stepping(w, fine, keep_grid=True), coarse) == stepping(w, coarse)
    lip_ok = d_step <= d_uw + TOL
    opt_ok = d_w_wp <= 2 * d_w_up + TOL
    return {
        "trial": trial,
        "seed": seed,
        "params": json.dumps({"max_blocks": max_blocks, "den": den}, sort_keys=True),
        "metric": metric.name,
        "blocks": u.k,
        "d_uw": d_uw,
        "d_stepped": d_step,
        "d_w_wp": d_w_wp,
        "d_w_up": d_w_up,
        "lipschitz_ok": bool(lip_ok),
        "near_optimal_ok": bool(opt_ok),
        "tower_ok": bool(tower),
        "slack": min(d_uw - d_step, 2 * d_w_up - d_w_wp),
        "passed": bool(lip_ok and opt_ok and tower),
    }


EXPERIMENTS["stepping"] = _Experiment(
    _trial_stepping,
    (
        ("trial", "int"), ("seed", "int"), ("params", "str"), ("metric", "str"),
        ("blocks", "int"), ("d_uw", "float"), ("d_stepped", "float"),
        ("d_w_wp", "float"), ("d_w_up", "float"), ("lipschitz_ok", "bool"),
        ("near_optimal_ok", "bool"), ("tower_ok", "bool"), ("slack", "float"),
        ("passed", "bool"),
    ),
    "slack",
)


def verify_stepping(trials: int, seed: int = 0) -> ExperimentReport:
    """Stepping is 1-Lipschitz, within factor 2 of the best stepfunction, and a tower."""
    seed = check_seed(seed)
    return _report("stepping", [_trial_stepping(seed, t, {}) for t in range(trials)])


# ---------------------------------------------------------------------------
# counting lemma


def _skeletons(v: int):
    pairs = [(a, b) for a in range(v) for b in range(v) if a != b]
    for mask in range(1 << len(pairs)):
        yield tuple(p for i, p in enumerate(pairs) if mask >> i & 1)


def _densities_all_labels(w: StepGraphon, fam: TestFamily, v: int, edges: tuple, n_max: int) -> np.ndarray:
    """``t(F^g, W)`` for every labeling of ``edges`` by family indices ``0..n_max``.

    Result has one axis per edge, indexed by the family index on that edge.
    """
    k = w.k
    mats = np.einsum("ijz,nz->nij", w.cells, fam.functions[: n_max + 1])
    phi = np.indices((k,) * v).reshape(v, -1)
    acc = np.prod(w.weights[phi], axis=0)
    for a, b in edges:
        acc = acc[..., None, :] * mats[:, phi[a], phi[b]]
    return acc.sum(axis=-1)


def _label_factor(n_edges: int, n_max: int) -> np.ndarray:
    out = np.zeros((n_max + 1,) * n_edges)
    for axis in range(n_edges):
        shape = [1] * n_edges
        shape[axis] = n_max + 1
        out = out + (2.0 ** np.arange(n_max + 1)).reshape(shape)
    return out


def _trial_counting(
    seed: int, trial: int, inputs: dict, blocks: int = 3, points: int = 3, granularity: int = 6,
    n_max: int = 3, v_max: int = 3,
) -> dict:
    rng = make_rng(seed, trial)
    space = random_space(rng, points)
    fam = random_family(rng, space, n_max)
    u = random_graphon(rng, space, random_lengths(rng, blocks, granularity))
    w = random_graphon(rng, space, random_lengths(rng, blocks, granularity))
    delta = delta_cut(u, w, MetricChoice.fnorm(fam), "brute", granularity).value
    worst, worst_graph, count = -math.inf, "", 0
    worst_two_cycle_free = -math.inf
    for v in range(1, v_max + 1):
        for edges in _skeletons(v):
            tu = _densities_all_labels(u, fam, v, edges, n_max)
            tw = _densities_all_labels(w, fam, v, edges, n_max)
            gap = np.abs(tu - tw) - _label_factor(len(edges), n_max) * delta
            count += gap.size
            g = float(gap.max()) if gap.ndim else float(gap)
            if not any((b, a) in edges for a, b in edges):
                worst_two_cycle_free = max(worst_two_cycle_free, g)
            if g > worst:
                labels = np.unravel_index(int(np.argmax(gap)), gap.shape) if gap.ndim else ()
                worst = g
                worst_graph = json.dumps({"v": v, "edges": [list(e) for e in edges], "indices": [int(x) for x in labels]})
    return {
        "trial": trial,
        "seed": seed,
        "params": json.dumps(
            {"blocks": blocks, "points": points, "granularity": granularity, "n_max": n_max, "v_max": v_max},
            sort_keys=True,
        ),
        "delta": delta,
        "graphs": count,
        "worst_gap": worst,
        "worst_gap_no_2cycle": worst_two_cycle_free,
        "worst_graph": worst_graph,
        "passed": bool(worst <= TOL),
    }


EXPERIMENTS["counting"] = _Experiment(
    _trial_counting,
    (
        ("trial", "int"), ("seed", "int"), ("params", "str"), ("delta", "float"),
        ("graphs", "int"), ("worst_gap", "float"), ("worst_gap_no_2cycle", "float"),
        ("worst_graph", "str"), ("passed", "bool"),
    ),
    "worst_gap",
)


def verify_counting(trials: int, seed: int = 0, **params) -> ExperimentReport:
    """``|t(F^g,U) - t(F^g,W)| <= (sum_e 2^{n_e}) delta`` over all small F-graphs.

    ``delta`` is the brute-force unlabeled distance at granularity ``L``,
    an upper bound on the infimum, so the check only gets looser.
    """
    seed = check_seed(seed)
    return _report("counting", [_trial_counting(seed, t, {}, **params) for t in range(trials)])


# ---------------------------------------------------------------------------
# first sampling lemma


def _type_graphon(w: StepGraphon, types: np.ndarray, k: int) -> StepGraphon:
    """``W_X`` with twin vertices merged: one block per type present."""
    counts = np.bincount(types, minlength=w.k)
    present = np.flatnonzero(counts)
    lengths = tuple(Fraction(int(counts[i]), k) for i in present)
    return StepGraphon(w.space, lengths, w.cells[np.ix_(present, present)], w.kind)


def sampling_lemma_1_bounds(k: int) -> dict:
    q = k ** -0.25
    return {
        "lower": 2 * q,
        "upper": 9 * q,
        "failure_probability": 4 * k**0.25 * math.exp(-math.sqrt(k) / 10),
    }


def _cut_f(u, w, fam, max_blocks=None, restarts=20, seed=0):
    metric = MetricChoice.fnorm(fam)
    try:
        return cut_distance(u, w, metric, "exact", max_blocks=max_blocks)[0], True
    except CapabilityLimitError:
        return cut_distance(u, w, metric, "heuristic", restarts=restarts, seed=seed)[0], False


def _trial_sampling_1(seed: int, trial: int, inputs: dict, k: int = 1000, family=None) -> dict:
    u, w = refine_common(inputs["u"], inputs["w"])
    fam = _family_for(u.space, family)
    base = _cut_f(u, w, fam)[0]
    types = draw_types(u, k, make_rng(seed, trial, TYPE_STREAM))
    val, exact = _cut_f(_type_graphon(u, types, k), _type_graphon(w, types, k), fam, seed=trial_seed(seed, trial))
    b = sampling_lemma_1_bounds(k)
    lower_ok = val >= base - b["lower"] - TOL
    upper_ok = val <= base + b["upper"] + TOL
    return {
        "trial": trial,
        "seed": seed,
        "params": json.dumps({"k": k, "family": family}, sort_keys=True),
        "k": k,
        "cut_uw": base,
        "cut_sampled": val,
        "deviation": val - base,
        "lower_bound": -b["lower"],
        "upper_bound": b["upper"],
        "exact": bool(exact),
        "upper_check": "rigorous" if exact else "conservative",
        "lower_ok": bool(lower_ok),
        "upper_ok": bool(upper_ok),
        "passed": bool(lower_ok and (upper_ok or not exact)),
    }


EXPERIMENTS["sampling1"] = _Experiment(
    _trial_sampling_1,
    (
        ("trial", "int"), ("seed", "int"), ("params", "str"), ("k", "int"),
        ("cut_uw", "float"), ("cut_sampled", "float"), ("deviation", "float"),
        ("lower_bound", "float"), ("upper_bound", "float"), ("exact", "bool"),
        ("upper_check", "str"), ("lower_ok", "bool"), ("upper_ok", "bool"),
        ("passed", "bool"),
    ),
    "deviation",
)


def verify_sampling_lemma_1(
    u: StepGraphon, w: StepGraphon, k: int, trials: int, seed: int = 0, family: Optional[TestFamily] = None
) -> ExperimentReport:
    """Deviation of ``||U_X - W_X||`` from ``||U - W||`` (F-cut norms) for a common sample ``X``.

    ``U_X`` and ``W_X`` have one block per sampled vertex; vertices of the
    same type are twins, so after merging them the cut norm is computed
    exactly whenever the two kernels have few blocks. Rows evaluated by
    the heuristic only check the lower side rigorously.
    """
    u, w = check_graphon(u, "probability"), check_graphon(w, "probability")
    fam = check_family(family, u.space)
    fam_json = None if family is None else fam.functions.tolist()
    inputs = {"u": u, "w": w}
    rows = [_trial_sampling_1(check_seed(seed), t, inputs, k, fam_json) for t in range(trials)]
    n = len(rows)
    extras = {
        "lower_violation_fraction": sum(not r["lower_ok"] for r in rows) / n if n else 0.0,
        "upper_violation_fraction": sum(not r["upper_ok"] for r in rows) / n if n else 0.0,
        **{f"bound_{key}": val for key, val in sampling_lemma_1_bounds(k).items()},
        "probability_bound_vacuous": sampling_lemma_1_bounds(k)["failure_probability"] >= 1,
    }
    return _report("sampling1", rows, extras, {"u": jio.graphon_to_json(u), "w": jio.graphon_to_json(w)})


# ---------------------------------------------------------------------------
# second sampling lemma


MAX_TABLES = 20000


def _contingency_tables(rows: list, cols: list):
    """All nonnegative integer matrices with the given margins."""
    if len(rows) == 1:
        yield [list(cols)]
        return
    first, rest = rows[0], rows[1:]

    def fill(j, left, caps, acc):
        if j == len(caps) - 1:
            if left <= caps[j]:
                yield acc + [left]
            return
        for x in range(min(left, caps[j]) + 1):
            yield from fill(j + 1, left - x, caps, acc + [x])

    for head in fill(0, first, cols, []):
        remaining = [c - h for c, h in zip(cols, head)]
        for tail in _contingency_tables(rest, remaining):
            yield [head] + tail


def delta_from_types(
    w: StepGraphon, types: np.ndarray, k: int, metric: MetricChoice, max_tables: int = MAX_TABLES
) -> tuple[float, int]:
    """Unlabeled distance between ``H(x, W)`` (no cemetery) and ``W``.

    Both kernels are cut into ``L = lcm(k, denominators)`` equal blocks.
    A block relabeling only matters through the table ``n[a, b]`` of how
    many ``H``-blocks of type ``a`` land on ``W``-blocks of type ``b``, so
    scanning every table with the right margins is the same as scanning
    all ``L!`` permutations. Returns the value and the granularity.
    """
    L = lcm(k, *(x.denominator for x in w.lengths))
    counts = np.bincount(types, minlength=w.k) * (L // k)
    cols = [int(x * L) for x in w.lengths]
    best = math.inf
    for n, table in enumerate(_contingency_tables(counts.tolist(), cols)):
        if n >= max_tables:
            raise CapabilityLimitError(f"more than {max_tables} relabeling tables")
        cells = [(a, b) for a in range(w.k) for b in range(w.k) if table[a][b]]
        lengths = tuple(Fraction(table[a][b], L) for a, b in cells)
        ia = np.array([a for a, _ in cells])
        ib = np.array([b for _, b in cells])
        hq = StepGraphon(w.space, lengths, w.cells[np.ix_(ia, ia)], w.kind)
        wq = StepGraphon(w.space, lengths, w.cells[np.ix_(ib, ib)], w.kind)
        best = min(best, cut_distance(hq, wq, metric, "exact", max_blocks=16)[0])
        if best == 0.0:
            break
    return float(best), L


def _trial_sampling_2(seed: int, trial: int, inputs: dict, k: int = 16, family=None) -> dict:
    w = inputs["w"]
    fam = _family_for(w.space, family)
    types = draw_types(w, k, make_rng(seed, trial, k, TYPE_STREAM))
    val, L = delta_from_types(w, types, k, MetricChoice.fnorm(fam))
    bound = 21 / math.sqrt(math.log(k))
    ceiling = 2 * float(fam.weights.sum())
    return {
        "trial": trial,
        "seed": seed,
        "params": json.dumps({"k": k, "family": family}, sort_keys=True),
        "k": k,
        "granularity": L,
        "delta": val,
        "bound": bound,
        "vacuous_at_scale": bool(bound >= ceiling),
        "passed": bool(val <= bound + TOL),
    }


EXPERIMENTS["sampling2"] = _Experiment(
    _trial_sampling_2,
    (
        ("trial", "int"), ("seed", "int"), ("params", "str"), ("k", "int"),
        ("granularity", "int"), ("delta", "float"), ("bound", "float"),
        ("vacuous_at_scale", "bool"), ("passed", "bool"),
    ),
    "delta",
)


def verify_sampling_lemma_2(
    w: StepGraphon, k_list, trials: int, seed: int = 0, family: Optional[TestFamily] = None
) -> ExperimentReport:
    """``delta(H(k, W), W)`` against ``21/sqrt(ln k)`` with a trend check over ``k``.

    ``H(k, W)`` carries ``W``'s own cells on its diagonal here, so it is
    exactly the sampled stepfunction ``W_X``.
    """
    w = check_graphon(w, "probability")
    if w.k > 4:
        raise CapabilityLimitError("the second sampling lemma runner takes at most 4 blocks")
    fam = check_family(family, w.space)
    fam_json = None if family is None else fam.functions.tolist()
    k_list = sorted(int(k) for k in k_list)
    inputs = {"w": w}
    rows = [_trial_sampling_2(check_seed(seed), t, inputs, k, fam_json) for k in k_list for t in range(trials)]
    medians = {}
    for k in k_list:
        vals = [r["delta"] for r in rows if r["k"] == k]
        medians[k] = float(np.median(vals)) if vals else None
    present = [medians[k] for k in k_list if medians[k] is not None]
    inversions = sum(1 for a, b in zip(present, present[1:]) if b > a)
    extras = {
        "medians": {str(k): v for k, v in medians.items()},
        "median_inversions": inversions,
    }
    return _report("sampling2", rows, extras, {"w": jio.graphon_to_json(w)})


# ---------------------------------------------------------------------------
# G(H) versus H


def _graph_graphon(h: MeasureGraph, weights: np.ndarray) -> StepGraphon:
    """Stepfunction of a sampled graph whose diagonal copies ``H``'s diagonal."""
    n = h.n
    cells = np.zeros_like(h.cells)
    idx = np.clip(weights, 0, None)
    ii, jj = np.indices((n, n))
    cells[ii, jj, idx] = 1.0
    cells[np.arange(n), np.arange(n)] = h.cells[np.arange(n), np.arange(n)]
    return StepGraphon(h.space, (Fraction(1, n),) * n, cells, "probability")


def graph_close_bounds(k: int) -> dict:
    eps = 10 / math.sqrt(k)
    return {"eps": eps, "threshold": 2 * eps, "probability": math.exp(-(eps**2) * k**2), "mean": 21 / math.sqrt(k)}


def _trial_graph_close(seed: int, trial: int, inputs: dict, family=None) -> dict:
    h = inputs["h"]
    fam = _family_for(h.space, family)
    g = sample_g_from_h(h, trial_seed(seed, trial))
    val, exact = _cut_f(_graph_graphon(h, g.weights), h.to_graphon(), fam, max_blocks=max(16, h.n))
    b = graph_close_bounds(h.n)
    return {
        "trial": trial,
        "seed": seed,
        "params": json.dumps({"family": family}, sort_keys=True),
        "k": h.n,
        "distance": val,
        "threshold": b["threshold"],
        "exceeds": bool(val > b["threshold"]),
        "exact": bool(exact),
        "passed": bool(val <= b["threshold"]),
    }


EXPERIMENTS["graph_close"] = _Experiment(
    _trial_graph_close,
    (
        ("trial", "int"), ("seed", "int"), ("params", "str"), ("k", "int"),
        ("distance", "float"), ("threshold", "float"), ("exceeds", "bool"),
        ("exact", "bool"), ("passed", "bool"),
    ),
    "distance",
)


def verify_graph_close(
    h: MeasureGraph, trials: int, seed: int = 0, family: Optional[TestFamily] = None
) -> ExperimentReport:
    """Exceedance of ``d(G(H), H) > 2 eps`` at ``eps = 10/sqrt(k)`` and the mean distance."""
    if not isinstance(h, MeasureGraph):
        raise InputError("expected a MeasureGraph")
    fam = check_family(family, h.space)
    fam_json = None if family is None else fam.functions.tolist()
    rows = [_trial_graph_close(check_seed(seed), t, {"h": h}, fam_json) for t in range(trials)]
    n = len(rows)
    b = graph_close_bounds(h.n)
    frac = sum(r["exceeds"] for r in rows) / n if n else 0.0
    band = b["probability"] + 3 * math.sqrt(max(b["probability"] * (1 - b["probability"]), 0.0) / max(n, 1))
    mean = float(np.mean([r["distance"] for r in rows])) if rows else 0.0
    extras = {
        "exceedance_fraction": frac,
        "exceedance_bound": b["probability"],
        "exceedance_band": band,
        "mean_distance": mean,
        "mean_bound": b["mean"],
        "exceedance_ok": frac <= band,
        "mean_ok": mean <= b["mean"],
    }
    return _report("graph_close", rows, extras, {"h": jio.measure_graph_to_json(h)})


def random_measure_graph(rng: np.random.Generator, space: WeightSpace, k: int) -> MeasureGraph:
    cells = rng.dirichlet(np.ones(space.size), size=(k, k))
    return MeasureGraph(space, cells)


def dirac_measure_graph(space: WeightSpace, weights: np.ndarray) -> MeasureGraph:
    n = len(weights)
    cells = np.zeros((n, n, space.size))
    ii, jj = np.indices((n, n))
    cells[ii, jj, np.asarray(weights)] = 1.0
    return MeasureGraph(space, cells)


def regularity_bound(k: int) -> float:
    """``4 / sqrt(ln k)``, the weak regularity bound for ``k`` classes."""
    return 4 / math.sqrt(math.log(k))


__all__ = [
    "EXPERIMENTS",
    "ExperimentReport",
    "default_pair",
    "delta_from_types",
    "dirac_measure_graph",
    "random_family",
    "random_graphon",
    "random_lengths",
    "random_measure",
    "random_measure_graph",
    "random_space",
    "regularity_bound",
    "rerun_row",
    "verify_counting",
    "verify_graph_close",
    "verify_norm_inequalities",
    "verify_sampling_lemma_1",
    "verify_sampling_lemma_2",
    "verify_stepping",
]
