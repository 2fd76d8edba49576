"""Cut norms, cut distances and the unlabeled cut distance for stepfunctions.

For a stepfunction the supremum over rectangles ``S x T`` is attained on
unions of whole blocks, so everything reduces to subsets of block
indices. Norm-based metrics (KR, FM, F-norm) are suprema of linear
functionals ``mu -> mu(f)`` over finitely many extreme test functions
``f``; for fixed ``f`` and column set ``T`` the best row set is read off
directly, which leaves a ``2^k`` scan over ``T``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import CapabilityLimitError, InputError
from .graphon import (
    BlockPartitionMap,
    StepGraphon,
    common_denominator,
    equipartition,
    refine_common,
    relabel,
    stepping,
)
from .measures import (
    TestFamily,
    WeightSpace,
    dual_vertices,
    f_norm,
    family_vertices,
    fm_norm,
    kr_norm,
    prohorov,
    prohorov_batch,
    SignedMeasure,
)
from .rng import make_rng

logger = logging.getLogger(__name__)

MAX_EXACT_BLOCKS = 14
MAX_EXACT_PROHOROV_BLOCKS = 7
MAX_BRUTE_GRANULARITY = 8
_CHUNK = 1 << 22


@dataclass(frozen=True)
class MetricChoice:
    """Which distance on measures the cut distance is built from."""

    name: str
    family: Optional[TestFamily] = None

    def __post_init__(self):
        if self.name not in ("prohorov", "kr", "fm", "fnorm"):
            raise InputError(f"unknown metric {self.name!r}")
        if self.name == "fnorm" and self.family is None:
            raise InputError("the F-norm needs a test family")

    @classmethod
    def prohorov(cls):
        return cls("prohorov")

    @classmethod
    def kr(cls):
        return cls("kr")

    @classmethod
    def fm(cls):
        return cls("fm")

    @classmethod
    def fnorm(cls, family: TestFamily):
        return cls("fnorm", family)

    @property
    def is_norm(self) -> bool:
        return self.name != "prohorov"

    def norm(self, mu: SignedMeasure) -> float:
        if self.name == "kr":
            return kr_norm(mu)
        if self.name == "fm":
            return fm_norm(mu)
        if self.name == "fnorm":
            return f_norm(mu, self.family)
        raise InputError("the Prohorov distance is not a norm")

    def distance(self, mu: SignedMeasure, nu: SignedMeasure) -> float:
        if self.is_norm:
            return self.norm(mu - nu)
        return prohorov(mu, nu)

    def dual(self, space: WeightSpace) -> tuple[np.ndarray, Optional[np.ndarray]]:
        """Extreme test functions, one per ``+-`` pair, and their sign patterns.

        The norm of ``mu`` is ``max |mu(f)|`` over the returned rows.
        """
        if self.name == "fnorm":
            if self.family.space != space:
                raise InputError("test family lives on a different weight space")
            funcs, eps = family_vertices(self.family)
            keep = eps[:, 0] > 0
            return funcs[keep], eps[keep]
        verts = dual_vertices(space, self.name)
        nz = verts[np.any(verts != 0, axis=1)]
        first = nz[np.arange(len(nz)), np.argmax(nz != 0, axis=1)]
        return nz[first > 0], None


@dataclass(frozen=True)
class CutWitness:
    rows: tuple
    cols: tuple
    value: float
    signs: Optional[tuple] = None

    def to_json(self) -> dict:
        return {
            "rows": list(self.rows),
            "cols": list(self.cols),
            "signs": None if self.signs is None else [int(s) for s in self.signs],
            "value": self.value,
        }


def rectangle_measure(w: StepGraphon, rows, cols) -> np.ndarray:
    """Mass vector of ``W(S x T; .)`` for unions of blocks."""
    lam = w.weights
    r = np.zeros(w.k)
    c = np.zeros(w.k)
    r[list(rows)] = lam[list(rows)]
    c[list(cols)] = lam[list(cols)]
    return np.einsum("i,j,ijz->z", r, c, w.cells)


def _weighted(w: StepGraphon) -> np.ndarray:
    lam = w.weights
    return w.cells * (lam[:, None, None] * lam[None, :, None])


def _mask_rows(start: int, stop: int, k: int) -> np.ndarray:
    masks = np.arange(start, stop, dtype=np.int64)
    return ((masks[:, None] >> np.arange(k)) & 1).astype(float)


def _indices(bits) -> tuple:
    return tuple(int(i) for i in np.flatnonzero(bits))


def _one_sided_scan(A: np.ndarray, rel_tol: float = 1e-12):
    """Exact ``max_{v,S,T,side} side * sum_{i in S, j in T} A[v,i,j]``.

    For fixed ``(v, side, T)`` the best ``S`` is the set of rows with a
    strictly positive contribution. Returns ``(value, rows, cols, v,
    side)``; among near-ties the lexicographically smallest
    ``(rows, cols)`` wins.
    """
    nv, k, _ = A.shape
    scale = max(1.0, float(np.abs(A).sum()))
    best = -np.inf
    cands: list = []
    chunk = max(1, _CHUNK // max(1, nv * k))
    for start in range(0, 1 << k, chunk):
        stop = min(1 << k, start + chunk)
        T = _mask_rows(start, stop, k)
        R = np.einsum("vij,cj->cvi", A, T)
        R = np.stack([R, -R], axis=2)  # (c, v, side, i)
        vals = np.where(R > 0, R, 0.0).sum(-1)
        top = float(vals.max())
        if top > best + rel_tol * scale:
            best, cands = top, []
        elif top < best - rel_tol * scale:
            continue
        best = max(best, top)
        if best <= rel_tol * scale:
            continue  # the empty rectangle is the smallest maximizer
        c, v, sd = np.nonzero(vals >= best - rel_tol * scale)
        bits = np.hstack([R[c, v, sd] > 0, T[c] > 0])
        _, first = np.unique(bits, axis=0, return_index=True)
        for idx in first:
            rows = _indices(bits[idx, :k])
            cols = _indices(bits[idx, k:])
            cands.append(((rows, cols), int(v[idx]), 1 - 2 * int(sd[idx])))
    if not cands:
        return best, (), (), 0, 1
    (rows, cols), v, side = min(cands, key=lambda x: x[0])
    return best, rows, cols, v, side


def _check_norm(metric: MetricChoice):
    if not metric.is_norm:
        raise InputError(f"{metric.name} is not a norm; use cut_dist_exact")


def _witness_for_norm(d: StepGraphon, metric: MetricChoice, rows, cols, signs) -> CutWitness:
    mu = SignedMeasure(d.space, rectangle_measure(d, rows, cols))
    return CutWitness(tuple(rows), tuple(cols), metric.norm(mu), signs)


def cut_norm_exact(
    d: StepGraphon, metric: MetricChoice, max_blocks: int = MAX_EXACT_BLOCKS
) -> tuple[float, CutWitness]:
    """Exact cut norm of a signed stepfunction kernel, with a maximizing rectangle."""
    _check_norm(metric)
    if d.k > max_blocks:
        raise CapabilityLimitError(
            f"exact cut norm limited to {max_blocks} blocks (got {d.k}); "
            "use cut_norm_heuristic"
        )
    V, eps = metric.dual(d.space)
    A = np.einsum("ijz,vz->vij", _weighted(d), V)
    _, rows, cols, v, side = _one_sided_scan(A)
    signs = None if eps is None else tuple(int(side * e) for e in eps[v])
    wit = _witness_for_norm(d, metric, rows, cols, signs)
    return wit.value, wit


def cut_norm_upper_bound(d: StepGraphon, metric: MetricChoice) -> float:
    """Cheap rigorous upper bound: positive (or negative) parts summed per test function."""
    _check_norm(metric)
    V, _ = metric.dual(d.space)
    A = np.einsum("ijz,vz->vij", _weighted(d), V)
    pos = np.where(A > 0, A, 0.0).sum(axis=(1, 2))
    neg = np.where(A < 0, -A, 0.0).sum(axis=(1, 2))
    return float(max(pos.max(), neg.max()))


def _local_search(
    objective: Callable[[np.ndarray, np.ndarray], np.ndarray],
    k: int,
    restarts: int,
    rng: np.random.Generator,
):
    """Greedy single-index flips of ``(S, T)`` from random starts."""
    best_val, best_st = -np.inf, None
    flips = np.eye(k, dtype=bool)
    for _ in range(restarts):
        s = rng.random(k) < 0.5
        t = rng.random(k) < 0.5
        cur = float(objective(s[None], t[None])[0])
        for _ in range(100 * k + 100):
            cand_s = np.vstack([s ^ flips, np.broadcast_to(s, (k, k))])
            cand_t = np.vstack([np.broadcast_to(t, (k, k)), t ^ flips])
            vals = objective(cand_s, cand_t)
            j = int(np.argmax(vals))
            if vals[j] <= cur + 1e-15:
                break
            s, t, cur = cand_s[j].copy(), cand_t[j].copy(), float(vals[j])
        if cur > best_val:
            best_val, best_st = cur, (s.copy(), t.copy())
    return best_val, best_st


def _bilinear_search(A: np.ndarray, restarts: int, rng: np.random.Generator):
    """`_local_search` for ``max_v |s' A_v t|`` with O(vk) flip scoring.

    Keeps ``A t`` and ``s' A`` cached, so every candidate flip costs one
    addition instead of a fresh bilinear form.
    """
    k = A.shape[1]
    best_val, best_st = -np.inf, None
    for _ in range(restarts):
        s = rng.random(k) < 0.5
        t = rng.random(k) < 0.5
        At = A @ t.astype(float)
        sA = np.einsum("i,vij->vj", s.astype(float), A)
        cur = sA @ t.astype(float)
        cur_val = float(np.abs(cur).max())
        for _ in range(100 * k + 100):
            sign_s = np.where(s, -1.0, 1.0)
            sign_t = np.where(t, -1.0, 1.0)
            cand_s = cur[:, None] + sign_s * At
            cand_t = cur[:, None] + sign_t * sA
            vals = np.concatenate([np.abs(cand_s).max(axis=0), np.abs(cand_t).max(axis=0)])
            j = int(np.argmax(vals))
            if vals[j] <= cur_val + 1e-15:
                break
            if j < k:
                sA += sign_s[j] * A[:, j, :]
                s[j] = not s[j]
                cur = cand_s[:, j]
            else:
                j -= k
                At += sign_t[j] * A[:, :, j]
                t[j] = not t[j]
                cur = cand_t[:, j]
            cur_val = float(np.abs(cur).max())
        if cur_val > best_val:
            best_val, best_st = cur_val, (s.copy(), t.copy())
    return best_val, best_st


def cut_norm_heuristic(
    d: StepGraphon, metric: MetricChoice, restarts: int = 20, seed: int = 0
) -> tuple[float, CutWitness]:
    """Lower bound on the cut norm from local search; deterministic given ``seed``."""
    _check_norm(metric)
    V, eps = metric.dual(d.space)
    A = np.einsum("ijz,vz->vij", _weighted(d), V)

    _, (s, t) = _bilinear_search(A, max(1, restarts), make_rng(seed))
    vals = np.einsum("i,vij,j->v", s.astype(float), A, t.astype(float))
    v = int(np.argmax(np.abs(vals)))
    signs = None
    if eps is not None:
        side = 1 if vals[v] >= 0 else -1
        signs = tuple(int(side * e) for e in eps[v])
    wit = _witness_for_norm(d, metric, _indices(s), _indices(t), signs)
    return wit.value, wit


# ---------------------------------------------------------------------------
# cut distances


def _rectangle_measures(w: StepGraphon, S: np.ndarray, T: np.ndarray) -> np.ndarray:
    lam = w.weights
    return np.einsum("ci,cj,ijz->cz", S * lam, T * lam, w.cells)


def _check_prohorov_inputs(u: StepGraphon, w: StepGraphon):
    if u.kind == "signed" or w.kind == "signed":
        raise InputError("the Prohorov cut distance needs nonnegative kernels")


def cut_dist_exact(
    u: StepGraphon,
    w: StepGraphon,
    metric: MetricChoice,
    max_blocks: Optional[int] = None,
) -> tuple[float, CutWitness]:
    """Labeled cut distance ``sup_{S,T} d(U(S x T), W(S x T))`` on whole steps."""
    if u.space != w.space:
        raise InputError("kernels live on different weight spaces")
    if metric.is_norm:
        return cut_norm_exact(u - w, metric, max_blocks or MAX_EXACT_BLOCKS)
    _check_prohorov_inputs(u, w)
    u, w = refine_common(u, w)
    u, w = compress_pair(u, w)
    limit = max_blocks or MAX_EXACT_PROHOROV_BLOCKS
    if u.k > limit:
        raise CapabilityLimitError(
            f"exact Prohorov cut distance limited to {limit} blocks (got {u.k})"
        )
    M = _mask_rows(0, 1 << u.k, u.k)
    S = np.repeat(M, len(M), axis=0)
    T = np.tile(M, (len(M), 1))
    vals = prohorov_batch(
        _rectangle_measures(u, S, T), _rectangle_measures(w, S, T), u.space.metric
    )
    j = int(np.argmax(vals))
    return float(vals[j]), CutWitness(_indices(S[j]), _indices(T[j]), float(vals[j]))


def cut_dist_heuristic(
    u: StepGraphon, w: StepGraphon, metric: MetricChoice, restarts: int = 20, seed: int = 0
) -> tuple[float, CutWitness]:
    """Lower bound on the labeled cut distance by local search."""
    if metric.is_norm:
        return cut_norm_heuristic(u - w, metric, restarts, seed)
    _check_prohorov_inputs(u, w)
    u, w = refine_common(u, w)

    def objective(S, T):
        S, T = S.astype(float), T.astype(float)
        return prohorov_batch(
            _rectangle_measures(u, S, T), _rectangle_measures(w, S, T), u.space.metric
        )

    val, (s, t) = _local_search(objective, u.k, max(1, restarts), make_rng(seed))
    return float(val), CutWitness(_indices(s), _indices(t), float(val))


def compress(d: StepGraphon) -> StepGraphon:
    """Merge twin blocks (identical rows and columns); the kernel is unchanged as a function."""
    return _compress_stack([d])[0]


def compress_pair(u: StepGraphon, w: StepGraphon) -> tuple[StepGraphon, StepGraphon]:
    """Merge blocks that are twins in both kernels simultaneously."""
    u, w = refine_common(u, w)
    return tuple(_compress_stack([u, w]))


def _compress_stack(gs: Sequence[StepGraphon]) -> list:
    joint = np.concatenate([g.cells for g in gs], axis=-1)
    k = joint.shape[0]
    keys: dict = {}
    labels = []
    for i in range(k):
        key = (joint[i].tobytes(), joint[:, i].tobytes())
        labels.append(keys.setdefault(key, len(keys)))
    if len(keys) == k:
        return list(gs)
    pmap = BlockPartitionMap.from_labels(labels, gs[0].lengths)
    reps = [c[0] for c in pmap.classes]
    idx = np.ix_(reps, reps)
    return [StepGraphon(g.space, pmap.class_lengths, g.cells[idx], g.kind) for g in gs]


def cut_distance(
    u: StepGraphon,
    w: StepGraphon,
    metric: MetricChoice,
    mode: str = "exact",
    restarts: int = 20,
    seed: int = 0,
    max_blocks: Optional[int] = None,
) -> tuple[float, CutWitness]:
    """Labeled cut distance after lossless twin compression.

    ``mode="exact"`` raises `CapabilityLimitError` when the compressed
    kernel is still too large; ``mode="heuristic"`` returns a lower bound.
    """
    u, w = compress_pair(u, w)
    if mode == "exact":
        return cut_dist_exact(u, w, metric, max_blocks)
    if mode == "heuristic":
        return cut_dist_heuristic(u, w, metric, restarts, seed)
    raise InputError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# unlabeled cut distance


def _perm_batch_norm_scan(U: np.ndarray, W: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """Exact cut norms of ``U - W^sigma`` for a batch of permutations.

    ``U`` and ``W`` are already projected on the dual test functions,
    shape ``(nv, L, L)`` and weighted by block lengths.
    """
    P = len(perms)
    L = U.shape[-1]
    D = U[None] - W[:, perms[:, :, None], perms[:, None, :]].transpose(1, 0, 2, 3)
    best = np.full(P, -np.inf)
    T = _mask_rows(0, 1 << L, L)
    R = np.einsum("pvij,cj->pcvi", D, T)
    pos = np.where(R > 0, R, 0.0).sum(-1)
    neg = np.where(R < 0, -R, 0.0).sum(-1)
    best = np.maximum(pos.max(axis=(1, 2)), neg.max(axis=(1, 2)))
    return best


@dataclass(frozen=True)
class DeltaResult:
    value: float
    permutation: tuple
    granularity: int
    exact_inner: bool

    def __iter__(self):
        return iter((self.value, self.permutation))


def _labeled(u, w, metric, max_blocks, restarts, seed):
    try:
        return cut_distance(u, w, metric, "exact", max_blocks=max_blocks)[0], True
    except CapabilityLimitError:
        return cut_distance(u, w, metric, "heuristic", restarts=restarts, seed=seed)[0], False


def delta_cut(
    u: StepGraphon,
    w: StepGraphon,
    metric: MetricChoice,
    mode: str = "brute",
    granularity: Optional[int] = None,
    seed: int = 0,
    iterations: Optional[int] = None,
    max_blocks: Optional[int] = None,
    restarts: int = 20,
) -> DeltaResult:
    """Unlabeled cut distance over block relabelings at granularity ``L``.

    Both kernels are split into ``L`` equal blocks and ``W`` is relabeled
    by permutations of those blocks. ``brute`` scans all ``L!``
    permutations; ``anneal`` runs simulated annealing with pairwise
    swaps. The value is an upper bound on the infimum over all
    measure-preserving maps whenever each inner distance is exact
    (``exact_inner``). Unpacks as ``(value, permutation)``.
    """
    if u.space != w.space:
        raise InputError("kernels live on different weight spaces")
    L = int(granularity or common_denominator(u, w))
    U, W = equipartition(u, L), equipartition(w, L)
    if mode == "brute":
        if L > MAX_BRUTE_GRANULARITY:
            raise CapabilityLimitError(
                f"brute force over {L}! permutations refused (limit L <= "
                f"{MAX_BRUTE_GRANULARITY}); use mode='anneal'"
            )
        return _delta_brute(U, W, metric, L, max_blocks)
    if mode == "anneal":
        return _delta_anneal(U, W, metric, L, seed, iterations, max_blocks, restarts)
    raise InputError(f"unknown mode {mode!r}")


def _delta_brute(U, W, metric, L, max_blocks) -> DeltaResult:
    perms = np.array(list(itertools.permutations(range(L))), dtype=int)
    if metric.is_norm:
        V, _ = metric.dual(U.space)
        Uv = np.einsum("ijz,vz->vij", _weighted(U), V)
        Wv = np.einsum("ijz,vz->vij", _weighted(W), V)
        per = max(1, _CHUNK // (len(V) * L * L * (1 << L)))
        vals = np.concatenate(
            [_perm_batch_norm_scan(Uv, Wv, perms[i:i + per]) for i in range(0, len(perms), per)]
        )
        j = int(np.argmin(vals))
        sigma = tuple(int(x) for x in perms[j])
        # re-evaluate the optimum through the public path for an exact witness value
        value = cut_dist_exact(U, relabel(W, sigma), metric, max_blocks)[0] if vals[j] > 0 else 0.0
        return DeltaResult(value, sigma, L, True)
    best, sigma = np.inf, None
    for p in perms:
        val = cut_distance(U, relabel(W, p), metric, "exact", max_blocks=max_blocks)[0]
        if val < best:
            best, sigma = val, tuple(int(x) for x in p)
            if best == 0.0:
                break
    return DeltaResult(float(best), sigma, L, True)


def _delta_anneal(U, W, metric, L, seed, iterations, max_blocks, restarts) -> DeltaResult:
    rng = make_rng(seed)
    n_iter = 200 * L if iterations is None else int(iterations)
    sigma = np.arange(L)
    cache: dict = {}
    all_exact = True

    def energy(p):
        nonlocal all_exact
        key = p.tobytes()
        if key not in cache:
            val, exact = _labeled(U, relabel(W, p), metric, max_blocks, restarts, seed)
            all_exact &= exact
            cache[key] = val
        return cache[key]

    cur = energy(sigma)
    best, best_sigma = cur, sigma.copy()
    temp = cur
    for _ in range(n_iter):
        if best == 0.0 or L < 2:
            break
        i, j = rng.choice(L, size=2, replace=False)
        cand = sigma.copy()
        cand[i], cand[j] = cand[j], cand[i]
        val = energy(cand)
        if val <= cur or (temp > 0 and rng.random() < math.exp(-(val - cur) / temp)):
            sigma, cur = cand, val
            if cur < best:
                best, best_sigma = cur, sigma.copy()
        temp *= 0.97
    if not all_exact:
        logger.warning("delta_cut(anneal): some inner distances were heuristic lower bounds")
    return DeltaResult(float(best), tuple(int(x) for x in best_sigma), L, all_exact)


# ---------------------------------------------------------------------------
# Euclidean structure and weak regularity


def f_inner_product(u: StepGraphon, w: StepGraphon, fam: TestFamily) -> float:
    """Weighted sum over the family of ``L^2`` products of ``U[f_n]`` and ``W[f_n]``."""
    if u.space != fam.space or w.space != fam.space:
        raise InputError("kernels and family must share a weight space")
    u, w = refine_common(u, w)
    lam = u.weights
    area = lam[:, None] * lam[None, :]
    Uf = u.cells @ fam.functions.T
    Wf = w.cells @ fam.functions.T
    return float(np.einsum("ij,ijn,ijn,n->", area, Uf, Wf, fam.weights))


def f_l2_norm(w: StepGraphon, fam: TestFamily) -> float:
    return math.sqrt(max(f_inner_product(w, w, fam), 0.0))


def _cut_norm_any(d, metric, max_exact_blocks, restarts, seed):
    c = compress(d)
    if c.k <= max_exact_blocks:
        return cut_norm_exact(c, metric, max_exact_blocks), True
    return cut_norm_heuristic(c, metric, restarts, seed), False


def lift_witness(d: StepGraphon, c: StepGraphon, wit: CutWitness):
    """Map a witness on the compressed kernel back to blocks of ``d``."""
    if c.k == d.k:
        return set(wit.rows), set(wit.cols)
    joint = d.cells
    keys: dict = {}
    labels = []
    for i in range(d.k):
        labels.append(keys.setdefault((joint[i].tobytes(), joint[:, i].tobytes()), len(keys)))
    rows = {i for i, lab in enumerate(labels) if lab in wit.rows}
    cols = {i for i, lab in enumerate(labels) if lab in wit.cols}
    return rows, cols


@dataclass
class RegularityTrace:
    classes: int
    error: float
    exact: bool


def weak_regularity_partition(
    w: StepGraphon,
    target_k: int,
    fam: TestFamily,
    max_exact_blocks: int = MAX_EXACT_BLOCKS,
    restarts: int = 20,
    seed: int = 0,
    tol: float = 1e-12,
    trace: Optional[list] = None,
) -> tuple[BlockPartitionMap, StepGraphon, float]:
    """Energy-increment partitioning of ``w``'s blocks into at most ``target_k`` classes.

    Each round finds a rectangle ``S x T`` witnessing the F-cut norm of
    ``w - w_P`` and splits every class of ``P`` by ``S`` and ``T``. The
    partition with the smallest witnessed error among all rounds is
    returned together with the stepped kernel and that error. Errors
    are exact when the compressed difference has at most
    ``max_exact_blocks`` blocks and heuristic lower bounds otherwise.
    """
    if target_k < 1:
        raise InputError("target_k must be at least 1")
    metric = MetricChoice.fnorm(fam)
    if w.k <= target_k:
        pmap = BlockPartitionMap.identity(w.lengths)
        if trace is not None:
            trace.append(RegularityTrace(w.k, 0.0, True))
        return pmap, w, 0.0
    pmap = BlockPartitionMap.trivial(w.lengths)
    best = None
    for _ in range(4 * target_k + 4):
        diff = w - stepping(w, pmap, keep_grid=True)
        c = compress(diff)
        (val, wit), exact = _cut_norm_any(c, metric, max_exact_blocks, restarts, seed)
        if trace is not None:
            trace.append(RegularityTrace(pmap.target_count, val, exact))
        if best is None or val < best[1]:
            best = (pmap, val)
        if val <= tol:
            break
        rows, cols = lift_witness(diff, c, wit)
        labels = [(lab, i in rows, i in cols) for i, lab in enumerate(pmap.labels)]
        refined = BlockPartitionMap.from_labels(labels, w.lengths)
        if refined.target_count > target_k or refined.target_count == pmap.target_count:
            break
        pmap = refined
    pmap, val = best
    return pmap, stepping(w, pmap), float(val)
