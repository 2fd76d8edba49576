"""Independent reference implementations used only by the tests.

Each oracle follows a definition directly and shares no code path with
the package beyond the basic containers.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def prohorov_definition(mu, nu, metric, tol=1e-12):
    """Infimum of valid eps by grid scan plus bisection over the definition.

    ``eps`` is valid when ``mu(A) <= nu(A^eps) + eps`` and vice versa for
    every subset ``A``, with the open enlargement ``A^eps = {x : d(x, A) < eps}``.
    """
    mu, nu, metric = np.asarray(mu, float), np.asarray(nu, float), np.asarray(metric, float)
    m = len(mu)
    subsets = [s for r in range(1, m + 1) for s in itertools.combinations(range(m), r)]

    def valid(eps):
        for A in subsets:
            dist = metric[list(A)].min(axis=0)
            blow = dist < eps
            if mu[list(A)].sum() > nu[blow].sum() + eps + tol:
                return False
            if nu[list(A)].sum() > mu[blow].sum() + eps + tol:
                return False
        return True

    hi = max(mu.sum(), nu.sum()) + 1.0
    grid = np.linspace(0.0, hi, 401)
    ok = [g for g in grid if g > 0 and valid(g)]
    hi = ok[0]
    lo = max(0.0, hi - grid[1])
    for _ in range(60):
        mid = (lo + hi) / 2
        if valid(mid):
            hi = mid
        else:
            lo = mid
    return hi


def kr_lp(mass, metric):
    """KR norm by scipy: max mu(f) with |f| <= 1 and f_i - f_j <= d_ij."""
    m = len(mass)
    A, b = [], []
    for i, j in itertools.permutations(range(m), 2):
        row = np.zeros(m)
        row[i], row[j] = 1, -1
        A.append(row)
        b.append(metric[i][j])
    res = linprog(-np.asarray(mass), A_ub=np.array(A) if A else None, b_ub=b or None,
                  bounds=[(-1, 1)] * m, method="highs")
    return -res.fun


def fm_lp(mass, metric):
    """FM norm by scipy: variables (f, L) with |f_i| + L <= 1, f_i - f_j <= L d_ij."""
    m = len(mass)
    A, b = [], []
    for i in range(m):
        for s in (1, -1):
            row = np.zeros(m + 1)
            row[i], row[m] = s, 1
            A.append(row)
            b.append(1.0)
    for i, j in itertools.permutations(range(m), 2):
        row = np.zeros(m + 1)
        row[i], row[j], row[m] = 1, -1, -metric[i][j]
        A.append(row)
        b.append(0.0)
    c = -np.concatenate([np.asarray(mass, float), [0.0]])
    res = linprog(c, A_ub=np.array(A), b_ub=b, bounds=[(None, None)] * m + [(0, None)], method="highs")
    return -res.fun


def f_norm_direct(mass, functions):
    return sum(2.0**-n * abs(float(np.dot(f, mass))) for n, f in enumerate(functions))


def rectangle(lengths, cells, S, T):
    """Measure of ``W`` on ``S x T`` summed cell by cell."""
    out = np.zeros(cells.shape[-1])
    for i in S:
        for j in T:
            out += float(lengths[i]) * float(lengths[j]) * cells[i, j]
    return out


def all_subsets(k):
    return [s for r in range(k + 1) for s in itertools.combinations(range(k), r)]


def cut_norm_brute(lengths, cells, norm):
    """Max of ``norm`` over every rectangle of whole blocks."""
    k = len(lengths)
    return max(norm(rectangle(lengths, cells, S, T)) for S in all_subsets(k) for T in all_subsets(k))


def cut_dist_brute(lengths, cu, cw, dist):
    k = len(lengths)
    return max(
        dist(rectangle(lengths, cu, S, T), rectangle(lengths, cw, S, T))
        for S in all_subsets(k)
        for T in all_subsets(k)
    )


def hom_density_loops(lengths, cells, v, edges, decorations):
    """Plain nested-loop evaluation of the homomorphism density."""
    k = len(lengths)
    total = 0.0
    for phi in itertools.product(range(k), repeat=v):
        term = 1.0
        for i in phi:
            term *= float(lengths[i])
        for e, (a, b) in enumerate(edges):
            term *= float(np.dot(cells[phi[a], phi[b]], decorations[e]))
        total += term
    return total


def chi2_pvalue(observed, expected):
    from scipy.stats import chisquare

    observed = np.asarray(observed, float)
    expected = np.asarray(expected, float)
    keep = expected > 0
    assert observed[~keep].sum() == 0
    return chisquare(observed[keep], expected[keep] * observed.sum() / expected[keep].sum()).pvalue


def binomial_sigma(p, n):
    return math.sqrt(p * (1 - p) / n)
