"""Dense tableau simplex for small linear programs.

Solves ``max c @ x  s.t.  A @ x <= b, x >= 0`` with ``b >= 0``, so the
slack basis is feasible and no phase one is needed. Pivoting follows
Bland's rule, which cannot cycle.
"""

import numpy as np

from .exceptions import NumericalError

TOL = 1e-12


def linprog_max(c, A, b, max_iter=10000):
    """Return ``(value, x)`` for the LP above.

    Raises `NumericalError` if ``b`` has negative entries, the problem
    is unbounded or the iteration cap is hit.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if np.any(b < -TOL):
        raise NumericalError("origin must be feasible (b >= 0)")

    # rows 0..m-1 constraints, last row is the reduced cost row
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = np.maximum(b, 0.0)
    T[m, :n] = -c
    basis = list(range(n, n + m))

    for _ in range(max_iter):
        reduced = T[m, :-1]
        entering = np.flatnonzero(reduced < -TOL)
        if entering.size == 0:
            break
        col = int(entering[0])  # Bland: smallest index
        column = T[:m, col]
        positive = column > TOL
        if not positive.any():
            raise NumericalError("LP is unbounded")
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + TOL * max(1.0, abs(best)))
        # Bland: among tied rows pick the one whose basic variable has smallest index
        row = int(min(ties, key=lambda r: basis[r]))
        T[row] /= T[row, col]
        for r in range(m + 1):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        basis[row] = col
    else:
        raise NumericalError("simplex did not converge")

    x = np.zeros(n + m)
    x[basis] = T[:m, -1]
    return float(T[m, -1]), x[:n]
