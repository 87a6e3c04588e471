"""Dense-tableau primal simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A x <= b, x >= 0`` for ``b >= 0``, where the slack
basis is a feasible starting point. That covers every LP built in this
package, so no phase-one machinery is carried.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SimplexError(ValueError):
    pass


@dataclass
class SimplexResult:
    status: str  # "optimal" | "unbounded" | "iteration_limit"
    x: np.ndarray
    value: float
    iterations: int
    duals: np.ndarray

    @property
    def success(self) -> bool:
        return self.status == "optimal"


def maximize(
    c,
    A,
    b,
    tol: float = 1e-9,
    pivot_tol: float = 1e-7,
    max_iter: int = 100_000,
    zero_tol: float = 1e-12,
    refactor_every: int = 10,
) -> SimplexResult:
    """Maximize ``c.x`` over ``{x >= 0 : A x <= b}`` starting from the slack basis.

    ``tol`` is the optimality tolerance on reduced costs. Entering and leaving
    variables follow Bland's rule, so the method terminates on degenerate
    problems (and the LPs here are highly degenerate: most rows have b = 0).
    Every ``refactor_every`` pivots, and again before optimality is declared,
    the tableau is recomputed from the original data for the current basis.
    That keeps round-off from piling up over long degenerate runs. Pivots
    only touch rows with a nonzero entry in the entering column.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise SimplexError("inconsistent LP dimensions")
    if np.any(b < 0):
        raise SimplexError("slack basis infeasible: right-hand side must be non-negative")

    full = np.hstack([A, np.eye(m)])
    c_full = np.concatenate([c, np.zeros(m)])
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :-1] = full
    tab[:m, -1] = b
    tab[m, :-1] = -c_full
    basis = np.arange(n, n + m)

    def refactor():
        B = full[:, basis]
        tab[:m, :-1] = np.linalg.solve(B, full)
        xb = np.linalg.solve(B, b)
        tab[:m, -1] = np.where(xb < zero_tol, 0.0, xb)
        tab[m, :-1] = c_full[basis] @ tab[:m, :-1] - c_full
        tab[m, -1] = c_full[basis] @ tab[:m, -1]
        tab[np.abs(tab) < zero_tol] = 0.0

    status = "iteration_limit"
    it = 0
    fresh = True  # tableau was just built from the original data
    while it < max_iter:
        candidates = np.flatnonzero(tab[m, :-1] < -tol)
        if candidates.size == 0:
            if fresh:
                status = "optimal"
                break
            refactor()
            fresh = True
            continue
        j = int(candidates[0])
        col = tab[:m, j]
        rows = np.flatnonzero(col > pivot_tol)
        if rows.size == 0:
            if fresh:
                status = "unbounded"
                break
            refactor()
            fresh = True
            continue
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        tab[r] /= tab[r, j]
        pivot_row = tab[r]
        touched = np.flatnonzero(tab[:, j])
        touched = touched[touched != r]
        block = tab[touched] - np.outer(tab[touched, j], pivot_row)
        # flush round-off so it cannot later be mistaken for a pivot candidate
        block[np.abs(block) < zero_tol] = 0.0
        tab[touched] = block
        basis[r] = j
        it += 1
        fresh = False
        if it % refactor_every == 0:
            refactor()
            fresh = True

    x = np.zeros(n + m)
    x[basis] = tab[:m, -1]
    xs = x[:n]
    return SimplexResult(
        status=status,
        x=xs,
        value=float(c @ xs),
        iterations=it,
        duals=tab[m, n : n + m].copy(),
    )
