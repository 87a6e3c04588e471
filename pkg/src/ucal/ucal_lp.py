"""Exact U-calibration error (maximum regret of any bounded agent) by linear programming.

The regret of a scoring rule on a transcript depends only on its scores at
the distinct predictions and at the base rate. Those scores ``y[a, x]`` range
over a polytope: the box ``[-1, 1]`` plus, for every ordered anchor pair, the
properness inequality ``<y_b, p_b> <= <y_a, p_b>`` (anchor ``b``'s own scores
are the cheapest at ``p_b``). Maximizing the regret, which is linear in ``y``,
over that polytope gives the U-calibration error, and any optimal table
extends to a bounded proper rule through ``l(p) = min_a <y_a, p>``.

For binary transcripts the inequalities between neighbouring anchors (in
sorted order) already imply all the others, so only those are generated by
default.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .scoring import BivariateRule
from .simplex import maximize
from .transcript import Transcript

DEFAULT_MAX_ANCHORS = 2000
# the dense tableau grows quadratically and pivots roughly linearly in the
# anchor count; past this size a solve takes minutes
SLOW_ANCHORS = 300
MEMBERSHIP_TOL = 1e-9

log = logging.getLogger(__name__)


class LPSizeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Candidate scores ``y[a, x]`` at each anchor point ``anchors[a]`` (simplex rows)."""

    anchors: np.ndarray
    y: np.ndarray
    base_index: int
    base_merged: bool = False

    @property
    def K(self) -> int:
        return self.anchors.shape[1]

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]


@dataclass
class LPInstance:
    anchors: np.ndarray
    base_index: int
    base_merged: bool
    coef: np.ndarray  # objective weight of y[a, x]
    pairs: np.ndarray  # rows (b, a): <y_b - y_a, p_b> <= 0
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def K(self) -> int:
        return self.anchors.shape[1]


@dataclass
class LPSolution:
    value: float
    table: ScoreTable
    status: str
    iterations: int
    instance: LPInstance

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _anchors(t: Transcript):
    """Distinct predictions plus the base rate, with per-anchor outcome counts."""
    if t.T == 0:
        raise ValueError("empty transcript")
    P = t.simplex()
    beta = t.base_rate
    beta_row = np.array([1.0 - beta, beta]) if t.is_binary else np.asarray(beta, dtype=float)
    if t.is_binary:
        vals, inv = np.unique(t.predictions, return_inverse=True)
        anchors = np.column_stack([1.0 - vals, vals])
        hit = np.flatnonzero(vals == beta)
    else:
        anchors, inv = np.unique(P, axis=0, return_inverse=True)
        hit = np.flatnonzero(np.all(anchors == beta_row, axis=1))
    inv = inv.reshape(-1)
    counts = np.zeros((anchors.shape[0], t.K))
    np.add.at(counts, (inv, t.outcomes), 1.0)
    if hit.size:
        return anchors, counts, int(hit[0]), True
    anchors = np.vstack([anchors, beta_row])
    counts = np.vstack([counts, np.zeros(t.K)])
    return anchors, counts, anchors.shape[0] - 1, False


def _pair_list(anchors: np.ndarray, binary: bool, pairs: str) -> np.ndarray:
    n = anchors.shape[0]
    if pairs == "auto":
        pairs = "adjacent" if binary else "all"
    if pairs == "adjacent":
        if not binary:
            raise ValueError("adjacent-pair reduction is only exact for binary outcomes")
        order = np.argsort(anchors[:, 1], kind="stable")
        out = []
        for i, j in zip(order[:-1], order[1:]):
            out.append((i, j))
            out.append((j, i))
        return np.asarray(out, dtype=np.int64).reshape(-1, 2)
    if pairs != "all":
        raise ValueError(f"unknown pair mode {pairs!r}")
    bb, aa = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    mask = bb != aa
    return np.column_stack([bb[mask], aa[mask]])


def build_lp(t: Transcript, pairs: str = "auto", max_anchors: int = DEFAULT_MAX_ANCHORS) -> LPInstance:
    """LP over shifted scores ``z = y + 1`` in ``[0, 2]``; the slack basis (y = -1) is feasible."""
    anchors, counts, base, merged = _anchors(t)
    n_pred = anchors.shape[0] - (0 if merged else 1)
    if n_pred > max_anchors:
        raise LPSizeError(f"{n_pred} distinct predictions exceed the cap of {max_anchors}")
    n, K = anchors.shape
    coef = counts.copy()
    coef[base] -= counts.sum(axis=0)
    pr = _pair_list(anchors, t.is_binary, pairs)
    nv = n * K
    A = np.zeros((pr.shape[0] + nv, nv))
    rows = np.arange(pr.shape[0])
    for x in range(K):
        # <y_b, p_b> - <y_a, p_b> <= 0
        A[rows, pr[:, 0] * K + x] += anchors[pr[:, 0], x]
        A[rows, pr[:, 1] * K + x] -= anchors[pr[:, 0], x]
    A[pr.shape[0]:, :] = np.eye(nv)
    b = np.concatenate([np.zeros(pr.shape[0]), np.full(nv, 2.0)])
    return LPInstance(anchors, base, merged, coef, pr, A, b, coef.reshape(-1))


def table_value(table: ScoreTable, t: Transcript) -> float:
    """Regret implied by a score table: sum_t y[anchor(p_t), x_t] - sum_t y[base, x_t]."""
    anchors, counts, base, _ = _anchors(t)
    coef = counts.copy()
    coef[base] -= counts.sum(axis=0)
    return math.fsum((coef * table.y).ravel())


def max_agent_reg(
    t: Transcript,
    epsilon: float = 1e-9,
    max_anchors: int = DEFAULT_MAX_ANCHORS,
    pairs: str = "auto",
    max_iter: int = 200_000,
) -> LPSolution:
    """Maximum regret over all [-1, 1]-bounded proper scoring rules."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    inst = build_lp(t, pairs=pairs, max_anchors=max_anchors)
    if inst.anchors.shape[0] > SLOW_ANCHORS:
        log.warning("LP over %d anchors: the dense simplex may take several minutes", inst.anchors.shape[0])
    res = maximize(inst.c, inst.A, inst.b, tol=epsilon, max_iter=max_iter)
    y = res.x.reshape(inst.anchors.shape) - 1.0
    table = ScoreTable(inst.anchors, y, inst.base_index, inst.base_merged)
    value = math.fsum((inst.coef * y).ravel())
    return LPSolution(value, table, res.status, res.iterations, inst)


@dataclass(frozen=True)
class MembershipViolation:
    """``<y_b, p_b> > <y_a, p_b> + tol``: anchor ``a`` undercuts anchor ``b`` at ``p_b``."""

    b: int
    a: int
    margin: float

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class MembershipOK:
    n_checked: int

    def __bool__(self) -> bool:
        return True


def membership_check(table: ScoreTable, t: Transcript | None = None, tol: float = MEMBERSHIP_TOL):
    """Check the box and every ordered properness inequality; report the first violator."""
    if t is not None and t.K != table.K:
        raise ValueError(f"arity mismatch: table K={table.K}, transcript K={t.K}")
    if np.any(np.abs(table.y) > 1.0 + tol):
        a = int(np.flatnonzero(np.any(np.abs(table.y) > 1.0 + tol, axis=1))[0])
        return MembershipViolation(a, a, float(np.max(np.abs(table.y[a])) - 1.0))
    # M[b, a] = <y_a, p_b>
    M = table.anchors @ table.y.T
    own = np.diag(M)
    gap = own[:, None] - M
    bad = np.argwhere(gap > tol)
    if bad.size:
        b, a = (int(v) for v in bad[0])
        return MembershipViolation(b, a, float(gap[b, a]))
    n = table.n_anchors
    return MembershipOK(n * (n - 1))


def anchor_table(rule: BivariateRule, t: Transcript) -> ScoreTable:
    """Scores of ``rule`` at the transcript's anchors."""
    anchors, _, base, merged = _anchors(t)
    pts = anchors[:, 1] if t.is_binary else anchors
    y = rule.outcome_scores(pts)
    return ScoreTable(anchors, y, base, merged)


def extract_witness(sol: LPSolution | ScoreTable, K: int | None = None) -> BivariateRule:
    """Bounded proper rule whose univariate form is ``min_a <y_a, p>``.

    At an anchor the rule returns that anchor's own row, so it reproduces the
    table exactly there; elsewhere it uses the minimizing row (lowest index on ties).
    """
    table = sol.table if isinstance(sol, LPSolution) else sol
    anchors, Y = table.anchors, table.y
    K = table.K

    def fn(P, x):
        Q = np.column_stack([1.0 - P, P]) if K == 2 else P
        idx = np.argmin(Q @ Y.T, axis=1)
        eq = np.all(Q[:, None, :] == anchors[None, :, :], axis=2)
        has = eq.any(axis=1)
        idx[has] = np.argmax(eq[has], axis=1)
        return Y[idx, x]

    return BivariateRule(fn, K=K, name="lp_witness")


def lp_dump(inst: LPInstance) -> str:
    """Plain-text MPS-style listing with deterministic row and column order."""
    K = inst.K
    names = [f"y_{a}_{x}" for a in range(inst.anchors.shape[0]) for x in range(K)]
    lines = ["NAME          UCAL", "OBJSENSE", "    MAX", "ROWS", " N  OBJ"]
    n_pair = inst.pairs.shape[0]
    row_names = [f"P_{b}_{a}" for b, a in inst.pairs] + [f"U_{j}" for j in range(len(names))]
    lines += [f" L  {r}" for r in row_names]
    lines.append("COLUMNS")
    for j, nm in enumerate(names):
        if inst.c[j] != 0:
            lines.append(f"    {nm:<12} OBJ       {inst.c[j]:.17g}")
        for i in np.flatnonzero(inst.A[:n_pair, j]):
            lines.append(f"    {nm:<12} {row_names[i]:<9} {inst.A[i, j]:.17g}")
    lines.append("RHS")
    lines.append("    (rows over shifted variables z = y + 1; properness rows have RHS 0)")
    lines.append("BOUNDS")
    for nm in names:
        lines.append(f" LO BND       {nm:<12} -1")
        lines.append(f" UP BND       {nm:<12} 1")
    lines.append("ANCHORS")
    for a, row in enumerate(inst.anchors):
        tag = " BASE" if a == inst.base_index else ""
        lines.append(f"    {a:<4} " + " ".join(f"{v:.17g}" for v in row) + tag)
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def witness_json(table: ScoreTable) -> dict:
    """JSON form of a score table; ``kind: "table"`` round-trips through the witness rule."""
    return {
        "kind": "table",
        "K": table.K,
        "anchors": table.anchors.tolist(),
        "scores": table.y.tolist(),
        "base_index": int(table.base_index),
    }
