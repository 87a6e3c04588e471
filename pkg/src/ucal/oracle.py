"""Brute-force reference implementations.

These deliberately avoid the fast paths they certify: V-regret is summed
round by round in plain Python, V-calibration is searched on a grid, and the
LP optimum is found by enumerating vertices of the feasible polytope.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .transcript import Transcript, require_binary


def _sgn(z: float) -> int:
    return (z > 0) - (z < 0)


def _vshape_score(v: float, p: float, x: int) -> float:
    if p == v:
        return 0.0
    if x == 0:
        return v * _sgn(p - v)
    return (1.0 - v) * _sgn(v - p)


def vreg_naive(v: float, t: Transcript) -> float:
    """Regret of the V-shaped rule at ``v`` by direct summation over rounds."""
    require_binary(t)
    xs = [int(x) for x in t.outcomes]
    return _vreg_rounds(float(v), [float(p) for p in t.predictions], xs, sum(xs) / len(xs))


def _vreg_rounds(v: float, ps: list, xs: list, beta: float) -> float:
    terms = []
    for p, x in zip(ps, xs):
        terms.append(_vshape_score(v, p, x))
        terms.append(-_vshape_score(v, beta, x))
    return math.fsum(terms)


def vcal_grid(t: Transcript, n_uniform: int = 2001) -> float:
    """Grid search for the supremum of V-regret over [0, 1].

    Candidate centers avoid every breakpoint (the predicted values and the
    base rate). Between consecutive breakpoints the V-regret is linear, so two
    interior probes per interval are extended to each endpoint to recover the
    one-sided limits a pure midpoint search would miss. A uniform grid of
    ``n_uniform`` points is scanned as well.
    """
    require_binary(t)
    xs = [int(x) for x in t.outcomes]
    ps = [float(p) for p in t.predictions]
    beta = sum(xs) / len(xs)

    def f(v):
        return _vreg_rounds(v, ps, xs, beta)

    cuts = sorted(set([0.0, 1.0, beta] + ps))
    best = -math.inf
    for a, b in zip(cuts[:-1], cuts[1:]):
        q1, q2 = a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0
        f1, f2 = f(q1), f(q2)
        step = f2 - f1
        best = max(best, f(0.5 * (a + b)), f1 - step, f2 + step)
    cutset = set(cuts)
    for v in np.linspace(0.0, 1.0, n_uniform):
        v = float(v)
        if v not in cutset:
            best = max(best, f(v))
    return best


MAX_VERTEX_ANCHORS = 4


def _small_lp(t: Transcript):
    xs = [int(x) for x in t.outcomes]
    ps = [float(p) for p in t.predictions]
    beta = sum(xs) / len(xs)
    points = sorted(set(ps))
    if beta not in points:
        points.append(beta)
    idx = {p: i for i, p in enumerate(points)}
    n = len(points)
    obj = np.zeros(2 * n)
    for p, x in zip(ps, xs):
        obj[2 * idx[p] + x] += 1.0
        obj[2 * idx[beta] + x] -= 1.0
    rows, rhs = [], []
    for b in range(n):
        for a in range(n):
            if a == b:
                continue
            row = np.zeros(2 * n)
            w = (1.0 - points[b], points[b])
            for x in (0, 1):
                row[2 * b + x] += w[x]
                row[2 * a + x] -= w[x]
            rows.append(row)
            rhs.append(0.0)
    for j in range(2 * n):
        for s in (1.0, -1.0):
            row = np.zeros(2 * n)
            row[j] = s
            rows.append(row)
            rhs.append(1.0)
    return obj, np.array(rows), np.array(rhs), n


def max_agent_reg_vertex(t: Transcript, chunk: int = 200_000, tol: float = 1e-9) -> float:
    """Maximum regret over bounded proper rules by enumerating polytope vertices.

    Binary transcripts with at most three distinct predictions only (four
    anchors with the base rate). Every choice of as many tight constraints as
    there are variables is solved; nonsingular, feasible solutions are the
    vertices, and the best objective among them is the optimum.
    """
    require_binary(t)
    obj, G, h, n = _small_lp(t)
    if n > MAX_VERTEX_ANCHORS:
        raise ValueError(f"vertex enumeration is limited to {MAX_VERTEX_ANCHORS} anchors, got {n}")
    d = 2 * n
    best = -math.inf
    combos = itertools.combinations(range(G.shape[0]), d)
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64
        )
        if block.size == 0:
            break
        block = block.reshape(-1, d)
        M = G[block]
        r = h[block]
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-10
        if not np.any(ok):
            continue
        sol = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
        feasible = np.all(sol @ G.T <= h + tol, axis=1)
        if np.any(feasible):
            best = max(best, float(np.max(sol[feasible] @ obj)))
    return best
