"""Bounded proper scoring rules.

A binary scoring rule charges ``l(p, x)`` for forecasting ``p`` when outcome
``x`` in {0, 1} occurs. Proper rules are determined (up to subgradient choice)
by their concave univariate form ``l(p) = (1 - p) l(p, 0) + p l(p, 1)``.

Piecewise-linear rules are the workhorse: they are dense in the bounded
class, decompose exactly into V-shaped rules, and convert to finite agents.
At a breakpoint the bivariate form uses the average of the one-sided slopes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .agents import UtilityMatrix, best_responses

CONCAVITY_TOL = 1e-12
PROPERNESS_TOL = 1e-9


class ScoringRuleError(ValueError):
    pass


def _binary_p(p) -> np.ndarray:
    return np.atleast_1d(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class BivariateRule:
    """A scoring rule as a vectorized evaluator ``fn(p, x) -> scores``.

    For ``K == 2`` the forecasts ``p`` are scalars (probability of outcome 1);
    otherwise they are rows of the K-simplex. Outcomes are 0-based.
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    K: int = 2
    bound: float = 1.0
    name: str = "rule"
    descriptor: dict | None = field(default=None, compare=False)

    def _prep(self, p):
        if self.K == 2:
            return _binary_p(p)
        return np.atleast_2d(np.asarray(p, dtype=float))

    def __call__(self, p, x):
        P = self._prep(p)
        x = np.broadcast_to(np.asarray(x, dtype=np.int64), (P.shape[0],))
        out = np.asarray(self.fn(P, x), dtype=float)
        return out if np.ndim(p) > (0 if self.K == 2 else 1) else float(out[0])

    def outcome_scores(self, p) -> np.ndarray:
        """All K scores at each forecast, shape (n, K)."""
        P = self._prep(p)
        n = P.shape[0]
        return np.column_stack([self.fn(P, np.full(n, k, dtype=np.int64)) for k in range(self.K)])

    def expected(self, p, q) -> np.ndarray:
        """``l(p; q)``: expected score of forecasting ``p`` when outcomes follow ``q``."""
        S = self.outcome_scores(p)
        if self.K == 2:
            q = _binary_p(q)
            Q = np.column_stack([1.0 - q, q])
        else:
            Q = np.atleast_2d(np.asarray(q, dtype=float))
        return np.sum(S * Q, axis=1)

    def univariate(self, p) -> np.ndarray:
        return self.expected(p, p)

    def to_json(self) -> dict:
        if self.descriptor is None:
            raise ScoringRuleError(f"rule {self.name!r} has no JSON form")
        return dict(self.descriptor)


def brier() -> BivariateRule:
    """Squared error (x - p)^2, univariate form p(1 - p)."""
    return BivariateRule(lambda p, x: (x - p) ** 2, K=2, name="brier", descriptor={"kind": "brier"})


def negated_brier() -> BivariateRule:
    return BivariateRule(lambda p, x: -((x - p) ** 2), K=2, name="neg_brier")


@dataclass(frozen=True, eq=False)
class PLScoringRule:
    """Concave piecewise-linear univariate form on [0, 1].

    ``breakpoints`` are strictly increasing interior knots; ``values`` are the
    univariate form at ``0, *breakpoints, 1``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != bps.shape[0] + 2:
            raise ScoringRuleError(
                f"need {bps.shape[0] + 2} values for {bps.shape[0]} breakpoints, got {vals.shape[0]}"
            )
        if bps.size and (np.any(bps <= 0) or np.any(bps >= 1)):
            raise ScoringRuleError("breakpoints must lie strictly inside (0, 1)")
        if np.any(np.diff(bps) <= 0):
            raise ScoringRuleError("breakpoints must be strictly increasing")
        knots = np.concatenate([[0.0], bps, [1.0]])
        slopes = np.diff(vals) / np.diff(knots)
        for i in range(len(slopes) - 1):
            if slopes[i + 1] > slopes[i] + CONCAVITY_TOL * max(1.0, abs(slopes[i])):
                raise ScoringRuleError(
                    f"univariate form is not concave: segment {i} slope {slopes[i]:.6g} < "
                    f"segment {i + 1} slope {slopes[i + 1]:.6g} at p={knots[i + 1]:.6g}"
                )
        for arr in (bps, vals, knots, slopes):
            arr.setflags(write=False)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], n_segments: int = 100) -> "PLScoringRule":
        """Sample a concave function on a uniform grid."""
        grid = np.linspace(0.0, 1.0, n_segments + 1)
        return cls(grid[1:-1], f(grid))

    @classmethod
    def from_slopes(cls, breakpoints, slopes, value_at_zero: float = 0.0) -> "PLScoringRule":
        knots = np.concatenate([[0.0], np.asarray(breakpoints, dtype=float), [1.0]])
        slopes = np.asarray(slopes, dtype=float)
        vals = value_at_zero + np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
        return cls(knots[1:-1], vals)

    @property
    def is_linear(self) -> bool:
        return bool(np.all(np.abs(self.slopes - self.slopes[0]) <= CONCAVITY_TOL))

    def univariate(self, p) -> np.ndarray:
        return np.interp(p, self.knots, self.values)

    def left_slope(self, v: float) -> float:
        i = int(np.searchsorted(self.knots, v, side="left"))
        return float(self.slopes[max(i - 1, 0)])

    def right_slope(self, v: float) -> float:
        i = int(np.searchsorted(self.knots, v, side="right"))
        return float(self.slopes[min(i - 1, len(self.slopes) - 1)])

    def subgradient(self, p) -> np.ndarray:
        p = _binary_p(p)
        seg = np.clip(np.searchsorted(self.breakpoints, p, side="right"), 0, len(self.slopes) - 1)
        g = self.slopes[seg].copy()
        if self.breakpoints.size:
            j = np.searchsorted(self.breakpoints, p, side="left")
            j = np.minimum(j, self.breakpoints.size - 1)
            hit = self.breakpoints[j] == p
            g[hit] = 0.5 * (self.slopes[j[hit]] + self.slopes[j[hit] + 1])
        return g

    def bivariate(self, p, x) -> np.ndarray:
        p = _binary_p(p)
        return self.univariate(p) + (np.asarray(x, dtype=float) - p) * self.subgradient(p)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Slope and intercept of each linear piece."""
        return self.slopes.copy(), self.values[:-1] - self.slopes * self.knots[:-1]

    def score_range(self) -> tuple[float, float]:
        r, s = self.segments()
        both = np.concatenate([s, r + s])
        return float(both.min()), float(both.max())

    def is_bounded(self, bound: float = 1.0, tol: float = 1e-12) -> bool:
        lo, hi = self.score_range()
        return lo >= -bound - tol and hi <= bound + tol

    def to_bivariate(self, bound: float = 1.0) -> BivariateRule:
        return BivariateRule(
            lambda p, x: self.bivariate(p, x), K=2, bound=bound, name="pl", descriptor=self.to_json()
        )

    def minimum_with_line(self, slope: float, intercept: float) -> "PLScoringRule":
        """Univariate form ``min(l(p), intercept + slope * p)``."""
        knots = list(self.knots)
        line = intercept + slope * self.knots
        diff = self.values - line
        for i in range(len(knots) - 1):
            if diff[i] * diff[i + 1] < 0:
                a, b = self.knots[i], self.knots[i + 1]
                knots.append(a + (b - a) * diff[i] / (diff[i] - diff[i + 1]))
        knots = np.unique(np.asarray(knots))
        vals = np.minimum(self.univariate(knots), intercept + slope * knots)
        return PLScoringRule(knots[1:-1], vals).simplified()

    def simplified(self) -> "PLScoringRule":
        """Drop breakpoints where the slope does not change."""
        keep = np.abs(np.diff(self.slopes)) > CONCAVITY_TOL
        return PLScoringRule(self.breakpoints[keep], np.concatenate([[self.values[0]], self.values[1:-1][keep], [self.values[-1]]]))

    def __add__(self, other: "PLScoringRule") -> "PLScoringRule":
        knots = np.union1d(self.knots, other.knots)
        return PLScoringRule(knots[1:-1], self.univariate(knots) + other.univariate(knots))

    def scaled(self, factor: float) -> "PLScoringRule":
        if factor < 0:
            raise ScoringRuleError("negative scaling breaks concavity")
        return PLScoringRule(self.breakpoints, self.values * factor)

    def to_json(self) -> dict:
        return {"kind": "pl", "breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class VShapedRule:
    """Univariate form -|p - v|; scores 0 for both outcomes exactly at p = v."""

    v: float

    def __post_init__(self):
        if not 0.0 <= self.v <= 1.0:
            raise ScoringRuleError(f"V-shape center must lie in [0, 1], got {self.v}")

    def bivariate(self, p, x) -> np.ndarray:
        p = _binary_p(p)
        x = np.asarray(x)
        v = self.v
        return np.where(x == 0, v * np.sign(p - v), (1.0 - v) * np.sign(v - p))

    def univariate(self, p) -> np.ndarray:
        return -np.abs(_binary_p(p) - self.v)

    def to_pl(self) -> PLScoringRule:
        if 0.0 < self.v < 1.0:
            return PLScoringRule([self.v], [-self.v, 0.0, -(1.0 - self.v)])
        return PLScoringRule([], [-self.v, -(1.0 - self.v)])

    def to_bivariate(self) -> BivariateRule:
        return BivariateRule(
            lambda p, x: self.bivariate(p, x), K=2, name=f"v={self.v:g}", descriptor=self.to_json()
        )

    def to_json(self) -> dict:
        return {"kind": "vshape", "v": float(self.v)}


def bivariate_from_univariate(rule: PLScoringRule | VShapedRule) -> BivariateRule:
    return rule.to_bivariate()


@dataclass(frozen=True)
class VDecomposition:
    centers: np.ndarray
    weights: np.ndarray
    C0: float
    C1: float

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def univariate(self, p) -> np.ndarray:
        p = _binary_p(p)
        out = self.C1 * p + self.C0
        for v, lam in zip(self.centers, self.weights):
            out = out - lam * np.abs(p - v)
        return out


def v_decompose(rule: PLScoringRule) -> VDecomposition:
    """Write ``l(p) = C1 p + C0 + sum_i lam_i * (-|p - v_i|)`` with lam_i >= 0."""
    s = rule.slopes
    lam = 0.5 * (s[:-1] - s[1:])
    centers = rule.breakpoints.copy()
    C0 = float(rule.values[0] + np.sum(lam * centers))
    C1 = float(s[0] - np.sum(lam))
    return VDecomposition(centers, lam, C0, C1)


@dataclass(frozen=True)
class ProperCertificate:
    n_probes: int
    worst_margin: float

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class ProperViolation:
    """Reporting ``report`` beats honest reporting when the truth is ``truth``."""

    truth: object
    report: object
    margin: float

    def __bool__(self) -> bool:
        return False


def properness_margin(rule: BivariateRule, truth, report) -> float:
    """``l(truth; truth) - l(report; truth)``; positive means the rule is gamed."""
    return float(rule.expected(truth, truth)[0] - rule.expected(report, truth)[0])


def check_properness(rule: BivariateRule, probes, tol: float = PROPERNESS_TOL):
    """Verify ``l(p; p) <= l(q; p) + tol`` over all probe pairs.

    Returns a :class:`ProperCertificate`, or the :class:`ProperViolation` with
    the largest margin (first in probe order on ties).
    """
    Q = np.asarray(probes, dtype=float)
    if rule.K == 2:
        Q = Q.reshape(-1)
        truths = np.column_stack([1.0 - Q, Q])
    else:
        truths = np.atleast_2d(Q)
    S = rule.outcome_scores(Q)  # S[q, x]
    # cross[p, q] = l(q; p), expected score of reporting probe q under truth p
    cross = truths @ S.T
    honest = np.diag(cross)
    margins = honest[:, None] - cross
    idx = int(np.argmax(margins))
    i, j = divmod(idx, margins.shape[1])
    worst = float(margins[i, j])
    if worst > tol:
        pick = (lambda k: float(Q[k])) if rule.K == 2 else (lambda k: tuple(truths[k]))
        return ProperViolation(truth=pick(i), report=pick(j), margin=worst)
    return ProperCertificate(n_probes=len(truths), worst_margin=worst)


def agent_to_rule(u: UtilityMatrix) -> BivariateRule:
    """Scoring rule ``l(p, x) = -u(a(p), x)`` induced by a best-responding agent."""

    def fn(P, x):
        a = best_responses(u, P)
        return -u.u[a, x]

    return BivariateRule(fn, K=u.K, bound=u.bound if u.bound is not None else np.inf, name="agent")


def rule_to_agent(rule: PLScoringRule) -> UtilityMatrix:
    """One action per linear piece ``r_a p + s_a``: ``u(a, x) = -(r_a x + s_a)``."""
    r, s = rule.segments()
    bound = max(1.0, float(np.max(np.abs(np.concatenate([s, r + s])))))
    return UtilityMatrix(np.column_stack([-s, -(r + s)]), bound=bound)


def separable_rule(rules, weights=None) -> BivariateRule:
    """Multiclass rule ``sum_i w_i * l_i(p_i, 1[x == i])`` from per-outcome binary rules.

    The default weight 1/K keeps a sum of [-1, 1]-bounded rules inside [-1, 1].
    """
    rules = [r if isinstance(r, BivariateRule) else r.to_bivariate() for r in rules]
    K = len(rules)
    if K < 2:
        raise ScoringRuleError("separable rule needs at least two classes")
    w = np.full(K, 1.0 / K) if weights is None else np.asarray(weights, dtype=float)

    def fn(P, x):
        if P.ndim == 1:
            P = np.column_stack([1.0 - P, P])
        total = np.zeros(P.shape[0])
        for i, r in enumerate(rules):
            total += w[i] * r.fn(P[:, i], (x == i).astype(np.int64))
        return total

    names = ",".join(r.name for r in rules)
    return BivariateRule(fn, K=K, bound=float(np.sum(np.abs(w) * [r.bound for r in rules])), name=f"sep[{names}]")


def multiclass_brier(K: int) -> BivariateRule:
    """Half the squared Euclidean distance to the outcome vertex; values in [0, 1]."""

    def fn(P, x):
        E = np.eye(K)[x]
        return 0.5 * np.sum((E - P) ** 2, axis=1)

    return BivariateRule(fn, K=K, name="brier_mc")


def random_pl_rule(rng: np.random.Generator, n_breakpoints: int | None = None, bound: float = 1.0) -> PLScoringRule:
    """Random concave PL rule rescaled so its scores fill part of [-bound, bound]."""
    k = int(rng.integers(1, 8)) if n_breakpoints is None else n_breakpoints
    bps = np.sort(rng.uniform(0.02, 0.98, size=k))
    bps = bps[np.concatenate([[True], np.diff(bps) > 1e-6])]
    slopes = np.sort(rng.uniform(-2.0, 2.0, size=bps.size + 1))[::-1]
    rule = PLScoringRule.from_slopes(bps, slopes, value_at_zero=rng.uniform(-1, 1))
    lo, hi = rule.score_range()
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    scale = bound * rng.uniform(0.3, 1.0) / half if half > 0 else 1.0
    return PLScoringRule(rule.breakpoints, (rule.values - mid) * scale)


def rule_from_json(obj: dict) -> BivariateRule:
    kind = obj.get("kind")
    if kind == "brier":
        return brier()
    if kind == "vshape":
        return VShapedRule(float(obj["v"])).to_bivariate()
    if kind == "pl":
        return PLScoringRule(obj["breakpoints"], obj["values"]).to_bivariate()
    if kind == "table":
        from .ucal_lp import ScoreTable, extract_witness

        anchors = np.asarray(obj["anchors"], dtype=float)
        return extract_witness(ScoreTable(anchors, np.asarray(obj["scores"], dtype=float), int(obj.get("base_index", 0))))
    raise ScoringRuleError(f"unknown scoring rule kind {kind!r}")


def per_outcome_rule_family(K: int) -> dict:
    """Brier plus V-shapes at 0.1, ..., 0.9 applied to each outcome and averaged over the K outcomes."""
    rules = {"brier": multiclass_brier(K) if K > 2 else brier()}
    for i in range(1, 10):
        vs = VShapedRule(i / 10).to_pl()
        rules[f"v{i / 10:g}"] = separable_rule([vs] * K)
    return rules
