"""Transcript evaluation: scoring-rule regret, calibration, agent regret, V-calibration.

Every regret is measured against the base-rate forecaster that predicts the
empirical outcome frequency in every round. Predictions are grouped by exact
value for calibration; pass ``decimals`` to group after rounding instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .agents import UtilityMatrix, best_responses, best_swap
from .scoring import BivariateRule
from .transcript import Transcript, TranscriptError, require_binary


def _fsum(a) -> float:
    return math.fsum(np.asarray(a, dtype=float).ravel())


def _check_arity(K: int, t: Transcript) -> None:
    if K != t.K:
        raise TranscriptError(f"arity mismatch: rule/agent has K={K}, transcript has K={t.K}")


def reg(rule: BivariateRule, t: Transcript) -> float:
    """Total score of the forecasts minus the total score of the base rate."""
    _check_arity(rule.K, t)
    beta = t.base_rate
    own = rule.fn(rule._prep(t.predictions), t.outcomes)
    base_p = np.full(t.T, beta) if t.is_binary else np.tile(beta, (t.T, 1))
    base = rule.fn(base_p, t.outcomes)
    return _fsum(np.concatenate([np.asarray(own, float), -np.asarray(base, float)]))


def _groups(p: np.ndarray, decimals: int | None):
    key = np.round(p, decimals) if decimals is not None else p
    axis = 0 if key.ndim == 2 else None
    values, inverse = np.unique(key, axis=axis, return_inverse=True)
    return values, inverse.reshape(-1)


def cal_l1(t: Transcript, decimals: int | None = None) -> float:
    """Binary calibration error: sum over predicted values of |p n_p - m_p|."""
    require_binary(t)
    values, inv = _groups(t.predictions, decimals)
    n = np.bincount(inv, minlength=len(values))
    m = np.bincount(inv, weights=t.outcomes, minlength=len(values))
    return _fsum(np.abs(values * n - m))


def cal_l1_multiclass(t: Transcript, decimals: int | None = None) -> float:
    """Sum over predicted points of || sum_{t: p_t = p} (p - e_{x_t}) ||_1."""
    P = t.simplex()
    values, inv = _groups(P, decimals)
    resid = np.zeros((len(values), t.K))
    np.add.at(resid, inv, P - t.one_hot())
    return _fsum(np.abs(resid))


def cal(t: Transcript, decimals: int | None = None) -> float:
    return cal_l1(t, decimals) if t.is_binary else cal_l1_multiclass(t, decimals)


def cal_l2(t: Transcript, decimals: int | None = None) -> float:
    """L2 calibration error: sum over predicted values of n_p (p - m_p / n_p)^2."""
    require_binary(t)
    values, inv = _groups(t.predictions, decimals)
    n = np.bincount(inv, minlength=len(values))
    m = np.bincount(inv, weights=t.outcomes, minlength=len(values))
    return _fsum(n * (values - m / n) ** 2)


def agent_reg(u: UtilityMatrix, t: Transcript) -> float:
    _check_arity(u.K, t)
    a_t = best_responses(u, t.predictions)
    beta = t.base_rate
    a_beta = best_responses(u, beta if not t.is_binary else [beta])[0]
    return _fsum(np.concatenate([u.u[a_beta, t.outcomes], -u.u[a_t, t.outcomes]]))


def agent_swap_reg(u: UtilityMatrix, t: Transcript) -> float:
    _check_arity(u.K, t)
    a_t = best_responses(u, t.predictions)
    pi = np.asarray(best_swap(u, t).mapping)
    return _fsum(np.concatenate([u.u[pi[a_t], t.outcomes], -u.u[a_t, t.outcomes]]))


class VRegProfile:
    """Sorted prediction arrays per outcome for O(log T) V-regret queries."""

    def __init__(self, t: Transcript):
        require_binary(t)
        if t.T == 0:
            raise TranscriptError("empty transcript")
        self.T = t.T
        self.p0 = np.sort(t.predictions[t.outcomes == 0])
        self.p1 = np.sort(t.predictions[t.outcomes == 1])
        self.n0 = self.p0.size
        self.n1 = self.p1.size
        self.beta = t.base_rate

    def _counts(self, arr, v):
        below = np.searchsorted(arr, v, side="left")
        above = arr.size - np.searchsorted(arr, v, side="right")
        return below, above

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if np.any((v < 0) | (v > 1)):
            raise ValueError("V-shape center must lie in [0, 1]")
        lo0, hi0 = self._counts(self.p0, v)
        lo1, hi1 = self._counts(self.p1, v)
        s = np.sign(self.beta - v)
        out = v * (hi0 - lo0) + (1.0 - v) * (lo1 - hi1) - self.n0 * v * s + self.n1 * (1.0 - v) * s
        return out if out.ndim else float(out)


def vreg(v: float, t: Transcript) -> float:
    """Regret of the V-shaped rule centered at ``v``.

    Off the predicted values this is the closed form
    ``2 (1 - v) #{x=1, p<v} - 2 v #{x=0, p<v}`` for ``v <= beta`` and its
    mirror for ``v >= beta``; at a predicted value both outcomes score 0.
    """
    return VRegProfile(t)(v)


@dataclass(frozen=True)
class VCalResult:
    value: float
    v: float
    side: str  # "+": limit from the right of v, "-": from the left

    def __iter__(self):
        yield self.value
        yield self.v


def vreg_curve(t: Transcript):
    """Exact V-regret as one linear piece per open interval between split points.

    Returns ``(left, right, intercept, slope)`` arrays; on ``(left, right)`` the
    regret equals ``intercept + slope * v``.
    """
    prof = VRegProfile(t)
    split = np.unique(np.concatenate([[0.0, 1.0, prof.beta], t.predictions]))
    a, b = split[:-1], split[1:]
    mid = 0.5 * (a + b)
    lo0, hi0 = prof._counts(prof.p0, mid)
    lo1, hi1 = prof._counts(prof.p1, mid)
    s = np.sign(prof.beta - mid)
    D0 = (hi0 - lo0).astype(float)
    D1 = (lo1 - hi1).astype(float)
    intercept = D1 + prof.n1 * s
    slope = D0 - D1 - prof.n0 * s - prof.n1 * s
    return a, b, intercept, slope


def vcal(t: Transcript) -> VCalResult:
    """Supremum of the V-regret over v in [0, 1], from one-sided interval limits."""
    a, b, A, B = vreg_curve(t)
    left_vals = A + B * a
    right_vals = A + B * b
    i, j = int(np.argmax(left_vals)), int(np.argmax(right_vals))
    if left_vals[i] >= right_vals[j]:
        return VCalResult(float(left_vals[i]), float(a[i]), "+")
    return VCalResult(float(right_vals[j]), float(b[j]), "-")


def spike_witness(p) -> np.ndarray:
    """Narrow tent around 0.75: max(0.1 - |0.75 - p|, 0)."""
    return np.maximum(0.1 - np.abs(0.75 - np.asarray(p, dtype=float)), 0.0)


def weak_cal_witness(t: Transcript, w: Callable = spike_witness) -> float:
    """(1/T) sum_t w(p_t) (x_t - p_t) for a test function w: [0, 1] -> [0, 1]."""
    require_binary(t)
    vals = np.asarray(w(t.predictions), dtype=float) * (t.outcomes - t.predictions)
    return _fsum(vals) / t.T


METRIC_ORDER = ("Reg", "Cal", "Cal2", "VCal", "VCal_v", "MaxAgentReg", "AgentReg", "AgentSwapReg")


@dataclass
class RegretReport:
    metrics: dict
    meta: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        meta_cols = [k for k in ("T", "K", "seed", "forecaster") if k in self.meta]
        known = [k for k in METRIC_ORDER if k in self.metrics]
        extra = sorted(k for k in self.metrics if k not in METRIC_ORDER)
        rules = [k for k in extra if k.startswith("Reg_")]
        rest = [k for k in extra if not k.startswith("Reg_")]
        return meta_cols + known + rules + rest

    def row(self) -> dict:
        merged = {**self.meta, **self.metrics}
        return {c: merged[c] for c in self.columns()}

    def to_json(self) -> dict:
        return {"meta": dict(self.meta), "metrics": dict(self.metrics)}


def regret_report(
    t: Transcript,
    rules: dict | None = None,
    agents: dict | None = None,
    include_lp: bool = False,
    lp_epsilon: float = 1e-9,
    meta: dict | None = None,
) -> RegretReport:
    """Compute every applicable metric for ``t``.

    ``rules`` maps names to :class:`BivariateRule`; each yields ``Reg_<name>``.
    ``agents`` maps names to :class:`UtilityMatrix`; each yields
    ``AgentReg_<name>`` and ``AgentSwapReg_<name>``.
    """
    out: dict = {}
    if t.is_binary:
        from .scoring import brier

        out["Reg"] = reg(brier(), t)
        out["Cal"] = cal_l1(t)
        out["Cal2"] = cal_l2(t)
        vc = vcal(t)
        out["VCal"] = vc.value
        out["VCal_v"] = vc.v
        out["VCal_side"] = vc.side
    else:
        out["Cal"] = cal_l1_multiclass(t)
    for name, rule in (rules or {}).items():
        out[f"Reg_{name}"] = reg(rule, t)
    for name, u in (agents or {}).items():
        out[f"AgentReg_{name}"] = agent_reg(u, t)
        out[f"AgentSwapReg_{name}"] = agent_swap_reg(u, t)
    if include_lp:
        from .ucal_lp import max_agent_reg

        sol = max_agent_reg(t, epsilon=lp_epsilon)
        out["MaxAgentReg"] = sol.value
        out["MaxAgentReg_status"] = sol.status
    info = {"T": t.T, "K": t.K}
    info.update(t.meta)
    info.update(meta or {})
    return RegretReport(out, info)
