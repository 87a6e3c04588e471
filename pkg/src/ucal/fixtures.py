"""Deterministic generators for the worked examples and counterexamples.

Bernoulli-style prediction patterns are realized by exact counts rather than
sampling, so every published metric value holds exactly at the stated T.
Each generator has a matching ``expected_*`` function returning the checks
the ``example`` CLI subcommand verifies.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .agents import UtilityMatrix, wager_agent
from .scoring import PLScoringRule, VShapedRule
from .transcript import Transcript


class FixtureError(ValueError):
    pass


def _require_multiple(T: int, k: int, what: str) -> None:
    if T <= 0 or T % k:
        raise FixtureError(f"{what} needs T divisible by {k}, got T={T}")


def _halves(T: int) -> np.ndarray:
    """Ones for the first T/2 rounds, zeros afterwards."""
    x = np.zeros(T, dtype=np.int64)
    x[: T // 2] = 1
    return x


def _split_predictions(T: int, hit_rate_ones: float, false_rate_zeros: float) -> np.ndarray:
    """Extreme predictions on the halves sequence with exact hit counts.

    Among the T/2 one-rounds, ``hit_rate_ones`` of them predict 1 (the rest 0);
    among the T/2 zero-rounds, ``false_rate_zeros`` of them predict 1.
    Correct predictions come first within each half.
    """
    h = T // 2
    hits = round(hit_rate_ones * h)
    false = round(false_rate_zeros * h)
    p = np.zeros(T)
    p[:hits] = 1.0
    p[2 * h - false :] = 1.0
    return p


# ---------------------------------------------------------------------------
# Low Brier score, high agent regret


def gen_low_brier(T: int, variant: str = "fifth_wrong") -> tuple[Transcript, UtilityMatrix]:
    """Halves sequence with extreme predictions, paired with the 9-to-1 wager agent.

    ``variant="fifth_wrong"``: 80% of predictions are correct in each half (T divisible by 20).
    ``variant="quarter_wrong"``: a quarter of predictions are wrong in each half, so the
    predictions in zero-rounds follow Bernoulli(1/4) and in one-rounds
    Bernoulli(3/4) (T divisible by 8).
    """
    if variant == "fifth_wrong":
        _require_multiple(T, 20, "the 80%-correct variant")
        p = _split_predictions(T, 0.8, 0.2)
    elif variant == "quarter_wrong":
        _require_multiple(T, 8, "the quarter-wrong variant")
        p = _split_predictions(T, 0.75, 0.25)
    else:
        raise FixtureError(f"unknown variant {variant!r}; use 'fifth_wrong' or 'quarter_wrong'")
    return Transcript(p, _halves(T), meta={"fixture": f"low_brier_{variant}"}), wager_agent()


def expected_low_brier(T: int, variant: str = "fifth_wrong") -> dict:
    if variant == "fifth_wrong":
        return {"Reg": -0.05 * T, "AgentReg_wager": 0.1 * T, "VCal": 0.2 * T}
    return {"Reg": 0.0, "AgentReg_wager": 0.15 * T, "VCal": 0.25 * T}


# ---------------------------------------------------------------------------
# The three forecasts on the halves sequence


def gen_named_transcript(name: str, T: int) -> Transcript:
    """Forecasts for the halves sequence.

    ``quarter_wrong``: Bernoulli(1/4) / Bernoulli(3/4) extreme predictions by exact counts.
    ``exact``: p_t = x_t.
    ``running_mean``: p_t = 1 for t <= T/2 and (T/2)/t afterwards (1-based t).
    """
    if name == "quarter_wrong":
        t, _ = gen_low_brier(T, variant="quarter_wrong")
        return Transcript(t.predictions, t.outcomes, meta={"fixture": "quarter_wrong"})
    _require_multiple(T, 2, name)
    x = _halves(T)
    if name == "exact":
        return Transcript(x.astype(float), x, meta={"fixture": "exact"})
    if name == "running_mean":
        t = np.arange(1, T + 1)
        p = np.where(t <= T // 2, 1.0, (T / 2) / t)
        return Transcript(p, x, meta={"fixture": "running_mean"})
    raise FixtureError(f"unknown example {name!r}; use quarter_wrong, exact or running_mean")


def running_mean_cal_exact(T: int) -> float:
    """Calibration error of ``running_mean``: each late prediction (T/2)/t is distinct with outcome 0."""
    return math.fsum((T / 2) / t for t in range(T // 2 + 1, T + 1))


# Thresholds minted by direct-summation runs at T = 1e5 (see the oracle module):
# VCal/T was below 1e-15 and the spike witness was -0.0066866.
RUNNING_MEAN_VCAL_FRACTION_MAX = 0.02
RUNNING_MEAN_SPIKE_MIN = 0.005


def expected_named_transcript(name: str, T: int) -> dict:
    if name == "quarter_wrong":
        return {"VCal": 0.25 * T}
    if name == "exact":
        return {"VCal": 0.0, "Cal": 0.0}
    if name == "running_mean":
        return {
            "VCal_abs_max": RUNNING_MEAN_VCAL_FRACTION_MAX * T,
            "Cal_min": 0.25 * T,
            "Cal": running_mean_cal_exact(T),
            "spike_abs_min": RUNNING_MEAN_SPIKE_MIN,
        }
    raise FixtureError(f"unknown example {name!r}")


# ---------------------------------------------------------------------------
# Per-rule counterexample


@dataclass(frozen=True)
class SRCounterexample:
    transcript: Transcript
    modified: PLScoringRule
    miss_fraction: float
    predicted_gap: float  # T * (l(1/2) - (l(0) + l(1))/2 - eps)
    rounding_bound: float  # |Reg_l| can differ from 0 by at most this much


def _pl(rule) -> PLScoringRule:
    return rule.to_pl() if isinstance(rule, VShapedRule) else rule


def sr_miss_fraction(rule) -> float:
    """Fraction f of wrong extreme predictions that ties the base rate under ``rule``."""
    r = _pl(rule)
    if r.is_linear:
        raise FixtureError("linear rules have zero regret for every forecaster; no counterexample exists")
    l0, l1, lh = r.values[0], r.values[-1], float(r.univariate(0.5))
    d0, d1 = r.slopes[0], r.slopes[-1]
    return float((lh - 0.5 * (l0 + l1)) / (0.5 * (d0 - d1)))


def gen_sr_counterexample(rule, eps: float, T: int) -> SRCounterexample:
    """Balanced transcript where ``rule`` sees no regret but a nearby rule sees linear regret.

    Outcomes are T/2 zeros then T/2 ones. All predictions are 0 or 1, and the
    first ``round(f T / 2)`` rounds of each outcome are predicted wrongly.
    The modified rule caps the univariate form by the chord lifted by ``eps``.
    """
    _require_multiple(T, 2, "the counterexample")
    r = _pl(rule)
    f = sr_miss_fraction(r)
    h = T // 2
    k = int(round(f * h))
    x = np.concatenate([np.zeros(h, dtype=np.int64), np.ones(h, dtype=np.int64)])
    p = np.concatenate([np.zeros(h), np.ones(h)])
    p[:k] = 1.0
    p[h : h + k] = 0.0
    l0, l1 = r.values[0], r.values[-1]
    modified = r.minimum_with_line(l1 - l0, l0 + eps)
    gap = T * (float(r.univariate(0.5)) - 0.5 * (l0 + l1) - eps)
    if gap <= 0:
        warnings.warn("eps exceeds the concavity gap at 1/2; the modified rule shows no positive regret")
    bound = 0.5 * (r.slopes[0] - r.slopes[-1])
    t = Transcript(p, x, meta={"fixture": "sr_counterexample"})
    return SRCounterexample(t, modified, f, gap, bound)


# ---------------------------------------------------------------------------
# Calibration error without regret


def gen_perturbed_calibrated(T: int, perturb: bool = True) -> Transcript:
    """All-½ predictions on the halves sequence, each nudged toward its outcome.

    Round t (1-based) moves by z_t = 0.001 t / T, so the nudges are distinct
    and lie in (0, 0.001]. With ``perturb=False`` the predictions stay at ½.
    """
    _require_multiple(T, 2, "the perturbed fixture")
    x = _halves(T)
    p = np.full(T, 0.5)
    if perturb:
        z = 0.001 * np.arange(1, T + 1) / T
        p = np.where(x == 1, p + z, p - z)
    return Transcript(p, x, meta={"fixture": "perturbed" if perturb else "base_rate"})


def expected_perturbed(T: int) -> dict:
    return {"Cal_min": 0.499 * T, "Reg_max": 0.0, "VCal_max": 0.0}


# ---------------------------------------------------------------------------
# Multiclass: calibrated per outcome, regret for a joint agent


EPOCH_OUTCOMES = (0, 0, 0, 1, 1, 1, 2, 2, 2)
EPOCH_FORECASTS = (
    (2 / 3, 0.0, 1 / 3),
    (2 / 3, 0.0, 1 / 3),
    (1 / 3, 0.0, 2 / 3),
    (1 / 3, 2 / 3, 0.0),
    (1 / 3, 2 / 3, 0.0),
    (2 / 3, 1 / 3, 0.0),
    (0.0, 1 / 3, 2 / 3),
    (0.0, 1 / 3, 2 / 3),
    (0.0, 2 / 3, 1 / 3),
)
EPOCH_UTILITY = ((3.0, 6.0, 5.0), (5.0, 3.0, 0.0))  # actions H, L


def gen_multiclass_epoch_example(T: int) -> tuple[Transcript, UtilityMatrix]:
    """Nine equal epochs of constant (outcome, forecast) over three classes.

    Returns the transcript with the raw two-action utility (entries up to 6,
    so ``bound=None``). Outcomes are 0-based class indices.
    """
    _require_multiple(T, 9, "the epoch example")
    m = T // 9
    x = np.repeat(np.asarray(EPOCH_OUTCOMES, dtype=np.int64), m)
    p = np.repeat(np.asarray(EPOCH_FORECASTS), m, axis=0)
    u = UtilityMatrix(EPOCH_UTILITY, labels=("H", "L"), bound=None)
    return Transcript(p, x, K=3, meta={"fixture": "multiclass_epochs"}), u


def epoch_utilities() -> dict:
    """The raw utility and two copies rescaled into [-1, 1].

    ``div6`` divides by 6 (regret T/18); ``affine`` maps [0, 6] onto [-1, 1]
    via (u - 3) / 3 (regret T/9). Rescaling by a positive factor and adding a
    constant leaves every best response unchanged.
    """
    raw = UtilityMatrix(EPOCH_UTILITY, labels=("H", "L"), bound=None)
    return {
        "raw": raw,
        "div6": raw.scaled(1.0 / 6.0),
        "affine": raw.scaled(1.0 / 3.0, shift=-1.0),
    }


def per_outcome_views(t: Transcript) -> list[Transcript]:
    return [t.binary_view(i) for i in range(t.K)]


def expected_multiclass_epochs(T: int) -> dict:
    return {
        "Cal_outcome_0": 0.0,
        "Cal_outcome_1": 0.0,
        "Cal_outcome_2": 0.0,
        "AgentReg_raw": T / 3,
        "AgentReg_div6": T / 18,
        "MaxAgentReg_min": T / 9,
    }


FIXTURES = ("low_brier", "quarter_wrong", "exact", "running_mean", "perturbed", "multiclass_epochs", "sr_counterexample")
