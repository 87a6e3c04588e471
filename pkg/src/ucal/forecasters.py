"""Online forecasters and outcome sources.

Every forecaster follows the same protocol: ``predict()`` returns the forecast
for the current round, ``observe(x)`` reveals the outcome and advances the
round counter. Randomized forecasters draw from a caller-supplied
``numpy.random.Generator``; :func:`make_rng` builds the counter-based
generator used throughout the package.

Outcome sources are oblivious (the whole sequence is fixed before round 1)
except :class:`ThresholdAdversary`, which reads the current forecast and is
accepted by :func:`run_adaptive` only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .transcript import Transcript


class ForecasterError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """64-bit counter-based generator (Philox) for replayable simulations."""
    return np.random.Generator(np.random.Philox(int(seed)))


def sharp_sigmoid(z):
    """S(z) = e^z / (e^z + e^-z), i.e. the logistic function at 2z."""
    return 0.5 * (1.0 + np.tanh(z))


def sharp_logit(u):
    """Inverse of :func:`sharp_sigmoid`: ½ ln(u / (1 - u))."""
    u = np.asarray(u, dtype=float)
    return 0.5 * np.log(u / (1.0 - u))


# ---------------------------------------------------------------------------
# Binary forecasters


@dataclass
class ForecasterState:
    """Round counter and outcome counts shared by every forecaster."""

    T: int
    K: int = 2
    t: int = 1
    counts: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.T < 1:
            raise ForecasterError("horizon T must be positive")
        if self.counts is None:
            self.counts = np.zeros(self.K, dtype=np.int64)

    def record(self, x: int) -> None:
        if not 0 <= x < self.K:
            raise ForecasterError(f"outcome {x} outside 0..{self.K - 1}")
        self.counts[x] += 1
        self.t += 1

    @property
    def history_mean(self) -> float:
        """Fraction of ones among the outcomes observed so far (binary)."""
        n = self.t - 1
        return float(self.counts[1] / n) if n else 0.0


class ForecastHedge:
    """Randomized binary forecaster that makes every threshold agent run Hedge.

    Round 1 predicts ½. In round t >= 2 the forecast is drawn from the
    distribution with CDF ``F(v) = S(eta (t-1) (v - xbar))`` on [0, 1), where
    ``xbar`` is the average of the t-1 outcomes seen so far and S is
    :func:`sharp_sigmoid`. The mass of F below 0 sits on the atom at 0 and the
    mass above ``F(1-)`` on the atom at 1.
    """

    name = "hedge"

    def __init__(self, T: int, rng: np.random.Generator, eta: float | None = None):
        self.state = ForecasterState(T)
        self.eta = 1.0 / math.sqrt(T) if eta is None else float(eta)
        if self.eta <= 0:
            raise ForecasterError("eta must be positive")
        self.rng = rng

    def cdf(self, v) -> np.ndarray:
        s = self.state
        return sharp_sigmoid(self.eta * (s.t - 1) * (np.asarray(v, dtype=float) - s.history_mean))

    def predict(self) -> float:
        s = self.state
        if s.t == 1:
            return 0.5
        return float(hedge_inverse_cdf(self.rng.random(), s.history_mean, self.eta * (s.t - 1)))

    def observe(self, x: int) -> None:
        self.state.record(int(x))


def hedge_inverse_cdf(u, xbar, scale):
    """Map uniform draws ``u`` to forecasts: atom at 0, logistic body, atom at 1."""
    u = np.asarray(u, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    scale = np.asarray(scale, dtype=float)
    low = sharp_sigmoid(-scale * xbar)
    high = sharp_sigmoid(scale * (1.0 - xbar))
    with np.errstate(divide="ignore", invalid="ignore"):
        body = xbar + sharp_logit(u) / scale
    out = np.where(u <= low, 0.0, np.where(u > high, 1.0, body))
    return np.clip(out, 0.0, 1.0)


def forecast_hedge_oblivious(outcomes, rng: np.random.Generator, eta: float | None = None) -> np.ndarray:
    """All ForecastHedge predictions for a fixed outcome sequence in one pass.

    Consumes the generator exactly as T calls to :meth:`ForecastHedge.predict`
    would (one uniform per round from round 2 on), so both paths agree bit for bit.
    """
    x = np.asarray(outcomes, dtype=np.int64)
    T = x.size
    if T == 0:
        return np.zeros(0)
    eta = 1.0 / math.sqrt(T) if eta is None else float(eta)
    preds = np.empty(T)
    preds[0] = 0.5
    if T == 1:
        return preds
    n = np.arange(1, T)
    xbar = np.cumsum(x)[:-1] / n
    u = rng.random(T - 1)
    preds[1:] = hedge_inverse_cdf(u, xbar, eta * n)
    return preds


class EmpiricalAverage:
    """Predicts the running average of past outcomes (``initial`` before any data)."""

    name = "empirical"

    def __init__(self, T: int, initial: float = 0.5):
        self.state = ForecasterState(T)
        self.initial = float(initial)

    def predict(self) -> float:
        s = self.state
        return self.initial if s.t == 1 else s.history_mean

    def observe(self, x: int) -> None:
        self.state.record(int(x))


class Constant:
    name = "constant"

    def __init__(self, T: int, value: float):
        if not 0.0 <= value <= 1.0:
            raise ForecasterError("constant forecast must lie in [0, 1]")
        self.state = ForecasterState(T)
        self.value = float(value)

    def predict(self) -> float:
        return self.value

    def observe(self, x: int) -> None:
        self.state.record(int(x))


# ---------------------------------------------------------------------------
# Multiclass forecaster


def ftpl_cap(T: int) -> int:
    return math.isqrt(T)


def ftpl_prediction(counts, noise) -> np.ndarray:
    """Normalized perturbed counts; uniform when every perturbed count is zero."""
    X = np.asarray(counts, dtype=float) + np.asarray(noise, dtype=float)
    total = X.sum(axis=-1, keepdims=True)
    K = X.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        P = X / total
    return np.where(total > 0, P, 1.0 / K)


class ForecastFTPL:
    """Follow-the-perturbed-leader in forecast space.

    Each round draws fresh i.i.d. noise uniform on {0, ..., floor(sqrt(T))}
    per class, adds it to the class counts and normalizes. ``noise_source``
    may replace the generator (a callable returning a length-K integer array)
    to force specific perturbations in tests.
    """

    name = "ftpl"

    def __init__(self, T: int, K: int, rng: np.random.Generator | None = None, noise_source=None):
        if K < 2:
            raise ForecasterError("FTPL needs at least two classes")
        if rng is None and noise_source is None:
            raise ForecasterError("FTPL needs a generator or a noise source")
        self.state = ForecasterState(T, K)
        self.cap = ftpl_cap(T)
        self.rng = rng
        self.noise_source = noise_source

    def draw_noise(self) -> np.ndarray:
        if self.noise_source is not None:
            n = np.asarray(self.noise_source(), dtype=np.int64)
            if n.shape != (self.state.K,) or np.any(n < 0):
                raise ForecasterError("noise must be K non-negative integers")
            return n
        return self.rng.integers(0, self.cap + 1, size=self.state.K)

    def predict(self) -> np.ndarray:
        return ftpl_prediction(self.state.counts, self.draw_noise())

    def observe(self, x: int) -> None:
        self.state.record(int(x))


def forecast_ftpl_oblivious(outcomes, K: int, rng: np.random.Generator) -> np.ndarray:
    """All FTPL predictions for a fixed outcome sequence, noise drawn as one (T, K) block.

    Philox fills a block of bounded integers in the same order as successive
    length-K calls, so this matches :class:`ForecastFTPL` draw for draw.
    """
    x = np.asarray(outcomes, dtype=np.int64)
    T = x.size
    cap = ftpl_cap(T)
    onehot = np.eye(K, dtype=np.int64)[x]
    counts = np.vstack([np.zeros((1, K), dtype=np.int64), np.cumsum(onehot, axis=0)[:-1]])
    noise = rng.integers(0, cap + 1, size=(T, K))
    return ftpl_prediction(counts, noise)


def btpl_coupling(outcomes, K: int, rng: np.random.Generator):
    """Coupled follow- and be-the-perturbed-leader forecasts on a fixed sequence.

    The leader variant counts the current outcome too. Its noise is the
    follower's noise with one unit removed from the realized class, wrapping
    modulo ``floor(sqrt(T)) + 1``, so each noise vector keeps its uniform law.
    The perturbed counts, and hence the forecasts, coincide unless that
    class's noise wraps. Returns ``(p_follow, p_lead)``.
    """
    x = np.asarray(outcomes, dtype=np.int64)
    T = x.size
    cap = ftpl_cap(T)
    onehot = np.eye(K, dtype=np.int64)[x]
    before = np.vstack([np.zeros((1, K), dtype=np.int64), np.cumsum(onehot, axis=0)[:-1]])
    noise = rng.integers(0, cap + 1, size=(T, K))
    lead_noise = np.mod(noise - onehot, cap + 1)
    return ftpl_prediction(before, noise), ftpl_prediction(before + onehot, lead_noise)


def btpl_disagreement(outcomes, K: int, rng: np.random.Generator) -> float:
    """Fraction of rounds where the coupled forecasts of :func:`btpl_coupling` differ."""
    pf, pb = btpl_coupling(outcomes, K, rng)
    return float(np.mean(np.any(pf != pb, axis=1)))


# ---------------------------------------------------------------------------
# Outcome sources


PATTERNS = ("half_ones", "alternating", "all_ones", "all_zeros")


def pattern_outcomes(name: str, T: int) -> np.ndarray:
    """Deterministic oblivious sequences.

    ``half_ones``: ones for the first floor(T/2) rounds, then zeros.
    ``alternating``: 1, 0, 1, 0, ...
    """
    if T < 1:
        raise ForecasterError("T must be positive")
    if name == "half_ones":
        x = np.zeros(T, dtype=np.int64)
        x[: T // 2] = 1
        return x
    if name == "alternating":
        return (np.arange(T) % 2 == 0).astype(np.int64)
    if name == "all_ones":
        return np.ones(T, dtype=np.int64)
    if name == "all_zeros":
        return np.zeros(T, dtype=np.int64)
    raise ForecasterError(f"unknown pattern {name!r}; choose from {', '.join(PATTERNS)}")


def file_outcomes(path, K: int = 2) -> np.ndarray:
    """Read one integer outcome per line (blank lines and '#' comments skipped)."""
    vals = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            vals.append(int(line))
    x = np.asarray(vals, dtype=np.int64)
    if x.size == 0:
        raise ForecasterError(f"{path}: no outcomes")
    if np.any((x < 0) | (x >= K)):
        raise ForecasterError(f"{path}: outcomes must lie in 0..{K - 1}")
    return x


class ThresholdAdversary:
    """Adaptive source: outcome 0 when the forecast is at least ``threshold``, else 1.

    This source sees the forecast before choosing the outcome, which breaks the
    oblivious model, so only :func:`run_adaptive` accepts it.
    """

    adaptive = True

    def __init__(self, threshold: float = 0.5):
        self.threshold = float(threshold)

    def respond(self, p: float) -> int:
        return 0 if p >= self.threshold else 1


# ---------------------------------------------------------------------------
# Drivers


def run_forecaster(forecaster, outcomes, meta: dict | None = None) -> Transcript:
    """Play ``forecaster`` against a fixed outcome sequence, round by round."""
    if getattr(outcomes, "adaptive", False):
        raise ForecasterError("adaptive sources need run_adaptive")
    x = np.asarray(outcomes, dtype=np.int64)
    T = forecaster.state.T
    if x.size < T:
        raise ForecasterError(f"outcome source exhausted after {x.size} of {T} rounds")
    x = x[:T]
    K = forecaster.state.K
    preds = []
    for i in range(T):
        preds.append(forecaster.predict())
        forecaster.observe(x[i])
    info = {"forecaster": forecaster.name}
    info.update(meta or {})
    return Transcript(np.asarray(preds, dtype=float), x, K=K, meta=info)


def run_adaptive(forecaster, adversary: ThresholdAdversary, meta: dict | None = None) -> Transcript:
    """Demonstration driver where the outcome may depend on the current forecast."""
    if forecaster.state.K != 2:
        raise ForecasterError("the threshold adversary is binary")
    T = forecaster.state.T
    preds = np.empty(T)
    x = np.empty(T, dtype=np.int64)
    for i in range(T):
        preds[i] = forecaster.predict()
        x[i] = adversary.respond(preds[i])
        forecaster.observe(x[i])
    info = {"forecaster": forecaster.name, "adversary": "adaptive_threshold"}
    info.update(meta or {})
    return Transcript(preds, x, meta=info)


FORECASTERS = ("hedge", "ftpl", "empirical", "constant")


def simulate(kind: str, outcomes, seed: int, K: int = 2, param: float | None = None, fast: bool = True) -> Transcript:
    """Run a named forecaster on an oblivious sequence with a seeded generator.

    ``fast`` uses the one-pass implementations where they exist. For hedge
    and ftpl the result is identical to the round-by-round loop.
    """
    x = np.asarray(outcomes, dtype=np.int64)
    T = x.size
    meta = {"seed": seed, "forecaster": kind}
    if kind == "hedge":
        if K != 2:
            raise ForecasterError("hedge is a binary forecaster")
        rng = make_rng(seed)
        if fast:
            return Transcript(forecast_hedge_oblivious(x, rng, eta=param), x, meta=meta)
        return run_forecaster(ForecastHedge(T, rng, eta=param), x, meta)
    if kind == "ftpl":
        rng = make_rng(seed)
        if fast:
            return Transcript(forecast_ftpl_oblivious(x, K, rng), x, K=K, meta=meta)
        return run_forecaster(ForecastFTPL(T, K, rng), x, meta)
    if kind == "empirical":
        if K != 2:
            raise ForecasterError("empirical-average forecaster is binary here")
        init = 0.5 if param is None else param
        return run_forecaster(EmpiricalAverage(T, init), x, meta)
    if kind == "constant":
        if K != 2:
            raise ForecasterError("constant forecaster is binary here")
        if param is None:
            raise ForecasterError("constant forecaster needs a value")
        return run_forecaster(Constant(T, param), x, meta)
    raise ForecasterError(f"unknown forecaster {kind!r}; choose from {', '.join(FORECASTERS)}")
