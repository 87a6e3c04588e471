"""Decision-making agents that best-respond to forecasts.

An agent is a finite utility table ``u[a, x]`` over actions and outcomes.
Best responses break ties toward the lowest action index so that every
regret number computed from them is reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transcript import Transcript


class AgentError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UtilityMatrix:
    """Utility ``u[a, x]`` of action ``a`` under outcome ``x``.

    ``labels`` optionally names the actions (e.g. the numeric action values of
    the squared-loss agent). ``bound`` is the admissible magnitude; pass
    ``None`` for unnormalized payoff tables.
    """

    u: np.ndarray
    labels: tuple | None = None
    bound: float | None = 1.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] == 0:
            raise AgentError("utility table needs at least one action")
        if u.shape[1] < 2:
            raise AgentError("utility table needs at least two outcomes")
        if self.bound is not None and np.any(np.abs(u) > self.bound + 1e-12):
            raise AgentError(f"utilities must lie in [-{self.bound}, {self.bound}]")
        if self.labels is not None and len(self.labels) != u.shape[0]:
            raise AgentError("one label per action required")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def n_actions(self) -> int:
        return self.u.shape[0]

    @property
    def K(self) -> int:
        return self.u.shape[1]

    def scaled(self, factor: float, shift: float = 0.0, bound: float | None = 1.0) -> "UtilityMatrix":
        return UtilityMatrix(self.u * factor + shift, labels=self.labels, bound=bound)

    def to_json(self) -> dict:
        return {"u": self.u.tolist()}

    @classmethod
    def from_json(cls, obj: dict, bound: float | None = 1.0) -> "UtilityMatrix":
        if "u" not in obj:
            raise AgentError('utility JSON must carry a "u" table')
        return cls(obj["u"], bound=bound)


def _as_simplex(p, K: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if K == 2 and (p.ndim == 0 or (p.ndim == 1 and p.shape[0] != 2)):
        p = np.atleast_1d(p)
        return np.column_stack([1.0 - p, p])
    return np.atleast_2d(p)


def expected_utilities(u: UtilityMatrix, p) -> np.ndarray:
    """Expected utility of every action under each forecast, shape (n, |A|)."""
    P = _as_simplex(p, u.K)
    if P.shape[1] != u.K:
        raise AgentError(f"forecast arity {P.shape[1]} does not match agent arity {u.K}")
    return P @ u.u.T


def best_responses(u: UtilityMatrix, p) -> np.ndarray:
    """Vectorized best response; ``np.argmax`` keeps the lowest index on ties."""
    return np.argmax(expected_utilities(u, p), axis=1)


def best_response(u: UtilityMatrix, p) -> int:
    return int(best_responses(u, p)[0])


def hedge_probabilities(u: UtilityMatrix, history, eta: float) -> np.ndarray:
    """Hedge weights: probability proportional to exp(eta * cumulative utility)."""
    if eta <= 0:
        raise AgentError("eta must be positive")
    history = np.asarray(history, dtype=np.int64)
    cum = u.u[:, history].sum(axis=1) if history.size else np.zeros(u.n_actions)
    z = eta * cum
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def hedge_agent_step(u: UtilityMatrix, history, eta: float, rng: np.random.Generator) -> int:
    probs = hedge_probabilities(u, history, eta)
    return int(rng.choice(u.n_actions, p=probs))


@dataclass(frozen=True)
class SwapFunction:
    mapping: tuple

    def __call__(self, a: int) -> int:
        return self.mapping[a]

    @property
    def is_identity(self) -> bool:
        return all(a == b for a, b in enumerate(self.mapping))


def _realized_utility_by_action(u: UtilityMatrix, actions: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    # gain[a, b] = total utility of playing b in the rounds where a was played
    counts = np.zeros((u.n_actions, u.K))
    np.add.at(counts, (actions, outcomes), 1.0)
    return counts @ u.u.T


def best_swap(u: UtilityMatrix, t: Transcript) -> SwapFunction:
    """Best post-hoc relabeling of the agent's actions.

    Each played action is sent to the action with the highest realized utility
    over the rounds where it was played; ties keep the action itself when it is
    among the maximizers, otherwise the lowest index. Unplayed actions stay put.
    """
    if t.T == 0:
        raise AgentError("transcript is empty")
    actions = best_responses(u, t.predictions)
    gain = _realized_utility_by_action(u, actions, t.outcomes)
    played = np.zeros(u.n_actions, dtype=bool)
    played[actions] = True
    mapping = []
    for a in range(u.n_actions):
        if not played[a]:
            mapping.append(a)
            continue
        row = gain[a]
        best = row.max()
        mapping.append(a if row[a] >= best else int(np.argmax(row)))
    return SwapFunction(tuple(mapping))


def squared_loss_agent(t: Transcript) -> UtilityMatrix:
    """Agent with u(a, x) = -(a - x)^2 over the finite action set {p_t} U {m_p / n_p}.

    Binary transcripts only. Action labels are the numeric action values.
    """
    from .transcript import require_binary

    require_binary(t)
    values, inverse = np.unique(t.predictions, return_inverse=True)
    n = np.bincount(inverse)
    m = np.bincount(inverse, weights=t.outcomes)
    acts = np.unique(np.concatenate([values, m / n]))
    u = np.column_stack([-(acts**2), -((1.0 - acts) ** 2)])
    return UtilityMatrix(u, labels=tuple(float(a) for a in acts))


def wager_agent(threshold: float = 0.1) -> UtilityMatrix:
    """Two-action betting agent u(a, x) = (-1)^a (threshold - x).

    With ``threshold = 0.1`` these are the 9-to-1 wagers: action 0 bets on
    outcome 0, action 1 bets on outcome 1.
    """
    return UtilityMatrix([[threshold, threshold - 1.0], [-threshold, 1.0 - threshold]])


def random_agent(rng: np.random.Generator, n_actions: int, K: int = 2) -> UtilityMatrix:
    return UtilityMatrix(rng.uniform(-1.0, 1.0, size=(n_actions, K)))
