"""Belief-state dynamic program over the censored observation model.

Time runs over decision steps ``1..T``: ``value(b, t)`` is the optimal
cost-to-go when the decision at step ``t`` faces belief ``b`` about the
current state. Seen through anchors, the belief right after a full
observation of ``i`` at time ``t - 1`` is row ``i`` of ``P``, so
``value(P[i], t) == W_opt[i, t - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CostModel, DomainError, as_belief, as_matrix, cost_matrix

MEMO_DECIMALS = 12
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Full:
    """The action overshot; the state ``i`` was revealed."""

    state: int


@dataclass(frozen=True)
class Partial:
    """The action did not overshoot; only ``state >= action`` is known."""


PARTIAL = Partial()


def censor(b: np.ndarray, action: int) -> np.ndarray:
    """Condition ``b`` on ``state >= action``."""
    w = np.array(b, dtype=float)
    w[:action] = 0.0
    mass = w.sum()
    if mass <= 0:
        raise DomainError(f"no belief mass at or above action {action}")
    return w / mass


def belief_update(P, b, action: int, observation) -> np.ndarray:
    """Belief about the next state after playing ``action`` and seeing ``observation``."""
    P = as_matrix(P)
    b = as_belief(b).probs
    if not 0 <= action < b.size:
        raise DomainError(f"action {action} out of range")
    if isinstance(observation, Full):
        if not 0 <= observation.state < action:
            raise DomainError(f"full observation of {observation.state} impossible under action {action}")
        return P[observation.state].copy()
    if isinstance(observation, Partial):
        return censor(b, action) @ P
    raise DomainError(f"unknown observation {observation!r}")


class BeliefDP:
    """Memoized solver for one (model, P) instance.

    The memo is keyed on the belief rounded to ``MEMO_DECIMALS`` digits and
    the step; values are idempotent, so sharing one instance is safe.
    """

    def __init__(self, model: CostModel, P):
        self.model = model
        self.P = as_matrix(P)
        self.C = cost_matrix(model, self.P.shape[0])
        self._memo: dict = {}

    def _check(self, t: int) -> None:
        if not 1 <= t <= self.model.horizon:
            raise DomainError(f"decision step {t} outside 1..{self.model.horizon}")

    def action_values(self, b, t: int) -> np.ndarray:
        """``V_t(b; r)`` for every action ``r``."""
        self._check(t)
        b = np.asarray(b, dtype=float)
        n = b.size
        q = self.C @ b
        if t == self.model.horizon or self.model.beta == 0:
            return q
        P = self.P
        beta = self.model.beta
        rows = np.array([self.value(P[i], t + 1)[0] for i in range(n)])
        # tail[r] = mass at or above r
        tail = np.concatenate([np.cumsum(b[::-1])[::-1], [0.0]])
        for r in range(n):
            future = float(b[:r] @ rows[:r])
            if tail[r] > 0:
                w = b.copy()
                w[:r] = 0.0
                future += tail[r] * self.value((w / tail[r]) @ P, t + 1)[0]
            q[r] += beta * future
        return q

    def value(self, b, t: int) -> tuple[float, int]:
        """``(V_t(b), optimal action)``, ties broken toward the smaller action."""
        self._check(t)
        b = np.asarray(b, dtype=float)
        key = (t, tuple(np.round(b, MEMO_DECIMALS)))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        q = self.action_values(b, t)
        best = q.min()
        r = int(np.flatnonzero(q <= best + TIE_RTOL * max(1.0, abs(best)))[0])
        out = (float(q[r]), r)
        self._memo[key] = out
        return out

    def initial_value(self, b0) -> tuple[float, int]:
        """Optimal cost when ``b0`` describes the time-0 state."""
        return self.value(as_belief(b0).probs @ self.P, 1)


def belief_value(model: CostModel, P, b, t: int) -> tuple[float, int]:
    return BeliefDP(model, P).value(as_belief(b).probs, t)
