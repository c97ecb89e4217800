"""Taboo transition probabilities and the censored cost-to-go.

A taboo probability is the chance of a ``tau``-step move ``s1 -> s2`` whose
intermediate states never fall below the actions played at those steps,
i.e. the chain stays unobserved the whole way. Rather than summing over
paths, we propagate a single unnormalized vector and zero out the entries
below the floor before each multiplication by ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import (
    CostModel,
    DomainError,
    InitialBelief,
    StructuralError,
    as_belief,
    as_matrix,
    cost_matrix,
)


@dataclass(frozen=True)
class TabooQuery:
    origin: int
    destination: int
    steps: int
    floor_sequence: tuple

    def __post_init__(self):
        if self.steps < 1:
            raise DomainError(f"steps must be >= 1, got {self.steps}")
        if self.steps > len(self.floor_sequence):
            raise DomainError(
                f"steps={self.steps} exceeds floor sequence length {len(self.floor_sequence)}"
            )


def censored_vectors(P: np.ndarray, start: np.ndarray, seq: Sequence[int]) -> Iterator[np.ndarray]:
    """Yield the unnormalized state vectors ``v_1 .. v_L`` under ``seq``.

    ``v_1 = start``; ``v_{k+1}`` keeps only states at or above ``seq[k-1]``
    and moves one step. ``v_k[i]`` is the probability of being at ``i`` on
    step ``k`` without any full observation before it.
    """
    v = np.asarray(start, dtype=float)
    n = len(seq)
    for k, a in enumerate(seq):
        yield v
        if k + 1 == n:
            return
        w = v.copy()
        w[:a] = 0.0
        v = w @ P


def start_vector(P: np.ndarray, anchor) -> np.ndarray:
    """Distribution of the first unobserved state after ``anchor``."""
    if isinstance(anchor, InitialBelief):
        return as_belief(anchor.belief).probs @ P
    return P[int(anchor[0])]


def taboo_prob(P, q: TabooQuery) -> float:
    P = as_matrix(P)
    n = P.shape[0]
    if not (0 <= q.origin < n and 0 <= q.destination < n):
        raise DomainError(f"state out of range in {q}")
    if any(a < 0 or a >= n for a in q.floor_sequence):
        raise DomainError(f"floor out of range in {q.floor_sequence}")
    v = P[q.origin]
    for a in q.floor_sequence[: q.steps - 1]:
        w = v.copy()
        w[:a] = 0.0
        if not w.any():
            return 0.0
        v = w @ P
    return float(v[q.destination])


def taboo_matrix(P, seq: Sequence[int], origin: int) -> np.ndarray:
    """Rows ``tau - 1`` hold ``taboo_prob(origin -> ., tau)`` for the whole sequence."""
    P = as_matrix(P)
    return np.array(list(censored_vectors(P, P[origin], seq)))


def sequence_terms(model: CostModel, P: np.ndarray, start: np.ndarray, seq: Sequence[int]):
    """Per-step censored cost and full-observation mass for a fixed sequence.

    Returns ``(cost, revealed)`` where ``cost[k]`` is the expected immediate
    cost of step ``k+1`` restricted to unobserved paths (undiscounted) and
    ``revealed[k]`` is the vector of probabilities of a full observation of
    each state on that step.
    """
    n = P.shape[0]
    C = cost_matrix(model, n)
    L = len(seq)
    cost = np.zeros(L)
    revealed = np.zeros((L, n))
    for k, v in enumerate(censored_vectors(P, start, seq)):
        a = seq[k]
        cost[k] = C[a] @ v
        revealed[k, :a] = v[:a]
        if not v[a:].any():
            break
    return cost, revealed


def gamma_cost(model: CostModel, P, anchor, seq: Sequence[int]) -> float:
    """Expected discounted cost from ``anchor`` up to the next full observation."""
    P = as_matrix(P)
    seq = tuple(int(a) for a in seq)
    expected = model.horizon - anchor.time
    if len(seq) != expected:
        raise StructuralError(f"sequence length {len(seq)}, expected {expected} for anchor {anchor}")
    if any(a < 0 or a >= P.shape[0] for a in seq):
        raise DomainError(f"action out of range in {seq}")
    cost, _ = sequence_terms(model, P, start_vector(P, anchor), seq)
    disc = model.beta ** np.arange(len(seq))
    return float(disc @ cost)
