"""Exact expected cost of a policy table via the renewal recursion.

Each full observation restarts the process at a new anchor, so the cost of
anchor ``(s, t)`` is the censored cost of its own sequence plus the
discounted cost-to-go of every anchor it can hand over to. The table is
filled backward in ``t``.
"""

from __future__ import annotations

import numpy as np

from .core import (
    CostModel,
    InitialBelief,
    PolicyTable,
    StructuralError,
    as_belief,
    as_matrix,
    validate_sequence,
)
from .taboo import sequence_terms, start_vector


def anchor_cost(model: CostModel, P: np.ndarray, start: np.ndarray, seq, t: int, W: np.ndarray) -> float:
    """Cost-to-go of one sequence started at time ``t`` given later ``W`` columns.

    Observations at the final step hand over to nothing, so the renewal sum
    stops at ``tau = T - t - 1``.
    """
    cost, revealed = sequence_terms(model, P, start, seq)
    L = len(seq)
    disc = model.beta ** np.arange(L + 1)
    total = float(disc[:L] @ cost)
    for tau in range(1, L):
        total += disc[tau] * float(revealed[tau - 1] @ W[:, t + tau])
    return total


def evaluate_policy(model: CostModel, P, policy: PolicyTable) -> np.ndarray:
    """Return the ``(M+1, T)`` table of W_t(s) for ``policy``."""
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    if policy.n_states != n or policy.horizon != T:
        raise StructuralError(
            f"policy is for {policy.n_states} states / horizon {policy.horizon}, "
            f"instance has {n} / {T}"
        )
    W = np.zeros((n, T))
    for t in range(T - 1, -1, -1):
        for s in range(n):
            try:
                seq = policy.sequences[(s, t)]
            except KeyError:
                raise StructuralError(f"policy '{policy.label}' has no sequence for anchor ({s}, {t})") from None
            seq = validate_sequence(seq, n, T - t)
            W[s, t] = anchor_cost(model, P, P[s], seq, t, W)
    return W


def evaluate_with_initial_belief(model: CostModel, P, policy: PolicyTable, b0, init_seq, W=None) -> float:
    """Expected cost when only a belief ``b0`` about the time-0 state is known.

    ``init_seq`` (length T) is played until the first full observation, after
    which the policy's anchored sequences take over.
    """
    P = as_matrix(P)
    b0 = as_belief(b0)
    T = model.horizon
    init_seq = validate_sequence(init_seq, P.shape[0], T)
    if W is None:
        W = evaluate_policy(model, P, policy)
    # b0 mixes linearly through the censored propagation
    return anchor_cost(model, P, start_vector(P, InitialBelief(b0)), init_seq, 0, W)
