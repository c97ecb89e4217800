"""Lower bound from a genie that sees the true state one step late.

Knowing the previous state exactly, the genie's best move is the myopic
action on the corresponding row of ``P``; its cost-to-go is a plain Markov
reward recursion and never exceeds the optimal cost.
"""

from __future__ import annotations

import math

import numpy as np

from .core import CostModel, InitialBelief, PolicyTable, as_belief, as_matrix, cost_matrix, percentile_action


def fo_immediate(model: CostModel, P) -> np.ndarray:
    """Genie's expected immediate cost after observing each state."""
    P = as_matrix(P)
    n = P.shape[0]
    if model.c_u == 0 and model.c_l == 0:
        return np.zeros(n)
    C = cost_matrix(model, n)
    h = model.myopic_threshold
    return np.array([C[percentile_action(P[s], h)] @ P[s] for s in range(n)])


def fo_lower_bound(model: CostModel, P) -> np.ndarray:
    """``(M+1, T)`` table of the genie's cost-to-go W^FO_t(s)."""
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    imm = fo_immediate(model, P)
    W = np.zeros((n, T))
    W[:, T - 1] = imm
    for t in range(T - 2, -1, -1):
        W[:, t] = imm + model.beta * (P @ W[:, t + 1])
    return W


def fo_initial(model: CostModel, P, b0, fo: np.ndarray | None = None) -> float:
    """Genie bound when the time-0 state is only known through ``b0``.

    Same belief as the policy at the first decision: the genie plays myopic
    on ``b0 P`` and from then on sees each state one step late.
    """
    P = as_matrix(P)
    if fo is None:
        fo = fo_lower_bound(model, P)
    b1 = as_belief(b0).probs @ P
    first = 0.0
    if model.c_u > 0 or model.c_l > 0:
        first = float(cost_matrix(model, P.shape[0])[percentile_action(b1, model.myopic_threshold)] @ b1)
    if model.horizon == 1:
        return first
    return first + model.beta * float(b1 @ fo[:, 1])


def cost_ratio(policy_cost: float, fo_cost: float) -> float:
    """``policy_cost / fo_cost`` with 0/0 -> 1 and x/0 -> inf."""
    if fo_cost == 0:
        return 1.0 if policy_cost == 0 else math.inf
    return policy_cost / fo_cost


def gap_report(policy: PolicyTable, fo: np.ndarray, start=(0, 0), fo_b0: float | None = None) -> float:
    """Ratio of the policy's cost to the genie bound at ``start``.

    ``start`` is an ``(s, t)`` anchor or an :class:`InitialBelief`; the latter
    needs ``policy.initial`` and the genie value ``fo_b0`` (see :func:`fo_initial`).
    """
    if isinstance(start, InitialBelief):
        if fo_b0 is None:
            raise ValueError("fo_b0 is required for an initial-belief start")
        return cost_ratio(policy.cost(start), fo_b0)
    s, t = start
    return cost_ratio(float(policy.costs[s, t]), float(fo[s, t]))
