"""Exhaustive sequence-space dynamic program and closed-form special cases.

For every anchor ``(s, t)``, backward in ``t``, all ``(M+1)**(T-t)`` action
sequences are scored against the already solved later anchors. Sequences
sharing a prefix share their censored propagation: the search tree is
expanded one level at a time with every prefix at that level held in one
array, in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetExceededError,
    CostModel,
    PolicyTable,
    as_matrix,
    as_belief,
    cost_matrix,
)
from .percentile import ThresholdTable, evaluate_percentile
from .policy_eval import evaluate_policy

DEFAULT_BUDGET = 10**8
TIE_RTOL = 1e-12


@dataclass
class WorkCounter:
    sequences: int = 0
    nodes: int = 0


def required_evaluations(n_states: int, horizon: int) -> int:
    """Number of sequences the exhaustive search scores, summed over anchors."""
    return n_states * sum(n_states ** (horizon - t) for t in range(horizon))


def _index_to_sequence(idx: int, n: int, L: int) -> tuple:
    digits = []
    for _ in range(L):
        idx, d = divmod(idx, n)
        digits.append(d)
    return tuple(reversed(digits))


def _best_sequence(model: CostModel, P: np.ndarray, C: np.ndarray, start: np.ndarray,
                   t: int, W: np.ndarray, counter: WorkCounter) -> tuple[tuple, float]:
    n = P.shape[0]
    L = model.horizon - t
    beta = model.beta
    below = np.tril(np.ones((n, n)), -1)  # below[r, i] = 1 when i < r
    V = start[None, :]
    acc = np.zeros(1)
    for k in range(1, L + 1):
        # step cost for every (prefix, action) pair, prefix-major
        step = V @ C.T * beta ** (k - 1)
        if k < L:
            step = step + beta ** k * (V @ (below * W[:, t + k][None, :]).T)
        acc = (acc[:, None] + step).reshape(-1)
        counter.nodes += acc.size
        if k < L:
            keep = 1.0 - below  # keep[r, i] = 1 when i >= r
            V = ((V[:, None, :] * keep[None, :, :]) @ P).reshape(-1, n)
    counter.sequences += acc.size
    best = acc.min()
    idx = int(np.flatnonzero(acc <= best + TIE_RTOL * max(1.0, abs(best)))[0])
    return _index_to_sequence(idx, n, L), float(acc[idx])


def solve_optimal(model: CostModel, P, budget: int = DEFAULT_BUDGET,
                  counter: WorkCounter | None = None) -> PolicyTable:
    """Optimal policy table by exhaustive search over sequences.

    Raises :class:`BudgetExceededError` before doing any work when the total
    number of sequence evaluations would exceed ``budget``.
    """
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    need = required_evaluations(n, T)
    if need > budget:
        raise BudgetExceededError(need, budget)
    counter = counter if counter is not None else WorkCounter()
    C = cost_matrix(model, n)
    W = np.zeros((n, T))
    seqs = {}
    for t in range(T - 1, -1, -1):
        for s in range(n):
            seq, w = _best_sequence(model, P, C, P[s], t, W, counter)
            seqs[(s, t)] = seq
            W[s, t] = w
    return PolicyTable(n, T, seqs, W, label="optimal")


def best_initial_sequence(model: CostModel, P, b0, W: np.ndarray) -> tuple[tuple, float]:
    """Best length-T sequence before the first observation, given anchored costs ``W``."""
    P = as_matrix(P)
    start = as_belief(b0).probs @ P
    return _best_sequence(model, P, cost_matrix(model, P.shape[0]), start, 0, W, WorkCounter())


def _is_unit_rows(P: np.ndarray) -> bool:
    return bool(np.all((P == 0) | (P == 1)) and np.all(P.sum(axis=1) == 1))


def special_case_policy(model: CostModel, P) -> PolicyTable | None:
    """Closed-form optimal table when the instance is trivially solvable.

    Recognized cases: ``c_l = 0`` (always play 0), ``c_u = 0`` (always play
    M), deterministic rows (follow the known trajectory), identical rows and
    ``beta = 0`` (myopic on the propagated belief). Returns ``None`` otherwise.
    """
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    seqs = {}
    if model.c_l == 0 or model.c_u == 0:
        a = 0 if model.c_l == 0 else n - 1
        for s in range(n):
            for t in range(T):
                seqs[(s, t)] = (a,) * (T - t)
        return PolicyTable(n, T, seqs, np.zeros((n, T)), label="special:zero-cost")
    if _is_unit_rows(P):
        nxt = P.argmax(axis=1)
        for s in range(n):
            path, x = [], s
            for _ in range(T):
                x = int(nxt[x])
                path.append(x)
            for t in range(T):
                seqs[(s, t)] = tuple(path[: T - t])
        return PolicyTable(n, T, seqs, np.zeros((n, T)), label="special:deterministic")
    if np.all(P == P[0]) or model.beta == 0:
        table = evaluate_percentile(model, P, ThresholdTable.constant(n, T, model.myopic_threshold))
        label = "special:iid" if np.all(P == P[0]) else "special:zero-discount"
        table.label = label
        table.costs = evaluate_policy(model, P, table)
        return table
    return None
