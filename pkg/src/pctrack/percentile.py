"""Percentile policies: threshold-driven sequences, myopic and FRP.

A percentile policy plays, at each step after an observation, the smallest
state whose share of the surviving (still unobserved) probability mass
reaches a fixed threshold ``h``. One threshold per anchor. FRP picks each
anchor's threshold from a finite grid so as to minimize its cost-to-go,
working backward in time.

All candidate thresholds of one anchor are propagated together as rows of a
single array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    CostModel,
    DomainError,
    InitialBelief,
    InitialEntry,
    PolicyTable,
    as_belief,
    as_matrix,
    cost_matrix,
    percentile_actions,
)
from .taboo import start_vector

DEFAULT_RESOLUTION = 0.01
TIE_RTOL = 1e-12


@dataclass
class ThresholdTable:
    """Per-anchor thresholds ``h[s, t]`` plus an optional initial-belief one."""

    thresholds: np.ndarray
    resolution: tuple | None = None
    initial: float | None = None

    def __post_init__(self):
        h = np.asarray(self.thresholds, dtype=float)
        if h.ndim != 2:
            raise DomainError("threshold table must be 2-D (states x times)")
        if np.any((h < 0) | (h > 1)) or (self.initial is not None and not 0 <= self.initial <= 1):
            raise DomainError("thresholds must lie in [0, 1]")
        self.thresholds = h

    @classmethod
    def constant(cls, n_states: int, horizon: int, h: float, initial: float | None = None) -> "ThresholdTable":
        return cls(np.full((n_states, horizon), float(h)), initial=initial)


@dataclass
class WorkCounter:
    ops: int = 0


class InitialResult(NamedTuple):
    threshold: float
    sequence: tuple
    cost: float


def resolution_set(delta: float, h_m: float | None = None) -> tuple:
    """``{0, delta, 2 delta, ..., 1}`` in ascending order, then ``h_m``."""
    if not 0 < delta <= 1:
        raise DomainError(f"resolution must lie in (0, 1], got {delta}")
    k = round(1 / delta)
    if abs(k * delta - 1) < 1e-9:
        grid = [i / k for i in range(k + 1)]
    else:
        grid = [i * delta for i in range(int(np.floor(1 / delta)) + 1)]
        if grid[-1] < 1:
            grid.append(1.0)
    if h_m is not None:
        grid.append(float(h_m))
    return tuple(grid)


def _scan(model: CostModel, P: np.ndarray, C: np.ndarray, start: np.ndarray, t: int,
          W: np.ndarray, hs: np.ndarray, counter: WorkCounter | None = None):
    """Cost-to-go and sequence for each threshold in ``hs`` from one start vector.

    ``V`` holds, per threshold, the unnormalized surviving vector: the
    normalized belief times the survivor mass.
    """
    n = P.shape[0]
    L = model.horizon - t
    K = len(hs)
    idx = np.arange(n)
    V = np.tile(start, (K, 1))
    acts = np.empty((K, L), dtype=int)
    w = np.zeros(K)
    for k in range(1, L + 1):
        r = percentile_actions(V, hs)
        acts[:, k - 1] = r
        w += model.beta ** (k - 1) * np.einsum("ki,ki->k", C[r], V)
        if counter is not None:
            counter.ops += K * n * n
        if k < L:
            below = idx[None, :] < r[:, None]
            w += model.beta ** k * ((V * below) @ W[:, t + k])
            V = np.where(below, 0.0, V) @ P
    return w, acts


def _pick(w: np.ndarray) -> int:
    """Last minimal candidate in scan order."""
    best = w.min()
    return int(np.flatnonzero(w <= best + TIE_RTOL * max(1.0, abs(best)))[-1])


def sequence_from_threshold(model: CostModel, P, anchor, h: float) -> tuple:
    P = as_matrix(P)
    if not 0 <= h <= 1:
        raise DomainError(f"threshold must lie in [0, 1], got {h}")
    t = anchor.time
    if not 0 <= t < model.horizon:
        raise DomainError(f"anchor time {t} outside 0..{model.horizon - 1}")
    if not isinstance(anchor, InitialBelief) and not 0 <= anchor.state < P.shape[0]:
        raise DomainError(f"anchor state {anchor.state} out of range")
    W = np.zeros((P.shape[0], model.horizon))
    _, acts = _scan(model, P, cost_matrix(model, P.shape[0]), start_vector(P, anchor), t, W, np.array([h]))
    return tuple(int(a) for a in acts[0])


def evaluate_percentile(model: CostModel, P, thresholds: ThresholdTable, b0=None,
                        label: str = "percentile") -> PolicyTable:
    """Sequences and W for fixed thresholds (one backward pass).

    With ``b0`` and ``thresholds.initial`` set, the initial-belief entry is
    filled too.
    """
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    h = thresholds.thresholds
    if h.shape != (n, T):
        raise DomainError(f"threshold table shape {h.shape}, expected {(n, T)}")
    C = cost_matrix(model, n)
    W = np.zeros((n, T))
    seqs = {}
    for t in range(T - 1, -1, -1):
        for s in range(n):
            w, acts = _scan(model, P, C, P[s], t, W, h[s, t : t + 1])
            W[s, t] = w[0]
            seqs[(s, t)] = tuple(int(a) for a in acts[0])
    table = PolicyTable(n, T, seqs, W, label=label)
    if b0 is not None:
        if thresholds.initial is None:
            raise DomainError("initial belief given but the threshold table has no initial threshold")
        b0 = as_belief(b0)
        w, acts = _scan(model, P, C, b0.probs @ P, 0, W, np.array([thresholds.initial]))
        table.initial = InitialEntry(b0, tuple(int(a) for a in acts[0]), float(w[0]), thresholds.initial)
    return table


def myopic_policy(model: CostModel, P, b0=None) -> PolicyTable:
    P = as_matrix(P)
    h_m = model.myopic_threshold
    th = ThresholdTable.constant(P.shape[0], model.horizon, h_m, initial=h_m if b0 is not None else None)
    return evaluate_percentile(model, P, th, b0=b0, label="myopic")


def solve_frp(model: CostModel, P, resolution: float = DEFAULT_RESOLUTION,
              counter: WorkCounter | None = None) -> tuple[ThresholdTable, PolicyTable]:
    """Finite-resolution percentile policy.

    Each anchor scans ``resolution_set(resolution, h_m)`` and keeps the
    threshold with the lowest cost-to-go; among equal costs the one scanned
    last wins.
    """
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    H = resolution_set(resolution, model.myopic_threshold)
    hs = np.array(H)
    C = cost_matrix(model, n)
    W = np.zeros((n, T))
    chosen = np.zeros((n, T))
    seqs = {}
    for t in range(T - 1, -1, -1):
        for s in range(n):
            w, acts = _scan(model, P, C, P[s], t, W, hs, counter)
            j = _pick(w)
            W[s, t] = w[j]
            chosen[s, t] = hs[j]
            seqs[(s, t)] = tuple(int(a) for a in acts[j])
    return ThresholdTable(chosen, resolution=H), PolicyTable(n, T, seqs, W, label="frp")


def frp_with_initial_belief(model: CostModel, P, b0, resolution: float = DEFAULT_RESOLUTION,
                            frp: tuple[ThresholdTable, PolicyTable] | None = None) -> InitialResult:
    """Best initial-phase threshold for a belief ``b0`` over the time-0 state.

    The anchored part of the policy is the FRP solution (computed here unless
    passed in as ``frp``).
    """
    P = as_matrix(P)
    b0 = as_belief(b0)
    if frp is None:
        frp = solve_frp(model, P, resolution)
    thresholds, table = frp
    hs = np.array(thresholds.resolution or resolution_set(resolution, model.myopic_threshold))
    w, acts = _scan(model, P, cost_matrix(model, P.shape[0]), b0.probs @ P, 0, table.costs, hs)
    j = _pick(w)
    result = InitialResult(float(hs[j]), tuple(int(a) for a in acts[j]), float(w[j]))
    thresholds.initial = result.threshold
    table.initial = InitialEntry(b0, result.sequence, result.cost, result.threshold)
    return result
