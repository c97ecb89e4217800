"""Monte Carlo sample paths of the censored tracking process.

Path ``i`` draws all of its uniforms from
``Generator(PCG64(SeedSequence(seed, spawn_key=(i,))))``, which is the stream
``SeedSequence(seed).spawn(n)[i]`` would give. Results therefore do not
depend on how paths are split across workers.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainError,
    InitialBelief,
    PolicyTable,
    StructuralError,
    as_matrix,
    cost_matrix,
)

TRACE_FIELDS = (
    "path_id", "t", "state", "action", "observation_kind", "cost", "anchor_state", "anchor_time",
)


@dataclass
class SamplePath:
    path_id: int
    times: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    full: np.ndarray  # True where the action overshot and revealed the state
    costs: np.ndarray  # discounted
    anchor_states: np.ndarray  # -1 marks the initial-belief phase
    anchor_times: np.ndarray

    @property
    def total(self) -> float:
        return float(self.costs.sum())


@dataclass
class SimulationResult:
    mean: float
    stderr: float
    n_paths: int
    path_costs: np.ndarray
    traces: list | None = None


def path_uniforms(seed: int, ids, width: int) -> np.ndarray:
    """Uniforms per path id; column 0 draws the time-0 state, column k the step-k move."""
    U = np.empty((len(ids), width))
    for row, i in enumerate(ids):
        g = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(int(i),))))
        U[row] = g.random(width)
    return U


def _inverse_cdf(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum((cum <= u[:, None]).sum(axis=1), cum.shape[1] - 1)


def _cumulative(rows: np.ndarray) -> np.ndarray:
    cum = np.cumsum(rows, axis=-1)
    # exact 1.0 at the last state with mass, so zero-probability tails are never drawn
    return cum / cum[..., -1:]


def _action_array(policy: PolicyTable, n: int, T: int, with_initial: bool) -> np.ndarray:
    A = np.zeros((n + 1, T, T), dtype=np.int64)
    for s in range(n):
        for t in range(T):
            seq = policy.sequences.get((s, t))
            if seq is None:
                raise StructuralError(f"policy '{policy.label}' has no sequence for anchor ({s}, {t})")
            A[s, t, : T - t] = seq
    if with_initial:
        if policy.initial is None:
            raise StructuralError(f"policy '{policy.label}' has no initial-belief sequence")
        A[n, 0, :] = policy.initial.sequence
    return A


def _run_block(args):
    P, C, A, beta, T, start_state, start_time, b0, seed, ids, want_trace = args
    n = P.shape[0]
    steps = T - start_time
    U = path_uniforms(seed, ids, T + 1)
    m = len(ids)
    cumP = _cumulative(P)
    if b0 is not None:
        prev = _inverse_cdf(np.tile(_cumulative(b0), (m, 1)), U[:, 0])
        anc_s = np.full(m, n)
    else:
        prev = np.full(m, start_state)
        anc_s = np.full(m, start_state)
    anc_t = np.full(m, start_time)
    total = np.zeros(m)
    rec = np.zeros((6, steps, m)) if want_trace else None
    for j, k in enumerate(range(start_time + 1, T + 1)):
        B = _inverse_cdf(cumP[prev], U[:, k])
        act = A[anc_s, anc_t, k - anc_t - 1]
        c = beta ** j * C[act, B]
        total += c
        full = act > B
        if want_trace:
            rec[:, j] = (B, act, full, c, np.where(anc_s == n, -1, anc_s), anc_t)
        anc_s = np.where(full, B, anc_s)
        anc_t = np.where(full, k, anc_t)
        prev = B
    traces = None
    if want_trace:
        times = np.arange(start_time + 1, T + 1)
        traces = [
            SamplePath(int(ids[p]), times, rec[0, :, p].astype(int), rec[1, :, p].astype(int),
                       rec[2, :, p].astype(bool), rec[3, :, p].copy(), rec[4, :, p].astype(int),
                       rec[5, :, p].astype(int))
            for p in range(m)
        ]
    return total, traces


def simulate(model, P, policy: PolicyTable, start, n_paths: int, seed: int,
             trace: bool = False, workers: int = 1, block: int = 20000) -> SimulationResult:
    """Estimate a policy's expected discounted cost from ``start``.

    ``start`` is an ``(s, t)`` anchor or an :class:`InitialBelief`. Costs are
    discounted relative to the first decision after ``start``, so the mean
    estimates ``W_t(s)`` (or the initial-belief cost).
    """
    P = as_matrix(P)
    n, T = P.shape[0], model.horizon
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    b0 = None
    if isinstance(start, InitialBelief):
        b0 = start.belief.probs
        s0, t0 = 0, 0
    else:
        s0, t0 = int(start[0]), int(start[1])
        if not (0 <= s0 < n and 0 <= t0 < T):
            raise DomainError(f"start anchor {start} out of range")
    A = _action_array(policy, n, T, b0 is not None)
    C = cost_matrix(model, n)
    blocks = [np.arange(a, min(a + block, n_paths)) for a in range(0, n_paths, block)]
    jobs = [(P, C, A, model.beta, T, s0, t0, b0, seed, ids, trace) for ids in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_block, jobs))
    else:
        results = [_run_block(j) for j in jobs]
    costs = np.concatenate([r[0] for r in results])
    traces = [p for r in results for p in r[1]] if trace else None
    se = float(costs.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else float("nan")
    return SimulationResult(float(costs.mean()), se, n_paths, costs, traces)


def write_trace(paths, fh) -> None:
    """One CSV row per step, header first."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_FIELDS)
    for p in paths:
        for j in range(len(p.times)):
            a_s = "b0" if p.anchor_states[j] < 0 else int(p.anchor_states[j])
            w.writerow((p.path_id, int(p.times[j]), int(p.states[j]), int(p.actions[j]),
                        "full" if p.full[j] else "partial", repr(float(p.costs[j])), a_s,
                        int(p.anchor_times[j])))


def trace_text(paths) -> str:
    buf = io.StringIO()
    write_trace(paths, buf)
    return buf.getvalue()
