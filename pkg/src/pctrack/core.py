"""Domain types, immediate costs and the myopic decision rule.

States of the tracked chain are the ordered integers ``0..M``. An action is
also a state: choosing an action above the true state over-utilizes (and
reveals the state), choosing one at or below it under-utilizes (and only
reveals that the state is at least the action).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence, Union

import numpy as np

BELIEF_TOL = 1e-9
ROW_SUM_TOL = 1e-9


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DegenerateModelError(DomainError):
    """Both cost coefficients are zero, so no threshold is defined."""


class StructuralError(ValueError):
    """A policy table is missing an anchor or has a malformed sequence."""


class BudgetExceededError(RuntimeError):
    """Exhaustive search would need more sequence evaluations than allowed."""

    def __init__(self, required: int, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(
            f"exhaustive search needs {required} sequence evaluations, "
            f"budget is {budget}"
        )


@dataclass(frozen=True)
class CostModel:
    c_u: float
    c_l: float
    beta: float
    horizon: int
    allow_degenerate: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        if self.c_u < 0 or self.c_l < 0:
            raise DomainError(f"cost coefficients must be nonnegative, got c_u={self.c_u}, c_l={self.c_l}")
        if self.c_u == 0 and self.c_l == 0 and not self.allow_degenerate:
            raise DegenerateModelError("c_u and c_l are both zero; pass allow_degenerate=True to build it anyway")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise DomainError(f"horizon must be a positive integer, got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def myopic_threshold(self) -> float:
        """h^m = c_l / (c_l + c_u)."""
        total = self.c_l + self.c_u
        if total == 0:
            raise DegenerateModelError("myopic threshold undefined when c_u = c_l = 0")
        return self.c_l / total

    def scaled(self, k: float) -> "CostModel":
        return replace(self, c_u=self.c_u * k, c_l=self.c_l * k)

    def with_(self, **changes) -> "CostModel":
        if changes.get("c_u", self.c_u) == 0 and changes.get("c_l", self.c_l) == 0:
            changes.setdefault("allow_degenerate", True)
        return replace(self, **changes)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class TransitionMatrix:
    """Row-stochastic matrix over the ordered states ``0..M``."""

    __slots__ = ("matrix",)

    def __init__(self, rows, tol: float = ROW_SUM_TOL):
        a = np.array(rows, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"transition matrix must be square, got shape {a.shape}")
        if a.shape[0] < 2:
            raise DomainError("transition matrix needs at least two states")
        if not np.all(np.isfinite(a)):
            raise DomainError("transition matrix has non-finite entries")
        bad = np.argwhere((a < 0) | (a > 1))
        if len(bad):
            i, j = bad[0]
            raise DomainError(f"row {i}, column {j}: entry {a[i, j]} outside [0, 1]")
        sums = a.sum(axis=1)
        off = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if len(off):
            i = off[0]
            raise DomainError(f"row {i} sums to {float(sums[i])!r}, not 1")
        self.matrix = _readonly(a)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    @property
    def M(self) -> int:
        return self.matrix.shape[0] - 1

    def row(self, i: int) -> np.ndarray:
        return self.matrix[i]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self):
        return f"TransitionMatrix({self.matrix.tolist()!r})"


class Belief:
    """Probability vector over the hidden state.

    Vectors whose sum is within ``BELIEF_TOL`` of one are renormalized;
    anything further off is rejected.
    """

    __slots__ = ("probs",)

    def __init__(self, probs, tol: float = BELIEF_TOL):
        b = np.array(probs, dtype=float).reshape(-1)
        if b.size < 1 or not np.all(np.isfinite(b)):
            raise DomainError("belief must be a nonempty finite vector")
        if np.any(b < 0):
            raise DomainError(f"belief has negative entries: {b.tolist()}")
        total = b.sum()
        if abs(total - 1.0) > tol:
            raise DomainError(f"belief sums to {float(total)!r}, not 1")
        if total != 1.0:
            b = b / total
        self.probs = _readonly(b)

    @classmethod
    def unit(cls, k: int, n_states: int) -> "Belief":
        b = np.zeros(n_states)
        b[k] = 1.0
        return cls(b)

    @classmethod
    def uniform(cls, n_states: int) -> "Belief":
        return cls(np.full(n_states, 1.0 / n_states))

    def __len__(self):
        return self.probs.size

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __repr__(self):
        return f"Belief({self.probs.tolist()!r})"


class ObservationAnchor(NamedTuple):
    """Last fully observed state and the time it was observed."""

    state: int
    time: int


@dataclass(frozen=True)
class InitialBelief:
    """Anchor for the phase before the first full observation.

    ``belief`` is the distribution of the state at time 0; the first decision
    is made at time 1.
    """

    belief: Belief
    time: int = 0


Anchor = Union[ObservationAnchor, InitialBelief]


@dataclass
class InitialEntry:
    belief: Belief
    sequence: tuple
    cost: float
    threshold: float | None = None


@dataclass
class PolicyTable:
    """Action sequences and cost-to-go for every anchor ``(s, t)``.

    ``costs[s, t]`` is W_t(s). ``sequences[(s, t)]`` has length ``T - t``;
    element ``tau - 1`` is played ``tau`` steps after the observation.
    """

    n_states: int
    horizon: int
    sequences: dict
    costs: np.ndarray
    label: str = "custom"
    initial: InitialEntry | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        T, n = self.horizon, self.n_states
        for s in range(n):
            for t in range(T):
                seq = self.sequences.get((s, t))
                if seq is None:
                    raise StructuralError(f"policy '{self.label}' has no sequence for anchor ({s}, {t})")
                if len(seq) != T - t:
                    raise StructuralError(
                        f"anchor ({s}, {t}): sequence length {len(seq)}, expected {T - t}"
                    )
                if any(a < 0 or a >= n for a in seq):
                    raise StructuralError(f"anchor ({s}, {t}): action out of range in {seq}")
        if self.costs.shape != (n, T):
            raise StructuralError(f"cost table shape {self.costs.shape}, expected {(n, T)}")

    def sequence(self, anchor) -> tuple:
        if isinstance(anchor, InitialBelief):
            if self.initial is None:
                raise StructuralError(f"policy '{self.label}' has no initial-belief sequence")
            return self.initial.sequence
        return self.sequences[(int(anchor[0]), int(anchor[1]))]

    def cost(self, anchor) -> float:
        if isinstance(anchor, InitialBelief):
            if self.initial is None:
                raise StructuralError(f"policy '{self.label}' has no initial-belief entry")
            return self.initial.cost
        return float(self.costs[anchor[0], anchor[1]])

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "n_states": self.n_states,
            "horizon": self.horizon,
            "sequences": [
                {"state": s, "time": t, "actions": list(map(int, self.sequences[(s, t)]))}
                for t in range(self.horizon)
                for s in range(self.n_states)
            ],
            "costs": self.costs.tolist(),
        }
        if self.initial is not None:
            out["initial"] = {
                "belief": self.initial.belief.probs.tolist(),
                "actions": list(map(int, self.initial.sequence)),
                "cost": self.initial.cost,
                "threshold": self.initial.threshold,
            }
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyTable":
        seqs = {(e["state"], e["time"]): tuple(e["actions"]) for e in d["sequences"]}
        init = None
        if d.get("initial"):
            e = d["initial"]
            init = InitialEntry(Belief(e["belief"]), tuple(e["actions"]), e["cost"], e.get("threshold"))
        return cls(d["n_states"], d["horizon"], seqs, np.array(d["costs"], dtype=float), d["label"], init)


def as_matrix(P) -> np.ndarray:
    if isinstance(P, TransitionMatrix):
        return P.matrix
    return TransitionMatrix(P).matrix


def as_belief(b) -> Belief:
    return b if isinstance(b, Belief) else Belief(b)


def immediate_cost(model: CostModel, actual: int, action: int, n_states: int | None = None) -> float:
    """Cost of playing ``action`` when the chain is in ``actual``."""
    for name, v in (("actual", actual), ("action", action)):
        if v < 0 or (n_states is not None and v >= n_states):
            raise DomainError(f"{name} state {v} out of range")
    if action > actual:
        return model.c_u * (action - actual)
    return model.c_l * (actual - action)


def cost_matrix(model: CostModel, n_states: int) -> np.ndarray:
    """``C[r, i]`` = immediate cost of action ``r`` when the state is ``i``."""
    r = np.arange(n_states)[:, None]
    i = np.arange(n_states)[None, :]
    return np.where(r > i, model.c_u * (r - i), model.c_l * (i - r)).astype(float)


def expected_immediate_cost(model: CostModel, belief, action: int) -> float:
    b = as_belief(belief).probs
    if not 0 <= action < b.size:
        raise DomainError(f"action {action} out of range")
    idx = np.arange(b.size)
    over = idx < action
    return float(
        model.c_l * np.sum(b[~over] * (idx[~over] - action))
        + model.c_u * np.sum(b[over] * (action - idx[over]))
    )


def percentile_action(weights: np.ndarray, h: float) -> int:
    """Smallest r whose normalized cumulative weight reaches ``h``.

    ``weights`` need not be normalized; the denominator is the running sum's
    last entry so the ratio hits exactly 1 at the last state carrying mass.
    Returns the top state when ``weights`` has no mass.
    """
    cum = np.cumsum(weights)
    total = cum[-1]
    if total <= 0:
        return len(weights) - 1
    hits = np.flatnonzero(cum / total >= h)
    return int(hits[0]) if hits.size else len(weights) - 1


def percentile_actions(V: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Row-wise :func:`percentile_action` for a stack of weight vectors."""
    cum = np.cumsum(V, axis=1)
    total = cum[:, -1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = (cum / total) >= h[:, None]
    last = V.shape[1] - 1
    r = np.where(ok.any(axis=1), ok.argmax(axis=1), last)
    r[total[:, 0] <= 0] = last
    return r


def myopic_action(model: CostModel, belief) -> int:
    """Action minimizing expected immediate cost, smallest on ties."""
    b = as_belief(belief).probs
    return percentile_action(b, model.myopic_threshold)


def validate_sequence(seq: Sequence[int], n_states: int, length: int | None = None) -> tuple:
    seq = tuple(int(a) for a in seq)
    if length is not None and len(seq) != length:
        raise StructuralError(f"sequence length {len(seq)}, expected {length}")
    if any(a < 0 or a >= n_states for a in seq):
        raise DomainError(f"action out of range in {seq}")
    return seq
