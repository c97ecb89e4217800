"""Tracking a hidden Markov chain under one-sided (censored) observations.

Each step the tracker names a state; naming one above the true state costs
``c_u`` per unit and reveals the state, naming one at or below it costs
``c_l`` per unit and only reveals that the state is at least that high.
"""

from .belief_dp import PARTIAL, BeliefDP, Full, Partial, belief_update, belief_value, censor
from .bounds import cost_ratio, fo_immediate, fo_initial, fo_lower_bound, gap_report
from .core import (
    Belief,
    BudgetExceededError,
    CostModel,
    DegenerateModelError,
    DomainError,
    InitialBelief,
    InitialEntry,
    ObservationAnchor,
    PolicyTable,
    StructuralError,
    TransitionMatrix,
    cost_matrix,
    expected_immediate_cost,
    immediate_cost,
    myopic_action,
    percentile_action,
)
from .matrices import banded_20, format_matrix, from_descriptor, load_matrix, parse_matrix, tridiagonal_eps
from .optimal_dp import best_initial_sequence, required_evaluations, solve_optimal, special_case_policy
from .percentile import (
    ThresholdTable,
    evaluate_percentile,
    frp_with_initial_belief,
    myopic_policy,
    resolution_set,
    sequence_from_threshold,
    solve_frp,
)
from .policy_eval import evaluate_policy, evaluate_with_initial_belief
from .simulator import simulate, write_trace
from .taboo import TabooQuery, gamma_cost, taboo_matrix, taboo_prob

__version__ = "0.1.0"
