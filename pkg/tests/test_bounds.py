import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from instances import random_belief, random_matrix
from pctrack.belief_dp import BeliefDP
from pctrack.core import CostModel, InitialBelief, expected_immediate_cost, myopic_action
from pctrack.matrices import tridiagonal_eps
from pctrack.optimal_dp import best_initial_sequence, solve_optimal
from pctrack.percentile import frp_with_initial_belief, myopic_policy, solve_frp
from pctrack.bounds import cost_ratio, fo_immediate, fo_initial, fo_lower_bound, gap_report


def test_identity_gives_zero():
    assert np.all(fo_lower_bound(CostModel(2, 1, 1, 6), np.eye(4)) == 0)


def test_zero_costs(match_chain):
    assert np.all(fo_lower_bound(CostModel(0, 0, 1, 4, allow_degenerate=True), match_chain) == 0)


def test_terminal_column_is_myopic_cost(split_chain):
    m = CostModel(5, 1, 0.6, 4)
    W = fo_lower_bound(m, split_chain)
    for s in range(3):
        assert W[s, 3] == pytest.approx(expected_immediate_cost(m, split_chain[s], myopic_action(m, split_chain[s])))


def test_immediate_term_ignores_discount(split_chain):
    a = fo_immediate(CostModel(5, 1, 0.2, 4), split_chain)
    b = fo_immediate(CostModel(5, 1, 1.0, 4), split_chain)
    assert np.array_equal(a, b)


def test_below_optimal_on_matching_chain(match_chain):
    m = CostModel(1, 1, 1, 7)
    assert np.all(fo_lower_bound(m, match_chain)[:, 0] <= solve_optimal(m, match_chain).costs[:, 0] + 1e-12)


@given(st.integers(0, 2**32 - 1))
def test_sandwich(seed):
    rng = np.random.default_rng(seed)
    n, T = int(rng.integers(2, 5)), int(rng.integers(1, 6))
    P = random_matrix(rng, n)
    m = CostModel(*rng.uniform(0.1, 5, 2), float(rng.uniform(0, 1)), T)
    fo = fo_lower_bound(m, P)
    opt = solve_optimal(m, P).costs
    frp = solve_frp(m, P, 0.05)[1].costs
    my = myopic_policy(m, P).costs
    tol = 1e-9
    assert np.all(fo <= opt + tol) and np.all(opt <= frp + tol) and np.all(frp <= my + tol)


@given(st.integers(0, 2**32 - 1))
def test_initial_belief_bound(seed):
    rng = np.random.default_rng(seed)
    n, T = int(rng.integers(2, 4)), int(rng.integers(1, 5))
    P = random_matrix(rng, n)
    m = CostModel(*rng.uniform(0.1, 5, 2), float(rng.uniform(0, 1)), T)
    b0 = random_belief(rng, n)
    lower = fo_initial(m, P, b0)
    opt = BeliefDP(m, P).initial_value(b0)[0]
    seq_opt = best_initial_sequence(m, P, b0, solve_optimal(m, P).costs)[1]
    assert lower <= opt + 1e-9
    assert opt == pytest.approx(seq_opt, abs=1e-9)


def test_fo_initial_unit_belief_is_anchor_value(match_chain):
    m = CostModel(2, 1, 0.9, 5)
    fo = fo_lower_bound(m, match_chain)
    for s in range(3):
        assert fo_initial(m, match_chain, np.eye(3)[s], fo) == pytest.approx(fo[s, 0], abs=1e-14)


class TestRatio:
    def test_conventions(self):
        assert cost_ratio(0.0, 0.0) == 1.0
        assert cost_ratio(1.0, 0.0) == math.inf
        assert cost_ratio(3.0, 2.0) == 1.5

    def test_default_experiment_point(self):
        m = CostModel(5, 1, 1, 7)
        P = tridiagonal_eps(4, 0.3)
        _, frp = solve_frp(m, P)
        assert gap_report(frp, fo_lower_bound(m, P), (0, 0)) == pytest.approx(1.35, abs=0.05)

    def test_zero_cost_case(self):
        m = CostModel(1, 1, 1, 4)
        _, frp = solve_frp(m, np.eye(3))
        assert gap_report(frp, fo_lower_bound(m, np.eye(3)), (1, 0)) == 1.0

    def test_myopic_ratio_at_least_frp(self, split_chain):
        m = CostModel(5, 1, 1, 7)
        fo = fo_lower_bound(m, split_chain)
        _, frp = solve_frp(m, split_chain)
        my = myopic_policy(m, split_chain)
        for s in range(3):
            assert gap_report(my, fo, (s, 0)) >= gap_report(frp, fo, (s, 0)) - 1e-12

    def test_initial_belief_needs_bound(self, match_chain):
        m = CostModel(1, 1, 1, 4)
        b0 = np.full(3, 1 / 3)
        th, frp = solve_frp(m, match_chain)
        frp_with_initial_belief(m, match_chain, b0, frp=(th, frp))
        start = InitialBelief(frp.initial.belief)
        with pytest.raises(ValueError):
            gap_report(frp, fo_lower_bound(m, match_chain), start)
        r = gap_report(frp, fo_lower_bound(m, match_chain), start, fo_b0=fo_initial(m, match_chain, b0))
        assert r >= 1 - 1e-12
