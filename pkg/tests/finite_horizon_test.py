""" Testing `finite_horizon.py` elements. """

import numpy as np
import pytest

from ..mdp_core import MdpModel, PreconditionError, STAY, TOGGLE
from ..finite_horizon import *
from .helpers import random_model, single_action_model


def test_stay_values(toggle, stay2):
    values = evaluate_policy(toggle, stay2)
    assert np.array_equal(values.row(0), [0.0, 0.0])
    assert np.array_equal(values.row(1), [0.0, 2.0])
    assert np.array_equal(values.row(2), [0.0, 3.0])
    assert values.horizon == 2


def test_zero_rewards_give_zero_values():
    model = single_action_model([0.0, 0.0], [[0.5, 0.5], [1.0, 0.0]])
    values = evaluate_policy(model, constant_policy(model, 4))
    assert not values.values.any()


def test_horizon_mismatch(toggle, stay2):
    with pytest.raises(PreconditionError):
        evaluate_policy(toggle, stay2, horizon=3)


def test_inadmissible_policy(toggle):
    with pytest.raises(PreconditionError):
        evaluate_policy(toggle, FiniteHorizonPolicy([[0, 2]]))
    with pytest.raises(PreconditionError):
        FiniteHorizonPolicy([0, 1])


def test_q_value(toggle):
    assert q_value(toggle, 0, TOGGLE, [1.0, 2.0]) == 2.0
    assert q_value(toggle, 1, STAY, [0.0, 0.0]) == 2.0
    with pytest.raises(PreconditionError):
        q_value(toggle, 0, 5, [0.0, 0.0])


def test_bellman_backup(toggle):
    row, greedy = bellman_backup(toggle, np.zeros(2))
    assert np.array_equal(row, [1.0, 2.0])
    assert list(greedy) == [TOGGLE, STAY]
    row, _ = bellman_backup(toggle, row)
    assert np.array_equal(row, [2.0, 3.0])


def test_backup_ties_go_to_smallest_action():
    tie = MdpModel.from_lists([[1.0, 1.0]], [[[1.0], [1.0]]], gamma=0.5)
    _, greedy = bellman_backup(tie, np.zeros(1))
    assert list(greedy) == [0]


def test_backward_induction(toggle):
    values, policy = backward_induction(toggle, 2)
    assert np.array_equal(values.row(1), [1.0, 2.0])
    assert np.array_equal(values.row(2), [2.0, 3.0])
    assert list(policy.level(1)) == [TOGGLE, STAY]
    assert list(policy.level(2)) == [TOGGLE, STAY]
    values, _ = backward_induction(toggle, 3)
    assert np.allclose(values.top(), [2.5, 3.5])


def test_one_step_problem():
    model = random_model(5, states=4, actions=3)
    values, _ = backward_induction(model, 1)
    assert np.array_equal(values.top(), model.rewards.max(axis=1))


def test_optimal_policy_evaluates_to_its_table():
    model = random_model(2, states=5, actions=3)
    values, policy = backward_induction(model, 4)
    assert evaluate_policy(model, policy) == values


def test_bad_horizon(toggle):
    with pytest.raises(PreconditionError):
        backward_induction(toggle, 0)


def test_switchable_actions(toggle, stay2):
    values = evaluate_policy(toggle, stay2)
    assert switchable_actions(toggle, values, 0, 1) == {TOGGLE}
    assert switchable_actions(toggle, values, 1, 1) == frozenset()
    with pytest.raises(PreconditionError):
        switchable_actions(toggle, values, 0, 3)


def test_optimal_has_nothing_switchable():
    model = random_model(8, states=5, actions=3)
    values, policy = backward_induction(model, 3)
    masks = switchable_masks(model, values)
    assert not masks.any()
    assert improvable_set(model, policy) == frozenset()


def test_improvable_set(toggle, stay2):
    assert improvable_set(toggle, stay2) == {ImprovablePair(1, 0),
                                             ImprovablePair(2, 0)}
    assert improvable_set(toggle, stay2, restrict_to_state=1) == frozenset()
    assert improvable_set(toggle, stay2, restrict_to_state=0) == \
        improvable_set(toggle, stay2)


def test_strictly_improves(toggle, stay2):
    switched = stay2.with_column(0, [TOGGLE, TOGGLE])
    _, optimal = backward_induction(toggle, 2)
    assert strictly_improves(toggle, switched, stay2)
    assert not strictly_improves(toggle, stay2, stay2)
    assert not strictly_improves(toggle, stay2, optimal)


def test_policy_accessors(stay2):
    changed = stay2.with_entry(2, 1, TOGGLE)
    assert list(changed.first_entry()) == [STAY, TOGGLE]
    assert list(changed.column(1)) == [STAY, TOGGLE]
    assert changed != stay2
    assert stay2 == stay2.with_entry(1, 0, STAY)
    assert hash(stay2) == hash(stay2.with_entry(1, 0, STAY))


def test_random_policy_is_admissible():
    model = random_model(1, states=6, actions=3)
    policy = random_policy(model, 5, np.random.default_rng(9))
    policy.check_admissible(model)
    again = random_policy(model, 5, np.random.default_rng(9))
    assert policy == again


def test_terminal_row(toggle):
    values, _ = backward_induction(toggle, 1, terminal=[3.0, 4.0])
    # max(0 + 0.5*3, 1 + 0.5*4) and max(2 + 0.5*4, 0 + 0.5*3).
    assert np.array_equal(values.row(1), [3.0, 4.0])
    with pytest.raises(PreconditionError):
        backward_induction(toggle, 1, terminal=[1.0])


def seeded_cases(count, seed):
    rng = np.random.default_rng(seed)
    for i in range(count):
        model = random_model(700 + i, states=int(rng.integers(2, 9)),
                             actions=int(rng.integers(2, 4)))
        yield model, int(rng.integers(1, 7)), rng


def test_rows_depend_only_on_lower_levels():
    for model, horizon, rng in seeded_cases(25, seed=5):
        terminal = rng.normal(size=model.num_states)
        policy = random_policy(model, horizon, rng)
        other = random_policy(model, horizon, rng)
        values = evaluate_policy(model, policy, terminal)
        for h in range(1, horizon + 1):
            mixed = FiniteHorizonPolicy(np.vstack([policy.actions[:h],
                                                   other.actions[h:]]))
            mixed_values = evaluate_policy(model, mixed, terminal)
            assert np.array_equal(mixed_values.values[:h + 1],
                                  values.values[:h + 1])


def test_optimal_rows_are_backups_of_each_other():
    for model, horizon, rng in seeded_cases(25, seed=6):
        terminal = rng.normal(size=model.num_states)
        values, policy = backward_induction(model, horizon, terminal)
        for h in range(1, horizon + 1):
            row, greedy = bellman_backup(model, values.row(h - 1))
            assert np.array_equal(row, values.row(h))
            assert np.array_equal(greedy, policy.level(h))
