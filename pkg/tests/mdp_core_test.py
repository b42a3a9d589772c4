""" Testing `mdp_core.py` elements. """

import numpy as np
import pytest

from ..mdp_core import *
from .helpers import random_model


def test_toggle2_is_valid(toggle):
    report = validate_model(toggle)
    assert report.is_valid
    assert not report
    assert toggle.actions_per_state == (2, 2)
    assert toggle.gamma == 0.5


def test_short_row_is_named():
    model = MdpModel.from_lists(rewards=[[0.0, 1.0], [2.0, 0.0]],
                                transitions=[[[1.0, 0.0], [0.0, 0.9]],
                                             [[0.0, 1.0], [1.0, 0.0]]],
                                gamma=0.5)
    report = validate_model(model)
    assert len(report) == 1
    violation = next(iter(report))
    assert (violation.kind, violation.state, violation.action) == \
        ("transition", 0, 1)
    assert "x=0, a=1" in report.lines()[0]


def test_gamma_one_is_out_of_range():
    model = MdpModel.from_lists([[1.0]], [[[1.0]]], gamma=1.0)
    assert any("discount out of range" in line
               for line in validate_model(model).lines())


def test_ragged_lists_are_rejected():
    with pytest.raises(ModelFormatError):
        MdpModel.from_lists([[0.0, 1.0]], [[[1.0]]], gamma=0.5)


@pytest.mark.parametrize("rewards, transitions", [(5, [[[1.0]]]),
                                                  ([[0.0]], 5),
                                                  ([3.0], [[[1.0]]]),
                                                  ([[0.0]], {"0": []})])
def test_non_list_fields_are_format_errors(rewards, transitions):
    with pytest.raises(ModelFormatError):
        MdpModel.from_lists(rewards, transitions, gamma=0.5)


def test_document_with_scalar_rewards(toggle):
    doc = model_to_document(toggle)
    doc["rewards"] = 5
    with pytest.raises(ModelFormatError):
        model_from_document(doc)


def test_arrays_are_read_only(toggle):
    with pytest.raises(ValueError):
        toggle.rewards[0, 0] = 5.0


@pytest.mark.parametrize("x, a, expected", [(0, TOGGLE, 1),
                                            (1, STAY, 1),
                                            (1, TOGGLE, 0),
                                            (0, STAY, 0)])
def test_deterministic_transitions(toggle, x, a, expected):
    for seed in range(5):
        rng = np.random.default_rng(seed)
        assert sample_next_state(toggle, x, a, rng) == expected


def test_sampling_rejects_inadmissible(toggle):
    with pytest.raises(PreconditionError):
        sample_next_state(toggle, 0, 2, np.random.default_rng(0))


def test_sampling_frequencies():
    model = MdpModel.from_lists([[0.0], [0.0], [0.0]],
                                [[[0.2, 0.3, 0.5]],
                                 [[0.0, 1.0, 0.0]],
                                 [[0.0, 0.0, 1.0]]], gamma=0.5)
    rng = np.random.default_rng(3)
    draws = [sample_next_state(model, 0, 0, rng) for _ in range(20000)]
    freq = np.bincount(draws, minlength=3) / len(draws)
    assert np.allclose(freq, [0.2, 0.3, 0.5], atol=0.02)


def test_generator_is_seeded():
    cfg = GenConfig(num_states=5, num_actions=2, ensure_positive=True, seed=7)
    first, second = generate_random_mdp(cfg), generate_random_mdp(cfg)
    assert first == second
    assert first.rewards.tobytes() == second.rewards.tobytes()
    assert first.transitions.tobytes() == second.transitions.tobytes()


def test_generator_positive_and_dense():
    model = random_model(11, states=6, actions=3, positive=True)
    assert model.transitions.min() > 0.0
    assert validate_model(model).is_valid
    assert np.allclose(model.transitions.sum(axis=2), 1.0, atol=1e-9)


def test_generator_sparse_rows_stay_valid():
    for seed in range(10):
        model = random_model(seed, states=6, density=0.2)
        assert validate_model(model).is_valid


def test_generator_absorbing_tail():
    model = random_model(4, states=5, absorbing=2)
    for x in (3, 4):
        for a in range(2):
            assert model.transitions[x, a, x] == 1.0
    with pytest.raises(PreconditionError):
        GenConfig(num_states=3, num_actions=2, ensure_positive=True,
                  absorbing_states=1).check()


def test_bad_gen_config():
    with pytest.raises(PreconditionError):
        generate_random_mdp(GenConfig(num_states=0, num_actions=2))
    with pytest.raises(PreconditionError):
        generate_random_mdp(GenConfig(num_states=2, num_actions=2, gamma=1.0))


def test_document_round_trip(toggle):
    again = model_from_document(model_to_document(toggle))
    assert again == toggle
    assert again.name == "toggle2"


def test_document_missing_key(toggle):
    doc = model_to_document(toggle)
    del doc["gamma"]
    with pytest.raises(ModelFormatError):
        model_from_document(doc)


def test_uneven_action_counts():
    model = MdpModel.from_lists(rewards=[[1.0], [0.0, 3.0]],
                                transitions=[[[1.0, 0.0]],
                                             [[0.5, 0.5], [0.0, 1.0]]],
                                gamma=0.9)
    assert validate_model(model).is_valid
    assert model.is_admissible(1, 1)
    assert not model.is_admissible(0, 1)
    with pytest.raises(PreconditionError):
        check_action(model, 0, 1)
