""" Small model factories shared by the tests. """

import numpy as np

from ..mdp_core import GenConfig, MdpModel, generate_random_mdp


def random_model(seed, states=4, actions=2, gamma=0.9, positive=False,
                 density=1.0, absorbing=0):
    cfg = GenConfig(num_states=states, num_actions=actions,
                    transition_density=density, ensure_positive=positive,
                    gamma=gamma, seed=seed, absorbing_states=absorbing)
    return generate_random_mdp(cfg)


def single_action_model(rewards, transitions, gamma=0.9):
    n = len(rewards)
    return MdpModel(n, (1,) * n, np.array(rewards, dtype=float)[:, None],
                    np.array(transitions, dtype=float)[:, None, :], gamma)
