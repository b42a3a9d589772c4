""" This module contains a supervisor that suggests random actions. """

import numpy as np

from .supervisor_engine import Supervisor

__all__ = ["RandomSupervisor"]


class RandomSupervisor(Supervisor):
    """
    Uniform admissible action at every level, from a seeded stream.

    Two instances built with the same seed produce the same
    suggestions for the same calls.
    """

    def __init__(self, model, seed=0, name=None):
        super().__init__(name)
        self.model = model
        self.rng = np.random.default_rng(seed)

    def suggest(self, k, x, policy):
        count = self.model.actions_per_state[x]
        draws = self.rng.integers(0, count, size=policy.horizon)
        return [[int(a) for a in draws]]
