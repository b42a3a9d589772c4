""" This module contains a supervisor that suggests the worst actions. """

import numpy as np

from ..finite_horizon import evaluate_policy, lookahead_levels
from .supervisor_engine import Supervisor

__all__ = ["AdversarialSupervisor"]


class AdversarialSupervisor(Supervisor):
    """
    At every level, the action with the lowest one-step lookahead
    against the current policy's own continuation values.
    """

    def __init__(self, model, name=None):
        super().__init__(name)
        self.model = model

    def suggest(self, k, x, policy):
        values = evaluate_policy(self.model, policy)
        q = lookahead_levels(self.model, values)[:, x, :]
        # Inadmissible pairs are -inf; keep them out of the argmin.
        q = np.where(np.isfinite(q), q, np.inf)
        return [[int(a) for a in np.argmin(q, axis=1)]]
