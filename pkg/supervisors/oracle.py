""" This module contains a supervisor that knows the optimal policy. """

from ..mdp_core import PreconditionError
from ..finite_horizon import backward_induction
from .supervisor_engine import Supervisor

__all__ = ["OracleSupervisor"]


class OracleSupervisor(Supervisor):
    """
    Suggests the x-coordinate of an optimal H-length policy.

    Attributes
    ----------
    optimal : FiniteHorizonPolicy
        The policy whose coordinates are fed back.
    """

    def __init__(self, optimal, name=None):
        super().__init__(name)
        self.optimal = optimal

    @classmethod
    def from_model(cls, model, horizon, terminal=None):
        """ Run backward induction once and wrap its policy. """

        _, optimal = backward_induction(model, horizon, terminal)
        return cls(optimal)

    def suggest(self, k, x, policy):
        if policy.horizon != self.optimal.horizon:
            raise PreconditionError(
                f"oracle built for H={self.optimal.horizon}, controller "
                f"runs H={policy.horizon}")
        return [[int(a) for a in self.optimal.column(x)]]
