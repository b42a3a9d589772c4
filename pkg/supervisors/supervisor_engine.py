""" This module contains a base class with general supervisor mechanics. """

from abc import ABC, abstractmethod

__all__ = ["Supervisor"]


class Supervisor(ABC):
    """
    External source of action suggestions for the visited state.

    A suggestion is one action per remaining-horizon level (level ``j``
    at position ``j-1``), any of which may be ``None``. It stands for
    the x-coordinate of an H-length policy offered to the controller;
    the controller validates and guards every action before use.

    Attributes
    ----------
    name : str
        Label used in logs and traces.
    """

    def __init__(self, name=None):
        self.name = name or self.__class__.__name__

    @abstractmethod
    def suggest(self, k, x, policy):
        """
        Suggestions for state ``x`` at step ``k``.

        Parameters
        ----------
        k : int
            Step counter.
        x : int
            The visited state.
        policy : FiniteHorizonPolicy
            Snapshot of the controller's current policy.

        Returns
        -------
        list of list
            Possibly empty; each inner list holds ``H`` entries.
        """

        return []

    def __repr__(self):
        return f"<{self.name}>"
