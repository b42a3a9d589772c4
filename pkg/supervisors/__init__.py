"""
Supervisors feeding action suggestions to the on-line controller.

New kinds implement :class:`Supervisor` (see ``docs/user_guide.md``)
and may be registered in :data:`KINDS`.
"""

from ..mdp_core import PreconditionError
from .supervisor_engine import Supervisor
from .null import NullSupervisor
from .oracle import OracleSupervisor
from .uniform import RandomSupervisor
from .adversarial import AdversarialSupervisor

__all__ = ["Supervisor",
           "NullSupervisor",
           "OracleSupervisor",
           "RandomSupervisor",
           "AdversarialSupervisor",
           "KINDS",
           "builtin_supervisor",
           ]

KINDS = ("null", "oracle", "random", "adversarial")


def builtin_supervisor(kind, model=None, horizon=None, seed=0,
                       optimal=None):
    """
    Build one of the bundled supervisors.

    Parameters
    ----------
    kind : str
        One of ``"null"``, ``"oracle"``, ``"random"``, ``"adversarial"``.
    model : MdpModel, optional
        Required by every kind but ``"null"``.
    horizon : int, optional
        Used by ``"oracle"`` when ``optimal`` is not given.
    seed : int, optional
        Stream seed of ``"random"``.
    optimal : FiniteHorizonPolicy, optional
        Precomputed backward-induction policy for ``"oracle"``.

    Returns
    -------
    Supervisor
    """

    if kind == "null":
        return NullSupervisor("null")
    if model is None:
        raise PreconditionError(f"supervisor {kind!r} needs the model")
    if kind == "oracle":
        if optimal is not None:
            return OracleSupervisor(optimal, "oracle")
        if horizon is None:
            raise PreconditionError(
                "oracle supervisor needs a backward-induction policy or "
                "a horizon")
        supervisor = OracleSupervisor.from_model(model, horizon)
        supervisor.name = "oracle"
        return supervisor
    if kind == "random":
        return RandomSupervisor(model, seed, "random")
    if kind == "adversarial":
        return AdversarialSupervisor(model, "adversarial")
    raise PreconditionError(
        f"unknown supervisor kind {kind!r}; expected one of {KINDS}")
