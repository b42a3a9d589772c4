"""
Markov chains induced by stationary policies.

Communicating classes, communicating-MDP verdicts, infinite-horizon
evaluation, and the rolling-horizon error of ``[σ[H]]``.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .constants import *
from .mdp_core import PreconditionError
from .finite_horizon import lookahead, backward_induction

__all__ = ["StationaryPolicy",
           "ClassPartition",
           "Verdict",
           "EnumerationCapError",
           "communicating_classes",
           "is_mdp_communicating",
           "evaluate_stationary_infinite",
           "bellman_residual",
           "solve_infinite_optimal",
           "rolling_horizon_error",
           "error_envelope",
           ]

logger = logging.getLogger(__name__)


class EnumerationCapError(PreconditionError):
    """ Too many stationary policies to enumerate. """


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    """
    One mapping ``π``, standing for ``[π]`` repeated forever.

    Attributes
    ----------
    actions : numpy.ndarray
        Action per state.
    """

    actions: np.ndarray

    def __post_init__(self):
        row = np.array(self.actions, dtype=np.int64).reshape(-1)
        row.setflags(write=False)
        object.__setattr__(self, "actions", row)

    @classmethod
    def first_entry_of(cls, policy):
        """ ``[σ[H]]`` of an H-length policy. """

        return cls(policy.first_entry())

    def check_admissible(self, model):
        if len(self.actions) != model.num_states:
            raise PreconditionError(
                f"stationary policy covers {len(self.actions)} states, "
                f"model has {model.num_states}")
        for x, a in enumerate(self.actions):
            if not model.is_admissible(x, a):
                raise PreconditionError(
                    f"action {a} is not admissible at state {x}")

    def as_tuple(self):
        return tuple(int(a) for a in self.actions)

    def __eq__(self, other):
        if not isinstance(other, StationaryPolicy):
            return NotImplemented
        return np.array_equal(self.actions, other.actions)

    def __hash__(self):
        return hash(self.actions.tobytes())


class ClassPartition(NamedTuple):
    """
    Communicating classes of an induced chain.

    ``classes[i]`` is a sorted tuple of states; ``recurrent[i]`` tells
    whether no transition leaves that class. Classes are ordered by
    their smallest state.
    """

    classes: tuple
    recurrent: tuple

    def class_of(self, x):
        """ Index of the class holding ``x``. """

        for i, members in enumerate(self.classes):
            if x in members:
                return i
        raise PreconditionError(f"state {x} is not in the partition")


class Verdict(NamedTuple):
    """ ``answer`` is ``"yes"``, ``"no"`` or ``"unknown"``. """

    answer: str
    witness: StationaryPolicy | None = None


def _induced_matrix(model, phi):
    return model.transitions[np.arange(model.num_states), phi.actions]


def _partition(matrix):
    n = matrix.shape[0]
    graph = csr_matrix(matrix > 0.0)
    _, labels = connected_components(graph, directed=True,
                                     connection="strong")
    # Relabel by smallest member so the order is deterministic.
    order = {}
    for x in range(n):
        order.setdefault(int(labels[x]), len(order))
    members = [[] for _ in order]
    for x in range(n):
        members[order[int(labels[x])]].append(x)
    recurrent = []
    for block in members:
        inside = np.zeros(n, dtype=bool)
        inside[block] = True
        leaks = matrix[np.ix_(block, ~inside)] > 0.0
        recurrent.append(not leaks.any())
    return ClassPartition(tuple(tuple(b) for b in members), tuple(recurrent))


def communicating_classes(model, phi):
    """
    Communicating classes of the chain induced by ``[phi]``.

    Parameters
    ----------
    model : MdpModel
    phi : StationaryPolicy

    Returns
    -------
    ClassPartition
        Strongly connected components of ``x -> y iff
        P[x][phi(x)][y] > 0``; a class is recurrent when it has no
        outgoing edge in the condensation.
    """

    phi.check_admissible(model)
    return _partition(_induced_matrix(model, phi))


def _first_witness(model, prefix_action):
    """ Lowest-index non-communicating policy with ``φ(0)`` fixed. """

    ranges = [range(c) for c in model.actions_per_state[1:]]
    for rest in itertools.product(*ranges):
        phi = StationaryPolicy((prefix_action,) + rest)
        if len(_partition(_induced_matrix(model, phi)).classes) > 1:
            return phi.as_tuple()
    return None


def is_mdp_communicating(model, mode="sufficient", cap=EXHAUSTIVE_CAP,
                         jobs=1):
    """
    Decide whether every stationary policy induces one communicating
    class.

    Parameters
    ----------
    model : MdpModel
    mode : {"sufficient", "exhaustive"}
        ``"sufficient"`` answers ``yes`` when every transition entry is
        positive and ``unknown`` otherwise; ``"exhaustive"`` enumerates
        all stationary policies.
    cap : int, optional
        Largest number of policies ``"exhaustive"`` will enumerate.
    jobs : int, optional
        Worker processes for ``"exhaustive"``.

    Returns
    -------
    Verdict
        With the lowest-index witness when the answer is ``no``.

    Raises
    ------
    EnumerationCapError
        When the policy count exceeds ``cap``.
    """

    if mode == "sufficient":
        positive = all(np.all(model.transitions[x, :c] > 0.0)
                       for x, c in enumerate(model.actions_per_state))
        return Verdict("yes") if positive else Verdict("unknown")
    if mode != "exhaustive":
        raise PreconditionError(f"unknown mode {mode!r}")

    count = math.prod(model.actions_per_state)
    if count > cap:
        raise EnumerationCapError(
            f"{count} stationary policies exceed the cap of {cap}; "
            f"use the sufficient mode instead")
    first = range(model.actions_per_state[0])
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(_first_witness,
                                  itertools.repeat(model), first))
    else:
        found = []
        for a in first:
            found.append(_first_witness(model, a))
            if found[-1] is not None:
                break
    for witness in found:
        if witness is not None:
            return Verdict("no", StationaryPolicy(witness))
    return Verdict("yes")


def evaluate_stationary_infinite(model, phi):
    """
    ``V^{[phi]}_∞`` from ``(I - γ P^φ) V = R^φ``.

    Returns
    -------
    numpy.ndarray
    """

    phi.check_admissible(model)
    states = np.arange(model.num_states)
    p = _induced_matrix(model, phi)
    r = model.rewards[states, phi.actions]
    system = np.eye(model.num_states) - model.gamma * p
    v = linalg.solve(system, r)
    residual = np.abs(system @ v - r).max()
    if residual > RESIDUAL_TOLERANCE:
        # One step of iterative refinement.
        v = v + linalg.solve(system, r - system @ v)
        residual = np.abs(system @ v - r).max()
        if residual > RESIDUAL_TOLERANCE:
            logger.warning("evaluation residual %.3g above tolerance",
                           residual)
    return v


def bellman_residual(model, v):
    """ ``‖T(v) - v‖_∞``. """

    return float(np.abs(lookahead(model, v).max(axis=1) - v).max())


def solve_infinite_optimal(model, tol=RESIDUAL_TOLERANCE):
    """
    ``V*_∞`` and an optimal stationary policy by policy iteration.

    Parameters
    ----------
    model : MdpModel
    tol : float, optional
        Bound on the Bellman residual of the returned values.

    Returns
    -------
    tuple
        ``(values, StationaryPolicy)``; the policy is greedy with
        respect to the values, ties to the smallest action index.
    """

    if tol <= 0:
        raise PreconditionError("tol must be positive")
    states = np.arange(model.num_states)
    phi = StationaryPolicy(np.zeros(model.num_states, dtype=np.int64))
    iterations = 0
    while True:
        iterations += 1
        v = evaluate_stationary_infinite(model, phi)
        q = lookahead(model, v)
        best = np.argmax(q, axis=1)
        current = q[states, phi.actions]
        better = q[states, best] > current + STRICT_SLACK
        if not better.any():
            break
        phi = StationaryPolicy(np.where(better, best, phi.actions))
    phi = StationaryPolicy(best)
    v = evaluate_stationary_infinite(model, phi)
    residual = bellman_residual(model, v)
    if residual > tol:
        logger.warning("Bellman residual %.3g above tol %.3g", residual, tol)
    logger.debug("infinite-horizon policy iteration: %d rounds", iterations)
    return v, phi


def rolling_horizon_error(model, horizons, terminal=None):
    """
    ``‖V^{[σ[H]]}_∞ - V*_∞‖_∞`` for every ``H`` in ``horizons``.

    Parameters
    ----------
    model : MdpModel
    horizons : sequence of int
        Nonempty and increasing.
    terminal : array_like, optional
        ``V*_0`` for backward induction; defaults to zeros.

    Returns
    -------
    list of tuple
        ``(H, error)``.
    """

    horizons = [int(h) for h in horizons]
    if not horizons:
        raise PreconditionError("need at least one horizon")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise PreconditionError("horizons must be increasing")
    if horizons[0] < 1:
        raise PreconditionError("horizons must be >= 1")

    v_star, _ = solve_infinite_optimal(model)
    errors = []
    for h in horizons:
        _, policy = backward_induction(model, h, terminal)
        v = evaluate_stationary_infinite(
            model, StationaryPolicy.first_entry_of(policy))
        errors.append((h, float(np.abs(v - v_star).max())))
    return errors


def error_envelope(model, horizon, terminal=None):
    """
    ``2 γ^H / (1-γ) ‖V*_∞ - V*_0‖_∞``, the classical bound on the
    rolling-horizon error.
    """

    v_star, _ = solve_infinite_optimal(model)
    v0 = np.zeros(model.num_states) if terminal is None else np.asarray(terminal)
    gap = float(np.abs(v_star - v0).max())
    return 2.0 * model.gamma ** horizon / (1.0 - model.gamma) * gap
