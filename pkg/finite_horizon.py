"""
H-horizon policies, their exact evaluation, and backward induction.

Everything is stored by *remaining horizon*: level ``j`` of a policy is
the mapping applied when ``j`` decisions are left, so ``σ[H]`` is the
mapping a rolling controller applies now and ``σ[1]`` is the last one.
``V[h]`` of a :class:`ValueTable` is the value with ``h`` decisions
left and follows ``σ[1..h]`` only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import *
from .mdp_core import PreconditionError, check_action

__all__ = ["FiniteHorizonPolicy",
           "ValueTable",
           "ImprovablePair",
           "lookahead",
           "lookahead_levels",
           "evaluate_policy",
           "q_value",
           "bellman_backup",
           "backward_induction",
           "switchable_actions",
           "switchable_masks",
           "improvable_set",
           "strictly_improves",
           "constant_policy",
           "random_policy",
           ]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FiniteHorizonPolicy:
    """
    An H-length policy in remaining-horizon order.

    Attributes
    ----------
    actions : numpy.ndarray
        Integer table of shape ``(H, |X|)``; row ``j-1`` is ``σ[j]``.
    """

    actions: np.ndarray

    def __post_init__(self):
        table = np.array(self.actions, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] < 1:
            raise PreconditionError("a policy needs shape (H >= 1, |X|)")
        table.setflags(write=False)
        object.__setattr__(self, "actions", table)

    @property
    def horizon(self):
        return self.actions.shape[0]

    @property
    def num_states(self):
        return self.actions.shape[1]

    def level(self, j):
        """ The mapping ``σ[j]``, ``1 <= j <= H``. """

        if not 1 <= j <= self.horizon:
            raise PreconditionError(f"level {j} outside 1..{self.horizon}")
        return self.actions[j - 1]

    def first_entry(self):
        """ ``σ[H]``, the mapping the rolling controller applies. """

        return self.actions[-1]

    def column(self, x):
        """ The x-coordinate ``(σ[1][x], ..., σ[H][x])``. """

        return self.actions[:, x]

    def with_column(self, x, column):
        """ A copy whose x-coordinate is replaced by ``column``. """

        table = self.actions.copy()
        table[:, x] = column
        return FiniteHorizonPolicy(table)

    def with_entry(self, j, x, a):
        """ A copy with ``σ[j][x] = a``. """

        table = self.actions.copy()
        table[j - 1, x] = a
        return FiniteHorizonPolicy(table)

    def check_admissible(self, model):
        """ Raise unless every entry is admissible in ``model``. """

        if self.num_states != model.num_states:
            raise PreconditionError(
                f"policy covers {self.num_states} states, model has "
                f"{model.num_states}")
        bad = ~model.admissible[np.arange(model.num_states)[None, :],
                                np.clip(self.actions, 0,
                                        model.max_actions - 1)]
        bad |= (self.actions < 0) | (self.actions >= model.max_actions)
        if bad.any():
            j, x = (int(v) for v in np.argwhere(bad)[0])
            raise PreconditionError(
                f"policy entry at level {j + 1}, state {x} is not admissible")

    def key(self):
        """ Hashable identity, used to detect revisits. """

        return (self.actions.shape, self.actions.tobytes())

    def __eq__(self, other):
        if not isinstance(other, FiniteHorizonPolicy):
            return NotImplemented
        return np.array_equal(self.actions, other.actions)

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True, eq=False)
class ValueTable:
    """
    ``V[h][x]`` for ``h = 0..H``; row 0 is the terminal row.

    Attributes
    ----------
    values : numpy.ndarray
        Shape ``(H + 1, |X|)``.
    """

    values: np.ndarray

    def __post_init__(self):
        table = np.array(self.values, dtype=float)
        table.setflags(write=False)
        object.__setattr__(self, "values", table)

    @property
    def horizon(self):
        return self.values.shape[0] - 1

    def row(self, h):
        return self.values[h]

    def top(self):
        """ ``V[H]``. """

        return self.values[-1]

    def __eq__(self, other):
        if not isinstance(other, ValueTable):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


class ImprovablePair(NamedTuple):
    """ ``(h, x)`` with a nonempty switchable set ``S_h(x)``. """

    h: int
    x: int


def _terminal_row(model, terminal):
    if terminal is None:
        return np.zeros(model.num_states)
    row = np.asarray(terminal, dtype=float)
    if row.shape != (model.num_states,):
        raise PreconditionError(
            f"terminal row has shape {row.shape}, expected "
            f"({model.num_states},)")
    if not np.all(np.isfinite(row)):
        raise PreconditionError("terminal row must be finite")
    return row


def lookahead(model, u):
    """
    One-step lookahead values ``R(x,a) + γ Σ_y P[x][a][y] u(y)``.

    Every evaluation and backup goes through this function so that a
    policy's values and the backed-up values agree bit for bit.

    Returns
    -------
    numpy.ndarray
        Shape ``(|X|, max |A(x)|)``, ``-inf`` at inadmissible pairs.
    """

    q = model.rewards + model.gamma * (model.transitions @ np.asarray(u))
    return np.where(model.admissible, q, -np.inf)


def evaluate_policy(model, policy, terminal=None, horizon=None):
    """
    Exact ``V^π_h`` for ``h = 0..H``.

    Parameters
    ----------
    model : MdpModel
        A valid model.
    policy : FiniteHorizonPolicy
        Admissible in ``model``.
    terminal : array_like, optional
        ``V[0]``; defaults to zeros.
    horizon : int, optional
        Expected horizon; a mismatch with the policy is an error.

    Returns
    -------
    ValueTable
    """

    if horizon is not None and horizon != policy.horizon:
        raise PreconditionError(
            f"policy has horizon {policy.horizon}, table requested for "
            f"{horizon}")
    policy.check_admissible(model)
    states = np.arange(model.num_states)
    table = np.empty((policy.horizon + 1, model.num_states))
    table[0] = _terminal_row(model, terminal)
    for h in range(1, policy.horizon + 1):
        q = lookahead(model, table[h - 1])
        table[h] = q[states, policy.actions[h - 1]]
    return ValueTable(table)


def q_value(model, x, a, continuation):
    """ ``R(x,a) + γ Σ_y P[x][a][y] continuation[y]``. """

    check_action(model, x, a)
    return float(lookahead(model, continuation)[x, a])


def bellman_backup(model, u):
    """
    Apply the T operator once.

    Returns
    -------
    tuple of numpy.ndarray
        ``T(u)`` and the greedy action per state; ties go to the
        smallest action index.
    """

    q = lookahead(model, u)
    greedy = np.argmax(q, axis=1)
    return q[np.arange(model.num_states), greedy], greedy


def backward_induction(model, horizon, terminal=None):
    """
    Optimal values ``V*_h = T^h(terminal)`` and an optimal policy.

    Parameters
    ----------
    model : MdpModel
        A valid model.
    horizon : int
        ``H >= 1``.
    terminal : array_like, optional
        ``V*_0``; defaults to zeros.

    Returns
    -------
    tuple
        ``(ValueTable, FiniteHorizonPolicy)`` where ``σ[h]`` is the
        greedy row of the h-th backup.
    """

    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    table = np.empty((horizon + 1, model.num_states))
    table[0] = _terminal_row(model, terminal)
    actions = np.empty((horizon, model.num_states), dtype=np.int64)
    for h in range(1, horizon + 1):
        table[h], actions[h - 1] = bellman_backup(model, table[h - 1])
    logger.debug("backward induction on %s: H=%d", model.name, horizon)
    return ValueTable(table), FiniteHorizonPolicy(actions)


def lookahead_levels(model, pol_values):
    """
    :func:`lookahead` against every continuation row of a table.

    Returns
    -------
    numpy.ndarray
        Shape ``(H, |X|, max |A(x)|)``; slice ``h-1`` is the lookahead
        against ``V[h-1]``.
    """

    return np.stack([lookahead(model, pol_values.values[h - 1])
                     for h in range(1, pol_values.horizon + 1)])


def switchable_masks(model, pol_values, q_levels=None):
    """
    ``S_h(x)`` for every level and state as boolean masks.

    Returns
    -------
    numpy.ndarray
        Shape ``(H, |X|, max |A(x)|)``; entry ``[h-1, x, a]`` tells
        whether ``a`` is switchable at ``(h, x)``.
    """

    if q_levels is None:
        q_levels = lookahead_levels(model, pol_values)
    return q_levels > pol_values.values[1:, :, None] + STRICT_SLACK


def switchable_actions(model, pol_values, x, h):
    """
    ``S^π_h(x)``: actions that strictly beat ``V^π_h(x)`` one step ahead.

    Parameters
    ----------
    pol_values : ValueTable
        Values of the policy in question.
    x : int
        State.
    h : int
        Level, ``1 <= h <= H``.

    Returns
    -------
    frozenset of int
    """

    if not 1 <= h <= pol_values.horizon:
        raise PreconditionError(f"level {h} outside 1..{pol_values.horizon}")
    q = lookahead(model, pol_values.values[h - 1])[x]
    better = q > pol_values.values[h][x] + STRICT_SLACK
    return frozenset(int(a) for a in np.flatnonzero(better))


def improvable_set(model, policy, horizon=None, restrict_to_state=None,
                   terminal=None):
    """
    ``I^{π,H}``, or ``I^{π,H}_x`` when ``restrict_to_state`` is given.

    An empty result certifies that ``policy`` is optimal for ``M_H``.

    Returns
    -------
    frozenset of ImprovablePair
    """

    values = evaluate_policy(model, policy, terminal, horizon)
    masks = switchable_masks(model, values).any(axis=2)
    if restrict_to_state is not None:
        keep = np.zeros_like(masks)
        keep[:, restrict_to_state] = masks[:, restrict_to_state]
        masks = keep
    return frozenset(ImprovablePair(int(j) + 1, int(x))
                     for j, x in np.argwhere(masks))


def strictly_improves(model, cand, base, horizon=None, terminal=None):
    """
    Whether ``cand >_H base``: no worse anywhere, better somewhere.

    Returns
    -------
    bool
    """

    if cand.horizon != base.horizon:
        raise PreconditionError("policies have different horizons")
    v_cand = evaluate_policy(model, cand, terminal, horizon).top()
    v_base = evaluate_policy(model, base, terminal, horizon).top()
    if np.any(v_cand < v_base - STRICT_SLACK):
        return False
    return bool(np.any(v_cand > v_base + STRICT_SLACK))


def constant_policy(model, horizon, action=0):
    """ Every level maps every state to ``action``. """

    for x in range(model.num_states):
        check_action(model, x, action)
    return FiniteHorizonPolicy(
        np.full((horizon, model.num_states), action, dtype=np.int64))


def random_policy(model, horizon, rng):
    """ Uniform admissible actions at every ``(j, x)``. """

    counts = np.array(model.actions_per_state)
    draws = rng.random((horizon, model.num_states))
    return FiniteHorizonPolicy(np.floor(draws * counts).astype(np.int64))
