"""
Policy switching and the off-line PIPS drivers.

Policy switching builds, from a set of H-length policies, the policy
that at every ``(j, x)`` copies the entry of the member with the best
``V_j(x)``; it is no worse than any member. Generating members that
each strictly improve a base policy and switching over them gives one
improvement step of policy iteration with policy switching (PIPS).
"""

from __future__ import annotations

import itertools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constants import *
from .mdp_core import PreconditionError
from .finite_horizon import (FiniteHorizonPolicy, ValueTable,
                             evaluate_policy, lookahead_levels,
                             switchable_masks, improvable_set)
from .runner import BaseRunner

__all__ = ["Candidate",
           "CandidateSet",
           "ImprovementReport",
           "policy_switch",
           "generate_beta_at_state",
           "generate_beta",
           "improve_at_state",
           "run_pips_sync",
           "SyncResult",
           "StateSchedule",
           "ImprovableFirstSchedule",
           "ExplicitSchedule",
           "LevelEmbeddedSchedule",
           "level_embedded_schedule",
           "run_pips_async_offline",
           "AsyncResult",
           ]

logger = logging.getLogger(__name__)

# Candidate origins.
SINGLETON = "singleton-switch"
ALL_GREEDY = "all-greedy-switch"
EXHAUSTIVE = "exhaustive-member"
SAMPLED = "sampled-member"
SUPERVISOR = "supervisor"
BASE = "base"


@dataclass(frozen=True, eq=False)
class Candidate:
    """
    A member of a switching set with its exact value table.

    Attributes
    ----------
    policy : FiniteHorizonPolicy
    values : ValueTable
        ``evaluate_policy(model, policy)``.
    origin : str
        How the member was produced.
    detail : tuple
        Origin data, e.g. ``(j, x, a)`` for a singleton switch.
    """

    policy: FiniteHorizonPolicy
    values: ValueTable
    origin: str
    detail: tuple = ()

    @classmethod
    def evaluated(cls, model, policy, origin, detail=()):
        return cls(policy, evaluate_policy(model, policy), origin, detail)


@dataclass
class CandidateSet:
    """
    Explicit subset of the strict improvements of ``base``.

    Attributes
    ----------
    base : FiniteHorizonPolicy
    members : list of Candidate
    budget_hit : bool
        Whether the full set was too large and only a seed set (plus
        sampled members) was kept.
    """

    base: FiniteHorizonPolicy
    members: list = field(default_factory=list)
    budget_hit: bool = False

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


@dataclass
class ImprovementReport:
    """
    What one single-state update changed.

    Attributes
    ----------
    state : int
        The updated state.
    changed_pairs : list of tuple
        ``(j, x, old_action, new_action)``.
    value_gain : numpy.ndarray
        ``V_H(new) - V_H(base)``, never below ``-STRICT_SLACK``.
    candidates_examined : int
        Size of the switching pool, base included.
    suggestions_offered : int
        Non-empty supervisor coordinates seen.
    accepted, rejected : list of tuple
        ``(j, a)`` and ``(j, a, reason)`` for supervisor coordinates.
    fallback : str or None
        ``"beta-only"`` or ``"base"`` when the re-evaluation check had
        to discard the fused result.
    """

    state: int
    changed_pairs: list = field(default_factory=list)
    value_gain: np.ndarray = None
    candidates_examined: int = 0
    suggestions_offered: int = 0
    accepted: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    fallback: str = None
    values: ValueTable = field(default=None, repr=False)

    @property
    def changed(self):
        return bool(self.changed_pairs)

    def to_json(self):
        """ A JSON-ready dict (one line of a report file). """

        return {
            "state": int(self.state),
            "changed_pairs": [[int(v) for v in pair]
                              for pair in self.changed_pairs],
            "value_gain": [float(v) for v in self.value_gain],
            "candidates_examined": int(self.candidates_examined),
            "suggestions_offered": int(self.suggestions_offered),
            "suggestions_accepted": len(self.accepted),
            "suggestions_rejected": len(self.rejected),
            "fallback": self.fallback,
        }


def policy_switch(members, model=None):
    """
    Switch over a nonempty set of evaluated policies.

    At level ``j`` and state ``x`` the result copies the entry of the
    member with the largest ``V_j(x)``; ties go to the lowest member
    index.

    Parameters
    ----------
    members : CandidateSet or list of Candidate
        Nonempty, all with the same horizon.
    model : MdpModel, optional
        When given, the result is re-evaluated and checked against
        every member.

    Returns
    -------
    FiniteHorizonPolicy
    """

    if isinstance(members, CandidateSet):
        members = members.members
    members = list(members)
    if not members:
        raise PreconditionError("policy switching needs at least one member")
    horizon = members[0].policy.horizon
    if any(c.policy.horizon != horizon for c in members):
        raise PreconditionError("members have different horizons")

    values = np.stack([c.values.values[1:] for c in members])
    actions = np.stack([c.policy.actions for c in members])
    winner = np.argmax(values, axis=0)
    switched = FiniteHorizonPolicy(
        np.take_along_axis(actions, winner[None], axis=0)[0])

    if model is not None:
        top = evaluate_policy(model, switched).top()
        best = values[:, -1, :].max(axis=0)
        if np.any(top < best - EQUALITY_SLACK):
            logger.warning("switched policy falls below a member by %.3g",
                           float((best - top).max()))
    return switched


def _improvable_options(masks, states):
    """ ``[(j, x, switchable actions)]`` over the given states. """

    options = []
    for x in states:
        for j in range(1, masks.shape[0] + 1):
            acts = tuple(int(a) for a in np.flatnonzero(masks[j - 1, x]))
            if acts:
                options.append((j, int(x), acts))
    return options


def _assign(base, options, choice):
    table = base.actions.copy()
    for (j, x, _), a in zip(options, choice):
        if a is not None:
            table[j - 1, x] = a
    return FiniteHorizonPolicy(table)


def _generate(model, base, values, states, budget, rng):
    q_levels = lookahead_levels(model, values)
    masks = switchable_masks(model, values, q_levels)
    options = _improvable_options(masks, states)
    if not options:
        return CandidateSet(base)

    total = math.prod(1 + len(acts) for _, _, acts in options) - 1
    if total <= budget:
        members = []
        for choice in itertools.product(
                *[(None,) + acts for _, _, acts in options]):
            if all(a is None for a in choice):
                continue
            members.append(Candidate.evaluated(
                model, _assign(base, options, choice), EXHAUSTIVE,
                tuple(choice)))
        return CandidateSet(base, members, budget_hit=False)

    members = []
    seen = set()

    def keep(policy, origin, detail):
        if policy.key() not in seen:
            seen.add(policy.key())
            members.append(Candidate.evaluated(model, policy, origin, detail))

    for j, x, acts in options:
        for a in acts:
            keep(base.with_entry(j, x, a), SINGLETON, (j, x, a))
    greedy = tuple(int(np.argmax(q_levels[j - 1, x])) for j, x, _ in options)
    keep(_assign(base, options, greedy), ALL_GREEDY,
         tuple(states) if len(states) == 1 else ())

    if rng is not None:
        attempts = 0
        while len(members) < budget and attempts < 10 * budget:
            attempts += 1
            draws = [int(rng.integers(0, len(acts) + 1))
                     for _, _, acts in options]
            choice = tuple(None if d == 0 else acts[d - 1]
                           for d, (_, _, acts) in zip(draws, options))
            if all(a is None for a in choice):
                continue
            keep(_assign(base, options, choice), SAMPLED, choice)
    logger.debug("candidate set truncated: %d of %d members kept",
                 len(members), total)
    return CandidateSet(base, members, budget_hit=True)


def generate_beta_at_state(model, base, x, budget=DEFAULT_BUDGET, rng=None,
                           base_values=None):
    """
    Strict improvements of ``base`` that only switch state ``x``.

    Parameters
    ----------
    model : MdpModel
    base : FiniteHorizonPolicy
    x : int
        The state whose coordinate may change.
    budget : int, optional
        Largest set enumerated exhaustively.
    rng : numpy.random.Generator, optional
        When given and the set is truncated, extra members are sampled
        until ``budget`` is reached.
    base_values : ValueTable, optional
        Precomputed values of ``base``.

    Returns
    -------
    CandidateSet
        Empty exactly when no level is improvable at ``x``.
    """

    if not 0 <= x < model.num_states:
        raise PreconditionError(f"state {x} out of range")
    if base_values is None:
        base_values = evaluate_policy(model, base)
    return _generate(model, base, base_values, [x], budget, rng)


def generate_beta(model, base, budget=DEFAULT_BUDGET, rng=None,
                  base_values=None):
    """ Strict improvements of ``base`` over every improvable pair. """

    if base_values is None:
        base_values = evaluate_policy(model, base)
    return _generate(model, base, base_values,
                     list(range(model.num_states)), budget, rng)


def _as_action(a):
    try:
        return int(a)
    except (TypeError, ValueError):
        return None


def improve_at_state(model, base, x, supervisor_suggestions=(),
                     budget=DEFAULT_BUDGET, rng=None, guard=True):
    """
    Update ``base`` at the single state ``x``.

    The new x-coordinate comes from switching over the base, the
    strict improvements at ``x`` and one hybrid per supervisor
    suggestion. A suggested action enters a hybrid only if it is
    admissible and, with ``guard``, switchable against the base's own
    values. The result is re-evaluated; if any ``V_H`` component
    dropped, the supervisor hybrids are discarded, and failing that the
    base is kept.

    Parameters
    ----------
    model : MdpModel
    base : FiniteHorizonPolicy
    x : int
        The visited state.
    supervisor_suggestions : sequence of sequence
        Per-level actions for ``x``, level ``j`` at position ``j-1``;
        ``None`` means no suggestion.
    budget : int, optional
    rng : numpy.random.Generator, optional
    guard : bool, optional
        ``False`` admits every admissible suggestion (diagnostics).

    Returns
    -------
    tuple
        ``(FiniteHorizonPolicy, ImprovementReport)``.
    """

    if not 0 <= x < model.num_states:
        raise PreconditionError(f"state {x} out of range")
    values = evaluate_policy(model, base)
    horizon = base.horizon
    beta = generate_beta_at_state(model, base, x, budget, rng, values)
    report = ImprovementReport(state=x)

    q_levels = lookahead_levels(model, values)
    hybrids = []
    for index, suggestion in enumerate(supervisor_suggestions):
        suggestion = list(suggestion)
        if len(suggestion) != horizon:
            report.suggestions_offered += 1
            report.rejected.append((0, -1, "wrong length"))
            continue
        column = base.column(x).copy()
        touched = False
        for j, raw in enumerate(suggestion, start=1):
            if raw is None:
                continue
            report.suggestions_offered += 1
            a = _as_action(raw)
            if a is None or not model.is_admissible(x, a):
                report.rejected.append((j, -1 if a is None else a,
                                        "inadmissible"))
                continue
            if a == column[j - 1]:
                continue
            switchable = q_levels[j - 1, x, a] > values.values[j][x] + STRICT_SLACK
            if guard and not switchable:
                report.rejected.append((j, a, "not switchable"))
                continue
            column[j - 1] = a
            report.accepted.append((j, a))
            touched = True
        if touched:
            hybrids.append(Candidate.evaluated(
                model, base.with_column(x, column), SUPERVISOR, (index,)))

    base_member = Candidate(base, values, BASE)
    pools = [("fused", [base_member] + beta.members + hybrids),
             ("beta-only", [base_member] + beta.members)]
    result, result_values = base, values
    for label, pool in pools:
        switched = policy_switch(pool)
        candidate = base.with_column(x, switched.column(x))
        cand_values = evaluate_policy(model, candidate)
        if np.all(cand_values.top() >= values.top() - STRICT_SLACK):
            result, result_values = candidate, cand_values
            report.candidates_examined = len(pool)
            break
        report.fallback = "beta-only" if label == "fused" else "base"
        logger.warning("update at state %d dropped a value after %s "
                       "switching; falling back", x, label)

    old, new = base.column(x), result.column(x)
    report.changed_pairs = [(j, x, int(old[j - 1]), int(new[j - 1]))
                            for j in range(1, horizon + 1)
                            if old[j - 1] != new[j - 1]]
    report.value_gain = result_values.top() - values.top()
    report.values = result_values
    if beta.members and not np.any(report.value_gain > STRICT_SLACK):
        if np.any(result_values.values > values.values + STRICT_SLACK):
            # Only levels that V_H never reaches from here improved.
            logger.debug("state %d: gain below level %d only", x, horizon)
        else:
            logger.warning("state %d was improvable but the update gained "
                           "nothing", x)
    return result, report


class SyncResult(NamedTuple):
    """ Outcome of :func:`run_pips_sync`. """

    policy: FiniteHorizonPolicy
    iterations: int
    snapshots: list


def run_pips_sync(model, initial, budget=DEFAULT_BUDGET, rng=None,
                  extra_candidates=None):
    """
    Synchronous PIPS: switch over all strict improvements until none
    is left.

    Parameters
    ----------
    model : MdpModel
    initial : FiniteHorizonPolicy
    budget : int, optional
    rng : numpy.random.Generator, optional
        Used to sample members of truncated candidate sets.
    extra_candidates : callable, optional
        ``f(policy) -> iterable of FiniteHorizonPolicy``; added to every
        switching pool.

    Returns
    -------
    SyncResult
        Final policy, number of improvement iterations, and ``V_H``
        after every iteration (the initial one first).
    """

    policy = initial
    values = evaluate_policy(model, policy)
    snapshots = [values.top().copy()]
    seen = {policy.key()}
    iterations = 0
    while True:
        beta = generate_beta(model, policy, budget, rng, values)
        if not beta.members:
            break
        pool = list(beta.members)
        if extra_candidates is not None:
            pool += [Candidate.evaluated(model, p, SUPERVISOR)
                     for p in extra_candidates(policy)]
        policy = policy_switch(pool, model=model)
        values = evaluate_policy(model, policy)
        if policy.key() in seen:
            raise RuntimeError("synchronous PIPS revisited a policy")
        seen.add(policy.key())
        iterations += 1
        snapshots.append(values.top().copy())
        logger.info("PIPS iteration %d: %d candidates, V_H sum %.12g",
                    iterations, len(pool), float(values.top().sum()))
    return SyncResult(policy, iterations, snapshots)


class StateSchedule(ABC):
    """
    Source of update states for the off-line asynchronous driver.

    :meth:`bind` is called once before the run; :meth:`next_state`
    returns the next state, or ``None`` when the source is exhausted.
    """

    def bind(self, model, horizon):
        pass

    @abstractmethod
    def next_state(self, model, policy, step):
        """
        Parameters
        ----------
        model : MdpModel
        policy : FiniteHorizonPolicy
            Current policy.
        step : int
            1-based step counter.
        """

        pass


class ImprovableFirstSchedule(StateSchedule):
    """ Lowest-index state with a nonempty ``I_x``. """

    def next_state(self, model, policy, step):
        pairs = improvable_set(model, policy)
        return min(p.x for p in pairs) if pairs else None


class ExplicitSchedule(StateSchedule):
    """
    A given state sequence, repeated cyclically unless ``cycle`` is off.
    """

    def __init__(self, states, cycle=True):
        self.states = [int(s) for s in states]
        self.cycle = cycle
        if not self.states:
            raise PreconditionError("empty state schedule")

    def bind(self, model, horizon):
        bad = [s for s in self.states if not 0 <= s < model.num_states]
        if bad:
            raise PreconditionError(f"schedule holds invalid states {bad}")

    def next_state(self, model, policy, step):
        i = step - 1
        if i >= len(self.states) and not self.cycle:
            return None
        return self.states[i % len(self.states)]


class LevelEmbeddedSchedule(ExplicitSchedule):
    """ ``H`` seeded permutations of the states, visited once each. """

    def __init__(self, permutation_seed=0):
        self.permutation_seed = permutation_seed
        self.states = []
        self.cycle = False

    def bind(self, model, horizon):
        self.states = level_embedded_schedule(model, horizon,
                                              self.permutation_seed)


def level_embedded_schedule(model, horizon, permutation_seed=0):
    """
    Update states that solve ``M_1``, then ``M_2``, ..., then ``M_H``.

    Returns
    -------
    list of int
        ``horizon`` blocks, each a seeded permutation of all states.
    """

    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    rng = np.random.default_rng(permutation_seed)
    sequence = []
    for _ in range(horizon):
        sequence.extend(int(x) for x in rng.permutation(model.num_states))
    return sequence


class AsyncResult(NamedTuple):
    """ Outcome of :func:`run_pips_async_offline`. """

    policy: FiniteHorizonPolicy
    reports: list
    terminated: bool


class AsyncPipsRunner(BaseRunner):
    """ Off-line asynchronous PIPS, one state per step. """

    def __init__(self, model, initial, schedule, budget, max_steps, rng):
        super().__init__(max_steps)
        self.model = model
        self.policy = initial
        self.schedule = schedule
        self.budget = budget
        self.rng = rng
        self.reports = []
        self.terminated = False
        self._seen = {initial.key()}
        schedule.bind(model, initial.horizon)

    def loop(self, k):
        if not improvable_set(self.model, self.policy):
            self.terminated = True
            self.stop("optimal")
            return
        x = self.schedule.next_state(self.model, self.policy, k)
        if x is None:
            self.stop("schedule exhausted")
            return
        self.policy, report = improve_at_state(
            self.model, self.policy, x, budget=self.budget, rng=self.rng)
        self.reports.append(report)
        if report.changed:
            if self.policy.key() in self._seen:
                raise RuntimeError("asynchronous PIPS revisited a policy")
            self._seen.add(self.policy.key())
            logger.debug("step %d: state %d changed %d levels", k, x,
                         len(report.changed_pairs))

    def finish(self):
        if not self.terminated:
            self.terminated = not improvable_set(self.model, self.policy)
        logger.info("asynchronous PIPS: %d steps, terminated=%s (%s)",
                    self.steps_taken, self.terminated, self.stop_reason)
        return AsyncResult(self.policy, self.reports, self.terminated)


def run_pips_async_offline(model, initial, schedule, budget=DEFAULT_BUDGET,
                           max_steps=DEFAULT_MAX_STEPS, rng=None):
    """
    Off-line asynchronous PIPS driven by a state schedule.

    Parameters
    ----------
    model : MdpModel
    initial : FiniteHorizonPolicy
    schedule : StateSchedule
        Improvable-first, explicit or level-embedded.
    budget : int, optional
    max_steps : int, optional
    rng : numpy.random.Generator, optional

    Returns
    -------
    AsyncResult
        ``terminated`` is ``True`` exactly when the final policy has an
        empty improvable set.
    """

    initial.check_admissible(model)
    runner = AsyncPipsRunner(model, initial, schedule, budget, max_steps, rng)
    return runner.start()
