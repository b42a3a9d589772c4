"""
The on-line rolling-horizon controller.

At step ``k`` the controller observes ``x_k``, asks its supervisors for
suggestions at ``x_k``, updates the current H-length policy at ``x_k``
only (see :func:`policy_switching.improve_at_state`), applies the first
entry ``σ_k[H](x_k)`` and lets the system move. The value row of the
policy never decreases, so the policy eventually stops changing; the
trace records where it settled and whether it is optimal over the part
of the state space the run keeps visiting.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FuturesTimeout
from dataclasses import dataclass, field

import numpy as np

from .constants import *
from .mdp_core import PreconditionError, sample_next_state
from .finite_horizon import (FiniteHorizonPolicy, evaluate_policy,
                             improvable_set, random_policy)
from .policy_switching import improve_at_state
from .chain_analysis import StationaryPolicy, communicating_classes
from .runner import BaseRunner
from .supervisors import builtin_supervisor

__all__ = ["OnlineConfig",
           "StepRecord",
           "OnlineTrace",
           "LocalOptReport",
           "SupervisorPanel",
           "OnlineController",
           "online_step",
           "run_online",
           "verify_local_optimality",
           "builtin_supervisor",
           ]

logger = logging.getLogger(__name__)

# Local-optimality verdicts.
LOCALLY_OPTIMAL = "locally-optimal"
NOT_LOCALLY_OPTIMAL = "not-locally-optimal"
INCONCLUSIVE = "inconclusive"


@dataclass
class OnlineConfig:
    """
    Parameters of one on-line run.

    Attributes
    ----------
    horizon : int
        ``H``.
    max_steps : int
        Hard limit on the number of steps.
    initial_state : int
        ``x_1`` unless a distribution or a state stream is given.
    initial_distribution : sequence of float, optional
        ``x_1`` is drawn from it.
    initial_policy : FiniteHorizonPolicy, optional
        ``π_1(H)``; a seeded random admissible policy when omitted.
    budget : int
        Candidate budget of every single-state update.
    window : int, optional
        Steps without a change required before stopping early;
        defaults to ``DEFAULT_WINDOW_FACTOR * |X|``.
    seed : int
        Root of every random stream of the run.
    stop_early : bool
        Whether the stability rule may end the run before ``max_steps``.
    guard_supervisors : bool
        ``False`` admits non-switchable suggestions (diagnostics).
    supervisor_timeout : float, optional
        Seconds allowed per supervisor call.
    state_stream : sequence of int, optional
        Externally observed states ``x_1, x_2, ...`` replacing the
        simulated transitions; ``n`` states drive at most ``n - 1``
        steps.
    """

    horizon: int
    max_steps: int = DEFAULT_MAX_STEPS
    initial_state: int = 0
    initial_distribution: tuple = None
    initial_policy: FiniteHorizonPolicy = None
    budget: int = DEFAULT_BUDGET
    window: int = None
    seed: int = 0
    stop_early: bool = True
    guard_supervisors: bool = True
    supervisor_timeout: float = None
    state_stream: tuple = None

    def window_for(self, model):
        if self.window is None:
            return DEFAULT_WINDOW_FACTOR * model.num_states
        return self.window

    def check(self, model):
        """ Raise :class:`PreconditionError` unless usable with ``model``. """

        n = model.num_states
        if self.horizon < 1:
            raise PreconditionError("horizon must be >= 1")
        if self.max_steps < 1:
            raise PreconditionError("max_steps must be >= 1")
        if self.budget < 1:
            raise PreconditionError("budget must be >= 1")
        if self.window_for(model) < n:
            raise PreconditionError(
                f"window {self.window} is shorter than |X| = {n}")
        if not 0 <= self.initial_state < n:
            raise PreconditionError(
                f"initial state {self.initial_state} out of range")
        if self.initial_distribution is not None:
            dist = np.asarray(self.initial_distribution, dtype=float)
            if (dist.shape != (n,) or np.any(dist < 0)
                    or abs(dist.sum() - 1.0) > ROW_TOLERANCE):
                raise PreconditionError(
                    "initial distribution must be a probability vector "
                    f"over {n} states")
        if self.initial_policy is not None:
            if self.initial_policy.horizon != self.horizon:
                raise PreconditionError(
                    f"initial policy has horizon "
                    f"{self.initial_policy.horizon}, expected {self.horizon}")
            self.initial_policy.check_admissible(model)
        if self.supervisor_timeout is not None and self.supervisor_timeout <= 0:
            raise PreconditionError("supervisor timeout must be positive")
        if self.state_stream is not None:
            if len(self.state_stream) < 2:
                raise PreconditionError("state stream needs at least two states")
            bad = [s for s in self.state_stream if not 0 <= int(s) < n]
            if bad:
                raise PreconditionError(f"state stream holds invalid states {bad}")


@dataclass
class StepRecord:
    """
    One step of the on-line loop.

    ``action`` is always ``σ_k[H](x_k)`` of the updated policy and
    ``column`` its whole x_k-coordinate. ``value_row`` is ``V_H`` of the
    updated policy; only ``value_at_state`` goes to trace files.
    """

    k: int
    state: int
    action: int
    reward: float
    next_state: int
    changed_levels: list = field(default_factory=list)
    column: tuple = ()
    suggestions_offered: int = 0
    suggestions_accepted: list = field(default_factory=list)
    suggestions_rejected: list = field(default_factory=list)
    faults: list = field(default_factory=list)
    fallback: str = None
    value_at_state: float = 0.0
    value_row: np.ndarray = field(default=None, repr=False)

    @property
    def changed(self):
        return bool(self.changed_levels)

    def to_json(self):
        """ One line of a trace file. """

        return {
            "k": int(self.k),
            "state": int(self.state),
            "action": int(self.action),
            "reward": float(self.reward),
            "next_state": None if self.next_state is None
            else int(self.next_state),
            "changed_levels": [int(j) for j in self.changed_levels],
            "suggestions_accepted": len(self.suggestions_accepted),
            "suggestions_rejected": len(self.suggestions_rejected),
            "value_at_state": float(self.value_at_state),
        }


@dataclass
class LocalOptReport:
    """
    Optimality of a settled policy over the class the run stays in.

    Attributes
    ----------
    status : str
        ``"locally-optimal"``, ``"not-locally-optimal"`` or
        ``"inconclusive"``.
    anchor : int or None
        The state ``x*`` visited after stabilization.
    class_states : tuple
        ``[x*]`` under ``[σ[H]]``.
    per_state : dict
        State to ``True`` when ``I_x`` is empty.
    globally_optimal : bool or None
        Whether the whole improvable set is empty.
    """

    status: str
    anchor: int = None
    class_states: tuple = ()
    per_state: dict = field(default_factory=dict)
    globally_optimal: bool = None

    @property
    def locally_optimal(self):
        return self.status == LOCALLY_OPTIMAL

    def to_json(self):
        return {
            "status": self.status,
            "anchor": self.anchor,
            "class": [int(x) for x in self.class_states],
            "per_state": {str(x): bool(ok) for x, ok in self.per_state.items()},
            "globally_optimal": self.globally_optimal,
        }


@dataclass
class OnlineTrace:
    """
    A finished on-line run.

    Attributes
    ----------
    records : list of StepRecord
    policy : FiniteHorizonPolicy
        The last policy, ``λ(H)`` when the run stabilized.
    initial_policy : FiniteHorizonPolicy
    stabilization_step : int or None
        Last step that changed a coordinate (0 for none) when the
        stability rule held at the end of the run, ``None`` otherwise.
    stop_reason : str
    final_state : int or None
        The state after the last step.
    local_optimality : LocalOptReport
    """

    records: list
    policy: FiniteHorizonPolicy
    initial_policy: FiniteHorizonPolicy
    stabilization_step: int = None
    stop_reason: str = None
    final_state: int = None
    local_optimality: LocalOptReport = None

    @property
    def changes(self):
        """ Number of steps that changed a coordinate. """

        return sum(1 for r in self.records if r.changed)

    def summary(self):
        """ The trailing object of a trace file. """

        return {
            "summary": True,
            "indexing": INDEXING_TAG,
            "horizon": self.policy.horizon,
            "policy": self.policy.actions.tolist(),
            "steps": len(self.records),
            "stabilization_step": self.stabilization_step,
            "stop_reason": self.stop_reason,
            "local_optimality": None if self.local_optimality is None
            else self.local_optimality.to_json(),
        }


class SupervisorPanel:
    """
    The supervisors of one run.

    With a timeout every supervisor gets its own single worker thread,
    reused from step to step. A supervisor that times out is dropped
    for the rest of the run, so a late call never overlaps a new one
    and at most one thread per supervisor is ever left running.
    Faults come back as messages, never raised.

    Parameters
    ----------
    supervisors : sequence of Supervisor
    timeout : float, optional
        Seconds allowed per call.
    """

    def __init__(self, supervisors=(), timeout=None):
        self.supervisors = list(supervisors)
        self.timeout = timeout
        self.dropped = set()
        self._pools = {}

    def consult(self, k, x, policy):
        """
        Ask every live supervisor about ``x``.

        Returns
        -------
        tuple
            ``(suggestions, faults)``, both lists.
        """

        suggestions, faults = [], []
        for i, supervisor in enumerate(self.supervisors):
            if i in self.dropped:
                continue
            offered, fault = self._call(i, supervisor, k, x, policy)
            suggestions.extend(offered)
            if fault is not None:
                logger.warning("step %d: %s", k, fault)
                faults.append(fault)
        return suggestions, faults

    def _call(self, i, supervisor, k, x, policy):
        try:
            if self.timeout is None:
                raw = supervisor.suggest(k, x, policy)
            else:
                if i not in self._pools:
                    self._pools[i] = ThreadPoolExecutor(
                        max_workers=1, thread_name_prefix=f"supervisor-{i}")
                raw = self._pools[i].submit(
                    supervisor.suggest, k, x, policy).result(
                        timeout=self.timeout)
            return [] if raw is None else [list(s) for s in raw], None
        except FuturesTimeout:
            self.dropped.add(i)
            self._pools.pop(i).shutdown(wait=False)
            return [], (f"{supervisor!r} timed out after {self.timeout}s "
                        f"and was dropped")
        except Exception as exc:
            return [], f"{supervisor!r} failed: {exc!r}"

    def close(self):
        """ Release the worker threads of supervisors still in use. """

        for pool in self._pools.values():
            pool.shutdown(wait=False)
        self._pools.clear()


def online_step(model, policy, x, supervisors=(), rng=None,
                budget=DEFAULT_BUDGET, k=1, guard=True, timeout=None,
                beta_rng=None, next_state=None):
    """
    One step of the on-line loop at the visited state ``x``.

    Parameters
    ----------
    model : MdpModel
    policy : FiniteHorizonPolicy
        ``π_{k-1}(H)``.
    x : int
        ``x_k``.
    supervisors : sequence of Supervisor or SupervisorPanel
        A panel keeps its worker threads and dropped supervisors across
        steps; a plain sequence is consulted afresh.
    rng : numpy.random.Generator, optional
        Transition stream; required unless ``next_state`` is given.
    budget : int, optional
    k : int, optional
        Step counter passed to the supervisors.
    guard : bool, optional
    timeout : float, optional
        Seconds allowed per supervisor call; ignored for a panel.
    beta_rng : numpy.random.Generator, optional
        Stream for sampled candidates of truncated sets.
    next_state : int, optional
        Externally observed ``x_{k+1}``.

    Returns
    -------
    tuple
        ``(π_k(H), StepRecord, x_{k+1})``.
    """

    if not 0 <= x < model.num_states:
        raise PreconditionError(f"state {x} out of range")
    policy.check_admissible(model)
    if rng is None and next_state is None:
        raise PreconditionError("need a random stream or the next state")

    if isinstance(supervisors, SupervisorPanel):
        suggestions, faults = supervisors.consult(k, x, policy)
    else:
        panel = SupervisorPanel(supervisors, timeout)
        try:
            suggestions, faults = panel.consult(k, x, policy)
        finally:
            panel.close()

    updated, report = improve_at_state(model, policy, x, suggestions,
                                       budget, beta_rng, guard)
    action = int(updated.first_entry()[x])
    if next_state is None:
        next_state = sample_next_state(model, x, action, rng)
    top = report.values.top()
    record = StepRecord(
        k=k,
        state=x,
        action=action,
        reward=float(model.rewards[x, action]),
        next_state=next_state,
        changed_levels=[j for j, _, _, _ in report.changed_pairs],
        column=tuple(int(a) for a in updated.column(x)),
        suggestions_offered=report.suggestions_offered,
        suggestions_accepted=list(report.accepted),
        suggestions_rejected=list(report.rejected),
        faults=faults,
        fallback=report.fallback,
        value_at_state=float(top[x]),
        value_row=top.copy(),
    )
    return updated, record, next_state


class OnlineController(BaseRunner):
    """
    Runs :func:`online_step` until ``max_steps``, the end of an
    external state stream, or the stability rule.

    The stability rule holds at step ``k`` when the last ``W`` steps
    changed nothing, no state visited in that window (the current state
    included) is improvable, and the window covered the current
    state's whole class under ``[σ[H]]``.
    """

    def __init__(self, model, cfg, supervisors=()):
        cfg.check(model)
        super().__init__(cfg.max_steps)
        self.model = model
        self.cfg = cfg
        self.panel = SupervisorPanel(supervisors, cfg.supervisor_timeout)
        self.window = cfg.window_for(model)

        policy_ss, start_ss, move_ss, beta_ss = \
            np.random.SeedSequence(cfg.seed).spawn(4)
        self.move_rng = np.random.default_rng(move_ss)
        self.beta_rng = np.random.default_rng(beta_ss)
        if cfg.initial_policy is not None:
            self.policy = cfg.initial_policy
        else:
            self.policy = random_policy(model, cfg.horizon,
                                        np.random.default_rng(policy_ss))
        self.initial_policy = self.policy

        if cfg.state_stream is not None:
            self.state = int(cfg.state_stream[0])
        elif cfg.initial_distribution is not None:
            start_rng = np.random.default_rng(start_ss)
            self.state = int(start_rng.choice(
                model.num_states, p=np.asarray(cfg.initial_distribution)))
        else:
            self.state = int(cfg.initial_state)

        self.values = evaluate_policy(model, self.policy).top()
        self.records = []
        self.stable = False

    def loop(self, k):
        stream = self.cfg.state_stream
        observed = None if stream is None else int(stream[k])
        self.policy, record, next_state = online_step(
            self.model, self.policy, self.state, self.panel,
            rng=self.move_rng, budget=self.cfg.budget, k=k,
            guard=self.cfg.guard_supervisors, beta_rng=self.beta_rng,
            next_state=observed)

        if np.any(record.value_row < self.values - STRICT_SLACK):
            raise RuntimeError(f"value row dropped at step {k}")
        self.values = record.value_row
        self.records.append(record)
        self.state = next_state
        if record.changed:
            logger.debug("step %d: state %d changed levels %s", k,
                         record.state, record.changed_levels)

        if self.cfg.stop_early and self._stable():
            self.stable = True
            self.stop("stable")
        elif stream is not None and k + 1 >= len(stream):
            self.stop("state stream exhausted")

    def _stable(self):
        if len(self.records) < self.window:
            return False
        recent = self.records[-self.window:]
        if any(r.changed for r in recent):
            return False
        visited = {r.state for r in recent} | {self.state}
        if any(p.x in visited for p in improvable_set(self.model, self.policy)):
            return False
        partition = communicating_classes(
            self.model, StationaryPolicy.first_entry_of(self.policy))
        members = partition.classes[partition.class_of(self.state)]
        return set(members) <= visited

    def start(self):
        try:
            return super().start()
        finally:
            self.panel.close()

    def finish(self):
        stable = self.stable or self._stable()
        if stable:
            changed = [r.k for r in self.records if r.changed]
            step = changed[-1] if changed else 0
        else:
            step = None
        trace = OnlineTrace(records=self.records,
                            policy=self.policy,
                            initial_policy=self.initial_policy,
                            stabilization_step=step,
                            stop_reason=self.stop_reason,
                            final_state=self.state)
        trace.local_optimality = verify_local_optimality(self.model, trace)
        logger.info("on-line run: %d steps, %d with changes, K=%s (%s)",
                    len(self.records), trace.changes, step, self.stop_reason)
        return trace


def run_online(model, cfg, supervisors=()):
    """
    Run the on-line controller.

    Parameters
    ----------
    model : MdpModel
    cfg : OnlineConfig
    supervisors : sequence of Supervisor, optional

    Returns
    -------
    OnlineTrace
        Deterministic given ``cfg.seed`` and deterministic supervisors.
    """

    return OnlineController(model, cfg, supervisors).start()


def verify_local_optimality(model, trace):
    """
    Check that the settled policy is optimal over the class it stays in.

    ``x*`` is the last state visited after the stabilization step; its
    class under ``[σ[H]]`` of the final policy is computed and ``I_x``
    is checked for every member.

    Parameters
    ----------
    model : MdpModel
    trace : OnlineTrace

    Returns
    -------
    LocalOptReport
        ``"inconclusive"`` when the trace never stabilized.
    """

    step = trace.stabilization_step
    if step is None:
        return LocalOptReport(INCONCLUSIVE)
    after = [r.state for r in trace.records if r.k > step]
    if trace.final_state is not None:
        after.append(trace.final_state)
    if not after:
        return LocalOptReport(INCONCLUSIVE)
    anchor = int(after[-1])

    policy = trace.policy
    partition = communicating_classes(
        model, StationaryPolicy.first_entry_of(policy))
    members = partition.classes[partition.class_of(anchor)]
    pairs = improvable_set(model, policy)
    per_state = {x: not any(p.x == x for p in pairs) for x in members}
    status = LOCALLY_OPTIMAL if all(per_state.values()) else NOT_LOCALLY_OPTIMAL
    return LocalOptReport(status=status,
                          anchor=anchor,
                          class_states=tuple(members),
                          per_state=per_state,
                          globally_optimal=not pairs)
