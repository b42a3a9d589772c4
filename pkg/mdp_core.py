"""
Finite discounted Markov decision processes.

The :class:`MdpModel` is the unit object of the package: every other
module reads its reward table and transition tensor. Per-state action
counts may differ; storage is dense over ``(x, a)`` with the
inadmissible tail of each state padded (zero reward, zero row) and
masked out by ``admissible``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constants import *

__all__ = ["PreconditionError",
           "ModelFormatError",
           "InvalidModelError",
           "MdpModel",
           "GenConfig",
           "Violation",
           "ValidationReport",
           "validate_model",
           "check_action",
           "sample_next_state",
           "generate_random_mdp",
           "model_from_document",
           "model_to_document",
           "toggle2",
           "STAY",
           "TOGGLE",
           ]

logger = logging.getLogger(__name__)

# Action names of the two-state reference model.
STAY = 0
TOGGLE = 1


class PreconditionError(ValueError):
    """ An operation was called outside its preconditions. """


class ModelFormatError(ValueError):
    """ A model document does not follow the JSON schema. """


class InvalidModelError(PreconditionError):
    """
    A model parsed correctly but failed validation.

    Attributes
    ----------
    report : ValidationReport
        Every violated invariant.
    """

    def __init__(self, report, source=""):
        self.report = report
        where = f" ({source})" if source else ""
        super().__init__(f"invalid model{where}:\n" + "\n".join(report.lines()))


@dataclass(frozen=True, eq=False)
class MdpModel:
    """
    Immutable finite MDP.

    Attributes
    ----------
    num_states : int
        ``|X|``.
    actions_per_state : tuple of int
        ``|A(x)|`` for every state.
    rewards : numpy.ndarray
        ``R[x, a]``, shape ``(|X|, max |A(x)|)``.
    transitions : numpy.ndarray
        ``P[x, a, y]``, shape ``(|X|, max |A(x)|, |X|)``.
    gamma : float
        Discount factor.
    name : str
        Free label, kept in files.
    """

    num_states: int
    actions_per_state: tuple
    rewards: np.ndarray
    transitions: np.ndarray
    gamma: float
    name: str = "mdp"
    admissible: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        aps = tuple(int(n) for n in self.actions_per_state)
        rewards = np.array(self.rewards, dtype=float)
        transitions = np.array(self.transitions, dtype=float)
        width = max(aps) if aps else 0
        mask = np.arange(width)[None, :] < np.array(aps)[:, None]
        for array in (rewards, transitions, mask):
            array.setflags(write=False)
        object.__setattr__(self, "actions_per_state", aps)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "admissible", mask)

    @classmethod
    def from_lists(cls, rewards, transitions, gamma, name="mdp"):
        """
        Build a model from ragged nested lists.

        Parameters
        ----------
        rewards : list of list of float
            ``rewards[x][a]``.
        transitions : list of list of list of float
            ``transitions[x][a][y]``.
        gamma : float
            Discount factor.
        name : str, optional
            Model label.

        Raises
        ------
        ModelFormatError
            If the nesting is inconsistent.
        """

        try:
            n = len(rewards)
            if n == 0:
                raise ModelFormatError("a model needs at least one state")
            if len(transitions) != n:
                raise ModelFormatError(
                    f"{len(transitions)} transition blocks for {n} states")
            aps = [len(row) for row in rewards]
            width = max(aps)
            r = np.zeros((n, width))
            p = np.zeros((n, width, n))
            for x in range(n):
                if len(transitions[x]) != aps[x]:
                    raise ModelFormatError(
                        f"state {x}: {aps[x]} rewards but "
                        f"{len(transitions[x])} transition rows")
                for a in range(aps[x]):
                    r[x, a] = float(rewards[x][a])
                    row = [float(v) for v in transitions[x][a]]
                    if len(row) != n:
                        raise ModelFormatError(
                            f"(x={x}, a={a}): row of length {len(row)}, "
                            f"expected {n}")
                    p[x, a, :] = row
        except (TypeError, ValueError, KeyError, IndexError) as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"malformed model lists: {e}") from e
        return cls(n, tuple(aps), r, p, gamma, name)

    @property
    def max_actions(self):
        """ Width of the dense ``(x, a)`` storage. """

        return self.rewards.shape[1]

    def is_admissible(self, x, a):
        """ Whether ``a`` is an admissible action at state ``x``. """

        return (0 <= int(x) < self.num_states
                and 0 <= int(a) < self.actions_per_state[int(x)])

    def __eq__(self, other):
        if not isinstance(other, MdpModel):
            return NotImplemented
        return (self.num_states == other.num_states
                and self.actions_per_state == other.actions_per_state
                and self.gamma == other.gamma
                and np.array_equal(self.rewards, other.rewards)
                and np.array_equal(self.transitions, other.transitions))

    def __hash__(self):
        return hash((self.num_states, self.actions_per_state, self.gamma,
                     self.rewards.tobytes(), self.transitions.tobytes()))


class Violation(NamedTuple):
    """ One broken model invariant, located by ``(state, action)``. """

    kind: str
    state: int | None
    action: int | None
    message: str

    def __str__(self):
        where = []
        if self.state is not None:
            where.append(f"x={self.state}")
        if self.action is not None:
            where.append(f"a={self.action}")
        loc = f"({', '.join(where)}) " if where else ""
        return f"{self.kind}: {loc}{self.message}"


class ValidationReport:
    """ Collected model violations; empty exactly when the model is valid. """

    def __init__(self, violations=()):
        self.violations = list(violations)

    def add(self, kind, state, action, message):
        self.violations.append(Violation(kind, state, action, message))

    @property
    def is_valid(self):
        return not self.violations

    def lines(self):
        return [str(v) for v in self.violations]

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __bool__(self):
        # Truthy when something is wrong, like a non-empty list.
        return bool(self.violations)


def validate_model(model):
    """
    Check every model invariant without raising.

    Parameters
    ----------
    model : MdpModel
        The model to inspect.

    Returns
    -------
    ValidationReport
        One entry per violated invariant, with coordinates.
    """

    report = ValidationReport()
    n = model.num_states
    if n < 1:
        report.add("states", None, None, "no states")
    if len(model.actions_per_state) != n:
        report.add("actions", None, None,
                   f"{len(model.actions_per_state)} action counts for "
                   f"{n} states")
    if not (math.isfinite(model.gamma) and 0.0 < model.gamma < 1.0):
        report.add("gamma", None, None,
                   f"discount out of range: {model.gamma!r} not in (0, 1)")

    for x, count in enumerate(model.actions_per_state):
        if count < 1:
            report.add("actions", x, None, "no admissible action")
        for a in range(count):
            reward = model.rewards[x, a]
            if not math.isfinite(reward):
                report.add("reward", x, a, f"reward {reward!r} is not finite")
            row = model.transitions[x, a]
            if not np.all(np.isfinite(row)):
                report.add("transition", x, a, "row has non-finite entries")
                continue
            if np.any(row < 0.0) or np.any(row > 1.0):
                report.add("transition", x, a, "entry outside [0, 1]")
            total = float(row.sum())
            if abs(total - 1.0) > ROW_TOLERANCE:
                report.add("transition", x, a,
                           f"row sums to {total:.12g}, expected 1")
    if report:
        logger.debug("model %r: %d violations", model.name, len(report))
    return report


def check_action(model, x, a):
    """
    Raise unless ``a`` is admissible at ``x``.

    Raises
    ------
    PreconditionError
    """

    if not model.is_admissible(x, a):
        raise PreconditionError(f"action {a} is not admissible at state {x}")


def sample_next_state(model, x, a, rng):
    """
    Draw ``y`` with probability ``P[x][a][y]``.

    Parameters
    ----------
    model : MdpModel
        A valid model.
    x, a : int
        Current state and an admissible action.
    rng : numpy.random.Generator
        Advanced by exactly one uniform draw.

    Returns
    -------
    int
        The next state.
    """

    check_action(model, x, a)
    cumulative = np.cumsum(model.transitions[x, a])
    u = rng.random() * cumulative[-1]
    y = int(np.searchsorted(cumulative, u, side="right"))
    return min(y, model.num_states - 1)


@dataclass
class GenConfig:
    """
    Parameters of :func:`generate_random_mdp`.

    Attributes
    ----------
    num_states, num_actions : int
        Sizes; every state gets ``num_actions`` actions.
    transition_density : float
        Probability that an entry of a transition row is nonzero.
    reward_range : tuple of float
        Rewards are uniform on ``[lo, hi]``.
    ensure_positive : bool
        Add ``epsilon`` to every entry before renormalizing.
    gamma : float
        Discount factor.
    seed : int
        Seed of the stream used when no generator is passed.
    absorbing_states : int
        The last ``absorbing_states`` states loop on themselves under
        every action.
    epsilon : float
        Positive floor used by ``ensure_positive``.
    """

    num_states: int
    num_actions: int
    transition_density: float = 1.0
    reward_range: tuple = (0.0, 1.0)
    ensure_positive: bool = False
    gamma: float = 0.9
    seed: int = 0
    absorbing_states: int = 0
    epsilon: float = POSITIVE_EPSILON

    def check(self):
        """ Raise :class:`PreconditionError` on an unusable config. """

        lo, hi = self.reward_range
        if self.num_states < 1 or self.num_actions < 1:
            raise PreconditionError("need at least one state and one action")
        if not 0.0 < self.transition_density <= 1.0:
            raise PreconditionError("transition_density must be in (0, 1]")
        if lo > hi:
            raise PreconditionError("reward_range must satisfy lo <= hi")
        if not 0.0 < self.gamma < 1.0:
            raise PreconditionError("gamma must be in (0, 1)")
        if not 0 <= self.absorbing_states <= self.num_states:
            raise PreconditionError("absorbing_states out of range")
        if self.absorbing_states and self.ensure_positive:
            raise PreconditionError(
                "absorbing states cannot have all-positive transitions")
        if self.epsilon <= 0.0:
            raise PreconditionError("epsilon must be positive")


def generate_random_mdp(cfg, rng=None):
    """
    Draw a random model; a pure function of ``(cfg, seed)``.

    Parameters
    ----------
    cfg : GenConfig
        Sizes and options.
    rng : numpy.random.Generator, optional
        Stream to draw from. Defaults to one seeded with ``cfg.seed``.

    Returns
    -------
    MdpModel
        A model that passes :func:`validate_model`.
    """

    cfg.check()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n, m = cfg.num_states, cfg.num_actions
    lo, hi = cfg.reward_range

    rewards = rng.uniform(lo, hi, size=(n, m))
    weights = rng.random((n, m, n))
    # Draw the sparsity pattern even when dense, so the stream layout
    # does not depend on the density.
    keep = rng.random((n, m, n)) < cfg.transition_density
    rescue = rng.integers(0, n, size=(n, m))
    empty = ~keep.any(axis=2)
    xs, as_ = np.nonzero(empty)
    keep[xs, as_, rescue[xs, as_]] = True
    weights = np.where(keep, weights, 0.0)
    # A kept entry drawn as exactly 0.0 would leave an empty row.
    weights[keep & (weights == 0.0)] = np.finfo(float).tiny
    if cfg.ensure_positive:
        weights = weights + cfg.epsilon
    transitions = weights / weights.sum(axis=2, keepdims=True)

    for x in range(n - cfg.absorbing_states, n):
        transitions[x, :, :] = 0.0
        transitions[x, :, x] = 1.0

    model = MdpModel(n, (m,) * n, rewards, transitions, cfg.gamma,
                     name=f"random-{n}x{m}-seed{cfg.seed}")
    logger.debug("generated %s", model.name)
    return model


def model_from_document(doc):
    """
    Parse the JSON document form of a model.

    Raises
    ------
    ModelFormatError
        When required keys are missing or the nesting is inconsistent.
    """

    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    try:
        gamma = float(doc["gamma"])
        n = int(doc["num_states"])
        aps = [int(c) for c in doc["actions_per_state"]]
        rewards = doc["rewards"]
        transitions = doc["transitions"]
        if len(rewards) != n or len(aps) != n:
            raise ModelFormatError(
                f"num_states={n} but {len(rewards)} reward rows and "
                f"{len(aps)} action counts")
        for x, (count, row) in enumerate(zip(aps, rewards)):
            if len(row) != count:
                raise ModelFormatError(
                    f"state {x}: actions_per_state says {count}, "
                    f"{len(row)} rewards given")
    except KeyError as e:
        raise ModelFormatError(f"missing key {e}") from e
    except ModelFormatError:
        raise
    except (TypeError, ValueError) as e:
        raise ModelFormatError(str(e)) from e
    return MdpModel.from_lists(rewards, transitions, gamma,
                               name=str(doc.get("name", "mdp")))


def model_to_document(model):
    """ The JSON document form of ``model`` (ragged lists). """

    return {
        "name": model.name,
        "gamma": model.gamma,
        "num_states": model.num_states,
        "actions_per_state": list(model.actions_per_state),
        "rewards": [[float(model.rewards[x, a]) for a in range(c)]
                    for x, c in enumerate(model.actions_per_state)],
        "transitions": [[[float(p) for p in model.transitions[x, a]]
                         for a in range(c)]
                        for x, c in enumerate(model.actions_per_state)],
    }


def toggle2():
    """
    The two-state reference model.

    ``stay`` keeps the state, ``toggle`` swaps it;
    ``R(0, stay)=0, R(0, toggle)=1, R(1, stay)=2, R(1, toggle)=0`` and
    ``gamma=0.5``.
    """

    return MdpModel.from_lists(
        rewards=[[0.0, 1.0], [2.0, 0.0]],
        transitions=[[[1.0, 0.0], [0.0, 1.0]],
                     [[0.0, 1.0], [1.0, 0.0]]],
        gamma=0.5,
        name="toggle2",
    )
