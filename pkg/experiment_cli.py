"""
Command-line front end.

Subcommands::

    validate   <model>
    gen        --states N --actions A [...] -o <path>
    solve      <model> -H H [--terminal file] [--values out]
    pips-sync  <model> -H H [--init file] [--values out]
    pips-async <model> -H H --schedule {improvable|embedded|file:<path>}
               [--reports out.jsonl]
    online     <model> -H H --steps N --seed S --supervisor KIND [--trace out]
    analyze    <model> [--policy file] [--exhaustive]
    errorbound <model> --hmin A --hmax B -o <csv>

Exit codes: 0 success, 2 unreadable or malformed input, 3 invalid model
or violated precondition, 64 bad usage. See ``docs/cli_manual.md``.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .constants import *
from .mdp_core import (PreconditionError, ModelFormatError, InvalidModelError,
                       GenConfig, validate_model, generate_random_mdp)
from .finite_horizon import (backward_induction, evaluate_policy,
                             improvable_set, random_policy)
from .policy_switching import (run_pips_sync, run_pips_async_offline,
                               ImprovableFirstSchedule, ExplicitSchedule,
                               LevelEmbeddedSchedule)
from .chain_analysis import (StationaryPolicy, communicating_classes,
                             is_mdp_communicating, rolling_horizon_error,
                             error_envelope)
from .online_controller import OnlineConfig, run_online
from .supervisors import KINDS, builtin_supervisor
from . import report_writer

__all__ = ["ExperimentConfig",
           "UsageError",
           "load_model",
           "save_model",
           "build_parser",
           "run_cli",
           "main",
           ]

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """ Bad command line. """


class _Parser(argparse.ArgumentParser):
    """ Reports usage errors by raising instead of exiting with 2. """

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class ExperimentConfig:
    """
    The parameters of one command, checked before anything runs.

    Attributes
    ----------
    command : str
    inputs : list of str
        Files that must exist.
    horizons : list of int
    seed : int
    budget : int
    steps : int or None
    jobs : int
    """

    command: str
    inputs: list = field(default_factory=list)
    horizons: list = field(default_factory=list)
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    steps: int = None
    jobs: int = 1

    @classmethod
    def from_args(cls, args):
        inputs = [getattr(args, name) for name in
                  ("model", "terminal", "init", "policy")
                  if getattr(args, name, None)]
        schedule = getattr(args, "schedule", None) or ""
        if schedule.startswith("file:"):
            inputs.append(schedule[len("file:"):])
        horizons = [h for h in (getattr(args, "horizon", None),) if h is not None]
        if getattr(args, "hmin", None) is not None:
            horizons += [args.hmin, args.hmax]
        return cls(command=args.command,
                   inputs=inputs,
                   horizons=horizons,
                   seed=getattr(args, "seed", 0),
                   budget=getattr(args, "budget", DEFAULT_BUDGET),
                   steps=getattr(args, "steps", None),
                   jobs=getattr(args, "jobs", 1))

    def check(self):
        """
        Raises
        ------
        FileNotFoundError
            For a missing input file.
        PreconditionError
            For an out-of-range number.
        """

        for path in self.inputs:
            if not os.path.isfile(path):
                raise FileNotFoundError(f"no such file: {path}")
        if any(h < 1 for h in self.horizons):
            raise PreconditionError("horizons must be >= 1")
        if self.budget < 1:
            raise PreconditionError("budget must be >= 1")
        if self.steps is not None and self.steps < 1:
            raise PreconditionError("steps must be >= 1")
        if self.jobs < 1:
            raise PreconditionError("jobs must be >= 1")


def load_model(path):
    """
    Read and validate a model file.

    Raises
    ------
    OSError, ModelFormatError
        Unreadable or malformed file.
    InvalidModelError
        The model parsed but failed validation.
    """

    model = report_writer.read_model(path)
    report = validate_model(model)
    if report:
        raise InvalidModelError(report, path)
    return model


def save_model(model, path):
    report_writer.write_model(model, path)


def _print_lines(lines):
    for line in lines:
        print(line)


def _initial_policy(args, model):
    if getattr(args, "init", None):
        return report_writer.read_policy(args.init)
    return random_policy(model, args.horizon, np.random.default_rng(args.seed))


def _terminal(args, model):
    if getattr(args, "terminal", None):
        return report_writer.read_vector(args.terminal, model.num_states)
    return None


def cmd_validate(args):
    model = report_writer.read_model(args.model)
    report = validate_model(model)
    if report:
        _print_lines(report.lines())
        print(f"{args.model}: invalid ({len(report)} violations)")
        return EXIT_DOMAIN
    print(f"{args.model}: valid ({model.num_states} states, "
          f"gamma={format(model.gamma, 'g')})")
    return EXIT_OK


def cmd_gen(args):
    cfg = GenConfig(num_states=args.states,
                    num_actions=args.actions,
                    transition_density=args.density,
                    reward_range=(args.reward_lo, args.reward_hi),
                    ensure_positive=args.positive,
                    gamma=args.gamma,
                    seed=args.seed,
                    absorbing_states=args.absorbing)
    model = generate_random_mdp(cfg)
    save_model(model, args.output)
    print(f"wrote {model.name} to {args.output}")
    return EXIT_OK


def cmd_solve(args):
    model = load_model(args.model)
    values, policy = backward_induction(model, args.horizon,
                                        _terminal(args, model))
    _print_lines(report_writer.value_table_lines(values, "V*"))
    _print_lines(report_writer.policy_lines(policy))
    if args.output:
        report_writer.write_policy(policy, args.output)
    if args.values:
        report_writer.write_value_table(values, args.values)
    return EXIT_OK


def cmd_pips_sync(args):
    model = load_model(args.model)
    initial = _initial_policy(args, model)
    if initial.horizon != args.horizon:
        raise PreconditionError(
            f"initial policy has horizon {initial.horizon}, -H is {args.horizon}")
    initial.check_admissible(model)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0])
    result = run_pips_sync(model, initial, args.budget, rng)
    values = evaluate_policy(model, result.policy)
    print(f"iterations: {result.iterations}")
    _print_lines(report_writer.value_table_lines(values))
    _print_lines(report_writer.policy_lines(result.policy))
    if args.output:
        report_writer.write_policy(result.policy, args.output)
    if args.values:
        report_writer.write_value_table(values, args.values)
    return EXIT_OK


def _schedule(choice, seed):
    if choice == "improvable":
        return ImprovableFirstSchedule()
    if choice == "embedded":
        return LevelEmbeddedSchedule(seed)
    if choice.startswith("file:"):
        return ExplicitSchedule(report_writer.read_schedule(choice[len("file:"):]))
    raise UsageError(f"unknown schedule {choice!r}")


def cmd_pips_async(args):
    model = load_model(args.model)
    initial = _initial_policy(args, model)
    if initial.horizon != args.horizon:
        raise PreconditionError(
            f"initial policy has horizon {initial.horizon}, -H is {args.horizon}")
    schedule = _schedule(args.schedule, args.seed)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0])
    result = run_pips_async_offline(model, initial, schedule, args.budget,
                                    args.steps, rng)
    values = evaluate_policy(model, result.policy)
    changed = sum(1 for r in result.reports if r.changed)
    print(f"steps: {len(result.reports)} ({changed} with changes)")
    print(f"terminated: {'yes' if result.terminated else 'no'}")
    _print_lines(report_writer.value_table_lines(values))
    _print_lines(report_writer.policy_lines(result.policy))
    if args.output:
        report_writer.write_policy(result.policy, args.output)
    if args.values:
        report_writer.write_value_table(values, args.values)
    if args.reports:
        report_writer.write_reports(result.reports, args.reports)
    return EXIT_OK


def cmd_online(args):
    model = load_model(args.model)
    initial = report_writer.read_policy(args.init) if args.init else None
    cfg = OnlineConfig(horizon=args.horizon,
                       max_steps=args.steps,
                       initial_state=args.start,
                       initial_policy=initial,
                       budget=args.budget,
                       window=args.window,
                       seed=args.seed,
                       stop_early=not args.no_early_stop,
                       guard_supervisors=not args.unguarded,
                       supervisor_timeout=args.supervisor_timeout)
    supervisors = [builtin_supervisor(kind, model=model, horizon=args.horizon,
                                      seed=args.seed)
                   for kind in args.supervisor or ["null"]]
    trace = run_online(model, cfg, supervisors)
    if args.trace:
        report_writer.write_trace(trace, args.trace)

    local = trace.local_optimality
    print(f"steps: {len(trace.records)} ({trace.changes} with changes, "
          f"stopped: {trace.stop_reason})")
    if trace.stabilization_step is None:
        print("stabilization step: none")
    else:
        print(f"stabilization step: {trace.stabilization_step}")
    _print_lines(report_writer.policy_lines(trace.policy))
    if local.status == "inconclusive":
        print("local optimality: inconclusive")
    else:
        members = ", ".join(str(x) for x in local.class_states)
        print(f"local optimality: {local.status} over class {{{members}}}")
        print(f"global optimality: {'yes' if local.globally_optimal else 'no'}")
    return EXIT_OK


def cmd_analyze(args):
    model = load_model(args.model)
    mode = "exhaustive" if args.exhaustive else "sufficient"
    verdict = is_mdp_communicating(model, mode, jobs=args.jobs)
    print(f"communicating: {verdict.answer}")
    if verdict.witness is not None:
        actions = ", ".join(str(a) for a in verdict.witness.as_tuple())
        print(f"witness: ({actions})")
    if args.policy:
        policy = report_writer.read_policy(args.policy)
        phi = StationaryPolicy.first_entry_of(policy)
        partition = communicating_classes(model, phi)
        for members, recurrent in zip(partition.classes, partition.recurrent):
            kind = "recurrent" if recurrent else "transient"
            print(f"class {{{', '.join(str(x) for x in members)}}}: {kind}")
        print(f"improvable pairs: {len(improvable_set(model, policy))}")
    return EXIT_OK


def cmd_errorbound(args):
    if args.hmax < args.hmin:
        raise PreconditionError("--hmax must be >= --hmin")
    model = load_model(args.model)
    terminal = _terminal(args, model)
    rows = rolling_horizon_error(model, range(args.hmin, args.hmax + 1),
                                 terminal)
    report_writer.write_error_csv(rows, args.output)
    for h, error in rows:
        bound = error_envelope(model, h, terminal)
        print(f"H={h} error={report_writer.format_number(error)} "
              f"bound={report_writer.format_number(bound)}")
    return EXIT_OK


def build_parser():
    """ The argument parser of every subcommand. """

    parser = _Parser(prog="pips_mdp",
                     description="Finite-horizon PIPS toolkit for finite MDPs.")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen", help="write a random model")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--reward-lo", type=float, default=0.0)
    p.add_argument("--reward-hi", type=float, default=1.0)
    p.add_argument("--positive", action="store_true",
                   help="make every transition entry positive")
    p.add_argument("--absorbing", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="backward induction")
    p.add_argument("model")
    p.add_argument("-H", "--horizon", type=int, required=True)
    p.add_argument("--terminal")
    p.add_argument("-o", "--output", help="write the optimal policy")
    p.add_argument("--values", help="write the value table")
    p.set_defaults(func=cmd_solve)

    for name, func, text in (("pips-sync", cmd_pips_sync, "synchronous PIPS"),
                             ("pips-async", cmd_pips_async,
                              "off-line asynchronous PIPS")):
        p = sub.add_parser(name, help=text)
        p.add_argument("model")
        p.add_argument("-H", "--horizon", type=int, required=True)
        p.add_argument("--init", help="initial policy file")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-o", "--output", help="write the final policy")
        p.add_argument("--values", help="write the final value table")
        p.set_defaults(func=func)
        if name == "pips-async":
            p.add_argument("--schedule", default="improvable")
            p.add_argument("--steps", type=int, default=DEFAULT_MAX_STEPS)
            p.add_argument("--reports", help="write one JSON line per update")

    p = sub.add_parser("online", help="on-line rolling-horizon controller")
    p.add_argument("model")
    p.add_argument("-H", "--horizon", type=int, required=True)
    p.add_argument("--steps", type=int, default=DEFAULT_MAX_STEPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--supervisor", action="append", choices=KINDS,
                   help="repeat to combine supervisors")
    p.add_argument("--trace")
    p.add_argument("--init", help="initial policy file")
    p.add_argument("--start", type=int, default=0, help="initial state")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--window", type=int)
    p.add_argument("--supervisor-timeout", type=float)
    p.add_argument("--unguarded", action="store_true",
                   help="admit non-switchable suggestions (diagnostics)")
    p.add_argument("--no-early-stop", action="store_true")
    p.set_defaults(func=cmd_online)

    p = sub.add_parser("analyze", help="communicating classes and verdict")
    p.add_argument("model")
    p.add_argument("--policy", help="policy file; [sigma[H]] is analyzed")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("errorbound", help="rolling-horizon error sweep")
    p.add_argument("model")
    p.add_argument("--hmin", type=int, required=True)
    p.add_argument("--hmax", type=int, required=True)
    p.add_argument("--terminal")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_errorbound)

    return parser


def run_cli(argv=None):
    """
    Run one subcommand.

    Parameters
    ----------
    argv : list of str, optional
        Defaults to ``sys.argv[1:]``.

    Returns
    -------
    int
        The exit code.
    """

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return e.code or EXIT_OK

    logging.basicConfig(level=getattr(logging, args.log_level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ExperimentConfig.from_args(args).check()
        logger.debug("command %s with %s", args.command, vars(args))
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except InvalidModelError as e:
        print(e, file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, ModelFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (PreconditionError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


def main():
    sys.exit(run_cli())
