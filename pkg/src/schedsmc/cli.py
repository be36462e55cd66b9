"""Command-line front end.

Subcommands:

* estimate: extremal probability estimation over M sampled schedulers,
  JSON results plus an optional CSV of the estimate distribution.
* check: hypothesis testing (exit 0 accepted, 1 not accepted).
* simulate: print one trace under a given scheduler and probabilistic seed.
* cdf: convert an estimate result JSON into the estimate-distribution CSV.

Exit codes: 0 success (check: accepted), 1 check did not accept,
2 file or parse errors, 3 invalid parameters. Every JSON result embeds the
full parameter set including the master seed, so any run can be reproduced
exactly; the default master seed is time-derived.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .engine import (
    EstimationResult,
    Hypothesis,
    HypothesisSpec,
    RunConfig,
    estimate_extrema,
    hypothesis_test_multi,
)
from .expressions import EvaluationError, ParseError
from .formulas import Formula, formula_to_text, horizon, parse_property
from .model import MdpModel, ModelError, RangeViolationError, parse_model
from .simulate import SchedulerMode, simulate
from .tracehash import DEFAULT_MODULUS, HashConfig, recommended_modulus_range

EXIT_OK = 0
EXIT_NOT_ACCEPTED = 1
EXIT_INPUT_ERROR = 2
EXIT_BAD_PARAMETER = 3

HASH_PRIME_ENV = "SCHEDSMC_HASH_PRIME"


class _ParameterError(ValueError):
    pass


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="schedsmc: %(levelname)s: %(message)s")
    try:
        return args.handler(args)
    except _ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMETER
    except (ParseError, ModelError, RangeViolationError, EvaluationError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schedsmc", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    estimate = sub.add_parser("estimate", help="extremal probability estimation over sampled schedulers")
    _add_common(estimate)
    estimate.add_argument("--epsilon", type=float, required=True, help="estimation error bound")
    estimate.add_argument("--delta", type=float, required=True, help="probability of exceeding the error bound")
    estimate.add_argument("--schedulers", type=int, required=True, metavar="M", help="number of schedulers to sample")
    estimate.add_argument("--output", default="estimate-result.json", help="result JSON path")
    estimate.add_argument("--cdf", metavar="CSV", help="also write the sorted estimate distribution")
    estimate.set_defaults(handler=_cmd_estimate)

    check = sub.add_parser("check", help="hypothesis test: does some scheduler reach the threshold?")
    _add_common(check)
    check.add_argument("--hypothesis", choices=["geq", "leq"], required=True, help="test P >= p+theta (geq) or P <= p-theta (leq)")
    check.add_argument("--threshold", type=float, required=True, metavar="P")
    check.add_argument("--theta", type=float, required=True, help="half-width of the indifference region")
    check.add_argument("--alpha", type=float, required=True, help="max probability of a false rejection")
    check.add_argument("--beta", type=float, required=True, help="max probability of a false acceptance")
    check.add_argument("--schedulers", type=int, required=True, metavar="M")
    check.add_argument("--output", default="check-result.json", help="result JSON path")
    check.set_defaults(handler=_cmd_check)

    sim = sub.add_parser("simulate", help="print one trace under a fixed scheduler")
    _add_common(sim, seed=False)
    sim.add_argument("--sigma", type=int, required=True, help="scheduler id")
    sim.add_argument("--prob-seed", type=int, required=True, help="seed for probabilistic choices")
    sim.set_defaults(handler=_cmd_simulate)

    cdf = sub.add_parser("cdf", help="turn an estimate result JSON into the distribution CSV")
    cdf.add_argument("result", help="estimate result JSON")
    cdf.add_argument("--output", required=True, help="CSV path")
    cdf.set_defaults(handler=_cmd_cdf)
    return parser


def _add_common(parser: argparse.ArgumentParser, seed: bool = True) -> None:
    parser.add_argument("--model", required=True, help="model file")
    parser.add_argument("--property", dest="property_path", required=True, help="property file")
    parser.add_argument("--memoryless", action="store_true", help="scheduler decisions depend on the current state only")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on this)")
    parser.add_argument("--hash-prime", type=int, default=None, help="override the trace-hash modulus (expert use)")
    if seed:
        parser.add_argument("--seed", type=int, default=None, help="master seed; defaults to a time-derived value")


def _load_inputs(args) -> tuple[MdpModel, Formula]:
    model_text = Path(args.model).read_text(encoding="utf-8")
    property_text = Path(args.property_path).read_text(encoding="utf-8")
    model = parse_model(model_text)
    prop = parse_property(property_text)
    return model, prop


def _hash_config(args) -> HashConfig:
    modulus = DEFAULT_MODULUS
    env = os.environ.get(HASH_PRIME_ENV)
    if env:
        modulus = int(env)
    if args.hash_prime is not None:
        modulus = args.hash_prime
    if modulus != DEFAULT_MODULUS:
        if not recommended_modulus_range(modulus):
            raise _ParameterError(
                f"hash prime {modulus} outside the recommended range (61-bit prime away from powers of two)"
            )
    try:
        return HashConfig(modulus)
    except ValueError as exc:
        raise _ParameterError(str(exc)) from None


def _run_config(args) -> RunConfig:
    if args.jobs < 1:
        raise _ParameterError(f"--jobs must be >= 1, got {args.jobs}")
    seed = getattr(args, "seed", None)
    if seed is None:
        seed = time.time_ns() & ((1 << 64) - 1)
    if not 0 <= seed < (1 << 64):
        raise _ParameterError("--seed must fit in unsigned 64 bits")
    mode = SchedulerMode.MEMORYLESS if args.memoryless else SchedulerMode.GENERAL
    return RunConfig(master_seed=seed, workers=args.jobs, scheduler_mode=mode, hash_config=_hash_config(args))


def _common_parameters(args, run: RunConfig) -> dict:
    return {
        "model": args.model,
        "property": args.property_path,
        "scheduler_mode": run.scheduler_mode.value,
        "master_seed": run.master_seed,
        "hash_prime": run.hash_config.modulus,
        "jobs": run.workers,
    }


def _cmd_estimate(args) -> int:
    if args.schedulers < 1:
        raise _ParameterError(f"--schedulers must be >= 1, got {args.schedulers}")
    if not 0 < args.epsilon < 1 or not 0 < args.delta < 1:
        raise _ParameterError("--epsilon and --delta must lie strictly between 0 and 1")
    model, prop = _load_inputs(args)
    run = _run_config(args)
    result = estimate_extrema(model, prop, args.epsilon, args.delta, args.schedulers, run)
    payload = {
        "algorithm": "extremal-estimation",
        "parameters": {
            **_common_parameters(args, run),
            "epsilon": args.epsilon,
            "delta": args.delta,
            "schedulers_m": args.schedulers,
            "property_formula": formula_to_text(prop),
            "horizon": horizon(prop),
        },
        **_estimation_payload(result),
        "wall_clock_seconds": result.wall_seconds,
    }
    Path(args.output).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    if args.cdf:
        _write_cdf(args.cdf, [row.p_hat for row in result.per_scheduler])
    maximum = "none" if result.none_satisfied else f"{result.p_hat_max:.6g}"
    print(f"p_hat_max={maximum} over {args.schedulers} schedulers (N={result.samples_n} each); results in {args.output}")
    return EXIT_OK


def _estimation_payload(result: EstimationResult) -> dict:
    return {
        "samples_per_scheduler": result.samples_n,
        "per_scheduler": [
            {"sigma": row.sigma, "truecount": row.truecount, "samples": row.samples, "p_hat": row.p_hat}
            for row in result.per_scheduler
        ],
        "p_hat_max": result.p_hat_max,
        "p_hat_min": result.p_hat_min,
        "sigma_max": result.sigma_max,
        "sigma_min": result.sigma_min,
        "none_satisfied": result.none_satisfied,
        "deadlock_traces": result.deadlock_traces,
    }


def _write_cdf(path: str, estimates: list[float]) -> None:
    ordered = sorted(estimates)
    total = len(ordered)
    lines = ["estimate,cumulative_fraction"]
    for i, value in enumerate(ordered):
        lines.append(f"{value!r},{(i + 1) / total!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_check(args) -> int:
    if args.schedulers < 1:
        raise _ParameterError(f"--schedulers must be >= 1, got {args.schedulers}")
    model, prop = _load_inputs(args)
    run = _run_config(args)
    try:
        spec = HypothesisSpec(
            hypothesis=Hypothesis(args.hypothesis),
            threshold_p=args.threshold,
            theta=args.theta,
            alpha=args.alpha,
            beta=args.beta,
            max_schedulers_m=args.schedulers,
        )
        plan = spec.plan()
    except ValueError as exc:
        raise _ParameterError(str(exc)) from None
    outcome = hypothesis_test_multi(model, prop, spec, run)
    payload = {
        "algorithm": "multi-scheduler-sprt",
        "parameters": {
            **_common_parameters(args, run),
            "hypothesis": args.hypothesis,
            "threshold_p": args.threshold,
            "theta": args.theta,
            "alpha": args.alpha,
            "beta": args.beta,
            "schedulers_m": args.schedulers,
            "p0": plan.p0,
            "p1": plan.p1,
            "property_formula": formula_to_text(prop),
        },
        "accepted": outcome.accepted,
        "sigma": outcome.sigma,
        "scheduler_index": outcome.scheduler_index,
        "traces_used": outcome.traces_used,
        "total_traces": outcome.total_traces,
        "schedulers_tested": outcome.schedulers_tested,
        "opposite_accepts": outcome.opposite_accepts,
        "capped_schedulers": outcome.capped_schedulers,
        "deadlock_traces": outcome.deadlock_traces,
        "wall_clock_seconds": outcome.wall_seconds,
    }
    Path(args.output).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    verdict = "accepted" if outcome.accepted else "not accepted"
    print(f"hypothesis {verdict} after {outcome.total_traces} traces; results in {args.output}")
    return EXIT_OK if outcome.accepted else EXIT_NOT_ACCEPTED


def _cmd_simulate(args) -> int:
    if args.sigma < 0 or args.sigma >= (1 << 64):
        raise _ParameterError("--sigma must fit in unsigned 64 bits")
    if args.prob_seed < 0 or args.prob_seed >= (1 << 64):
        raise _ParameterError("--prob-seed must fit in unsigned 64 bits")
    model, prop = _load_inputs(args)
    mode = SchedulerMode.MEMORYLESS if args.memoryless else SchedulerMode.GENERAL
    config = _hash_config(args)
    outcome = simulate(model, prop, args.sigma, mode, args.prob_seed, config, record=True)
    for index, state in enumerate(outcome.trace):
        print(f"{index}\t" + "\t".join(str(v) for v in state))
    if outcome.deadlocked:
        print("warning: trace hit a deadlocked state (absorbing self-loop applied)", file=sys.stderr)
    print("SAT" if outcome.satisfied else "UNSAT")
    return EXIT_OK


def _cmd_cdf(args) -> int:
    payload = json.loads(Path(args.result).read_text(encoding="utf-8"))
    try:
        rows = payload["per_scheduler"]
        estimates = [float(row["p_hat"]) for row in rows]
    except (KeyError, TypeError) as exc:
        print(f"error: {args.result} is not an estimate result file ({exc})", file=sys.stderr)
        return EXIT_INPUT_ERROR
    if not estimates:
        print(f"error: {args.result} contains no per-scheduler estimates", file=sys.stderr)
        return EXIT_INPUT_ERROR
    _write_cdf(args.output, estimates)
    print(f"wrote {len(estimates)} estimates to {args.output}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
