"""Single-trace simulation under a hash-seeded scheduler.

One integer sigma fully determines a scheduler: at every step the state so
far (or just the current state, for memoryless schedulers) is folded into a
modular hash together with sigma, and the hash value seeds the PRNG that
picks among enabled commands. Probabilistic branches come from a separate
per-trace PRNG. Two runs with the same (sigma, prob_seed) therefore produce
identical traces, while different prob seeds explore the probability space
of the same scheduler.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .formulas import Formula, Verdict, evaluate
from .model import MdpModel, StateVector, apply_choice, enabled_commands
from .rng import SplitMix64
from .tracehash import HashConfig, absorb_state, absorb_value, init_hash


class SchedulerMode(enum.Enum):
    GENERAL = "general"  # decisions depend on the full state history
    MEMORYLESS = "memoryless"  # decisions depend on the current state only


@dataclass(frozen=True)
class SimulationOutcome:
    satisfied: bool
    steps: int  # transitions taken
    deadlocked: bool
    trace: tuple[StateVector, ...] | None = None


def scheduler_action(
    model: MdpModel,
    sigma: int,
    history: Sequence[StateVector],
    mode: SchedulerMode,
    config: HashConfig,
) -> int | None:
    """The command index scheduler `sigma` picks after visiting `history`.

    Returns None on deadlock. Useful for inspecting a sampled scheduler and
    for computing its exact satisfaction probability by chain enumeration.
    """
    if mode is SchedulerMode.GENERAL:
        t = init_hash(sigma, config)
        for state in history:
            t = absorb_state(t, state, model.variables)
    else:
        t = absorb_state(init_hash(sigma, config), history[-1], model.variables)
    enabled = enabled_commands(model, history[-1])
    if not enabled:
        return None
    gen = SplitMix64(t.value)
    return enabled[gen.uniform_index(len(enabled))]


def simulate(
    model: MdpModel,
    f: Formula,
    sigma: int,
    mode: SchedulerMode,
    prob_seed: int,
    config: HashConfig,
    record: bool = False,
) -> SimulationOutcome:
    """Run one trace under scheduler `sigma` until the property is decided.

    Per step: the current state is folded into the trace hash, the hash
    seeds the nondeterminism PRNG to pick an enabled command uniformly, the
    probabilistic PRNG picks that command's branch, and the monitor
    re-evaluates. Deadlocked states take an absorbing self-loop (flagged on
    the outcome) so bounded properties still resolve.
    """
    u_prob = SplitMix64(prob_seed)
    u_nondet = SplitMix64(0)
    state = model.initial_state
    prefix: list[StateVector] = [state]
    trace_hash = init_hash(sigma, config)
    deadlocked = False
    verdict = evaluate(f, prefix, model.variables)
    while verdict is Verdict.UNDECIDED:
        if mode is SchedulerMode.GENERAL:
            trace_hash = absorb_state(trace_hash, state, model.variables)
            step_hash = trace_hash
        else:
            step_hash = absorb_state(init_hash(sigma, config), state, model.variables)
        enabled = enabled_commands(model, state)
        if not enabled:
            deadlocked = True  # absorbing self-loop, no PRNG draws
        else:
            u_nondet.seed(step_hash.value)
            command = enabled[u_nondet.uniform_index(len(enabled))]
            choice = _pick_branch(model, command, u_prob.uniform_unit())
            state = apply_choice(model, state, command, choice)
        prefix.append(state)
        verdict = evaluate(f, prefix, model.variables)
    return SimulationOutcome(
        satisfied=verdict is Verdict.TRUE,
        steps=len(prefix) - 1,
        deadlocked=deadlocked,
        trace=tuple(prefix) if record else None,
    )


def _pick_branch(model: MdpModel, command: int, u: float) -> int:
    """Cumulative-probability inversion over the command's choices in order."""
    choices = model.commands[command].choices
    acc = 0.0
    for i, choice in enumerate(choices[:-1]):
        acc += choice.probability
        if u < acc:
            return i
    return len(choices) - 1


def derive_prob_seed(master_seed: int, scheduler_index: int, trace_index: int, config: HashConfig) -> int:
    """Per-trace probabilistic seed, a pure function of (master, i, j).

    Folding the indices through the trace hash gives seeds that do not
    depend on worker scheduling or execution order, so runs are reproducible
    for any degree of parallelism.
    """
    t = init_hash(master_seed, config)
    t = absorb_value(t, scheduler_index, 64)
    t = absorb_value(t, trace_index, 64)
    return t.value


def estimate_under_scheduler(
    model: MdpModel,
    f: Formula,
    sigma: int,
    mode: SchedulerMode,
    n: int,
    seed_stream: Iterable[int],
    config: HashConfig,
) -> float:
    """Monte Carlo estimate of P(trace satisfies f) under one scheduler.

    Runs n simulations with distinct probabilistic seeds from seed_stream
    and returns the fraction that satisfied the property.
    """
    if n < 1:
        raise ValueError(f"need at least one simulation, got n={n}")
    seeds = iter(seed_stream)
    truecount = 0
    for _ in range(n):
        try:
            seed = next(seeds)
        except StopIteration:
            raise ValueError("seed_stream exhausted before n simulations") from None
        if simulate(model, f, sigma, mode, seed, config).satisfied:
            truecount += 1
    return truecount / n
