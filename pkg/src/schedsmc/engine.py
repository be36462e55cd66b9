"""Top-level verification algorithms over sampled schedulers.

Both algorithms draw up to M scheduler ids from a PRNG seeded with the
master seed, then drive simulations per scheduler:

* hypothesis_test_multi runs one SPRT per scheduler (with thresholds
  tightened for M tests) and stops at the first scheduler whose test
  crosses on the requested hypothesis side.

* estimate_extrema runs a fixed N simulations per scheduler (N from the
  M-corrected Chernoff bound) and reports every estimate plus the extrema;
  the minimum is taken over nonzero estimates only, and a run where no
  scheduler ever satisfied the property is flagged.

All per-trace seeds are pure functions of (master seed, scheduler index,
trace index), so results are bit-identical for any worker count.
"""

from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bulk import compile_model, compile_property, seeds_for_range, simulate_batch
from .formulas import Formula
from .model import MdpModel
from .rng import SplitMix64
from .simulate import SchedulerMode
from .stats import SprtDecision, SprtPlan, SprtState, chernoff_multi_N, sprt_decide, sprt_update
from .tracehash import HashConfig

logger = logging.getLogger(__name__)

# Bail out of a single scheduler's SPRT after this many traces; a true
# probability inside the indifference region would otherwise loop forever.
SPRT_TRACE_CAP = 1_000_000

_SPRT_BATCH = 1024


@dataclass(frozen=True)
class RunConfig:
    master_seed: int
    workers: int = 1
    scheduler_mode: SchedulerMode = SchedulerMode.GENERAL
    hash_config: HashConfig = field(default_factory=HashConfig)
    chunk_lanes: int = 1 << 16

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.master_seed < (1 << 64):
            raise ValueError("master seed must fit in unsigned 64 bits")


class Hypothesis(enum.Enum):
    H0 = "geq"  # P >= p + theta
    H1 = "leq"  # P <= p - theta


@dataclass(frozen=True)
class HypothesisSpec:
    hypothesis: Hypothesis
    threshold_p: float
    theta: float
    alpha: float
    beta: float
    max_schedulers_m: int

    def plan(self) -> SprtPlan:
        return SprtPlan.create(self.threshold_p, self.theta, self.alpha, self.beta, self.max_schedulers_m)


@dataclass(frozen=True)
class SchedulerEstimate:
    scheduler_index: int
    sigma: int
    truecount: int
    samples: int

    @property
    def p_hat(self) -> float:
        return self.truecount / self.samples


@dataclass(frozen=True)
class EstimationResult:
    epsilon: float
    delta: float
    schedulers_m: int
    samples_n: int
    per_scheduler: tuple[SchedulerEstimate, ...]
    p_hat_max: float
    p_hat_min: float | None
    sigma_max: int | None
    sigma_min: int | None
    none_satisfied: bool
    deadlock_traces: int
    wall_seconds: float


@dataclass(frozen=True)
class HypothesisOutcome:
    accepted: bool
    sigma: int | None
    scheduler_index: int | None
    traces_used: int  # by the accepting scheduler, 0 if none accepted
    total_traces: int
    schedulers_tested: int
    opposite_accepts: int
    capped_schedulers: int
    deadlock_traces: int
    wall_seconds: float


def draw_scheduler_ids(master_seed: int, count: int) -> list[int]:
    """The first `count` scheduler ids of the master-seeded id stream."""
    gen = SplitMix64(master_seed)
    return [gen.next_u64() for _ in range(count)]


# ---------------------------------------------------------------------------
# Worker tasks (top level, picklable)
# ---------------------------------------------------------------------------


def _tally_task(payload) -> list[tuple[int, int, int]]:
    """Simulate ranges of traces and tally: returns (entry_key, truecount, deadlocks)."""
    model, formula, modulus, mode_value, master_seed, chunk_lanes, entries = payload
    config = HashConfig(modulus)
    mode = SchedulerMode(mode_value)
    cm = compile_model(model, config)
    cp = compile_property(formula, model)
    results = []
    for key, scheduler_index, sigma, start, count in entries:
        truecount = 0
        deadlocks = 0
        offset = start
        remaining = count
        while remaining > 0:
            lanes = min(remaining, chunk_lanes)
            seeds = seeds_for_range(master_seed, scheduler_index, offset, lanes, config)
            outcome = simulate_batch(cm, cp, sigma, mode, seeds)
            truecount += outcome.truecount
            deadlocks += outcome.deadlocks
            offset += lanes
            remaining -= lanes
        results.append((key, truecount, deadlocks))
    return results


def _sat_task(payload) -> tuple[int, bytes, int]:
    """Simulate one contiguous trace range, returning ordered outcome bits."""
    model, formula, modulus, mode_value, master_seed, chunk_lanes, scheduler_index, sigma, start, count = payload
    config = HashConfig(modulus)
    mode = SchedulerMode(mode_value)
    cm = compile_model(model, config)
    cp = compile_property(formula, model)
    bits = np.zeros(count, dtype=bool)
    deadlocks = 0
    offset = 0
    while offset < count:
        lanes = min(count - offset, chunk_lanes)
        seeds = seeds_for_range(master_seed, scheduler_index, start + offset, lanes, config)
        outcome = simulate_batch(cm, cp, sigma, mode, seeds)
        bits[offset : offset + lanes] = outcome.satisfied
        deadlocks += outcome.deadlocks
        offset += lanes
    return start, np.packbits(bits).tobytes(), deadlocks


def _unpack_bits(blob: bytes, count: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(blob, dtype=np.uint8), count=count).astype(bool)


# ---------------------------------------------------------------------------
# Parallel dispatch
# ---------------------------------------------------------------------------


class _Executor:
    """Runs tally/sat tasks inline or on a process pool, preserving order."""

    def __init__(self, run: RunConfig):
        self._run = run
        self._pool = ProcessPoolExecutor(max_workers=run.workers) if run.workers > 1 else None

    def __enter__(self) -> "_Executor":
        return self

    def __exit__(self, *exc) -> None:
        if self._pool is not None:
            self._pool.shutdown()

    def tally(
        self,
        model: MdpModel,
        f: Formula,
        entries: list[tuple[int, int, int, int, int]],
    ) -> dict[int, tuple[int, int]]:
        run = self._run
        common = (model, f, run.hash_config.modulus, run.scheduler_mode.value, run.master_seed, run.chunk_lanes)
        results: dict[int, tuple[int, int]] = {}
        if self._pool is None:
            for key, truecount, deadlocks in _tally_task(common + (entries,)):
                results[key] = (truecount, deadlocks)
            return results
        groups = _split_evenly(entries, self._run.workers * 4)
        futures = [self._pool.submit(_tally_task, common + (group,)) for group in groups]
        for future in futures:
            for key, truecount, deadlocks in future.result():
                results[key] = (truecount, deadlocks)
        return results

    def satisfaction_range(
        self,
        model: MdpModel,
        f: Formula,
        scheduler_index: int,
        sigma: int,
        start: int,
        count: int,
    ) -> tuple[np.ndarray, int]:
        run = self._run
        common = (model, f, run.hash_config.modulus, run.scheduler_mode.value, run.master_seed, run.chunk_lanes)
        if self._pool is None or count < 2 * run.workers:
            begin, blob, deadlocks = _sat_task(common + (scheduler_index, sigma, start, count))
            return _unpack_bits(blob, count), deadlocks
        # split the batch across workers; reassembly keeps trace order
        spans = _split_range(start, count, run.workers)
        futures = [
            self._pool.submit(_sat_task, common + (scheduler_index, sigma, span_start, span_count))
            for span_start, span_count in spans
        ]
        bits = np.zeros(count, dtype=bool)
        deadlocks = 0
        for future, (span_start, span_count) in zip(futures, spans):
            _, blob, span_dead = future.result()
            offset = span_start - start
            bits[offset : offset + span_count] = _unpack_bits(blob, span_count)
            deadlocks += span_dead
        return bits, deadlocks


def _split_evenly(items: list, parts: int) -> list[list]:
    parts = max(1, min(parts, len(items)))
    size = (len(items) + parts - 1) // parts
    return [items[i : i + size] for i in range(0, len(items), size)]


def _split_range(start: int, count: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, count))
    base = count // parts
    extra = count % parts
    spans = []
    offset = start
    for i in range(parts):
        size = base + (1 if i < extra else 0)
        if size:
            spans.append((offset, size))
        offset += size
    return spans


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def run_parallel(
    model: MdpModel,
    f: Formula,
    sigmas: Sequence[int],
    jobs: Sequence[tuple[int, int]],
    run: RunConfig,
) -> dict[int, tuple[int, int, int]]:
    """Execute (scheduler index, trace index) work items on the worker pool.

    Returns {scheduler index: (truecount, simulations, deadlocks)}. The
    aggregate is a pure function of the master seed and the job set,
    independent of worker count and completion order.
    """
    per_scheduler: dict[int, list[int]] = {}
    for scheduler_index, trace_index in jobs:
        per_scheduler.setdefault(scheduler_index, []).append(trace_index)
    entries = []
    key = 0
    for scheduler_index, trace_indices in sorted(per_scheduler.items()):
        for start, count in _consecutive_runs(sorted(trace_indices)):
            entries.append((key, scheduler_index, sigmas[scheduler_index], start, count))
            key += 1
    with _Executor(run) as executor:
        tallies = executor.tally(model, f, entries)
    results: dict[int, tuple[int, int, int]] = {}
    for entry in entries:
        entry_key, scheduler_index, _, _, count = entry
        truecount, deadlocks = tallies[entry_key]
        prev = results.get(scheduler_index, (0, 0, 0))
        results[scheduler_index] = (prev[0] + truecount, prev[1] + count, prev[2] + deadlocks)
    return results


def _consecutive_runs(indices: list[int]) -> list[tuple[int, int]]:
    runs = []
    i = 0
    while i < len(indices):
        j = i
        while j + 1 < len(indices) and indices[j + 1] == indices[j] + 1:
            j += 1
        runs.append((indices[i], j - i + 1))
        i = j + 1
    return runs


def estimate_extrema(
    model: MdpModel,
    f: Formula,
    epsilon: float,
    delta: float,
    schedulers_m: int,
    run: RunConfig,
) -> EstimationResult:
    """Estimate min/max satisfaction probability over M sampled schedulers."""
    started = time.perf_counter()
    n = chernoff_multi_N(epsilon, delta, schedulers_m, two_sided=True)
    sigmas = draw_scheduler_ids(run.master_seed, schedulers_m)
    entries = [(i, i, sigmas[i], 0, n) for i in range(schedulers_m)]
    with _Executor(run) as executor:
        tallies = executor.tally(model, f, entries)
    rows = []
    deadlock_traces = 0
    for i in range(schedulers_m):
        truecount, deadlocks = tallies[i]
        rows.append(SchedulerEstimate(i, sigmas[i], truecount, n))
        deadlock_traces += deadlocks
    p_max = 0.0
    p_min = None
    sigma_max = None
    sigma_min = None
    for row in rows:
        estimate = row.p_hat
        if estimate > p_max:
            p_max = estimate
            sigma_max = row.sigma
        if estimate > 0.0 and (p_min is None or estimate < p_min):
            p_min = estimate
            sigma_min = row.sigma
    none_satisfied = p_max == 0.0
    if none_satisfied:
        logger.warning("no scheduler out of %d satisfied the property", schedulers_m)
    if deadlock_traces:
        logger.warning("%d traces hit a deadlocked state (absorbing self-loop applied)", deadlock_traces)
    return EstimationResult(
        epsilon=epsilon,
        delta=delta,
        schedulers_m=schedulers_m,
        samples_n=n,
        per_scheduler=tuple(rows),
        p_hat_max=p_max,
        p_hat_min=p_min,
        sigma_max=sigma_max,
        sigma_min=sigma_min,
        none_satisfied=none_satisfied,
        deadlock_traces=deadlock_traces,
        wall_seconds=time.perf_counter() - started,
    )


def hypothesis_test_multi(
    model: MdpModel,
    f: Formula,
    spec: HypothesisSpec,
    run: RunConfig,
) -> HypothesisOutcome:
    """Search up to M sampled schedulers for one accepting the hypothesis.

    Each scheduler gets its own SPRT with the M-corrected thresholds; the
    search stops at the first test that crosses on the requested side. A
    test crossing on the opposite side just moves on to the next scheduler
    (logged), as does a test still undecided at the trace cap.
    """
    started = time.perf_counter()
    plan = spec.plan()
    wanted = SprtDecision.ACCEPT_H0 if spec.hypothesis is Hypothesis.H0 else SprtDecision.ACCEPT_H1
    sigmas = draw_scheduler_ids(run.master_seed, spec.max_schedulers_m)
    total_traces = 0
    opposite = 0
    capped = 0
    deadlock_traces = 0
    with _Executor(run) as executor:
        for index, sigma in enumerate(sigmas):
            state = SprtState()
            decision = SprtDecision.CONTINUE
            while decision is SprtDecision.CONTINUE and state.traces_seen < SPRT_TRACE_CAP:
                batch = min(_SPRT_BATCH, SPRT_TRACE_CAP - state.traces_seen)
                outcomes, deadlocks = executor.satisfaction_range(
                    model, f, index, sigma, state.traces_seen, batch
                )
                deadlock_traces += deadlocks
                for satisfied in outcomes:
                    state = sprt_update(state, bool(satisfied), plan.p0, plan.p1)
                    decision = sprt_decide(state, plan.accept_a, plan.accept_b)
                    if decision is not SprtDecision.CONTINUE:
                        break
            total_traces += state.traces_seen
            if decision is wanted:
                return HypothesisOutcome(
                    accepted=True,
                    sigma=sigma,
                    scheduler_index=index,
                    traces_used=state.traces_seen,
                    total_traces=total_traces,
                    schedulers_tested=index + 1,
                    opposite_accepts=opposite,
                    capped_schedulers=capped,
                    deadlock_traces=deadlock_traces,
                    wall_seconds=time.perf_counter() - started,
                )
            if decision is SprtDecision.CONTINUE:
                capped += 1
                logger.warning("scheduler %d undecided after %d traces, treated as non-accepting", sigma, state.traces_seen)
            else:
                opposite += 1
                logger.info("scheduler %d accepted the opposite hypothesis, continuing", sigma)
    return HypothesisOutcome(
        accepted=False,
        sigma=None,
        scheduler_index=None,
        traces_used=0,
        total_traces=total_traces,
        schedulers_tested=len(sigmas),
        opposite_accepts=opposite,
        capped_schedulers=capped,
        deadlock_traces=deadlock_traces,
        wall_seconds=time.perf_counter() - started,
    )
