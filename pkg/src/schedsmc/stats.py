"""Sample-size planning and sequential stopping rules.

Two ways to control Monte Carlo error:

* Chernoff-Hoeffding bound: choose N in advance so that the estimate is
  within epsilon of the truth with probability at least 1 - delta. When M
  independent estimates must all be good simultaneously (one per sampled
  scheduler), delta is tightened to 1 - (1-delta)^(1/M), which grows N only
  logarithmically in M.

* Wald's SPRT: accept "P >= p0" or "P <= p1" sequentially by tracking the
  likelihood ratio of the observations; alpha and beta bound the error
  probabilities, tightened the same way for M sequential tests.

All ratios are kept in the log domain; products over thousands of traces
would underflow otherwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


def _check_unit_interval(**params: float) -> None:
    for name, value in params.items():
        if not 0.0 < value < 1.0:
            raise ValueError(f"{name} must lie strictly between 0 and 1, got {value}")


def chernoff_single_N(epsilon: float, delta: float) -> int:
    """Samples for one estimate: N = ceil((ln 2 - ln delta) / (2 epsilon^2))."""
    _check_unit_interval(epsilon=epsilon, delta=delta)
    return math.ceil((math.log(2.0) - math.log(delta)) / (2.0 * epsilon * epsilon))


def chernoff_multi_N(epsilon: float, delta: float, m: int, two_sided: bool = True) -> int:
    """Samples per estimate so that all of M estimates hit the joint target.

    The per-estimate failure budget becomes 1 - (1-delta)^(1/M), computed as
    -expm1(log1p(-delta)/M) to stay accurate for large M. One-sided bounds
    need N = ceil(-ln(budget) / (2 eps^2)); the usual two-sided absolute
    error adds the ln 2.
    """
    _check_unit_interval(epsilon=epsilon, delta=delta)
    if m < 1:
        raise ValueError(f"scheduler count must be >= 1, got {m}")
    per_test_delta = -math.expm1(math.log1p(-delta) / m)
    base = -math.log(per_test_delta)
    if two_sided:
        base += math.log(2.0)
    return math.ceil(base / (2.0 * epsilon * epsilon))


@dataclass(frozen=True)
class ChernoffPlan:
    epsilon: float
    delta: float
    schedulers_m: int
    samples_n: int
    two_sided: bool = True

    @classmethod
    def create(cls, epsilon: float, delta: float, schedulers_m: int, two_sided: bool = True) -> "ChernoffPlan":
        n = chernoff_multi_N(epsilon, delta, schedulers_m, two_sided)
        return cls(epsilon, delta, schedulers_m, n, two_sided)


def sprt_levels(alpha: float, beta: float, m: int) -> tuple[float, float, float, float]:
    """Per-test error levels and ratio thresholds for M sequential tests.

    Returns (alpha_m, beta_m, A, B) with alpha_m = 1 - (1-alpha)^(1/M),
    beta_m analogous, A = (1-beta_m)/alpha_m and B = beta_m/(1-alpha_m).
    """
    _check_unit_interval(alpha=alpha, beta=beta)
    if m < 1:
        raise ValueError(f"scheduler count must be >= 1, got {m}")
    alpha_m = -math.expm1(math.log1p(-alpha) / m)
    beta_m = -math.expm1(math.log1p(-beta) / m)
    a = (1.0 - beta_m) / alpha_m
    b = beta_m / (1.0 - alpha_m)
    return alpha_m, beta_m, a, b


@dataclass(frozen=True)
class SprtPlan:
    """Thresholds for testing P >= p0 against P <= p1 with p0/p1 = p +/- theta."""

    threshold_p: float
    indifference_theta: float
    alpha: float
    beta: float
    schedulers_m: int
    p0: float
    p1: float
    alpha_m: float
    beta_m: float
    accept_a: float
    accept_b: float

    @classmethod
    def create(cls, threshold_p: float, theta: float, alpha: float, beta: float, schedulers_m: int) -> "SprtPlan":
        _check_unit_interval(threshold_p=threshold_p, alpha=alpha, beta=beta)
        if theta <= 0:
            raise ValueError(f"indifference theta must be positive, got {theta}")
        p0 = threshold_p + theta
        p1 = threshold_p - theta
        if not 0.0 < p1 < p0 < 1.0:
            raise ValueError(f"p +/- theta must stay inside (0, 1): got p0={p0}, p1={p1}")
        alpha_m, beta_m, a, b = sprt_levels(alpha, beta, schedulers_m)
        return cls(threshold_p, theta, alpha, beta, schedulers_m, p0, p1, alpha_m, beta_m, a, b)


@dataclass(frozen=True)
class SprtState:
    """Running likelihood ratio in log domain plus the trace count."""

    log_ratio: float = 0.0
    traces_seen: int = 0

    @property
    def ratio(self) -> float:
        return math.exp(self.log_ratio)


class SprtDecision(enum.Enum):
    ACCEPT_H0 = "accept_h0"  # P >= p0 side
    ACCEPT_H1 = "accept_h1"  # P <= p1 side
    CONTINUE = "continue"


def sprt_update(state: SprtState, satisfied: bool, p0: float, p1: float) -> SprtState:
    """Fold one trace outcome into the ratio.

    A satisfied trace multiplies the ratio by p1/p0, an unsatisfied one by
    (1-p1)/(1-p0); many unsatisfied traces push the ratio up toward
    accepting the low hypothesis.
    """
    if satisfied:
        step = math.log(p1) - math.log(p0)
    else:
        step = math.log1p(-p1) - math.log1p(-p0)
    return SprtState(state.log_ratio + step, state.traces_seen + 1)


def sprt_decide(state: SprtState, a: float, b: float) -> SprtDecision:
    """Threshold check: ratio >= A accepts H1, ratio <= B accepts H0."""
    if not (a > 1.0 > b > 0.0):
        raise ValueError(f"thresholds must satisfy A > 1 > B > 0, got A={a}, B={b}")
    if state.log_ratio >= math.log(a):
        return SprtDecision.ACCEPT_H1
    if state.log_ratio <= math.log(b):
        return SprtDecision.ACCEPT_H0
    return SprtDecision.CONTINUE
