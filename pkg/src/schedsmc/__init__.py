"""Statistical model checking for MDPs with hash-seeded schedulers.

Nondeterminism is resolved by schedulers identified by a single integer:
at every step, a modular hash of (scheduler id : states so far) seeds the
PRNG that picks the next action. Sampling scheduler ids then turns scheduler
search into Monte Carlo estimation, with Chernoff/SPRT confidence bounds
corrected for the number of schedulers tested.
"""

from importlib import resources
from pathlib import Path

from .engine import (
    EstimationResult,
    Hypothesis,
    HypothesisOutcome,
    HypothesisSpec,
    RunConfig,
    SchedulerEstimate,
    draw_scheduler_ids,
    estimate_extrema,
    hypothesis_test_multi,
    run_parallel,
)
from .expressions import EvaluationError, ParseError
from .formulas import Formula, Verdict, evaluate, formula_to_text, horizon, parse_property
from .model import (
    GuardedCommand,
    MdpModel,
    ModelError,
    ProbabilisticChoice,
    RangeViolationError,
    StateVector,
    VariableDecl,
    apply_choice,
    enabled_commands,
    model_to_text,
    parse_model,
)
from .rng import SplitMix64
from .simulate import (
    SchedulerMode,
    SimulationOutcome,
    derive_prob_seed,
    estimate_under_scheduler,
    scheduler_action,
    simulate,
)
from .stats import (
    ChernoffPlan,
    SprtDecision,
    SprtPlan,
    SprtState,
    chernoff_multi_N,
    chernoff_single_N,
    sprt_decide,
    sprt_levels,
    sprt_update,
)
from .tracehash import (
    DEFAULT_MODULUS,
    HashConfig,
    TraceHash,
    absorb_state,
    absorb_value,
    init_hash,
    is_prime,
    shift_mod,
)

__version__ = "0.1.0"


def example_path(name: str) -> Path:
    """Filesystem path of a bundled example model or property file."""
    path = resources.files(__package__) / "data" / name
    with resources.as_file(path) as concrete:
        return Path(concrete)
