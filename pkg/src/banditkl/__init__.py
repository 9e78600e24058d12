"""KL-based index policies for finite-support bandits, with a deterministic
Monte Carlo regret simulator and numeric regret-bound evaluators."""

from .bounds import (
    ArmBound,
    BoundReport,
    baseline_bounds,
    bernoulli_regret_bound,
    bernoulli_regret_bound_best,
    kinf_regret_bound,
    lower_bound_slope,
    sanov_exponent,
)
from .dist import (
    EmpiricalDist,
    FiniteDist,
    RandomSource,
    child_seed,
    freeze,
    make_finite,
    mean,
    observe,
    sample,
)
from .divergence import KinfResult, k_inf, k_inf_primal, kl_bernoulli, kl_discrete
from .indices import ExplorationSchedule, exploration, kinf_ucb_index, kl_ucb_index
from .policies import PolicyKind, PolicyState, select_arm, update
from .sim import (
    AggregateResult,
    BanditInstance,
    RunResult,
    default_checkpoints,
    mc_check_deviation,
    mc_check_types,
    run_many,
    run_one,
)

__all__ = [
    "AggregateResult",
    "ArmBound",
    "BanditInstance",
    "BoundReport",
    "EmpiricalDist",
    "ExplorationSchedule",
    "FiniteDist",
    "KinfResult",
    "PolicyKind",
    "PolicyState",
    "RandomSource",
    "RunResult",
    "baseline_bounds",
    "bernoulli_regret_bound",
    "bernoulli_regret_bound_best",
    "child_seed",
    "default_checkpoints",
    "exploration",
    "freeze",
    "k_inf",
    "k_inf_primal",
    "kinf_regret_bound",
    "kinf_ucb_index",
    "kl_bernoulli",
    "kl_discrete",
    "kl_ucb_index",
    "lower_bound_slope",
    "make_finite",
    "mc_check_deviation",
    "mc_check_types",
    "mean",
    "observe",
    "run_many",
    "run_one",
    "sample",
    "sanov_exponent",
    "select_arm",
    "update",
]
