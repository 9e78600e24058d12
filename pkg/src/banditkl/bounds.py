"""Numeric evaluation of the regret lower-bound slope, the finite-time
upper bounds for the two KL index policies, and the cited UCB baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dist import FiniteDist
from .divergence import k_inf, kl_bernoulli
from .errors import (
    DegenerateInstanceError,
    EpsilonOutOfRangeError,
    MuADegenerateError,
    MuOutOfRangeError,
    MuStarDegenerateError,
    NotBernoulliError,
    SupportTooLargeError,
    ValueOutOfRangeError,
    ZeroGapError,
)
from .sim import BanditInstance

DEFAULT_C_GRID = tuple(np.logspace(-2.0, 1.0, 20))
DEFAULT_EPSILON_SCALE = 0.9
DEFAULT_THETA_GRID = 250


@dataclass(frozen=True)
class ArmBound:
    """One suboptimal arm's share of a regret bound."""

    arm: int
    gap: float
    terms: dict[str, float]
    pull_bound: float
    contribution: float
    params: dict[str, float] = field(default_factory=dict)
    note: str = ""


@dataclass(frozen=True)
class BoundReport:
    """Term-by-term evaluation of one bound on one instance."""

    name: str
    total: float
    arms: tuple[ArmBound, ...]
    params: dict
    special_case: str | None = None


def lower_bound_slope(instance: BanditInstance) -> float:
    """Asymptotic regret floor per log(T): sum of gap / k_inf(arm, mu_star)
    over suboptimal arms."""
    if instance.mu_star >= 1.0:
        raise DegenerateInstanceError("mu_star = 1: slope undefined at the cap")
    total = 0.0
    for a in instance.suboptimal_arms:
        total += instance.gaps[a] / k_inf(instance.arms[a], instance.mu_star).value
    return total


def _inflated_log_series(n_arms: int, T: int) -> float:
    """4e * sum_{t=n_arms}^{T-1} ceil(f(t) log t) exp(-f(t)) for the
    inflated-log schedule."""
    if T <= n_arms:
        return 0.0
    t = np.arange(n_arms, T, dtype=np.float64)
    let = np.log(np.e * t)
    f = let + 3.0 * np.log(let)
    return float(4.0 * math.e * np.sum(np.ceil(f * np.log(t)) * np.exp(-f)))


def _per_arm(values, arms_idx, what: str) -> dict[int, float]:
    if np.isscalar(values):
        out = {a: float(values) for a in arms_idx}
    else:
        seq = list(values)
        if len(seq) != len(arms_idx):
            raise ValueOutOfRangeError(
                f"{what}: expected scalar or {len(arms_idx)} values, got {len(seq)}"
            )
        out = {a: float(v) for a, v in zip(arms_idx, seq)}
    for a, v in out.items():
        if v <= 0.0:
            raise ValueOutOfRangeError(f"{what} must be positive, got {v} for arm {a}")
    return out


def _check_bernoulli(instance: BanditInstance) -> None:
    for i, arm in enumerate(instance.arms):
        if any(s not in (0.0, 1.0) for s in arm.support):
            raise NotBernoulliError(f"arm {i} has support off {{0, 1}}")


def bernoulli_regret_bound(instance: BanditInstance, T: int, c) -> BoundReport:
    """Finite-time regret bound for the Bernoulli KL index policy run with
    the inflated-log schedule, at analysis constants c (scalar or one per
    suboptimal arm).

    Per suboptimal arm the pull bound is
        (1+c) f(T) / kl(mu_a, mu_star) + 4e sum ceil(f log t) e^{-f}
        + (1+c)^2 / (8 c^2 gap^2 min(var_a^2, var_star^2))   [if mu_a in (0,1)]
        + 3,
    and the report totals gap-weighted contributions. Degenerate best means
    short-circuit: total 0 when mu_star = 0, and 2*(K-1) when mu_star = 1.
    """
    _check_bernoulli(instance)
    K = len(instance.arms)
    mu_star = instance.mu_star
    if mu_star == 0.0:
        return BoundReport(
            name="kl_bernoulli_regret_bound",
            total=0.0,
            arms=(),
            params={"T": T},
            special_case="mu_star=0: every arm is a point mass at 0, regret 0",
        )
    if mu_star == 1.0:
        return BoundReport(
            name="kl_bernoulli_regret_bound",
            total=2.0 * (K - 1),
            arms=(),
            params={"T": T},
            special_case="mu_star=1: regret at most 2*(K-1)",
        )

    sub = instance.suboptimal_arms
    c_by_arm = _per_arm(c, sub, "c")
    f_T = math.log(math.e * T) + 3.0 * math.log(math.log(math.e * T))
    series = _inflated_log_series(K, T)
    var_star = mu_star * (1.0 - mu_star)

    arm_bounds = []
    total = 0.0
    for a in sub:
        mu_a = instance.means[a]
        gap = instance.gaps[a]
        ca = c_by_arm[a]
        kl = kl_bernoulli(mu_a, mu_star)
        main = (1.0 + ca) * f_T / kl
        if 0.0 < mu_a < 1.0:
            var_a = mu_a * (1.0 - mu_a)
            margin = (1.0 + ca) ** 2 / (
                8.0 * ca**2 * gap**2 * min(var_a**2, var_star**2)
            )
        else:
            margin = 0.0
        terms = {
            "kl_main": main,
            "deviation_series": series,
            "variance_margin": margin,
            "constant": 3.0,
        }
        pull = main + series + margin + 3.0
        arm_bounds.append(
            ArmBound(
                arm=a,
                gap=gap,
                terms=terms,
                pull_bound=pull,
                contribution=gap * pull,
                params={"c": ca},
            )
        )
        total += gap * pull
    return BoundReport(
        name="kl_bernoulli_regret_bound",
        total=total,
        arms=tuple(arm_bounds),
        params={"T": T, "schedule": "inflated_log"},
    )


def bernoulli_regret_bound_best(
    instance: BanditInstance, T: int, c_grid=None
) -> BoundReport:
    """bernoulli_regret_bound minimized per arm over a grid of c values
    (the constants are analysis parameters, so the infimum is valid)."""
    grid = DEFAULT_C_GRID if c_grid is None else tuple(float(c) for c in c_grid)
    if not grid or any(c <= 0.0 for c in grid):
        raise ValueOutOfRangeError("c grid must be non-empty and positive")
    _check_bernoulli(instance)
    if instance.mu_star in (0.0, 1.0):
        return bernoulli_regret_bound(instance, T, 1.0)

    sub = instance.suboptimal_arms
    reports = [bernoulli_regret_bound(instance, T, c) for c in grid]
    arm_bounds = []
    total = 0.0
    for pos, a in enumerate(sub):
        best = min((rep.arms[pos] for rep in reports), key=lambda ab: ab.pull_bound)
        arm_bounds.append(best)
        total += best.contribution
    return BoundReport(
        name="kl_bernoulli_regret_bound",
        total=total,
        arms=tuple(arm_bounds),
        params={"T": T, "schedule": "inflated_log", "c_grid_size": len(grid)},
    )


def sanov_exponent(
    nu_a: FiniteDist, mu_star: float, gamma: float, grid: int = DEFAULT_THETA_GRID
) -> float:
    """Approximate inf of KL(nu' || nu_a) over distributions nu' on
    support(nu_a) whose k_inf towards mu_star stays strictly below gamma.

    Absolute continuity pins nu' to the arm's support. The simplex-grid
    search over-approximates the infimum from above; +inf means no grid
    point is feasible (the corresponding deviation probability is 0).
    """
    if not 0.0 <= mu_star < 1.0:
        raise MuOutOfRangeError(f"mu_star={mu_star!r} outside [0, 1)")
    if gamma <= 0.0:
        raise ValueOutOfRangeError(f"gamma must be > 0, got {gamma}")
    if len(nu_a.support) > 4:
        raise SupportTooLargeError(
            f"grid search limited to 4 atoms, got {len(nu_a.support)}"
        )
    if grid < 2:
        raise ValueOutOfRangeError(f"grid must be >= 2, got {grid}")
    if k_inf(nu_a, mu_star).value < gamma:
        return 0.0
    xs, ws = nu_a.arrays
    return float(_kernels.sanov_grid_min(xs, ws, mu_star, gamma, grid))


def kinf_regret_bound(
    instance: BanditInstance,
    T: int,
    c=0.5,
    eps=None,
    theta_grid: int = DEFAULT_THETA_GRID,
    epsilon_scale: float = DEFAULT_EPSILON_SCALE,
) -> BoundReport:
    """Finite-time regret bound for the K_inf index policy run with the
    plain log schedule.

    Per suboptimal arm (with mean > 0) and slack eps in
    (0, min(gap, (c/2)/(1+c) * (1-mu_star) * k_inf)):
        1 + (1+c) log T / k_inf
          + 1 / (1 - exp(-theta))
          + (1/eps^2) log(1/(1-mu_star+eps)) sum_{k=1}^T (k+1)^{|S*|} e^{-k eps^2}
          + 1 / (gap - eps)^2,
    where theta is the Sanov exponent at level log(T)/k0 + eps/(1-mu_star),
    k0 = ceil((1+c) log T / k_inf), and |S*| is the support size of the
    first optimal arm. eps defaults to 0.9x its upper limit per arm.

    The grid over-approximates theta, which underestimates the escape term;
    that term is flagged approximate in the per-arm note.
    """
    sub = instance.suboptimal_arms
    if not sub:
        return BoundReport(
            name="kinf_regret_bound",
            total=0.0,
            arms=(),
            params={"T": T},
            special_case="all arms optimal: regret 0",
        )
    mu_star = instance.mu_star
    if mu_star >= 1.0 or mu_star <= 0.0:
        raise MuStarDegenerateError(
            f"mu_star={mu_star} outside (0, 1); evaluator undefined"
        )
    for a in sub:
        if instance.means[a] == 0.0:
            raise MuADegenerateError(f"arm {a} has mean 0, outside evaluator scope")

    c_by_arm = _per_arm(c, sub, "c")
    log_T = math.log(T)
    star_arm = instance.optimal_arms[0]
    s_star = len(instance.arms[star_arm].support)

    kinf_by_arm = {a: k_inf(instance.arms[a], mu_star).value for a in sub}
    limits = {
        a: min(
            instance.gaps[a],
            (c_by_arm[a] / 2.0) / (1.0 + c_by_arm[a]) * (1.0 - mu_star) * kinf_by_arm[a],
        )
        for a in sub
    }
    if eps is None:
        if not 0.0 < epsilon_scale < 1.0:
            raise EpsilonOutOfRangeError(
                f"epsilon_scale must be inside (0, 1), got {epsilon_scale}"
            )
        eps_by_arm = {a: epsilon_scale * limits[a] for a in sub}
    else:
        eps_by_arm = _per_arm(eps, sub, "eps")
    for a in sub:
        if not 0.0 < eps_by_arm[a] < limits[a]:
            raise EpsilonOutOfRangeError(
                f"eps={eps_by_arm[a]} for arm {a} outside (0, {limits[a]})"
            )

    arm_bounds = []
    total = 0.0
    k_range = np.arange(1.0, float(T) + 1.0)
    for a in sub:
        gap = instance.gaps[a]
        ca = c_by_arm[a]
        ea = eps_by_arm[a]
        kinf_a = kinf_by_arm[a]
        main = (1.0 + ca) * log_T / kinf_a
        k0 = math.ceil(main)
        gamma = log_T / k0 + ea / (1.0 - mu_star)
        theta = sanov_exponent(instance.arms[a], mu_star, gamma, theta_grid)
        escape = 1.0 if math.isinf(theta) else 1.0 / (1.0 - math.exp(-theta))
        series = float(
            np.exp(s_star * np.log(k_range + 1.0) - k_range * ea**2).sum()
        )
        types_term = (1.0 / ea**2) * math.log(1.0 / (1.0 - mu_star + ea)) * series
        margin = 1.0 / (gap - ea) ** 2
        terms = {
            "init": 1.0,
            "kinf_main": main,
            "level_set_escape": escape,
            "types_series": types_term,
            "mean_gap_margin": margin,
        }
        pull = 1.0 + main + escape + types_term + margin
        arm_bounds.append(
            ArmBound(
                arm=a,
                gap=gap,
                terms=terms,
                pull_bound=pull,
                contribution=gap * pull,
                params={"c": ca, "eps": ea, "theta": theta, "k0": float(k0)},
                note="level_set_escape uses a grid over-approximation of the "
                "Sanov exponent and may undershoot slightly",
            )
        )
        total += gap * pull
    return BoundReport(
        name="kinf_regret_bound",
        total=total,
        arms=tuple(arm_bounds),
        params={"T": T, "schedule": "log", "theta_grid": theta_grid,
                "optimal_support_size": s_star},
    )


def baseline_bounds(instance: BanditInstance, T: int) -> dict[str, BoundReport]:
    """Expected-pull bounds for the UCB1 and UCB-V baselines, gap-weighted."""
    ucb1_arms = []
    ucbv_arms = []
    ucb1_total = 0.0
    ucbv_total = 0.0
    log_T = math.log(T)
    for a in instance.suboptimal_arms:
        gap = instance.gaps[a]
        if gap <= 0.0:
            raise ZeroGapError(f"arm {a} has zero gap")
        var = instance.arms[a].variance
        log1 = (8.0 / gap**2) * log_T
        const1 = 1.0 + math.pi**2 / 3.0
        pull1 = log1 + const1
        pullv = 10.0 * (var / gap**2 + 2.0 / gap) * log_T
        ucb1_arms.append(
            ArmBound(
                arm=a, gap=gap, terms={"log_term": log1, "constant": const1},
                pull_bound=pull1, contribution=gap * pull1,
            )
        )
        ucbv_arms.append(
            ArmBound(
                arm=a, gap=gap, terms={"log_term": pullv},
                pull_bound=pullv, contribution=gap * pullv,
            )
        )
        ucb1_total += gap * pull1
        ucbv_total += gap * pullv
    return {
        "ucb1": BoundReport(
            name="ucb1_regret_bound", total=ucb1_total,
            arms=tuple(ucb1_arms), params={"T": T},
        ),
        "ucbv": BoundReport(
            name="ucbv_regret_bound", total=ucbv_total,
            arms=tuple(ucbv_arms), params={"T": T},
        ),
    }
