"""Exploration schedules and the upper-confidence indices obtained by
inverting divergence level sets."""

from __future__ import annotations

import math
from enum import Enum

from . import _kernels
from .dist import FiniteDist
from .errors import NonPositiveTError, ValueOutOfRangeError


class ExplorationSchedule(str, Enum):
    """Threshold schedule f(t) for the index level sets.

    LOG is the plain f(t) = log t; INFLATED_LOG is
    f(t) = log((e*t) * log^3(e*t)), which is non-decreasing, has f(1) = 1,
    and keeps the deviation series sum(ceil(f(t) log t) e^{-f(t)}) bounded.
    """

    LOG = "log"
    INFLATED_LOG = "inflated_log"


def exploration(kind: ExplorationSchedule, t: int) -> float:
    """Evaluate the schedule at round t >= 1."""
    if t < 1:
        raise NonPositiveTError(f"t must be >= 1, got {t}")
    if kind is ExplorationSchedule.LOG:
        return math.log(t)
    # log((e t) log^3(e t)) in additive form; exact 1.0 at t = 1.
    let = math.log(math.e * t)
    return let + 3.0 * math.log(let)


def _check_index_args(n: int, threshold: float) -> None:
    if n < 1:
        raise ValueOutOfRangeError(f"pull count must be >= 1, got {n}")
    if threshold < 0.0 or math.isnan(threshold):
        raise ValueOutOfRangeError(f"threshold must be >= 0, got {threshold!r}")


def kl_ucb_index(p_hat: float, n: int, threshold: float) -> float:
    """Largest q in [p_hat, 1] with n * kl_bernoulli(p_hat, q) <= threshold.

    Bisection over the non-decreasing map q -> kl_bernoulli(p_hat, q); the
    bracket collapses to float resolution, so at interior solutions the
    level equation holds to within the representation's accuracy.
    """
    if not 0.0 <= p_hat <= 1.0 or math.isnan(p_hat):
        raise ValueOutOfRangeError(f"p_hat={p_hat!r} outside [0, 1]")
    _check_index_args(n, threshold)
    return float(_kernels.bisect_kl_bernoulli(p_hat, n, threshold))


def kinf_ucb_index(nu_hat: FiniteDist, n: int, threshold: float) -> float:
    """Largest q in [0, 1] with n * k_inf(nu_hat, q) <= threshold.

    Bisection on [mean(nu_hat), 1); returns 1 exactly when the level set
    reaches past the largest representable probe below 1 (in particular
    whenever mean(nu_hat) == 1).
    """
    _check_index_args(n, threshold)
    xs, ws = nu_hat.arrays
    return float(_kernels.bisect_kinf(xs, ws, n, threshold))
