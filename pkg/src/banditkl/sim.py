"""Deterministic replicated bandit simulation, pseudo-regret accounting,
and Monte Carlo certificates for the concentration inequalities."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .dist import FiniteDist, RandomSource, child_seed
from .errors import HorizonTooSmallError, NoArmsError, ValueOutOfRangeError
from .policies import PolicyKind, PolicyState

WORKERS_ENV = "BANDIT_WORKERS"

# Rows per chunk in the deviation scan; fixed so results never depend on the
# host's memory or core count.
_DEVIATION_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class BanditInstance:
    """Arm set with its true distributions and derived gap structure."""

    arms: tuple[FiniteDist, ...]

    def __post_init__(self):
        if len(self.arms) < 2:
            raise NoArmsError(f"instance needs at least 2 arms, got {len(self.arms)}")

    @cached_property
    def means(self) -> tuple[float, ...]:
        return tuple(a.mean for a in self.arms)

    @cached_property
    def mu_star(self) -> float:
        return max(self.means)

    @cached_property
    def gaps(self) -> tuple[float, ...]:
        best = self.mu_star
        return tuple(best - m for m in self.means)

    @cached_property
    def optimal_arms(self) -> tuple[int, ...]:
        return tuple(a for a, g in enumerate(self.gaps) if g == 0.0)

    @cached_property
    def suboptimal_arms(self) -> tuple[int, ...]:
        return tuple(a for a, g in enumerate(self.gaps) if g > 0.0)

    @staticmethod
    def bernoulli(*ps: float) -> BanditInstance:
        return BanditInstance(arms=tuple(FiniteDist.bernoulli(p) for p in ps))


@dataclass(frozen=True)
class RunResult:
    """One replication: final pull counts, pseudo-regret at checkpoints, and
    a 64-bit FNV-1a digest of the action sequence (little-endian uint32
    encoding) as a reproducibility witness."""

    pulls: tuple[int, ...]
    checkpoints: tuple[int, ...]
    regret_curve: tuple[float, ...]
    action_log_hash: int
    seed: int


@dataclass(frozen=True)
class AggregateResult:
    """Replication average of RunResults, reduced in replication-index order."""

    checkpoints: tuple[int, ...]
    mean_regret: tuple[float, ...]
    stderr_regret: tuple[float, ...]
    mean_pulls: tuple[float, ...]
    stderr_pulls: tuple[float, ...]
    replications: int
    base_seed: int
    child_seeds: tuple[int, ...]
    action_log_hashes: tuple[int, ...]


def default_checkpoints(T: int, count: int = 50) -> tuple[int, ...]:
    """About `count` log-spaced round indices in [1, T], always ending at T."""
    if T < 1:
        raise ValueOutOfRangeError(f"T must be >= 1, got {T}")
    pts = np.unique(
        np.rint(np.logspace(0.0, math.log10(T), count)).astype(np.int64)
    )
    pts = pts[(pts >= 1) & (pts <= T)]
    out = sorted(set(pts.tolist()) | {T})
    return tuple(int(p) for p in out)


def _normalize_checkpoints(checkpoints, T: int) -> tuple[int, ...]:
    if checkpoints is None:
        return default_checkpoints(T)
    pts = sorted(set(int(c) for c in checkpoints) | {T})
    if pts[0] < 1 or pts[-1] > T:
        raise ValueOutOfRangeError(
            f"checkpoints must be non-empty integers in [1, {T}]"
        )
    return tuple(pts)


def run_one(
    instance: BanditInstance,
    kind: PolicyKind,
    T: int,
    seed: int,
    checkpoints=None,
) -> RunResult:
    """Simulate T rounds of one policy on one instance, deterministically in
    (instance, kind, T, seed).

    Pseudo-regret accumulates the true gap of each pulled arm, not realized
    rewards.
    """
    n_arms = len(instance.arms)
    if T < n_arms:
        raise HorizonTooSmallError(
            f"horizon {T} shorter than the {n_arms}-arm initialization"
        )
    cps = _normalize_checkpoints(checkpoints, T)

    state = PolicyState(kind, n_arms)
    source = RandomSource(seed)
    gaps = instance.gaps
    arms = instance.arms

    actions = np.empty(T, dtype=np.uint32)
    curve = np.empty(len(cps), dtype=np.float64)
    regret = 0.0
    cp_idx = 0
    for t in range(T):
        a = state.select_arm()
        reward = arms[a].sample(source)
        state.update(a, reward)
        actions[t] = a
        regret += gaps[a]
        if cps[cp_idx] == t + 1:
            curve[cp_idx] = regret
            cp_idx += 1
    assert cp_idx == len(cps)

    digest = int(_kernels.fnv1a64(actions.astype("<u4").view(np.uint8)))
    return RunResult(
        pulls=tuple(rec.pulls for rec in state.arms),
        checkpoints=cps,
        regret_curve=tuple(float(x) for x in curve),
        action_log_hash=digest,
        seed=int(seed),
    )


def _replicate(args) -> RunResult:
    instance, kind, T, seed, cps = args
    return run_one(instance, kind, T, seed, cps)


def resolve_workers(workers: int | None) -> int:
    """Effective worker count: explicit argument, else the BANDIT_WORKERS
    environment default; 0 means one worker per CPU; the env var caps any
    explicit request."""
    env = os.environ.get(WORKERS_ENV)
    cap = None
    if env is not None and env.strip() != "":
        cap = int(env)
        if cap == 0:
            cap = os.cpu_count() or 1
    if workers is None:
        requested = cap if cap is not None else 1
    elif workers == 0:
        requested = os.cpu_count() or 1
    else:
        requested = workers
    if cap is not None:
        requested = min(requested, cap)
    return max(1, requested)


def run_many(
    instance: BanditInstance,
    kind: PolicyKind,
    T: int,
    replications: int,
    base_seed: int,
    checkpoints=None,
    workers: int | None = None,
) -> AggregateResult:
    """Average `replications` independent run_one calls.

    Replication i uses the child seed base_seed XOR (i * SEED_MIX); results
    are reduced in replication-index order, so the outcome is identical for
    any worker count or scheduling.
    """
    if replications < 1:
        raise ValueOutOfRangeError(f"replications must be >= 1, got {replications}")
    cps = _normalize_checkpoints(checkpoints, T)
    seeds = [child_seed(base_seed, i) for i in range(replications)]
    tasks = [(instance, kind, T, s, cps) for s in seeds]

    n_workers = min(resolve_workers(workers), replications)
    if n_workers <= 1:
        results = [_replicate(t) for t in tasks]
    else:
        # Children inherit the already-compiled kernels through fork.
        _kernels.warm_up()
        chunk = max(1, math.ceil(replications / (4 * n_workers)))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=chunk))

    curves = np.array([r.regret_curve for r in results], dtype=np.float64)
    pulls = np.array([r.pulls for r in results], dtype=np.float64)
    R = replications
    if R >= 2:
        se_curve = curves.std(axis=0, ddof=1) / math.sqrt(R)
        se_pulls = pulls.std(axis=0, ddof=1) / math.sqrt(R)
    else:
        se_curve = np.zeros(curves.shape[1])
        se_pulls = np.zeros(pulls.shape[1])

    return AggregateResult(
        checkpoints=cps,
        mean_regret=tuple(float(x) for x in curves.mean(axis=0)),
        stderr_regret=tuple(float(x) for x in se_curve),
        mean_pulls=tuple(float(x) for x in pulls.mean(axis=0)),
        stderr_pulls=tuple(float(x) for x in se_pulls),
        replications=R,
        base_seed=int(base_seed),
        child_seeds=tuple(seeds),
        action_log_hashes=tuple(r.action_log_hash for r in results),
    )


def mc_check_deviation(
    p: float, t: int, eps: float, reps: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo certificate for the self-normalized deviation inequality.

    Simulates `reps` Bernoulli(p) streams of length t and returns the
    empirical frequency of {exists s <= t : s * kl(mean_s, p) >= eps}
    together with the claimed bound 2e * ceil(eps * log t) * exp(-eps).
    """
    if not 0.0 < p < 1.0:
        raise ValueOutOfRangeError(f"p={p!r} must be inside (0, 1)")
    if t < 1:
        raise ValueOutOfRangeError(f"t must be >= 1, got {t}")
    if eps <= 1.0:
        raise ValueOutOfRangeError(f"eps must exceed 1, got {eps}")
    if reps < 1:
        raise ValueOutOfRangeError(f"reps must be >= 1, got {reps}")

    source = RandomSource(seed)
    rows_per_chunk = max(1, _DEVIATION_CHUNK_CELLS // t)
    hits = 0
    done = 0
    while done < reps:
        rows = min(rows_per_chunk, reps - done)
        draws = (source.uniforms((rows, t)) < p).astype(np.uint8)
        hits += int(_kernels.deviation_scan(draws, p, eps))
        done += rows

    bound = 2.0 * math.e * math.ceil(eps * math.log(t)) * math.exp(-eps)
    return hits / reps, bound


def mc_check_types(
    nu: FiniteDist, k: int, gamma: float, reps: int, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo certificate for the method-of-types tail bound.

    Returns the empirical frequency of {KL(empirical_k || nu) > gamma} over
    `reps` batches of k draws, and the bound (k+1)^|S| * exp(-k*gamma).
    The per-atom counts of k draws are sampled directly as a multinomial,
    which has exactly the same law.
    """
    if k < 1:
        raise ValueOutOfRangeError(f"k must be >= 1, got {k}")
    if gamma <= 0.0:
        raise ValueOutOfRangeError(f"gamma must be > 0, got {gamma}")
    if reps < 1:
        raise ValueOutOfRangeError(f"reps must be >= 1, got {reps}")

    xs, ws = nu.arrays
    source = RandomSource(seed)
    counts = source.multinomial(k, ws, size=reps)
    p_hat = counts / k
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p_hat > 0.0, p_hat * np.log(p_hat / ws), 0.0)
    kl = terms.sum(axis=1)
    freq = float(np.mean(kl > gamma))
    size = len(nu.support)
    bound = math.exp(size * math.log(k + 1) - k * gamma)
    return freq, bound
