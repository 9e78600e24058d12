"""The four decision strategies behind one select/update contract:
the Bernoulli KL index policy, the finite-support K_inf index policy,
and the UCB1 / UCB-V baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dist import EmpiricalDist, FiniteDist
from .errors import NoArmsError, ValueOutOfRangeError
from .indices import ExplorationSchedule, exploration

KL_BERNOULLI = "k_bernoulli"
KL_FINITE = "k_inf"
UCB1 = "ucb1"
UCBV = "ucbv"

POLICY_TAGS = (KL_BERNOULLI, KL_FINITE, UCB1, UCBV)

# Index policies default to the schedule their regret analysis uses.
_DEFAULT_SCHEDULE = {
    KL_BERNOULLI: ExplorationSchedule.INFLATED_LOG,
    KL_FINITE: ExplorationSchedule.LOG,
}

_INITIAL_ATOM_CAPACITY = 8


@dataclass(frozen=True)
class PolicyKind:
    """Policy identity: tag plus exploration schedule for the index policies.

    The schedule is ignored by ucb1/ucbv; for the KL policies it defaults to
    the one their analysis assumes (inflated log for k_bernoulli, plain log
    for k_inf).
    """

    policy: str
    exploration: ExplorationSchedule | None = None

    def __post_init__(self):
        if self.policy not in POLICY_TAGS:
            raise ValueOutOfRangeError(
                f"unknown policy {self.policy!r}; valid tags: {', '.join(POLICY_TAGS)}"
            )
        if self.exploration is None and self.policy in _DEFAULT_SCHEDULE:
            object.__setattr__(self, "exploration", _DEFAULT_SCHEDULE[self.policy])

    @property
    def name(self) -> str:
        if self.policy in _DEFAULT_SCHEDULE:
            return f"{self.policy}[{self.exploration.value}]"
        return self.policy


class ArmRecord:
    """Per-arm sufficient statistics: pulls, moment sums, empirical dist."""

    __slots__ = ("pulls", "reward_sum", "reward_sq_sum", "empirical")

    def __init__(self):
        self.pulls = 0
        self.reward_sum = 0.0
        self.reward_sq_sum = 0.0
        self.empirical = EmpiricalDist()

    @property
    def mean(self) -> float:
        return self.reward_sum / self.pulls

    @property
    def variance(self) -> float:
        # Plug-in (biased) empirical variance, clipped against float noise.
        v = self.reward_sq_sum / self.pulls - self.mean**2
        return v if v > 0.0 else 0.0

    def frozen(self) -> FiniteDist:
        return self.empirical.freeze()


class PolicyState:
    """Mutable per-replication state driving select_arm/update.

    Confined to a single simulation replication; never share across
    workers. select_arm is a deterministic function of the state.

    Besides the per-arm records, the state mirrors the sorted observed
    atoms and their counts into padded arrays so one compiled call scores
    every arm; the mirrors always reproduce exactly what
    ``record.frozen()`` would hand the index functions.
    """

    def __init__(self, kind: PolicyKind, n_arms: int):
        if n_arms < 2:
            raise NoArmsError(f"need at least 2 arms, got {n_arms}")
        self.kind = kind
        self.arms = [ArmRecord() for _ in range(n_arms)]
        self.t = 0
        cap = _INITIAL_ATOM_CAPACITY
        self._atoms = np.zeros((n_arms, cap), dtype=np.float64)
        self._counts = np.zeros((n_arms, cap), dtype=np.float64)
        self._sizes = np.zeros(n_arms, dtype=np.int64)
        self._pulls = np.zeros(n_arms, dtype=np.int64)
        self._sums = np.zeros(n_arms, dtype=np.float64)
        self._sq_sums = np.zeros(n_arms, dtype=np.float64)
        self._out = np.empty(n_arms, dtype=np.float64)

    def select_arm(self) -> int:
        """Arm to pull next: initialization in index order, then the argmax
        of the policy index, ties broken by larger empirical mean and then
        by smaller arm index."""
        for a, rec in enumerate(self.arms):
            if rec.pulls == 0:
                return a

        indices = self._indices()
        best = 0
        best_key = (indices[0], self.arms[0].mean)
        for a in range(1, len(self.arms)):
            key = (indices[a], self.arms[a].mean)
            if key > best_key:
                best = a
                best_key = key
        return best

    def _indices(self) -> list[float]:
        tag = self.kind.policy
        out = self._out
        if tag == KL_BERNOULLI:
            thr = exploration(self.kind.exploration, self.t)
            _kernels.kl_index_batch(self._sums, self._pulls, thr, out)
        elif tag == KL_FINITE:
            thr = exploration(self.kind.exploration, self.t)
            _kernels.kinf_index_batch(
                self._atoms, self._counts, self._sizes, self._pulls, thr, out
            )
        elif tag == UCB1:
            _kernels.ucb1_index_batch(self._sums, self._pulls, math.log(self.t), out)
        else:
            _kernels.ucbv_index_batch(
                self._sums, self._sq_sums, self._pulls, math.log(self.t), out
            )
        return out.tolist()

    def update(self, arm: int, reward: float) -> PolicyState:
        """Record one observed reward; returns self for chaining."""
        if not 0.0 <= reward <= 1.0 or math.isnan(reward):
            raise ValueOutOfRangeError(f"reward {reward!r} outside [0, 1]")
        rec = self.arms[arm]
        rec.pulls += 1
        rec.reward_sum += reward
        rec.reward_sq_sum += reward * reward
        rec.empirical = rec.empirical.observe(reward)
        self.t += 1

        self._pulls[arm] += 1
        self._sums[arm] += reward
        self._sq_sums[arm] += reward * reward
        sz = int(self._sizes[arm])
        row = self._atoms[arm]
        pos = int(np.searchsorted(row[:sz], reward))
        if pos < sz and row[pos] == reward:
            self._counts[arm, pos] += 1.0
        else:
            if sz == row.shape[0]:
                self._grow()
                row = self._atoms[arm]
            row[pos + 1 : sz + 1] = row[pos:sz]
            self._counts[arm, pos + 1 : sz + 1] = self._counts[arm, pos:sz]
            row[pos] = reward
            self._counts[arm, pos] = 1.0
            self._sizes[arm] = sz + 1
        return self

    def _grow(self):
        cap = self._atoms.shape[1] * 2
        for name in ("_atoms", "_counts"):
            old = getattr(self, name)
            new = np.zeros((old.shape[0], cap), dtype=np.float64)
            new[:, : old.shape[1]] = old
            setattr(self, name, new)


def select_arm(state: PolicyState) -> int:
    return state.select_arm()


def update(state: PolicyState, arm: int, reward: float) -> PolicyState:
    return state.update(arm, reward)
