"""Finite-support distributions on [0, 1], empirical counterparts, and
deterministic seeded sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    EmptyEmpiricalError,
    EmptySupportError,
    ValueOutOfRangeError,
    WeightsNotNormalizableError,
)

_MASK64 = (1 << 64) - 1

# Child-seed mixing constant; fixed so parallel and serial replications are
# bit-identical.
SEED_MIX = 0x9E3779B97F4A7C15

# |sum(weights) - 1| beyond this is a caller error rather than float noise.
_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class FiniteDist:
    """Probability distribution with finite support inside [0, 1].

    Canonical form: strictly increasing support, strictly positive weights
    summing to 1. Build through :func:`make_finite`, which sorts, merges
    duplicate atoms, drops zero weights and renormalizes.
    """

    support: tuple[float, ...]
    weights: tuple[float, ...]

    @cached_property
    def mean(self) -> float:
        # Plain left-to-right dot product, matching the compiled kernels'
        # arithmetic bit for bit.
        m = 0.0
        for s, w in zip(self.support, self.weights):
            m += w * s
        return m

    @cached_property
    def variance(self) -> float:
        m = self.mean
        return math.fsum(w * (s - m) ** 2 for s, w in zip(self.support, self.weights))

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(support, weights) as read-only float64 arrays for the kernels."""
        xs = np.asarray(self.support, dtype=np.float64)
        ws = np.asarray(self.weights, dtype=np.float64)
        xs.flags.writeable = False
        ws.flags.writeable = False
        return xs, ws

    @cached_property
    def _cum_weights(self) -> tuple[float, ...]:
        acc = 0.0
        out = []
        for w in self.weights:
            acc += w
            out.append(acc)
        return tuple(out)

    def weight_of(self, x: float) -> float:
        for s, w in zip(self.support, self.weights):
            if s == x:
                return w
        return 0.0

    def sample(self, source: RandomSource) -> float:
        """Draw one atom, advancing the source's stream by one uniform."""
        u = source.uniform()
        cum = self._cum_weights
        for i, c in enumerate(cum):
            if u < c:
                return self.support[i]
        return self.support[-1]

    @staticmethod
    def bernoulli(p: float) -> FiniteDist:
        if p == 0.0:
            return make_finite([0.0], [1.0])
        if p == 1.0:
            return make_finite([1.0], [1.0])
        return make_finite([0.0, 1.0], [1.0 - p, p])

    @staticmethod
    def dirac(x: float) -> FiniteDist:
        return make_finite([x], [1.0])


def make_finite(support: Iterable[float], weights: Iterable[float]) -> FiniteDist:
    """Validate and canonicalize (support, weights) into a FiniteDist."""
    xs = [float(x) for x in support]
    ws = [float(w) for w in weights]
    if len(xs) != len(ws):
        raise ValueOutOfRangeError(
            f"support has {len(xs)} entries but weights has {len(ws)}"
        )
    if not xs:
        raise EmptySupportError("support must contain at least one atom")
    for x in xs:
        if not 0.0 <= x <= 1.0 or math.isnan(x):
            raise ValueOutOfRangeError(f"support point {x!r} outside [0, 1]")
    for w in ws:
        if w < 0.0 or math.isnan(w):
            raise ValueOutOfRangeError(f"weight {w!r} is negative")
    total = math.fsum(ws)
    if abs(total - 1.0) > _WEIGHT_SUM_TOL:
        raise WeightsNotNormalizableError(
            f"weights sum to {total!r}, more than {_WEIGHT_SUM_TOL} away from 1"
        )

    merged: dict[float, float] = {}
    for x, w in zip(xs, ws):
        if w > 0.0:
            merged[x] = merged.get(x, 0.0) + w
    if not merged:
        raise EmptySupportError("every weight is zero")
    atoms = sorted(merged)
    mass = math.fsum(merged.values())
    return FiniteDist(
        support=tuple(atoms),
        weights=tuple(merged[a] / mass for a in atoms),
    )


def mean(d: FiniteDist) -> float:
    return d.mean


def sample(d: FiniteDist, source: RandomSource) -> float:
    return d.sample(source)


@dataclass(frozen=True)
class EmpiricalDist:
    """Multiset of observed rewards for one arm, keyed by exact value."""

    atoms: Mapping[float, int] = field(default_factory=dict)
    total: int = 0

    def observe(self, x: float) -> EmpiricalDist:
        """Return a new EmpiricalDist with one more observation of x."""
        x = float(x)
        if not 0.0 <= x <= 1.0 or math.isnan(x):
            raise ValueOutOfRangeError(f"observation {x!r} outside [0, 1]")
        counts = dict(self.atoms)
        counts[x] = counts.get(x, 0) + 1
        return EmpiricalDist(atoms=counts, total=self.total + 1)

    def freeze(self) -> FiniteDist:
        """Normalized counts as a FiniteDist; needs at least one observation."""
        if self.total < 1:
            raise EmptyEmpiricalError("no observations to freeze")
        atoms = sorted(self.atoms)
        return FiniteDist(
            support=tuple(atoms),
            weights=tuple(self.atoms[a] / self.total for a in atoms),
        )

    @staticmethod
    def from_values(values: Iterable[float]) -> EmpiricalDist:
        counts: dict[float, int] = {}
        n = 0
        for v in values:
            v = float(v)
            if not 0.0 <= v <= 1.0 or math.isnan(v):
                raise ValueOutOfRangeError(f"observation {v!r} outside [0, 1]")
            counts[v] = counts.get(v, 0) + 1
            n += 1
        return EmpiricalDist(atoms=counts, total=n)


def observe(e: EmpiricalDist, x: float) -> EmpiricalDist:
    return e.observe(x)


def freeze(e: EmpiricalDist) -> FiniteDist:
    return e.freeze()


class RandomSource:
    """Deterministic uniform stream identified by a 64-bit seed.

    Single-owner: never share one source across workers. Replication i of a
    batch uses ``child(i)``, whose seed is ``seed XOR (i * SEED_MIX)`` mod
    2^64, so parallel and serial schedules consume identical streams.
    """

    __slots__ = ("seed", "_gen")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self) -> float:
        """Next float in [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, shape) -> np.ndarray:
        return self._gen.random(shape)

    def multinomial(self, n: int, pvals, size=None) -> np.ndarray:
        return self._gen.multinomial(n, pvals, size=size)

    def child(self, index: int) -> RandomSource:
        return RandomSource(child_seed(self.seed, index))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"


def child_seed(base_seed: int, index: int) -> int:
    """Derive the replication child seed: base XOR (index * SEED_MIX) mod 2^64."""
    return (int(base_seed) ^ ((int(index) * SEED_MIX) & _MASK64)) & _MASK64
