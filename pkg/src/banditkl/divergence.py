"""KL divergences for Bernoulli and finite-support distributions, and the
K_inf value (smallest divergence to any distribution with a larger mean).

The production path for K_inf is a one-dimensional concave dual
maximization; a brute-force simplex-grid primal search is kept as a
desk-scale oracle so the two can cross-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .dist import FiniteDist
from .errors import MuOutOfRangeError, SupportTooLargeError

# Largest support the primal oracle accepts, counting the extra atom at 1.
_PRIMAL_MAX_ATOMS = 4


def kl_bernoulli(p: float, q: float) -> float:
    """KL(Bernoulli(p) || Bernoulli(q)) in nats.

    Conventions: 0*log(0/x) = 0, and the value is +inf when q in {0, 1}
    puts zero mass where p does not.
    """
    return float(_kernels.kl_bernoulli(p, q))


def kl_discrete(nu: FiniteDist, kappa: FiniteDist) -> float:
    """KL(nu || kappa); +inf unless every atom of nu is an atom of kappa."""
    kappa_w = dict(zip(kappa.support, kappa.weights))
    terms = []
    for s, w in zip(nu.support, nu.weights):
        q = kappa_w.get(s)
        if q is None:
            return math.inf
        terms.append(w * math.log(w / q))
    r = math.fsum(terms)
    return r if r > 0.0 else 0.0


@dataclass(frozen=True)
class KinfResult:
    """Value and dual optimum of one K_inf evaluation.

    ``lam`` is the maximizer of E[log(1 + lam*(mu - X))] over
    [0, 1/(1-mu)]; ``boundary`` is True iff it sits at the cap 1/(1-mu).
    """

    value: float
    lam: float
    boundary: bool


def k_inf(nu: FiniteDist, mu: float) -> KinfResult:
    """Smallest KL(nu || nu') over finite-support nu' with mean above mu.

    Solved through the concave dual; the result satisfies
    0 <= value <= log(1/(1-mu)) and value == 0 iff mean(nu) >= mu.
    """
    mu = float(mu)
    if not 0.0 <= mu < 1.0 or math.isnan(mu):
        raise MuOutOfRangeError(f"mu={mu!r} outside [0, 1)")
    xs, ws = nu.arrays
    value, lam, boundary = _kernels.kinf_dual(xs, ws, mu)
    return KinfResult(value=float(value), lam=float(lam), boundary=bool(boundary))


# Zoom stage around the coarse grid optimum: lattice step shrinks by
# _REFINE_FACTOR over a window of +/- _REFINE_STEPS points.
_REFINE_FACTOR = 50
_REFINE_STEPS = 75


@lru_cache(maxsize=8)
def _simplex_grid(d: int, grid: int) -> np.ndarray:
    """Strictly positive weight vectors with d coordinates on a 1/grid
    lattice, rows summing to 1."""
    if d == 1:
        counts = np.full((1, 1), grid, dtype=np.int64)
    elif d == 2:
        k = np.arange(1, grid, dtype=np.int64)
        counts = np.stack([k, grid - k], axis=1)
    elif d == 3:
        i, j = np.meshgrid(
            np.arange(1, grid, dtype=np.int64),
            np.arange(1, grid, dtype=np.int64),
            indexing="ij",
        )
        i = i.ravel()
        j = j.ravel()
        keep = i + j <= grid - 1
        i, j = i[keep], j[keep]
        counts = np.stack([i, j, grid - i - j], axis=1)
    else:
        raise SupportTooLargeError(f"simplex grid not built for d={d}")
    out = counts.astype(np.float64) / grid
    out.flags.writeable = False
    return out


@lru_cache(maxsize=4)
def _primal_tables(support, weights, grid):
    """Per-distribution tables reused across mu values: grid points, their
    means, and KL(weights || row) for every row."""
    p = _simplex_grid(len(support), grid)
    xs = np.asarray(support)
    ws = np.asarray(weights)
    xbar = p @ xs
    base = float(np.dot(ws, np.log(ws))) - np.log(p) @ ws
    return p, xbar, base


def _candidate_values(pts, xs, ws, mu, with_one):
    """Objective on explicit candidate rows; rows must be strictly positive."""
    base = float(np.dot(ws, np.log(ws))) - np.log(pts) @ ws
    xbar = pts @ xs
    if with_one:
        feasible = xbar >= mu
        if not feasible.any():
            return math.inf
        return float(base[feasible].min())
    lift = np.maximum(0.0, np.log((1.0 - xbar) / (1.0 - mu)))
    return float((base + lift).min())


def _refine(p0, xs, ws, mu, step, with_one):
    """Zoom pass: re-evaluate on a fine lattice around the coarse optimum."""
    d = len(p0)
    if d == 1:
        return math.inf
    offs = np.arange(-_REFINE_STEPS, _REFINE_STEPS + 1) * step
    if d == 2:
        p1 = p0[0] + offs
        pts = np.stack([p1, 1.0 - p1], axis=1)
    else:
        a, b = np.meshgrid(p0[0] + offs, p0[1] + offs, indexing="ij")
        p1 = a.ravel()
        p2 = b.ravel()
        pts = np.stack([p1, p2, 1.0 - p1 - p2], axis=1)
    pts = pts[np.all(pts > 0.0, axis=1)]
    if pts.shape[0] == 0:
        return math.inf
    return _candidate_values(pts, xs, ws, mu, with_one)


def k_inf_primal(nu: FiniteDist, mu: float, grid: int) -> float:
    """Brute-force K_inf: minimize KL(nu || nu') over a simplex grid of
    distributions on support(nu) plus the atom 1, keeping mean(nu') >= mu.

    The closed mean constraint realizes the infimum of the open one (the
    two agree for finite supports). When 1 is off the support, the mass s
    placed there never enters the divergence, so for each gridded weight
    vector p on the support the best split nu' = (1-s) p + s delta_1 is
    solved exactly: KL = KL(w || p) + log(1/(1-s)) at the tight mean. A
    zoom pass around the coarse optimum sharpens the O(1/grid)
    over-approximation; the result never falls below the true value.
    Intended for supports of at most 3 atoms.
    """
    mu = float(mu)
    if not 0.0 <= mu < 1.0 or math.isnan(mu):
        raise MuOutOfRangeError(f"mu={mu!r} outside [0, 1)")
    if len(nu.support) + 1 > _PRIMAL_MAX_ATOMS:
        raise SupportTooLargeError(
            f"primal oracle limited to {_PRIMAL_MAX_ATOMS - 1} atoms, "
            f"got {len(nu.support)}"
        )
    if grid < 100:
        raise ValueError(f"grid must be at least 100, got {grid}")
    if nu.mean >= mu:
        return 0.0

    # With an atom at 1 already in the support the extra point changes
    # nothing and the mean constraint filters the same simplex directly.
    with_one = nu.support[-1] == 1.0
    xs, ws = nu.arrays
    p, xbar, base = _primal_tables(nu.support, nu.weights, grid)
    if with_one:
        feasible = xbar >= mu
        if not feasible.any():
            return math.inf
        pos = int(np.flatnonzero(feasible)[base[feasible].argmin()])
        best = float(base[pos])
    else:
        vals = base + np.maximum(0.0, np.log((1.0 - xbar) / (1.0 - mu)))
        pos = int(vals.argmin())
        best = float(vals[pos])
    refined = _refine(
        p[pos], xs, ws, mu, 1.0 / (grid * _REFINE_FACTOR), with_one
    )
    return min(best, refined)
