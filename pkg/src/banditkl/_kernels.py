"""Compiled numeric kernels.

Everything here is pure float math on plain arrays so the simulator's inner
loop stays off the interpreter. Public modules wrap these with validated,
typed surfaces; tests exercise the wrappers, so the kernels are covered
through them.
"""

import math

import numpy as np
from numba import njit

# Largest probe strictly below 1: past this point level sets are not
# resolvable in float64 and the index collapses to 1.
_Q_CEIL = 1.0 - 1e-15

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


@njit(cache=True)
def kl_bernoulli(p, q):
    """KL(B(p) || B(q)) in nats, with the 0 log 0 = 0 convention."""
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        # p == q was handled above, so absolute continuity fails.
        return math.inf
    r = 0.0
    if p > 0.0:
        r += p * math.log(p / q)
    if p < 1.0:
        r += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return r


@njit(cache=True)
def kinf_dual(xs, ws, mu):
    """Maximize E[log(1 + lam*(mu - X))] over lam in [0, 1/(1-mu)].

    Returns (value, lam, boundary) where boundary == 1 iff the optimum sits
    at lam = 1/(1-mu). Atoms with zero weight are ignored. Assumes xs in
    [0, 1], ws >= 0 summing to 1, and 0 <= mu < 1.
    """
    n = xs.shape[0]
    m = 0.0
    for i in range(n):
        m += ws[i] * xs[i]
    if m >= mu:
        return 0.0, 0.0, 0

    # Optimum is at the cap iff E[(1-mu)/(1-X)] <= 1; any mass at X = 1
    # makes that expectation infinite and forces an interior solution.
    mass_at_one = False
    s = 0.0
    for i in range(n):
        if ws[i] <= 0.0:
            continue
        if xs[i] >= 1.0:
            mass_at_one = True
            break
        s += ws[i] * (1.0 - mu) / (1.0 - xs[i])
    if not mass_at_one and s <= 1.0:
        val = 0.0
        for i in range(n):
            if ws[i] > 0.0:
                val += ws[i] * math.log((1.0 - xs[i]) / (1.0 - mu))
        if val < 0.0:
            val = 0.0
        return val, 1.0 / (1.0 - mu), 1

    # Interior root of the strictly decreasing derivative
    #   g'(lam) = E[(mu - X) / (1 + lam*(mu - X))],
    # bracketed by [0, lam_hi] with g'(0) = mu - m > 0 > g'(lam_hi).
    lam_max = 1.0 / (1.0 - mu)
    delta = 1e-12 if mass_at_one else 0.0
    lam_hi = lam_max * (1.0 - delta)
    ghi = 0.0
    for _ in range(12):
        ghi = 0.0
        for i in range(n):
            if ws[i] > 0.0:
                ghi += ws[i] * (mu - xs[i]) / (1.0 + lam_hi * (mu - xs[i]))
        if ghi < 0.0:
            break
        delta = 1e-12 if delta == 0.0 else delta / 10.0
        lam_hi = lam_max * (1.0 - delta)

    lo = 0.0
    hi = lam_hi
    lam = 0.5 * (lo + hi)
    for _ in range(200):
        g1 = 0.0
        g2 = 0.0
        for i in range(n):
            if ws[i] > 0.0:
                d = mu - xs[i]
                u = 1.0 + lam * d
                g1 += ws[i] * d / u
                g2 -= ws[i] * d * d / (u * u)
        # With mu near 1 the derivative scales like 1/lam, so the absolute
        # test alone would fire long before the maximum is located; also
        # require the implied value error g'^2 / (2|g''|) to be negligible.
        if abs(g1) <= 1e-12 and g1 * g1 <= 2e-13 * -g2:
            break
        if g1 > 0.0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 1e-14:
            break
        step = lam - g1 / g2
        if step <= lo or step >= hi or not math.isfinite(step):
            step = 0.5 * (lo + hi)
        lam = step

    val = 0.0
    for i in range(n):
        if ws[i] > 0.0:
            val += ws[i] * math.log1p(lam * (mu - xs[i]))
    if val < 0.0:
        val = 0.0
    return val, lam, 0


@njit(cache=True)
def kinf_value(xs, ws, mu):
    val, _lam, _b = kinf_dual(xs, ws, mu)
    return val


@njit(cache=True)
def bisect_kl_bernoulli(p_hat, n, threshold):
    """Largest q in [p_hat, 1] with n * KL(B(p_hat) || B(q)) <= threshold.

    Runs the bisection to float64 collapse so the level equation holds as
    tightly as the representation allows; returns 1.0 when the level set
    extends past the largest representable probe below 1.
    """
    if p_hat >= 1.0:
        return 1.0
    if threshold <= 0.0:
        # Zero-width level set; bisection would drift by cancellation noise.
        return p_hat
    lo = p_hat
    hi = _Q_CEIL
    if n * kl_bernoulli(p_hat, hi) <= threshold:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if n * kl_bernoulli(p_hat, mid) <= threshold:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def bisect_kinf(xs, ws, n, threshold):
    """Largest q with n * kinf_value(xs, ws, q) <= threshold.

    Bisection on [mean, 1), where the mean is recomputed here so every
    caller shares bit-identical arithmetic.
    """
    mean = 0.0
    for i in range(xs.shape[0]):
        mean += ws[i] * xs[i]
    if mean >= 1.0:
        return 1.0
    if threshold <= 0.0:
        # Level set collapses to [0, mean].
        return mean
    lo = mean
    hi = _Q_CEIL
    if n * kinf_value(xs, ws, hi) <= threshold:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if n * kinf_value(xs, ws, mid) <= threshold:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def kl_index_batch(sums, pulls, threshold, out):
    """Bernoulli KL index for every arm in one call."""
    for a in range(pulls.shape[0]):
        out[a] = bisect_kl_bernoulli(sums[a] / pulls[a], pulls[a], threshold)


@njit(cache=True)
def kinf_index_batch(atoms, counts, sizes, pulls, threshold, out):
    """K_inf index for every arm from padded (atoms, counts) state rows."""
    for a in range(sizes.shape[0]):
        sz = sizes[a]
        out[a] = bisect_kinf(
            atoms[a, :sz], counts[a, :sz] / pulls[a], pulls[a], threshold
        )


@njit(cache=True)
def ucb1_index_batch(sums, pulls, log_t, out):
    for a in range(pulls.shape[0]):
        out[a] = sums[a] / pulls[a] + math.sqrt(2.0 * log_t / pulls[a])


@njit(cache=True)
def ucbv_index_batch(sums, sq_sums, pulls, log_t, out):
    """UCB-V index with exploration zeta = 1 and range b = 1; the variance
    is the plug-in (biased) one, clipped against float noise."""
    for a in range(pulls.shape[0]):
        mean = sums[a] / pulls[a]
        var = sq_sums[a] / pulls[a] - mean * mean
        if var < 0.0:
            var = 0.0
        out[a] = (
            mean
            + math.sqrt(2.0 * var * log_t / pulls[a])
            + 3.0 * log_t / pulls[a]
        )


@njit(cache=True)
def fnv1a64(data):
    """64-bit FNV-1a over a uint8 buffer."""
    h = _FNV_OFFSET
    for i in range(data.shape[0]):
        h = (h ^ np.uint64(data[i])) * _FNV_PRIME
    return h


@njit(cache=True)
def deviation_scan(draws, p, eps):
    """Count rows whose running mean ever satisfies s * KL(mean_s, p) >= eps.

    draws is a (reps, t) uint8 matrix of Bernoulli outcomes.
    """
    reps = draws.shape[0]
    t = draws.shape[1]
    hits = 0
    for r in range(reps):
        acc = 0
        for s in range(1, t + 1):
            acc += draws[r, s - 1]
            p_hat = acc / s
            if s * kl_bernoulli(p_hat, p) >= eps:
                hits += 1
                break
    return hits


@njit(cache=True)
def _kl_weights(v, w):
    """KL(v || w) for weight vectors on identical atoms; inf if v charges a
    zero-weight coordinate of w."""
    r = 0.0
    for i in range(v.shape[0]):
        if v[i] > 0.0:
            if w[i] <= 0.0:
                return math.inf
            r += v[i] * math.log(v[i] / w[i])
    return r


@njit(cache=True)
def sanov_grid_min(xs, wa, mu_star, gamma, grid):
    """Minimal KL(v || wa) over grid weight vectors v on atoms xs whose
    kinf towards mu_star stays strictly below gamma.

    Supports up to 4 atoms. Returns inf when no grid point is feasible.
    """
    d = xs.shape[0]
    g = grid
    inv = 1.0 / g
    best = math.inf
    v = np.empty(d, dtype=np.float64)

    if d == 1:
        v[0] = 1.0
        if kinf_value(xs, v, mu_star) < gamma:
            return 0.0
        return math.inf

    n1 = g + 1
    for k1 in range(n1):
        if d == 2:
            v[0] = k1 * inv
            v[1] = (g - k1) * inv
            best = _sanov_point(xs, wa, mu_star, gamma, v, best)
        else:
            for k2 in range(g - k1 + 1):
                if d == 3:
                    v[0] = k1 * inv
                    v[1] = k2 * inv
                    v[2] = (g - k1 - k2) * inv
                    best = _sanov_point(xs, wa, mu_star, gamma, v, best)
                else:
                    for k3 in range(g - k1 - k2 + 1):
                        v[0] = k1 * inv
                        v[1] = k2 * inv
                        v[2] = k3 * inv
                        v[3] = (g - k1 - k2 - k3) * inv
                        best = _sanov_point(xs, wa, mu_star, gamma, v, best)
    return best


@njit(cache=True)
def _sanov_point(xs, wa, mu_star, gamma, v, best):
    obj = _kl_weights(v, wa)
    if obj >= best:
        return best
    mean = 0.0
    for i in range(xs.shape[0]):
        mean += v[i] * xs[i]
    if mean < mu_star:
        # kinf >= 2*(mu_star - mean)^2, so far-off points skip the solve.
        gap = mu_star - mean
        if 2.0 * gap * gap >= gamma:
            return best
        if kinf_value(xs, v, mu_star) >= gamma:
            return best
    return obj


def warm_up():
    """Trigger JIT compilation of every kernel (cheap after disk caching)."""
    xs = np.array([0.0, 0.5, 1.0])
    ws = np.array([0.3, 0.3, 0.4])
    kinf_dual(xs, ws, 0.9)
    bisect_kinf(xs, ws, 3, 1.0)
    bisect_kl_bernoulli(0.4, 3, 1.0)
    kl_bernoulli(0.3, 0.5)
    fnv1a64(np.zeros(4, dtype=np.uint8))
    deviation_scan(np.zeros((1, 2), dtype=np.uint8), 0.5, 2.0)
    sanov_grid_min(xs[:2], np.array([0.5, 0.5]), 0.6, 0.1, 8)
    out = np.empty(2)
    sums = np.array([1.0, 0.5])
    sqs = np.array([1.0, 0.5])
    pulls = np.array([2, 2], dtype=np.int64)
    kl_index_batch(sums, pulls, 1.0, out)
    ucb1_index_batch(sums, pulls, 1.0, out)
    ucbv_index_batch(sums, sqs, pulls, 1.0, out)
    atoms = np.zeros((2, 4))
    counts = np.zeros((2, 4))
    atoms[:, 0] = 0.0
    atoms[:, 1] = 1.0
    counts[:, 0] = 1.0
    counts[:, 1] = 1.0
    sizes = np.array([2, 2], dtype=np.int64)
    kinf_index_batch(atoms, counts, sizes, pulls, 1.0, out)
