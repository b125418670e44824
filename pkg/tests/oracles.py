"""Independent oracles the tests check the library against.

Nothing here imports estimator internals: expectations come from exhaustive
enumeration of draw tuples, monotone fits from brute-force search over block
partitions, and empirical distributions from a standalone vectorized
sampler. Keeping these routes separate from the code under test is the whole
point; resist the urge to share helpers with the package.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def draw_tuples(ids, masses, n):
    """All ordered n-tuples of ids with i.i.d. mass-proportional probabilities."""
    total = math.fsum(masses)
    probs = [m / total for m in masses]
    for combo in itertools.product(range(len(ids)), repeat=n):
        p = 1.0
        for i in combo:
            p *= probs[i]
        yield tuple(ids[i] for i in combo), p


def uniform_tuples(ids, n):
    """All ordered n-tuples of ids, equiprobable."""
    p = 1.0 / len(ids) ** n
    for combo in itertools.product(ids, repeat=n):
        yield tuple(combo), p


def enum_moments(pairs):
    """Mean and variance of a finite (value, probability) distribution."""
    pairs = list(pairs)
    total = math.fsum(p for _, p in pairs)
    mean = math.fsum(v * p for v, p in pairs) / total
    var = math.fsum((v - mean) ** 2 * p for v, p in pairs) / total
    return mean, var


def enum_conditional_moments(triples):
    """Moments restricted to the kept outcomes of (value, prob, kept) triples."""
    kept = [(v, p) for v, p, k in triples if k]
    return enum_moments(kept)


def population_region_stats(g, f, member_mask):
    """Exact F(S), G(S), p(S) and weight variance sigma^2(S) by summation."""
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    member_mask = np.asarray(member_mask, dtype=bool)
    G_S = math.fsum(g[member_mask])
    F_S = math.fsum(f[member_mask])
    p_S = G_S / math.fsum(g)
    center = F_S / G_S
    w = f[member_mask] / g[member_mask]
    mass = g[member_mask] / G_S
    sigma2 = math.fsum(m * (wi - center) ** 2 for m, wi in zip(mass, w))
    return F_S, G_S, p_S, sigma2


def mc_region_estimates(g, f, member_mask, n, trials, seed):
    """Empirical draws of the shared-batch region estimate, vectorized.

    Standalone reimplementation: proportional tuples via cumulative-mass
    search, estimate G(S) * mean(f/g over in-region draws), 0 when none.
    Returns (estimates, in-region counts).
    """
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    member_mask = np.asarray(member_mask, dtype=bool)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    cum = np.cumsum(g)
    idx = np.searchsorted(cum, rng.random((trials, n)) * cum[-1], side="right")
    np.minimum(idx, len(g) - 1, out=idx)
    w = (f / g)[idx]
    in_region = member_mask[idx]
    n_S = in_region.sum(axis=1)
    sums = (w * in_region).sum(axis=1)
    G_S = g[member_mask].sum()
    est = np.where(n_S > 0, G_S * sums / np.maximum(n_S, 1), 0.0)
    return est, n_S


def brute_monotone_fit(y):
    """Least-squares nondecreasing fit by enumerating all block partitions.

    Every candidate (consecutive blocks, each fitted at its mean, with
    nondecreasing block means) is a feasible monotone vector; the true L2
    projection is among them, and the projection is unique, so the SSE
    argmin is the projection.
    """
    y = [float(v) for v in y]
    n = len(y)
    best_sse, best_fit = None, None
    for cuts in itertools.product((0, 1), repeat=n - 1):
        blocks = []
        start = 0
        for i, cut in enumerate(cuts, start=1):
            if cut:
                blocks.append((start, i))
                start = i
        blocks.append((start, n))
        means = [math.fsum(y[a:b]) / (b - a) for a, b in blocks]
        if any(m2 < m1 for m1, m2 in zip(means, means[1:])):
            continue
        fit = []
        for (a, b), m in zip(blocks, means):
            fit.extend([m] * (b - a))
        sse = math.fsum((yi - fi) ** 2 for yi, fi in zip(y, fit))
        if best_sse is None or sse < best_sse:
            best_sse, best_fit = sse, fit
    return best_fit


def integer_allocations(k, n):
    """All k-tuples of nonnegative integers summing to n."""
    if k == 1:
        yield (n,)
        return
    for head in range(n + 1):
        for rest in integer_allocations(k - 1, n - head):
            yield (head,) + rest


def allocation_objective(masses, counts):
    """sum G_i^2 / n_i, infinite when any region with mass gets no draws."""
    total = 0.0
    for G, c in zip(masses, counts):
        if c == 0:
            if G > 0:
                return math.inf
            continue
        total += G * G / c
    return total


def binomial_pmf_exact(n, j, p):
    """C(n,j) p^j (1-p)^(n-j) with an exact integer coefficient."""
    return math.comb(n, j) * p ** j * (1.0 - p) ** (n - j)
