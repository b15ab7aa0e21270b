"""Deterministic sampling utilities: low-discrepancy point sets and
counter-based random streams.

All Monte Carlo randomness in the library flows from one explicit integer
seed through Philox counter-based generators; independent substreams are
derived from (seed, *path) tuples so every parallel shard and every grid
point replays bit-for-bit.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import stats

__all__ = ["stream", "ball_points", "probe_grid", "sharded_mean"]


def stream(seed: int, *path: int) -> np.random.Generator:
    """Philox generator for the substream identified by (seed, *path)."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def _sobol(dim: int, n: int, seed: int) -> np.ndarray:
    sampler = stats.qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = 1 << max(0, (n - 1).bit_length())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        pts = sampler.random(m)
    return pts[:n]


def ball_points(dim: int, n: int, radius: float, seed: int = 0) -> np.ndarray:
    """n quasi-random points in the closed ball of the given radius.

    Scrambled Sobol points are pushed through the usual Gaussian-direction /
    radial-power map, so the set is deterministic for a fixed seed.
    """
    u = _sobol(dim + 1, n, seed)
    z = stats.norm.ppf(np.clip(u[:, :dim], 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=1)
    norms[norms == 0] = 1.0
    r = radius * np.clip(u[:, dim], 0.0, 1.0) ** (1.0 / dim)
    return z * (r / norms)[:, None]


def probe_grid(dim: int, radii=(1.0, 5.0, 10.0), per_radius: int = 17, seed: int = 0) -> np.ndarray:
    """Standard deterministic probe set: low-discrepancy points in nested balls."""
    parts = [np.zeros((1, dim))]
    for i, rad in enumerate(radii):
        parts.append(ball_points(dim, per_radius, rad, seed + i))
    return np.vstack(parts)


def sharded_mean(n: int, seed: int, draw_eval, workers: int = 1, path: tuple = ()):
    """Mean and standard error of a function of random draws, in shards.

    ``draw_eval(rng, m)`` must return an array of m sample values.  Samples
    are partitioned across ``workers`` shards; shard w uses the substream
    (seed, *path, w), partial sums are reduced in shard order with
    compensated summation, so results are reproducible for a fixed
    (seed, workers) regardless of execution interleaving.

    Returns (mean, stderr, n_nonfinite).
    """
    if n < 1:
        raise ValueError("sample count must be >= 1")
    workers = max(1, int(workers))
    counts = [n // workers + (1 if w < n % workers else 0) for w in range(workers)]

    def run(w: int):
        m = counts[w]
        if m == 0:
            return 0.0, 0.0, 0
        vals = np.asarray(draw_eval(stream(seed, *path, w), m), dtype=float)
        bad = int(np.size(vals) - np.count_nonzero(np.isfinite(vals)))
        vals = vals[np.isfinite(vals)]
        return float(np.sum(vals)), float(np.sum(vals * vals)), bad

    if workers == 1:
        partials = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, range(workers)))

    bad = sum(p[2] for p in partials)
    n_eff = n - bad
    if n_eff == 0:
        return math.nan, math.nan, bad
    total = math.fsum(p[0] for p in partials)
    total_sq = math.fsum(p[1] for p in partials)
    mean = total / n_eff
    var = max(0.0, (total_sq - n_eff * mean * mean) / max(1, n_eff - 1))
    return mean, math.sqrt(var / n_eff), bad
