"""Permutation calibration of the multiple-direction statistic.

Statuses stay attached to their ordered times; only the vector of group
labels is permuted. Replicates are drawn in fixed-size blocks, and block
``b`` uses its own Philox stream keyed by ``(seed, b)``. The result is
therefore identical for any number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, islice

import numpy as np

from .errors import DegenerateStatistic, NoEvents, TooManyAssignments
from .logrank import BatchKernel
from .survcore import PooledRisk, TwoSampleData
from .weights import WeightSet

BLOCK_SIZE = 250
MAX_ASSIGNMENTS = 1_000_000
DEGENERATE_FRACTION = 0.99
# relative slack when comparing permutation statistics with the observed one
TIE_RTOL = 1e-9


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("MDIR_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def block_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox stream keyed by the seed and a block/replicate path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), *key])))


def permuted_labels(rng: np.random.Generator, base: np.ndarray, k: int) -> np.ndarray:
    """``k`` independent Fisher-Yates shuffles of ``base``, one per row."""
    return rng.permuted(np.tile(base, (k, 1)), axis=1)


def at_least(perm_stats: np.ndarray, s_obs: float) -> np.ndarray:
    return perm_stats >= s_obs - TIE_RTOL * max(1.0, abs(s_obs))


@dataclass(frozen=True)
class PermConfig:
    n_perm: int = 10_000
    seed: int = 0
    report_randomized_gamma: bool = False
    alpha: float = 0.05
    workers: int | None = None

    def __post_init__(self):
        if self.n_perm < 1:
            raise ValueError("n_perm must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class PermResult:
    s_obs: float
    p_perm: float
    n_perm_used: int
    seed: int | None
    perm_stats: np.ndarray = field(repr=False)
    randomized_gamma: float | None = None
    exhaustive: bool = False

    def quantile_at(self, alpha: float) -> float:
        """Empirical (1 - alpha)-quantile of the permutation distribution."""
        return float(np.quantile(self.perm_stats, 1.0 - alpha, method="inverted_cdf"))

    def gamma_at(self, alpha: float) -> float:
        """Randomisation probability on the boundary ``S == c*`` giving level ``alpha``."""
        c = self.quantile_at(alpha)
        close = np.isclose(self.perm_stats, c, rtol=TIE_RTOL, atol=TIE_RTOL)
        above = (self.perm_stats > c) & ~close
        k = len(self.perm_stats)
        eq = close.sum() / k
        if eq == 0:
            return 0.0
        return float(min(1.0, max(0.0, (alpha - above.sum() / k) / eq)))


def _prepare(data: TwoSampleData, ws: WeightSet) -> tuple[BatchKernel, np.ndarray]:
    pooled = PooledRisk(data)
    if pooled.n_event_rows == 0:
        raise NoEvents("no events observed; the permutation test is undefined")
    return BatchKernel(pooled, ws.weights), pooled.sorted_labels(data.group)


def _degenerate(sigma: np.ndarray) -> np.ndarray:
    return np.all(np.diagonal(sigma, axis1=1, axis2=2) <= 0, axis=1)


def permutation_test(data: TwoSampleData, ws: WeightSet, cfg: PermConfig = PermConfig()) -> PermResult:
    kernel, base = _prepare(data, ws)
    idx = range(len(ws))
    t0, s0 = kernel.moments(base)
    s_obs = float(kernel.quadratic(t0, s0, idx)[0][0])

    n_blocks = math.ceil(cfg.n_perm / BLOCK_SIZE)
    stats = np.empty(cfg.n_perm)
    degenerate = np.zeros(n_blocks, dtype=np.int64)

    def run(b: int) -> None:
        lo = b * BLOCK_SIZE
        k = min(BLOCK_SIZE, cfg.n_perm - lo)
        labels = permuted_labels(block_rng(cfg.seed, b), base, k)
        t, sigma = kernel.moments(labels)
        stats[lo : lo + k] = kernel.quadratic(t, sigma, idx)[0]
        degenerate[b] = _degenerate(sigma).sum()

    workers = min(worker_count(cfg.workers), n_blocks)
    if workers == 1:
        for b in range(n_blocks):
            run(b)
    else:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, range(n_blocks)))

    if degenerate.sum() > DEGENERATE_FRACTION * cfg.n_perm:
        raise DegenerateStatistic("covariance estimate vanishes for almost all permutations")
    count = int(at_least(stats, s_obs).sum())
    result = PermResult(s_obs, (1 + count) / (cfg.n_perm + 1), cfg.n_perm, cfg.seed, stats)
    if cfg.report_randomized_gamma:
        result = PermResult(
            s_obs, result.p_perm, cfg.n_perm, cfg.seed, stats, result.gamma_at(cfg.alpha)
        )
    return result


def exhaustive_permutation_test(data: TwoSampleData, ws: WeightSet, batch: int = 4096) -> PermResult:
    """Visit every distinct group assignment once; exact permutation p-value."""
    total = math.comb(data.n, data.n1)
    if total > MAX_ASSIGNMENTS:
        raise TooManyAssignments(f"C({data.n},{data.n1}) = {total} assignments exceeds {MAX_ASSIGNMENTS}")
    kernel, base = _prepare(data, ws)
    idx = range(len(ws))
    t0, s0 = kernel.moments(base)
    s_obs = float(kernel.quadratic(t0, s0, idx)[0][0])

    stats = np.empty(total)
    combos = combinations(range(data.n), data.n1)
    done = 0
    while done < total:
        chunk = list(islice(combos, batch))
        labels = np.zeros((len(chunk), data.n), dtype=bool)
        rows = np.repeat(np.arange(len(chunk)), data.n1)
        labels[rows, np.asarray(chunk, dtype=np.int64).ravel()] = True
        t, sigma = kernel.moments(labels)
        stats[done : done + len(chunk)] = kernel.quadratic(t, sigma, idx)[0]
        done += len(chunk)
    count = int(at_least(stats, s_obs).sum())
    return PermResult(s_obs, count / total, total, None, stats, exhaustive=True)


def enumerate_assignments(n: int, n1: int):
    """All group-1 position sets, as boolean vectors (for tests and oracles)."""
    for combo in combinations(range(n), n1):
        v = np.zeros(n, dtype=bool)
        v[list(combo)] = True
        yield v
