"""Monte Carlo moments and event probabilities with explosion bookkeeping.

Trajectories are split into fixed-size chunks whose size depends only on the
problem, never on the worker count. Chunks may run in separate processes; their
per-trajectory outputs are concatenated in trajectory order before any
reduction, so results are bit-identical for any number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .noise import SeedSpec
from .schemes import (
    EXPLOSION_GUARD,
    BatchResult,
    SchemeConfig,
    Sode1dConfig,
    run_batch,
    run_sode1d_batch,
)
from .spectral_core import SpectralState, sobolev_norm_coeffs

THREADS_ENV = "SPDE_LAB_THREADS"


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    samples: int
    finite_samples: int
    explosion_fraction: float
    log_mean_finite: float
    saturated_mean: float
    std_error_log: float
    log_saturated_mean: float = -math.inf

    @property
    def exploded(self) -> int:
        return self.samples - self.finite_samples

    @property
    def explosion_std_error(self) -> float:
        f = self.explosion_fraction
        return math.sqrt(f * (1 - f) / self.samples)


@dataclass
class LogSumExpAccumulator:
    """Mergeable running sums of exp(x) and exp(2x) kept in log form."""

    count: int = 0
    log_sum: float = -math.inf
    log_sum_sq: float = -math.inf

    def add(self, log_values) -> LogSumExpAccumulator:
        log_values = np.asarray(log_values, dtype=np.float64)
        if log_values.size:
            self.count += int(log_values.size)
            self.log_sum = float(np.logaddexp(self.log_sum, logsumexp(log_values)))
            self.log_sum_sq = float(np.logaddexp(self.log_sum_sq, logsumexp(2 * log_values)))
        return self

    def merge(self, other: LogSumExpAccumulator) -> LogSumExpAccumulator:
        return LogSumExpAccumulator(self.count + other.count,
                                    float(np.logaddexp(self.log_sum, other.log_sum)),
                                    float(np.logaddexp(self.log_sum_sq, other.log_sum_sq)))

    @property
    def log_mean(self) -> float:
        return self.log_sum - math.log(self.count) if self.count else -math.inf

    @property
    def std_error_log(self) -> float:
        """Delta-method standard error of ln(mean): sd / (sqrt(n) mean)."""
        n = self.count
        if n < 2 or self.log_sum == -math.inf:
            return math.nan if n < 2 else 0.0
        # ratio = E[X^2] / E[X]^2 >= 1 in exact arithmetic
        log_ratio = self.log_sum_sq + math.log(n) - 2 * self.log_sum
        var_rel = max(math.expm1(log_ratio), 0.0) * n / (n - 1)
        return math.sqrt(var_rel / n)


def _chunk_size(width: int, n_steps: int) -> int:
    # keep a chunk's noise buffer around 32 MB
    return int(max(16, min(4096, 4_000_000 // max(1, width * n_steps))))


def _chunks(n: int, size: int) -> list[range]:
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def _spde_chunk(args) -> BatchResult:
    cfg, seed, traj = args
    return run_batch(cfg, seed, traj)


def _sode_chunk(args) -> BatchResult:
    cfg, seed, paths = args
    return run_sode1d_batch(cfg, seed, paths)


def _run_chunks(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def simulate_finals(cfg: SchemeConfig, n_samples: int, seed: SeedSpec,
                    workers: int | None = None) -> BatchResult:
    """Final states of trajectories 0..n_samples-1, in trajectory order."""
    size = _chunk_size(2 * cfg.N + 1, cfg.N)
    jobs = [(cfg, seed, c) for c in _chunks(n_samples, size)]
    parts = _run_chunks(_spde_chunk, jobs, worker_count(workers))
    return BatchResult(np.concatenate([p.final for p in parts]),
                       np.concatenate([p.exploded_at for p in parts]))


def simulate_sode1d(cfg: Sode1dConfig, n_samples: int, seed: SeedSpec,
                    workers: int | None = None) -> BatchResult:
    size = _chunk_size(4, cfg.N)
    jobs = [(cfg, seed, c) for c in _chunks(n_samples, size)]
    parts = _run_chunks(_sode_chunk, jobs, worker_count(workers))
    return BatchResult(np.concatenate([p.final for p in parts]),
                       np.concatenate([p.exploded_at for p in parts]))


def moment_from_norms(norms: np.ndarray, exploded: np.ndarray, p: float,
                      guard: float = EXPLOSION_GUARD) -> MomentEstimate:
    """Moment statistics of ||Y||^p with exploded paths clamped at guard^p."""
    n = len(norms)
    finite = ~exploded
    with np.errstate(divide="ignore"):
        logs = p * np.log(np.asarray(norms, dtype=np.float64)[finite])
    acc = LogSumExpAccumulator().add(logs)
    n_exp = int(np.sum(exploded))
    log_total = acc.log_sum
    if n_exp:
        log_total = float(np.logaddexp(log_total, math.log(n_exp) + p * math.log(guard)))
    log_sat = log_total - math.log(n) if n else -math.inf
    with np.errstate(over="ignore"):
        sat = math.exp(log_sat) if log_sat < 709.78 else math.inf
    return MomentEstimate(p=float(p), samples=n, finite_samples=int(np.sum(finite)),
                          explosion_fraction=n_exp / n if n else 0.0,
                          log_mean_finite=acc.log_mean, saturated_mean=sat,
                          std_error_log=acc.std_error_log, log_saturated_mean=log_sat)


def estimate_moment(cfg: SchemeConfig, p: float, n_samples: int, seed: SeedSpec,
                    workers: int | None = None) -> MomentEstimate:
    """Estimate E||Y_N^N||_H^p over ``n_samples`` trajectories."""
    if n_samples < 2:
        raise ValueError("need at least two samples")
    res = simulate_finals(cfg, n_samples, seed, workers)
    return moment_from_norms(sobolev_norm_coeffs(res.final, 0, 1.0), res.exploded, p)


def estimate_sode1d_moment(cfg: Sode1dConfig, p: float, n_samples: int, seed: SeedSpec,
                           workers: int | None = None) -> MomentEstimate:
    if n_samples < 2:
        raise ValueError("need at least two samples")
    res = simulate_sode1d(cfg, n_samples, seed, workers)
    return moment_from_norms(np.abs(res.final[:, 0]), res.exploded, p)


def estimate_event_probability(event: Callable[[SpectralState, int | None], bool],
                               cfg: SchemeConfig, n_samples: int, seed: SeedSpec,
                               workers: int | None = None) -> tuple[float, float]:
    """Empirical frequency of ``event(final_state, exploded_at)`` and its binomial error."""
    if n_samples < 100:
        raise ValueError("need at least 100 samples")
    res = simulate_finals(cfg, n_samples, seed, workers)
    hits = 0
    for row, k in zip(res.final, res.exploded_at):
        state = SpectralState(cfg.N, row, exploded=bool(k >= 0))
        hits += bool(event(state, None if k < 0 else int(k)))
    p_hat = hits / n_samples
    return p_hat, math.sqrt(p_hat * (1 - p_hat) / n_samples)
