"""Projected cylindrical Wiener increments with counter-based seeding.

Every (master_seed, experiment, trajectory) label owns a Philox key derived
through ``numpy.random.SeedSequence``. The step index selects a disjoint
counter window inside that keyed stream, so a step's draws can be produced
either on their own or as one slice of a whole-trajectory draw, with identical
bits. Raw 64-bit outputs are mapped to Gaussians by the inverse normal CDF,
which consumes exactly one output per variate and keeps the windows aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri

_U64 = (1 << 64) - 1
_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter increment


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    experiment: int = 0
    trajectory: int = 0
    step: int = 0

    def __post_init__(self):
        for name in ("master_seed", "experiment", "trajectory", "step"):
            value = int(getattr(self, name))
            if not 0 <= value <= _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
            object.__setattr__(self, name, value)

    def at(self, trajectory: int | None = None, step: int | None = None) -> SeedSpec:
        return replace(self,
                       trajectory=self.trajectory if trajectory is None else trajectory,
                       step=self.step if step is None else step)


@dataclass(frozen=True, eq=False)
class NoiseIncrement:
    cutoff: int
    coeffs: np.ndarray = field(repr=False)
    dt: float


def stream_key(seed: SeedSpec) -> np.ndarray:
    ss = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.experiment, seed.trajectory))
    return ss.generate_state(2, dtype=np.uint64)


def _words_per_step(width: int) -> int:
    return -(-width // _BLOCK) * _BLOCK


def raw_to_normal(raw: np.ndarray) -> np.ndarray:
    """Map uniform 64-bit words to standard normals via the inverse CDF.

    The top 53 bits are shifted to the open interval (0, 1) so no variate is infinite.
    """
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def standard_normals(seed: SeedSpec, width: int, n_steps: int = 1) -> np.ndarray:
    """Standard normals of shape (n_steps, width) for steps seed.step .. seed.step+n_steps-1.

    Row j is bit-identical to ``standard_normals(seed.at(step=seed.step + j), width)[0]``.
    """
    words = _words_per_step(width)
    gen = np.random.Philox(key=stream_key(seed), counter=seed.step * (words // _BLOCK))
    raw = gen.random_raw(n_steps * words).reshape(n_steps, words)[:, :width]
    return raw_to_normal(raw)


def sample_increment(seed: SeedSpec, N: int, dt: float, scale: float = 1.0) -> NoiseIncrement:
    """Coefficients of P_N(W_{t+dt} - W_t): 2N+1 independent N(0, dt) draws.

    ``scale`` multiplies the standard deviation; 0 switches the noise off in tests.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    z = standard_normals(seed, 2 * N + 1)[0]
    return NoiseIncrement(N, scale * np.sqrt(dt) * z, dt)


def trajectory_increments(seed: SeedSpec, N: int, dt: float, n_steps: int,
                          scale: float = 1.0) -> np.ndarray:
    """All increments of one trajectory, shape (n_steps, 2N+1), starting at seed.step."""
    return scale * np.sqrt(dt) * standard_normals(seed, 2 * N + 1, n_steps)


def batch_increments(seed: SeedSpec, trajectories, N: int, dt: float, n_steps: int,
                     scale: float = 1.0) -> np.ndarray:
    """Increments for several trajectories, shape (n_traj, n_steps, 2N+1)."""
    return np.stack([trajectory_increments(seed.at(trajectory=int(t)), N, dt, n_steps, scale)
                     for t in trajectories])
