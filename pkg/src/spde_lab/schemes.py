"""Time steppers for the spectral SPDE scheme and the scalar Euler-Maruyama scheme.

The full-discrete step is

    Y_{n+1} = P_N S_N (Y_n + dt * P_N(sum_k a_k Y_n^k) + dW_n),   dt = T/N,

with one N shared by the spatial cutoff and the number of steps. The tamed
variant divides the drift increment by 1 + dt * ||F(Y_n)||_H.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .noise import NoiseIncrement, SeedSpec, batch_increments, trajectory_increments
from .spectral_core import (
    SemigroupKind,
    SpectralState,
    poly_projected_coeffs,
    resize_coeffs,
    semigroup_multipliers,
    sobolev_norm_coeffs,
)

EXPLOSION_GUARD = 1e150


class SchemeKind(str, enum.Enum):
    FULL_DISCRETE = "full_discrete"
    TAMED = "tamed"


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Problem and discretisation parameters for the SPDE scheme.

    ``a`` holds the drift polynomial a_0..a_q. A vanishing leading coefficient
    is accepted for simulation (Ornstein-Uhlenbeck checks use a = 0); the
    divergence constants require q >= 2 and a_q != 0. ``xi`` is the initial
    condition as a finite spectral sum; None means zero. ``noise_scale`` scales
    the noise standard deviation (0 switches noise off).
    """

    N: int
    a: tuple = (0.0, 1.0, 0.0, -1.0)
    T: float = 1.0
    nu: float = 0.5
    chi: float = 0.5
    eta: float = 1.0
    xi: SpectralState | None = None
    semigroup_kind: SemigroupKind = SemigroupKind.EXPONENTIAL
    scheme: SchemeKind = SchemeKind.FULL_DISCRETE
    noise_scale: float = 1.0
    embedding_constant: float | None = None
    p_exponent: float | None = None
    s_exponent: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "semigroup_kind", SemigroupKind(self.semigroup_kind))
        object.__setattr__(self, "scheme", SchemeKind(self.scheme))
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if len(self.a) < 1:
            raise ValueError("drift polynomial needs at least one coefficient")
        if not np.all(np.isfinite(self.a)):
            raise ValueError("drift coefficients must be finite")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.25 < self.nu < 0.75:
            raise ValueError(f"nu must lie in (1/4, 3/4), got {self.nu}")
        if not self.chi > 0.25:
            raise ValueError(f"chi must exceed 1/4, got {self.chi}")
        if not self.noise_scale >= 0:
            raise ValueError("noise_scale must be nonnegative")
        if self.embedding_constant is not None and not self.embedding_constant > 0:
            raise ValueError("embedding_constant must be positive")

    @property
    def q(self) -> int:
        return len(self.a) - 1

    @property
    def dt(self) -> float:
        return self.T / self.N

    def with_(self, **changes) -> SchemeConfig:
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return SchemeConfig(**kw)

    def initial_coeffs(self) -> np.ndarray:
        if self.xi is None:
            return np.zeros(2 * self.N + 1)
        return resize_coeffs(self.xi.coeffs, self.N)

    def __eq__(self, other):
        if not isinstance(other, SchemeConfig):
            return NotImplemented
        for f in self.__dataclass_fields__:
            x, y = getattr(self, f), getattr(other, f)
            if f == "xi":
                x = None if x is None else x.to_modes()
                y = None if y is None else y.to_modes()
            if x != y:
                return False
        return True


@dataclass(frozen=True)
class Sode1dConfig:
    """Scalar SDE dX = mu(X) dt + sigma(X) dW with polynomial mu, sigma.

    Divergence of the Euler-Maruyama moments needs |mu(x)| + |sigma(x)| >= |x|^alpha / c
    outside [-c, c] for some alpha > 1, together with P(sigma(xi) != 0) > 0 or a
    stretched-exponential tail of xi. That growth condition is documented here
    but not checked.
    """

    N: int
    drift: tuple = (0.0, 0.0, 0.0, -1.0)
    diffusion: tuple = (1.0,)
    T: float = 1.0
    xi0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "drift", tuple(float(x) for x in self.drift))
        object.__setattr__(self, "diffusion", tuple(float(x) for x in self.diffusion))
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.drift or not self.diffusion:
            raise ValueError("drift and diffusion need at least one coefficient")

    @property
    def dt(self) -> float:
        return self.T / self.N


def _is_exploded(coeffs: np.ndarray) -> np.ndarray:
    finite = np.all(np.isfinite(coeffs), axis=-1)
    with np.errstate(over="ignore", invalid="ignore"):
        norm = sobolev_norm_coeffs(np.where(np.isfinite(coeffs), coeffs, 0.0), 0, 1.0)
    return ~finite | (norm > EXPLOSION_GUARD)


def _drift_increment(coeffs: np.ndarray, cfg: SchemeConfig) -> np.ndarray:
    dt = cfg.dt
    with np.errstate(over="ignore", invalid="ignore"):
        F = poly_projected_coeffs(coeffs, cfg.a)
        if cfg.scheme is SchemeKind.TAMED:
            norm = sobolev_norm_coeffs(F, 0, 1.0)
            return dt * F / (1.0 + dt * norm)[..., None]
        return dt * F


def step_coeffs(coeffs: np.ndarray, cfg: SchemeConfig, dW: np.ndarray,
                sigma: np.ndarray | None = None) -> np.ndarray:
    """One step on raw coefficient arrays (any leading batch shape)."""
    if sigma is None:
        sigma = semigroup_multipliers(cfg.N, cfg.dt, cfg.semigroup_kind)
    with np.errstate(over="ignore", invalid="ignore"):
        return sigma * (coeffs + _drift_increment(coeffs, cfg) + dW)


def _step_state(Y: SpectralState, cfg: SchemeConfig, dW: NoiseIncrement) -> SpectralState:
    if Y.cutoff != cfg.N or dW.cutoff != cfg.N:
        raise ValueError(f"state cutoff {Y.cutoff} and noise cutoff {dW.cutoff} must equal N={cfg.N}")
    if Y.exploded:
        return Y
    out = step_coeffs(Y.coeffs, cfg, dW.coeffs)
    return SpectralState(cfg.N, out, bool(_is_exploded(out)))


def step_full_discrete(Y: SpectralState, cfg: SchemeConfig, dW: NoiseIncrement) -> SpectralState:
    """P_N S_N (Y + dt * P_N poly(Y) + dW); the result is flagged if it explodes."""
    if cfg.scheme is not SchemeKind.FULL_DISCRETE:
        cfg = cfg.with_(scheme=SchemeKind.FULL_DISCRETE)
    return _step_state(Y, cfg, dW)


def step_tamed(Y: SpectralState, cfg: SchemeConfig, dW: NoiseIncrement) -> SpectralState:
    """As step_full_discrete with drift increment dt F / (1 + dt ||F||_H)."""
    if cfg.scheme is not SchemeKind.TAMED:
        cfg = cfg.with_(scheme=SchemeKind.TAMED)
    return _step_state(Y, cfg, dW)


@dataclass
class BatchResult:
    """Final states of a block of trajectories.

    ``exploded_at[i]`` is the index k of the first exploded state Y_k (1-based step
    count), or -1 if trajectory i never exploded. Rows of exploded trajectories
    hold zeros.
    """

    final: np.ndarray
    exploded_at: np.ndarray
    history: list = field(default_factory=list)

    @property
    def exploded(self) -> np.ndarray:
        return self.exploded_at >= 0


def run_batch(cfg: SchemeConfig, seed: SeedSpec, trajectories: Iterable[int],
              record: bool = False) -> BatchResult:
    """Advance several trajectories in lock step.

    Each trajectory reads its own noise stream, so the output for trajectory i
    does not depend on which other trajectories share the batch.
    """
    traj = np.asarray(list(trajectories), dtype=np.int64)
    N, dt = cfg.N, cfg.dt
    sigma = semigroup_multipliers(N, dt, cfg.semigroup_kind)
    Y = np.broadcast_to(cfg.initial_coeffs(), (len(traj), 2 * N + 1)).copy()
    exploded_at = np.full(len(traj), -1, dtype=np.int64)
    if cfg.noise_scale > 0:
        dW = batch_increments(seed.at(step=0), traj, N, dt, N, cfg.noise_scale)
    else:
        dW = np.zeros((len(traj), N, 2 * N + 1))
    history = []
    for n in range(N):
        alive = exploded_at < 0
        if not alive.any():
            break
        Y[alive] = step_coeffs(Y[alive], cfg, dW[alive, n], sigma)
        newly = alive & _is_exploded(Y)
        exploded_at[newly] = n + 1
        Y[newly] = 0.0
        if record:
            history.append((n + 1, sobolev_norm_coeffs(Y, 0, 1.0), Y[:, N].copy(), exploded_at >= 0))
    return BatchResult(Y, exploded_at, history)


def run_trajectory(cfg: SchemeConfig, seed: SeedSpec) -> tuple[SpectralState, int | None]:
    """Iterate the scheme N times from P_N(xi); stop at the first explosion.

    The noise for step n is drawn from ``seed.at(step=n)``.
    """
    N = cfg.N
    Y = SpectralState(N, cfg.initial_coeffs())
    if cfg.noise_scale > 0:
        dW = trajectory_increments(seed.at(step=0), N, cfg.dt, N, cfg.noise_scale)
    else:
        dW = np.zeros((N, 2 * N + 1))
    step = step_tamed if cfg.scheme is SchemeKind.TAMED else step_full_discrete
    for n in range(N):
        Y = step(Y, cfg, NoiseIncrement(N, dW[n], cfg.dt))
        if Y.exploded:
            return Y, n + 1
    return Y, None


def trajectory_dump_rows(cfg: SchemeConfig, seed: SeedSpec):
    """Rows (step, ||Y||_H, <e_0, Y>, exploded) along one trajectory, step 0 included."""
    res = run_batch(cfg, seed, [seed.trajectory], record=True)
    y0 = cfg.initial_coeffs()
    rows = [(0, float(sobolev_norm_coeffs(y0, 0, 1.0)), float(y0[cfg.N]), 0)]
    for n, norm, e0, ex in res.history:
        rows.append((n, float(norm[0]), float(e0[0]), int(ex[0])))
    return rows


def step_euler_maruyama_1d(y, cfg: Sode1dConfig, dW):
    """y + dt mu(y) + sigma(y) dW. Works elementwise on arrays."""
    with np.errstate(over="ignore", invalid="ignore"):
        mu = np.polynomial.polynomial.polyval(y, cfg.drift)
        sig = np.polynomial.polynomial.polyval(y, cfg.diffusion)
        return y + cfg.dt * mu + sig * dW


def sode1d_exploded(y) -> np.ndarray:
    return ~np.isfinite(y) | (np.abs(np.nan_to_num(y, nan=np.inf)) > EXPLOSION_GUARD)


def run_sode1d_batch(cfg: Sode1dConfig, seed: SeedSpec, paths: Iterable[int]) -> BatchResult:
    paths = np.asarray(list(paths), dtype=np.int64)
    dW = batch_increments(seed.at(step=0), paths, 0, cfg.dt, cfg.N)[:, :, 0]
    y = np.full(len(paths), float(cfg.xi0))
    exploded_at = np.full(len(paths), -1, dtype=np.int64)
    for n in range(cfg.N):
        y = step_euler_maruyama_1d(y, cfg, dW[:, n])
        newly = (exploded_at < 0) & sode1d_exploded(y)
        exploded_at[newly] = n + 1
        y[exploded_at >= 0] = 0.0
    return BatchResult(y[:, None], exploded_at)
