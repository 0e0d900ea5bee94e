"""Real Fourier basis arithmetic on the periodic unit interval.

Basis: e_0 = 1, e_n = sqrt(2) cos(2 pi n x), e_{-n} = sqrt(2) sin(2 pi n x).
A state with cutoff N stores its coefficients in a flat array of length
2N+1 where mode n lives at index n + N.

The array-level helpers (``*_coeffs``) accept a leading batch dimension so that
the schemes can advance many trajectories at once; the ``SpectralState``
wrappers are thin conveniences over them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

FOUR_PI_SQ = 4.0 * np.pi**2
SQRT2 = np.sqrt(2.0)


class SemigroupKind(str, enum.Enum):
    EXPONENTIAL = "exponential"
    LINEAR_IMPLICIT = "linear_implicit"


@dataclass(frozen=True)
class OperatorParams:
    eta: float = 1.0
    T: float = 1.0
    semigroup_kind: SemigroupKind = SemigroupKind.EXPONENTIAL

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        object.__setattr__(self, "semigroup_kind", SemigroupKind(self.semigroup_kind))


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Trigonometric polynomial sum_n coeffs[n + cutoff] e_n."""

    cutoff: int
    coeffs: np.ndarray = field(repr=False)
    exploded: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 1 or c.shape[0] != 2 * self.cutoff + 1:
            raise ValueError(f"expected {2 * self.cutoff + 1} coefficients, got shape {c.shape}")
        if not self.exploded and not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients on a state not flagged exploded")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, cutoff: int) -> SpectralState:
        return cls(cutoff, np.zeros(2 * cutoff + 1))

    @classmethod
    def basis(cls, n: int, cutoff: int | None = None, scale: float = 1.0) -> SpectralState:
        cutoff = abs(n) if cutoff is None else cutoff
        c = np.zeros(2 * cutoff + 1)
        c[n + cutoff] = scale
        return cls(cutoff, c)

    @classmethod
    def from_modes(cls, modes: dict[int, float], cutoff: int | None = None) -> SpectralState:
        if cutoff is None:
            cutoff = max((abs(int(n)) for n in modes), default=0)
        c = np.zeros(2 * cutoff + 1)
        for n, value in modes.items():
            if abs(int(n)) <= cutoff:
                c[int(n) + cutoff] = value
        return cls(cutoff, c)

    def coefficient(self, n: int) -> float:
        return float(self.coeffs[n + self.cutoff]) if abs(n) <= self.cutoff else 0.0

    def to_modes(self) -> dict[int, float]:
        return {n: float(self.coeffs[n + self.cutoff])
                for n in range(-self.cutoff, self.cutoff + 1) if self.coeffs[n + self.cutoff] != 0.0}

    def padded(self, cutoff: int) -> SpectralState:
        """Embed into (or truncate to) a different cutoff."""
        return SpectralState(cutoff, resize_coeffs(self.coeffs, cutoff), self.exploded)

    def allclose(self, other: SpectralState, **kw) -> bool:
        k = max(self.cutoff, other.cutoff)
        return bool(np.allclose(resize_coeffs(self.coeffs, k), resize_coeffs(other.coeffs, k), **kw))


@dataclass(frozen=True, eq=False)
class GridState:
    grid_size: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape[-1] != self.grid_size:
            raise ValueError(f"expected {self.grid_size} samples, got {v.shape[-1]}")
        object.__setattr__(self, "values", v)


def mode_numbers(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


def eigenvalue(n, eta: float):
    """Eigenvalue eta + 4 pi^2 n^2 of eta - A on e_n."""
    if np.ndim(n):
        return eta + FOUR_PI_SQ * np.asarray(n, dtype=np.float64) ** 2
    return eta + FOUR_PI_SQ * float(n) ** 2


def eigenvalues(N: int, eta: float) -> np.ndarray:
    return eta + FOUR_PI_SQ * mode_numbers(N).astype(np.float64) ** 2


def sobolev_weights(N: int, r: float, eta: float) -> np.ndarray:
    return eigenvalues(N, eta) ** r


def sobolev_norm_coeffs(coeffs: np.ndarray, r: float, eta: float) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    N = (coeffs.shape[-1] - 1) // 2
    if r == 0:
        return np.sqrt(np.sum(coeffs**2, axis=-1))
    w = sobolev_weights(N, r, eta)
    return np.sqrt(np.sum((w * coeffs) ** 2, axis=-1))


def sobolev_norm(v: SpectralState, r: float, eta: float) -> float:
    """H_r norm: sqrt(sum_n (eta + 4 pi^2 n^2)^(2r) c_n^2). Negative r is allowed."""
    return float(sobolev_norm_coeffs(v.coeffs, r, eta))


def semigroup_multipliers(N: int, dt: float, kind: SemigroupKind) -> np.ndarray:
    """Per-mode symbol sigma_n of S_N for step dt."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    lam = FOUR_PI_SQ * mode_numbers(N).astype(np.float64) ** 2 * dt
    if SemigroupKind(kind) is SemigroupKind.EXPONENTIAL:
        return np.exp(-lam)
    return 1.0 / (1.0 + lam)


def apply_semigroup(v: SpectralState, params: OperatorParams, dt: float) -> SpectralState:
    sigma = semigroup_multipliers(v.cutoff, dt, params.semigroup_kind)
    return SpectralState(v.cutoff, v.coeffs * sigma, v.exploded)


def resize_coeffs(coeffs: np.ndarray, N: int) -> np.ndarray:
    """Truncate or zero-pad a coefficient array (last axis) to cutoff N."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    K = (coeffs.shape[-1] - 1) // 2
    if N <= K:
        return coeffs[..., K - N:K + N + 1].copy()
    out = np.zeros(coeffs.shape[:-1] + (2 * N + 1,))
    out[..., N - K:N + K + 1] = coeffs
    return out


def project(v: SpectralState, M: int) -> SpectralState:
    """P_M: keep modes |n| <= M; the result has cutoff min(M, v.cutoff)."""
    k = min(M, v.cutoff)
    return SpectralState(k, resize_coeffs(v.coeffs, k), v.exploded)


def coeffs_to_grid(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Samples at x_j = j/M of the trig polynomial(s) with the given coefficients."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    N = (coeffs.shape[-1] - 1) // 2
    if M < 2 * N + 1:
        raise ValueError(f"grid size {M} too small for cutoff {N}; need at least {2 * N + 1}")
    spec = np.zeros(coeffs.shape[:-1] + (M // 2 + 1,), dtype=np.complex128)
    spec[..., 0] = M * coeffs[..., N]
    if N > 0:
        cos_part = coeffs[..., N + 1:]
        sin_part = coeffs[..., N - 1::-1]
        spec[..., 1:N + 1] = (M / SQRT2) * (cos_part - 1j * sin_part)
    return np.fft.irfft(spec, n=M, axis=-1)


def grid_to_coeffs(values: np.ndarray, N: int) -> np.ndarray:
    """Trapezoidal-rule projection of grid samples onto e_{-N..N}."""
    values = np.asarray(values, dtype=np.float64)
    M = values.shape[-1]
    if N > (M - 1) // 2:
        raise ValueError(f"cutoff {N} exceeds the resolvable band of a {M}-point grid")
    spec = np.fft.rfft(values, axis=-1)[..., :N + 1] / M
    out = np.empty(values.shape[:-1] + (2 * N + 1,))
    out[..., N] = spec[..., 0].real
    if N > 0:
        out[..., N + 1:] = SQRT2 * spec[..., 1:].real
        out[..., N - 1::-1] = -SQRT2 * spec[..., 1:].imag
    return out


def to_grid(v: SpectralState, M: int) -> GridState:
    return GridState(M, coeffs_to_grid(v.coeffs, M))


def from_grid(g: GridState, N: int) -> SpectralState:
    return SpectralState(N, grid_to_coeffs(g.values, N))


def _is_smooth(n: int) -> bool:
    for p in (2, 3, 5):
        while n % p == 0:
            n //= p
    return n == 1


def next_smooth(n: int) -> int:
    """Smallest 2,3,5-smooth integer >= n."""
    n = max(int(n), 1)
    while not _is_smooth(n):
        n += 1
    return n


def dealias_grid_size(N: int, q: int) -> int:
    """Smallest 2,3,5-smooth M with M > (q+1)N (and M >= 2N+1)."""
    return next_smooth(max((q + 1) * N + 1, 2 * N + 1))


def horner(values: np.ndarray, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    out = np.full_like(values, a[-1])
    for ak in a[-2::-1]:
        out = out * values + ak
    return out


def poly_projected_coeffs(coeffs: np.ndarray, a) -> np.ndarray:
    """Coefficients of P_N(sum_k a_k v^k) for v given by ``coeffs`` (cutoff N)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    N = (coeffs.shape[-1] - 1) // 2
    q = len(a) - 1
    M = dealias_grid_size(N, max(q, 1))
    return grid_to_coeffs(horner(coeffs_to_grid(coeffs, M), a), N)


def poly_eval_projected(v: SpectralState, a, N: int | None = None) -> SpectralState:
    """P_N of the pointwise polynomial sum_k a_k v^k, free of aliasing error."""
    N = v.cutoff if N is None else N
    v = v.padded(N) if v.cutoff != N else v
    return SpectralState(N, poly_projected_coeffs(v.coeffs, a))


def lp_norm_coeffs(coeffs: np.ndarray, p: float, M: int | None = None) -> np.ndarray:
    """L^p(0,1) norm by the M-point rule; exact for even integer p when M > p*N."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    N = (coeffs.shape[-1] - 1) // 2
    if M is None:
        M = next_smooth(int(np.ceil(max(p, 2.0))) * N + 1)
    vals = coeffs_to_grid(coeffs, max(M, 2 * N + 1))
    return np.mean(np.abs(vals) ** p, axis=-1) ** (1.0 / p)


def state_to_csv_row(v: SpectralState) -> str:
    return ",".join([str(v.cutoff)] + [format(float(c), ".17g") for c in v.coeffs])


def state_from_csv_row(row: str) -> SpectralState:
    fields = row.strip().split(",")
    return SpectralState(int(fields[0]), np.array([float(f) for f in fields[1:]]))
