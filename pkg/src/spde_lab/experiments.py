"""Experiment drivers shared by the command line and the acceptance suite.

Each driver returns plain rows (lists of dicts) so callers decide how to write
or check them. Reference values (Gaussian CDFs, per-mode variances) come from
scipy or closed forms, never from the bound code under test.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from . import bounds
from .montecarlo import estimate_sode1d_moment, moment_from_norms, simulate_finals
from .noise import SeedSpec, standard_normals, stream_key
from .schemes import SchemeConfig, Sode1dConfig
from .spectral_core import (
    SemigroupKind,
    SpectralState,
    eigenvalues,
    lp_norm_coeffs,
    semigroup_multipliers,
    sobolev_norm_coeffs,
)

MOMENT_COLUMNS = ["N", "p", "samples", "explosion_fraction", "log_mean_finite",
                  "saturated_mean", "std_error_log", "master_seed"]


def experiment_id(label: str) -> int:
    return zlib.crc32(label.encode())


def ou_mode_variance(m: int, N: int, T: float) -> float:
    """Variance of mode m after N exponential-Euler steps of pure noise."""
    dt = T / N
    j = np.arange(N)
    return float(dt * np.sum(np.exp(-8 * np.pi**2 * m * m * (j + 1) * dt)))


def validate_ou(cfg: SchemeConfig, n_samples: int, master_seed: int,
                workers: int | None = None) -> list[dict]:
    """Per-mode sample variance of Y_N against the geometric-sum formula."""
    if any(cfg.a):
        raise ValueError("the Ornstein-Uhlenbeck check needs all drift coefficients zero")
    if cfg.semigroup_kind is not SemigroupKind.EXPONENTIAL:
        raise ValueError("the closed form applies to the exponential semigroup")
    seed = SeedSpec(master_seed, experiment_id(f"validate-ou/N={cfg.N}"))
    res = simulate_finals(cfg, n_samples, seed, workers)
    N = cfg.N
    mean = semigroup_multipliers(N, cfg.dt, cfg.semigroup_kind) ** N * cfg.initial_coeffs()
    dev2 = (res.final - mean) ** 2
    rows = []
    for idx, m in enumerate(range(-N, N + 1)):
        col = dev2[:, idx]
        emp = float(np.mean(col))
        # rescale first: squares of heavily damped modes would underflow
        scale = float(np.max(col))
        se = scale * float(np.std(col / scale, ddof=1)) / math.sqrt(n_samples) if scale > 0 else 0.0
        exact = ou_mode_variance(m, N, cfg.T) * cfg.noise_scale**2
        z = (emp - exact) / se if se > 0 else 0.0
        rows.append({"mode": m, "empirical_variance": emp, "analytic_variance": exact,
                     "std_error": se, "z_score": z, "within_3se": abs(z) <= 3.0})
    return rows


def moment_sweep(cfg: SchemeConfig, N_list, p_list, n_samples: int, master_seed: int,
                 workers: int | None = None, label: str = "sweep") -> list[dict]:
    rows = []
    for N in N_list:
        c = cfg.with_(N=N)
        seed = SeedSpec(master_seed, experiment_id(f"{label}/N={N}"))
        res = simulate_finals(c, n_samples, seed, workers)
        norms = sobolev_norm_coeffs(res.final, 0, 1.0)
        for p in p_list:
            est = moment_from_norms(norms, res.exploded, p)
            rows.append(_moment_row(N, est, master_seed))
    return rows


def sode1d_sweep(cfg: Sode1dConfig, N_list, p_list, n_samples: int, master_seed: int,
                 workers: int | None = None) -> list[dict]:
    rows = []
    for N in N_list:
        seed = SeedSpec(master_seed, experiment_id(f"sode1d-sweep/N={N}"))
        c = Sode1dConfig(N=N, drift=cfg.drift, diffusion=cfg.diffusion, T=cfg.T, xi0=cfg.xi0)
        for p in p_list:
            rows.append(_moment_row(N, estimate_sode1d_moment(c, p, n_samples, seed, workers),
                                    master_seed))
    return rows


def _moment_row(N, est, master_seed) -> dict:
    return {"N": N, "p": est.p, "samples": est.samples,
            "explosion_fraction": est.explosion_fraction,
            "log_mean_finite": est.log_mean_finite, "saturated_mean": est.saturated_mean,
            "std_error_log": est.std_error_log, "master_seed": master_seed}


def bounds_table(cfg: SchemeConfig, M_list, r_list) -> list[dict]:
    consts = bounds.compute_constants(cfg)
    rows = []
    for M in M_list:
        for r in r_list:
            row = {"M": M, "r": r, "log_lower_bound": bounds.divergence_lower_bound(consts, M, r)}
            row.update(consts.audit_row(M, r))
            rows.append(row)
    return rows


def log_interval_probability(c: float, eps: float, T: float, N: int) -> float:
    """ln P(|c - Y| <= eps) for Y ~ N(0, T/N), stable far in the tail."""
    sd = math.sqrt(T / N)
    c = abs(c)
    hi, lo = (c + eps) / sd, (c - eps) / sd
    if lo > 0:
        # P = Phi(-lo) - Phi(-hi), both tails
        a, b = float(log_ndtr(-lo)), float(log_ndtr(-hi))
        return a + math.log1p(-math.exp(b - a))
    return math.log(float(ndtr(hi) - ndtr(lo)))


def gaussian_interval_grid(n: int = 200, seed: int = 7) -> list[tuple]:
    rng = np.random.default_rng(seed)
    c = rng.uniform(0.0, 5.0, n)
    eps = np.exp(rng.uniform(math.log(0.01), math.log(5.0), n))
    N = rng.integers(1, 9, n)
    T = rng.choice([0.5, 1.0, 2.0], n)
    return [(float(c[i]), float(eps[i]), int(N[i]), float(T[i])) for i in range(n)]


def validate_gaussian_interval(grid=None) -> list[dict]:
    rows = []
    for c, eps, N, T in grid or gaussian_interval_grid():
        lb = bounds.gaussian_interval_bound(c, eps, T, N)
        exact = log_interval_probability(c, eps, T, N)
        rows.append({"c": c, "eps": eps, "N": N, "T": T, "log_bound": lb,
                     "log_exact": exact, "holds": math.isfinite(lb) and exact >= lb})
    return rows


BALL_VECTORS = {"zero": {}, "e0": {0: 1.0}, "e1": {1: 1.0}}


@dataclass(frozen=True)
class BallCase:
    N: int
    nu: float
    x: float
    v: str
    kind: SemigroupKind | None = None


def _mc_ball(case: BallCase, draws: np.ndarray, T: float, eta: float, p: float | None):
    v = SpectralState.from_modes(BALL_VECTORS[case.v], cutoff=case.N).coeffs
    diff = v - draws
    if case.kind is None:
        norms = np.sqrt(np.sum((eigenvalues(case.N, eta) ** (-case.nu) * diff) ** 2, axis=1))
    else:
        sigma = semigroup_multipliers(case.N, T / case.N, case.kind)
        M = int(math.ceil(p)) * case.N + 1
        norms = lp_norm_coeffs(diff * sigma, p, max(M, 2 * case.N + 1))
    hits = norms <= case.x
    p_hat = float(np.mean(hits))
    return p_hat, math.sqrt(p_hat * (1 - p_hat) / len(hits))


def validate_ball_bounds(smoothed: bool, n_draws: int = 100_000, master_seed: int = 11,
                         T: float = 1.0, eta: float = 1.0, q: int = 3) -> list[dict]:
    """MC check of the projected-noise (or smoothed L^p) ball bounds on the test grid."""
    Ns = (1, 2) if smoothed else (1, 2, 3)
    kinds = (SemigroupKind.EXPONENTIAL, SemigroupKind.LINEAR_IMPLICIT) if smoothed else (None,)
    rows = []
    label = "smoothed-ball" if smoothed else "projected-ball"
    for N in Ns:
        seed = SeedSpec(master_seed, experiment_id(f"{label}/N={N}"))
        draws = math.sqrt(T / N) * standard_normals(seed, 2 * N + 1, n_draws)
        for kind in kinds:
            for nu in (0.3, 0.5, 0.7):
                consts = None
                if smoothed:
                    cfg = SchemeConfig(N=N, a=(0.0,) * q + (-1.0,), T=T, nu=nu, eta=eta,
                                       semigroup_kind=kind)
                    consts = bounds.compute_constants(cfg)
                for x in (0.5, 1.0, 2.0):
                    for v in BALL_VECTORS:
                        case = BallCase(N, nu, x, v, kind)
                        state = SpectralState.from_modes(BALL_VECTORS[v], cutoff=N)
                        if smoothed:
                            lb = bounds.smoothed_ball_bound(state, x, consts, N, kind)
                            p_hat, se = _mc_ball(case, draws, T, eta, consts.p_exponent)
                        else:
                            lb = bounds.projected_noise_ball_bound(
                                float(np.sum(state.coeffs**2)), x, N, T, eta, nu)
                            p_hat, se = _mc_ball(case, draws, T, eta, None)
                        rows.append({"N": N, "kind": kind.value if kind else "none", "nu": nu,
                                     "x": x, "v": v, "log_bound": lb, "p_hat": p_hat,
                                     "std_error": se,
                                     "holds": p_hat + 3 * se >= math.exp(lb)})
    return rows


def cubic_toy_setup(dt: float = 0.25, c: float = 1.0 / 64, alpha: float = 3.0,
                    theta: float = 4.0) -> bounds.AbstractSetup:
    return bounds.AbstractSetup(
        transition=lambda y, z: y + dt * (y - y**3) + z,
        lyapunov=lambda y: np.abs(y) ** 2,
        c=c, alpha=alpha, theta=theta, horizon=2,
    )


def validate_abstract_bound(n_paths: int = 100_000, n_mc: int = 10_000, n_grid: int = 400,
                            dt: float = 0.25, y0_sd: float = 4.0,
                            master_seed: int = 13) -> dict:
    """Product bound for the cubic toy recursion versus a Monte Carlo estimate of E[V(Y_2)].

    Y_0 ~ N(0, y0_sd^2) so that P(V(Y_0) >= c^(1/(1-alpha)) theta) is positive and
    known in closed form.
    """
    setup = cubic_toy_setup(dt)
    noise_sd = math.sqrt(dt)
    rng = np.random.Generator(np.random.Philox(
        key=stream_key(SeedSpec(master_seed, experiment_id("abstract-infima")))))
    sampler = lambda g, n: noise_sd * g.standard_normal(n)
    p_lower = []
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, setup.horizon + 1):
            lo = math.sqrt(setup.level(n))
            mags = np.geomspace(lo, lo * 1e3, n_grid // 2)
            grid = np.concatenate([mags, -mags])
            p_lower.append(bounds.step_probability_infimum(setup, n, grid, sampler, n_mc, rng))
    y_level = math.sqrt(setup.initial_level)
    p_init = float(2 * ndtr(-y_level / y0_sd))
    lb = bounds.abstract_product_bound(setup, p_lower, p_init)

    seed = SeedSpec(master_seed, experiment_id("abstract-paths"))
    z = standard_normals(seed, 3, n_paths)
    y = y0_sd * z[:, 0]
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, setup.horizon + 1):
            y = setup.transition(y, noise_sd * z[:, n])
        V = setup.lyapunov(y)
    mean = float(np.mean(V))
    se = float(np.std(V, ddof=1) / math.sqrt(n_paths))
    return {"log_bound": lb, "p_lower_1": p_lower[0], "p_lower_2": p_lower[1], "p_init": p_init,
            "mc_mean": mean, "mc_std_error": se,
            "holds": _exceeds(mean + 3 * se, lb)}


def divergence_bound_mc(cfg: SchemeConfig, M: int = 2, r: float = 2.0,
                        n_samples: int = 100_000, master_seed: int = 17,
                        workers: int | None = None) -> dict:
    """MC estimate of E|<e_0, Y_M^M>|^r next to the assembled lower bound."""
    consts = bounds.compute_constants(cfg)
    lb = bounds.divergence_lower_bound(consts, M, r)
    seed = SeedSpec(master_seed, experiment_id(f"divergence-mc/M={M}"))
    res = simulate_finals(cfg.with_(N=M), n_samples, seed, workers)
    vals = np.abs(res.final[:, M]) ** r
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_samples))
    return {"M": M, "r": r, "log_bound": lb, "mc_mean": mean, "mc_std_error": se,
            "explosions": int(np.sum(res.exploded)),
            "holds": _exceeds(mean, lb)}


def _exceeds(value: float, log_bound: float) -> bool:
    """value >= exp(log_bound), compared in log space."""
    if log_bound == -math.inf:
        return True
    return bool(np.isfinite(value) and value > 0 and math.log(value) >= log_bound)
