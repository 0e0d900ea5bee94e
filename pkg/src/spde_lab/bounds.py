"""Explicit lower bounds, all evaluated and returned as natural logarithms.

Contents:
  * reverse Gronwall tower bound for e_{n+1} >= c e_n^alpha;
  * product bound for E[V(Y_N)] of an abstract Markov recursion;
  * Gaussian interval and projected-noise ball probabilities;
  * the constant pack and assembled moment lower bound for the spectral scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .spectral_core import (
    FOUR_PI_SQ,
    SemigroupKind,
    SpectralState,
    eigenvalues,
    lp_norm_coeffs,
    semigroup_multipliers,
    sobolev_norm,
    sobolev_norm_coeffs,
)


def reverse_gronwall(c: float, alpha: float, e0: float, n: int) -> float:
    """ln of c^(sum_{k<n} alpha^k) * e0^(alpha^n)."""
    if not c > 0 or not alpha > 0:
        raise ValueError("c and alpha must be positive")
    if e0 < 0 or n < 0:
        raise ValueError("e0 must be nonnegative and n a nonnegative integer")
    if e0 == 0:
        return -math.inf
    if alpha == 1.0:
        geo = float(n)
    else:
        geo = math.expm1(n * math.log(alpha)) / (alpha - 1.0)
    return geo * math.log(c) + alpha**n * math.log(e0)


@dataclass(frozen=True)
class AbstractSetup:
    """Recursion Y_n = transition(Y_{n-1}, Z_n) with Lyapunov functional V.

    ``events[n-1]`` is the admissible set for step n as a predicate; the default
    accepts everything.
    """

    transition: Callable
    lyapunov: Callable
    c: float
    alpha: float
    theta: float
    horizon: int
    events: Sequence[Callable] | None = field(default=None)

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise ValueError(f"c must lie in (0, 1], got {self.c}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not self.theta > 1:
            raise ValueError(f"theta must exceed 1, got {self.theta}")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def event(self, n: int) -> Callable:
        if self.events is None:
            return lambda v: True
        return self.events[n - 1]

    def level(self, n: int) -> float:
        """Threshold theta^(alpha^(n-1)) on V(v) for the n-th infimum."""
        return self.theta ** (self.alpha ** (n - 1))

    @property
    def initial_level(self) -> float:
        """Threshold c^(1/(1-alpha)) theta on V(Y_0)."""
        return self.c ** (1.0 / (1.0 - self.alpha)) * self.theta


def abstract_product_bound(setup: AbstractSetup, p_lower, p_init: float) -> float:
    """ln of theta^(alpha^N) * p_init * prod_n p_lower[n]."""
    p_lower = np.asarray(p_lower, dtype=np.float64)
    if p_lower.shape != (setup.horizon,):
        raise ValueError(f"need {setup.horizon} step probabilities, got shape {p_lower.shape}")
    probs = np.append(p_lower, p_init)
    if np.any(~np.isfinite(probs)) or np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if np.any(probs == 0):
        return -math.inf
    return setup.alpha**setup.horizon * math.log(setup.theta) + float(np.sum(np.log(probs)))


def step_probability_infimum(setup: AbstractSetup, n: int, v_grid, noise_sampler: Callable,
                             n_mc: int, rng: np.random.Generator, n_sigma: float = 3.0) -> float:
    """Grid-plus-Monte-Carlo estimate of the n-th infimum in the product bound.

    For every grid point v with V(v) >= level(n) inside the admissible set, the
    probability P(V(transition(v, Z)) >= c V(v)^alpha) is estimated from ``n_mc``
    draws; the result is min over the grid of (p_hat - n_sigma * se), clipped
    to [0, 1], and capped at 1 as in the definition.
    """
    level = setup.level(n)
    event = setup.event(n)
    best = 1.0
    for v in v_grid:
        Vv = setup.lyapunov(v)
        if Vv < level or not event(v):
            continue
        z = noise_sampler(rng, n_mc)
        hits = setup.lyapunov(setup.transition(v, z)) >= setup.c * Vv**setup.alpha
        p_hat = float(np.mean(hits))
        se = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n_mc)
        best = min(best, max(p_hat - n_sigma * se, 0.0))
    return best


def gaussian_interval_bound(c: float, eps: float, T: float, N: int) -> float:
    """ln of eps / sqrt(2 pi T) * exp(-N (c^2 + eps^2) / T), a lower bound on
    P(|c - Y| <= eps) for Y ~ N(0, T/N)."""
    if not eps > 0 or not T > 0 or N < 1:
        raise ValueError("need eps > 0, T > 0, N >= 1")
    return math.log(eps) - 0.5 * math.log(2 * math.pi * T) - N * (c * c + eps * eps) / T


def gamma_sum(N: int, eta: float, nu: float) -> float:
    """sum_{n=-N}^{N} (eta + 4 pi^2 n^2)^(-2 nu)."""
    return float(np.sum(eigenvalues(N, eta) ** (-2.0 * nu)))


def projected_noise_ball_bound(v_norm_sq: float, x: float, N: int, T: float, eta: float,
                               nu: float) -> float:
    """ln lower bound on P(||(eta - A)^(-nu) (P_N v - P_N W_{T/N})||_H <= x)."""
    if not T > 0:
        raise ValueError("T must be positive")
    if x <= 0:
        return -math.inf
    gamma = gamma_sum(N, eta, nu)
    return ((2 * N + 1) * (math.log(x) - 0.5 * math.log(2 * math.pi * gamma * T))
            - 3.0 * N * N / T * (v_norm_sq + x * x / gamma))


def smoothing_constant(r: float, eta: float, T: float, kind: SemigroupKind) -> float:
    """A value zeta_r >= 1 with sup_M M^(-r) ||(eta - A)^r S_M|| <= zeta_r T^(-r).

    With x = 4 pi^2 m^2 T / M one has (T/M)^r (eta + 4 pi^2 m^2)^r sigma_m =
    (eta T / M + x)^r sigma(x) <= (eta T + x)^r sigma(x), so the supremum of the
    scalar map over x >= 0 bounds every mode and step count. The maximiser is
    found in closed form for both semigroups.
    """
    if not 0 <= r <= 1:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    a = eta * T
    if r == 0:
        return 1.0
    if SemigroupKind(kind) is SemigroupKind.EXPONENTIAL:
        x = max(0.0, r - a)
        value = (a + x) ** r * math.exp(-x)
    elif r < 1:
        x = max(0.0, (r - a) / (1.0 - r))
        value = (a + x) ** r / (1.0 + x)
    else:
        value = max(a, 1.0)
    return max(1.0, value)


def smoothing_ratio(M: int, r: float, eta: float, T: float, kind: SemigroupKind) -> float:
    """(T/M)^r max_m (eta + 4 pi^2 m^2)^r sigma_m(T/M), scanning every mode m >= 0.

    Modes beyond the decay of sigma only lower the ratio; the scan stops once the
    scalar profile is past its maximum.
    """
    dt = T / M
    m_max = max(64, int(math.ceil(math.sqrt(max(r, 1.0) * M / (FOUR_PI_SQ * T)) * 8)) + 8)
    lam = eigenvalues(m_max, eta)[m_max:]
    sigma = semigroup_multipliers(m_max, dt, kind)[m_max:]
    return float(np.max((dt * lam) ** r * sigma))


def sup_norm_embedding_bound(r: float, eta: float, terms: int = 4096) -> float:
    """Certified bound on sup_w ||(eta - A)^(-r) w||_{L^inf} / ||w||_H for r > 1/4.

    The extremal value is sqrt(sum_n (eta + 4 pi^2 n^2)^(-2r) e_n(x)^2) at any x,
    which equals sqrt(eta^(-2r) + 2 sum_{n>=1} (eta + 4 pi^2 n^2)^(-2r)). The tail
    beyond ``terms`` is bounded by (4 pi^2)^(-2r) times a Hurwitz zeta value.
    Since ||.||_{L^p} <= ||.||_{L^inf} on the unit interval, this bounds the
    H_r -> L^p embedding constant for every p.
    """
    if not r > 0.25:
        raise ValueError(f"the sup-norm embedding needs r > 1/4, got {r}")
    n = np.arange(1, terms + 1, dtype=np.float64)
    head = np.sum((eta + FOUR_PI_SQ * n * n) ** (-2 * r))
    tail = FOUR_PI_SQ ** (-2 * r) * float(hurwitz_zeta(4 * r, terms + 1))
    return math.sqrt(eta ** (-2 * r) + 2.0 * (head + tail))


def estimate_embedding_constant(p: float, r: float, eta: float, n_samples: int = 10_000,
                                cutoff: int = 64, seed: int = 0, safety: float = 2.0) -> float:
    """Randomised estimate of sup ||v||_{L^p} / ||v||_{H_r}, times ``safety``.

    Candidates: random states of the given cutoff with spectrally decaying
    weights, all single modes, and Dirichlet-kernel spikes weighted by
    (eta + 4 pi^2 n^2)^(-2r), which is the L^inf extremiser.
    """
    rng = np.random.default_rng(seed)
    K = cutoff
    lam = eigenvalues(K, eta)
    cands = [np.eye(2 * K + 1)]
    spike = np.zeros((K + 1, 2 * K + 1))
    for k in range(K + 1):
        spike[k, K:K + k + 1] = lam[K:K + k + 1] ** (-2 * r)
    cands.append(spike)
    for decay in (0.0, 0.5, 1.0, 2.0):
        raw = rng.standard_normal((n_samples // 4, 2 * K + 1))
        cands.append(raw * lam ** (-decay * r))
    best = 0.0
    M = int(np.ceil(max(p, 2.0))) * K * 2 + 1
    for block in cands:
        ratio = lp_norm_coeffs(block, p, M) / sobolev_norm_coeffs(block, r, eta)
        best = max(best, float(np.max(ratio)))
    return safety * best


@dataclass(frozen=True)
class DivergenceConstants:
    """Constant pack for the moment lower bound of the spectral scheme."""

    q: int
    a_q: float
    T: float
    eta: float
    nu: float
    chi: float
    kind: SemigroupKind
    kappa: float
    vartheta: float
    C_embed: float
    p_exponent: float
    s_exponent: float
    op_norm_neg_s: float

    def zeta(self, r: float) -> float:
        return smoothing_constant(r, self.eta, self.T, self.kind)

    def c_small(self, N: int, r: float) -> float:
        return min((self.T * abs(self.a_q) / (4 * N)) ** r, 1.0)

    def log_c_small(self, N: int, r: float) -> float:
        return min(r * math.log(self.T * abs(self.a_q) / (4 * N)), 0.0)

    def log_theta(self, N: int, r: float) -> float:
        return max(r * math.log((4 * self.T * self.vartheta + 8 * N) / (self.T * abs(self.a_q))),
                   r * math.log(2.0))

    def theta(self, N: int, r: float) -> float:
        return math.exp(self.log_theta(N, r))

    def log_rho(self, N: int, r: float) -> float:
        C1, T = max(self.C_embed, 1.0), self.T
        main = (math.log(8 * self.vartheta**2 * C1 * max(T, 1.0) * self.zeta(self.chi))
                + self.chi * math.log(N) - self.log_c_small(N, r) / r - math.log(min(T, 1.0)))
        return max(main, -math.log(2.0 ** (1.0 / self.q) - 1.0))

    def rho(self, N: int, r: float) -> float:
        return math.exp(self.log_rho(N, r))

    def gamma(self, N: int) -> float:
        return gamma_sum(N, self.eta, self.nu)

    def log_y(self, N: int) -> float:
        e = self.nu + self.s_exponent
        return (e * math.log(self.T) - math.log(self.zeta(e)) - e * math.log(N)
                - math.log(self.op_norm_neg_s))

    def y(self, N: int) -> float:
        return math.exp(self.log_y(N))

    def log_z(self, N: int, r: float) -> float:
        return self.log_y(N) - (N + 1) * self.log_rho(N, r)

    def z(self, N: int, r: float) -> float:
        return math.exp(self.log_z(N, r))

    def log_g(self, N: int, r: float) -> float:
        return self.log_y(N) - math.log(2.0) - N * self.log_rho(N, r)

    def g(self, N: int, r: float) -> float:
        return math.exp(self.log_g(N, r))

    def audit_row(self, N: int, r: float) -> dict:
        return {
            "kappa": self.kappa, "vartheta": self.vartheta,
            "log_rho": self.log_rho(N, r), "log_theta": self.log_theta(N, r),
            "log_c": self.log_c_small(N, r), "gamma": self.gamma(N),
            "log_y": self.log_y(N), "log_z": self.log_z(N, r), "log_g": self.log_g(N, r),
            "zeta_chi": self.zeta(self.chi), "zeta_nu_s": self.zeta(self.nu + self.s_exponent),
            "C_embed": self.C_embed, "p": self.p_exponent, "s": self.s_exponent,
            "op_norm_neg_s": self.op_norm_neg_s,
        }


def default_s_exponent(nu: float) -> float:
    return max(min(0.5, 1.0 - nu), 0.25 + 1e-3)


def compute_constants(cfg) -> DivergenceConstants:
    """Evaluate the constant pack for a scheme configuration.

    C defaults to the certified sup-norm bound for H_chi (an overestimate, which
    only shrinks the moment bound); ``cfg.embedding_constant`` overrides it. The
    operator norm of (eta - A)^(-s) into L^p uses the same certified bound, again
    an overestimate, which only shrinks y_N.
    """
    q = cfg.q
    a = np.asarray(cfg.a, dtype=np.float64)
    if q < 2 or a[-1] == 0:
        raise ValueError("the divergence constants need q >= 2 and a nonzero leading coefficient")
    p = 2.0 * q if cfg.p_exponent is None else float(cfg.p_exponent)
    if p < 2 * q:
        raise ValueError(f"p must be at least 2q = {2 * q}, got {p}")
    s = default_s_exponent(cfg.nu) if cfg.s_exponent is None else float(cfg.s_exponent)
    if not 0.25 < s <= 1 - cfg.nu:
        raise ValueError(f"s must lie in (1/4, 1 - nu], got {s}")
    C = sup_norm_embedding_bound(cfg.chi, cfg.eta) if cfg.embedding_constant is None \
        else float(cfg.embedding_constant)
    C1, T = max(C, 1.0), cfg.T
    xi_norm = 0.0 if cfg.xi is None else sobolev_norm(cfg.xi, cfg.chi, cfg.eta)
    kappa = (q + 2) * C1**q * max(T, 1.0) * max(1.0, float(np.max(np.abs(a)))) * max(1.0, xi_norm**q)
    vartheta = 2.0 ** (q - 1) * C1 * max(T, 1.0) * max(8.0, float(np.max(np.abs(a))))
    return DivergenceConstants(
        q=q, a_q=float(a[-1]), T=T, eta=cfg.eta, nu=cfg.nu, chi=cfg.chi,
        kind=cfg.semigroup_kind, kappa=kappa, vartheta=vartheta, C_embed=C,
        p_exponent=p, s_exponent=s, op_norm_neg_s=sup_norm_embedding_bound(s, cfg.eta),
    )


def smoothing_scale(consts: DivergenceConstants, N: int, kind: SemigroupKind,
                    delta: float | None = None) -> float:
    """Factor y/x = (T/N)^(nu+s) / (delta ||(eta - A)^(-s)||), delta defaulting to zeta_{nu+s}."""
    e = consts.nu + consts.s_exponent
    if delta is None:
        delta = smoothing_constant(e, consts.eta, consts.T, kind)
    return (consts.T / N) ** e / (delta * consts.op_norm_neg_s)


def smoothed_ball_bound(v: SpectralState, x: float, consts: DivergenceConstants, N: int,
                        kind: SemigroupKind, delta: float | None = None) -> float:
    """ln lower bound on P(||S_N (P_N v - P_N W_{T/N})||_{L^p} <= x)."""
    s = consts.s_exponent
    if not 0.25 < s <= 1 - consts.nu:
        raise ValueError(f"s must lie in (1/4, 1 - nu], got {s}")
    y = x * smoothing_scale(consts, N, kind, delta)
    v_norm_sq = sobolev_norm(v, 0, consts.eta) ** 2
    return projected_noise_ball_bound(v_norm_sq, y, N, consts.T, consts.eta, consts.nu)


def divergence_lower_bound(consts: DivergenceConstants, M: int, r: float) -> float:
    """ln lower bound on E|<e_0, Y_M^M>|^r for M >= 2."""
    if M < 2:
        raise ValueError("M must be at least 2")
    if not r > 0:
        raise ValueError("r must be positive")
    q, T, kappa = consts.q, consts.T, consts.kappa
    log_theta = consts.log_theta(M, r)
    log_c = consts.log_c_small(M, r)
    gamma = consts.gamma(M)
    log_y, log_z, log_g = consts.log_y(M), consts.log_z(M, r), consts.log_g(M, r)
    log_level = log_c / (r * (1 - q)) + log_theta / r
    log_2pigt = math.log(2 * math.pi * gamma * T)
    return (q ** (M - 1) * log_theta
            + log_level
            - 0.5 * math.log(2 * math.pi * T)
            - 4.0 * M / T * (math.exp(2 * log_level) + kappa**2)
            + (2 * M + 1) * (log_g - 0.5 * log_2pigt)
            - 3.0 * M * M / T * (kappa**2 + math.exp(2 * log_g) / gamma)
            + (2 * M * M + M) * (log_z + log_y - log_2pigt)
            - 3.0 * M**3 / (gamma * T) * (math.exp(2 * log_z) + math.exp(2 * log_y)))
