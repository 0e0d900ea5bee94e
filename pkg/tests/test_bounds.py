import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from spde_lab.bounds import (
    AbstractSetup,
    abstract_product_bound,
    compute_constants,
    divergence_lower_bound,
    estimate_embedding_constant,
    gamma_sum,
    gaussian_interval_bound,
    projected_noise_ball_bound,
    reverse_gronwall,
    smoothed_ball_bound,
    smoothing_constant,
    smoothing_ratio,
    smoothing_scale,
    step_probability_infimum,
    sup_norm_embedding_bound,
)
from spde_lab.schemes import SchemeConfig
from spde_lab.spectral_core import SemigroupKind, SpectralState, lp_norm_coeffs, sobolev_norm_coeffs

KINDS = list(SemigroupKind)


def toy_setup(**kw):
    base = dict(transition=lambda v, z: v * v * z, lyapunov=np.abs, c=1.0, alpha=2.0, theta=2.0, horizon=3)
    base.update(kw)
    return AbstractSetup(**base)


# reverse Gronwall ---------------------------------------------------------

def test_reverse_gronwall_examples():
    assert reverse_gronwall(1.0, 2.0, 2.0, 5) == pytest.approx(math.log(2.0**32))
    assert reverse_gronwall(2.0, 1.0, 1.0, 5) == pytest.approx(math.log(32.0))
    assert reverse_gronwall(0.5, 3.0, 7.0, 0) == pytest.approx(math.log(7.0))
    assert reverse_gronwall(0.5, 3.0, 0.0, 4) == -math.inf


def test_reverse_gronwall_rejects_bad_input():
    for args in ((0.0, 2.0, 1.0, 1), (1.0, -1.0, 1.0, 1), (1.0, 2.0, -1.0, 1), (1.0, 2.0, 1.0, -1)):
        with pytest.raises(ValueError):
            reverse_gronwall(*args)


@given(st.floats(1e-3, 1.0), st.floats(1.0, 4.0), st.floats(1e-2, 1e2), st.integers(0, 12))
def test_reverse_gronwall_satisfies_recursion(c, alpha, e0, n):
    # equality case of e_{k+1} >= c e_k^alpha, iterated in logs
    log_e = math.log(e0)
    for _ in range(n):
        log_e = math.log(c) + alpha * log_e
    got = reverse_gronwall(c, alpha, e0, n)
    assert got == pytest.approx(log_e, rel=1e-9, abs=1e-9)


# abstract product bound ------------------------------------------------

def test_abstract_bound_examples():
    s = toy_setup()
    assert abstract_product_bound(s, [1, 1, 1], 1.0) == pytest.approx(math.log(2.0**8))
    assert abstract_product_bound(s, [1, 0.5, 1], 0.25) == pytest.approx(8 * math.log(2) + math.log(0.125))
    assert abstract_product_bound(s, [1, 0, 1], 1.0) == -math.inf


def test_abstract_bound_rejects_bad_probabilities():
    s = toy_setup()
    for p, p0 in (([1, 1.5, 1], 1.0), ([1, 1, 1], -0.1), ([1, 1], 1.0), ([1, np.nan, 1], 1.0)):
        with pytest.raises(ValueError):
            abstract_product_bound(s, p, p0)


def test_abstract_setup_validation_and_levels():
    for bad in ({"c": 0.0}, {"c": 1.5}, {"alpha": 1.0}, {"theta": 1.0}, {"horizon": 0}):
        with pytest.raises(ValueError):
            toy_setup(**bad)
    s = toy_setup(c=0.25)
    assert s.level(1) == 2.0 and s.level(3) == 16.0
    assert s.initial_level == pytest.approx(0.25 ** (-1.0) * 2.0)


def test_step_probability_infimum_on_coin_flip():
    # V(v^2 Z) >= V(v)^2 iff Z = 1, which happens with probability 1/2
    s = toy_setup()
    rng = np.random.default_rng(0)
    sampler = lambda g, n: g.integers(0, 2, n).astype(float)
    n_mc = 20_000
    est = step_probability_infimum(s, 1, [2.0, 3.0, 10.0], sampler, n_mc, rng)
    se = math.sqrt(0.25 / n_mc)
    assert 0.5 - 7 * se <= est <= 0.5
    # grid points below the level are skipped, leaving the cap of 1
    assert step_probability_infimum(s, 3, [2.0, 3.0], sampler, n_mc, rng) == 1.0


# Gaussian probabilities ---------------------------------------------------

def test_gaussian_interval_example():
    lb = math.exp(gaussian_interval_bound(0.0, 1.0, 1.0, 1))
    assert lb == pytest.approx(math.exp(-1) / math.sqrt(2 * math.pi))
    exact = stats.norm.cdf(1) - stats.norm.cdf(-1)
    assert lb == pytest.approx(0.1468, abs=1e-4) and exact == pytest.approx(0.6827, abs=1e-4)
    assert lb <= exact


@given(st.floats(-3, 3), st.floats(1e-3, 2), st.floats(0.1, 5), st.integers(1, 200))
def test_gaussian_interval_below_exact(c, eps, T, N):
    sd = math.sqrt(T / N)
    exact = stats.norm.cdf((c + eps) / sd) - stats.norm.cdf((c - eps) / sd)
    lb = gaussian_interval_bound(c, eps, T, N)
    assert lb <= math.log(exact) + 1e-12 if exact > 0 else lb < -50


def test_gamma_example():
    assert gamma_sum(1, 1.0, 0.5) == pytest.approx(1 + 2 / (1 + 4 * math.pi**2))
    assert gamma_sum(1, 1.0, 0.5) == pytest.approx(1.0494, abs=1e-4)


def test_projected_ball_bound_below_monte_carlo():
    # ||(eta-A)^(-nu)(v - W)||^2 with W_n ~ N(0, T/N) on 2N+1 modes
    N, T, eta, nu = 1, 1.0, 1.0, 0.5
    lam = np.array([1 + 4 * math.pi**2, 1.0, 1 + 4 * math.pi**2])
    rng = np.random.default_rng(1)
    W = rng.standard_normal((200_000, 3)) * math.sqrt(T / N)
    for x in (0.1, 0.5, 1.0):
        hit = np.sqrt(np.sum((lam ** (-nu) * W) ** 2, axis=1)) <= x
        lb = math.exp(projected_noise_ball_bound(0.0, x, N, T, eta, nu))
        assert lb <= hit.mean() + 3 * math.sqrt(hit.mean() * (1 - hit.mean()) / len(hit)) + 1e-12
    assert projected_noise_ball_bound(0.0, 0.0, N, T, eta, nu) == -math.inf


# smoothing and embedding constants --------------------------------------

def test_smoothing_constant_examples():
    assert smoothing_constant(0.0, 1.0, 1.0, "exponential") == 1.0
    assert smoothing_constant(1.0, 3.0, 1.0, "linear_implicit") == 3.0
    # exponential kind with a = 0.1 and r = 1: (a + x*) exp(-x*) at x* = 0.9
    assert smoothing_constant(1.0, 0.1, 1.0, "exponential") == 1.0
    assert smoothing_constant(0.5, 4.0, 1.0, "exponential") == pytest.approx(2.0)


@settings(max_examples=60)
@given(st.integers(1, 400), st.floats(0.0, 1.0), st.floats(0.05, 5.0), st.floats(0.1, 4.0),
       st.sampled_from(KINDS))
def test_smoothing_constant_dominates_numerical_scan(M, r, eta, T, kind):
    assert smoothing_ratio(M, r, eta, T, kind) <= smoothing_constant(r, eta, T, kind) * (1 + 1e-12)


def test_sup_norm_bound_matches_long_sum():
    r, eta = 0.5, 1.0
    n = np.arange(1, 2_000_001, dtype=np.float64)
    brute = math.sqrt(1 + 2 * np.sum((eta + 4 * math.pi**2 * n * n) ** (-2 * r)))
    got = sup_norm_embedding_bound(r, eta)
    assert brute <= got <= brute * (1 + 1e-7)
    with pytest.raises(ValueError):
        sup_norm_embedding_bound(0.25, 1.0)


@settings(max_examples=30)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.sampled_from([0.3, 0.5, 0.9]))
def test_sup_norm_bound_dominates_random_ratios(K, seed, r):
    c = np.random.default_rng(seed).standard_normal((8, 2 * K + 1))
    ratio = lp_norm_coeffs(c, math.inf, 16 * K + 1) / sobolev_norm_coeffs(c, r, 1.0)
    assert np.all(ratio <= sup_norm_embedding_bound(r, 1.0))


def test_random_search_estimate_is_consistent_with_certified_bound():
    est = estimate_embedding_constant(6.0, 0.5, 1.0, n_samples=400, cutoff=16, safety=1.0)
    bound = sup_norm_embedding_bound(0.5, 1.0)
    assert 0.5 * bound < est <= bound


# constant pack -----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(3, 500), st.floats(0.1, 3.0), st.sampled_from([2, 3, 5]), st.floats(0.26, 0.74),
       st.floats(0.3, 1.0), st.sampled_from(KINDS))
def test_constant_invariants(N, r, q, nu, chi, kind):
    a = (0.0,) * q + (-1.0,)
    consts = compute_constants(SchemeConfig(N=N, a=a, nu=nu, chi=chi, semigroup_kind=kind))
    assert 0 < consts.c_small(N, r) <= 1
    assert consts.log_theta(N, r) >= r * math.log(2) - 1e-12
    assert consts.rho(N, r) >= 1 / (2 ** (1 / q) - 1) * (1 - 1e-12)
    assert consts.log_z(N, r) < consts.log_g(N, r) < consts.log_y(N)
    assert math.isfinite(divergence_lower_bound(consts, N, r))


def test_constant_pack_defaults():
    consts = compute_constants(SchemeConfig(N=8))
    assert consts.p_exponent == 6.0 and consts.s_exponent == 0.5
    assert consts.C_embed == pytest.approx(sup_norm_embedding_bound(0.5, 1.0))
    assert consts.kappa == pytest.approx(5 * consts.C_embed**3)


def test_constants_reject_low_degree_and_bad_exponents():
    with pytest.raises(ValueError):
        compute_constants(SchemeConfig(N=4, a=(0.0, -1.0)))
    with pytest.raises(ValueError):
        compute_constants(SchemeConfig(N=4, a=(0.0, 1.0, 0.0, 0.0)))
    with pytest.raises(ValueError):
        compute_constants(SchemeConfig(N=4, p_exponent=4.0))
    with pytest.raises(ValueError):
        compute_constants(SchemeConfig(N=4, s_exponent=0.2))


def test_smoothed_ball_delegates_to_projected_ball():
    consts = compute_constants(SchemeConfig(N=8))
    v = SpectralState.from_modes({0: 0.2, 1: -0.1})
    x = 3.0
    y = x * smoothing_scale(consts, 8, "exponential")
    want = projected_noise_ball_bound(0.05, y, 8, 1.0, 1.0, 0.5)
    assert smoothed_ball_bound(v, x, consts, 8, "exponential") == pytest.approx(want, rel=1e-14)


def test_smoothed_ball_monotone_in_delta():
    consts = compute_constants(SchemeConfig(N=8))
    v = SpectralState.zeros(1)
    vals = [smoothed_ball_bound(v, 1.0, consts, 8, "exponential", delta=d) for d in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_divergence_bound_input_checks():
    consts = compute_constants(SchemeConfig(N=8))
    with pytest.raises(ValueError):
        divergence_lower_bound(consts, 1, 2.0)
    with pytest.raises(ValueError):
        divergence_lower_bound(consts, 4, 0.0)
