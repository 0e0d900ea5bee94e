import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spde_lab.spectral_core import (
    GridState,
    OperatorParams,
    SemigroupKind,
    SpectralState,
    apply_semigroup,
    dealias_grid_size,
    eigenvalue,
    from_grid,
    next_smooth,
    poly_eval_projected,
    project,
    semigroup_multipliers,
    sobolev_norm,
    state_from_csv_row,
    state_to_csv_row,
    to_grid,
)

KINDS = list(SemigroupKind)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def states(draw, max_cutoff=6):
    N = draw(st.integers(0, max_cutoff))
    c = draw(arrays(np.float64, 2 * N + 1, elements=finite))
    return SpectralState(N, c)


def direct_eval(v: SpectralState, x: np.ndarray) -> np.ndarray:
    """Evaluate sum_n c_n e_n(x) straight from the basis definition."""
    out = np.full_like(x, v.coefficient(0))
    for n in range(1, v.cutoff + 1):
        out += v.coefficient(n) * math.sqrt(2) * np.cos(2 * np.pi * n * x)
        out += v.coefficient(-n) * math.sqrt(2) * np.sin(2 * np.pi * n * x)
    return out


def to_complex(v: SpectralState) -> np.ndarray:
    """Exponential-basis coefficients chat_k, k = -N..N."""
    N = v.cutoff
    out = np.zeros(2 * N + 1, dtype=complex)
    out[N] = v.coefficient(0)
    for n in range(1, N + 1):
        out[N + n] = (v.coefficient(n) - 1j * v.coefficient(-n)) / math.sqrt(2)
        out[N - n] = np.conj(out[N + n])
    return out


def from_complex(ch: np.ndarray, N: int) -> np.ndarray:
    K = (len(ch) - 1) // 2
    out = np.zeros(2 * N + 1)
    out[N] = ch[K].real
    for n in range(1, N + 1):
        if n <= K:
            out[N + n] = math.sqrt(2) * ch[K + n].real
            out[N - n] = -math.sqrt(2) * ch[K + n].imag
    return out


def brute_force_poly(v: SpectralState, a) -> np.ndarray:
    """P_N(sum a_k v^k) by symbolic convolution of exponential coefficients."""
    base = to_complex(v)
    power = np.array([1.0 + 0j])
    total = np.zeros(1, dtype=complex)
    for k, ak in enumerate(a):
        if k:
            power = np.convolve(power, base)
        pad = (len(power) - len(total)) // 2
        total = np.pad(total, pad) + ak * power
    return from_complex(total, v.cutoff)


def test_eigenvalue_examples():
    assert eigenvalue(0, 1.0) == 1.0
    assert eigenvalue(1, 1.0) == pytest.approx(1 + 4 * np.pi**2)
    assert eigenvalue(1, 1.0) == pytest.approx(40.478, abs=1e-3)
    assert eigenvalue(-2, 0.5) == pytest.approx(0.5 + 16 * np.pi**2)


def test_sobolev_norm_examples():
    assert sobolev_norm(SpectralState.basis(0), 0.5, 2.0) == pytest.approx(2.0**0.5)
    assert sobolev_norm(SpectralState.zeros(3), 0.7, 1.0) == 0.0
    assert sobolev_norm(SpectralState.basis(1), 1.0, 1.0) == pytest.approx(1 + 4 * np.pi**2)


def test_negative_order_norm_uses_same_weights():
    v = SpectralState.from_modes({0: 1.0, 2: 3.0})
    expected = math.sqrt(1.0 + (3.0 * (1 + 16 * np.pi**2) ** -0.4) ** 2)
    assert sobolev_norm(v, -0.4, 1.0) == pytest.approx(expected)


@pytest.mark.parametrize("kind", KINDS)
def test_semigroup_fixes_constant_mode(kind):
    out = apply_semigroup(SpectralState.basis(0, 3), OperatorParams(semigroup_kind=kind), 0.37)
    assert out.allclose(SpectralState.basis(0, 3), rtol=0, atol=0)


def test_resolvent_single_mode():
    out = apply_semigroup(SpectralState.basis(1), OperatorParams(semigroup_kind="linear_implicit"), 1.0)
    assert out.coefficient(1) == pytest.approx(1 / (1 + 4 * np.pi**2))


@pytest.mark.parametrize("kind", KINDS)
def test_semigroup_near_identity(kind):
    v = SpectralState(3, np.arange(7.0) - 2)
    out = apply_semigroup(v, OperatorParams(semigroup_kind=kind), 1e-12)
    np.testing.assert_allclose(out.coeffs, v.coeffs, rtol=1e-9)


def test_semigroup_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        semigroup_multipliers(3, 0.0, SemigroupKind.EXPONENTIAL)


def test_operator_params_validation():
    with pytest.raises(ValueError):
        OperatorParams(eta=0.0)
    with pytest.raises(ValueError):
        OperatorParams(T=-1.0)


def test_project_examples():
    v = SpectralState(3, np.arange(7.0))
    assert project(v, 3).allclose(v)
    assert project(SpectralState.basis(2), 1).allclose(SpectralState.zeros(1))
    assert project(SpectralState.from_modes({0: 1.0, 2: 1.0}), 1).allclose(SpectralState.basis(0, 1))


def test_grid_examples():
    np.testing.assert_allclose(to_grid(SpectralState.basis(0), 8).values, np.ones(8))
    j = np.arange(8)
    np.testing.assert_allclose(to_grid(SpectralState.basis(1), 8).values,
                               math.sqrt(2) * np.cos(2 * np.pi * j / 8), atol=1e-14)


def test_to_grid_rejects_aliasing_grid():
    with pytest.raises(ValueError):
        to_grid(SpectralState.basis(4), 8)


def test_round_trip_random_cutoff_4():
    rng = np.random.default_rng(0)
    v = SpectralState(4, rng.standard_normal(9))
    back = from_grid(to_grid(v, 16), 4)
    np.testing.assert_allclose(back.coeffs, v.coeffs, atol=1e-12)


@given(states(), st.integers(0, 20))
def test_to_grid_matches_direct_evaluation(v, extra):
    M = 2 * v.cutoff + 1 + extra
    x = np.arange(M) / M
    np.testing.assert_allclose(to_grid(v, M).values, direct_eval(v, x), atol=1e-10)


@given(states(), st.integers(1, 20))
def test_round_trip_identity(v, extra):
    M = 2 * v.cutoff + extra
    back = from_grid(to_grid(v, max(M, 2 * v.cutoff + 1)), v.cutoff)
    np.testing.assert_allclose(back.coeffs, v.coeffs, atol=1e-10)


@given(states(), st.integers(1, 10))
def test_parseval(v, extra):
    g = to_grid(v, 2 * v.cutoff + extra)
    rms = math.sqrt(np.mean(g.values**2))
    assert sobolev_norm(v, 0, 1.0) == pytest.approx(rms, rel=1e-10, abs=1e-10)


@given(states(), st.floats(1e-6, 10), st.sampled_from(KINDS))
def test_semigroup_contraction_and_symmetry(v, dt, kind):
    p = OperatorParams(semigroup_kind=kind)
    out = apply_semigroup(v, p, dt)
    assert sobolev_norm(out, 0, 1.0) <= sobolev_norm(v, 0, 1.0) * (1 + 1e-15)
    sigma = semigroup_multipliers(v.cutoff, dt, kind)
    # exp(-4 pi^2 n^2 dt) may underflow to 0 for large dt
    assert np.all(sigma >= 0) and np.all(sigma <= 1) and sigma[v.cutoff] == 1.0
    np.testing.assert_array_equal(sigma, sigma[::-1])
    w = SpectralState(v.cutoff, np.linspace(-1, 1, 2 * v.cutoff + 1))
    lhs = float(out.coeffs @ w.coeffs)
    rhs = float(v.coeffs @ apply_semigroup(w, p, dt).coeffs)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@given(states(), st.integers(0, 8), st.floats(1e-4, 1), st.sampled_from(KINDS))
def test_projection_commutes_with_semigroup(v, M, dt, kind):
    p = OperatorParams(semigroup_kind=kind)
    a = project(apply_semigroup(v, p, dt), M)
    b = apply_semigroup(project(v, M), p, dt)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)


@given(states(), st.integers(0, 8))
def test_projection_idempotent_and_contractive(v, M):
    once = project(v, M)
    assert project(once, M).allclose(once, rtol=0, atol=0)
    assert sobolev_norm(once, 0, 1.0) <= sobolev_norm(v, 0, 1.0)


def test_poly_examples():
    out = poly_eval_projected(SpectralState.zeros(3), [2.5, 0, 0, 0])
    assert out.allclose(SpectralState.basis(0, 3, 2.5), atol=1e-14)
    a = [0.3, -1.2, 0.7, 2.0]
    c = 1.7
    out = poly_eval_projected(SpectralState.basis(0, 2, c), a)
    scalar = np.polynomial.polynomial.polyval(c, a)
    assert out.allclose(SpectralState.basis(0, 2, scalar), atol=1e-12)
    sq = poly_eval_projected(SpectralState.basis(1), [0, 0, 1])
    assert sq.coefficient(0) == pytest.approx(1.0, abs=1e-14)


def test_square_of_cosine_by_quadrature():
    # brute-force midpoint quadrature of 2 cos^2(2 pi x)
    x = (np.arange(100_000) + 0.5) / 100_000
    assert np.mean(2 * np.cos(2 * np.pi * x) ** 2) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=60)
@given(states(max_cutoff=6), st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_dealiasing_matches_symbolic_convolution(v, a):
    v = SpectralState(v.cutoff, v.coeffs / 10)
    got = poly_eval_projected(v, a).coeffs
    np.testing.assert_allclose(got, brute_force_poly(v, a), atol=1e-10, rtol=1e-10)


def test_dealias_grid_size_is_smooth_and_large_enough():
    for N in range(1, 300, 7):
        for q in (2, 3, 5):
            M = dealias_grid_size(N, q)
            assert M > (q + 1) * N and next_smooth(M) == M
            assert next_smooth(M - 1) <= M
    assert dealias_grid_size(256, 3) == 1080


def test_state_requires_matching_length_and_finiteness():
    with pytest.raises(ValueError):
        SpectralState(2, np.zeros(4))
    with pytest.raises(ValueError):
        SpectralState(0, np.array([np.inf]))
    assert SpectralState(0, np.array([np.inf]), exploded=True).exploded


def test_csv_round_trip_exact():
    rng = np.random.default_rng(3)
    v = SpectralState(5, rng.standard_normal(11) * 1e-7)
    row = state_to_csv_row(v)
    assert row.split(",")[0] == "5"
    np.testing.assert_array_equal(state_from_csv_row(row).coeffs, v.coeffs)


def test_grid_state_shape_check():
    with pytest.raises(ValueError):
        GridState(5, np.zeros(4))
