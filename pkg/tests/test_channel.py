import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrsma_vr.channel import (
    ChannelParams,
    noise_error_variance,
    realize_constant_channel,
    rms,
    sample_channel,
)


# squares of smaller magnitudes underflow to zero
_mag = st.one_of(st.just(0.0), st.floats(1e-100, 10.0))
_signed = st.one_of(_mag, _mag.map(lambda x: -x))


def test_constant_channel_zero_phase():
    np.testing.assert_array_equal(realize_constant_channel(1.0, 0.0, 6), np.ones(6))


def test_constant_channel_phase_pi():
    h = realize_constant_channel(2.0, np.pi, 2)
    np.testing.assert_allclose(h, [2.0, -2.0], atol=1e-15)


def test_constant_channel_quarter_turns():
    h = realize_constant_channel(1.0, np.pi / 2, 4)
    np.testing.assert_allclose(h, [1, 1j, -1, -1j], atol=1e-15)
    assert np.sum(np.abs(h) ** 2) == pytest.approx(4.0, rel=1e-15)


def test_constant_channel_vectorized_over_users():
    g = np.array([1.0, 0.5])
    phi = np.array([0.0, np.pi / 3])
    h = realize_constant_channel(g, phi, 5)
    assert h.shape == (2, 5)
    np.testing.assert_allclose(h[1], realize_constant_channel(0.5, np.pi / 3, 5))


def test_constant_channel_rejects_no_antennas():
    with pytest.raises(ValueError):
        realize_constant_channel(1.0, 0.0, 0)


@pytest.mark.parametrize(
    "g, P0, beta, expected",
    [(1.0, 1.0, 0.6, 1.0), (1.0, 100.0, 0.0, 1.0), (1.0, 100.0, 0.6, 0.06309573444801933)],
)
def test_noise_error_variance(g, P0, beta, expected):
    assert noise_error_variance(g, P0, beta) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("P0", [0.0, -1.0])
def test_noise_error_variance_rejects_bad_power(P0):
    with pytest.raises(ValueError):
        noise_error_variance(1.0, P0, 0.6)


def test_zero_error_gives_constant_channel():
    # beta huge drives the variance to zero; g = 0 is the exact zero case
    p = ChannelParams(6, 0.0, 0.0, 0.6, 100.0)
    real = sample_channel(p, np.random.default_rng(0))
    np.testing.assert_array_equal(real.full_channel, real.constant_part)


def test_sample_is_deterministic_under_seed():
    p = ChannelParams(6, np.array([1.0, 0.8]), np.array([0.0, 1.0]), 0.6, 100.0)
    a = sample_channel(p, np.random.default_rng(7))
    b = sample_channel(p, np.random.default_rng(7))
    np.testing.assert_array_equal(a.full_channel, b.full_channel)
    np.testing.assert_array_equal(a.rms, b.rms)


def test_realization_invariants():
    p = ChannelParams(4, np.array([1.0, 0.3, 0.0]), np.array([0.0, 2.0, 6.0]), 0.6, 10.0)
    real = sample_channel(p, np.random.default_rng(3))
    np.testing.assert_array_equal(real.full_channel, real.constant_part + real.error_part)
    np.testing.assert_allclose(real.squared_norm, np.sum(np.abs(real.full_channel) ** 2, axis=-1),
                               rtol=1e-14)
    np.testing.assert_allclose(real.rms, np.sqrt(real.squared_norm / 4), rtol=1e-15)


def test_error_moments_monte_carlo():
    # g = 1, P0 = 100, beta = 0.6 -> sigma^2 = 0.0631; ~10^5 error entries
    var = noise_error_variance(1.0, 100.0, 0.6)
    rng = np.random.default_rng(0)
    users = ChannelParams(6, np.ones(100), np.zeros(100), 0.6, 100.0)
    errs = np.stack([sample_channel(users, rng).error_part for _ in range(167)])
    e = errs.reshape(-1)
    N = e.size
    # the complex mean has per-component std sqrt(var/2/N)
    se_mean = np.sqrt(var / 2 / N)
    assert abs(e.real.mean()) < 3 * se_mean
    assert abs(e.imag.mean()) < 3 * se_mean
    # |e|^2 is exponential with mean var and std var
    power = np.abs(e) ** 2
    assert abs(power.mean() - var) < 3 * var / np.sqrt(N)


def test_rejects_invalid_params():
    with pytest.raises(ValueError):
        ChannelParams(0, 1.0, 0.0, 0.6, 1.0)
    with pytest.raises(ValueError):
        ChannelParams(2, -1.0, 0.0, 0.6, 1.0)
    with pytest.raises(ValueError):
        ChannelParams(2, 1.0, 7.0, 0.6, 1.0)
    with pytest.raises(ValueError):
        ChannelParams(2, 1.0, 0.0, 0.6, 0.0)


@given(g=_mag, phi=st.floats(0, 2 * np.pi), M=st.integers(1, 16))
def test_constant_part_norm_is_m_g_squared(g, phi, M):
    h = realize_constant_channel(g, phi, M)
    assert np.sum(np.abs(h) ** 2) == pytest.approx(M * g * g, rel=1e-12, abs=1e-300)


@given(
    re=_signed, im=_signed, seed=st.integers(0, 2**32 - 1),
    M=st.integers(1, 8),
)
def test_rms_is_absolutely_homogeneous(re, im, seed, M):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal(M) + 1j * rng.standard_normal(M)
    c = complex(re, im)
    assert rms(c * h) == pytest.approx(abs(c) * rms(h), rel=1e-12, abs=1e-300)


@given(g=_mag)
def test_zero_error_zero_phase_rms_equals_gain(g):
    h = realize_constant_channel(g, 0.0, 6)
    assert rms(h) == pytest.approx(g, rel=1e-15, abs=0)
