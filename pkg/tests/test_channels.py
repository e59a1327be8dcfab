import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fewbit.channels import (
    ChannelKind,
    LosUserGeometry,
    channel_covariance,
    complex_unstack,
    make_channel,
    real_stack,
    sample_los,
    sample_rayleigh,
    steering_matrix,
    unvectorize,
    vectorize,
)
from fewbit.errors import DimensionError


def test_rayleigh_unit_power(rng):
    h = sample_rayleigh(1, 1, rng, batch=1_000_000)
    assert h.shape == (1_000_000, 1, 1)
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.01


def test_rayleigh_entries_uncorrelated(rng):
    h = sample_rayleigh(2, 3, rng, batch=1_000_000).reshape(-1, 6)
    parts = np.concatenate([h.real, h.imag], axis=1)
    corr = np.corrcoef(parts, rowvar=False)
    off = corr - np.diag(np.diag(corr))
    assert np.max(np.abs(off)) < 0.01
    # Real and imaginary halves each carry variance 1/2.
    np.testing.assert_allclose(parts.var(axis=0), 0.5, rtol=0.01)


@pytest.mark.parametrize("m,k", [(0, 1), (1, 0)])
def test_zero_dimension_rejected(rng, m, k):
    with pytest.raises(DimensionError):
        sample_rayleigh(m, k, rng)
    with pytest.raises(DimensionError):
        sample_los(m, k, rng)


def _geometry(theta, phi=0.0, amp=1.0):
    return LosUserGeometry(theta=np.array([theta]), phi=np.array([phi]), amplitude=np.array([amp]))


def test_los_broadside_is_all_ones():
    col = steering_matrix(5, _geometry(0.0))[:, 0]
    np.testing.assert_allclose(col, np.ones(5), atol=1e-15)


def test_los_thirty_degrees_quarter_turns():
    col = steering_matrix(4, _geometry(np.pi / 6))[:, 0]
    np.testing.assert_allclose(col, [1, 1j, -1, -1j], atol=1e-12)


def test_los_modulus_equals_amplitude(rng):
    h = sample_los(8, 3, rng, batch=100)
    np.testing.assert_allclose(np.abs(h), 1.0, atol=1e-12)
    scaled = steering_matrix(6, _geometry(0.3, 1.0, 0.7))
    np.testing.assert_allclose(np.abs(scaled), 0.7, atol=1e-12)


def test_los_angles_within_sector(rng):
    model = make_channel("los", 4, 8)
    h = model.sample(rng, batch=10_000)
    # Omega = pi sin(theta) with |theta| <= pi/3 keeps the phase step within pi*sqrt(3)/2.
    step = np.angle(h[:, 1, :] / h[:, 0, :])
    assert np.max(np.abs(step)) <= np.pi * np.sqrt(3) / 2 + 1e-9


@pytest.mark.parametrize("kind", ["rayleigh", "los"])
def test_unit_second_moment(rng, kind):
    h = make_channel(kind, 4, 2).sample(rng, batch=125_000)
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.01
    assert np.max(np.abs(h.mean(axis=0))) < 0.01


def test_los_real_part_is_not_gaussian(rng):
    # With A = 1, Re(h) = cos(uniform phase): E[Re^4] = 3/8 versus 3/4 for CN(0,1).
    h = sample_los(3, 1, rng, batch=1_000_000)[:, 2, 0]
    assert abs(np.mean(h.real ** 4) / 0.375 - 1) < 0.02


@pytest.mark.parametrize("kind,m,k", [("rayleigh", 2, 2), ("los", 4, 8), ("rayleigh", 1, 1)])
def test_covariance_identity(kind, m, k):
    np.testing.assert_array_equal(channel_covariance(make_channel(kind, m, k)), np.eye(m * k))


def test_vectorize_is_column_major():
    h = np.array([[1 + 2j, 3], [0, 1j]])
    np.testing.assert_array_equal(vectorize(h), [1 + 2j, 0, 3, 1j])
    np.testing.assert_array_equal(real_stack(np.array([1 + 2j])), [1, 2])
    np.testing.assert_array_equal(complex_unstack(np.array([1.0, 2.0])), [1 + 2j])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 3))
def test_vectorize_round_trip(m, k, batch):
    rng = np.random.default_rng(m * 100 + k)
    shape = (m, k) if batch == 0 else (batch, m, k)
    h = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    np.testing.assert_array_equal(unvectorize(vectorize(h), m, k), h)
    np.testing.assert_array_equal(complex_unstack(real_stack(h)), h)


def test_channel_kind_parse():
    assert make_channel("los", 2, 2).kind is ChannelKind.LOS
    with pytest.raises(ValueError):
        make_channel("rician", 2, 2)
