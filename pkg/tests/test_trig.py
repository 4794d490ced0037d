import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elasticflow import trig


def _grid(n, period=2 * np.pi):
    return period * np.arange(n) / n


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_diff_of_trig_polynomial_is_exact(order):
    x = _grid(32)
    f = np.sin(3 * x) + 0.5 * np.cos(5 * x)
    # d^k/dx^k of sin(3x) and cos(5x)
    exact = 3 ** order * np.sin(3 * x + order * np.pi / 2) + 0.5 * 5 ** order * np.cos(5 * x + order * np.pi / 2)
    assert np.allclose(trig.diff(f, order), exact, atol=1e-10 * 5 ** order)


def test_diff_respects_period():
    period = 6 * np.pi
    x = _grid(64, period)
    assert np.allclose(trig.diff(np.sin(x / 3), 1, period), np.cos(x / 3) / 3, atol=1e-13)


def test_rdiff_matches_diff():
    x = _grid(48)
    f = np.exp(np.sin(x))
    assert np.allclose(trig.rdiff(f), trig.diff(f), atol=1e-12)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_pad_truncate_round_trip(seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    coef = np.fft.fft(v)
    back = trig.truncate_coefficients(trig.pad_coefficients(coef, 40), 16)
    assert np.allclose(back, coef, atol=1e-12)


def test_resample_interpolates_band_limited_data():
    f = lambda x: np.cos(2 * x) + np.sin(5 * x)  # noqa: E731
    fine = trig.resample(f(_grid(16)), 64)
    assert np.allclose(fine, f(_grid(64)), atol=1e-13)


def test_evaluate_at_arbitrary_points():
    f = lambda x: 1 + np.cos(3 * x) - 0.2 * np.sin(7 * x)  # noqa: E731
    x = np.array([0.1, 1.7, 4.4, 6.0])
    assert np.allclose(trig.evaluate(f(_grid(32)), x), f(x), atol=1e-13)


def test_antiderivative_and_trapezoid():
    x = _grid(64)
    mean, F = trig.antiderivative(2 + np.cos(x))
    assert mean == pytest.approx(2.0)
    assert np.allclose(F, np.sin(x), atol=1e-13)
    assert trig.trapezoid(np.cos(x) ** 2) == pytest.approx(np.pi, rel=1e-14)


def test_invert_monotone_recovers_preimages():
    n = 64
    x = _grid(n)
    periodic = 0.3 * np.sin(x)  # F(x) = x + 0.3 sin x is strictly increasing
    u = np.linspace(0.05, 6.2, 25)
    targets = u + 0.3 * np.sin(u)
    assert np.allclose(trig.invert_monotone(1.0, periodic, 0.0, targets), u, atol=1e-12)
