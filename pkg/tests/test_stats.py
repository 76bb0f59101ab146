import math

import numpy as np
import pytest

from isk.stats import EstimateWithError, blocked_stderr, integrated_autocorr_time, mean_with_error


def ar1(phi, n, seed=0):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / math.sqrt(1 - phi**2)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + e[i]
    return x


def test_independent_values():
    est = mean_with_error([1.0, 2.0, 3.0, 4.0])
    assert est.mean == 2.5
    assert est.stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert mean_with_error([5.0]).stderr == 0.0


def test_within():
    e = EstimateWithError(1.0, 0.1, 10)
    assert e.within(1.29) and not e.within(1.31)
    assert e.within(1.4, extra=0.1)
    assert tuple(e) == (1.0, 0.1)


def test_constant_series():
    se, tau, _ = blocked_stderr(np.full(1000, 3.0))
    assert se == 0.0 and tau == 1.0


def test_white_noise_error():
    x = np.random.default_rng(1).standard_normal(2**16)
    se, tau, _ = blocked_stderr(x)
    assert tau == pytest.approx(1.0, abs=0.1)
    assert se == pytest.approx(1 / math.sqrt(len(x)), rel=0.15)


def test_correlated_series():
    phi = 0.9
    x = ar1(phi, 2**17)
    tau = integrated_autocorr_time(x)
    assert tau == pytest.approx((1 + phi) / (1 - phi), rel=0.15)
    se, _, block = blocked_stderr(x)
    exact = math.sqrt((1 + phi) / (1 - phi) / (1 - phi**2) / len(x))
    assert se == pytest.approx(exact, rel=0.25)
    assert block >= 4 * tau


def test_error_halves_with_four_times_data():
    x = ar1(0.5, 2**18, seed=3)
    a, _, _ = blocked_stderr(x[: 2**16])
    b, _, _ = blocked_stderr(x)
    assert b / a == pytest.approx(0.5, rel=0.25)


from hypothesis import given, settings, strategies as st  # noqa: E402


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
def test_blocked_error_is_affine_equivariant(seed, scale, shift):
    x = np.random.default_rng(seed).standard_normal(4096)
    a, tau_a, _ = blocked_stderr(x)
    b, tau_b, _ = blocked_stderr(scale * x + shift)
    assert b == pytest.approx(scale * a, rel=1e-8)
    assert tau_a == pytest.approx(tau_b, rel=1e-8)
