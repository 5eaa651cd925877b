import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swiptrelay.channel import (
    LinkBudget,
    dbw_to_watts,
    draw_gain,
    gain_from_uniform,
    gain_stream,
    inversion_power,
    link_rate,
    min_gain_for_rate,
)
from swiptrelay.errors import ConfigError


def test_dbw_to_watts():
    assert dbw_to_watts(0.0) == 1.0
    assert dbw_to_watts(10.0) == pytest.approx(10.0)
    assert dbw_to_watts(20.0) == pytest.approx(100.0)
    assert dbw_to_watts(-10.0) == pytest.approx(0.1)


def test_gain_from_uniform_endpoints():
    assert gain_from_uniform(1.0) == 0.0
    assert gain_from_uniform(math.exp(-1.0)) == pytest.approx(1.0)
    arr = gain_from_uniform(np.array([1.0, math.exp(-2.0)]))
    assert arr[0] == 0.0 and arr[1] == pytest.approx(2.0)


def test_gain_stream_deterministic_and_separated():
    a = draw_gain(gain_stream(123), size=16)
    b = draw_gain(gain_stream(123), size=16)
    c = draw_gain(gain_stream(123, stream=1), size=16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_draw_gain_scalar_matches_vector():
    # same underlying uniforms; libm and numpy log1p may differ by an ulp
    rng = gain_stream(5)
    xs = [draw_gain(rng) for _ in range(8)]
    ys = draw_gain(gain_stream(5), size=8)
    assert xs == pytest.approx(list(ys), rel=1e-12)


def test_draw_gain_is_unit_mean_exponential():
    g = draw_gain(gain_stream(2024), size=200_000)
    assert g.min() >= 0.0
    assert g.mean() == pytest.approx(1.0, abs=0.01)
    # P(g > 1) = 1/e for a unit-mean exponential
    assert (g > 1.0).mean() == pytest.approx(math.exp(-1.0), abs=0.01)


def test_link_rate_known_point():
    # g = 0.3, P = 10, sigma2 = 1, d = 1: 0.5 * log2(1 + 3) = 1 exactly
    budget = LinkBudget(tx_power=10.0)
    assert link_rate(0.3, budget) == pytest.approx(1.0)
    assert link_rate(0.0, budget) == 0.0


def test_link_rate_monotone_in_gain_and_power():
    b1 = LinkBudget(tx_power=10.0)
    b2 = LinkBudget(tx_power=20.0)
    assert link_rate(0.5, b1) > link_rate(0.4, b1)
    assert link_rate(0.4, b2) > link_rate(0.4, b1)


def test_link_rate_distance_attenuation():
    near = LinkBudget(tx_power=10.0, distance=1.0)
    far = LinkBudget(tx_power=10.0, distance=2.0)
    # squared-distance path loss: same rate needs 4x the gain at d = 2
    assert link_rate(1.2, far) == pytest.approx(link_rate(0.3, near))


def test_min_gain_for_rate_inverts_link_rate():
    budget = LinkBudget(tx_power=10.0, noise_var=2.0, distance=1.5)
    for rate in (0.25, 1.0, 2.0, 3.5):
        g = min_gain_for_rate(rate, budget)
        assert link_rate(g, budget) == pytest.approx(rate)
    assert min_gain_for_rate(0.0, budget) == 0.0


def test_min_gain_known_point():
    assert min_gain_for_rate(1.0, LinkBudget(tx_power=10.0)) == pytest.approx(0.3)


def test_inversion_power_known_point():
    # (2^2 - 1) * 1 * 1 / 0.3 = 10
    assert inversion_power(1.0, 0.3, 1.0, 1.0) == pytest.approx(10.0)


def test_inversion_power_edge_cases():
    assert inversion_power(0.0, 0.5, 1.0, 1.0) == 0.0
    assert inversion_power(1.0, 0.0, 1.0, 1.0) == math.inf


@given(
    gain=st.floats(min_value=1e-6, max_value=50.0),
    rate=st.floats(min_value=0.01, max_value=8.0),
)
def test_inversion_power_achieves_target_rate(gain, rate):
    """Transmitting at the inversion power meets the rate exactly."""
    power = inversion_power(rate, gain, 1.0, 1.0)
    achieved = link_rate(gain, LinkBudget(tx_power=power))
    assert achieved == pytest.approx(rate, rel=1e-9)


def test_link_budget_validation():
    with pytest.raises(ConfigError, match="tx_power"):
        LinkBudget(tx_power=-1.0)
    with pytest.raises(ConfigError, match="noise_var"):
        LinkBudget(tx_power=1.0, noise_var=0.0)
    with pytest.raises(ConfigError, match="distance"):
        LinkBudget(tx_power=1.0, distance=0.0)
