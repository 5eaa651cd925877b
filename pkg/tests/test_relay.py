import pytest
from hypothesis import given, strategies as st

from swiptrelay.errors import ConfigError, InvariantError
from swiptrelay.relay import (
    HarvestParams,
    RelayState,
    RelayStatus,
    credit,
    debit_for_tx,
    harvest_amount,
)


def test_harvest_amount_known_point():
    # 0.5 * 10 W * 0.3 * 1 s / 1 m^2 = 1.5 J
    params = HarvestParams(eta=0.5, source_power=10.0)
    assert harvest_amount(0.3, params) == pytest.approx(1.5)
    assert harvest_amount(0.0, params) == 0.0


def test_harvest_amount_distance_and_duration():
    params = HarvestParams(eta=0.5, source_power=10.0, slot_duration=2.0, distance=2.0)
    assert harvest_amount(0.3, params) == pytest.approx(0.5 * 10 * 0.3 * 2.0 / 4.0)


def test_harvest_sense_threshold_gates_small_signals():
    params = HarvestParams(eta=0.5, source_power=10.0, sense_threshold=1.0)
    assert harvest_amount(0.1, params) == 0.0       # 0.5 J, below threshold
    assert harvest_amount(0.2, params) == 1.0       # exactly at threshold: kept
    assert harvest_amount(0.3, params) == pytest.approx(1.5)


def test_harvest_params_validation():
    with pytest.raises(ConfigError, match="eta"):
        HarvestParams(eta=1.5, source_power=10.0)
    with pytest.raises(ConfigError, match="eta"):
        HarvestParams(eta=-0.1, source_power=10.0)
    with pytest.raises(ConfigError, match="slot_duration"):
        HarvestParams(eta=0.5, source_power=10.0, slot_duration=0.0)
    with pytest.raises(ConfigError, match="sense_threshold"):
        HarvestParams(eta=0.5, source_power=10.0, sense_threshold=-1.0)
    # eta = 0 is a legal degenerate scenario (nothing ever harvested)
    assert harvest_amount(5.0, HarvestParams(eta=0.0, source_power=10.0)) == 0.0


def test_credit_accumulates():
    relay = RelayState(0, 10.0)
    credit(relay, 2.5)
    credit(relay, 0.0)
    assert relay.battery == 12.5


def test_credit_rejects_transmitting_relay():
    relay = RelayState(0, 10.0, status=RelayStatus.TRANSMITTING)
    with pytest.raises(InvariantError):
        credit(relay, 1.0)


def test_credit_rejects_negative_amount():
    with pytest.raises(InvariantError):
        credit(RelayState(0, 10.0), -1.0)


def test_debit_spends_when_affordable():
    relay = RelayState(0, 10.0)
    assert debit_for_tx(relay, 4.0) is relay
    assert relay.battery == 6.0


def test_debit_allows_exact_sufficiency():
    relay = RelayState(0, 10.0)
    assert debit_for_tx(relay, 10.0) is relay
    assert relay.battery == 0.0


def test_debit_refuses_and_leaves_battery_untouched():
    relay = RelayState(0, 3.0)
    assert debit_for_tx(relay, 3.0000001) is None
    assert relay.battery == 3.0


def test_debit_rejects_negative_cost():
    with pytest.raises(InvariantError):
        debit_for_tx(RelayState(0, 3.0), -1.0)


@given(
    battery=st.floats(min_value=0.0, max_value=1e6),
    credits=st.lists(st.floats(min_value=0.0, max_value=1e3), max_size=20),
    cost=st.floats(min_value=0.0, max_value=1e6),
)
def test_battery_never_goes_negative(battery, credits, cost):
    """Credits then one debit attempt can never leave a negative battery."""
    relay = RelayState(0, battery)
    for amount in credits:
        credit(relay, amount)
    debit_for_tx(relay, cost)
    assert relay.battery >= 0.0
