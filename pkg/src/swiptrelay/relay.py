"""Per-relay battery ledger: harvest credits and transmission debits.

Batteries are unbounded (infinite capacity, no leakage). A debit never
drives a battery negative: insufficiency is reported to the caller instead
of committed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from swiptrelay.channel import PATH_LOSS_EXP
from swiptrelay.errors import ConfigError, InvariantError


class RelayStatus(enum.Enum):
    IDLE = "idle"
    LISTENING = "listening"
    TRANSMITTING = "transmitting"


@dataclass
class RelayState:
    """One relay's battery (joules) and role in the current slot."""

    id: int
    battery: float
    status: RelayStatus = RelayStatus.IDLE


@dataclass(frozen=True)
class HarvestParams:
    """Parameters of the RF harvesting model.

    eta is the conversion efficiency of the receiver circuit. Signals whose
    harvestable energy falls below sense_threshold cannot be sensed and
    yield nothing. eta = 0 is allowed as the degenerate no-harvest scenario.
    """

    eta: float
    source_power: float
    slot_duration: float = 1.0
    distance: float = 1.0
    sense_threshold: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must be in [0, 1], got {self.eta}")
        if self.source_power < 0:
            raise ConfigError(f"source_power must be >= 0, got {self.source_power}")
        if self.slot_duration <= 0:
            raise ConfigError(f"slot_duration must be > 0, got {self.slot_duration}")
        if self.distance <= 0:
            raise ConfigError(f"distance must be > 0, got {self.distance}")
        if self.sense_threshold < 0:
            raise ConfigError(f"sense_threshold must be >= 0, got {self.sense_threshold}")


def harvest_amount(gain_sq: float, params: HarvestParams) -> float:
    """Energy (joules) one relay harvests from the broadcast in one slot."""
    energy = (
        params.eta
        * params.source_power
        * gain_sq
        * params.slot_duration
        / params.distance**PATH_LOSS_EXP
    )
    return energy if energy >= params.sense_threshold else 0.0


def credit(relay: RelayState, amount: float) -> RelayState:
    """Add harvested energy to the battery. Transmitting relays cannot harvest."""
    if relay.status is RelayStatus.TRANSMITTING:
        raise InvariantError(f"relay {relay.id} credited while transmitting")
    if amount < 0:
        raise InvariantError(f"negative credit {amount} for relay {relay.id}")
    relay.battery += amount
    return relay


def debit_for_tx(relay: RelayState, cost: float) -> RelayState | None:
    """Spend transmission energy if the battery covers it.

    Returns the updated relay, or None (battery untouched) when the cost is
    unaffordable. Exact sufficiency (battery == cost) is allowed.
    """
    if cost < 0:
        raise InvariantError(f"negative debit {cost} for relay {relay.id}")
    if relay.battery < cost:
        return None
    relay.battery -= cost
    return relay
