"""Slot-by-slot simulation of the relay network.

Each slot runs a fixed sequence of phases:

1. FORWARD: if last slot designated a forwarder for the previous message,
   it transmits to the destination now and is unavailable for anything else
   this slot. Under "srs" the relay (picked last slot) sends at fixed power
   and the message fails if the destination link rate falls short; under
   "mrs" the forwarder is picked now from last slot's decoders using fresh
   destination CSI and channel-inversion power, so a feasible pick always
   succeeds.
2. DESIGNATE: among non-transmitting relays, pick who listens to this
   slot's broadcast, either the single affordable energy-richest relay
   (srs) or the M energy-richest (mrs).
3. BROADCAST: the source transmits. Listeners attempt to decode; idle
   relays harvest the RF energy instead. Listening and transmitting relays
   harvest nothing.
4. ADVANCE: statuses clear; decode results carry to the next slot's
   FORWARD phase.

Under the default "pipelined" schedule the source broadcasts every slot
(the previous forwarder simply misses the current broadcast, mimicking
full duplex). Under "framed", broadcasts happen on even slots and forwards
on odd slots only, one message per two slots with no overlap, which makes
outage probabilities exactly computable and is used for oracle validation.

Every slot consumes exactly 2N uniform draws (N source->relay gains, then
N relay->destination gains) no matter what the policy does with them, so a
seed fully determines the gain field and common-random-number couplings
across parameter values are exact.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from swiptrelay import __version__
from swiptrelay.channel import (
    LinkBudget,
    dbw_to_watts,
    gain_stream,
    min_gain_for_rate,
)
from swiptrelay.errors import ConfigError, InvariantError
from swiptrelay.policies import Candidate, mrs_final_select, mrs_preselect, srs_select
from swiptrelay.relay import (
    HarvestParams,
    RelayState,
    RelayStatus,
    credit,
    debit_for_tx,
    harvest_amount,
)

SRS = "srs"
MRS = "mrs"
PIPELINED = "pipelined"
FRAMED = "framed"

LEDGER_TOL = 1e-9  # absolute per-slot energy-balance tolerance in debug mode


class Outcome(enum.Enum):
    """Result of one message attempt."""

    SUCCESS = "success"
    # srs: no relay could afford one fixed-power transmission
    NO_CANDIDATE = "no_candidate"
    # srs: a rate-threshold decode failed, at the relay or at the destination
    DECODE_FAIL = "decode_fail"
    # mrs: no designated listener decoded the broadcast
    NO_DECODER = "no_decoder"
    # mrs: decoders exist but none can afford its inversion energy
    NO_FEASIBLE_POWER = "no_feasible_power"


@dataclass(frozen=True)
class SlotOutcome:
    """One message's resolution."""

    message: int
    result: Outcome


@dataclass
class SimConfig:
    """All scenario parameters for one simulation run.

    Power levels are accepted in dBW (the conventional unit for these
    scenarios) and converted once; everything internal is watts/joules.
    initial_energy None means ten fixed-power transmissions' worth.
    """

    n_relays: int = 5
    policy: str = SRS
    m: int | None = None            # mrs pre-selection size
    target_rate: float = 1.0        # bits/s/Hz
    eta: float = 0.5                # harvest conversion efficiency
    source_power_dbw: float = 10.0
    relay_power_dbw: float = 10.0   # fixed srs transmit power
    noise_var: float = 1.0          # watts
    distance: float = 1.0           # meters, same for every relay
    slot_duration: float = 1.0      # seconds
    initial_energy: float | None = None  # joules per relay
    sense_threshold: float = 0.0    # joules
    n_slots: int = 20000
    warmup_slots: int = 0
    seed: int = 0
    schedule: str = PIPELINED

    @property
    def source_power_w(self) -> float:
        return dbw_to_watts(self.source_power_dbw)

    @property
    def relay_power_w(self) -> float:
        return dbw_to_watts(self.relay_power_dbw)

    @property
    def fixed_tx_energy(self) -> float:
        """Energy of one fixed-power (srs) transmission, joules."""
        return self.relay_power_w * self.slot_duration

    @property
    def initial_energy_j(self) -> float:
        if self.initial_energy is not None:
            return self.initial_energy
        return 10.0 * self.fixed_tx_energy

    def validate(self) -> "SimConfig":
        if not isinstance(self.n_relays, int) or self.n_relays < 1:
            raise ConfigError(f"n_relays must be a positive integer, got {self.n_relays}")
        if self.policy not in (SRS, MRS):
            raise ConfigError(f"policy must be '{SRS}' or '{MRS}', got {self.policy!r}")
        if self.policy == MRS:
            if self.m is None:
                raise ConfigError("m required for mrs")
            if not isinstance(self.m, int) or not 1 <= self.m <= self.n_relays:
                raise ConfigError(f"m must be an integer in [1, n_relays], got {self.m}")
        elif self.m is not None:
            raise ConfigError("m is only valid for policy 'mrs'")
        if not (math.isfinite(self.target_rate) and self.target_rate >= 0):
            raise ConfigError(f"target_rate must be >= 0, got {self.target_rate}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must be in [0, 1], got {self.eta}")
        for key in ("source_power_dbw", "relay_power_dbw"):
            if not math.isfinite(getattr(self, key)):
                raise ConfigError(f"{key} must be finite, got {getattr(self, key)}")
        if self.noise_var <= 0:
            raise ConfigError(f"noise_var must be > 0, got {self.noise_var}")
        if self.distance <= 0:
            raise ConfigError(f"distance must be > 0, got {self.distance}")
        if self.slot_duration <= 0:
            raise ConfigError(f"slot_duration must be > 0, got {self.slot_duration}")
        if self.initial_energy is not None and self.initial_energy < 0:
            raise ConfigError(f"initial_energy must be >= 0, got {self.initial_energy}")
        if self.sense_threshold < 0:
            raise ConfigError(f"sense_threshold must be >= 0, got {self.sense_threshold}")
        if not isinstance(self.n_slots, int) or self.n_slots < 1:
            raise ConfigError(f"n_slots must be a positive integer, got {self.n_slots}")
        if not isinstance(self.warmup_slots, int) or self.warmup_slots < 0:
            raise ConfigError(f"warmup_slots must be a non-negative integer, got {self.warmup_slots}")
        if self.warmup_slots >= self.n_slots:
            raise ConfigError(
                f"warmup_slots must be < n_slots, got {self.warmup_slots} >= {self.n_slots}"
            )
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.schedule not in (PIPELINED, FRAMED):
            raise ConfigError(
                f"schedule must be '{PIPELINED}' or '{FRAMED}', got {self.schedule!r}"
            )
        return self

    # -- message accounting ------------------------------------------------

    def total_messages(self) -> int:
        """Messages broadcast over the whole run (every one gets an outcome)."""
        if self.schedule == PIPELINED:
            return self.n_slots
        return (self.n_slots + 1) // 2

    def warmup_messages(self) -> int:
        """Messages whose broadcast slot falls inside the warmup window."""
        if self.schedule == PIPELINED:
            return self.warmup_slots
        return (self.warmup_slots + 1) // 2

    def message_count(self) -> int:
        """Post-warmup messages this run will produce."""
        return self.total_messages() - self.warmup_messages()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key: {sorted(unknown)[0]}")
        return cls(**data)


def slots_for_messages(messages: int, warmup_slots: int, schedule: str) -> int:
    """Slot count that yields exactly `messages` post-warmup messages."""
    if messages < 1:
        raise ConfigError(f"messages must be >= 1, got {messages}")
    if schedule == PIPELINED:
        return warmup_slots + messages
    return warmup_slots + 2 * messages


@dataclass
class _Pending:
    """A broadcast message awaiting its FORWARD phase."""

    message: int
    decoder_ids: tuple[int, ...]  # srs: the single designated decoder


class _Trial:
    """Mutable state for one run; step() advances it one slot."""

    def __init__(self, config: SimConfig):
        self.cfg = config
        self.relays = [
            RelayState(i, config.initial_energy_j) for i in range(config.n_relays)
        ]
        self.harvest = HarvestParams(
            eta=config.eta,
            source_power=config.source_power_w,
            slot_duration=config.slot_duration,
            distance=config.distance,
            sense_threshold=config.sense_threshold,
        )
        source_budget = LinkBudget(
            config.source_power_w, config.noise_var, config.distance
        )
        relay_budget = LinkBudget(config.relay_power_w, config.noise_var, config.distance)
        # gain thresholds equivalent to "link rate >= target rate"
        self.decode_min_gain = min_gain_for_rate(config.target_rate, source_budget)
        self.forward_min_gain = min_gain_for_rate(config.target_rate, relay_budget)
        self.fixed_cost = config.fixed_tx_energy
        self.pending: _Pending | None = None
        self.next_message = 0

    def _view(self) -> list[Candidate]:
        return [
            Candidate(r.id, r.battery, r.status is RelayStatus.IDLE)
            for r in self.relays
        ]

    def step(
        self,
        slot: int,
        g_sl: Sequence[float],
        g_ld: Sequence[float],
        want_record: bool = False,
        check: bool = False,
    ) -> tuple[list[tuple[int, Outcome]], dict | None]:
        """Run one slot; returns resolved (message, outcome) pairs and,
        when requested, a trace record."""
        cfg = self.cfg
        relays = self.relays
        mrs = cfg.policy == MRS
        # the slot after the last one is the forward-only drain slot
        do_forward = cfg.schedule == PIPELINED or slot % 2 == 1 or slot >= cfg.n_slots
        do_broadcast = slot < cfg.n_slots and (
            cfg.schedule == PIPELINED or slot % 2 == 0
        )

        if check:
            energy_before = sum(r.battery for r in relays)
        resolved: list[tuple[int, Outcome]] = []
        forwarder: int | None = None
        tx_power: float | None = None
        designated: list[int] = []
        decoded: list[int] = []
        harvested = 0.0
        debited = 0.0

        # 1. FORWARD: resolve the previous broadcast, if any
        if do_forward and self.pending is not None:
            msg = self.pending.message
            lam = self.pending.decoder_ids
            if not mrs:
                rid = lam[0]
                relay = relays[rid]
                if debit_for_tx(relay, self.fixed_cost) is None:
                    raise InvariantError(
                        f"designated relay {rid} cannot pay the fixed cost it was vetted for"
                    )
                debited += self.fixed_cost
                relay.status = RelayStatus.TRANSMITTING
                forwarder, tx_power = rid, cfg.relay_power_w
                ok = g_ld[rid] >= self.forward_min_gain
                resolved.append((msg, Outcome.SUCCESS if ok else Outcome.DECODE_FAIL))
            elif not lam:
                resolved.append((msg, Outcome.NO_DECODER))
            else:
                pick = mrs_final_select(
                    lam,
                    self._view(),
                    {rid: g_ld[rid] for rid in lam},
                    cfg.target_rate,
                    cfg.noise_var,
                    cfg.distance,
                    cfg.slot_duration,
                )
                if pick is None:
                    resolved.append((msg, Outcome.NO_FEASIBLE_POWER))
                else:
                    rid, power, cost = pick
                    relay = relays[rid]
                    if debit_for_tx(relay, cost) is None:
                        raise InvariantError(
                            f"relay {rid} selected with unaffordable cost {cost}"
                        )
                    debited += cost
                    relay.status = RelayStatus.TRANSMITTING
                    forwarder, tx_power = rid, power
                    # inversion power meets the rate by construction
                    resolved.append((msg, Outcome.SUCCESS))
            self.pending = None

        # 2. DESIGNATE + 3. BROADCAST
        if do_broadcast:
            msg = self.next_message
            self.next_message += 1
            view = self._view()
            if mrs:
                designated = sorted(mrs_preselect(view, cfg.m))
            else:
                pick = srs_select(view, self.fixed_cost)
                if pick is None:
                    resolved.append((msg, Outcome.NO_CANDIDATE))
                else:
                    designated = [pick]
            for rid in designated:
                relays[rid].status = RelayStatus.LISTENING
            decoded = [rid for rid in designated if g_sl[rid] >= self.decode_min_gain]
            for relay in relays:
                if relay.status is RelayStatus.IDLE:
                    amount = harvest_amount(g_sl[relay.id], self.harvest)
                    credit(relay, amount)
                    harvested += amount
            if mrs:
                self.pending = _Pending(msg, tuple(decoded))
            elif designated:
                if decoded:
                    self.pending = _Pending(msg, (decoded[0],))
                else:
                    # relay could not decode; no transmission, no energy spent
                    resolved.append((msg, Outcome.DECODE_FAIL))

        if check:
            self._check_slot(slot, energy_before, harvested, debited, forwarder, designated)

        # 4. ADVANCE
        for relay in relays:
            relay.status = RelayStatus.IDLE

        record = None
        if want_record:
            record = {
                "slot": slot,
                "g_sl": list(g_sl),
                "g_ld": list(g_ld),
                "forwarder": forwarder,
                "tx_power": tx_power,
                "designated": designated,
                "decoded": decoded,
                "outcomes": [[msg, res.value] for msg, res in resolved],
                "battery": [relay.battery for relay in relays],
            }
        return resolved, record

    def _check_slot(self, slot, energy_before, harvested, debited, forwarder, designated):
        transmitting = [r.id for r in self.relays if r.status is RelayStatus.TRANSMITTING]
        if len(transmitting) > 1:
            raise InvariantError(f"slot {slot}: multiple transmitters {transmitting}")
        if forwarder is not None and forwarder in designated:
            raise InvariantError(f"slot {slot}: transmitter {forwarder} was designated")
        for relay in self.relays:
            if relay.battery < 0:
                raise InvariantError(
                    f"slot {slot}: relay {relay.id} battery negative ({relay.battery})"
                )
        balance = sum(r.battery for r in self.relays) - energy_before - harvested + debited
        if abs(balance) > LEDGER_TOL:
            raise InvariantError(f"slot {slot}: energy ledger off by {balance}")


def run_trial(
    config: SimConfig,
    *,
    trace_path=None,
    check_invariants: bool = False,
) -> list[SlotOutcome]:
    """Simulate one seeded run and return post-warmup message outcomes.

    Output is a pure function of the config (seed included): same config,
    same outcomes, bit for bit. With trace_path set, one JSON record per
    slot is written (config header first) for later replay_check.
    """
    config.validate()
    trial = _Trial(config)
    rng = gain_stream(config.seed)
    n = config.n_relays
    warmup = config.warmup_messages()
    outcomes: list[SlotOutcome] = []
    writer = open(trace_path, "w", newline="\n") if trace_path is not None else None
    try:
        if writer is not None:
            header = {"kind": "config", "version": __version__, "config": config.to_dict()}
            writer.write(json.dumps(header) + "\n")
        slot = 0
        while slot < config.n_slots or trial.pending is not None:
            gains = -np.log1p(-rng.random(2 * n))
            resolved, record = trial.step(
                slot,
                gains[:n].tolist(),
                gains[n:].tolist(),
                want_record=writer is not None,
                check=check_invariants,
            )
            for msg, result in resolved:
                if msg >= warmup:
                    outcomes.append(SlotOutcome(msg, result))
            if writer is not None:
                writer.write(json.dumps(record) + "\n")
            slot += 1
    finally:
        if writer is not None:
            writer.close()
    return outcomes


@dataclass(frozen=True)
class ReplayResult:
    """Outcome of re-running a trace through the update rules."""

    ok: bool
    divergent_slot: int | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


_REPLAY_FIELDS = ("forwarder", "tx_power", "designated", "decoded", "outcomes", "battery")


def replay_check(trace_path) -> ReplayResult:
    """Recompute every state transition of a trace from its recorded gains.

    Returns ok=True iff selections, outcomes, and batteries match the
    recorded values bit-exactly; otherwise reports the first divergent slot.
    """
    with open(trace_path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        return ReplayResult(False, None, "empty trace")
    header = json.loads(lines[0])
    if header.get("kind") != "config":
        return ReplayResult(False, None, "missing config header")
    config = SimConfig.from_dict(header["config"]).validate()
    trial = _Trial(config)
    expected_slot = 0
    for line in lines[1:]:
        rec = json.loads(line)
        slot = rec["slot"]
        if slot != expected_slot:
            return ReplayResult(False, slot, f"expected slot {expected_slot}")
        _, computed = trial.step(slot, rec["g_sl"], rec["g_ld"], want_record=True)
        for key in _REPLAY_FIELDS:
            if computed[key] != rec.get(key):
                return ReplayResult(
                    False, slot, f"{key}: recomputed {computed[key]!r} != recorded {rec.get(key)!r}"
                )
        expected_slot += 1
    if trial.pending is not None:
        return ReplayResult(False, expected_slot, "trace ends with an unresolved message")
    return ReplayResult(True)
