"""Relay-selection rules.

Two schemes share one input surface, a snapshot of per-relay candidacy:

* single selection (no destination-link CSI): pick the richest relay that
  can afford one fixed-power transmission, before the broadcast arrives;
* two-step multi selection (destination-link CSI at transmit time): first
  designate the M richest relays as listeners, then, one slot later, pick
  the decoder that keeps the largest battery margin after paying its
  channel-inversion transmit energy.

All functions are pure; every tie breaks toward the lowest relay id so runs
are reproducible.
"""

from __future__ import annotations

from typing import Mapping, NamedTuple, Sequence

from swiptrelay.channel import inversion_power


class Candidate(NamedTuple):
    """Read-only per-relay snapshot. available means idle this slot."""

    id: int
    battery: float
    available: bool


CandidateView = Sequence[Candidate]


def srs_select(view: CandidateView, fixed_cost: float) -> int | None:
    """Relay with the most stored energy among those able to pay fixed_cost.

    Returns None when no available relay can afford the transmission (all
    relays then stay free to harvest).
    """
    best = None
    for cand in view:
        if not cand.available or cand.battery < fixed_cost:
            continue
        if (
            best is None
            or cand.battery > best.battery
            or (cand.battery == best.battery and cand.id < best.id)
        ):
            best = cand
    return None if best is None else best.id


def mrs_preselect(view: CandidateView, m: int) -> set[int]:
    """Ids of the m available relays with the largest stored energy.

    Ties at the boundary go to lower ids. When fewer than m relays are
    available (one may be transmitting), all available relays are taken.
    """
    ranked = sorted(
        (cand for cand in view if cand.available),
        key=lambda cand: (-cand.battery, cand.id),
    )
    return {cand.id for cand in ranked[:m]}


def mrs_final_select(
    decoded_ids: Sequence[int],
    view: CandidateView,
    gains_to_dest: Mapping[int, float],
    target_rate: float,
    noise_var: float,
    distance: float,
    slot_duration: float = 1.0,
) -> tuple[int, float, float] | None:
    """Pick the forwarding relay among the decoders, given destination CSI.

    Each decoder's transmit power is the channel inversion for its own
    destination gain; the pick maximizes battery minus the resulting energy
    cost over decoders that can afford it. Returns (relay id, tx power W,
    energy cost J), or None when no decoder exists or none can pay (a zero
    gain makes that decoder infeasible, not an error).
    """
    batteries = {cand.id: cand.battery for cand in view}
    best = None
    best_margin = None
    for rid in sorted(decoded_ids):
        power = inversion_power(target_rate, gains_to_dest[rid], noise_var, distance)
        cost = power * slot_duration
        battery = batteries[rid]
        if battery < cost:
            continue
        margin = battery - cost
        if best_margin is None or margin > best_margin:
            best = (rid, power, cost)
            best_margin = margin
    return best
