"""Outage estimation, parameter sweeps, and policy comparison.

Sweeps derive one child seed per grid point from the base seed, so results
do not depend on evaluation order or worker count. With crn=True (the
default) the derived seed ignores the rate and pre-selection-size axes:
every point along those axes then sees the identical channel-gain field,
which turns curve comparisons into paired ones and makes the expected
monotonic trends hold sharply at finite sample sizes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from swiptrelay.engine import (
    MRS,
    SRS,
    Outcome,
    SimConfig,
    run_trial,
    slots_for_messages,
)
from swiptrelay.errors import ConfigError


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage probability with a z-sigma binomial halfwidth."""

    outages: int
    messages: int
    p_hat: float
    ci_halfwidth: float


def estimate_outage(
    config: SimConfig, z: float = 3.0, trace_path=None
) -> OutageEstimate:
    """Run one trial and summarize its post-warmup outage count."""
    config.validate()
    if z <= 0:
        raise ConfigError(f"z must be > 0, got {z}")
    messages = config.message_count()
    if messages < 1:
        raise ConfigError("config yields no post-warmup messages")
    outcomes = run_trial(config, trace_path=trace_path)
    outages = sum(1 for o in outcomes if o.result is not Outcome.SUCCESS)
    p_hat = outages / messages
    halfwidth = z * math.sqrt(p_hat * (1.0 - p_hat) / messages)
    return OutageEstimate(outages, messages, p_hat, halfwidth)


def derive_seed(base_seed: int, key: Sequence[int]) -> int:
    """Child seed for one grid point; stable in base seed and coordinates."""
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(key))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass
class SweepSpec:
    """A grid of scenarios around a base config.

    Axes left as None stay at the base value. Grid order is n_relays,
    then eta, then m, then rate (rate varies fastest).
    """

    base: SimConfig
    rates: Sequence[float] | None = None
    etas: Sequence[float] | None = None
    n_relays: Sequence[int] | None = None
    ms: Sequence[int] | None = None
    messages: int = 20000
    z: float = 3.0
    crn: bool = True   # share gain fields across the rate and m axes
    workers: int = 1


@dataclass(frozen=True)
class SweepResult:
    """One grid point: the exact config that ran and its estimate."""

    config: SimConfig
    estimate: OutageEstimate


def _grid_configs(spec: SweepSpec) -> list[SimConfig]:
    base = spec.base
    base.validate()
    if spec.messages < 1:
        raise ConfigError(f"messages must be >= 1, got {spec.messages}")
    if spec.z <= 0:
        raise ConfigError(f"z must be > 0, got {spec.z}")
    if not isinstance(spec.workers, int) or spec.workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {spec.workers}")
    if spec.ms is not None and base.policy != MRS:
        raise ConfigError("ms axis requires policy 'mrs'")
    rates = list(spec.rates) if spec.rates is not None else [base.target_rate]
    etas = list(spec.etas) if spec.etas is not None else [base.eta]
    ns = list(spec.n_relays) if spec.n_relays is not None else [base.n_relays]
    ms = list(spec.ms) if spec.ms is not None else [base.m]
    n_slots = slots_for_messages(spec.messages, base.warmup_slots, base.schedule)
    configs = []
    for i_n, n in enumerate(ns):
        for i_eta, eta in enumerate(etas):
            for i_m, m in enumerate(ms):
                for i_rate, rate in enumerate(rates):
                    key = (i_n, i_eta) if spec.crn else (i_n, i_eta, i_m, i_rate)
                    cfg = replace(
                        base,
                        n_relays=n,
                        eta=eta,
                        m=m,
                        target_rate=rate,
                        n_slots=n_slots,
                        seed=derive_seed(base.seed, key),
                    )
                    configs.append(cfg.validate())
    return configs


def _estimate_job(args: tuple[SimConfig, float]) -> OutageEstimate:
    config, z = args
    return estimate_outage(config, z=z)


def sweep(spec: SweepSpec) -> list[SweepResult]:
    """Estimate outage over the grid; result order matches grid order."""
    configs = _grid_configs(spec)
    if spec.workers == 1:
        estimates = [estimate_outage(cfg, z=spec.z) for cfg in configs]
    else:
        jobs = [(cfg, spec.z) for cfg in configs]
        try:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                estimates = list(pool.map(_estimate_job, jobs))
        except (OSError, PermissionError, BrokenProcessPool):
            # sandboxed environments may forbid subprocesses; results are
            # per-config deterministic, so serial execution is equivalent
            estimates = [estimate_outage(cfg, z=spec.z) for cfg in configs]
    return [SweepResult(cfg, est) for cfg, est in zip(configs, estimates)]


@dataclass(frozen=True)
class MStarResult:
    """Best pre-selection size and the per-size estimates behind it."""

    m_star: int
    results: list[SweepResult]


def optimize_m(
    base: SimConfig,
    m_values: Sequence[int] | None = None,
    messages: int = 20000,
    z: float = 3.0,
    workers: int = 1,
) -> MStarResult:
    """Search pre-selection sizes for the lowest estimated outage.

    All sizes share one gain field (paired comparison); ties go to the
    smaller size, which also costs less coordination.
    """
    base.validate()
    if m_values is None:
        m_values = range(1, base.n_relays + 1)
    m_values = list(m_values)
    if not m_values:
        raise ConfigError("m_values must be non-empty")
    mrs_base = replace(base, policy=MRS, m=m_values[0])
    results = sweep(
        SweepSpec(base=mrs_base, ms=m_values, messages=messages, z=z, workers=workers)
    )
    best = min(range(len(results)), key=lambda i: (results[i].estimate.p_hat, m_values[i]))
    return MStarResult(m_values[best], results)


@dataclass(frozen=True)
class PolicyComparison:
    """Paired outage curves for the three selection variants."""

    rates: list[float]
    m_star: int
    srs: list[SweepResult]
    mrs_single: list[SweepResult]
    mrs_star: list[SweepResult]
    # per rate: estimate orderings hold up to the summed ci halfwidths
    mrs_single_not_worse: list[bool]
    mrs_star_not_worse: list[bool]

    @property
    def consistent(self) -> bool:
        return all(self.mrs_single_not_worse) and all(self.mrs_star_not_worse)


def compare_policies(
    base: SimConfig,
    rates: Sequence[float] | None = None,
    n_points: int = 5,
    messages: int = 20000,
    z: float = 3.0,
    workers: int = 1,
) -> PolicyComparison:
    """Estimate outage vs rate for srs, mrs with M=1, and mrs with M=M*.

    M* is chosen once, at the base config's target rate. All three curves
    share gain fields point by point, so ordering checks are paired.
    """
    base.validate()
    if rates is None:
        if n_points < 2:
            raise ConfigError(f"n_points must be >= 2, got {n_points}")
        rates = np.linspace(0.5, 2.5, n_points).tolist()
    rates = [float(r) for r in rates]
    star = optimize_m(base, messages=messages, z=z, workers=workers)
    variants = {
        SRS: replace(base, policy=SRS, m=None),
        "mrs_single": replace(base, policy=MRS, m=1),
        "mrs_star": replace(base, policy=MRS, m=star.m_star),
    }
    curves = {
        name: sweep(
            SweepSpec(base=cfg, rates=rates, messages=messages, z=z, workers=workers)
        )
        for name, cfg in variants.items()
    }
    single_ok = []
    star_ok = []
    for i in range(len(rates)):
        p_srs = curves[SRS][i].estimate
        p_one = curves["mrs_single"][i].estimate
        p_star = curves["mrs_star"][i].estimate
        single_ok.append(p_one.p_hat <= p_srs.p_hat + p_one.ci_halfwidth + p_srs.ci_halfwidth)
        star_ok.append(p_star.p_hat <= p_one.p_hat + p_star.ci_halfwidth + p_one.ci_halfwidth)
    return PolicyComparison(
        rates=rates,
        m_star=star.m_star,
        srs=curves[SRS],
        mrs_single=curves["mrs_single"],
        mrs_star=curves["mrs_star"],
        mrs_single_not_worse=single_ok,
        mrs_star_not_worse=star_ok,
    )
