"""Monte Carlo simulator for outage probability of RF-powered
decode-and-forward relay selection."""

__version__ = "0.1.0"

from swiptrelay.channel import (
    LinkBudget,
    dbw_to_watts,
    draw_gain,
    gain_stream,
    inversion_power,
    link_rate,
    min_gain_for_rate,
)
from swiptrelay.engine import (
    Outcome,
    ReplayResult,
    SimConfig,
    SlotOutcome,
    replay_check,
    run_trial,
    slots_for_messages,
)
from swiptrelay.errors import ConfigError, InvariantError
from swiptrelay.harness import (
    MStarResult,
    OutageEstimate,
    PolicyComparison,
    SweepResult,
    SweepSpec,
    compare_policies,
    estimate_outage,
    optimize_m,
    sweep,
)
from swiptrelay.policies import mrs_final_select, mrs_preselect, srs_select
from swiptrelay.relay import HarvestParams, RelayState, RelayStatus, harvest_amount

__all__ = [
    "ConfigError",
    "HarvestParams",
    "InvariantError",
    "LinkBudget",
    "MStarResult",
    "Outcome",
    "OutageEstimate",
    "PolicyComparison",
    "RelayState",
    "RelayStatus",
    "ReplayResult",
    "SimConfig",
    "SlotOutcome",
    "SweepResult",
    "SweepSpec",
    "__version__",
    "compare_policies",
    "dbw_to_watts",
    "draw_gain",
    "estimate_outage",
    "gain_stream",
    "harvest_amount",
    "inversion_power",
    "link_rate",
    "min_gain_for_rate",
    "mrs_final_select",
    "mrs_preselect",
    "optimize_m",
    "replay_check",
    "run_trial",
    "slots_for_messages",
    "srs_select",
    "sweep",
]
