"""Command-line front end.

Subcommands: run (single estimate), sweep (parameter grid), opt-m
(pre-selection size search), compare (policy ordering report), replay
(re-verify a trace file). Parameters merge defaults <- config file <-
flags, rightmost wins. Every table written gets a sidecar manifest;
feeding that manifest back through --config reproduces the table byte
for byte.

Exit codes: 0 success, 1 bad input or a failed replay, 2 a broken
internal invariant.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from swiptrelay import __version__
from swiptrelay.engine import (
    FRAMED,
    MRS,
    PIPELINED,
    SRS,
    SimConfig,
    replay_check,
    slots_for_messages,
)
from swiptrelay.errors import ConfigError, InvariantError
from swiptrelay.harness import (
    SweepSpec,
    compare_policies,
    estimate_outage,
    optimize_m,
    sweep,
)

CSV_COLUMNS = (
    "policy", "n", "m", "eta", "rate", "sigma2", "ps_dbw", "pr_dbw",
    "schedule", "seed", "messages", "outages", "p_out", "ci_halfwidth",
)

# canonical parameter names (as they appear in config files and manifests),
# their types, and their defaults
_SCENARIO_DEFAULTS = {
    "policy": SRS,
    "n": 5,
    "m": None,
    "rate": 1.0,
    "eta": 0.5,
    "sigma2": 1.0,
    "ps_dbw": 10.0,
    "pr_dbw": 10.0,
    "distance": 1.0,
    "slot_duration": 1.0,
    "initial_energy": None,
    "sense_threshold": 0.0,
    "messages": 20000,
    "warmup": 0,
    "seed": 0,
    "schedule": PIPELINED,
}

_COMMAND_DEFAULTS = {
    "run": {"z": 3.0, "format": "csv", "out": None, "trace": None},
    "sweep": {
        "rates": None, "etas": None, "ns": None, "ms": None,
        "z": 3.0, "workers": 1, "crn": True, "format": "csv", "out": None,
    },
    "opt-m": {"ms": None, "z": 3.0, "workers": 1, "format": "csv", "out": None},
    "compare": {
        "rates": None, "n_points": 5,
        "z": 3.0, "workers": 1, "format": "csv", "out": None,
    },
}

_INT_KEYS = {"n", "m", "messages", "warmup", "seed", "workers", "n_points"}
_FLOAT_KEYS = {
    "rate", "eta", "sigma2", "ps_dbw", "pr_dbw", "distance",
    "slot_duration", "initial_energy", "sense_threshold", "z",
}
_STR_KEYS = {"policy", "schedule", "format", "out", "trace"}
_BOOL_KEYS = {"crn"}
_FLOAT_LIST_KEYS = {"rates", "etas"}
_INT_LIST_KEYS = {"ns", "ms"}


def _convert(key: str, value):
    """Coerce a config-file or manifest value to the key's canonical type."""
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            if isinstance(value, bool):
                raise ValueError(value)
            if isinstance(value, int):
                return value
            return int(str(value).strip())
        if key in _FLOAT_KEYS:
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                return float(value)
            return float(str(value).strip())
        if key in _BOOL_KEYS:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("true", "1", "yes"):
                return True
            if text in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if key in _FLOAT_LIST_KEYS or key in _INT_LIST_KEYS:
            elem = int if key in _INT_LIST_KEYS else float
            if isinstance(value, str):
                items = [part.strip() for part in value.split(",") if part.strip()]
            else:
                items = list(value)
            out = [elem(str(item).strip()) if elem is int else elem(item) for item in items]
            if not out:
                raise ValueError("empty list")
            return out
        if key in _STR_KEYS:
            text = str(value)
            if key == "format" and text not in ("csv", "json"):
                raise ValueError(text)
            return text
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {value!r}") from None
    raise ConfigError(f"unknown config key: {key}")


def _read_config_file(path: str) -> dict:
    """Flat key = value text, or a JSON manifest (its params block is used)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON ({exc})") from None
        params = data.get("params", data)
        if not isinstance(params, dict):
            raise ConfigError(f"config file {path}: params must be an object")
        return {str(k).replace("-", "_"): v for k, v in params.items()}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config file {path} line {lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve_params(args: argparse.Namespace, command: str) -> dict:
    """Merge defaults <- config file <- command-line flags."""
    params = dict(_SCENARIO_DEFAULTS)
    params.update(_COMMAND_DEFAULTS[command])
    if command == "run":
        params.pop("trace")  # trace is a flag-only output path, not scenario state
    known = set(params)
    if args.config:
        for key, value in _read_config_file(args.config).items():
            if key not in known:
                raise ConfigError(f"unknown config key: {key}")
            params[key] = _convert(key, value)
    for key in known:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = _convert(key, value)
    if getattr(args, "no_crn", False):
        params["crn"] = False
    return params


def _config_from_params(params: dict) -> SimConfig:
    n_slots = slots_for_messages(
        params["messages"], params["warmup"], params["schedule"]
    )
    return SimConfig(
        n_relays=params["n"],
        policy=params["policy"],
        m=params["m"],
        target_rate=params["rate"],
        eta=params["eta"],
        source_power_dbw=params["ps_dbw"],
        relay_power_dbw=params["pr_dbw"],
        noise_var=params["sigma2"],
        distance=params["distance"],
        slot_duration=params["slot_duration"],
        initial_energy=params["initial_energy"],
        sense_threshold=params["sense_threshold"],
        n_slots=n_slots,
        warmup_slots=params["warmup"],
        seed=params["seed"],
        schedule=params["schedule"],
    ).validate()


def _row(config: SimConfig, estimate) -> dict:
    return {
        "policy": config.policy,
        "n": config.n_relays,
        "m": config.m,
        "eta": config.eta,
        "rate": config.target_rate,
        "sigma2": config.noise_var,
        "ps_dbw": config.source_power_dbw,
        "pr_dbw": config.relay_power_dbw,
        "schedule": config.schedule,
        "seed": config.seed,
        "messages": estimate.messages,
        "outages": estimate.outages,
        "p_out": estimate.p_hat,
        "ci_halfwidth": estimate.ci_halfwidth,
    }


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _out_path(params: dict, command: str) -> Path:
    name = params["out"] or f"{command}.{params['format']}"
    path = Path(name)
    if not path.is_absolute():
        root = os.environ.get("SWIPTRELAY_OUTDIR")
        if root:
            path = Path(root) / path
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(command: str, params: dict, outputs: list[str]) -> dict:
    return {
        "tool": "swiptrelay",
        "version": __version__,
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(),
        "seed": params["seed"],
        "params": params,
        "outputs": outputs,
    }


def emit_results(rows: list[dict], fmt: str, destination: Path, manifest: dict,
                 extra: dict | None = None) -> None:
    """Write the result table plus its sidecar manifest."""
    if not rows:
        raise InvariantError("emit_results called with an empty table")
    if fmt == "csv":
        with open(destination, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow([_cell(row[col]) for col in CSV_COLUMNS])
    else:
        payload = {"manifest": manifest, "results": rows}
        if extra:
            payload.update(extra)
        with open(destination, "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    sidecar = destination.with_name(destination.name + ".manifest.json")
    with open(sidecar, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _cmd_run(args) -> int:
    params = _resolve_params(args, "run")
    config = _config_from_params(params)
    trace = getattr(args, "trace", None)
    trace_path = None
    if trace:
        trace_path = Path(trace)
        if not trace_path.is_absolute():
            root = os.environ.get("SWIPTRELAY_OUTDIR")
            if root:
                trace_path = Path(root) / trace_path
    est = estimate_outage(
        config, z=params["z"],
        trace_path=str(trace_path) if trace_path else None,
    )
    out = _out_path(params, "run")
    outputs = [str(out)] + ([str(trace_path)] if trace_path else [])
    emit_results([_row(config, est)], params["format"], out,
                 _manifest("run", params, outputs))
    print(
        f"p_out={est.p_hat!r} ci_halfwidth={est.ci_halfwidth!r} "
        f"({est.outages}/{est.messages} outages)"
    )
    print(f"wrote {out}")
    return 0


def _cmd_sweep(args) -> int:
    params = _resolve_params(args, "sweep")
    base = _config_from_params(params)
    spec = SweepSpec(
        base=base,
        rates=params["rates"],
        etas=params["etas"],
        n_relays=params["ns"],
        ms=params["ms"],
        messages=params["messages"],
        z=params["z"],
        crn=params["crn"],
        workers=params["workers"],
    )
    results = sweep(spec)
    rows = [_row(r.config, r.estimate) for r in results]
    out = _out_path(params, "sweep")
    emit_results(rows, params["format"], out, _manifest("sweep", params, [str(out)]))
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def _cmd_opt_m(args) -> int:
    params = _resolve_params(args, "opt-m")
    base = _config_from_params(params)
    star = optimize_m(
        base,
        m_values=params["ms"],
        messages=params["messages"],
        z=params["z"],
        workers=params["workers"],
    )
    rows = [_row(r.config, r.estimate) for r in star.results]
    out = _out_path(params, "opt-m")
    emit_results(rows, params["format"], out,
                 _manifest("opt-m", params, [str(out)]),
                 extra={"m_star": star.m_star})
    for r in star.results:
        print(
            f"m={r.config.m:<3d} p_out={r.estimate.p_hat:.6f} "
            f"ci_halfwidth={r.estimate.ci_halfwidth:.6f}"
        )
    print(f"m_star={star.m_star}")
    print(f"wrote {out}")
    return 0


def _cmd_compare(args) -> int:
    params = _resolve_params(args, "compare")
    base = _config_from_params(params)
    report = compare_policies(
        base,
        rates=params["rates"],
        n_points=params["n_points"],
        messages=params["messages"],
        z=params["z"],
        workers=params["workers"],
    )
    results = report.srs + report.mrs_single + report.mrs_star
    rows = [_row(r.config, r.estimate) for r in results]
    out = _out_path(params, "compare")
    extra = {
        "m_star": report.m_star,
        "mrs_single_not_worse": report.mrs_single_not_worse,
        "mrs_star_not_worse": report.mrs_star_not_worse,
        "consistent": report.consistent,
    }
    emit_results(rows, params["format"], out,
                 _manifest("compare", params, [str(out)]), extra=extra)
    print(f"m_star={report.m_star}")
    print("rate      srs         mrs(1)      mrs(m*)     ordering")
    for i, rate in enumerate(report.rates):
        marks = (
            ("ok" if report.mrs_single_not_worse[i] else "VIOLATED")
            + "/"
            + ("ok" if report.mrs_star_not_worse[i] else "VIOLATED")
        )
        print(
            f"{rate:<8.3f}  {report.srs[i].estimate.p_hat:<10.6f}  "
            f"{report.mrs_single[i].estimate.p_hat:<10.6f}  "
            f"{report.mrs_star[i].estimate.p_hat:<10.6f}  {marks}"
        )
    print(f"ordering consistent: {report.consistent}")
    print(f"wrote {out}")
    return 0


def _cmd_replay(args) -> int:
    result = replay_check(args.trace)
    if result.ok:
        print(f"replay ok: {args.trace}")
        return 0
    where = "" if result.divergent_slot is None else f" at slot {result.divergent_slot}"
    print(f"replay failed{where}: {result.detail}", file=sys.stderr)
    return 1


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for broken
    invariants, so usage errors exit 1 instead."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="key = value file or a previously written manifest")
    parser.add_argument("--policy", choices=(SRS, MRS))
    parser.add_argument("--n", type=int, help="number of relays")
    parser.add_argument("--m", type=int, help="mrs pre-selection size")
    parser.add_argument("--rate", type=float, help="target rate, bits/s/Hz")
    parser.add_argument("--eta", type=float, help="harvest efficiency in [0, 1]")
    parser.add_argument("--sigma2", type=float, help="noise variance, watts")
    parser.add_argument("--ps-dbw", type=float, help="source power, dBW")
    parser.add_argument("--pr-dbw", type=float, help="srs relay power, dBW")
    parser.add_argument("--distance", type=float)
    parser.add_argument("--slot-duration", type=float)
    parser.add_argument("--initial-energy", type=float, help="joules per relay")
    parser.add_argument("--sense-threshold", type=float, help="joules")
    parser.add_argument("--messages", type=int, help="post-warmup messages")
    parser.add_argument("--warmup", type=int, help="warmup slots to discard")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--schedule", choices=(PIPELINED, FRAMED))
    parser.add_argument("--z", type=float, help="CI width in binomial sigmas")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--out", metavar="PATH", help="result table destination")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swiptrelay",
                     description="Outage simulator for RF-powered relay selection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single outage estimate")
    _add_scenario_flags(p_run)
    p_run.add_argument("--trace", metavar="PATH", help="write a replayable trace")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="estimate over a parameter grid")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--rates", help="comma-separated rate axis")
    p_sweep.add_argument("--etas", help="comma-separated eta axis")
    p_sweep.add_argument("--ns", help="comma-separated relay-count axis")
    p_sweep.add_argument("--ms", help="comma-separated pre-selection axis (mrs)")
    p_sweep.add_argument("--workers", type=int)
    p_sweep.add_argument("--no-crn", action="store_true",
                         help="independent seeds per grid point")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_opt = sub.add_parser("opt-m", help="search the best mrs pre-selection size")
    _add_scenario_flags(p_opt)
    p_opt.add_argument("--ms", help="comma-separated candidate sizes")
    p_opt.add_argument("--workers", type=int)
    p_opt.set_defaults(func=_cmd_opt_m)

    p_cmp = sub.add_parser("compare", help="srs vs mrs(1) vs mrs(m_star) vs rate")
    _add_scenario_flags(p_cmp)
    p_cmp.add_argument("--rates", help="comma-separated rate axis")
    p_cmp.add_argument("--n-points", type=int, help="rate grid size if --rates unset")
    p_cmp.add_argument("--workers", type=int)
    p_cmp.set_defaults(func=_cmd_compare)

    p_replay = sub.add_parser("replay", help="re-verify a trace file")
    p_replay.add_argument("trace", help="trace file from run --trace")
    p_replay.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"swiptrelay: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"swiptrelay: error: {exc}", file=sys.stderr)
        return 1
    except (InvariantError, AssertionError) as exc:
        print(f"swiptrelay: internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
