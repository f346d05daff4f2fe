"""Command line interface.

    intcp run --scenario <name> [--config params.json] --seed N --out DIR
    intcp run --config scenario.json --seed N --out DIR
    intcp gen-traces --gs LAT,LON --gs LAT,LON --duration-s 600 --out DIR
    intcp list-scenarios

Exit codes: 0 success, 2 configuration error, 3 delivery failure (a flow
exhausted its retransmission budget).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import constellation as cst
from .harness import SCENARIOS, SCENARIO_HELP, ConfigError, run_scenario
from .retrans import FlowFailed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FLOW_FAILED = 3


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _cmd_run(args: argparse.Namespace) -> int:
    params = _load_json(args.config) if args.config else {}
    if args.scenario:
        builder = SCENARIOS.get(args.scenario)
        if builder is None:
            raise ConfigError("--scenario", f"unknown scenario {args.scenario!r}; "
                              f"see `intcp list-scenarios`")
        kwargs = dict(params.get("params", {}))
        if args.transport:
            kwargs["transport"] = args.transport
        if args.seed is not None:
            kwargs["seed"] = args.seed
        if args.duration_s is not None:
            kwargs["duration_s"] = args.duration_s
        cfg = builder(**kwargs)
        for key, value in params.items():
            if key != "params":
                cfg[key] = value
    else:
        if not params:
            raise ConfigError("--config", "a scenario name or a config file is required")
        cfg = params
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.transport:
            cfg["transport"] = args.transport
        if args.duration_s is not None:
            cfg["duration_s"] = args.duration_s

    result = run_scenario(cfg, out_dir=args.out)
    summary = result.summary
    for fid, info in sorted(summary["flows"].items()):
        mean = info["mean_throughput_bps"]
        print(f"{fid}: {mean / 1e6:.3f} Mbit/s mean, {info['bytes_delivered']} bytes delivered")
    if args.out:
        print(f"wrote {Path(args.out) / 'summary.json'}")
    if result.failed:
        print("error: at least one flow failed delivery", file=sys.stderr)
        return EXIT_FLOW_FAILED
    return EXIT_OK


def _cmd_gen_traces(args: argparse.Namespace) -> int:
    if len(args.gs) < 2:
        raise ConfigError("--gs", "need at least two ground stations (lat,lon)")
    ground = []
    for i, spec in enumerate(args.gs):
        try:
            lat, lon = (float(x) for x in spec.split(","))
        except ValueError as exc:
            raise ConfigError(f"--gs[{i}]", f"expected LAT,LON, got {spec!r}") from exc
        ground.append(cst.GroundStation(lat, lon, min_elevation_deg=args.min_elevation,
                                        name=f"gs{i}"))
    params = _load_json(args.config) if args.config else {}
    ccfg = cst.ConstellationConfig(**params.get("constellation", {}))
    schedule, snapshots = cst.route_schedule(ccfg, ground, args.duration_s, args.dt_s)
    trace = cst.export_route_trace(ccfg, ground, schedule, snapshots)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "route_trace.json"
    path.write_text(json.dumps(trace, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(trace['intervals'])} route intervals, "
          f"{len(trace['links'])} links)")
    return EXIT_OK


def _cmd_list(_: argparse.Namespace) -> int:
    for name in sorted(SCENARIOS):
        print(f"{name:24s} {SCENARIO_HELP.get(name, '')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intcp", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("--scenario", help="registered scenario name")
    run.add_argument("--config", help="JSON file: scenario params or a full config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", help="output directory for CSV + summary.json")
    run.add_argument("--transport", choices=("intcp", "intcp-uni", "reno", "hybla"))
    run.add_argument("--duration-s", type=float, default=None)
    run.set_defaults(fn=_cmd_run)

    gen = sub.add_parser("gen-traces", help="emit constellation route/link traces")
    gen.add_argument("--gs", action="append", default=[], metavar="LAT,LON")
    gen.add_argument("--config", help="JSON file with a 'constellation' section")
    gen.add_argument("--duration-s", type=float, default=600.0)
    gen.add_argument("--dt-s", type=float, default=10.0)
    gen.add_argument("--min-elevation", type=float, default=25.0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=_cmd_gen_traces)

    ls = sub.add_parser("list-scenarios", help="list registered scenarios")
    ls.set_defaults(fn=_cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlowFailed as exc:
        print(f"flow failed: {exc}", file=sys.stderr)
        return EXIT_FLOW_FAILED


if __name__ == "__main__":
    sys.exit(main())
