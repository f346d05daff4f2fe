"""Experiment driver: scenario configs, the runner, and metric wiring.

A scenario is a plain JSON-able dict (see `validate_config` for the schema).
Builders for the standard experiments live in SCENARIOS; `run_scenario`
validates, simulates deterministically under the configured seed, and emits
one CSV per flow plus a summary JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

from . import constellation as cst
from .baseline import MSS, Forwarder, TcpReceiver, TcpSender
from .cc import CcConfig
from .metrics import (
    FlowMetrics,
    MetricSeries,
    dump_summary,
    series_to_csv,
    summarize_series,
)
from .netsim import (
    ConstantSchedule,
    Link,
    PeriodicUpSchedule,
    Simulator,
    SquareWaveSchedule,
    TraceSchedule,
)
from .node import Node, NodeRole, ProtocolConfig
from .ranges import StampMap
from .wire import DataMsg, InterestMsg

TRANSPORTS = ("intcp", "intcp-uni", "reno", "hybla")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- config validation ------------------------------------------------------------


def _require(cfg: dict, key: str, types, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}", "missing required field")
    val = cfg[key]
    if not isinstance(val, types):
        raise ConfigError(f"{path}.{key}", f"expected {types}, got {type(val).__name__}")
    return val


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("$", "config must be an object")
    transport = cfg.get("transport", "intcp")
    if transport not in TRANSPORTS:
        raise ConfigError("$.transport", f"must be one of {TRANSPORTS}")
    duration = _require(cfg, "duration_s", (int, float), "$")
    if duration < 0:
        raise ConfigError("$.duration_s", "must be >= 0")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("$.seed", "must be a non-negative integer")

    nodes = _require(cfg, "nodes", list, "$")
    ids = set()
    for i, n in enumerate(nodes):
        nid = _require(n, "id", int, f"$.nodes[{i}]")
        if nid in ids:
            raise ConfigError(f"$.nodes[{i}].id", f"duplicate node id {nid}")
        ids.add(nid)
        role = _require(n, "role", str, f"$.nodes[{i}]")
        if role not in ("consumer", "producer", "router"):
            raise ConfigError(f"$.nodes[{i}].role", f"unknown role {role!r}")

    links = _require(cfg, "links", list, "$")
    for i, lk in enumerate(links):
        a = _require(lk, "a", int, f"$.links[{i}]")
        b = _require(lk, "b", int, f"$.links[{i}]")
        for end, nm in ((a, "a"), (b, "b")):
            if end not in ids:
                raise ConfigError(f"$.links[{i}].{nm}", f"unknown node {end}")
        if "capacity_bps" not in lk and "capacity" not in lk and "capacity_trace" not in lk:
            raise ConfigError(f"$.links[{i}]", "needs capacity_bps, capacity, or capacity_trace")
        loss = lk.get("loss_prob", 0.0)
        if not isinstance(loss, (int, float)) or not 0.0 <= loss <= 1.0:
            raise ConfigError(f"$.links[{i}].loss_prob", "must be in [0, 1]")
        if "prop_delay_us" not in lk and "prop_delay_trace" not in lk:
            raise ConfigError(f"$.links[{i}]", "needs prop_delay_us or prop_delay_trace")

    flows = _require(cfg, "flows", list, "$")
    if transport in ("reno", "hybla") and len(flows) > 1:
        raise ConfigError("$.flows", f"{transport} supports exactly one flow")
    for i, f in enumerate(flows):
        _require(f, "id", str, f"$.flows[{i}]")
        _require(f, "name", str, f"$.flows[{i}]")
        for side in ("consumer", "producer"):
            nid = _require(f, side, int, f"$.flows[{i}]")
            if nid not in ids:
                raise ConfigError(f"$.flows[{i}].{side}", f"unknown node {nid}")
        total = f.get("total_bytes")
        if total is not None and (not isinstance(total, int) or total < 0):
            raise ConfigError(f"$.flows[{i}].total_bytes", "must be null or a non-negative integer")
    return cfg


def protocol_config(overrides: Optional[dict]) -> ProtocolConfig:
    """Build a ProtocolConfig from flat dotted override keys."""
    cfg = ProtocolConfig(cc=CcConfig())
    if not overrides:
        return cfg
    mapping = {
        "cc.q_low_us": ("cc", "q_low_us"),
        "cc.q_high_us": ("cc", "q_high_us"),
        "cc.q_target_us": ("cc", "q_target_us"),
        "cc.gain": ("cc", "gain"),
        "cc.window_us": ("cc", "window_us"),
        "cc.burst_bytes": ("cc", "burst_bytes"),
        "rto.initial_us": (None, "rto_initial_us"),
        "rto.max_retries": (None, "rto_max_retries"),
        "retrans.hole_threshold": (None, "hole_threshold"),
        "cache_capacity_bytes": (None, "cache_capacity_bytes"),
        "segment_bytes": (None, "segment_bytes"),
        "forward_buffer_bytes": (None, "forward_buffer_bytes"),
        "interest_ttl": (None, "interest_ttl"),
        "request_window_floor_us": (None, "request_window_floor_us"),
        "batch_cap_bytes": (None, "batch_cap_bytes"),
        "rto_poll_interval_us": (None, "rto_poll_interval_us"),
    }
    for key, value in overrides.items():
        if key not in mapping:
            raise ConfigError(f"$.protocol.{key}", "unknown protocol key")
        target, attr = mapping[key]
        obj = cfg.cc if target == "cc" else cfg
        setattr(obj, attr, type(getattr(obj, attr))(value))
    return cfg


# -- link construction ---------------------------------------------------------------


def _capacity_schedule(lk: dict):
    if "capacity_trace" in lk:
        return TraceSchedule([(int(t), float(v)) for t, v in lk["capacity_trace"]])
    if "capacity" in lk:
        spec = lk["capacity"]
        kind = spec.get("kind")
        if kind == "constant":
            return ConstantSchedule(float(spec["bps"]))
        if kind == "square_wave":
            return SquareWaveSchedule(
                float(spec["low_bps"]),
                float(spec["high_bps"]),
                int(spec["period_us"]),
                int(spec.get("phase_offset_us", 0)),
            )
        if kind == "trace":
            return TraceSchedule([(int(t), float(v)) for t, v in spec["points"]])
        raise ConfigError("$.links[].capacity.kind", f"unknown kind {kind!r}")
    return ConstantSchedule(float(lk["capacity_bps"]))


def _up_schedule(lk: dict):
    if "up_trace" in lk:
        return TraceSchedule([(int(t), int(v)) for t, v in lk["up_trace"]])
    spec = lk.get("up")
    if spec is None:
        return ConstantSchedule(1)
    kind = spec.get("kind")
    if kind == "always":
        return ConstantSchedule(1)
    if kind == "periodic":
        period = int(spec["period_us"])
        down = int(spec["down_us"])
        if down <= 0:
            return ConstantSchedule(1)
        if down >= period:
            return ConstantSchedule(0)
        return PeriodicUpSchedule(period, down)
    if kind == "trace":
        return TraceSchedule([(int(t), int(v)) for t, v in spec["points"]])
    raise ConfigError("$.links[].up.kind", f"unknown kind {kind!r}")


def _prop_schedule(lk: dict):
    if "prop_delay_trace" in lk:
        return TraceSchedule([(int(t), int(v)) for t, v in lk["prop_delay_trace"]])
    return ConstantSchedule(int(lk["prop_delay_us"]))


# -- runner ------------------------------------------------------------------------


@dataclass
class RunResult:
    config: dict
    summary: dict
    series: Dict[str, MetricSeries]
    csv: Dict[str, str]
    failed: bool
    sim: Simulator
    nodes: Dict[int, object] = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fid, text in sorted(self.csv.items()):
            (out / f"{fid}.csv").write_text(text)
        (out / "summary.json").write_text(dump_summary(self.summary))


def run_scenario(cfg: dict, out_dir: str | Path | None = None) -> RunResult:
    validate_config(cfg)
    transport = cfg.get("transport", "intcp")
    duration_us = int(float(cfg["duration_s"]) * 1e6)
    seed = cfg.get("seed", 0)
    warmup_s = int(cfg.get("warmup_s", 2))

    sim = Simulator(seed=seed, proc_delay_us=int(cfg.get("proc_delay_us", 0)),
                    horizon_us=duration_us + 120_000_000)
    pcfg = protocol_config(cfg.get("protocol"))

    links: List[Link] = []
    for lk in cfg["links"]:
        link = Link(
            sim,
            lk["a"],
            lk["b"],
            prop_delay=_prop_schedule(lk),
            capacity=_capacity_schedule(lk),
            loss_prob=float(lk.get("loss_prob", 0.0)),
            queue_cap_bytes=int(lk.get("queue_cap_bytes", 256 * 1024)),
            up=_up_schedule(lk),
            name=lk.get("name", f"{lk['a']}-{lk['b']}"),
        )
        sim.add_link(link)
        links.append(link)

    flows_cfg = cfg["flows"]
    stamps: Dict[str, StampMap] = {f["name"]: StampMap() for f in flows_cfg}
    metrics: Dict[str, FlowMetrics] = {f["id"]: FlowMetrics(f["id"]) for f in flows_cfg}
    flows_by_name: Dict[str, List[dict]] = {}
    for f in flows_cfg:
        flows_by_name.setdefault(f["name"], []).append(f)
    egress_bytes: Dict[str, int] = {f["name"]: 0 for f in flows_cfg}

    nodes: Dict[int, object] = {}
    routes = cfg.get("routes", {}).get("static", {})

    def apply_static_routes() -> None:
        for nid_str, table in routes.items():
            nid = int(nid_str)
            node = nodes.get(nid)
            if node is None:
                continue
            for dst_str, nh in table.items():
                node.next_hop[int(dst_str)] = int(nh)

    if transport in ("intcp", "intcp-uni"):
        uni = transport == "intcp-uni"
        for n in cfg["nodes"]:
            role = NodeRole(n["role"])
            cache_on = n.get("cache_enabled")
            if cache_on is None:
                cache_on = not (uni and role == NodeRole.ROUTER)
            node = Node(
                sim, n["id"], role, pcfg,
                cache_enabled=bool(cache_on),
                aggregate_interests=not uni,
            )
            nodes[n["id"]] = node
        for link in links:
            for end in (link.a, link.b):
                nodes[end].attach(link)
        apply_static_routes()

        for f in flows_cfg:
            producer = nodes[f["producer"]]
            producer.register_content(f["name"], f.get("total_bytes"))
            for node in nodes.values():
                if isinstance(node, Node):
                    node.fib[f["name"]] = f["producer"]

        def on_emit(nm, rng, now):
            if nm in egress_bytes:
                egress_bytes[nm] += rng.width
            smap = stamps.get(nm)
            if smap is not None:
                smap.record(rng.start, rng.end, now)

        # One metrics sink per (consumer node, flow name).
        sinks: Dict[int, Dict[str, FlowMetrics]] = {}
        for f in flows_cfg:
            nodes[f["producer"]].on_producer_emit = on_emit
            sinks.setdefault(f["consumer"], {})[f["name"]] = metrics[f["id"]]

        def make_cdata(by_name):
            def on_cdata(flow, d, new_bytes, now):
                fm = by_name.get(flow.name)
                if fm is None or new_bytes <= 0:
                    return
                fm.on_bits(now, new_bytes * 8)
                smap = stamps.get(flow.name)
                stamp = smap.earliest(d.range.start, d.range.end) if smap else None
                if stamp is not None:
                    fm.on_owd(now, now - stamp)
            return on_cdata

        for cid, by_name in sinks.items():
            nodes[cid].on_consumer_data = make_cdata(by_name)

        for f in flows_cfg:
            def start(f=f):
                nodes[f["consumer"]].start_flow(
                    f["name"], f["producer"], f.get("total_bytes"), sim.now_us
                )

            sim.at(int(f.get("start_us", 0)), start, kind="flow_start")

        def on_buffer_drop(name, width, now):
            for f in flows_by_name.get(name, ()):
                metrics[f["id"]].on_loss(now)

        for node in nodes.values():
            if isinstance(node, Node):
                node.on_buffer_drop = on_buffer_drop
    else:
        f = flows_cfg[0]
        fid, name = f["id"], f["name"]
        total = f.get("total_bytes")
        sender = TcpSender(sim, f["producer"], f["consumer"], total, variant=transport, mss=pcfg.segment_bytes)
        receiver = TcpReceiver(sim, f["consumer"], f["producer"])
        nodes[f["producer"]] = sender
        nodes[f["consumer"]] = receiver
        for n in cfg["nodes"]:
            if n["id"] not in nodes:
                nodes[n["id"]] = Forwarder(sim, n["id"])
        for link in links:
            for end in (link.a, link.b):
                nodes[end].attach(link)
        apply_static_routes()

        fm = metrics[fid]
        smap = stamps[name]

        def on_emit(seq, length, retransmit, now):
            egress_bytes[name] += length
            smap.record(seq, seq + length, now)

        sender.on_emit = on_emit

        def on_segment(seq, length, new_bytes, now):
            if new_bytes > 0:
                fm.on_bits(now, new_bytes * 8)

        def on_in_order(start, end, now):
            off = start
            while off < end:
                hi = min(off + pcfg.segment_bytes, end)
                stamp = smap.earliest(off, hi)
                if stamp is not None:
                    fm.on_owd(now, now - stamp)
                off = hi

        receiver.on_segment = on_segment
        receiver.on_in_order = on_in_order
        sim.at(int(f.get("start_us", 0)), lambda: sender.start(sim.now_us), kind="flow_start")

    # Route schedule (constellation traces): swap next-hop tables per interval.
    for interval in cfg.get("route_intervals", ()):  # sorted by from_us
        path = interval.get("path")

        def apply(path=path):
            if not path:
                return
            src, dst = path[0], path[-1]
            for idx, nid in enumerate(path):
                node = nodes.get(nid)
                if node is None:
                    continue
                if idx + 1 < len(path):
                    node.next_hop[dst] = path[idx + 1]
                if idx > 0:
                    node.next_hop[src] = path[idx - 1]

        sim.at(int(interval["from_us"]), apply, kind="link_state")

    # Per-flow per-second loss accounting from link drops.
    def on_drop(link, src, dst, payload, reason):
        name = None
        if isinstance(payload, DataMsg):
            name = payload.name
        elif not isinstance(payload, InterestMsg) and hasattr(payload, "length"):
            name = flows_cfg[0]["name"]  # single TCP flow
        if name is not None:
            for f in flows_by_name.get(name, ()):
                metrics[f["id"]].on_loss(sim.now_us)

    sim.drop_hooks.append(on_drop)

    def on_link_up(link, now):
        for end in (link.a, link.b):
            node = sim.adapters.get(end)
            if node is not None and hasattr(node, "on_link_up"):
                node.on_link_up(link, now)

    sim.link_up_callbacks.append(on_link_up)

    sim.run_until(duration_us)

    # -- summarize -------------------------------------------------------------------

    duration_s = int(math.ceil(duration_us / 1e6)) if duration_us else 0
    series: Dict[str, MetricSeries] = {}
    csv: Dict[str, str] = {}
    failed = False
    flow_summaries: Dict[str, dict] = {}
    for f in flows_cfg:
        fid = f["id"]
        fm = metrics[fid]
        s = fm.finalize(duration_s)
        series[fid] = s
        csv[fid] = series_to_csv(s)
        info = summarize_series(s, warmup_s)
        info["bytes_delivered"] = fm.bytes_delivered
        node = nodes.get(f["consumer"])
        if transport in ("intcp", "intcp-uni"):
            flow = node.flows.get(f["name"]) if isinstance(node, Node) else None
            info["complete"] = bool(flow and flow.complete)
            info["completed_us"] = flow.completed_us if flow else None
            info["failed"] = bool(flow and flow.failed is not None)
            info["duplicate_bytes"] = flow.duplicate_bytes if flow else 0
            info["corrupt_bytes"] = flow.corrupt_bytes if flow else 0
            failed = failed or info["failed"]
        else:
            sender = nodes[f["producer"]]
            info["complete"] = bool(sender.complete)
            info["completed_us"] = sender.completed_us
            info["failed"] = False
        flow_summaries[fid] = info

    summary = {
        "scenario": cfg.get("name", "custom"),
        "transport": transport,
        "seed": seed,
        "duration_s": duration_s,
        "flows": flow_summaries,
        "producer_egress_bytes": dict(sorted(egress_bytes.items())),
        "link_totals": sim.conservation(),
        "route_errors": sum(
            getattr(n, "route_errors", 0) + getattr(n, "no_route", 0) for n in nodes.values()
        ),
        "events_processed": sim.events_processed,
    }
    result = RunResult(cfg, summary, series, csv, failed, sim, nodes)
    if out_dir is not None:
        result.write(out_dir)
    return result


# -- scenario builders ----------------------------------------------------------------


def _two_hop_base(transport: str, duration_s: float, seed: int) -> dict:
    return {
        "name": "two_hop",
        "transport": transport,
        "duration_s": duration_s,
        "seed": seed,
        "nodes": [
            {"id": 1, "role": "consumer"},
            {"id": 2, "role": "router"},
            {"id": 3, "role": "producer"},
        ],
        "routes": {"static": {"1": {"3": 2}, "2": {"1": 1, "3": 3}, "3": {"1": 2}}},
        "flows": [
            {"id": "f0", "name": "bulk", "consumer": 1, "producer": 3,
             "total_bytes": None, "start_us": 0}
        ],
    }


def scenario_two_hop_fluctuation(period_s: float = 10.0, transport: str = "intcp",
                                 duration_s: float = 300.0, seed: int = 1) -> dict:
    cfg = _two_hop_base(transport, duration_s, seed)
    cfg["name"] = f"two_hop_fluctuation_p{period_s:g}_{transport}"
    cfg["links"] = [
        {"a": 3, "b": 2, "capacity_bps": 20e6, "prop_delay_us": 10_000,
         "queue_cap_bytes": 65_536, "name": "ground"},
        {
            "a": 2, "b": 1, "prop_delay_us": 10_000, "name": "gsl",
            "queue_cap_bytes": 65_536,
            "capacity": {
                "kind": "square_wave", "low_bps": 5e6, "high_bps": 35e6,
                "period_us": int(period_s * 1e6),
            },
        },
    ]
    return cfg


def scenario_two_hop_intermittent(downtime_s: float, transport: str = "intcp",
                                  duration_s: float = 120.0, seed: int = 1,
                                  period_s: float = 20.0) -> dict:
    cfg = _two_hop_base(transport, duration_s, seed)
    cfg["name"] = f"two_hop_intermittent_d{downtime_s:g}_{transport}"
    gsl = {
        "a": 2, "b": 1, "capacity_bps": 20e6, "prop_delay_us": 10_000,
        "queue_cap_bytes": 65_536, "name": "gsl",
    }
    if downtime_s > 0:
        gsl["up"] = {
            "kind": "periodic",
            "period_us": int(period_s * 1e6),
            "down_us": int(downtime_s * 1e6),
        }
    cfg["links"] = [
        {"a": 3, "b": 2, "capacity_bps": 20e6, "prop_delay_us": 10_000,
         "queue_cap_bytes": 65_536, "name": "ground"},
        gsl,
    ]
    return cfg


def scenario_two_hop_loss_owd(gsl_rtt_ms: float = 300.0, transport: str = "intcp",
                              duration_s: float = 60.0, seed: int = 1,
                              gsl_loss: float = 0.05) -> dict:
    cfg = _two_hop_base(transport, duration_s, seed)
    cfg["name"] = f"two_hop_loss_owd_r{gsl_rtt_ms:g}_{transport}"
    cfg["links"] = [
        {
            "a": 3, "b": 2, "capacity_bps": 20e6, "name": "gsl",
            "queue_cap_bytes": 65_536,
            "prop_delay_us": int(gsl_rtt_ms / 2 * 1000), "loss_prob": gsl_loss,
        },
        {"a": 2, "b": 1, "capacity_bps": 20e6, "prop_delay_us": 25_000,
         "queue_cap_bytes": 65_536, "name": "ground"},
    ]
    return cfg


BEIJING = cst.GroundStation(39.9042, 116.4074, name="beijing")
NEW_YORK = cst.GroundStation(40.7128, -74.0060, name="new_york")


def _constellation_trace(duration_s: float, dt_s: float = 10.0,
                         cfg: cst.ConstellationConfig | None = None) -> dict:
    ccfg = cfg or cst.ConstellationConfig()
    ground = [BEIJING, NEW_YORK]
    schedule, snapshots = cst.route_schedule(ccfg, ground, duration_s, dt_s)
    return cst.export_route_trace(ccfg, ground, schedule, snapshots)


def config_from_route_trace(trace: dict, transport: str, duration_s: float, seed: int,
                            consumer: int, producer: int, gsl_loss: float,
                            isl_loss: float, name: str) -> dict:
    ground_ids = set(trace["ground_ids"])
    nodes = []
    for nid in trace["nodes"]:
        if nid == consumer:
            role = "consumer"
        elif nid == producer:
            role = "producer"
        else:
            role = "router"
        nodes.append({"id": nid, "role": role})
    links = []
    for lk in trace["links"]:
        is_gsl = lk["a"] in ground_ids or lk["b"] in ground_ids
        links.append(
            {
                "a": lk["a"],
                "b": lk["b"],
                "capacity_trace": lk["capacity_trace"],
                "prop_delay_trace": lk["prop_delay_trace"],
                "up_trace": lk["up_trace"],
                "loss_prob": gsl_loss if is_gsl else isl_loss,
                "name": f"{'gsl' if is_gsl else 'isl'}:{lk['a']}-{lk['b']}",
            }
        )
    return {
        "name": name,
        "transport": transport,
        "duration_s": duration_s,
        "seed": seed,
        "nodes": nodes,
        "links": links,
        "route_intervals": trace["intervals"],
        "flows": [
            {"id": "f0", "name": "bulk", "consumer": consumer, "producer": producer,
             "total_bytes": None, "start_us": 0}
        ],
    }


def scenario_unicast(transport: str = "intcp", duration_s: float = 600.0, seed: int = 1,
                     gsl_loss: float = 0.02, isl_loss: float = 0.005,
                     dt_s: float = 10.0, trace: dict | None = None) -> dict:
    trace = trace or _constellation_trace(duration_s, dt_s)
    # Data travels Beijing -> New York: producer at Beijing, consumer at New York.
    return config_from_route_trace(
        trace, transport, duration_s, seed,
        consumer=2, producer=1, gsl_loss=gsl_loss, isl_loss=isl_loss,
        name=f"unicast_{transport}",
    )


CONSUMER_ID_BASE = 500


def scenario_multicast(n_users: int = 16, transport: str = "intcp",
                       duration_s: float = 60.0, seed: int = 1,
                       gsl_loss: float = 0.02, isl_loss: float = 0.005,
                       access_bps: float = 200e6) -> dict:
    """Users evenly spread along the frozen NY->Beijing route, same content."""
    ccfg = cst.ConstellationConfig()
    ground = [BEIJING, NEW_YORK]
    snap = cst.build_topology(ccfg, ground, 0.0)
    path = cst.dijkstra(snap, 2, 1)  # New York (producer) toward Beijing
    producer = 2

    edge_props = {tuple(sorted((u, v))): (prop, bps) for u, v, _km, prop, bps in snap.edges}
    nodes = [{"id": producer, "role": "producer"}]
    links = []
    for nid in path[1:]:
        nodes.append({"id": nid, "role": "router"})
    for u, v in zip(path, path[1:]):
        prop, bps = edge_props[tuple(sorted((u, v)))]
        is_gsl = u in (1, 2) or v in (1, 2)
        links.append(
            {"a": u, "b": v, "capacity_bps": bps, "prop_delay_us": prop,
             "loss_prob": gsl_loss if is_gsl else isl_loss,
             "name": f"path:{u}-{v}"}
        )

    # Attach points: evenly spaced over the on-path nodes past the producer.
    hosts = path[1:]
    idx = [round((k + 1) * (len(hosts)) / n_users) - 1 for k in range(n_users)]
    idx = [min(max(i, 0), len(hosts) - 1) for i in idx]
    flows = []
    routes: Dict[str, Dict[str, int]] = {}
    for i, nid in enumerate(path):
        table: Dict[str, int] = {}
        if i > 0:
            table[str(producer)] = path[i - 1]
        routes[str(nid)] = table
    for k in range(n_users):
        cid = CONSUMER_ID_BASE + k
        attach = hosts[idx[k]]
        nodes.append({"id": cid, "role": "consumer"})
        links.append(
            {"a": cid, "b": attach, "capacity_bps": access_bps, "prop_delay_us": 2_000,
             "loss_prob": 0.0, "name": f"access:{cid}"}
        )
        routes[str(cid)] = {str(producer): attach}
        flows.append(
            {"id": f"u{k}", "name": "tv", "consumer": cid, "producer": producer,
             "total_bytes": None, "start_us": 50_000 * k}
        )
    return {
        "name": f"multicast_{n_users}_{transport}",
        "transport": transport,
        "duration_s": duration_s,
        "seed": seed,
        "nodes": nodes,
        "links": links,
        "routes": {"static": routes},
        "flows": flows,
    }


SCENARIOS: Dict[str, Callable[..., dict]] = {
    "two_hop_fluctuation": scenario_two_hop_fluctuation,
    "two_hop_intermittent": scenario_two_hop_intermittent,
    "two_hop_loss_owd": scenario_two_hop_loss_owd,
    "unicast": scenario_unicast,
    "multicast": scenario_multicast,
}

SCENARIO_HELP = {
    "two_hop_fluctuation": "square-wave GSL bandwidth vs steady ground link (params: period_s, transport)",
    "two_hop_intermittent": "periodic GSL outages every 20 s (params: downtime_s, transport)",
    "two_hop_loss_owd": "5% GSL loss, swept GSL RTT; OWD bands (params: gsl_rtt_ms, transport)",
    "unicast": "Beijing->New York over the constellation (params: transport, duration_s)",
    "multicast": "n users pulling one content along the route (params: n_users, transport)",
}
