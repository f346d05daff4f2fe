"""INTCP node behavior: Consumer, Producer, and Router roles.

Request-response-cache pipeline per hop:

* requester side (toward the content origin): forwards interest holes
  upstream with this node's own computed send rate piggybacked, detects
  byte-range gaps in arriving data and issues ttl=1 recovery interests,
  and suppresses duplicate in-flight upstream requests.
* responder side (toward each downstream neighbor): registers demand in the
  pending-interest registry and pulls demanded bytes out of the content store
  through a token bucket. Data is stamped with its emission time at release,
  so downstream one-way-delay measurements see this hop only.

With caching disabled (the unicast-only ablation) routers become
store-and-forward: arriving data is matched against per-interest demand
entries and pushed through the bounded forward buffer instead.
"""

from __future__ import annotations

import enum
import zlib
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cache import ContentStore, DEFAULT_CAPACITY_BYTES
from .cc import CcConfig, FairAllocator, HopRateController, RATE_MIN_BPS, TokenBucket
from .netsim import Link, Simulator, link_up_at
from .ranges import ByteRange, IntervalSet
from .retrans import (
    HOLE_THRESHOLD,
    INITIAL_RTO_US,
    MAX_RETRIES,
    FlowFailed,
    HoleDetector,
    RtoTable,
    make_seqhole_interest,
)
from .wire import DataMsg, InterestKind, InterestMsg, encoded_size

SEGMENT_BYTES = 1200
DEFAULT_TTL = 64
FORWARD_BUFFER_BYTES = 256 * 1024
REQUEST_WINDOW_FLOOR_US = 200_000
BATCH_CAP_BYTES = 64 * SEGMENT_BYTES
RTO_POLL_INTERVAL_US = 25_000
FLOW_ACTIVE_WINDOW_US = 2_000_000


class NodeRole(enum.Enum):
    CONSUMER = "consumer"
    PRODUCER = "producer"
    ROUTER = "router"


@dataclass
class ProtocolConfig:
    segment_bytes: int = SEGMENT_BYTES
    cache_capacity_bytes: int = DEFAULT_CAPACITY_BYTES
    cc: CcConfig = field(default_factory=CcConfig)
    rto_initial_us: int = INITIAL_RTO_US
    rto_max_retries: int = MAX_RETRIES
    hole_threshold: int = HOLE_THRESHOLD
    interest_ttl: int = DEFAULT_TTL
    forward_buffer_bytes: int = FORWARD_BUFFER_BYTES
    request_window_floor_us: int = REQUEST_WINDOW_FLOOR_US
    batch_cap_bytes: int = BATCH_CAP_BYTES
    rto_poll_interval_us: int = RTO_POLL_INTERVAL_US
    # Routers keep pulling active content ahead of downstream demand so the
    # cache can absorb upstream capacity that the downstream hop cannot take
    # yet (link multiplexing). Bounded by a fraction of the cache.
    prefetch: bool = True
    prefetch_cache_frac: float = 0.5
    prefetch_idle_us: int = 2_000_000


def name_tag(name: str) -> int:
    tag = zlib.crc32(name.encode("utf-8")) & 0xFFFFFFFF
    return (tag << 32) | tag


def synthetic_payload(tag64: int, start: int, end: int) -> bytes:
    """Deterministic source bytes: 8-byte blocks of (block_index XOR tag)."""
    first = start >> 3
    last = (end + 7) >> 3
    arr = np.arange(first, last, dtype=np.uint64)
    arr ^= np.uint64(tag64 & 0xFFFFFFFFFFFFFFFF)
    buf = arr.byteswap().tobytes()
    lo = start - (first << 3)
    return buf[lo : lo + (end - start)]


class ForwardBuffer:
    """Bounded FIFO of DataMsg staged for one downstream hop."""

    __slots__ = ("capacity_bytes", "occupancy_bytes", "_q")

    def __init__(self, capacity_bytes: int = FORWARD_BUFFER_BYTES):
        self.capacity_bytes = capacity_bytes
        self.occupancy_bytes = 0
        self._q: deque[DataMsg] = deque()

    def __len__(self) -> int:
        return len(self._q)

    @property
    def headroom_bytes(self) -> int:
        return self.capacity_bytes - self.occupancy_bytes

    def push(self, msg: DataMsg) -> bool:
        size = msg.range.width
        if self.occupancy_bytes + size > self.capacity_bytes:
            return False
        self._q.append(msg)
        self.occupancy_bytes += size
        return True

    def peek(self) -> Optional[DataMsg]:
        return self._q[0] if self._q else None

    def pop(self) -> DataMsg:
        msg = self._q.popleft()
        self.occupancy_bytes -= msg.range.width
        return msg


class _DemandEntry:
    """Pending-interest registry record for one downstream requester."""

    __slots__ = ("name", "remaining", "prompt")

    def __init__(self, name: str, remaining: IntervalSet, prompt: bool = False):
        self.name = name
        self.remaining = remaining
        self.prompt = prompt  # recovery traffic, served at queue head


class _Prefetch:
    """Per (upstream hop, name) read-ahead cursor at a router."""

    __slots__ = ("next_offset", "demand_frontier", "last_demand_us", "armed",
                 "stalled_pumps")

    def __init__(self, next_offset: int, now_us: int):
        self.next_offset = next_offset
        self.demand_frontier = next_offset
        self.last_demand_us = now_us
        self.armed = False
        self.stalled_pumps = 0


class ConsumerFlow:
    __slots__ = (
        "name", "origin", "total_bytes", "start_us", "rto", "received",
        "next_offset", "complete", "completed_us", "failed", "corrupt_bytes",
        "duplicate_bytes",
    )

    def __init__(self, name: str, origin: int, total_bytes: Optional[int],
                 start_us: int, rto: RtoTable):
        self.name = name
        self.origin = origin
        self.total_bytes = total_bytes
        self.start_us = start_us
        self.rto = rto
        self.received = IntervalSet()
        self.next_offset = 0
        self.complete = False
        self.completed_us: Optional[int] = None
        self.failed: Optional[FlowFailed] = None
        self.corrupt_bytes = 0
        self.duplicate_bytes = 0


class Node:
    """One INTCP-capable node driven entirely by simulator events."""

    def __init__(self, sim: Simulator, addr: int, role: NodeRole,
                 cfg: ProtocolConfig | None = None, cache_enabled: bool = True,
                 aggregate_interests: bool = True):
        self.sim = sim
        self.addr = addr
        self.role = role
        self.cfg = cfg or ProtocolConfig()
        self.cache_enabled = cache_enabled
        self.aggregate_interests = aggregate_interests
        self.store = ContentStore(self.cfg.cache_capacity_bytes) if cache_enabled else None

        self.links: Dict[int, Link] = {}
        self.next_hop: Dict[int, int] = {}
        self.fib: Dict[str, int] = {}

        # responder side, keyed by downstream neighbor
        self._buckets: Dict[int, TokenBucket] = {}
        self._rates: Dict[int, Dict[str, Tuple[float, int]]] = {}
        self._buffers: Dict[int, ForwardBuffer] = {}
        self._demand: Dict[int, List[_DemandEntry]] = {}
        self._pump_wake_us: Dict[int, Optional[int]] = {}

        # requester side, keyed by (upstream neighbor, name)
        self._ctrl: Dict[Tuple[int, str], HopRateController] = {}
        self._detector: Dict[Tuple[int, str], HoleDetector] = {}
        self._inflight_up: Dict[Tuple[int, str], IntervalSet] = {}
        self._command: Dict[Tuple[int, str], Tuple[float, int]] = {}
        self._allocator: Dict[int, FairAllocator] = {}
        self._prefetch: Dict[Tuple[int, str], _Prefetch] = {}

        # producer
        self.content: Dict[str, Optional[int]] = {}
        self._tags: Dict[str, int] = {}

        # consumer
        self.flows: Dict[str, ConsumerFlow] = {}
        self._interest_rx = 0
        self.route_errors = 0
        self.congestion_drops = 0  # forward-buffer overflows, in bytes
        self.on_buffer_drop = None  # fn(name, width, now)

        # harness hooks
        self.on_consumer_data = None  # fn(flow, msg, new_ranges, now)
        self.on_producer_emit = None  # fn(name, rng, now)
        self.on_flow_complete = None  # fn(flow, now)
        self.on_flow_failed = None  # fn(flow, exc, now)

        sim.register(addr, self)

    # -- wiring -----------------------------------------------------------------

    def attach(self, link: Link) -> None:
        self.links[link.other(self.addr)] = link

    def register_content(self, name: str, total_bytes: Optional[int]) -> None:
        self.content[name] = total_bytes
        self._tags[name] = name_tag(name)

    def expected_payload(self, name: str, start: int, end: int) -> bytes:
        tag = self._tags.get(name)
        if tag is None:
            tag = self._tags[name] = name_tag(name)
        return synthetic_payload(tag, start, end)

    @property
    def interests_received(self) -> int:
        return self._interest_rx

    # -- adapter interface --------------------------------------------------------

    def on_packet(self, payload, link: Link, now_us: int) -> None:
        if isinstance(payload, DataMsg):
            self.on_data(payload, now_us)
        elif isinstance(payload, InterestMsg):
            self.on_interest(payload, now_us)

    def on_link_up(self, link: Link, now_us: int) -> None:
        neighbor = link.other(self.addr)
        if neighbor in self._demand or neighbor in self._buffers:
            self._pump(neighbor, now_us)
        for flow in self.flows.values():
            if not flow.complete and flow.failed is None:
                self._top_up(flow, now_us)

    # -- responder side -------------------------------------------------------------

    def _bucket(self, neighbor: int, now_us: int) -> TokenBucket:
        b = self._buckets.get(neighbor)
        if b is None:
            b = TokenBucket(RATE_MIN_BPS, self.cfg.cc.burst_bytes, now_us)
            self._buckets[neighbor] = b
        return b

    def _buffer(self, neighbor: int) -> ForwardBuffer:
        buf = self._buffers.get(neighbor)
        if buf is None:
            buf = ForwardBuffer(self.cfg.forward_buffer_bytes)
            self._buffers[neighbor] = buf
        return buf

    def _set_hop_rate(self, neighbor: int, name: str, rate_bps: float, now_us: int) -> None:
        rates = self._rates.setdefault(neighbor, {})
        rates[name] = (rate_bps, now_us)
        total = 0.0
        for flow_name, (bps, at) in list(rates.items()):
            if now_us - at > FLOW_ACTIVE_WINDOW_US:
                del rates[flow_name]
            else:
                total += bps
        self._bucket(neighbor, now_us).set_rate(max(total, RATE_MIN_BPS), now_us)

    def _register_demand(self, neighbor: int, name: str, rng: ByteRange,
                         prompt: bool = False) -> None:
        entries = self._demand.setdefault(neighbor, [])
        if prompt:
            entry = _DemandEntry(name, IntervalSet([(rng.start, rng.end)]), True)
            entries.insert(0, entry)
            return
        if self.aggregate_interests:
            for entry in entries:
                if entry.name == name and not entry.prompt:
                    entry.remaining.add(rng.start, rng.end)
                    return
        entries.append(_DemandEntry(name, IntervalSet([(rng.start, rng.end)])))

    def _serviceable(self, entry: _DemandEntry, max_bytes: int) -> Optional[Tuple[int, bytes]]:
        """Earliest bytes of the entry we can serve right now."""
        if self.role == NodeRole.PRODUCER and entry.name in self.content:
            total = self.content[entry.name]
            for s, e in entry.remaining:
                if total is not None:
                    e = min(e, total)
                if s < e:
                    hi = min(e, s + max_bytes)
                    return s, self.expected_payload(entry.name, s, hi)
            return None
        if self.store is None:
            return None
        for s, e in entry.remaining:
            hit = self.store.first_hit(entry.name, s, e, max_bytes)
            if hit is not None:
                return hit
        return None

    def _pump(self, neighbor: int, now_us: int) -> None:
        """Release staged and demanded data through the hop's token bucket."""
        link = self.links.get(neighbor)
        if link is None:
            return
        if not link_up_at(link, now_us):
            return  # resumed by on_link_up
        bucket = self._bucket(neighbor, now_us)
        buf = self._buffers.get(neighbor)
        entries = self._demand.get(neighbor)

        while True:
            staged = buf.peek() if buf else None
            if staged is not None:
                wire = encoded_size(staged)
                wake = bucket.try_send(wire, now_us)
                if wake is not None:
                    self._arm_pump(neighbor, wake)
                    return
                msg = buf.pop()
                out = DataMsg(msg.requester, self.addr, msg.name, msg.range, now_us, msg.payload)
                self._emit_data(link, out, now_us)
                continue

            if not entries:
                return
            served = False
            for entry in entries:
                found = self._serviceable(entry, self.cfg.segment_bytes)
                if found is None:
                    continue
                start, payload = found
                rng = ByteRange(start, start + len(payload))
                out = DataMsg(neighbor, self.addr, entry.name, rng, now_us, payload)
                wake = bucket.try_send(encoded_size(out), now_us)
                if wake is not None:
                    self._arm_pump(neighbor, wake)
                    return
                entry.remaining.remove(rng.start, rng.end)
                if not entry.remaining:
                    entries.remove(entry)
                self._emit_data(link, out, now_us)
                served = True
                break
            if not served:
                return  # nothing serviceable until more data arrives

    def _emit_data(self, link: Link, msg: DataMsg, now_us: int) -> None:
        if self.on_producer_emit is not None:
            self.on_producer_emit(msg.name, msg.range, now_us)
        link.transmit(self.addr, msg, encoded_size(msg), now_us)

    def _arm_pump(self, neighbor: int, wake_us: int) -> None:
        armed = self._pump_wake_us.get(neighbor)
        if armed is not None and armed <= wake_us:
            return
        self._pump_wake_us[neighbor] = wake_us

        def fire():
            self._pump_wake_us[neighbor] = None
            self._pump(neighbor, self.sim.now_us)

        self.sim.at(wake_us, fire)

    # -- requester side ----------------------------------------------------------

    def _controller(self, neighbor: int, name: str) -> HopRateController:
        key = (neighbor, name)
        ctrl = self._ctrl.get(key)
        if ctrl is None:
            ctrl = HopRateController(self.cfg.cc)
            self._ctrl[key] = ctrl
        return ctrl

    def _hole_detector(self, neighbor: int, name: str) -> HoleDetector:
        key = (neighbor, name)
        det = self._detector.get(key)
        if det is None:
            det = HoleDetector(self.cfg.hole_threshold)
            self._detector[key] = det
        return det

    def _inflight(self, neighbor: int, name: str) -> IntervalSet:
        key = (neighbor, name)
        s = self._inflight_up.get(key)
        if s is None:
            s = IntervalSet()
            self._inflight_up[key] = s
        return s

    def _headroom_bytes(self, name: str) -> Optional[int]:
        """Absorption room backing the send-rate cap for data of `name`."""
        room: Optional[int] = None
        for neighbor, entries in self._demand.items():
            if any(e.name == name for e in entries):
                buf = self._buffers.get(neighbor)
                head = buf.headroom_bytes if buf else self.cfg.forward_buffer_bytes
                room = head if room is None else min(room, head)
        if self.store is not None:
            cache_room = self.store.capacity_bytes - self.store.used_bytes
            room = cache_room if room is None else min(room, cache_room)
        return room

    def _command_bps(self, neighbor: int, name: str, now_us: int) -> float:
        """Send rate to piggyback upstream; recomputed at most once per window."""
        key = (neighbor, name)
        cached = self._command.get(key)
        if cached is not None and now_us - cached[1] < self.cfg.cc.window_us:
            return cached[0]
        ctrl = self._controller(neighbor, name)
        ctrl.buffer_headroom_bytes = self._headroom_bytes(name)
        rate = ctrl.compute_send_rate(self.cfg.cc.window_us)
        self._command[key] = (rate, now_us)

        # Per-router fairness: split the aggregate evenly across flows that
        # are actively pulling through this upstream hop.
        active = [
            (nb, nm) for (nb, nm), (r, at) in self._command.items()
            if nb == neighbor and now_us - at <= FLOW_ACTIVE_WINDOW_US
        ]
        if len(active) > 1:
            alloc = self._allocator.setdefault(neighbor, FairAllocator())
            aggregate = sum(self._command[k][0] for k in active)
            share = alloc.allocate(aggregate, [nm for _, nm in active])[name]
            rate = share
            self._command[key] = (rate, now_us)
        return rate

    def _rate_kbps(self, rate_bps: float) -> int:
        return max(64, min(int(rate_bps / 1000), 0xFFFFFFFF))

    def _send_interest(self, neighbor: int, msg: InterestMsg, now_us: int) -> bool:
        link = self.links.get(neighbor)
        if link is None:
            self.route_errors += 1
            return False
        if not link_up_at(link, now_us):
            return False  # held; RTO or reconnect callbacks retry
        link.transmit(self.addr, msg, encoded_size(msg), now_us)
        return True

    def _forward_holes(self, i: InterestMsg, holes: List[ByteRange], now_us: int) -> None:
        """Request uncovered ranges from the next hop toward the origin."""
        if not holes:
            return
        origin = self.fib.get(i.name)
        if origin is None:
            self.route_errors += 1
            return
        if origin == self.addr:
            return  # nothing upstream of the producer
        upstream = self.next_hop.get(origin)
        if upstream is None:
            self.route_errors += 1
            return
        ttl = i.ttl - 1
        if ttl < 1:
            return
        inflight = self._inflight(upstream, i.name)
        rate = self._command_bps(upstream, i.name, now_us)
        kbps = self._rate_kbps(rate)
        for hole in holes:
            if i.kind == InterestKind.TIMEOUT_RETRANS:
                # The end-to-end backstop must not be aggregated away by a
                # stale in-flight marker left by an earlier failed request.
                inflight.remove(hole.start, hole.end)
                wanted = [(hole.start, hole.end)]
            else:
                wanted = inflight.holes_in(hole.start, hole.end) if self.aggregate_interests \
                    else [(hole.start, hole.end)]
            for s, e in wanted:
                out = InterestMsg(self.addr, upstream, i.name, ByteRange(s, e), kbps, ttl, i.kind)
                if self._send_interest(upstream, out, now_us):
                    inflight.add(s, e)

    # -- interest handling -----------------------------------------------------------

    def on_interest(self, i: InterestMsg, now_us: int) -> None:
        self._interest_rx += 1
        downstream = i.requester
        self._set_hop_rate(downstream, i.name, i.send_rate_kbps * 1000.0, now_us)

        if self.role == NodeRole.PRODUCER and i.name in self.content:
            total = self.content[i.name]
            end = i.range.end if total is None else min(i.range.end, total)
            if end > i.range.start:
                self._register_demand(
                    downstream, i.name, ByteRange(i.range.start, end),
                    prompt=i.kind == InterestKind.SEQHOLE_RETRANS,
                )
            self._pump(downstream, now_us)
            return

        if self.store is not None:
            holes = self.store.missing_in(i.name, i.range)
        else:
            holes = [i.range]

        if i.kind == InterestKind.SEQHOLE_RETRANS:
            # Hop-local: serve what we hold, drop the rest (ttl exhausted).
            covered = IntervalSet([(i.range.start, i.range.end)])
            for h in holes:
                covered.remove(h.start, h.end)
            for s, e in covered:
                self._register_demand(downstream, i.name, ByteRange(s, e), prompt=True)
        else:
            self._register_demand(downstream, i.name, i.range)
            self._forward_holes(i, holes, now_us)
            if self.role == NodeRole.ROUTER:
                self._note_demand_for_prefetch(i, now_us)
        self._pump(downstream, now_us)

    # -- read-ahead (link multiplexing) -------------------------------------------------

    def _note_demand_for_prefetch(self, i: InterestMsg, now_us: int) -> None:
        """Track live downstream demand and keep the read-ahead cursor armed."""
        if not (self.cfg.prefetch and self.cache_enabled and self.aggregate_interests):
            return
        origin = self.fib.get(i.name)
        if origin is None or origin == self.addr:
            return
        upstream = self.next_hop.get(origin)
        if upstream is None:
            return
        key = (upstream, i.name)
        p = self._prefetch.get(key)
        if p is None:
            p = self._prefetch[key] = _Prefetch(i.range.end, now_us)
        else:
            p.next_offset = max(p.next_offset, i.range.end)
            p.demand_frontier = max(p.demand_frontier, i.range.end)
            p.last_demand_us = now_us
        if not p.armed:
            p.armed = True
            self.sim.after(self.cfg.cc.window_us, lambda: self._prefetch_pump(key))

    def _prefetch_pump(self, key: Tuple[int, str]) -> None:
        p = self._prefetch.get(key)
        if p is None:
            return
        now = self.sim.now_us
        upstream, name = key
        if now - p.last_demand_us > self.cfg.prefetch_idle_us:
            p.armed = False
            return
        budget = int(self.store.capacity_bytes * self.cfg.prefetch_cache_frac)
        inflight = self._inflight(upstream, name)
        rate = self._command_bps(upstream, name, now)
        kbps = self._rate_kbps(rate)
        window = max(
            int(rate * self.cfg.request_window_floor_us / 8e6), self.cfg.segment_bytes
        )
        outstanding = inflight.total
        lead = max(0, p.next_offset - p.demand_frontier)  # read-ahead incl. in-flight
        issued = False
        while outstanding < window and lead < budget:
            batch = min(self.cfg.batch_cap_bytes, window - outstanding)
            batch = max(self.cfg.segment_bytes, batch - batch % self.cfg.segment_bytes)
            rng = ByteRange(p.next_offset, p.next_offset + batch)
            msg = InterestMsg(self.addr, upstream, name, rng, kbps,
                              self.cfg.interest_ttl, InterestKind.INITIAL)
            if not self._send_interest(upstream, msg, now):
                break
            inflight.add(rng.start, rng.end)
            p.next_offset = rng.end
            outstanding += rng.width
            lead += rng.width
            issued = True
        if issued:
            p.stalled_pumps = 0
        else:
            # In-flight markers for data lost upstream never clear by
            # themselves; after a second without progress, forget them and
            # rewind the cursor so the gap is requested again.
            p.stalled_pumps += 1
            if p.stalled_pumps * self.cfg.cc.window_us >= 1_000_000 and inflight:
                rewind = inflight.min_start
                self._inflight_up[(upstream, name)] = IntervalSet()
                if rewind is not None:
                    p.next_offset = rewind
                p.stalled_pumps = 0
        self.sim.after(self.cfg.cc.window_us, lambda: self._prefetch_pump(key))

    # -- data handling ----------------------------------------------------------------

    def on_data(self, d: DataMsg, now_us: int) -> None:
        upstream = d.responder
        wire = encoded_size(d)
        name = d.name

        ctrl = self._controller(upstream, name)
        ctrl.on_data_received(d.timestamp_us, now_us, wire)
        self._inflight(upstream, name).remove(d.range.start, d.range.end)

        holes = self._hole_detector(upstream, name).on_data(d.range)
        if holes:
            rate = self._command_bps(upstream, name, now_us)
            kbps = self._rate_kbps(rate)
            for hole in holes:
                seqhole = make_seqhole_interest(self.addr, upstream, name, hole, kbps)
                self._send_interest(upstream, seqhole, now_us)

        if self.store is not None:
            self.store.insert(name, d.range, d.payload)

        flow = self.flows.get(name)
        if flow is not None and self.role == NodeRole.CONSUMER:
            self._consumer_data(flow, d, now_us)

        if self.store is None:
            # Store-and-forward ablation: copies go straight to the bounded
            # forward buffers; each byte satisfies the oldest matching demand.
            self._push_through(d, now_us)
        else:
            for neighbor, entries in self._demand.items():
                if any(e.name == name for e in entries):
                    self._pump(neighbor, now_us)

    def _push_through(self, d: DataMsg, now_us: int) -> None:
        taken = IntervalSet()
        for neighbor, entries in list(self._demand.items()):
            buf = self._buffer(neighbor)
            for entry in list(entries):
                if entry.name != d.name:
                    continue
                gives: List[Tuple[int, int]] = []
                for s, e in entry.remaining.intersect_span(d.range.start, d.range.end):
                    for gs, ge in taken.holes_in(s, e):
                        gives.append((gs, ge))
                for gs, ge in gives:
                    seg = self.cfg.segment_bytes
                    off = gs
                    while off < ge:
                        hi = min(off + seg, ge)
                        payload = d.payload[off - d.range.start : hi - d.range.start]
                        msg = DataMsg(neighbor, self.addr, d.name, ByteRange(off, hi), now_us, payload)
                        entry.remaining.remove(off, hi)
                        taken.add(off, hi)
                        if not buf.push(msg):
                            # Congestion drop at this node; downstream recovery
                            # (SeqHole where a cache exists, RTO otherwise).
                            self.congestion_drops += hi - off
                            if self.on_buffer_drop is not None:
                                self.on_buffer_drop(d.name, hi - off, now_us)
                        off = hi
                if not entry.remaining:
                    entries.remove(entry)
            self._pump(neighbor, now_us)

    # -- consumer ------------------------------------------------------------------

    def start_flow(self, name: str, origin: int, total_bytes: Optional[int],
                   now_us: int) -> ConsumerFlow:
        rto = RtoTable(self.cfg.rto_initial_us, self.cfg.rto_max_retries)
        flow = ConsumerFlow(name, origin, total_bytes, now_us, rto)
        self.flows[name] = flow
        self.fib[name] = origin
        if total_bytes == 0:
            flow.complete = True
            flow.completed_us = now_us
            if self.on_flow_complete is not None:
                self.on_flow_complete(flow, now_us)
            return flow
        self._top_up(flow, now_us)
        self._schedule_rto_poll(flow)
        return flow

    def _first_hop(self, flow: ConsumerFlow) -> Optional[int]:
        if flow.origin in self.links:
            return flow.origin
        return self.next_hop.get(flow.origin)

    def _request_window_bytes(self, flow: ConsumerFlow, neighbor: int, now_us: int) -> int:
        rate = self._command_bps(neighbor, flow.name, now_us)
        # Pace by the min-filtered round trip: smoothed srtt includes dwell
        # behind this flow's own outstanding bytes and would feed back into an
        # ever-growing window.
        rtt = flow.rto.min_rtt_us
        window_us = max(
            2 * rtt if rtt is not None else 0, self.cfg.request_window_floor_us
        )
        return max(int(rate * window_us / 8e6), self.cfg.segment_bytes)

    def _top_up(self, flow: ConsumerFlow, now_us: int) -> None:
        if flow.complete or flow.failed is not None:
            return
        neighbor = self._first_hop(flow)
        if neighbor is None:
            self.route_errors += 1
            return
        window = self._request_window_bytes(flow, neighbor, now_us)
        outstanding = flow.rto.outstanding_bytes(flow.name)
        kbps = self._rate_kbps(self._command_bps(neighbor, flow.name, now_us))
        while outstanding < window:
            if flow.total_bytes is not None and flow.next_offset >= flow.total_bytes:
                break
            batch = min(self.cfg.batch_cap_bytes, window - outstanding)
            batch = max(
                self.cfg.segment_bytes,
                batch - batch % self.cfg.segment_bytes,
            )
            end = flow.next_offset + batch
            if flow.total_bytes is not None:
                end = min(end, flow.total_bytes)
            rng = ByteRange(flow.next_offset, end)
            msg = InterestMsg(self.addr, neighbor, flow.name, rng, kbps,
                              self.cfg.interest_ttl, InterestKind.INITIAL)
            flow.rto.on_interest_sent(flow.name, rng, now_us)
            self._inflight(neighbor, flow.name).add(rng.start, rng.end)
            self._send_interest(neighbor, msg, now_us)
            flow.next_offset = end
            outstanding += rng.width

    def _schedule_rto_poll(self, flow: ConsumerFlow) -> None:
        def poll():
            if flow.complete or flow.failed is not None:
                return
            now = self.sim.now_us
            try:
                due = flow.rto.poll_expired(now)
            except FlowFailed as exc:
                flow.failed = exc
                if self.on_flow_failed is not None:
                    self.on_flow_failed(flow, exc, now)
                return
            if due:
                neighbor = self._first_hop(flow)
                if neighbor is not None:
                    kbps = self._rate_kbps(self._command_bps(neighbor, flow.name, now))
                    for nm, rng in due:
                        msg = InterestMsg(self.addr, neighbor, nm, rng, kbps,
                                          self.cfg.interest_ttl, InterestKind.TIMEOUT_RETRANS)
                        self._inflight(neighbor, nm).remove(rng.start, rng.end)
                        self._send_interest(neighbor, msg, now)
            self.sim.after(self.cfg.rto_poll_interval_us, poll)

        self.sim.after(self.cfg.rto_poll_interval_us, poll)

    def _consumer_data(self, flow: ConsumerFlow, d: DataMsg, now_us: int) -> None:
        flow.rto.on_data(flow.name, d.range, now_us)
        new_bytes = flow.received.add(d.range.start, d.range.end)
        if new_bytes < d.range.width:
            flow.duplicate_bytes += d.range.width - new_bytes
        expected = self.expected_payload(flow.name, d.range.start, d.range.end)
        if expected != d.payload:
            flow.corrupt_bytes += d.range.width
        if self.on_consumer_data is not None:
            self.on_consumer_data(flow, d, new_bytes, now_us)
        if (
            not flow.complete
            and flow.total_bytes is not None
            and flow.received.covers(0, flow.total_bytes)
        ):
            flow.complete = True
            flow.completed_us = now_us
            if self.on_flow_complete is not None:
                self.on_flow_complete(flow, now_us)
            return
        self._top_up(flow, now_us)
