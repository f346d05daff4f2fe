"""Deterministic discrete-event network simulator.

Single-threaded event loop over integer microseconds. Links have time-varying
capacity (constant / square wave / trace), propagation delay (constant or
trace), Bernoulli per-packet channel loss, a finite drop-tail device queue,
and an up/down schedule. Serialization integrates capacity across schedule
changes, so a packet straddling a capacity step is re-rated for its remaining
bits. Identical (config, seed) yields an identical event sequence.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from collections import deque
from typing import Callable, Dict, List, Optional, Tuple

EV_PACKET_ARRIVAL = "packet_arrival"
EV_TIMER = "timer"
EV_LINK_STATE = "link_state"
EV_FLOW_START = "flow_start"

DROP_CHANNEL = "channel"
DROP_OVERFLOW = "overflow"
DROP_LINK_DOWN = "link_down"

DEFAULT_QUEUE_CAP_BYTES = 256 * 1024


class Event:
    __slots__ = ("time_us", "seq", "kind", "fn", "cancelled")

    def __init__(self, time_us: int, seq: int, kind: str, fn: Callable[[], None]):
        self.time_us = time_us
        self.seq = seq
        self.kind = kind
        self.fn = fn
        self.cancelled = False

    def __lt__(self, other: "Event") -> bool:
        if self.time_us != other.time_us:
            return self.time_us < other.time_us
        return self.seq < other.seq


# -- schedules ----------------------------------------------------------------


class ConstantSchedule:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def value_at(self, t_us: int):
        return self.value

    def next_change_after(self, t_us: int) -> Optional[int]:
        return None


class SquareWaveSchedule:
    """low for (t - phase) mod period < period/2, else high."""

    __slots__ = ("low", "high", "period_us", "phase_offset_us")

    def __init__(self, low, high, period_us: int, phase_offset_us: int = 0):
        if period_us <= 0:
            raise ValueError("period_us must be positive")
        self.low = low
        self.high = high
        self.period_us = period_us
        self.phase_offset_us = phase_offset_us

    def value_at(self, t_us: int):
        phase = (t_us - self.phase_offset_us) % self.period_us
        return self.low if phase < self.period_us // 2 else self.high

    def next_change_after(self, t_us: int) -> Optional[int]:
        half = self.period_us // 2
        phase = (t_us - self.phase_offset_us) % half
        return t_us + (half - phase)


class PeriodicUpSchedule:
    """Down during [k*period, k*period + down), up for the rest of each period."""

    __slots__ = ("period_us", "down_us")

    def __init__(self, period_us: int, down_us: int):
        if not 0 < down_us < period_us:
            raise ValueError("need 0 < down_us < period_us")
        self.period_us = period_us
        self.down_us = down_us

    def value_at(self, t_us: int) -> int:
        return 0 if (t_us % self.period_us) < self.down_us else 1

    def next_change_after(self, t_us: int) -> Optional[int]:
        phase = t_us % self.period_us
        if phase < self.down_us:
            return t_us + (self.down_us - phase)
        return t_us + (self.period_us - phase)


class TraceSchedule:
    """Step function from sorted (t_us, value) points; last value holds."""

    __slots__ = ("times", "values")

    def __init__(self, points: List[Tuple[int, object]]):
        if not points:
            raise ValueError("trace needs at least one point")
        pts = sorted(points)
        self.times = [int(t) for t, _ in pts]
        self.values = [v for _, v in pts]

    def value_at(self, t_us: int):
        from bisect import bisect_right

        i = bisect_right(self.times, t_us) - 1
        return self.values[max(i, 0)]

    def next_change_after(self, t_us: int) -> Optional[int]:
        from bisect import bisect_right

        i = bisect_right(self.times, t_us)
        return self.times[i] if i < len(self.times) else None


def capacity_at(link: "Link", t_us: int) -> float:
    return float(link.capacity.value_at(t_us))


def link_up_at(link: "Link", t_us: int) -> bool:
    return bool(link.up.value_at(t_us))


# -- link ----------------------------------------------------------------------


class _Direction:
    __slots__ = (
        "busy_until_us", "q_bytes", "q_records", "pending", "last_arrival_us",
        "sent", "arrived", "drops", "rng",
    )

    def __init__(self, rng: random.Random):
        self.busy_until_us = 0
        self.q_bytes = 0
        self.q_records: deque = deque()  # (ser_complete_us, size) FIFO
        self.pending: Dict[int, Tuple[int, Event]] = {}  # seq -> (ser_complete, event)
        self.last_arrival_us = 0
        self.sent = 0
        self.arrived = 0
        self.drops = {DROP_CHANNEL: 0, DROP_OVERFLOW: 0, DROP_LINK_DOWN: 0}
        self.rng = rng


class Link:
    """Bidirectional link; each direction has its own queue and serializer."""

    def __init__(
        self,
        sim: "Simulator",
        a: int,
        b: int,
        prop_delay,
        capacity,
        loss_prob: float = 0.0,
        queue_cap_bytes: int = DEFAULT_QUEUE_CAP_BYTES,
        up=None,
        name: str | None = None,
    ):
        self.sim = sim
        self.a = a
        self.b = b
        self.name = name or f"{a}-{b}"
        self.prop = prop_delay if hasattr(prop_delay, "value_at") else ConstantSchedule(int(prop_delay))
        self.capacity = capacity if hasattr(capacity, "value_at") else ConstantSchedule(float(capacity))
        self.loss_prob = loss_prob
        self.queue_cap_bytes = queue_cap_bytes
        self.up = up if up is not None else ConstantSchedule(1)
        self._dirs = {
            (a, b): _Direction(sim.rng_stream(f"link:{self.name}:{a}->{b}")),
            (b, a): _Direction(sim.rng_stream(f"link:{self.name}:{b}->{a}")),
        }
        self._arm_state_change()

    def other(self, addr: int) -> int:
        return self.b if addr == self.a else self.a

    def direction(self, src: int, dst: int) -> _Direction:
        return self._dirs[(src, dst)]

    # -- up/down handling ------------------------------------------------------

    def _arm_state_change(self) -> None:
        nxt = self.up.next_change_after(self.sim.now_us)
        if nxt is not None:
            self.sim.at(nxt, self._on_state_change, kind=EV_LINK_STATE)

    def _on_state_change(self) -> None:
        now = self.sim.now_us
        if not link_up_at(self, now):
            # Going down: everything already emitted into propagation is lost.
            for d in self._dirs.values():
                doomed = [seq for seq, (ser_done, _) in d.pending.items() if ser_done <= now]
                for seq in doomed:
                    _, ev = d.pending.pop(seq)
                    ev.cancelled = True
                    d.drops[DROP_LINK_DOWN] += 1
        else:
            for cb in self.sim.link_up_callbacks:
                cb(self, now)
        self._arm_state_change()

    # -- transmission -----------------------------------------------------------

    def _serialization_done(self, start_us: int, size_bytes: int) -> Optional[int]:
        """Completion time integrating capacity*up; None if it never finishes."""
        remaining = size_bytes * 8.0
        t = start_us
        horizon = self.sim.horizon_us
        while True:
            rate = capacity_at(self, t) if link_up_at(self, t) else 0.0
            boundaries = [
                x for x in (self.capacity.next_change_after(t), self.up.next_change_after(t))
                if x is not None
            ]
            boundary = min(boundaries) if boundaries else None
            if rate > 0.0:
                dt = remaining * 1e6 / rate
                if boundary is None or t + dt <= boundary:
                    return t + int(math.ceil(dt))
                remaining -= rate * (boundary - t) / 1e6
                t = boundary
            else:
                if boundary is None or boundary > horizon:
                    return None
                t = boundary
            if t > horizon:
                return None

    def transmit(self, src: int, payload, size_bytes: int, now_us: int) -> str:
        """Queue one packet of size_bytes from src toward the other endpoint.

        Returns "sent", or a drop reason. Drops are normal events, not errors.
        """
        dst = self.other(src)
        d = self._dirs[(src, dst)]
        d.sent += 1

        if not link_up_at(self, now_us):
            d.drops[DROP_LINK_DOWN] += 1
            self.sim.note_drop(self, src, dst, payload, DROP_LINK_DOWN)
            return DROP_LINK_DOWN

        # Lazy queue cleanup: anything fully serialized has left the queue.
        while d.q_records and d.q_records[0][0] <= now_us:
            d.q_bytes -= d.q_records.popleft()[1]

        busy = d.busy_until_us > now_us
        if busy and d.q_bytes + size_bytes > self.queue_cap_bytes:
            d.drops[DROP_OVERFLOW] += 1
            self.sim.note_drop(self, src, dst, payload, DROP_OVERFLOW)
            return DROP_OVERFLOW

        start = d.busy_until_us if busy else now_us
        done = self._serialization_done(start, size_bytes)
        if done is None:
            d.drops[DROP_LINK_DOWN] += 1
            self.sim.note_drop(self, src, dst, payload, DROP_LINK_DOWN)
            return DROP_LINK_DOWN
        d.busy_until_us = done
        d.q_records.append((done, size_bytes))
        d.q_bytes += size_bytes

        if d.rng.random() < self.loss_prob:
            d.drops[DROP_CHANNEL] += 1
            self.sim.note_drop(self, src, dst, payload, DROP_CHANNEL)
            return DROP_CHANNEL

        arrival = done + int(self.prop.value_at(done)) + self.sim.proc_delay_us
        if arrival < d.last_arrival_us:
            arrival = d.last_arrival_us  # FIFO even under shrinking prop delay
        d.last_arrival_us = arrival

        ev = self.sim.at(arrival, None, kind=EV_PACKET_ARRIVAL)
        ev.fn = lambda d=d, ev=ev, payload=payload, dst=dst: self._deliver(d, ev, payload, dst)
        d.pending[ev.seq] = (done, ev)
        return "sent"

    def _deliver(self, d: _Direction, ev: Event, payload, dst: int) -> None:
        d.pending.pop(ev.seq, None)
        d.arrived += 1
        self.sim.deliver(dst, payload, self)

    # -- introspection -----------------------------------------------------------

    def counters(self) -> Dict[str, Dict[str, int]]:
        out = {}
        for (src, dst), d in self._dirs.items():
            out[f"{src}->{dst}"] = {
                "sent": d.sent,
                "arrived": d.arrived,
                "in_flight": len(d.pending),
                **{f"dropped_{k}": v for k, v in d.drops.items()},
            }
        return out


# -- simulator -------------------------------------------------------------------


class Simulator:
    def __init__(self, seed: int = 0, proc_delay_us: int = 0, horizon_us: int = 2**62):
        self.seed = seed
        self.now_us = 0
        self.proc_delay_us = proc_delay_us
        self.horizon_us = horizon_us
        self._heap: List[Event] = []
        self._seq = 0
        self.adapters: Dict[int, object] = {}
        self.links: List[Link] = []
        self.link_by_pair: Dict[Tuple[int, int], Link] = {}
        self.link_up_callbacks: List[Callable[[Link, int], None]] = []
        self.deliver_hooks: List[Callable[[object, int, Link, int], None]] = []
        self.drop_hooks: List[Callable[[Link, int, int, object, str], None]] = []
        self.events_processed = 0

    # -- construction ---------------------------------------------------------

    def rng_stream(self, label: str) -> random.Random:
        digest = hashlib.md5(f"{self.seed}:{label}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def add_link(self, link: Link) -> Link:
        self.links.append(link)
        self.link_by_pair[(link.a, link.b)] = link
        self.link_by_pair[(link.b, link.a)] = link
        return link

    def link_between(self, a: int, b: int) -> Optional[Link]:
        return self.link_by_pair.get((a, b))

    def register(self, addr: int, adapter) -> None:
        self.adapters[addr] = adapter

    # -- event queue ------------------------------------------------------------

    def at(self, time_us: int, fn: Optional[Callable[[], None]], kind: str = EV_TIMER) -> Event:
        if time_us < self.now_us:
            time_us = self.now_us
        self._seq += 1
        ev = Event(int(time_us), self._seq, kind, fn)
        heapq.heappush(self._heap, ev)
        return ev

    def after(self, delay_us: int, fn: Callable[[], None], kind: str = EV_TIMER) -> Event:
        return self.at(self.now_us + delay_us, fn, kind)

    def run_until(self, t_end_us: int) -> int:
        """Process events in (time, seq) order up to and including t_end_us."""
        heap = self._heap
        while heap and heap[0].time_us <= t_end_us:
            ev = heapq.heappop(heap)
            if ev.cancelled:
                continue
            self.now_us = ev.time_us
            self.events_processed += 1
            ev.fn()
        if t_end_us > self.now_us:
            self.now_us = t_end_us
        return self.events_processed

    # -- delivery ----------------------------------------------------------------

    def deliver(self, dst: int, payload, link: Link) -> None:
        if self.deliver_hooks:
            for hook in self.deliver_hooks:
                hook(payload, dst, link, self.now_us)
        adapter = self.adapters.get(dst)
        if adapter is not None:
            adapter.on_packet(payload, link, self.now_us)

    def note_drop(self, link: Link, src: int, dst: int, payload, reason: str) -> None:
        if self.drop_hooks:
            for hook in self.drop_hooks:
                hook(link, src, dst, payload, reason)

    def conservation(self) -> Dict[str, int]:
        totals = {"sent": 0, "arrived": 0, "in_flight": 0}
        drops = {DROP_CHANNEL: 0, DROP_OVERFLOW: 0, DROP_LINK_DOWN: 0}
        for link in self.links:
            for d in link._dirs.values():
                totals["sent"] += d.sent
                totals["arrived"] += d.arrived
                totals["in_flight"] += len(d.pending)
                for k, v in d.drops.items():
                    drops[k] += v
        totals.update({f"dropped_{k}": v for k, v in drops.items()})
        return totals
