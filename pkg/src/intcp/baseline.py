"""End-to-end baseline transports run over the same simulator links.

Reno: textbook slow start / congestion avoidance / fast recovery with
cumulative ACKs (no SACK, no delayed ACKs). Congestion avoidance uses ACK
counting: after floor(cwnd) ACKs the window grows by one segment, which keeps
the arithmetic exact. Hybla scales the growth by rho = max(1, srtt/RTT0):
slow start adds 2**rho - 1 per ACK and each counted round adds rho**2
segments; with rho == 1 every update is identical to Reno's.

Data segments are 1200 payload bytes + 40 header; ACKs are 40 bytes and
travel the reverse path. Mid-path nodes forward by destination address with
no transport state (the link's drop-tail queue is the router queue).
"""

from __future__ import annotations

import enum
from typing import Dict, Optional

from .netsim import Link, Simulator, link_up_at
from .ranges import IntervalSet
from .retrans import INITIAL_RTO_US, MAX_RTO_US, RttEstimator

MSS = 1200
TCP_HEADER_BYTES = 40
ACK_BYTES = 40
INITIAL_SSTHRESH_SEGS = 1 << 30
HYBLA_RTT0_US = 25_000


class TcpSeg:
    __slots__ = ("src", "dst", "seq", "length", "retransmit")

    def __init__(self, src: int, dst: int, seq: int, length: int, retransmit: bool = False):
        self.src = src
        self.dst = dst
        self.seq = seq
        self.length = length
        self.retransmit = retransmit

    @property
    def size_bytes(self) -> int:
        return self.length + TCP_HEADER_BYTES


class TcpAck:
    __slots__ = ("src", "dst", "ack_no")

    def __init__(self, src: int, dst: int, ack_no: int):
        self.src = src
        self.dst = dst
        self.ack_no = ack_no

    @property
    def size_bytes(self) -> int:
        return ACK_BYTES


class CcState(enum.Enum):
    SLOW_START = "slow_start"
    CONGESTION_AVOIDANCE = "congestion_avoidance"
    FAST_RECOVERY = "fast_recovery"


class LossKind(enum.Enum):
    TRIPLE_DUP = "triple_dup"
    TIMEOUT = "timeout"


class RenoState:
    """Congestion window state machine; cwnd and ssthresh in segments."""

    def __init__(self):
        self.cwnd = 1.0
        self.ssthresh = float(INITIAL_SSTHRESH_SEGS)
        self.state = CcState.SLOW_START
        self.dup_acks = 0
        self._ca_acks = 0

    # growth hooks, overridden by Hybla
    def _ss_increment(self) -> float:
        return 1.0

    def _ca_round_increment(self) -> float:
        return 1.0

    def on_ack(self, acked_segments: int = 1) -> None:
        """Advance the window for one new (non-duplicate) ACK."""
        self.dup_acks = 0
        if self.state == CcState.FAST_RECOVERY:
            self.cwnd = max(self.ssthresh, 1.0)
            self.state = CcState.CONGESTION_AVOIDANCE
            self._ca_acks = 0
            return
        if self.state == CcState.SLOW_START:
            self.cwnd += self._ss_increment()
            if self.cwnd >= self.ssthresh:
                self.state = CcState.CONGESTION_AVOIDANCE
                self._ca_acks = 0
            return
        self._ca_acks += 1
        if self._ca_acks >= int(self.cwnd):
            self.cwnd += self._ca_round_increment()
            self._ca_acks = 0

    def on_dup_ack(self) -> bool:
        """Returns True when the third duplicate triggers fast retransmit."""
        self.dup_acks += 1
        if self.state == CcState.FAST_RECOVERY:
            self.cwnd += 1.0  # window inflation per extra duplicate
            return False
        if self.dup_acks == 3:
            self.on_loss(LossKind.TRIPLE_DUP)
            return True
        return False

    def on_loss(self, kind: LossKind) -> None:
        self.ssthresh = max(self.cwnd / 2.0, 2.0)
        if kind == LossKind.TRIPLE_DUP:
            self.cwnd = self.ssthresh + 3.0
            self.state = CcState.FAST_RECOVERY
        else:
            self.cwnd = 1.0
            self.state = CcState.SLOW_START
            self.dup_acks = 0
        self._ca_acks = 0


class HyblaState(RenoState):
    """Reno with growth scaled for large RTTs (rho = srtt / RTT0, >= 1)."""

    def __init__(self, rtt0_us: int = HYBLA_RTT0_US):
        super().__init__()
        self.rtt0_us = rtt0_us
        self.rho = 1.0

    def update_rho(self, srtt_us: float) -> None:
        self.rho = max(1.0, srtt_us / self.rtt0_us)

    def _ss_increment(self) -> float:
        return 2.0 ** self.rho - 1.0

    def _ca_round_increment(self) -> float:
        return self.rho * self.rho


class _SegRecord:
    __slots__ = ("seq", "length", "sent_us", "retransmitted")

    def __init__(self, seq: int, length: int, sent_us: int):
        self.seq = seq
        self.length = length
        self.sent_us = sent_us
        self.retransmitted = False


class TcpSender:
    """Event-driven sender streaming toward one receiver."""

    def __init__(self, sim: Simulator, addr: int, peer: int,
                 total_bytes: Optional[int] = None, variant: str = "reno",
                 mss: int = MSS):
        self.sim = sim
        self.addr = addr
        self.peer = peer
        self.total_bytes = total_bytes
        self.mss = mss
        self.cc: RenoState = HyblaState() if variant == "hybla" else RenoState()
        self.variant = variant
        self.estimator = RttEstimator()
        self.rto_us = INITIAL_RTO_US
        self.snd_una = 0
        self.snd_nxt = 0
        self.segments: Dict[int, _SegRecord] = {}
        self.links: Dict[int, Link] = {}
        self.next_hop: Dict[int, int] = {}
        self.complete = False
        self.completed_us: Optional[int] = None
        self.bytes_emitted = 0
        self._timer_gen = 0
        self._rho_next_us = 0
        self.on_emit = None  # fn(seq, length, retransmit, now)
        sim.register(addr, self)

    def attach(self, link: Link) -> None:
        self.links[link.other(self.addr)] = link

    def start(self, now_us: int) -> None:
        self._fill_window(now_us)

    # -- plumbing -----------------------------------------------------------------

    def _link_toward_peer(self) -> Optional[Link]:
        if self.peer in self.links:
            return self.links[self.peer]
        nh = self.next_hop.get(self.peer)
        return self.links.get(nh) if nh is not None else None

    def _transmit(self, seg: TcpSeg, now_us: int) -> None:
        link = self._link_toward_peer()
        if link is None:
            return
        if self.on_emit is not None:
            self.on_emit(seg.seq, seg.length, seg.retransmit, now_us)
        self.bytes_emitted += seg.length
        link.transmit(self.addr, seg, seg.size_bytes, now_us)

    def _restart_timer(self, now_us: int) -> None:
        self._timer_gen += 1
        gen = self._timer_gen

        def fire():
            if gen == self._timer_gen:
                self._on_timeout(self.sim.now_us)

        self.sim.at(now_us + self.rto_us, fire)

    def _cancel_timer(self) -> None:
        self._timer_gen += 1

    # -- window management ----------------------------------------------------------

    def _window_bytes(self) -> int:
        return int(self.cc.cwnd * self.mss)

    def _fill_window(self, now_us: int) -> None:
        if self.complete:
            return
        had_outstanding = self.snd_nxt > self.snd_una
        while self.snd_nxt - self.snd_una < self._window_bytes():
            if self.total_bytes is not None and self.snd_nxt >= self.total_bytes:
                break
            length = self.mss
            if self.total_bytes is not None:
                length = min(length, self.total_bytes - self.snd_nxt)
            rec = _SegRecord(self.snd_nxt, length, now_us)
            self.segments[self.snd_nxt] = rec
            self._transmit(TcpSeg(self.addr, self.peer, rec.seq, rec.length), now_us)
            self.snd_nxt += length
        if self.snd_nxt > self.snd_una and not had_outstanding:
            self._restart_timer(now_us)

    def _retransmit_una(self, now_us: int) -> None:
        rec = self.segments.get(self.snd_una)
        if rec is None:
            return
        rec.retransmitted = True
        rec.sent_us = now_us
        self._transmit(TcpSeg(self.addr, self.peer, rec.seq, rec.length, retransmit=True), now_us)

    # -- events ----------------------------------------------------------------------

    def on_packet(self, payload, link: Link, now_us: int) -> None:
        if isinstance(payload, TcpAck) and payload.dst == self.addr:
            self._on_ack(payload.ack_no, now_us)

    def on_link_up(self, link: Link, now_us: int) -> None:
        pass  # end-to-end transport: blind to hop state, the RTO drives recovery

    def _on_ack(self, ack_no: int, now_us: int) -> None:
        if self.complete:
            return
        if ack_no > self.snd_una:
            # RTT sample from the newest segment the ACK covers (Karn's rule).
            rec = None
            seq = self.snd_una
            while seq < ack_no:
                r = self.segments.pop(seq, None)
                if r is None:
                    break
                rec = r
                seq += r.length
            if rec is not None and not rec.retransmitted:
                self.estimator.sample(now_us - rec.sent_us)
                self.rto_us = max(self.estimator.rto_us(), 200_000)
                if isinstance(self.cc, HyblaState) and now_us >= self._rho_next_us:
                    self.cc.update_rho(self.estimator.srtt_us)
                    self._rho_next_us = now_us + int(self.estimator.srtt_us)
            self.snd_una = ack_no
            self.cc.on_ack()
            if self.total_bytes is not None and self.snd_una >= self.total_bytes:
                self.complete = True
                self.completed_us = now_us
                self._cancel_timer()
                return
            if self.snd_nxt > self.snd_una:
                self._restart_timer(now_us)
            else:
                self._cancel_timer()
            self._fill_window(now_us)
        elif ack_no == self.snd_una and self.snd_nxt > self.snd_una:
            if self.cc.on_dup_ack():
                self._retransmit_una(now_us)
                self._restart_timer(now_us)
            else:
                self._fill_window(now_us)

    def _on_timeout(self, now_us: int) -> None:
        if self.complete or self.snd_nxt <= self.snd_una:
            return
        self.cc.on_loss(LossKind.TIMEOUT)
        self.rto_us = min(self.rto_us * 2, MAX_RTO_US)
        self._retransmit_una(now_us)
        self._restart_timer(now_us)


class TcpReceiver:
    """Cumulative-ACK receiver; ACKs every arriving data segment immediately."""

    def __init__(self, sim: Simulator, addr: int, peer: int):
        self.sim = sim
        self.addr = addr
        self.peer = peer
        self.rcv_next = 0
        self.received = IntervalSet()
        self.links: Dict[int, Link] = {}
        self.next_hop: Dict[int, int] = {}
        self.on_segment = None  # fn(seq, length, new_bytes, now)
        self.on_in_order = None  # fn(start, end, now)
        sim.register(addr, self)

    def attach(self, link: Link) -> None:
        self.links[link.other(self.addr)] = link

    def on_link_up(self, link: Link, now_us: int) -> None:
        pass

    def _reverse_link(self) -> Optional[Link]:
        if self.peer in self.links:
            return self.links[self.peer]
        nh = self.next_hop.get(self.peer)
        return self.links.get(nh) if nh is not None else None

    def on_packet(self, payload, link: Link, now_us: int) -> None:
        if not isinstance(payload, TcpSeg) or payload.dst != self.addr:
            return
        new_bytes = self.received.add(payload.seq, payload.seq + payload.length)
        if self.on_segment is not None:
            self.on_segment(payload.seq, payload.length, new_bytes, now_us)
        if payload.seq <= self.rcv_next:
            old = self.rcv_next
            gap = self.received.first_missing(old, 1 << 62)
            self.rcv_next = gap[0] if gap is not None else (self.received.max_end or old)
            if self.rcv_next > old and self.on_in_order is not None:
                self.on_in_order(old, self.rcv_next, now_us)
        rev = self._reverse_link()
        if rev is not None:
            rev.transmit(self.addr, TcpAck(self.addr, self.peer, self.rcv_next), ACK_BYTES, now_us)


class Forwarder:
    """Address-based store-and-forward node (the plain IP router)."""

    def __init__(self, sim: Simulator, addr: int):
        self.sim = sim
        self.addr = addr
        self.links: Dict[int, Link] = {}
        self.next_hop: Dict[int, int] = {}
        self.no_route = 0
        sim.register(addr, self)

    def attach(self, link: Link) -> None:
        self.links[link.other(self.addr)] = link

    def on_link_up(self, link: Link, now_us: int) -> None:
        pass

    def on_packet(self, payload, link: Link, now_us: int) -> None:
        dst = payload.dst
        nh = dst if dst in self.links else self.next_hop.get(dst)
        out = self.links.get(nh) if nh is not None else None
        if out is None:
            self.no_route += 1
            return
        out.transmit(self.addr, payload, payload.size_bytes, now_us)
