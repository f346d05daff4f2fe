"""Loss detection and recovery.

HoleDetector implements per-hop gap detection: a missing byte range is
declared lost once three received DATA messages start past its end (the
byte-range analogue of triple duplicate ACKs), and is reported exactly once.
The matching recovery interest carries ttl=1 so it never travels beyond the
hop.

RtoTable implements the consumer-side timeout backstop: every issued interest
is registered with a retransmission deadline from a Jacobson-style RTT
estimator; expired entries are re-requested with exponential backoff.
"""

from __future__ import annotations

from typing import Dict, List, Tuple

from .ranges import ByteRange, IntervalSet
from .wire import InterestKind, InterestMsg

HOLE_THRESHOLD = 3
INITIAL_RTO_US = 1_000_000
MAX_RTO_US = 60_000_000
MAX_RETRIES = 16


class FlowFailed(RuntimeError):
    def __init__(self, name: str, rng: ByteRange, retries: int):
        super().__init__(f"delivery of {name} {rng} failed after {retries} retries")
        self.name = name
        self.range = rng
        self.retries = retries


class HoleDetector:
    """Tracks received ranges for one (hop, name) stream.

    expected_start anchors the stream: bytes before the first arrival count
    as a gap too, since the whole space from expected_start is requested.
    """

    __slots__ = ("threshold", "received", "reported", "_candidates")

    def __init__(self, threshold: int = HOLE_THRESHOLD, expected_start: int = 0):
        self.threshold = threshold
        self.received = IntervalSet()
        if expected_start:
            # Mark everything below the anchor as already present.
            self.received.add(0, expected_start)
        self.reported = IntervalSet()
        self._candidates: List[List[int]] = []  # [start, end, count], disjoint, sorted

    def on_data(self, rng: ByteRange) -> List[ByteRange]:
        """Account an arrival; returns newly confirmed lost ranges."""
        prev_max = self.received.max_end or 0
        self.received.add(rng.start, rng.end)
        new_max = self.received.max_end or 0

        # Shrink/split candidates the arrival (partially) filled.
        if self._candidates:
            updated: List[List[int]] = []
            for s, e, c in self._candidates:
                if e <= rng.start or s >= rng.end:
                    updated.append([s, e, c])
                    continue
                if s < rng.start:
                    updated.append([s, rng.start, c])
                if rng.end < e:
                    updated.append([rng.end, e, c])
            self._candidates = updated

        # Newly exposed gaps: anything missing below the new maximum that is
        # not already a candidate and was never reported.
        if new_max > prev_max:
            known = IntervalSet((s, e) for s, e, _ in self._candidates)
            for s, e in self.received.holes_in(0, new_max):
                for rs, re_ in self.reported.holes_in(s, e):
                    for cs, ce in known.holes_in(rs, re_):
                        self._candidates.append([cs, ce, 0])
            self._candidates.sort()

        # This arrival counts as one packet past every gap it cleared.
        confirmed: List[ByteRange] = []
        remaining: List[List[int]] = []
        for cand in self._candidates:
            if cand[1] <= rng.start:
                cand[2] += 1
            if cand[2] >= self.threshold:
                hole = ByteRange(cand[0], cand[1])
                self.reported.add(cand[0], cand[1])
                confirmed.append(hole)
            else:
                remaining.append(cand)
        self._candidates = remaining
        return confirmed


def make_seqhole_interest(
    requester: int, responder: int, name: str, lost: ByteRange, send_rate_kbps: int = 0
) -> InterestMsg:
    """Hop-local recovery interest: ttl=1, never forwarded further."""
    return InterestMsg(
        requester=requester,
        responder=responder,
        name=name,
        range=lost,
        send_rate_kbps=send_rate_kbps,
        ttl=1,
        kind=InterestKind.SEQHOLE_RETRANS,
    )


class RttEstimator:
    """Jacobson/Karels smoothing: srtt += (s-srtt)/8, rttvar += (|s-srtt|-rttvar)/4.

    Also keeps the running minimum: smoothed samples include queueing behind
    the requester's own outstanding window, so pacing decisions must use the
    min-filtered value or the window inflates itself.
    """

    __slots__ = ("srtt_us", "rttvar_us", "min_rtt_us")

    def __init__(self):
        self.srtt_us: float | None = None
        self.rttvar_us: float = 0.0
        self.min_rtt_us: int | None = None

    def sample(self, rtt_us: int) -> None:
        if self.min_rtt_us is None or rtt_us < self.min_rtt_us:
            self.min_rtt_us = rtt_us
        if self.srtt_us is None:
            self.srtt_us = float(rtt_us)
            self.rttvar_us = rtt_us / 2.0
        else:
            err = rtt_us - self.srtt_us
            self.srtt_us += err / 8.0
            self.rttvar_us += (abs(err) - self.rttvar_us) / 4.0

    def rto_us(self, initial_us: int = INITIAL_RTO_US) -> int:
        if self.srtt_us is None:
            return initial_us
        return int(self.srtt_us + 4.0 * self.rttvar_us)


class _RtoEntry:
    __slots__ = ("start", "end", "sent_us", "rto_us", "retries")

    def __init__(self, start: int, end: int, sent_us: int, rto_us: int, retries: int = 0):
        self.start = start
        self.end = end
        self.sent_us = sent_us
        self.rto_us = rto_us
        self.retries = retries


class RtoTable:
    """Consumer-side table of outstanding requested ranges."""

    def __init__(self, initial_rto_us: int = INITIAL_RTO_US, max_retries: int = MAX_RETRIES):
        self.initial_rto_us = initial_rto_us
        self.max_retries = max_retries
        self.estimator = RttEstimator()
        self._entries: Dict[str, List[_RtoEntry]] = {}

    @property
    def srtt_us(self) -> float | None:
        return self.estimator.srtt_us

    @property
    def min_rtt_us(self) -> int | None:
        return self.estimator.min_rtt_us

    def outstanding_bytes(self, name: str) -> int:
        return sum(e.end - e.start for e in self._entries.get(name, ()))

    def entries(self, name: str) -> List[Tuple[ByteRange, int, int, int]]:
        return [
            (ByteRange(e.start, e.end), e.sent_us, e.rto_us, e.retries)
            for e in self._entries.get(name, ())
        ]

    def on_interest_sent(self, name: str, rng: ByteRange, now_us: int) -> None:
        """Register (or re-register) a requested range.

        A duplicate registration for an already-tracked range resets the timer
        but preserves its retry count and any backed-off rto.
        """
        entries = self._entries.setdefault(name, [])
        fresh_rto = self.estimator.rto_us(self.initial_rto_us)
        remaining = IntervalSet([(rng.start, rng.end)])
        for e in entries:
            if e.start < rng.end and rng.start < e.end:
                if rng.start <= e.start and e.end <= rng.end:
                    e.sent_us = now_us  # timer reset, retries/rto preserved
                remaining.remove(e.start, e.end)
        for s, e_ in remaining:
            entries.append(_RtoEntry(s, e_, now_us, fresh_rto))

    def on_data(self, name: str, rng: ByteRange, now_us: int) -> int:
        """Clear covered portions; returns bytes newly acknowledged.

        RTT samples are taken only from never-retransmitted entries (Karn's
        rule), one sample per touched entry.
        """
        entries = self._entries.get(name)
        if not entries:
            return 0
        cleared = 0
        out: List[_RtoEntry] = []
        for e in entries:
            if e.end <= rng.start or e.start >= rng.end:
                out.append(e)
                continue
            if e.retries == 0:
                self.estimator.sample(now_us - e.sent_us)
            lo, hi = max(e.start, rng.start), min(e.end, rng.end)
            cleared += hi - lo
            if e.start < lo:
                out.append(_RtoEntry(e.start, lo, e.sent_us, e.rto_us, e.retries))
            if hi < e.end:
                out.append(_RtoEntry(hi, e.end, e.sent_us, e.rto_us, e.retries))
        if out:
            self._entries[name] = out
        else:
            del self._entries[name]
        return cleared

    def poll_expired(self, now_us: int) -> List[Tuple[str, ByteRange]]:
        """Expired ranges to re-request.

        Each expired entry has its retry count bumped, its rto doubled (capped
        at MAX_RTO_US) and its timer restarted. An entry that has already used
        max_retries raises FlowFailed.
        """
        due: List[Tuple[str, ByteRange]] = []
        for name, entries in self._entries.items():
            for e in entries:
                if e.sent_us + e.rto_us <= now_us:
                    if e.retries >= self.max_retries:
                        raise FlowFailed(name, ByteRange(e.start, e.end), e.retries)
                    e.retries += 1
                    e.rto_us = min(e.rto_us * 2, MAX_RTO_US)
                    e.sent_us = now_us
                    due.append((name, ByteRange(e.start, e.end)))
        return due
