"""Hop-by-hop congestion control.

Requester side: HopRateController watches one-way delay, arrival rate and
losses on its hop and computes the send rate to piggyback on interests.
Responder side: TokenBucket enforces the commanded rate. FairAllocator splits
a router's available rate evenly across concurrent flows.

Rate rule (delay-gradient): let q = last_owd - min_owd.
    q < q_low   -> rate = recv_rate * (1 + gain)
    q > q_high  -> rate = recv_rate * q_target / q
    otherwise   -> rate = recv_rate
then scale by (1 - congestion_loss_frac), cap by buffer headroom over the
control interval, and clamp to [RATE_MIN, RATE_MAX]. Channel (non-congestion)
loss never reduces the rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable

RATE_MIN_BPS = 64_000
RATE_MAX_BPS = 10_000_000_000

Q_LOW_US = 5_000
Q_HIGH_US = 20_000
Q_TARGET_US = 10_000
GAIN = 0.25
WINDOW_US = 100_000
EWMA_ALPHA = 0.125

DEFAULT_BURST_BYTES = 12_000  # ten 1200-byte segments


class OversizeError(ValueError):
    """Send larger than the bucket burst can ever admit."""


@dataclass
class CcConfig:
    q_low_us: int = Q_LOW_US
    q_high_us: int = Q_HIGH_US
    q_target_us: int = Q_TARGET_US
    gain: float = GAIN
    window_us: int = WINDOW_US
    burst_bytes: int = DEFAULT_BURST_BYTES


class HopRateController:
    """Requester-side network state for one (hop, flow)."""

    __slots__ = (
        "cfg", "min_owd_us", "last_owd_us", "recv_rate_bps", "loss_frac_congestion",
        "buffer_headroom_bytes", "last_rate_bps", "_window_start_us", "_window_bytes",
        "_has_sample",
    )

    def __init__(self, cfg: CcConfig | None = None):
        self.cfg = cfg or CcConfig()
        self.min_owd_us: int | None = None
        self.last_owd_us: int | None = None
        self.recv_rate_bps = 0.0
        self.loss_frac_congestion = 0.0
        self.buffer_headroom_bytes: int | None = None  # None = unconstrained
        self.last_rate_bps: float | None = None
        self._window_start_us: int | None = None
        self._window_bytes = 0
        self._has_sample = False

    def on_data_received(self, sent_ts_us: int, recv_ts_us: int, nbytes: int) -> None:
        """Account one DATA arrival: OWD sample plus rate window bookkeeping."""
        owd = recv_ts_us - sent_ts_us
        if owd < 0:
            owd = 0  # shared simulator clock; a defensive floor only
        self.last_owd_us = owd
        self.min_owd_us = owd if self.min_owd_us is None else min(self.min_owd_us, owd)
        self._has_sample = True

        if self._window_start_us is None:
            self._window_start_us = recv_ts_us
        elif recv_ts_us - self._window_start_us >= self.cfg.window_us:
            # Close every elapsed window; only the first carries bytes. Windows
            # with no arrivals at all leave the estimate untouched (an idle or
            # disconnected hop keeps its last-known rate).
            span = recv_ts_us - self._window_start_us
            whole = span // self.cfg.window_us
            sample = self._window_bytes * 8 / (self.cfg.window_us / 1e6)
            self.recv_rate_bps += EWMA_ALPHA * (sample - self.recv_rate_bps)
            self._window_bytes = 0
            self._window_start_us += whole * self.cfg.window_us
        self._window_bytes += nbytes

    @property
    def queuing_delay_us(self) -> int | None:
        if self.last_owd_us is None or self.min_owd_us is None:
            return None
        return self.last_owd_us - self.min_owd_us

    def compute_send_rate(self, control_interval_us: int) -> float:
        """Send rate in bits/s to command from the responder."""
        if not self._has_sample:
            return float(RATE_MIN_BPS)
        q = self.queuing_delay_us or 0
        rate = self.recv_rate_bps
        if q < self.cfg.q_low_us:
            # While the hop keeps up with the command (the smoothed arrival
            # rate trails it by at most 4x, i.e. we are not app-limited),
            # compound growth on the commanded rate rather than the smoothed
            # measurement, otherwise the EWMA drags the ramp out over tens of
            # seconds and fluctuating links are never refilled in time.
            base = rate
            if self.last_rate_bps is not None and rate >= self.last_rate_bps / 4.0:
                base = max(base, self.last_rate_bps)
            rate = base * (1.0 + self.cfg.gain)
        elif q > self.cfg.q_high_us:
            rate *= self.cfg.q_target_us / q
        rate *= 1.0 - self.loss_frac_congestion
        if self.buffer_headroom_bytes is not None:
            cap = self.buffer_headroom_bytes * 8 / (control_interval_us / 1e6)
            rate = min(rate, cap)
        rate = min(max(rate, float(RATE_MIN_BPS)), float(RATE_MAX_BPS))
        self.last_rate_bps = rate
        return rate


class TokenBucket:
    """Responder-side rate enforcement.

    Token accounting is exact: the balance is kept in bit-microseconds
    (1 byte == 8e6 bitus), so refills of rate_bps * elapsed_us are integer
    arithmetic and conformance (released <= rate * T + burst) holds exactly.
    """

    __slots__ = ("rate_bps", "burst_bytes", "_tokens_bitus", "_last_refill_us")

    def __init__(self, rate_bps: int = RATE_MIN_BPS, burst_bytes: int = DEFAULT_BURST_BYTES,
                 now_us: int = 0, start_full: bool = True):
        self.rate_bps = max(int(rate_bps), RATE_MIN_BPS)
        self.burst_bytes = int(burst_bytes)
        self._tokens_bitus = self.burst_bytes * 8_000_000 if start_full else 0
        self._last_refill_us = now_us

    @property
    def tokens_bytes(self) -> float:
        return self._tokens_bitus / 8_000_000

    def _refill(self, now_us: int) -> None:
        dt = now_us - self._last_refill_us
        if dt > 0:
            self._tokens_bitus = min(
                self.burst_bytes * 8_000_000,
                self._tokens_bitus + self.rate_bps * dt,
            )
            self._last_refill_us = now_us

    def set_rate(self, rate_bps: float, now_us: int | None = None) -> None:
        """Change the refill rate; accrued tokens are preserved (<= burst)."""
        if now_us is not None:
            self._refill(now_us)
        self.rate_bps = max(int(rate_bps), RATE_MIN_BPS)

    def try_send(self, nbytes: int, now_us: int) -> int | None:
        """Attempt to release nbytes at now.

        Returns None when the send is admitted (tokens consumed), else the
        earliest time in us at which it would be admitted.
        """
        if nbytes > self.burst_bytes:
            raise OversizeError(f"{nbytes} bytes exceeds burst {self.burst_bytes}")
        self._refill(now_us)
        need = nbytes * 8_000_000
        if self._tokens_bitus >= need:
            self._tokens_bitus -= need
            return None
        deficit = need - self._tokens_bitus
        wait = -(-deficit // self.rate_bps)  # ceil division
        return now_us + wait


class FairAllocator:
    """Equal-split allocation of a router's available rate across flows."""

    def __init__(self):
        self.flows: set = set()

    def register(self, flow_id) -> None:
        self.flows.add(flow_id)

    def unregister(self, flow_id) -> None:
        self.flows.discard(flow_id)

    def allocate(self, aggregate_rate_bps: float, flows: Iterable | None = None) -> Dict:
        """aggregate_rate / n for every active flow."""
        active = list(flows) if flows is not None else sorted(self.flows, key=repr)
        if not active:
            raise ValueError("no flows to allocate to")
        share = aggregate_rate_bps / len(active)
        return {f: share for f in active}
