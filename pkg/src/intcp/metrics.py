"""Per-flow metric collection, per-second aggregation, CDFs, CSV/JSON output.

One-way delay is measured per delivered packet against the first time its
bytes were emitted by the source transport, so retransmission and recovery
latency is visible for every transport in the same way. Jitter is the
absolute difference of mean one-way delay between consecutive seconds.
Throughput counts each delivered byte once (goodput).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

QUANTILES = (5, 25, 50, 75, 80, 95)


class EmptySeriesError(ValueError):
    pass


@dataclass
class CdfSummary:
    count: int
    mean: float
    p5: float
    p25: float
    p50: float
    p75: float
    p80: float
    p95: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "count": self.count,
            "mean": round(self.mean, 3),
            **{f"p{q}": round(getattr(self, f"p{q}"), 3) for q in QUANTILES},
        }


def compute_cdf(samples: List[float]) -> CdfSummary:
    """Empirical quantiles with linear interpolation between order statistics."""
    if not samples:
        raise EmptySeriesError("no samples")
    arr = np.asarray(samples, dtype=float)
    qs = np.percentile(arr, QUANTILES, method="linear")
    return CdfSummary(len(samples), float(arr.mean()), *(float(x) for x in qs))


@dataclass
class SecondRow:
    second: int
    throughput_bps: int
    mean_owd_us: int
    jitter_us: int
    loss_count: int


@dataclass
class MetricSeries:
    flow_id: str
    rows: List[SecondRow] = field(default_factory=list)
    owd_samples_us: List[int] = field(default_factory=list)

    def total_bits(self) -> int:
        return sum(r.throughput_bps for r in self.rows)


CSV_HEADER = "second,throughput_bps,mean_owd_us,jitter_us,loss_count"


def series_to_csv(series: MetricSeries) -> str:
    lines = [CSV_HEADER]
    for r in series.rows:
        lines.append(
            f"{r.second},{r.throughput_bps},{r.mean_owd_us},{r.jitter_us},{r.loss_count}"
        )
    return "\n".join(lines) + "\n"


class FlowMetrics:
    """Accumulates one flow's samples during a run."""

    def __init__(self, flow_id: str):
        self.flow_id = flow_id
        self._bits: Dict[int, int] = {}
        self._owd_sum: Dict[int, int] = {}
        self._owd_n: Dict[int, int] = {}
        self._loss: Dict[int, int] = {}
        self.owd_samples: List[int] = []
        self.bytes_delivered = 0

    def on_bits(self, now_us: int, bits: int) -> None:
        if bits <= 0:
            return
        sec = now_us // 1_000_000
        self._bits[sec] = self._bits.get(sec, 0) + bits
        self.bytes_delivered += bits // 8

    def on_owd(self, now_us: int, owd_us: int) -> None:
        sec = now_us // 1_000_000
        self._owd_sum[sec] = self._owd_sum.get(sec, 0) + owd_us
        self._owd_n[sec] = self._owd_n.get(sec, 0) + 1
        self.owd_samples.append(owd_us)

    def on_loss(self, now_us: int, count: int = 1) -> None:
        sec = now_us // 1_000_000
        self._loss[sec] = self._loss.get(sec, 0) + count

    def finalize(self, duration_s: int) -> MetricSeries:
        """Aggregate into one row per second.

        Seconds with no owd samples carry the previous second's mean forward
        (jitter 0), so the jitter column is always recomputable from the
        stored mean_owd column.
        """
        series = MetricSeries(self.flow_id, owd_samples_us=list(self.owd_samples))
        prev_mean: Optional[int] = None
        for k in range(duration_s):
            n = self._owd_n.get(k, 0)
            if n:
                mean = round(self._owd_sum[k] / n)
            else:
                mean = prev_mean if prev_mean is not None else 0
            jitter = abs(mean - prev_mean) if prev_mean is not None else 0
            series.rows.append(
                SecondRow(
                    second=k,
                    throughput_bps=self._bits.get(k, 0),
                    mean_owd_us=mean,
                    jitter_us=jitter,
                    loss_count=self._loss.get(k, 0),
                )
            )
            prev_mean = mean
        return series


def summarize_series(series: MetricSeries, warmup_s: int = 0) -> Dict:
    rows = series.rows
    thr = [float(r.throughput_bps) for r in rows]
    jit = [float(r.jitter_us) for r in rows[1:]] or [0.0]
    owd = [float(x) for x in series.owd_samples_us]
    post = thr[warmup_s:] if len(thr) > warmup_s else thr
    out = {
        "seconds": len(rows),
        "total_bits": series.total_bits(),
        "mean_throughput_bps": round(sum(thr) / len(thr), 3) if thr else 0.0,
        "mean_throughput_bps_after_warmup": round(sum(post) / len(post), 3) if post else 0.0,
        "throughput_cdf": compute_cdf(thr).as_dict() if thr else None,
        "jitter_cdf": compute_cdf(jit).as_dict(),
        "owd_cdf": compute_cdf(owd).as_dict() if owd else None,
    }
    return out


def dump_summary(summary: Dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"
