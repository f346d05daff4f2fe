"""Hole detection and RTO table behavior, including the replay oracle."""

import random

import pytest

from intcp.ranges import ByteRange
from intcp.retrans import (
    FlowFailed,
    HoleDetector,
    RtoTable,
    RttEstimator,
    make_seqhole_interest,
)
from intcp.wire import InterestKind


def feed(det, *ranges):
    out = []
    for s, e in ranges:
        out.extend((h.start, h.end) for h in det.on_data(ByteRange(s, e)))
    return out


class TestHoleDetector:
    def test_three_subsequent_packets_confirm(self):
        det = HoleDetector()
        holes = feed(det, (0, 100), (100, 200), (300, 400), (400, 500), (500, 600))
        assert holes == [(200, 300)]

    def test_emitted_exactly_on_third(self):
        det = HoleDetector()
        assert feed(det, (0, 100), (100, 200), (300, 400), (400, 500)) == []
        assert feed(det, (500, 600)) == [(200, 300)]

    def test_in_order_no_holes(self):
        det = HoleDetector()
        assert feed(det, (0, 100), (100, 200), (200, 300)) == []

    def test_two_holes_each_reported_once(self):
        det = HoleDetector()
        holes = feed(
            det,
            (0, 100), (200, 300), (400, 500),
            (500, 600), (600, 700), (700, 800), (800, 900),
        )
        assert sorted(holes) == [(100, 200), (300, 400)]
        # five more packets past both: nothing re-reported
        assert feed(det, (900, 1000), (1000, 1100), (1100, 1200)) == []

    def test_leading_gap_detected(self):
        det = HoleDetector()
        holes = feed(det, (100, 200), (200, 300), (300, 400))
        assert holes == [(0, 100)]

    def test_partial_fill_shrinks_candidate(self):
        det = HoleDetector()
        feed(det, (0, 100), (200, 300))  # candidate [100,200) count=1
        feed(det, (150, 200))  # retransmitted middle; candidate [100,150)
        holes = feed(det, (300, 400), (400, 500))
        assert holes == [(100, 150)]

    def test_never_reports_received_bytes(self):
        rng = random.Random(3)
        det = HoleDetector()
        sent = []
        for k in range(200):
            s = k * 50
            seg = (s, s + 50)
            if rng.random() < 0.7:
                sent.append(seg)
        reported = []
        for s, e in sent:
            reported.extend(feed(det, (s, e)))
        for s, e in reported:
            for rs, re_ in sent:
                assert not (s < re_ and rs < e)

    def test_oracle_randomized(self):
        """Detector vs brute-force replay on 10^3 random loss patterns.

        Oracle: a maximal dropped run is reported iff >= 3 delivered segments
        start at-or-after its end.
        """
        rng = random.Random(77)
        for case in range(1_000):
            n = rng.randint(4, 40)
            seg = rng.choice([40, 100, 120])
            drop_p = rng.uniform(0.0, 0.5)
            delivered = [rng.random() >= drop_p for _ in range(n)]
            det = HoleDetector()
            got = []
            for i, ok in enumerate(delivered):
                if ok:
                    got.extend(feed(det, (i * seg, (i + 1) * seg)))

            expected = []
            i = 0
            while i < n:
                if not delivered[i]:
                    j = i
                    while j < n and not delivered[j]:
                        j += 1
                    later = sum(1 for k in range(j, n) if delivered[k])
                    if later >= 3:
                        expected.append((i * seg, j * seg))
                    i = j
                else:
                    i += 1
            assert sorted(got) == expected, f"case {case}"


class TestSeqholeInterest:
    def test_fields(self):
        msg = make_seqhole_interest(7, 9, "v", ByteRange(200, 300), 500)
        assert msg.kind == InterestKind.SEQHOLE_RETRANS
        assert msg.ttl == 1
        assert (msg.range.start, msg.range.end) == (200, 300)
        assert msg.requester == 7 and msg.responder == 9

    def test_invalid_range_rejected(self):
        with pytest.raises(ValueError):
            make_seqhole_interest(1, 2, "v", ByteRange(300, 300), 0)

    def test_two_holes_two_interests(self):
        a = make_seqhole_interest(1, 2, "v", ByteRange(0, 10), 0)
        b = make_seqhole_interest(1, 2, "v", ByteRange(20, 30), 0)
        assert a != b


class TestRttEstimator:
    def test_converges(self):
        est = RttEstimator()
        for _ in range(60):
            est.sample(100_000)
        assert est.srtt_us == pytest.approx(100_000, rel=1e-6)
        est2 = RttEstimator()
        est2.sample(200_000)
        for _ in range(80):
            est2.sample(100_000)
        assert abs(est2.srtt_us - 100_000) < 2_000

    def test_rto_formula(self):
        est = RttEstimator()
        est.srtt_us = 200_000.0
        est.rttvar_us = 25_000.0
        assert est.rto_us() == 300_000


class TestRtoTable:
    def test_initial_rto_one_second(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 1000), now_us=0)
        entries = t.entries("v")
        assert len(entries) == 1
        assert entries[0][2] == 1_000_000

    def test_full_coverage_removes(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 1000), 0)
        t.on_data("v", ByteRange(0, 1000), 50_000)
        assert t.entries("v") == []

    def test_partial_coverage_splits(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 1000), 0)
        t.on_data("v", ByteRange(0, 500), 50_000)
        entries = t.entries("v")
        assert [(e[0].start, e[0].end) for e in entries] == [(500, 1000)]

    def test_duplicate_registration_resets_timer_preserves_retries(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 1000), 0)
        expired = t.poll_expired(1_500_000)
        assert [(n, (r.start, r.end)) for n, r in expired] == [("v", (0, 1000))]
        rng_, sent, rto, retries = t.entries("v")[0]
        assert retries == 1 and rto == 2_000_000 and sent == 1_500_000
        t.on_interest_sent("v", ByteRange(0, 1000), 1_600_000)
        rng_, sent, rto, retries = t.entries("v")[0]
        assert retries == 1  # preserved
        assert rto == 2_000_000  # backed-off rto preserved
        assert sent == 1_600_000  # timer reset

    def test_backoff_doubles_and_caps(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 100), 0)
        now, rto = 0, 1_000_000
        for _ in range(8):
            now += rto + 1
            assert t.poll_expired(now)
            rto = min(rto * 2, 60_000_000)
            assert t.entries("v")[0][2] == rto

    def test_poll_before_expiry_empty(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 100), 0)
        assert t.poll_expired(999_999) == []

    def test_seventeenth_expiry_fails(self):
        t = RtoTable(max_retries=16)
        t.on_interest_sent("v", ByteRange(0, 100), 0)
        now = 0
        for _ in range(16):
            now += 61_000_000
            t.poll_expired(now)
        with pytest.raises(FlowFailed):
            t.poll_expired(now + 61_000_000)

    def test_rtt_sample_feeds_estimator(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 1000), 0)
        t.on_data("v", ByteRange(0, 1000), 120_000)
        assert t.srtt_us == pytest.approx(120_000)

    def test_karn_no_sample_from_retransmitted(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 100), 0)
        t.poll_expired(1_500_000)  # retries -> 1
        t.on_data("v", ByteRange(0, 100), 2_000_000)
        assert t.srtt_us is None

    def test_outstanding_bytes(self):
        t = RtoTable()
        t.on_interest_sent("v", ByteRange(0, 1000), 0)
        t.on_interest_sent("v", ByteRange(2000, 2600), 0)
        assert t.outstanding_bytes("v") == 1600
        t.on_data("v", ByteRange(0, 600), 10)
        assert t.outstanding_bytes("v") == 1000
