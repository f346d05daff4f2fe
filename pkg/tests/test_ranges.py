"""IntervalSet and StampMap against brute-force per-byte bitmaps."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intcp.ranges import ByteRange, IntervalSet, StampMap

SPAN = 400


class BitmapOracle:
    """Per-byte reference implementation."""

    def __init__(self, span=SPAN):
        self.bits = [False] * span

    def add(self, s, e):
        added = 0
        for i in range(s, e):
            if not self.bits[i]:
                self.bits[i] = True
                added += 1
        return added

    def remove(self, s, e):
        removed = 0
        for i in range(s, e):
            if self.bits[i]:
                self.bits[i] = False
                removed += 1
        return removed

    def intervals(self):
        out = []
        i = 0
        while i < len(self.bits):
            if self.bits[i]:
                j = i
                while j < len(self.bits) and self.bits[j]:
                    j += 1
                out.append((i, j))
                i = j
            else:
                i += 1
        return out

    def holes_in(self, s, e):
        out = []
        i = s
        while i < e:
            if not self.bits[i]:
                j = i
                while j < e and not self.bits[j]:
                    j += 1
                out.append((i, j))
                i = j
            else:
                i += 1
        return out


def test_byte_range_invariants():
    r = ByteRange(0, 100)
    assert r.width == 100
    with pytest.raises(ValueError):
        ByteRange(10, 10)
    with pytest.raises(ValueError):
        ByteRange(20, 10)
    with pytest.raises(ValueError):
        ByteRange(-1, 5)


def test_add_coalesces_adjacent():
    s = IntervalSet()
    assert s.add(0, 100) == 100
    assert s.add(100, 200) == 100
    assert list(s) == [(0, 200)]


def test_add_overlap_counts_new_bytes_only():
    s = IntervalSet([(0, 100)])
    assert s.add(50, 150) == 50
    assert list(s) == [(0, 150)]


def test_holes_in_basic():
    s = IntervalSet([(0, 50), (80, 100)])
    assert s.holes_in(0, 100) == [(50, 80)]
    assert IntervalSet().holes_in(0, 100) == [(0, 100)]
    assert IntervalSet([(0, 100)]).holes_in(0, 100) == []


def test_first_missing():
    s = IntervalSet([(0, 50), (80, 100)])
    assert s.first_missing(0, 100) == (50, 80)
    assert s.first_missing(0, 50) is None
    assert s.first_missing(90, 200) == (100, 200)
    assert IntervalSet().first_missing(3, 9) == (3, 9)


def test_remove_splits():
    s = IntervalSet([(0, 100)])
    assert s.remove(40, 60) == 20
    assert list(s) == [(0, 40), (60, 100)]
    assert s.remove(0, 100) == 80
    assert not s


def test_covers():
    s = IntervalSet([(10, 20), (20, 40)])
    assert s.covers(10, 40)
    assert s.covers(15, 35)
    assert not s.covers(5, 15)
    assert not s.covers(10, 41)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["add", "remove"]),
            st.integers(0, SPAN - 1),
            st.integers(1, 60),
        ),
        max_size=40,
    )
)
def test_intervalset_matches_bitmap(ops):
    real = IntervalSet()
    oracle = BitmapOracle()
    for op, start, width in ops:
        end = min(start + width, SPAN)
        if op == "add":
            assert real.add(start, end) == oracle.add(start, end)
        else:
            assert real.remove(start, end) == oracle.remove(start, end)
        assert list(real) == oracle.intervals()
        assert real.total == sum(e - s for s, e in oracle.intervals())


def test_holes_match_bitmap_randomized():
    rng = random.Random(7)
    for _ in range(300):
        real = IntervalSet()
        oracle = BitmapOracle()
        for _ in range(rng.randint(0, 12)):
            s = rng.randrange(SPAN)
            e = min(SPAN, s + rng.randint(1, 80))
            real.add(s, e)
            oracle.add(s, e)
        qs = rng.randrange(SPAN - 1)
        qe = rng.randrange(qs + 1, SPAN)
        assert real.holes_in(qs, qe) == oracle.holes_in(qs, qe)
        assert real.intersect_span(qs, qe) == [
            (max(s, qs), min(e, qe))
            for s, e in oracle.intervals()
            if s < qe and e > qs and max(s, qs) < min(e, qe)
        ]


def test_stampmap_first_write_wins():
    m = StampMap()
    m.record(0, 100, 5)
    m.record(50, 150, 9)
    assert m.earliest(0, 10) == 5
    assert m.earliest(60, 70) == 5  # first stamp kept
    assert m.earliest(100, 150) == 9
    assert m.earliest(0, 150) == 5
    assert m.earliest(150, 200) is None


def test_stampmap_gap_fill():
    m = StampMap()
    m.record(100, 200, 3)
    m.record(0, 300, 8)
    assert m.earliest(0, 100) == 8
    assert m.earliest(100, 200) == 3
    assert m.earliest(250, 260) == 8
