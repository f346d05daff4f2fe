"""Byte-range primitives: half-open ranges, interval sets, and a stamp map.

Everything in the transport is addressed by [start, end) byte ranges, so the
content store, the hole detector, the pending-interest registry and the RTO
table all share these containers.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Tuple


@dataclass(frozen=True, order=True)
class ByteRange:
    """Half-open byte range [start, end); start < end."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid byte range [{self.start}, {self.end})")

    @property
    def width(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "ByteRange") -> bool:
        return self.start < other.end and other.start < self.end

    def intersect(self, other: "ByteRange") -> "ByteRange | None":
        lo = max(self.start, other.start)
        hi = min(self.end, other.end)
        return ByteRange(lo, hi) if lo < hi else None

    def __str__(self) -> str:
        return f"[{self.start},{self.end})"


class IntervalSet:
    """Sorted set of disjoint half-open integer intervals.

    Internally two parallel lists of starts and ends, kept disjoint and
    coalesced (touching intervals merge).
    """

    __slots__ = ("_starts", "_ends")

    def __init__(self, intervals: Iterable[Tuple[int, int]] = ()):
        self._starts: List[int] = []
        self._ends: List[int] = []
        for s, e in intervals:
            self.add(s, e)

    def __bool__(self) -> bool:
        return bool(self._starts)

    def __len__(self) -> int:
        return len(self._starts)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return zip(self._starts, self._ends)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._starts == other._starts and self._ends == other._ends

    def __repr__(self) -> str:
        body = ", ".join(f"[{s},{e})" for s, e in self)
        return f"IntervalSet({body})"

    def copy(self) -> "IntervalSet":
        out = IntervalSet()
        out._starts = self._starts[:]
        out._ends = self._ends[:]
        return out

    @property
    def total(self) -> int:
        """Total number of bytes covered."""
        return sum(e - s for s, e in zip(self._starts, self._ends))

    @property
    def min_start(self) -> int | None:
        return self._starts[0] if self._starts else None

    @property
    def max_end(self) -> int | None:
        return self._ends[-1] if self._ends else None

    def add(self, start: int, end: int) -> int:
        """Insert [start, end), coalescing. Returns the number of new bytes."""
        if start >= end:
            return 0
        starts, ends = self._starts, self._ends
        # All intervals with end >= start can touch/overlap the new one.
        lo = bisect_left(ends, start)
        # All intervals with start <= end can touch/overlap it.
        hi = bisect_right(starts, end)
        if lo == hi:  # no overlap, pure insertion
            starts.insert(lo, start)
            ends.insert(lo, end)
            return end - start
        merged_start = min(start, starts[lo])
        merged_end = max(end, ends[hi - 1])
        existing = sum(ends[i] - starts[i] for i in range(lo, hi))
        del starts[lo:hi]
        del ends[lo:hi]
        starts.insert(lo, merged_start)
        ends.insert(lo, merged_end)
        return (merged_end - merged_start) - existing

    def remove(self, start: int, end: int) -> int:
        """Delete [start, end). Returns the number of bytes removed."""
        if start >= end:
            return 0
        starts, ends = self._starts, self._ends
        lo = bisect_right(ends, start)
        hi = bisect_left(starts, end)
        if lo >= hi:
            return 0
        removed = 0
        keep: List[Tuple[int, int]] = []
        for i in range(lo, hi):
            s, e = starts[i], ends[i]
            cut_lo, cut_hi = max(s, start), min(e, end)
            if cut_lo < cut_hi:
                removed += cut_hi - cut_lo
                if s < cut_lo:
                    keep.append((s, cut_lo))
                if cut_hi < e:
                    keep.append((cut_hi, e))
            else:
                keep.append((s, e))
        del starts[lo:hi]
        del ends[lo:hi]
        for off, (s, e) in enumerate(keep):
            starts.insert(lo + off, s)
            ends.insert(lo + off, e)
        return removed

    def covers(self, start: int, end: int) -> bool:
        """True iff every byte of [start, end) is present."""
        if start >= end:
            return True
        i = bisect_right(self._starts, start) - 1
        return i >= 0 and self._ends[i] >= end

    def contains_point(self, x: int) -> bool:
        i = bisect_right(self._starts, x) - 1
        return i >= 0 and self._ends[i] > x

    def intersect_span(self, start: int, end: int) -> List[Tuple[int, int]]:
        """Portions of the set inside [start, end), ascending."""
        out: List[Tuple[int, int]] = []
        if start >= end:
            return out
        starts, ends = self._starts, self._ends
        i = max(0, bisect_right(ends, start))
        n = len(starts)
        while i < n and starts[i] < end:
            lo, hi = max(starts[i], start), min(ends[i], end)
            if lo < hi:
                out.append((lo, hi))
            i += 1
        return out

    def holes_in(self, start: int, end: int) -> List[Tuple[int, int]]:
        """Gaps of [start, end) not covered by the set, ascending."""
        out: List[Tuple[int, int]] = []
        cursor = start
        for lo, hi in self.intersect_span(start, end):
            if lo > cursor:
                out.append((cursor, lo))
            cursor = hi
        if cursor < end:
            out.append((cursor, end))
        return out

    def first_missing(self, start: int, end: int) -> Tuple[int, int] | None:
        """First gap of [start, end), or None when fully covered."""
        if start >= end:
            return None
        i = bisect_right(self._starts, start) - 1
        cursor = start
        if i >= 0 and self._ends[i] > start:
            cursor = self._ends[i]
        if cursor >= end:
            return None
        j = bisect_left(self._starts, cursor)
        while j < len(self._starts) and self._starts[j] <= cursor:
            cursor = max(cursor, self._ends[j])
            j += 1
        if cursor >= end:
            return None
        gap_end = self._starts[j] if j < len(self._starts) else end
        return (cursor, min(gap_end, end))


class StampMap:
    """Write-once timestamp per byte: records the first stamp ever applied.

    Used to remember when each byte was first emitted by its source; later
    emissions of the same bytes do not overwrite.
    """

    __slots__ = ("_starts", "_ends", "_stamps", "_covered")

    def __init__(self):
        self._starts: List[int] = []
        self._ends: List[int] = []
        self._stamps: List[int] = []
        self._covered = IntervalSet()

    def record(self, start: int, end: int, stamp: int) -> None:
        """Stamp any not-yet-stamped bytes of [start, end)."""
        if start >= end:
            return
        for s, e in self._covered.holes_in(start, end):
            i = bisect_left(self._starts, s)
            self._starts.insert(i, s)
            self._ends.insert(i, e)
            self._stamps.insert(i, stamp)
        self._covered.add(start, end)

    def earliest(self, start: int, end: int) -> int | None:
        """Smallest stamp over [start, end), or None if nothing stamped."""
        if start >= end:
            return None
        best: int | None = None
        i = max(0, bisect_right(self._ends, start))
        while i < len(self._starts) and self._starts[i] < end:
            if best is None or self._stamps[i] < best:
                best = self._stamps[i]
            i += 1
        return best
