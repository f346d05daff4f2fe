"""Per-node content store: byte-range segments under content names.

Supports hole-aware lookup, insertion with coalescing (last writer wins on
overlap), and segment-granularity LRU eviction under a byte capacity bound.
Long runs of contiguous data are split into <= SEGMENT_CAP chunks so eviction
stays reasonably granular for streaming workloads.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
from typing import Dict, List, Tuple

from .ranges import ByteRange

DEFAULT_CAPACITY_BYTES = 64 * 1024 * 1024
SEGMENT_CAP = 1024 * 1024  # max bytes per stored segment (eviction granularity)


class CapacityError(ValueError):
    """Insert wider than the whole store."""


class _Segment:
    __slots__ = ("start", "end", "data", "tick", "sid")

    def __init__(self, start: int, end: int, data: bytearray, tick: int, sid: int):
        self.start = start
        self.end = end
        self.data = data
        self.tick = tick
        self.sid = sid

    @property
    def width(self) -> int:
        return self.end - self.start


class ContentStore:
    def __init__(self, capacity_bytes: int = DEFAULT_CAPACITY_BYTES):
        if capacity_bytes <= 0:
            raise ValueError("capacity_bytes must be positive")
        self.capacity_bytes = capacity_bytes
        self.used_bytes = 0
        self._names: Dict[str, List[_Segment]] = {}
        self._alive: Dict[int, Tuple[str, _Segment]] = {}
        self._lru: List[Tuple[int, int]] = []  # (tick, sid) lazy min-heap
        self._tick = 0
        self._next_sid = 0

    # -- recency bookkeeping -------------------------------------------------

    def _touch(self, name: str, seg: _Segment) -> None:
        self._tick += 1
        seg.tick = self._tick
        heapq.heappush(self._lru, (seg.tick, seg.sid))

    def _new_segment(self, name: str, start: int, end: int, data: bytearray) -> _Segment:
        self._next_sid += 1
        self._tick += 1
        seg = _Segment(start, end, data, self._tick, self._next_sid)
        self._alive[seg.sid] = (name, seg)
        heapq.heappush(self._lru, (seg.tick, seg.sid))
        return seg

    def _drop_segment(self, name: str, seg: _Segment) -> None:
        self._alive.pop(seg.sid, None)
        self.used_bytes -= seg.width

    # -- operations ----------------------------------------------------------

    def insert(self, name: str, rng: ByteRange, payload: bytes) -> int:
        """Store payload for rng; returns bytes evicted to make room."""
        if len(payload) != rng.width:
            raise ValueError("payload length must equal range width")
        if rng.width > self.capacity_bytes:
            raise CapacityError(
                f"range width {rng.width} exceeds capacity {self.capacity_bytes}"
            )
        segs = self._names.setdefault(name, [])
        starts = [s.start for s in segs]
        ends = [s.end for s in segs]
        lo = bisect_left(ends, rng.start)  # first segment touching from the left
        hi = bisect_right(starts, rng.end)  # one past last segment touching

        # Fast path for streaming: extend the predecessor in place.
        if (
            hi - lo == 1
            and segs[lo].end == rng.start
            and segs[lo].width + rng.width <= SEGMENT_CAP
        ):
            seg = segs[lo]
            seg.data += payload
            seg.end = rng.end
            self.used_bytes += rng.width
            self._touch(name, seg)
            return self._evict_to_capacity()

        if lo == hi:
            merged_start, merged_end = rng.start, rng.end
            merged = bytearray(payload)
        else:
            first, last = segs[lo], segs[hi - 1]
            merged_start = min(rng.start, first.start)
            merged_end = max(rng.end, last.end)
            merged = bytearray()
            if first.start < rng.start:
                merged += first.data[: rng.start - first.start]
            merged += payload
            if last.end > rng.end:
                merged += last.data[rng.end - last.start :]
        for seg in segs[lo:hi]:
            self._drop_segment(name, seg)
        del segs[lo:hi]

        pos = lo
        off = merged_start
        while off < merged_end:
            chunk_end = min(off + SEGMENT_CAP, merged_end)
            seg = self._new_segment(
                name, off, chunk_end, merged[off - merged_start : chunk_end - merged_start]
            )
            segs.insert(pos, seg)
            pos += 1
            self.used_bytes += seg.width
            off = chunk_end

        return self._evict_to_capacity()

    def _evict_to_capacity(self) -> int:
        evicted = 0
        while self.used_bytes > self.capacity_bytes:
            tick, sid = heapq.heappop(self._lru)
            entry = self._alive.get(sid)
            if entry is None or entry[1].tick != tick:
                continue  # stale heap record
            name, seg = entry
            segs = self._names[name]
            segs.remove(seg)
            self._drop_segment(name, seg)
            evicted += seg.width
            if not segs:
                del self._names[name]
        return evicted

    def lookup(self, name: str, rng: ByteRange) -> Tuple[List[Tuple[ByteRange, bytes]], List[ByteRange]]:
        """Tile rng into cache hits and holes.

        Hits and holes are each sorted ascending and together cover rng exactly.
        Hits refresh the touched segments' recency.
        """
        hits: List[Tuple[ByteRange, bytes]] = []
        holes: List[ByteRange] = []
        segs = self._names.get(name, ())
        cursor = rng.start
        for seg in segs:
            if seg.end <= rng.start:
                continue
            if seg.start >= rng.end:
                break
            lo, hi = max(seg.start, rng.start), min(seg.end, rng.end)
            if lo > cursor:
                holes.append(ByteRange(cursor, lo))
            hits.append((ByteRange(lo, hi), bytes(seg.data[lo - seg.start : hi - seg.start])))
            self._touch(name, seg)
            cursor = hi
        if cursor < rng.end:
            holes.append(ByteRange(cursor, rng.end))
        return hits, holes

    def missing_in(self, name: str, rng: ByteRange) -> List[ByteRange]:
        """Holes of rng without materializing hits or refreshing recency."""
        holes: List[ByteRange] = []
        cursor = rng.start
        for seg in self._names.get(name, ()):
            if seg.end <= rng.start:
                continue
            if seg.start >= rng.end:
                break
            lo = max(seg.start, rng.start)
            if lo > cursor:
                holes.append(ByteRange(cursor, lo))
            cursor = min(seg.end, rng.end)
        if cursor < rng.end:
            holes.append(ByteRange(cursor, rng.end))
        return holes

    def coverage(self, name: str, rng: ByteRange) -> int:
        """Bytes of rng currently stored, without refreshing recency."""
        got = 0
        for seg in self._names.get(name, ()):
            if seg.end <= rng.start:
                continue
            if seg.start >= rng.end:
                break
            got += min(seg.end, rng.end) - max(seg.start, rng.start)
        return got

    def first_hit(self, name: str, start: int, end: int, max_bytes: int) -> Tuple[int, bytes] | None:
        """Earliest stored bytes within [start, end), clipped to max_bytes.

        Returns (offset, payload) of the first contiguous piece, or None.
        Refreshes the touched segment.
        """
        for seg in self._names.get(name, ()):
            if seg.end <= start:
                continue
            if seg.start >= end:
                return None
            lo = max(seg.start, start)
            hi = min(seg.end, end, lo + max_bytes)
            if lo < hi:
                self._touch(name, seg)
                return lo, bytes(seg.data[lo - seg.start : hi - seg.start])
        return None

    def names(self) -> List[str]:
        return list(self._names)
