"""Content store: coalescing, LRU eviction, tiling against a bitmap oracle."""

import random

import pytest

from intcp.cache import CapacityError, ContentStore
from intcp.ranges import ByteRange


def payload_for(rng: ByteRange, fill: int = 0) -> bytes:
    return bytes((fill + i) & 0xFF for i in range(rng.start, rng.end))


def test_adjacent_inserts_coalesce():
    cs = ContentStore(10_000)
    cs.insert("v", ByteRange(0, 100), payload_for(ByteRange(0, 100)))
    cs.insert("v", ByteRange(100, 200), payload_for(ByteRange(100, 200)))
    hits, holes = cs.lookup("v", ByteRange(0, 200))
    assert holes == []
    assert [tuple((h.start, h.end)) for h, _ in hits] == [(0, 200)]


def test_lru_eviction_hand_simulated():
    # capacity 150: inserting "w" must evict the older "v" segment entirely.
    cs = ContentStore(150)
    cs.insert("v", ByteRange(0, 100), bytes(100))
    evicted = cs.insert("w", ByteRange(0, 100), bytes(100))
    assert evicted == 100
    assert cs.used_bytes == 100
    _, holes = cs.lookup("v", ByteRange(0, 100))
    assert [(h.start, h.end) for h in holes] == [(0, 100)]
    hits, holes = cs.lookup("w", ByteRange(0, 100))
    assert holes == [] and len(hits) == 1


def test_oversize_insert_rejected():
    cs = ContentStore(5)
    with pytest.raises(CapacityError):
        cs.insert("v", ByteRange(0, 10), bytes(10))


def test_lookup_full_hit_miss_and_holes():
    cs = ContentStore(10_000)
    cs.insert("v", ByteRange(0, 50), payload_for(ByteRange(0, 50)))
    cs.insert("v", ByteRange(80, 100), payload_for(ByteRange(80, 100)))
    hits, holes = cs.lookup("v", ByteRange(0, 100))
    assert [(h.start, h.end) for h in holes] == [(50, 80)]
    assert [(h.start, h.end) for h, _ in hits] == [(0, 50), (80, 100)]
    _, holes = cs.lookup("nope", ByteRange(0, 100))
    assert [(h.start, h.end) for h in holes] == [(0, 100)]


def test_lookup_refreshes_recency():
    cs = ContentStore(200)
    cs.insert("a", ByteRange(0, 100), bytes(100))
    cs.insert("b", ByteRange(0, 100), bytes(100))
    cs.lookup("a", ByteRange(0, 100))  # refresh a; b becomes LRU
    evicted = cs.insert("c", ByteRange(0, 100), bytes(100))
    assert evicted == 100
    _, holes_b = cs.lookup("b", ByteRange(0, 100))
    assert holes_b  # b gone
    _, holes_a = cs.lookup("a", ByteRange(0, 100))
    assert not holes_a  # a kept


def test_overlap_last_writer_wins():
    cs = ContentStore(10_000)
    cs.insert("v", ByteRange(0, 100), bytes([1]) * 100)
    cs.insert("v", ByteRange(50, 150), bytes([2]) * 100)
    hits, holes = cs.lookup("v", ByteRange(0, 150))
    assert holes == []
    blob = b"".join(p for _, p in hits)
    assert blob[:50] == bytes([1]) * 50
    assert blob[50:] == bytes([2]) * 100


def test_missing_in_matches_lookup_holes():
    cs = ContentStore(10_000)
    cs.insert("v", ByteRange(10, 40), bytes(30))
    cs.insert("v", ByteRange(60, 90), bytes(30))
    q = ByteRange(0, 100)
    assert [(h.start, h.end) for h in cs.missing_in("v", q)] == [
        (h.start, h.end) for h in cs.lookup("v", q)[1]
    ]


class ByteOracle:
    """Per-byte payload map per name with unlimited capacity."""

    def __init__(self):
        self.bytes = {}

    def insert(self, name, rng, payload):
        for i in range(rng.start, rng.end):
            self.bytes[(name, i)] = payload[i - rng.start]

    def lookup(self, name, rng):
        hits, holes = [], []
        run = None
        for i in range(rng.start, rng.end):
            present = (name, i) in self.bytes
            if run is None or run[1] != present:
                if run is not None:
                    (hits if run[1] else holes).append((run[0], i))
                run = (i, present)
        if run is not None:
            (hits if run[1] else holes).append((run[0], rng.end))
        return hits, holes

    def payload(self, name, s, e):
        return bytes(self.bytes[(name, i)] for i in range(s, e))


def test_tiling_and_fidelity_vs_bitmap_oracle():
    """10^4 random operation sequences checked against the per-byte oracle."""
    rng = random.Random(42)
    sequences = 10_000
    ops_done = 0
    for case in range(sequences):
        # Unlimited capacity so the oracle never needs eviction logic.
        cs = ContentStore(1 << 40)
        oracle = ByteOracle()
        names = ["a", "b"]
        for _ in range(rng.randint(1, 4)):
            name = rng.choice(names)
            s = rng.randrange(0, 300)
            e = s + rng.randint(1, 64)
            data = bytes(rng.getrandbits(8) for _ in range(e - s))
            cs.insert(name, ByteRange(s, e), data)
            oracle.insert(name, ByteRange(s, e), data)
            ops_done += 1
        name = rng.choice(names)
        qs = rng.randrange(0, 330)
        qe = qs + rng.randint(1, 80)
        hits, holes = cs.lookup(name, ByteRange(qs, qe))
        ohits, oholes = oracle.lookup(name, ByteRange(qs, qe))

        # Tiling: hits + holes tile the query exactly, in order.
        tiles = sorted(
            [(h.start, h.end) for h, _ in hits] + [(h.start, h.end) for h in holes]
        )
        cursor = qs
        for s, e in tiles:
            assert s == cursor
            cursor = e
        assert cursor == qe

        # The hit/hole split matches the oracle (hit runs may be subdivided).
        got_holes = [(h.start, h.end) for h in holes]
        assert got_holes == oholes
        # Payload fidelity: bytes equal the most recent write per offset.
        for h, p in hits:
            assert p == oracle.payload(name, h.start, h.end)
    assert ops_done >= 10_000


def test_used_never_exceeds_capacity_random_ops():
    rng = random.Random(9)
    cs = ContentStore(5_000)
    for _ in range(3_000):
        name = rng.choice(["a", "b", "c"])
        s = rng.randrange(0, 4_000)
        e = s + rng.randint(1, 900)
        cs.insert(name, ByteRange(s, e), bytes(e - s))
        assert cs.used_bytes <= cs.capacity_bytes
        if rng.random() < 0.3:
            cs.lookup(name, ByteRange(s, e))
