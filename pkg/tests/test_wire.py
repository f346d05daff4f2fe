"""Wire codec: layout examples, round trips, corruption behavior."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intcp.ranges import ByteRange
from intcp.wire import (
    DATA_OVERHEAD,
    INTEREST_OVERHEAD,
    DataMsg,
    DecodingError,
    EncodingError,
    InterestKind,
    InterestMsg,
    decode,
    encode,
    encoded_size,
)


def make_interest(**kw):
    base = dict(requester=1, responder=2, name="a", range=ByteRange(0, 100),
                send_rate_kbps=1000, ttl=255, kind=InterestKind.INITIAL)
    base.update(kw)
    return InterestMsg(**base)


def make_data(**kw):
    rng = kw.pop("range", ByteRange(0, 4))
    base = dict(requester=1, responder=2, name="v", range=rng,
                timestamp_us=123456, payload=bytes(rng.width))
    base.update(kw)
    return DataMsg(**base)


def test_interest_layout_example():
    # Fixed fields: 1 tag + 4 + 4 + 2 name_len + 8 + 8 + 4 + 1 + 1 = 33,
    # plus one name byte -> 34 bytes, leading tag 0x01.
    buf = encode(make_interest())
    assert len(buf) == 34
    assert INTEREST_OVERHEAD == 33
    assert buf[0] == 0x01
    assert len(buf) == encoded_size(make_interest())


def test_data_layout_size():
    d = make_data()
    buf = encode(d)
    assert buf[0] == 0x02
    assert len(buf) == DATA_OVERHEAD + 1 + 4
    assert len(buf) == encoded_size(d)


def test_empty_name_rejected():
    with pytest.raises(EncodingError):
        encode(make_data(name=""))
    with pytest.raises(EncodingError):
        encode(make_interest(name="x" * 1025))


def test_requester_out_of_range():
    with pytest.raises(EncodingError):
        encode(make_interest(requester=1 << 32))


def test_seqhole_requires_ttl_1():
    with pytest.raises(ValueError):
        make_interest(kind=InterestKind.SEQHOLE_RETRANS, ttl=2)
    msg = make_interest(kind=InterestKind.SEQHOLE_RETRANS, ttl=1)
    assert decode(encode(msg)) == msg


def test_decode_empty_and_truncated():
    with pytest.raises(DecodingError):
        decode(b"")
    buf = encode(make_data(range=ByteRange(0, 100), payload=bytes(100)))
    with pytest.raises(DecodingError):
        decode(buf[:-1])  # payload shorter than declared range width
    with pytest.raises(DecodingError):
        decode(buf + b"\x00")  # trailing garbage


def test_unknown_tag():
    buf = bytearray(encode(make_interest()))
    buf[0] = 0x7F
    with pytest.raises(DecodingError):
        decode(bytes(buf))


def test_tag_corruption_never_silently_matches():
    """Flipping the type tag must not parse back into the same message."""
    for msg in (make_interest(), make_data()):
        buf = bytearray(encode(msg))
        for other in range(256):
            if other == buf[0]:
                continue
            buf2 = bytes([other]) + bytes(buf[1:])
            try:
                out = decode(buf2)
            except DecodingError:
                continue
            assert type(out) is not type(msg)


def _random_interest(rng: random.Random) -> InterestMsg:
    kind = rng.choice(list(InterestKind))
    start = rng.randrange(0, 1 << 40)
    width = rng.randrange(1, 1 << 20)
    return InterestMsg(
        requester=rng.randrange(1 << 32),
        responder=rng.randrange(1 << 32),
        name="".join(rng.choice("abcdefghij/0123456789") for _ in range(rng.randint(1, 40))),
        range=ByteRange(start, start + width),
        send_rate_kbps=rng.randrange(1 << 32),
        ttl=1 if kind == InterestKind.SEQHOLE_RETRANS else rng.randint(1, 255),
        kind=kind,
    )


def _random_data(rng: random.Random) -> DataMsg:
    start = rng.randrange(0, 1 << 40)
    width = rng.randrange(1, 400)
    return DataMsg(
        requester=rng.randrange(1 << 32),
        responder=rng.randrange(1 << 32),
        name="".join(rng.choice("klmnopqrs.-_") for _ in range(rng.randint(1, 24))),
        range=ByteRange(start, start + width),
        timestamp_us=rng.randrange(1 << 63),
        payload=rng.randbytes(width),
    )


def test_round_trip_bulk_seeded():
    """Acceptance-scale round-trip battery: 10^5 generated messages."""
    rng = random.Random(2024)
    for i in range(100_000):
        msg = _random_interest(rng) if i % 2 == 0 else _random_data(rng)
        buf = encode(msg)
        assert len(buf) == encoded_size(msg)
        assert decode(buf) == msg


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_round_trip_hypothesis(data):
    name = data.draw(st.text(min_size=1, max_size=60).filter(
        lambda s: 0 < len(s.encode("utf-8")) <= 1024))
    start = data.draw(st.integers(0, (1 << 64) - 2))
    width = data.draw(st.integers(1, 1 << 16))
    end = min(start + width, (1 << 64) - 1)
    if end <= start:
        end = start + 1
    if data.draw(st.booleans()):
        kind = data.draw(st.sampled_from(list(InterestKind)))
        msg = InterestMsg(
            requester=data.draw(st.integers(0, (1 << 32) - 1)),
            responder=data.draw(st.integers(0, (1 << 32) - 1)),
            name=name,
            range=ByteRange(start, end),
            send_rate_kbps=data.draw(st.integers(0, (1 << 32) - 1)),
            ttl=1 if kind == InterestKind.SEQHOLE_RETRANS else data.draw(st.integers(1, 255)),
            kind=kind,
        )
    else:
        msg = DataMsg(
            requester=data.draw(st.integers(0, (1 << 32) - 1)),
            responder=data.draw(st.integers(0, (1 << 32) - 1)),
            name=name,
            range=ByteRange(start, end),
            timestamp_us=data.draw(st.integers(0, (1 << 64) - 1)),
            payload=bytes(end - start),
        )
    assert decode(encode(msg)) == msg
