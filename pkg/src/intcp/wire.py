"""INTCP wire messages and binary codec.

Two message types, big-endian layout:

    INTEREST: tag 0x01 | requester u32 | responder u32 | name_len u16 | name
              | range_start u64 | range_end u64 | send_rate u32 (kbit/s)
              | ttl u8 | kind u8
    DATA:     tag 0x02 | requester u32 | responder u32 | name_len u16 | name
              | range_start u64 | range_end u64 | timestamp u64 (us)
              | payload_len u32 | payload

Addresses are flat 32-bit node ids; the codec is routing-agnostic.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, replace

from .ranges import ByteRange

INTEREST_TAG = 0x01
DATA_TAG = 0x02

MAX_NAME_BYTES = 1024
_U8 = 0xFF
_U16 = 0xFFFF
_U32 = 0xFFFFFFFF
_U64 = 0xFFFFFFFFFFFFFFFF

_INTEREST_FIXED = struct.Struct(">BII H")  # tag, requester, responder, name_len
_INTEREST_TAIL = struct.Struct(">QQIBB")  # start, end, send_rate, ttl, kind
_DATA_TAIL = struct.Struct(">QQQI")  # start, end, timestamp, payload_len

INTEREST_OVERHEAD = _INTEREST_FIXED.size + _INTEREST_TAIL.size
DATA_OVERHEAD = _INTEREST_FIXED.size + _DATA_TAIL.size


class EncodingError(ValueError):
    pass


class DecodingError(ValueError):
    pass


class InterestKind(enum.IntEnum):
    INITIAL = 0
    SEQHOLE_RETRANS = 1
    TIMEOUT_RETRANS = 2


def _check_name(name: str) -> bytes:
    raw = name.encode("utf-8")
    if not raw:
        raise EncodingError("content name must be non-empty")
    if len(raw) > MAX_NAME_BYTES:
        raise EncodingError(f"content name exceeds {MAX_NAME_BYTES} bytes")
    return raw


def _check_u(value: int, bound: int, field: str) -> int:
    if not (0 <= value <= bound):
        raise EncodingError(f"{field}={value} out of range")
    return value


@dataclass(frozen=True)
class InterestMsg:
    requester: int
    responder: int
    name: str
    range: ByteRange
    send_rate_kbps: int
    ttl: int
    kind: InterestKind = InterestKind.INITIAL

    def __post_init__(self):
        if self.ttl < 1:
            raise ValueError("interest ttl must be >= 1")
        if self.kind == InterestKind.SEQHOLE_RETRANS and self.ttl != 1:
            raise ValueError("SeqHole retransmission interests carry ttl=1")

    def with_hop(self, requester: int, responder: int, ttl: int) -> "InterestMsg":
        return replace(self, requester=requester, responder=responder, ttl=ttl)


@dataclass(frozen=True)
class DataMsg:
    requester: int
    responder: int
    name: str
    range: ByteRange
    timestamp_us: int
    payload: bytes

    def __post_init__(self):
        if len(self.payload) != self.range.width:
            raise ValueError(
                f"payload length {len(self.payload)} != range width {self.range.width}"
            )


def encoded_size(msg: InterestMsg | DataMsg) -> int:
    """Wire size in bytes without materializing the encoding."""
    name_len = len(msg.name.encode("utf-8"))
    if isinstance(msg, InterestMsg):
        return INTEREST_OVERHEAD + name_len
    return DATA_OVERHEAD + name_len + msg.range.width


def encode(msg: InterestMsg | DataMsg) -> bytes:
    if isinstance(msg, InterestMsg):
        raw = _check_name(msg.name)
        head = _INTEREST_FIXED.pack(
            INTEREST_TAG,
            _check_u(msg.requester, _U32, "requester"),
            _check_u(msg.responder, _U32, "responder"),
            len(raw),
        )
        tail = _INTEREST_TAIL.pack(
            _check_u(msg.range.start, _U64, "range.start"),
            _check_u(msg.range.end, _U64, "range.end"),
            _check_u(msg.send_rate_kbps, _U32, "send_rate_kbps"),
            _check_u(msg.ttl, _U8, "ttl"),
            int(msg.kind),
        )
        return head + raw + tail
    if isinstance(msg, DataMsg):
        raw = _check_name(msg.name)
        width = msg.range.width
        if width > _U32:
            raise EncodingError("payload too large for a single DATA message")
        head = _INTEREST_FIXED.pack(
            DATA_TAG,
            _check_u(msg.requester, _U32, "requester"),
            _check_u(msg.responder, _U32, "responder"),
            len(raw),
        )
        tail = _DATA_TAIL.pack(
            _check_u(msg.range.start, _U64, "range.start"),
            _check_u(msg.range.end, _U64, "range.end"),
            _check_u(msg.timestamp_us, _U64, "timestamp_us"),
            width,
        )
        return head + raw + tail + msg.payload
    raise EncodingError(f"cannot encode {type(msg).__name__}")


def decode(buf: bytes) -> InterestMsg | DataMsg:
    if len(buf) < _INTEREST_FIXED.size:
        raise DecodingError("buffer shorter than fixed header")
    tag, requester, responder, name_len = _INTEREST_FIXED.unpack_from(buf, 0)
    if tag not in (INTEREST_TAG, DATA_TAG):
        raise DecodingError(f"unknown type tag 0x{tag:02x}")
    if name_len == 0 or name_len > MAX_NAME_BYTES:
        raise DecodingError(f"bad name length {name_len}")
    off = _INTEREST_FIXED.size
    if len(buf) < off + name_len:
        raise DecodingError("truncated name")
    try:
        name = buf[off : off + name_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodingError("name is not valid UTF-8") from exc
    off += name_len

    if tag == INTEREST_TAG:
        if len(buf) != off + _INTEREST_TAIL.size:
            raise DecodingError("interest length mismatch")
        start, end, rate, ttl, kind = _INTEREST_TAIL.unpack_from(buf, off)
        if start >= end:
            raise DecodingError(f"invalid range [{start},{end})")
        try:
            kind_enum = InterestKind(kind)
        except ValueError as exc:
            raise DecodingError(f"unknown interest kind {kind}") from exc
        try:
            return InterestMsg(requester, responder, name, ByteRange(start, end), rate, ttl, kind_enum)
        except ValueError as exc:
            raise DecodingError(str(exc)) from exc

    if len(buf) < off + _DATA_TAIL.size:
        raise DecodingError("truncated data header")
    start, end, ts, payload_len = _DATA_TAIL.unpack_from(buf, off)
    if start >= end:
        raise DecodingError(f"invalid range [{start},{end})")
    if payload_len != end - start:
        raise DecodingError("payload length disagrees with range width")
    off += _DATA_TAIL.size
    if len(buf) != off + payload_len:
        raise DecodingError("truncated or oversized payload")
    return DataMsg(requester, responder, name, ByteRange(start, end), ts, bytes(buf[off:]))
