"""INTCP: hop-by-hop information-centric transport with cache-assisted
retransmission and per-hop congestion control, plus a deterministic
discrete-event LEO network simulator and experiment harness."""

__version__ = "0.1.0"

from .ranges import ByteRange, IntervalSet
from .wire import DataMsg, InterestKind, InterestMsg, decode, encode

__all__ = [
    "ByteRange",
    "IntervalSet",
    "DataMsg",
    "InterestKind",
    "InterestMsg",
    "decode",
    "encode",
    "__version__",
]
