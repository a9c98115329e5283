"""Byte encodings for shuffle keys and values.

Keys must compare bytewise in the same order as their decoded meaning:
text fields are joined with the 0x1F unit separator, integer components
are fixed-width big-endian, and floats use the usual sign-flip trick so
that lexicographic byte order equals numeric order.

Values are opaque payloads: counts travel as UTF-8 decimals, numeric
vectors/matrices as length-prefixed little-endian float64 arrays.
"""

from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

FIELD_SEP = b"\x1f"

_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")
_F64BE = struct.Struct(">d")
_LEN = struct.Struct("<I")
_SIGN = 1 << 63
_MASK64 = (1 << 64) - 1


def text_key(*fields: str) -> bytes:
    """Join UTF-8 fields with the unit separator."""
    return FIELD_SEP.join(f.encode("utf-8") for f in fields)


def split_text_key(key: bytes) -> tuple[str, ...]:
    return tuple(f.decode("utf-8") for f in key.split(FIELD_SEP))


def u32_key(value: int) -> bytes:
    return _U32.pack(value)


def parse_u32_key(key: bytes) -> int:
    return _U32.unpack(key)[0]


def u64_key(value: int) -> bytes:
    return _U64.pack(value)


def parse_u64_key(key: bytes) -> int:
    return _U64.unpack(key)[0]


def f64_key(value: float) -> bytes:
    """Order-preserving big-endian encoding of a finite float."""
    (bits,) = _U64.unpack(_F64BE.pack(value))
    if bits & _SIGN:
        bits = ~bits & _MASK64
    else:
        bits |= _SIGN
    return _U64.pack(bits)


def parse_f64_key(key: bytes) -> float:
    (bits,) = _U64.unpack(key)
    if bits & _SIGN:
        bits &= ~_SIGN & _MASK64
    else:
        bits = ~bits & _MASK64
    return _F64BE.unpack(_U64.pack(bits))[0]


def count_value(n: int) -> bytes:
    return b"%d" % n


def parse_count(value: bytes) -> int:
    return int(value)


def f64s_value(values: Iterable[float] | np.ndarray) -> bytes:
    """Length-prefixed little-endian float64 array."""
    arr = np.asarray(values, dtype="<f8")
    return _LEN.pack(arr.size) + arr.tobytes()


def parse_f64s(value: bytes) -> np.ndarray:
    """Decode ``f64s_value``; the result is a read-only view of the bytes."""
    (count,) = _LEN.unpack_from(value)
    arr = np.frombuffer(value, dtype="<f8", offset=_LEN.size)
    if arr.size != count:
        raise ValueError(f"corrupt float64 array: declared {count}, got {arr.size}")
    return arr
