"""Canonical byte encoding, hashing, and ID checksum primitives.

Everything on the ledger is hashed over its canonical encoding, so every
node must produce bit-identical bytes for the same logical value. The
encoding is a strict JSON subset:

  * UTF-8, no insignificant whitespace
  * object keys sorted ascending by unicode code point
  * integers in shortest base-10 form (64-bit signed only; floats banned)
  * strings escape only `"`, `\\` and control characters, the latter as
    lowercase `\\uXXXX`
  * byte-strings are emitted as lowercase hex text

Values are trees of: None | bool | int | str | bytes | list | dict with
string keys. `bytes` is a convenience at the Python boundary; its canonical
form *is* the lowercase hex string (see :func:`normalize`).
"""

from __future__ import annotations

import hashlib

CanonicalValue = None | bool | int | str | bytes | list | dict

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class UnsupportedValue(Exception):
    """Value outside the canonical domain (float, non-string key, ...)."""


class DecodeError(Exception):
    """Byte string is not a canonical encoding."""


def normalize(value: CanonicalValue) -> CanonicalValue:
    """Return the canonical-domain form of ``value`` (bytes become hex text).

    Two values are canonically equal iff their normal forms are equal;
    ``encode_canonical`` is injective over normal forms.
    """
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, list):
        return [normalize(v) for v in value]
    if isinstance(value, dict):
        return {k: normalize(v) for k, v in value.items()}
    return value


def _emit(value: CanonicalValue, out: list[bytes]) -> None:
    if value is None:
        out.append(b"null")
    elif isinstance(value, bool):  # bool is an int subclass; test it first
        out.append(b"true" if value else b"false")
    elif isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise UnsupportedValue(f"integer out of 64-bit range: {value}")
        out.append(b"%d" % value)
    elif isinstance(value, float):
        raise UnsupportedValue("floats are not encodable")
    elif isinstance(value, bytes):
        out.append(b'"' + value.hex().encode("ascii") + b'"')
    elif isinstance(value, str):
        out.append(_emit_text(value))
    elif isinstance(value, list):
        out.append(b"[")
        for i, item in enumerate(value):
            if i:
                out.append(b",")
            _emit(item, out)
        out.append(b"]")
    elif isinstance(value, dict):
        for key in value:
            if not isinstance(key, str):
                raise UnsupportedValue(f"non-string map key: {key!r}")
        out.append(b"{")
        for i, key in enumerate(sorted(value)):
            if i:
                out.append(b",")
            out.append(_emit_text(key))
            out.append(b":")
            _emit(value[key], out)
        out.append(b"}")
    else:
        raise UnsupportedValue(f"unencodable type: {type(value).__name__}")


def _emit_text(text: str) -> bytes:
    parts = ['"']
    for ch in text:
        if ch == '"':
            parts.append('\\"')
        elif ch == "\\":
            parts.append("\\\\")
        elif ord(ch) < 0x20:
            parts.append(f"\\u{ord(ch):04x}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts).encode("utf-8")


def encode_canonical(value: CanonicalValue) -> bytes:
    """Serialize ``value`` deterministically. Equal values -> equal bytes."""
    out: list[bytes] = []
    _emit(value, out)
    return b"".join(out)


def _reject_float(text: str):
    raise DecodeError(f"float literal not allowed: {text}")


def _strict_pairs(pairs: list[tuple[str, object]]) -> dict:
    obj: dict = {}
    for key, val in pairs:
        if key in obj:
            raise DecodeError(f"duplicate map key: {key!r}")
        obj[key] = val
    return obj


def _check_ints(value) -> None:
    if isinstance(value, bool):
        return
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise DecodeError(f"integer out of 64-bit range: {value}")
    elif isinstance(value, list):
        for item in value:
            _check_ints(item)
    elif isinstance(value, dict):
        for item in value.values():
            _check_ints(item)


def decode_canonical(data: bytes) -> CanonicalValue:
    """Parse an encoding back into its (normalized) value.

    ``decode_canonical(encode_canonical(v)) == normalize(v)``. Byte-strings
    come back as their hex text form; callers that expect bytes convert at
    their own schema boundary.
    """
    import json

    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"not UTF-8: {exc}") from None
    try:
        value = json.loads(
            text,
            parse_float=_reject_float,
            parse_constant=_reject_float,
            object_pairs_hook=_strict_pairs,
        )
    except ValueError as exc:
        raise DecodeError(str(exc)) from None
    _check_ints(value)
    return value


def is_canonical(data: bytes) -> bool:
    """True iff ``data`` is byte-exactly the canonical encoding of its value."""
    try:
        return encode_canonical(decode_canonical(data)) == data
    except (DecodeError, UnsupportedValue):
        return False


def hash_sha256(data: bytes) -> bytes:
    """SHA-256 digest (32 bytes) of ``data``."""
    return hashlib.sha256(data).digest()


def digest_hex(digest: bytes) -> str:
    """Render a 32-byte digest as 64 lowercase hex characters."""
    if len(digest) != 32:
        raise ValueError(f"digest must be 32 bytes, got {len(digest)}")
    return digest.hex()


def digest_from_hex(text: str) -> bytes:
    """Parse the strict text form of a digest: exactly 64 lowercase hex."""
    if len(text) != 64 or not _is_lower_hex(text):
        raise DecodeError(f"not a 64-char lowercase hex digest: {text!r}")
    return bytes.fromhex(text)


def bytes_from_hex(text: str) -> bytes:
    """Parse lowercase hex text (the canonical byte-string form) strictly.

    Uppercase digits are rejected: accepting them would let two distinct
    byte sequences decode to the same value, defeating tamper evidence.
    """
    if len(text) % 2 != 0 or not _is_lower_hex(text):
        raise DecodeError(f"not lowercase hex: {text!r}")
    return bytes.fromhex(text)


def _is_lower_hex(text: str) -> bool:
    return all(c in "0123456789abcdef" for c in text)


# Verhoeff checksum, used to validate Aadhaar numbers before they are hashed
# into subject keys. Standard multiplication (dihedral group D5), permutation
# and inverse tables.

_VERHOEFF_D = (
    (0, 1, 2, 3, 4, 5, 6, 7, 8, 9),
    (1, 2, 3, 4, 0, 6, 7, 8, 9, 5),
    (2, 3, 4, 0, 1, 7, 8, 9, 5, 6),
    (3, 4, 0, 1, 2, 8, 9, 5, 6, 7),
    (4, 0, 1, 2, 3, 9, 5, 6, 7, 8),
    (5, 9, 8, 7, 6, 0, 4, 3, 2, 1),
    (6, 5, 9, 8, 7, 1, 0, 4, 3, 2),
    (7, 6, 5, 9, 8, 2, 1, 0, 4, 3),
    (8, 7, 6, 5, 9, 3, 2, 1, 0, 4),
    (9, 8, 7, 6, 5, 4, 3, 2, 1, 0),
)

_VERHOEFF_P = (
    (0, 1, 2, 3, 4, 5, 6, 7, 8, 9),
    (1, 5, 7, 6, 2, 8, 3, 0, 9, 4),
    (5, 8, 0, 3, 7, 9, 6, 1, 4, 2),
    (8, 9, 1, 6, 0, 4, 3, 5, 2, 7),
    (9, 4, 5, 3, 1, 2, 6, 8, 7, 0),
    (4, 2, 8, 6, 5, 7, 3, 9, 0, 1),
    (2, 7, 9, 3, 8, 0, 6, 4, 1, 5),
    (7, 0, 4, 6, 9, 1, 3, 2, 5, 8),
)

_VERHOEFF_INV = (0, 4, 3, 2, 1, 5, 6, 7, 8, 9)


def verhoeff_validate(digits: str) -> bool:
    """True iff ``digits`` is non-empty ASCII numeric and checksums to zero."""
    if not digits or not digits.isascii() or not digits.isdigit():
        return False
    c = 0
    for i, ch in enumerate(reversed(digits)):
        c = _VERHOEFF_D[c][_VERHOEFF_P[i % 8][int(ch)]]
    return c == 0


def verhoeff_check_digit(digits: str) -> str:
    """Check digit that makes ``digits + check`` pass verhoeff_validate."""
    if not digits or not digits.isascii() or not digits.isdigit():
        raise ValueError(f"not a digit string: {digits!r}")
    c = 0
    for i, ch in enumerate(reversed(digits), start=1):
        c = _VERHOEFF_D[c][_VERHOEFF_P[i % 8][int(ch)]]
    return str(_VERHOEFF_INV[c])
