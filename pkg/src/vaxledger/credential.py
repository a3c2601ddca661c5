"""Authority-signed, QR-encodable vaccination credentials.

A credential is a signed snapshot of a traveler's on-chain record, issued by
the authority's credential key (kept separate from the block-producer key).
Verification needs nothing but the credential text and the authority's
public key, so it works offline at a border checkpoint.

Wire format (normative, bit-exact):
``VAXLEDGER:1:`` + base64url (no padding) of the canonical credential encoding.
"""

from __future__ import annotations

import base64
import re
from dataclasses import dataclass

from . import codec, keys
from .codec import DecodeError, encode_canonical
from .registry import PassportRecord, VaccinationEntry

QR_PREFIX = "VAXLEDGER:1:"
DEFAULT_VALIDITY_DAYS = 365

VALID = "VALID"
INVALID_SIGNATURE = "INVALID_SIGNATURE"
EXPIRED = "EXPIRED"
MALFORMED = "MALFORMED"

_B64URL = re.compile(r"^[A-Za-z0-9_-]+$")


class EmptyRecord(Exception):
    """A credential cannot be issued for a record with no entries."""


class QrDecodeError(Exception):
    pass


class BadPrefix(QrDecodeError):
    pass


class BadBase64(QrDecodeError):
    pass


class BadSchema(QrDecodeError):
    pass


@dataclass(frozen=True)
class Credential:
    version: int
    subject_key: bytes
    full_name: str
    entries: tuple[VaccinationEntry, ...]
    issued_at: int
    chain_head: bytes
    signature: bytes

    def signing_payload(self) -> dict:
        return {
            "version": self.version,
            "subject_key": self.subject_key,
            "full_name": self.full_name,
            "entries": [e.to_canonical() for e in self.entries],
            "issued_at": self.issued_at,
            "chain_head": self.chain_head,
        }

    def to_canonical(self) -> dict:
        return {**self.signing_payload(), "signature": self.signature}

    @staticmethod
    def from_canonical(obj) -> "Credential":
        fields = {
            "version",
            "subject_key",
            "full_name",
            "entries",
            "issued_at",
            "chain_head",
            "signature",
        }
        if not isinstance(obj, dict) or set(obj) != fields:
            raise DecodeError("credential object has wrong fields")
        if not isinstance(obj["version"], int) or isinstance(obj["version"], bool):
            raise DecodeError("version must be an integer")
        if not isinstance(obj["full_name"], str):
            raise DecodeError("full_name must be text")
        if not isinstance(obj["issued_at"], int) or isinstance(obj["issued_at"], bool):
            raise DecodeError("issued_at must be an integer")
        if not isinstance(obj["entries"], list):
            raise DecodeError("entries must be a list")
        for field in ("subject_key", "chain_head", "signature"):
            if not isinstance(obj[field], str):
                raise DecodeError(f"{field} must be hex text")
        signature = codec.bytes_from_hex(obj["signature"])
        if len(signature) != 64:
            raise DecodeError("signature must be 64 bytes")
        return Credential(
            version=obj["version"],
            subject_key=codec.digest_from_hex(obj["subject_key"]),
            full_name=obj["full_name"],
            entries=tuple(VaccinationEntry.from_canonical(e) for e in obj["entries"]),
            issued_at=obj["issued_at"],
            chain_head=codec.digest_from_hex(obj["chain_head"]),
            signature=signature,
        )


def issue_credential(
    record: PassportRecord,
    chain_head: bytes,
    authority_credential_key: keys.SigningKey,
    issued_at: int,
) -> Credential:
    """Sign a snapshot of ``record`` as of ``chain_head``."""
    if not record.entries:
        raise EmptyRecord("record has no vaccination entries")
    unsigned = Credential(
        version=1,
        subject_key=record.subject_key,
        full_name=record.full_name,
        entries=record.entries,
        issued_at=issued_at,
        chain_head=chain_head,
        signature=b"",
    )
    signature = keys.sign(
        authority_credential_key, encode_canonical(unsigned.signing_payload())
    )
    return Credential(
        version=1,
        subject_key=record.subject_key,
        full_name=record.full_name,
        entries=record.entries,
        issued_at=issued_at,
        chain_head=chain_head,
        signature=signature,
    )


def encode_qr_payload(cred: Credential) -> str:
    """Render a credential as QR-ready text (image rendering is the UI's job)."""
    raw = encode_canonical(cred.to_canonical())
    return QR_PREFIX + base64.urlsafe_b64encode(raw).decode("ascii").rstrip("=")


def decode_qr_payload(text: str) -> Credential:
    """Parse QR payload text; the signature is NOT checked here."""
    if not text.startswith(QR_PREFIX):
        raise BadPrefix(f"payload must start with {QR_PREFIX!r}")
    body = text[len(QR_PREFIX) :]
    if not _B64URL.match(body):
        raise BadBase64("payload body is not unpadded base64url")
    try:
        raw = base64.urlsafe_b64decode(body + "=" * (-len(body) % 4))
    except ValueError as exc:
        raise BadBase64(str(exc)) from None
    try:
        return Credential.from_canonical(codec.decode_canonical(raw))
    except DecodeError as exc:
        raise BadSchema(str(exc)) from None


def verify_credential(
    cred: Credential,
    authority_pubkey: bytes,
    now: int,
    validity_window_days: int = DEFAULT_VALIDITY_DAYS,
) -> str:
    """Offline check: returns VALID | INVALID_SIGNATURE | EXPIRED | MALFORMED.

    The window is inclusive: a credential is still VALID at exactly
    ``issued_at + validity_window_days`` and EXPIRED one second later.
    """
    if not _well_formed(cred):
        return MALFORMED
    signed = encode_canonical(cred.signing_payload())
    if not keys.verify(authority_pubkey, signed, cred.signature):
        return INVALID_SIGNATURE
    if now - cred.issued_at > validity_window_days * 86400:
        return EXPIRED
    return VALID


def verify_qr_payload(
    text: str,
    authority_pubkey: bytes,
    now: int,
    validity_window_days: int = DEFAULT_VALIDITY_DAYS,
) -> str:
    """Decode-and-verify convenience; undecodable payloads are MALFORMED."""
    try:
        cred = decode_qr_payload(text)
    except QrDecodeError:
        return MALFORMED
    return verify_credential(cred, authority_pubkey, now, validity_window_days)


def _well_formed(cred: Credential) -> bool:
    return (
        cred.version == 1
        and isinstance(cred.subject_key, bytes)
        and len(cred.subject_key) == 32
        and isinstance(cred.full_name, str)
        and len(cred.entries) > 0
        and all(isinstance(e, VaccinationEntry) for e in cred.entries)
        and isinstance(cred.issued_at, int)
        and isinstance(cred.chain_head, bytes)
        and len(cred.chain_head) == 32
        and isinstance(cred.signature, bytes)
        and len(cred.signature) == 64
    )
