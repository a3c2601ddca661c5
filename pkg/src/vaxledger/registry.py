"""The passport registry: a deterministic state machine replayed from the chain.

State holds role assignments, provider hospitals, per-traveler vaccination
records and per-actor nonces. Transactions are the only way to change it,
``apply_tx`` never mutates its input (value semantics), and replaying the
same transaction sequence always reproduces the same state and state root.

Travelers are keyed by a salted hash of their Aadhaar number so the raw ID
never appears on the ledger while officers can still look records up by
exact match.
"""

from __future__ import annotations

import datetime
import enum
from dataclasses import dataclass
from typing import Sequence

from . import codec
from .codec import DecodeError, encode_canonical, hash_sha256
from .merkle import merkle_root


class Role(str, enum.Enum):
    AUTHORITY = "AUTHORITY"
    PROVIDER = "PROVIDER"
    OFFICER = "OFFICER"


class TxKind(str, enum.Enum):
    BOOTSTRAP = "BOOTSTRAP"
    REGISTER_PROVIDER = "REGISTER_PROVIDER"
    REGISTER_OFFICER = "REGISTER_OFFICER"
    ISSUE_RECORD = "ISSUE_RECORD"


class StateError(Exception):
    """A transaction cannot be applied to the current state."""


class Unauthorized(StateError):
    def __init__(self, actor_id: str, kind: str):
        super().__init__(f"actor {actor_id!r} may not submit {kind}")
        self.actor_id = actor_id
        self.kind = kind


class BadNonce(StateError):
    pass


class DuplicateDose(StateError):
    pass


class NameMismatch(StateError):
    pass


class DuplicateRegistration(StateError):
    pass


class MalformedPayload(StateError):
    pass


class BootstrapOutsideGenesis(StateError):
    pass


class InvalidAadhaar(StateError):
    pass


class ReplayFailed(Exception):
    """A chained transaction failed to apply during replay."""

    def __init__(self, height: int, tx_index: int, inner: StateError):
        super().__init__(f"block {height} tx {tx_index}: {inner}")
        self.height = height
        self.tx_index = tx_index
        self.inner = inner


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    actor_id: str
    nonce: int
    payload: dict
    submitted_at: int

    def to_canonical(self) -> dict:
        return {
            "kind": self.kind.value,
            "actor_id": self.actor_id,
            "nonce": self.nonce,
            "payload": codec.normalize(self.payload),
            "submitted_at": self.submitted_at,
        }

    @staticmethod
    def from_canonical(obj) -> "Transaction":
        if not isinstance(obj, dict) or set(obj) != {
            "kind",
            "actor_id",
            "nonce",
            "payload",
            "submitted_at",
        }:
            raise DecodeError("transaction object has wrong fields")
        try:
            kind = TxKind(obj["kind"])
        except (ValueError, TypeError):
            raise DecodeError(f"unknown transaction kind: {obj['kind']!r}") from None
        if not isinstance(obj["actor_id"], str):
            raise DecodeError("actor_id must be text")
        if not _is_int(obj["nonce"]) or obj["nonce"] < 0:
            raise DecodeError("nonce must be a non-negative integer")
        if not isinstance(obj["payload"], dict):
            raise DecodeError("payload must be a map")
        if not _is_int(obj["submitted_at"]):
            raise DecodeError("submitted_at must be an integer")
        return Transaction(
            kind=kind,
            actor_id=obj["actor_id"],
            nonce=obj["nonce"],
            payload=obj["payload"],
            submitted_at=obj["submitted_at"],
        )

    def leaf_hash(self) -> bytes:
        return hash_sha256(encode_canonical(self.to_canonical()))


@dataclass(frozen=True)
class VaccinationEntry:
    vaccine_name: str
    dose_number: int
    date: str
    hospital_name: str
    provider_id: str

    def to_canonical(self) -> dict:
        return {
            "vaccine_name": self.vaccine_name,
            "dose_number": self.dose_number,
            "date": self.date,
            "hospital_name": self.hospital_name,
            "provider_id": self.provider_id,
        }

    @staticmethod
    def from_canonical(obj) -> "VaccinationEntry":
        if not isinstance(obj, dict) or set(obj) != {
            "vaccine_name",
            "dose_number",
            "date",
            "hospital_name",
            "provider_id",
        }:
            raise DecodeError("vaccination entry has wrong fields")
        for field in ("vaccine_name", "date", "hospital_name", "provider_id"):
            if not isinstance(obj[field], str):
                raise DecodeError(f"{field} must be text")
        if not _is_int(obj["dose_number"]) or obj["dose_number"] < 1:
            raise DecodeError("dose_number must be a positive integer")
        return VaccinationEntry(
            vaccine_name=obj["vaccine_name"],
            dose_number=obj["dose_number"],
            date=obj["date"],
            hospital_name=obj["hospital_name"],
            provider_id=obj["provider_id"],
        )


@dataclass(frozen=True)
class PassportRecord:
    subject_key: bytes
    full_name: str
    entries: tuple[VaccinationEntry, ...]

    def to_canonical(self) -> dict:
        return {
            "subject_key": self.subject_key,
            "full_name": self.full_name,
            "entries": [e.to_canonical() for e in self.entries],
        }

    @staticmethod
    def from_canonical(obj) -> "PassportRecord":
        if not isinstance(obj, dict) or set(obj) != {"subject_key", "full_name", "entries"}:
            raise DecodeError("passport record has wrong fields")
        if not isinstance(obj["subject_key"], str):
            raise DecodeError("subject_key must be hex text")
        if not isinstance(obj["full_name"], str):
            raise DecodeError("full_name must be text")
        if not isinstance(obj["entries"], list):
            raise DecodeError("entries must be a list")
        return PassportRecord(
            subject_key=codec.digest_from_hex(obj["subject_key"]),
            full_name=obj["full_name"],
            entries=tuple(VaccinationEntry.from_canonical(e) for e in obj["entries"]),
        )


@dataclass(frozen=True)
class RegistryState:
    """Full contract state. Treat as immutable; apply_tx returns new states."""

    roles: dict[str, str]
    hospitals: dict[str, str]
    records: dict[str, PassportRecord]
    nonces: dict[str, int]
    chain_salt: bytes | None

    @staticmethod
    def empty() -> "RegistryState":
        return RegistryState(roles={}, hospitals={}, records={}, nonces={}, chain_salt=None)

    def role_of(self, actor_id: str) -> Role | None:
        value = self.roles.get(actor_id)
        return Role(value) if value is not None else None


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_text(value) -> bool:
    return isinstance(value, str) and len(value) > 0


def _is_hex(value) -> bool:
    if not isinstance(value, str):
        return False
    try:
        codec.bytes_from_hex(value)
        return True
    except DecodeError:
        return False


def _is_subject_key(value) -> bool:
    return isinstance(value, str) and len(value) == 64 and _is_hex(value)


def _is_iso_date(value) -> bool:
    if not isinstance(value, str):
        return False
    try:
        datetime.date.fromisoformat(value)
        return True
    except ValueError:
        return False


def subject_key(aadhaar: str, chain_salt: bytes) -> bytes:
    """Salted lookup key for a traveler: sha256(salt || aadhaar).

    Only well-formed Aadhaar numbers (12 digits, Verhoeff-valid) are
    accepted, so malformed input is caught before it can be hashed into a
    key nobody will ever find again.
    """
    if len(aadhaar) != 12 or not codec.verhoeff_validate(aadhaar):
        raise InvalidAadhaar("not a valid 12-digit Aadhaar number")
    return hash_sha256(chain_salt + aadhaar.encode("utf-8"))


def _authority_entry_ok(entry) -> bool:
    if not isinstance(entry, dict) or set(entry) != {
        "account_id",
        "credential_pubkey",
        "producer_pubkey",
    }:
        return False
    return (
        _is_text(entry["account_id"])
        and _is_hex(entry["credential_pubkey"])
        and len(entry["credential_pubkey"]) == 64
        and _is_hex(entry["producer_pubkey"])
        and len(entry["producer_pubkey"]) == 64
    )


def _authorities_ok(value) -> bool:
    return (
        isinstance(value, list)
        and len(value) > 0
        and all(_authority_entry_ok(e) for e in value)
    )


PAYLOAD_SCHEMAS: dict[TxKind, dict] = {
    TxKind.BOOTSTRAP: {"chain_salt": _is_hex, "authorities": _authorities_ok},
    TxKind.REGISTER_PROVIDER: {"provider_id": _is_text, "hospital_name": _is_text},
    TxKind.REGISTER_OFFICER: {"officer_id": _is_text},
    TxKind.ISSUE_RECORD: {
        "subject_key": _is_subject_key,
        "full_name": _is_text,
        "vaccine_name": _is_text,
        "dose_number": lambda v: _is_int(v) and v >= 1,
        "date": _is_iso_date,
    },
}


def check_payload(kind: TxKind, payload: dict) -> None:
    """Stateless payload schema check shared by apply_tx and tx admission."""
    schema = PAYLOAD_SCHEMAS[kind]
    if set(payload) != set(schema):
        raise MalformedPayload(
            f"{kind.value} payload must have exactly fields {sorted(schema)}"
        )
    for field, ok in schema.items():
        if not ok(payload[field]):
            raise MalformedPayload(f"{kind.value} payload field {field!r} is invalid")


def apply_tx(state: RegistryState, tx: Transaction) -> RegistryState:
    """Apply one transaction, returning the successor state.

    Raises a StateError subclass and leaves ``state`` untouched when the
    transaction is not applicable.
    """
    expected_nonce = state.nonces.get(tx.actor_id, 0) + 1
    if tx.nonce != expected_nonce:
        raise BadNonce(
            f"actor {tx.actor_id!r} nonce {tx.nonce} != expected {expected_nonce}"
        )
    nonces = {**state.nonces, tx.actor_id: tx.nonce}

    if tx.kind == TxKind.BOOTSTRAP:
        if state.chain_salt is not None:
            raise BootstrapOutsideGenesis("state is already bootstrapped")
        check_payload(tx.kind, tx.payload)
        roles = dict(state.roles)
        for entry in tx.payload["authorities"]:
            if entry["account_id"] in roles:
                raise DuplicateRegistration(f"duplicate authority {entry['account_id']!r}")
            roles[entry["account_id"]] = Role.AUTHORITY.value
        return RegistryState(
            roles=roles,
            hospitals=dict(state.hospitals),
            records=dict(state.records),
            nonces=nonces,
            chain_salt=codec.bytes_from_hex(tx.payload["chain_salt"]),
        )

    actor_role = state.role_of(tx.actor_id)

    if tx.kind == TxKind.REGISTER_PROVIDER:
        if actor_role != Role.AUTHORITY:
            raise Unauthorized(tx.actor_id, tx.kind.value)
        check_payload(tx.kind, tx.payload)
        provider_id = tx.payload["provider_id"]
        if provider_id in state.roles:
            raise DuplicateRegistration(f"account {provider_id!r} already registered")
        return RegistryState(
            roles={**state.roles, provider_id: Role.PROVIDER.value},
            hospitals={**state.hospitals, provider_id: tx.payload["hospital_name"]},
            records=state.records,
            nonces=nonces,
            chain_salt=state.chain_salt,
        )

    if tx.kind == TxKind.REGISTER_OFFICER:
        if actor_role != Role.AUTHORITY:
            raise Unauthorized(tx.actor_id, tx.kind.value)
        check_payload(tx.kind, tx.payload)
        officer_id = tx.payload["officer_id"]
        if officer_id in state.roles:
            raise DuplicateRegistration(f"account {officer_id!r} already registered")
        return RegistryState(
            roles={**state.roles, officer_id: Role.OFFICER.value},
            hospitals=state.hospitals,
            records=state.records,
            nonces=nonces,
            chain_salt=state.chain_salt,
        )

    if tx.kind == TxKind.ISSUE_RECORD:
        if actor_role != Role.PROVIDER:
            raise Unauthorized(tx.actor_id, tx.kind.value)
        check_payload(tx.kind, tx.payload)
        key_hex = tx.payload["subject_key"]
        entry = VaccinationEntry(
            vaccine_name=tx.payload["vaccine_name"],
            dose_number=tx.payload["dose_number"],
            date=tx.payload["date"],
            hospital_name=state.hospitals[tx.actor_id],
            provider_id=tx.actor_id,
        )
        existing = state.records.get(key_hex)
        if existing is None:
            record = PassportRecord(
                subject_key=codec.bytes_from_hex(key_hex),
                full_name=tx.payload["full_name"],
                entries=(entry,),
            )
        else:
            if existing.full_name != tx.payload["full_name"]:
                raise NameMismatch(f"record {key_hex[:8]}… was issued under another name")
            if any(
                e.vaccine_name == entry.vaccine_name and e.dose_number == entry.dose_number
                for e in existing.entries
            ):
                raise DuplicateDose(
                    f"{entry.vaccine_name} dose {entry.dose_number} already recorded"
                )
            entries = tuple(
                sorted(
                    existing.entries + (entry,),
                    key=lambda e: (e.vaccine_name, e.dose_number),
                )
            )
            record = PassportRecord(existing.subject_key, existing.full_name, entries)
        return RegistryState(
            roles=state.roles,
            hospitals=state.hospitals,
            records={**state.records, key_hex: record},
            nonces=nonces,
            chain_salt=state.chain_salt,
        )

    raise MalformedPayload(f"unknown transaction kind {tx.kind!r}")


def lookup_record(state: RegistryState, key: bytes) -> PassportRecord | None:
    """Read-only record lookup by subject key; None when absent."""
    return state.records.get(key.hex())


def state_root(state: RegistryState) -> bytes:
    """Merkle commitment over every (section, key, value) entry of the state.

    Leaf preimages are canonical encodings and are sorted bytewise before
    hashing, so the root is independent of map insertion order.
    """
    preimages = []
    for actor_id, role in state.roles.items():
        preimages.append(encode_canonical(["roles", actor_id, role]))
    for provider_id, hospital in state.hospitals.items():
        preimages.append(encode_canonical(["hospitals", provider_id, hospital]))
    for key_hex, record in state.records.items():
        preimages.append(encode_canonical(["records", key_hex, record.to_canonical()]))
    for actor_id, nonce in state.nonces.items():
        preimages.append(encode_canonical(["nonces", actor_id, nonce]))
    if state.chain_salt is not None:
        preimages.append(encode_canonical(["salt", "chain_salt", state.chain_salt]))
    preimages.sort()
    return merkle_root([hash_sha256(p) for p in preimages])


def replay(blocks: Sequence) -> RegistryState:
    """Fold apply_tx over every transaction of every block, in order.

    ``blocks`` is any sequence of objects with ``.header.height`` and
    ``.transactions``; structural chain validity (hash links, signatures)
    is the caller's concern.
    """
    state = RegistryState.empty()
    for block in blocks:
        height = block.header.height
        for index, tx in enumerate(block.transactions):
            if tx.kind == TxKind.BOOTSTRAP and height != 0:
                raise ReplayFailed(
                    height, index, BootstrapOutsideGenesis("bootstrap beyond genesis")
                )
            try:
                state = apply_tx(state, tx)
            except StateError as exc:
                raise ReplayFailed(height, index, exc) from exc
    return state
