"""Append-only hash-chained blocks with Merkle commitments.

Each block header commits to the previous block's identity, the Merkle root
of its transactions and the Merkle root of the post-state, and is signed by
the producing authority node. A block's identity is the hash of the full
canonical header (signature included; Ed25519 signatures are deterministic,
so rebuilding a chain from the same inputs is byte-identical).

Persistence is a JSON-lines file: line N holds the canonical encoding of
the block at height N. Only an unterminated final line may be dropped as a
torn write during recovery; anything else is corruption.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import codec, keys, registry
from .codec import DecodeError, encode_canonical, hash_sha256
from .merkle import merkle_root
from .registry import RegistryState, StateError, Transaction

logger = logging.getLogger(__name__)

GENESIS_PREV_HASH = b"\x00" * 32
GENESIS_ACTOR = "genesis"


class LedgerError(Exception):
    pass


class EmptyBlock(LedgerError):
    pass


class TimestampRegression(LedgerError):
    pass


class EmptyAuthoritySet(LedgerError):
    pass


class ChainError(LedgerError):
    """Chain validation failure at a specific height."""

    def __init__(self, height: int, reason: str):
        super().__init__(f"block {height}: {reason}")
        self.height = height
        self.reason = reason


class BadHeight(ChainError):
    pass


class BrokenHashLink(ChainError):
    pass


class BadTxRoot(ChainError):
    pass


class BadStateRoot(ChainError):
    pass


class BadSignature(ChainError):
    pass


class ChainFileCorrupt(LedgerError):
    """A persisted block line cannot be decoded back to its canonical form."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"chain file line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    tx_root: bytes
    state_root: bytes
    timestamp: int
    producer_id: str
    signature: bytes

    def signing_payload(self) -> dict:
        return {
            "height": self.height,
            "prev_hash": self.prev_hash,
            "tx_root": self.tx_root,
            "state_root": self.state_root,
            "timestamp": self.timestamp,
            "producer_id": self.producer_id,
        }

    def to_canonical(self) -> dict:
        return {**self.signing_payload(), "signature": self.signature}

    @staticmethod
    def from_canonical(obj) -> "BlockHeader":
        fields = {
            "height",
            "prev_hash",
            "tx_root",
            "state_root",
            "timestamp",
            "producer_id",
            "signature",
        }
        if not isinstance(obj, dict) or set(obj) != fields:
            raise DecodeError("block header has wrong fields")
        if not isinstance(obj["height"], int) or isinstance(obj["height"], bool):
            raise DecodeError("height must be an integer")
        if obj["height"] < 0:
            raise DecodeError("height must be non-negative")
        if not isinstance(obj["timestamp"], int) or isinstance(obj["timestamp"], bool):
            raise DecodeError("timestamp must be an integer")
        if not isinstance(obj["producer_id"], str):
            raise DecodeError("producer_id must be text")
        signature = codec.bytes_from_hex(_expect_str(obj, "signature"))
        if len(signature) != 64:
            raise DecodeError("signature must be 64 bytes")
        return BlockHeader(
            height=obj["height"],
            prev_hash=codec.digest_from_hex(_expect_str(obj, "prev_hash")),
            tx_root=codec.digest_from_hex(_expect_str(obj, "tx_root")),
            state_root=codec.digest_from_hex(_expect_str(obj, "state_root")),
            timestamp=obj["timestamp"],
            producer_id=obj["producer_id"],
            signature=signature,
        )


def _expect_str(obj: dict, field: str) -> str:
    if not isinstance(obj[field], str):
        raise DecodeError(f"{field} must be hex text")
    return obj[field]


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...]

    def to_canonical(self) -> dict:
        return {
            "header": self.header.to_canonical(),
            "transactions": [tx.to_canonical() for tx in self.transactions],
        }

    @staticmethod
    def from_canonical(obj) -> "Block":
        if not isinstance(obj, dict) or set(obj) != {"header", "transactions"}:
            raise DecodeError("block object has wrong fields")
        if not isinstance(obj["transactions"], list):
            raise DecodeError("transactions must be a list")
        return Block(
            header=BlockHeader.from_canonical(obj["header"]),
            transactions=tuple(
                Transaction.from_canonical(tx) for tx in obj["transactions"]
            ),
        )


def block_id(header: BlockHeader) -> bytes:
    """Identity of a block: hash of its full canonical header."""
    return hash_sha256(encode_canonical(header.to_canonical()))


def tx_merkle_root(transactions: Sequence[Transaction]) -> bytes:
    return merkle_root([tx.leaf_hash() for tx in transactions])


def _signed_header(
    height: int,
    prev_hash: bytes,
    tx_root: bytes,
    state_root: bytes,
    timestamp: int,
    producer_id: str,
    producer_key: keys.SigningKey,
) -> BlockHeader:
    unsigned = {
        "height": height,
        "prev_hash": prev_hash,
        "tx_root": tx_root,
        "state_root": state_root,
        "timestamp": timestamp,
        "producer_id": producer_id,
    }
    signature = keys.sign(producer_key, encode_canonical(unsigned))
    return BlockHeader(
        height=height,
        prev_hash=prev_hash,
        tx_root=tx_root,
        state_root=state_root,
        timestamp=timestamp,
        producer_id=producer_id,
        signature=signature,
    )


@dataclass(frozen=True)
class AuthorityEntry:
    """Bootstrap descriptor for one trusted-authority account."""

    account_id: str
    credential_pubkey: bytes
    producer_pubkey: bytes

    def to_payload(self) -> dict:
        return {
            "account_id": self.account_id,
            "credential_pubkey": self.credential_pubkey.hex(),
            "producer_pubkey": self.producer_pubkey.hex(),
        }


def make_genesis(
    chain_salt: bytes,
    authorities: Sequence[AuthorityEntry],
    producer_key: keys.SigningKey,
    timestamp: int,
) -> Block:
    """Height-0 block carrying the bootstrap transaction.

    The bootstrap embeds the chain salt and the authority public keys so a
    verifier can learn the trust anchors from the chain itself.
    """
    if not authorities:
        raise EmptyAuthoritySet("at least one authority is required")
    bootstrap = Transaction(
        kind=registry.TxKind.BOOTSTRAP,
        actor_id=GENESIS_ACTOR,
        nonce=1,
        payload={
            "chain_salt": chain_salt.hex(),
            "authorities": [a.to_payload() for a in authorities],
        },
        submitted_at=timestamp,
    )
    state = registry.apply_tx(RegistryState.empty(), bootstrap)
    header = _signed_header(
        height=0,
        prev_hash=GENESIS_PREV_HASH,
        tx_root=tx_merkle_root([bootstrap]),
        state_root=registry.state_root(state),
        timestamp=timestamp,
        producer_id=authorities[0].account_id,
        producer_key=producer_key,
    )
    return Block(header=header, transactions=(bootstrap,))


def append_block(
    head: BlockHeader,
    txs: Sequence[Transaction],
    state_root: bytes,
    producer_key: keys.SigningKey,
    timestamp: int,
) -> Block:
    """Build and sign the successor of ``head`` containing ``txs``."""
    if not txs:
        raise EmptyBlock("a block must contain at least one transaction")
    if timestamp < head.timestamp:
        raise TimestampRegression(
            f"timestamp {timestamp} earlier than head's {head.timestamp}"
        )
    header = _signed_header(
        height=head.height + 1,
        prev_hash=block_id(head),
        tx_root=tx_merkle_root(txs),
        state_root=state_root,
        timestamp=timestamp,
        producer_id=head.producer_id,
        producer_key=producer_key,
    )
    return Block(header=header, transactions=tuple(txs))


def validate_block(
    block: Block,
    prev_header: BlockHeader | None,
    state: RegistryState,
    producer_pubkey: bytes,
) -> RegistryState:
    """Validate one block against its predecessor and pre-state.

    Returns the post-state on success; raises a ChainError subclass naming
    the failing height otherwise. Used both for whole-chain validation and
    for incremental peer sync.
    """
    header = block.header
    expected_height = 0 if prev_header is None else prev_header.height + 1
    if header.height != expected_height:
        raise BadHeight(expected_height, f"header claims height {header.height}")
    expected_prev = GENESIS_PREV_HASH if prev_header is None else block_id(prev_header)
    if header.prev_hash != expected_prev:
        raise BrokenHashLink(header.height, "prev_hash does not match predecessor")
    signed = encode_canonical(header.signing_payload())
    if not keys.verify(producer_pubkey, signed, header.signature):
        raise BadSignature(header.height, "header signature does not verify")
    if header.tx_root != tx_merkle_root(block.transactions):
        raise BadTxRoot(header.height, "tx_root does not match transactions")
    for index, tx in enumerate(block.transactions):
        if tx.kind == registry.TxKind.BOOTSTRAP and header.height != 0:
            raise BadStateRoot(header.height, f"tx {index}: bootstrap beyond genesis")
        try:
            state = registry.apply_tx(state, tx)
        except StateError as exc:
            raise BadStateRoot(header.height, f"tx {index} does not apply: {exc}") from exc
    if registry.state_root(state) != header.state_root:
        raise BadStateRoot(header.height, "state_root does not match replayed state")
    return state


def validate_chain(blocks: Sequence[Block], producer_pubkey: bytes) -> RegistryState:
    """Fully validate a chain: heights, links, signatures, roots, replay.

    Returns the final replayed state so callers get validation and state
    reconstruction in one pass.
    """
    state = RegistryState.empty()
    prev: BlockHeader | None = None
    for block in blocks:
        state = validate_block(block, prev, state, producer_pubkey)
        prev = block.header
    return state


def encode_block_line(block: Block) -> bytes:
    return encode_canonical(block.to_canonical()) + b"\n"


def decode_block_line(line: bytes) -> Block:
    """Strict decode of one persisted line; re-encoding must be byte-exact."""
    value = codec.decode_canonical(line)
    block = Block.from_canonical(value)
    if encode_canonical(block.to_canonical()) != line:
        raise DecodeError("line is not a canonical block encoding")
    return block


def append_block_file(path: Path, block: Block) -> None:
    """Durably append one block line (flush + fsync before returning)."""
    import os

    with open(path, "ab") as fh:
        fh.write(encode_block_line(block))
        fh.flush()
        os.fsync(fh.fileno())


def write_chain_file(path: Path, blocks: Sequence[Block]) -> None:
    import os

    with open(path, "wb") as fh:
        for block in blocks:
            fh.write(encode_block_line(block))
        fh.flush()
        os.fsync(fh.fileno())


def load_chain_file(path: Path, recover: bool = False) -> list[Block]:
    """Load all blocks from a JSON-lines chain file.

    With ``recover=True`` (node startup after a crash) a defective *final*
    line is treated as a torn write: it is logged, truncated from the file,
    and loading succeeds with the prefix. A complete-but-unterminated final
    line that decodes cleanly is kept and its newline repaired. Defects
    anywhere else always raise ChainFileCorrupt.
    """
    data = path.read_bytes()
    blocks: list[Block] = []
    offset = 0
    line_no = 0
    while offset < len(data):
        newline = data.find(b"\n", offset)
        terminated = newline != -1
        end = newline if terminated else len(data)
        line = data[offset:end]
        try:
            block = decode_block_line(line)
        except DecodeError as exc:
            is_final = end == len(data) or newline == len(data) - 1
            if recover and is_final:
                logger.warning(
                    "truncating torn trailing line %d of %s (%s)", line_no, path, exc
                )
                with open(path, "r+b") as fh:
                    fh.truncate(offset)
                return blocks
            raise ChainFileCorrupt(line_no, str(exc)) from exc
        blocks.append(block)
        if not terminated:
            if not recover:
                raise ChainFileCorrupt(line_no, "final line is unterminated")
            logger.warning("repairing missing newline on line %d of %s", line_no, path)
            with open(path, "ab") as fh:
                fh.write(b"\n")
            return blocks
        offset = newline + 1
        line_no += 1
    return blocks
