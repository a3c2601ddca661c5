"""The running ledger service: transaction pool, block production, peer sync.

One producer node (the trusted authority's) extends the chain; any number of
verifier nodes replicate it read-only, re-validating every block before
persisting. Writes are serialized by a single lock: a submitted transaction
either lands in the block being produced or in the next one, never half-way.
Reads serve an immutable snapshot of the last committed state.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from . import auth, codec, credential, keys, ledger, registry
from .ledger import Block, BlockHeader, block_id
from .registry import RegistryState, Role, StateError, Transaction, TxKind

logger = logging.getLogger(__name__)

SYNC_PAGE_LIMIT = 100

TX_ROLE_REQUIRED = {
    TxKind.REGISTER_PROVIDER: Role.AUTHORITY,
    TxKind.REGISTER_OFFICER: Role.AUTHORITY,
    TxKind.ISSUE_RECORD: Role.PROVIDER,
}


class NodeError(Exception):
    pass


class ConfigError(NodeError):
    pass


class NotProducer(NodeError):
    pass


class NotVerifier(NodeError):
    pass


class PoolDuplicate(NodeError):
    pass


class WouldFail(NodeError):
    """Dry-run application of the transaction failed against current state."""

    def __init__(self, inner: StateError):
        super().__init__(f"transaction would fail: {inner}")
        self.inner = inner


class PersistFailure(NodeError):
    """Block persistence failed; production halts until operator intervention."""


class PeerUnreachable(NodeError):
    pass


class InvalidBlockFromPeer(NodeError):
    """Peer served a block that fails validation. Treated as a security event."""

    def __init__(self, height: int, reason: str):
        super().__init__(f"peer served invalid block {height}: {reason}")
        self.height = height
        self.reason = reason


@dataclass
class NodeConfig:
    mode: str
    data_dir: Path
    listen_addr: str = "127.0.0.1:8530"
    block_interval_s: int = 5
    peer_url: str | None = None
    producer_key_path: Path | None = None
    credential_key_path: Path | None = None
    validity_window_days: int = 365

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if self.mode not in ("producer", "verifier"):
            raise ConfigError(f"mode must be producer or verifier, not {self.mode!r}")
        if self.mode == "producer":
            if self.producer_key_path is None or self.credential_key_path is None:
                raise ConfigError("producer mode requires both key paths")
            self.producer_key_path = Path(self.producer_key_path)
            self.credential_key_path = Path(self.credential_key_path)
        if self.mode == "verifier" and not self.peer_url:
            raise ConfigError("verifier mode requires peer_url")
        if self.block_interval_s <= 0:
            raise ConfigError("block_interval_s must be positive")

    @property
    def chain_path(self) -> Path:
        return self.data_dir / "chain.jsonl"

    @property
    def accounts_path(self) -> Path:
        return self.data_dir / "accounts.jsonl"

    @staticmethod
    def from_file(path: Path) -> "NodeConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {
            "mode",
            "data_dir",
            "listen_addr",
            "block_interval_s",
            "peer_url",
            "producer_key_path",
            "credential_key_path",
            "validity_window_days",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return NodeConfig(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _trust_anchors(genesis: Block) -> tuple[bytes, bytes]:
    """(producer_pubkey, credential_pubkey) from the bootstrap transaction."""
    entry = genesis.transactions[0].payload["authorities"][0]
    return (
        codec.bytes_from_hex(entry["producer_pubkey"]),
        codec.bytes_from_hex(entry["credential_pubkey"]),
    )


def init_data_dir(
    data_dir: Path,
    authority_email: str,
    authority_password: str,
    authority_id: str = "authority",
    clock=time.time,
) -> dict:
    """Bootstrap a fresh producer data directory.

    Generates the producer and credential keypairs, a random chain salt, the
    genesis block and the root authority account, plus a ready-to-serve
    producer config. Refuses to touch a non-empty directory.
    """
    import secrets

    data_dir = Path(data_dir)
    if data_dir.exists() and any(data_dir.iterdir()):
        raise ConfigError(f"data dir {data_dir} is not empty")
    data_dir.mkdir(parents=True, exist_ok=True)

    producer_key = keys.generate_signing_key()
    credential_key = keys.generate_signing_key()
    keys.save_signing_key(data_dir / "producer.key", producer_key)
    keys.save_signing_key(data_dir / "credential.key", credential_key)

    chain_salt = secrets.token_bytes(16)
    genesis = ledger.make_genesis(
        chain_salt=chain_salt,
        authorities=[
            ledger.AuthorityEntry(
                account_id=authority_id,
                credential_pubkey=keys.public_key_bytes(credential_key),
                producer_pubkey=keys.public_key_bytes(producer_key),
            )
        ],
        producer_key=producer_key,
        timestamp=int(clock()),
    )
    ledger.write_chain_file(data_dir / "chain.jsonl", [genesis])

    store = auth.AuthService(store_path=data_dir / "accounts.jsonl", clock=clock)
    store.bootstrap_authority(authority_id, authority_email, authority_password)

    config = {
        "mode": "producer",
        "data_dir": str(data_dir),
        "listen_addr": "127.0.0.1:8530",
        "block_interval_s": 5,
        "producer_key_path": str(data_dir / "producer.key"),
        "credential_key_path": str(data_dir / "credential.key"),
        "validity_window_days": 365,
    }
    (data_dir / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    return {
        "data_dir": str(data_dir),
        "authority_id": authority_id,
        "credential_pubkey": keys.public_key_bytes(credential_key).hex(),
        "producer_pubkey": keys.public_key_bytes(producer_key).hex(),
        "genesis_block_id": block_id(genesis.header).hex(),
        "config_path": str(data_dir / "config.json"),
    }


class Node:
    """A producer or verifier node over one data directory."""

    def __init__(self, config: NodeConfig, clock=time.time):
        self.config = config
        self.clock = clock
        self._lock = threading.RLock()
        self._stop = threading.Event()
        self._loop_thread: threading.Thread | None = None
        self.halted = False
        self.rejection_log: list[dict] = []
        self._pool: list[Transaction] = []
        self._pool_keys: set[tuple[str, int]] = set()

        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.auth = auth.AuthService(store_path=config.accounts_path, clock=clock)

        self._producer_key: keys.SigningKey | None = None
        self._credential_key: keys.SigningKey | None = None
        self._producer_pubkey: bytes | None = None
        self._credential_pubkey: bytes | None = None
        if config.mode == "producer":
            self._producer_key = keys.load_signing_key(config.producer_key_path)
            self._credential_key = keys.load_signing_key(config.credential_key_path)
            self._producer_pubkey = keys.public_key_bytes(self._producer_key)
            self._credential_pubkey = keys.public_key_bytes(self._credential_key)

        self.blocks: list[Block] = []
        self.state: RegistryState = RegistryState.empty()
        if config.chain_path.exists():
            blocks = ledger.load_chain_file(config.chain_path, recover=True)
            if blocks:
                self._adopt_chain(blocks)
        elif config.mode == "producer":
            raise ConfigError(
                f"producer data dir {config.data_dir} has no chain; run init first"
            )
        self._pending_state: RegistryState = self.state

    def _adopt_chain(self, blocks: list[Block]) -> None:
        """Validate a freshly loaded chain and take it as local truth."""
        anchors = _trust_anchors(blocks[0])
        if self._producer_pubkey is None:
            self._producer_pubkey, self._credential_pubkey = anchors
        elif anchors[0] != self._producer_pubkey:
            raise ConfigError("genesis producer key does not match configured key")
        self.state = ledger.validate_chain(blocks, self._producer_pubkey)
        self.blocks = blocks

    # -- chain views ---------------------------------------------------------

    @property
    def head(self) -> BlockHeader | None:
        with self._lock:
            return self.blocks[-1].header if self.blocks else None

    @property
    def height(self) -> int:
        with self._lock:
            return self.blocks[-1].header.height if self.blocks else -1

    def head_id(self) -> bytes | None:
        head = self.head
        return block_id(head) if head is not None else None

    def get_blocks(self, start: int, limit: int) -> list[Block]:
        limit = max(0, min(limit, SYNC_PAGE_LIMIT))
        with self._lock:
            return self.blocks[max(start, 0) : max(start, 0) + limit]

    def credential_pubkey(self) -> bytes | None:
        return self._credential_pubkey

    # -- transaction admission -------------------------------------------------

    def next_nonce(self, actor_id: str) -> int:
        """Next nonce for an actor, counting transactions already pooled."""
        with self._lock:
            return self._pending_state.nonces.get(actor_id, 0) + 1

    def submit_tx(self, tx: Transaction, token_id: str) -> dict:
        """Admit a transaction to the pool after auth + dry-run validation."""
        required = TX_ROLE_REQUIRED.get(tx.kind)
        if required is None:
            raise WouldFail(StateError(f"{tx.kind.value} cannot be submitted"))
        account_id = self.auth.authorize(token_id, required)
        if tx.actor_id != account_id:
            raise auth.Forbidden("transaction actor does not match session account")
        registry.check_payload(tx.kind, tx.payload)
        with self._lock:
            key = (tx.actor_id, tx.nonce)
            if key in self._pool_keys:
                raise PoolDuplicate(f"pending transaction exists for {key}")
            try:
                self._pending_state = registry.apply_tx(self._pending_state, tx)
            except StateError as exc:
                raise WouldFail(exc) from exc
            self._pool.append(tx)
            self._pool_keys.add(key)
            return {"accepted": True, "position": len(self._pool) - 1}

    def pool_size(self) -> int:
        with self._lock:
            return len(self._pool)

    # -- block production --------------------------------------------------------

    def produce_block(self, now: int | None = None) -> Block | None:
        """Drain the pool into one signed, persisted block. None if idle."""
        if self.config.mode != "producer":
            raise NotProducer("verifier nodes do not produce blocks")
        if self.halted:
            raise PersistFailure("production halted after persist failure")
        with self._lock:
            if not self._pool:
                return None
            drained = self._pool
            self._pool = []
            self._pool_keys = set()
            state = self.state
            survivors: list[Transaction] = []
            for tx in drained:
                try:
                    state = registry.apply_tx(state, tx)
                    survivors.append(tx)
                except StateError as exc:
                    logger.warning("dropping tx %s/%s: %s", tx.actor_id, tx.nonce, exc)
                    self.rejection_log.append(
                        {
                            "actor_id": tx.actor_id,
                            "nonce": tx.nonce,
                            "kind": tx.kind.value,
                            "reason": str(exc),
                            "at_height": self.height + 1,
                        }
                    )
            if not survivors:
                self._pending_state = self.state
                return None
            timestamp = max(
                int(now if now is not None else self.clock()), self.head.timestamp
            )
            block = ledger.append_block(
                head=self.head,
                txs=survivors,
                state_root=registry.state_root(state),
                producer_key=self._producer_key,
                timestamp=timestamp,
            )
            try:
                ledger.append_block_file(self.config.chain_path, block)
            except OSError as exc:
                # keep the drained transactions; operator must intervene
                self._pool = drained
                self._pool_keys = {(t.actor_id, t.nonce) for t in drained}
                self.halted = True
                logger.critical("block persist failed, halting production: %s", exc)
                raise PersistFailure(str(exc)) from exc
            self.blocks.append(block)
            self.state = state
            self._pending_state = state
            return block

    # -- verifier sync ---------------------------------------------------------

    def sync_from_peer(self, client: httpx.Client | None = None) -> int:
        """Pull, validate and persist new blocks from the configured peer.

        Stops at the first invalid block without persisting it; that event is
        logged at critical severity and raised as InvalidBlockFromPeer.
        """
        if self.config.mode != "verifier":
            raise NotVerifier("only verifier nodes sync from peers")
        own_client = client is None
        if own_client:
            client = httpx.Client(base_url=self.config.peer_url, timeout=10.0)
        fetched = 0
        try:
            while True:
                start = self.height + 1
                try:
                    response = client.get(
                        "/blocks", params={"from": start, "limit": SYNC_PAGE_LIMIT}
                    )
                    response.raise_for_status()
                    batch = response.json()["blocks"]
                except (httpx.HTTPError, KeyError, ValueError) as exc:
                    raise PeerUnreachable(f"peer fetch failed: {exc}") from exc
                if not batch:
                    return fetched
                for obj in batch:
                    block, new_state = self._validated_peer_block(obj)
                    ledger.append_block_file(self.config.chain_path, block)
                    with self._lock:
                        self.blocks.append(block)
                        self.state = new_state
                        self._pending_state = new_state
                    fetched += 1
        finally:
            if own_client:
                client.close()

    def _validated_peer_block(self, obj) -> tuple[Block, RegistryState]:
        try:
            block = Block.from_canonical(obj)
        except codec.DecodeError as exc:
            height = self.height + 1
            logger.critical("SECURITY: undecodable block from peer at %d: %s", height, exc)
            raise InvalidBlockFromPeer(height, f"undecodable block: {exc}") from exc
        prev = self.head
        if prev is None:
            # trust-on-first-use: anchors come from the genesis we are adopting
            try:
                producer_pubkey, credential_pubkey = _trust_anchors(block)
            except (KeyError, IndexError, TypeError, codec.DecodeError) as exc:
                logger.critical("SECURITY: malformed genesis from peer: %s", exc)
                raise InvalidBlockFromPeer(0, f"malformed genesis: {exc}") from exc
        else:
            producer_pubkey, credential_pubkey = (
                self._producer_pubkey,
                self._credential_pubkey,
            )
        try:
            new_state = ledger.validate_block(block, prev, self.state, producer_pubkey)
        except ledger.ChainError as exc:
            logger.critical("SECURITY: invalid block from peer: %s", exc)
            raise InvalidBlockFromPeer(exc.height, exc.reason) from exc
        self._producer_pubkey = producer_pubkey
        self._credential_pubkey = credential_pubkey
        return block, new_state

    # -- account registration (auth + on-chain role, one flow) ---------------

    def register_account(
        self,
        token_id: str,
        email: str,
        password: str,
        role: Role,
        hospital_name: str | None = None,
    ) -> tuple[auth.Account, dict]:
        """Create the login account and enqueue its on-chain registration."""
        account = self.auth.create_account(token_id, email, password, role, hospital_name)
        actor_id = self.auth.authorize(token_id, Role.AUTHORITY)
        if role == Role.PROVIDER:
            kind = TxKind.REGISTER_PROVIDER
            payload = {"provider_id": account.account_id, "hospital_name": hospital_name}
        else:
            kind = TxKind.REGISTER_OFFICER
            payload = {"officer_id": account.account_id}
        tx = Transaction(
            kind=kind,
            actor_id=actor_id,
            nonce=self.next_nonce(actor_id),
            payload=payload,
            submitted_at=int(self.clock()),
        )
        try:
            receipt = self.submit_tx(tx, token_id)
        except NodeError:
            self.auth.remove_account(account.account_id)
            raise
        return account, receipt

    def submit_issue(
        self,
        token_id: str,
        aadhaar: str,
        full_name: str,
        vaccine_name: str,
        dose_number: int,
        date: str,
    ) -> dict:
        """Build and submit an ISSUE_RECORD for the logged-in provider.

        The subject key is derived server-side; the raw Aadhaar number is
        neither logged nor persisted.
        """
        actor_id = self.auth.authorize(token_id, Role.PROVIDER)
        key = registry.subject_key(aadhaar, self._require_salt())
        tx = Transaction(
            kind=TxKind.ISSUE_RECORD,
            actor_id=actor_id,
            nonce=self.next_nonce(actor_id),
            payload={
                "subject_key": key.hex(),
                "full_name": full_name,
                "vaccine_name": vaccine_name,
                "dose_number": dose_number,
                "date": date,
            },
            submitted_at=int(self.clock()),
        )
        return self.submit_tx(tx, token_id)

    # -- lookups and credentials ----------------------------------------------

    def _require_salt(self) -> bytes:
        if self.state.chain_salt is None:
            raise NodeError("chain is not bootstrapped yet")
        return self.state.chain_salt

    def officer_lookup(self, aadhaar: str, token_id: str):
        """Record + chain height for a traveler, or None when absent."""
        self.auth.authorize(token_id, Role.OFFICER)
        key = registry.subject_key(aadhaar, self._require_salt())
        with self._lock:
            record = registry.lookup_record(self.state, key)
            height = self.height
        if record is None:
            return None
        return record, height

    def credential_payload(self, aadhaar: str, token_id: str) -> str | None:
        """Signed QR payload for a traveler's current record, or None."""
        self.auth.authorize(token_id, {Role.PROVIDER, Role.OFFICER})
        if self._credential_key is None:
            raise NotProducer("credentials are issued by the producer node")
        key = registry.subject_key(aadhaar, self._require_salt())
        with self._lock:
            record = registry.lookup_record(self.state, key)
            head = self.head
        if record is None:
            return None
        cred = credential.issue_credential(
            record, block_id(head), self._credential_key, int(self.clock())
        )
        return credential.encode_qr_payload(cred)

    def verify_payload(self, text: str) -> str:
        """Offline-equivalent credential check against the authority pubkey."""
        pubkey = self._credential_pubkey
        if pubkey is None:
            return credential.MALFORMED
        return credential.verify_qr_payload(
            text, pubkey, int(self.clock()), self.config.validity_window_days
        )

    # -- background loop -----------------------------------------------------

    def start_loop(self) -> None:
        """Producer: periodic block production. Verifier: periodic peer sync."""
        if self._loop_thread is not None:
            return
        self._stop.clear()
        self._loop_thread = threading.Thread(target=self._run_loop, daemon=True)
        self._loop_thread.start()

    def stop_loop(self) -> None:
        self._stop.set()
        if self._loop_thread is not None:
            self._loop_thread.join()
            self._loop_thread = None

    def _run_loop(self) -> None:
        while not self._stop.wait(self.config.block_interval_s):
            try:
                if self.config.mode == "producer":
                    self.produce_block()
                else:
                    self.sync_from_peer()
            except PersistFailure:
                logger.critical("production loop stopped; operator intervention needed")
                return
            except (PeerUnreachable, InvalidBlockFromPeer) as exc:
                logger.error("sync attempt failed: %s", exc)
