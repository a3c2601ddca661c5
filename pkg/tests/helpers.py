"""Shared test harness: deterministic keys, valid Aadhaar numbers, and an
honest chain builder used by ledger, node and acceptance tests."""

from __future__ import annotations

import hashlib

from vaxledger import codec, keys, ledger, registry

T0 = 1_700_000_000
AUTHORITY_ID = "authority"


def det_key(label: str) -> keys.SigningKey:
    """Deterministic Ed25519 key derived from a label, for reproducible tests."""
    return keys.signing_key_from_seed(hashlib.sha256(label.encode()).digest())


def valid_aadhaar(i: int) -> str:
    """The i-th syntactically valid Aadhaar number (12 digits, Verhoeff)."""
    base = f"{20000000000 + i:011d}"
    return base + codec.verhoeff_check_digit(base)


class ChainHarness:
    """Builds honest chains: genesis plus sealed blocks of applied transactions.

    Tracks nonces and replayed state the same way a producer node would, but
    with fixed timestamps and deterministic keys so rebuilt chains are
    byte-identical.
    """

    def __init__(self, seed: str = "test", authority_id: str = AUTHORITY_ID):
        self.producer_key = det_key(f"{seed}-producer")
        self.credential_key = det_key(f"{seed}-credential")
        self.authority_id = authority_id
        self.chain_salt = hashlib.sha256(f"{seed}-salt".encode()).digest()[:16]
        self._nonces: dict[str, int] = {}
        genesis = ledger.make_genesis(
            chain_salt=self.chain_salt,
            authorities=[
                ledger.AuthorityEntry(
                    account_id=authority_id,
                    credential_pubkey=keys.public_key_bytes(self.credential_key),
                    producer_pubkey=keys.public_key_bytes(self.producer_key),
                )
            ],
            producer_key=self.producer_key,
            timestamp=T0,
        )
        self._nonces[ledger.GENESIS_ACTOR] = 1
        self.blocks: list[ledger.Block] = [genesis]
        self.state = registry.replay(self.blocks)

    @property
    def head(self) -> ledger.BlockHeader:
        return self.blocks[-1].header

    @property
    def producer_pubkey(self) -> bytes:
        return keys.public_key_bytes(self.producer_key)

    def next_nonce(self, actor_id: str) -> int:
        self._nonces[actor_id] = self._nonces.get(actor_id, 0) + 1
        return self._nonces[actor_id]

    def tx_register_provider(self, provider_id: str, hospital: str) -> registry.Transaction:
        return registry.Transaction(
            kind=registry.TxKind.REGISTER_PROVIDER,
            actor_id=self.authority_id,
            nonce=self.next_nonce(self.authority_id),
            payload={"provider_id": provider_id, "hospital_name": hospital},
            submitted_at=self.head.timestamp,
        )

    def tx_register_officer(self, officer_id: str) -> registry.Transaction:
        return registry.Transaction(
            kind=registry.TxKind.REGISTER_OFFICER,
            actor_id=self.authority_id,
            nonce=self.next_nonce(self.authority_id),
            payload={"officer_id": officer_id},
            submitted_at=self.head.timestamp,
        )

    def tx_issue(
        self,
        provider_id: str,
        aadhaar: str,
        full_name: str,
        vaccine_name: str,
        dose_number: int,
        date: str,
    ) -> registry.Transaction:
        key = registry.subject_key(aadhaar, self.chain_salt)
        return registry.Transaction(
            kind=registry.TxKind.ISSUE_RECORD,
            actor_id=provider_id,
            nonce=self.next_nonce(provider_id),
            payload={
                "subject_key": key.hex(),
                "full_name": full_name,
                "vaccine_name": vaccine_name,
                "dose_number": dose_number,
                "date": date,
            },
            submitted_at=self.head.timestamp,
        )

    def seal(self, txs: list[registry.Transaction], dt: int = 5) -> ledger.Block:
        """Apply txs on top of current state and append the signed block."""
        state = self.state
        for tx in txs:
            state = registry.apply_tx(state, tx)
        block = ledger.append_block(
            head=self.head,
            txs=txs,
            state_root=registry.state_root(state),
            producer_key=self.producer_key,
            timestamp=self.head.timestamp + dt,
        )
        self.blocks.append(block)
        self.state = state
        return block


def build_scenario_chain(
    n_blocks: int, txs_per_block: int = 5, seed: str = "scenario"
) -> ChainHarness:
    """An honest chain: providers/officers registered first, then issuances."""
    harness = ChainHarness(seed=seed)
    harness.seal(
        [
            harness.tx_register_provider("prov-1", "St. Mary Hospital"),
            harness.tx_register_provider("prov-2", "City Clinic"),
            harness.tx_register_officer("off-1"),
        ]
    )
    traveler = 0
    while len(harness.blocks) < n_blocks:
        txs = []
        for _ in range(txs_per_block):
            provider = "prov-1" if traveler % 2 == 0 else "prov-2"
            txs.append(
                harness.tx_issue(
                    provider,
                    valid_aadhaar(traveler),
                    f"Traveler {traveler}",
                    "CoviShield" if traveler % 3 else "Covaxin",
                    1,
                    "2021-06-01",
                )
            )
            traveler += 1
        harness.seal(txs)
    return harness
