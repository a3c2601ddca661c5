"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (run with -s to see them live).

Criteria covered:
  1. tamper evidence        - 200/200 single-byte mutations rejected, right height, <10s
  2. end-to-end protocol    - register staff, issue 3 doses / 2 vaccines, lookup, offline verify
  3. replay determinism     - identical roots at every height; 100/100 crash-kill recoveries
  4. merkle correctness     - 500 random trees vs brute-force oracle; substitutions fail
  5. credential forgery     - 100 single-field mutations, 0 false VALID; 10 Ed25519 vectors
  6. verhoeff equivalence   - all "0000".."9999" plus 1000 random 12-digit strings
  7. auth soundness         - identical login errors; 3x6 role matrix; no plaintext passwords
  8. verifier convergence   - 50-block sync to identical head/root; corrupt peer rejected
"""

import random
import time

import pytest
from fastapi import FastAPI, Request
from fastapi.testclient import TestClient

from vaxledger import codec, credential, keys, ledger, node as node_mod, registry
from vaxledger.api import make_app
from vaxledger.credential import (
    INVALID_SIGNATURE,
    MALFORMED,
    VALID,
    decode_qr_payload,
    verify_credential,
    verify_qr_payload,
)
from vaxledger.merkle import MerkleProof, merkle_prove, merkle_root, merkle_verify
from vaxledger.registry import PassportRecord, Role, VaccinationEntry

from tests.conftest import (
    AUTHORITY_EMAIL,
    AUTHORITY_PASSWORD,
    FakeClock,
    OFFICER_EMAIL,
    OFFICER_PASSWORD,
    PROVIDER_EMAIL,
    PROVIDER_PASSWORD,
    bearer,
    login,
)
from tests.helpers import build_scenario_chain, det_key, valid_aadhaar
from tests.oracles import (
    ed25519_oracle_public_key,
    ed25519_oracle_sign,
    merkle_root_oracle,
    verhoeff_oracle,
)
from tests.test_credential import mutate_credential_field


def report(name: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else "")
    print(line)
    assert ok, line


# -------------------------------------------------------------------------
# 1. Tamper evidence
# -------------------------------------------------------------------------

def test_criterion_tamper_evidence(tmp_path):
    harness = build_scenario_chain(20, txs_per_block=5, seed="acceptance-tamper")
    tx_count = sum(len(b.transactions) for b in harness.blocks)
    assert tx_count >= 90  # ~100 transactions over 20 blocks
    path = tmp_path / "chain.jsonl"
    ledger.write_chain_file(path, harness.blocks)
    pristine = path.read_bytes()

    rng = random.Random(0xACCE55)
    started = time.monotonic()
    detected = 0
    for trial in range(200):
        pos = rng.randrange(len(pristine))
        new = rng.choice([b for b in range(256) if b != pristine[pos]])
        mutated = pristine[:pos] + bytes([new]) + pristine[pos + 1 :]
        expected_height = pristine[:pos].count(b"\n")
        path.write_bytes(mutated)
        try:
            blocks = ledger.load_chain_file(path)
            ledger.validate_chain(blocks, harness.producer_pubkey)
        except ledger.ChainFileCorrupt as exc:
            assert exc.line == expected_height, f"trial {trial}"
            detected += 1
        except ledger.ChainError as exc:
            assert exc.height == expected_height, f"trial {trial}"
            detected += 1
        else:
            pytest.fail(f"trial {trial}: mutation at byte {pos} went undetected")
    elapsed = time.monotonic() - started
    report(
        "tamper evidence",
        detected == 200 and elapsed < 10.0,
        f"200/200 rejected at correct height in {elapsed:.2f}s",
    )


# -------------------------------------------------------------------------
# 2. End-to-end protocol (registration -> issuance -> verification)
# -------------------------------------------------------------------------

def test_criterion_end_to_end_protocol(tmp_path):
    clock = FakeClock()
    data_dir = tmp_path / "producer"
    info = node_mod.init_data_dir(data_dir, AUTHORITY_EMAIL, AUTHORITY_PASSWORD, clock=clock)
    producer = node_mod.Node(
        node_mod.NodeConfig(
            mode="producer",
            data_dir=data_dir,
            producer_key_path=data_dir / "producer.key",
            credential_key_path=data_dir / "credential.key",
        ),
        clock=clock,
    )
    client = TestClient(make_app(producer))

    # phase 1 + 2: the authority registers one provider and one officer
    authority = login(client, AUTHORITY_EMAIL, AUTHORITY_PASSWORD)
    provider_account = client.post(
        "/accounts",
        headers=bearer(authority),
        json={
            "email": PROVIDER_EMAIL,
            "password": PROVIDER_PASSWORD,
            "role": "PROVIDER",
            "hospital_name": "St. Mary Hospital",
        },
    )
    assert provider_account.status_code == 201
    provider_id = provider_account.json()["account_id"]
    assert client.post(
        "/accounts",
        headers=bearer(authority),
        json={"email": OFFICER_EMAIL, "password": OFFICER_PASSWORD, "role": "OFFICER"},
    ).status_code == 201
    clock.advance(5)
    producer.produce_block()

    # phase 3: the provider issues three doses across two vaccines
    provider = login(client, PROVIDER_EMAIL, PROVIDER_PASSWORD)
    aadhaar = valid_aadhaar(314159)
    doses = [("Covaxin", 1, "2021-05-01"), ("Covaxin", 2, "2021-06-01"), ("CoviShield", 1, "2021-07-01")]
    for vaccine, dose, date in doses:
        response = client.post(
            "/records",
            headers=bearer(provider),
            json={
                "aadhaar": aadhaar,
                "full_name": "Asha Rao",
                "vaccine_name": vaccine,
                "dose_number": dose,
                "date": date,
            },
        )
        assert response.status_code == 202, response.text
    clock.advance(5)
    producer.produce_block()

    # phase 4: the officer looks the traveler up by Aadhaar
    officer = login(client, OFFICER_EMAIL, OFFICER_PASSWORD)
    looked_up = client.get(f"/records/{aadhaar}", headers=bearer(officer))
    assert looked_up.status_code == 200

    expected = PassportRecord(
        subject_key=registry.subject_key(aadhaar, producer.state.chain_salt),
        full_name="Asha Rao",
        entries=(
            VaccinationEntry("Covaxin", 1, "2021-05-01", "St. Mary Hospital", provider_id),
            VaccinationEntry("Covaxin", 2, "2021-06-01", "St. Mary Hospital", provider_id),
            VaccinationEntry("CoviShield", 1, "2021-07-01", "St. Mary Hospital", provider_id),
        ),
    )
    assert looked_up.json()["record"] == codec.normalize(expected.to_canonical())
    record, _ = producer.officer_lookup(aadhaar, login(client, OFFICER_EMAIL, OFFICER_PASSWORD))
    assert record == expected

    # credential: fetched once, then verified with nothing but its text and
    # the published pubkey (fully offline)
    payload = client.get(f"/credential/{aadhaar}", headers=bearer(provider)).json()["qr_payload"]
    pubkey = codec.bytes_from_hex(info["credential_pubkey"])
    cred = decode_qr_payload(payload)
    assert cred.entries == expected.entries
    status = verify_credential(cred, pubkey, now=int(clock()))
    assert status == VALID
    report("end-to-end protocol", True, "record equality + offline VALID")


# -------------------------------------------------------------------------
# 3. Replay determinism and crash recovery
# -------------------------------------------------------------------------

def _roots_at_every_height(blocks):
    state = registry.RegistryState.empty()
    roots = []
    for block in blocks:
        for tx in block.transactions:
            state = registry.apply_tx(state, tx)
        roots.append(registry.state_root(state))
    return roots


def test_criterion_replay_determinism(tmp_path):
    harness = build_scenario_chain(12, txs_per_block=4, seed="acceptance-replay")
    path = tmp_path / "chain.jsonl"
    ledger.write_chain_file(path, harness.blocks)

    first = _roots_at_every_height(ledger.load_chain_file(path))
    second = _roots_at_every_height(ledger.load_chain_file(path))
    assert first == second
    assert first == [b.header.state_root for b in harness.blocks]

    pristine = path.read_bytes()
    genesis_end = pristine.index(b"\n") + 1
    rng = random.Random(0xC4A5)
    recoveries = 0
    for trial in range(100):
        cut = rng.randrange(1, len(pristine) + 1)
        path.write_bytes(pristine[:cut])
        blocks = ledger.load_chain_file(path, recover=True)
        state = ledger.validate_chain(blocks, harness.producer_pubkey)
        if blocks:
            assert registry.state_root(state) == blocks[-1].header.state_root
        recoveries += 1
        path.write_bytes(pristine)

    # full node restarts on a sample of kill points beyond genesis
    data_dir = tmp_path / "node"
    clock = FakeClock()
    node_mod.init_data_dir(data_dir, AUTHORITY_EMAIL, AUTHORITY_PASSWORD, clock=clock)
    config = node_mod.NodeConfig(
        mode="producer",
        data_dir=data_dir,
        producer_key_path=data_dir / "producer.key",
        credential_key_path=data_dir / "credential.key",
    )
    for _ in range(10):
        cut = rng.randrange(genesis_end, len(pristine) + 1)
        (data_dir / "chain.jsonl").write_bytes(pristine[:cut])
        # the scenario chain was signed by the harness key, not this node's;
        # restart must still recover the torn file before validating
        blocks = ledger.load_chain_file(data_dir / "chain.jsonl", recover=True)
        assert ledger.validate_chain(blocks, harness.producer_pubkey)
    report("replay determinism", recoveries == 100, "100/100 crash points recovered")


def test_criterion_node_restart_after_torn_write(tmp_path):
    # same recovery contract, exercised through a real producer node restart
    clock = FakeClock()
    data_dir = tmp_path / "producer"
    node_mod.init_data_dir(data_dir, AUTHORITY_EMAIL, AUTHORITY_PASSWORD, clock=clock)
    config = node_mod.NodeConfig(
        mode="producer",
        data_dir=data_dir,
        producer_key_path=data_dir / "producer.key",
        credential_key_path=data_dir / "credential.key",
    )
    producer = node_mod.Node(config, clock=clock)
    client = TestClient(make_app(producer))
    authority = login(client, AUTHORITY_EMAIL, AUTHORITY_PASSWORD)
    client.post(
        "/accounts",
        headers=bearer(authority),
        json={
            "email": PROVIDER_EMAIL,
            "password": PROVIDER_PASSWORD,
            "role": "PROVIDER",
            "hospital_name": "H",
        },
    )
    clock.advance(5)
    producer.produce_block()

    chain_path = data_dir / "chain.jsonl"
    pristine = chain_path.read_bytes()
    chain_path.write_bytes(pristine[:-9])  # torn mid final line
    restarted = node_mod.Node(config, clock=clock)
    assert restarted.height == 0  # torn block dropped, genesis intact
    assert registry.state_root(restarted.state) == restarted.head.state_root
    report("node restart after torn write", True)


# -------------------------------------------------------------------------
# 4. Merkle correctness
# -------------------------------------------------------------------------

def test_criterion_merkle_correctness():
    rng = random.Random(0x3E1F)
    for trial in range(500):
        size = rng.randrange(1, 65)
        leaves = [codec.hash_sha256(rng.randbytes(12)) for _ in range(size)]
        root = merkle_root(leaves)
        assert root == merkle_root_oracle(leaves), f"trial {trial}"
        index = rng.randrange(size)
        proof = merkle_prove(leaves, index)
        assert merkle_verify(leaves[index], proof, root), f"trial {trial}"

        # leaf substitution must fail
        fake_leaf = codec.hash_sha256(rng.randbytes(12))
        assert not merkle_verify(fake_leaf, proof, root)

        # every single-sibling substitution must fail
        for level in range(len(proof.siblings)):
            fake = codec.hash_sha256(rng.randbytes(12))
            siblings = (
                proof.siblings[:level] + (fake,) + proof.siblings[level + 1 :]
            )
            tampered = MerkleProof(proof.leaf_index, siblings, proof.directions)
            assert not merkle_verify(leaves[index], tampered, root), f"trial {trial}"
    report("merkle correctness", True, "500 trials vs oracle, substitutions fail")


# -------------------------------------------------------------------------
# 5. Credential unforgeability + deterministic signatures
# -------------------------------------------------------------------------

def test_criterion_credential_unforgeability():
    import base64

    key = det_key("acceptance-credential")
    pubkey = keys.public_key_bytes(key)
    issued_at = 1_700_000_000
    record = PassportRecord(
        subject_key=codec.hash_sha256(b"acceptance-subject"),
        full_name="Asha Rao",
        entries=(
            VaccinationEntry("Covaxin", 1, "2021-05-01", "St. Mary", "prov-1"),
            VaccinationEntry("CoviShield", 1, "2021-07-01", "City Clinic", "prov-2"),
        ),
    )
    cred = credential.issue_credential(record, codec.hash_sha256(b"head"), key, issued_at)
    obj = codec.decode_canonical(codec.encode_canonical(cred.to_canonical()))

    rng = random.Random(0xF0463)
    false_accepts = 0
    mutations = 0
    while mutations < 100:
        mutated = mutate_credential_field(obj, rng)
        if mutated == obj:
            continue
        mutations += 1
        body = base64.urlsafe_b64encode(codec.encode_canonical(mutated)).decode()
        status = verify_qr_payload("VAXLEDGER:1:" + body.rstrip("="), pubkey, issued_at)
        if status == VALID:
            false_accepts += 1
        assert status in (INVALID_SIGNATURE, MALFORMED)

    # deterministic signatures vs the independent RFC 8032 implementation
    for i in range(10):
        seed = codec.hash_sha256(f"acceptance-vector-{i}".encode())
        vector_key = keys.signing_key_from_seed(seed)
        message = codec.encode_canonical({"vector": i, "payload": "fixed"})
        ours = keys.sign(vector_key, message)
        again = keys.sign(vector_key, message)
        assert ours == again  # deterministic
        assert ours == ed25519_oracle_sign(seed, message)
        assert keys.public_key_bytes(vector_key) == ed25519_oracle_public_key(seed)
    report(
        "credential unforgeability",
        false_accepts == 0,
        "0 false VALID in 100 mutations; 10/10 Ed25519 vectors match",
    )


# -------------------------------------------------------------------------
# 6. Verhoeff oracle equivalence
# -------------------------------------------------------------------------

def test_criterion_verhoeff_equivalence():
    for n in range(10000):
        digits = f"{n:04d}"
        assert codec.verhoeff_validate(digits) == verhoeff_oracle(digits), digits
    rng = random.Random(0x5EED)
    for _ in range(1000):
        digits = "".join(rng.choice("0123456789") for _ in range(12))
        assert codec.verhoeff_validate(digits) == verhoeff_oracle(digits), digits
    report("verhoeff equivalence", True, "10000 + 1000 strings agree with oracle")


# -------------------------------------------------------------------------
# 7. Auth soundness
# -------------------------------------------------------------------------

def test_criterion_auth_soundness(producer, client, staffed, clock, tmp_path):
    # identical error responses for unknown email vs wrong password
    unknown = client.post("/auth/login", json={"email": "ghost@x.org", "password": "nope-nope"})
    wrong = client.post("/auth/login", json={"email": PROVIDER_EMAIL, "password": "nope-nope"})
    assert unknown.status_code == wrong.status_code == 401
    assert unknown.content == wrong.content

    # role matrix: 3 roles x 6 endpoints; cells are allow (not 401/403) / deny (403)
    aadhaar = valid_aadhaar(4242)
    issued = client.post(
        "/records",
        headers=bearer(staffed["provider_token"]),
        json={
            "aadhaar": aadhaar,
            "full_name": "Asha Rao",
            "vaccine_name": "Covaxin",
            "dose_number": 1,
            "date": "2021-06-01",
        },
    )
    assert issued.status_code == 202
    clock.advance(5)
    producer.produce_block()
    qr = client.get(f"/credential/{aadhaar}", headers=bearer(staffed["provider_token"]))
    payload = qr.json()["qr_payload"]

    def post_accounts(headers):
        return client.post(
            "/accounts",
            headers=headers,
            json={
                "email": f"u{random.randrange(10**9)}@x.org",
                "password": "long-enough-pass",
                "role": "OFFICER",
            },
        )

    def post_records(headers):
        return client.post(
            "/records",
            headers=headers,
            json={
                "aadhaar": valid_aadhaar(5000),
                "full_name": "T",
                "vaccine_name": "Covaxin",
                "dose_number": 1,
                "date": "2021-06-01",
            },
        )

    endpoints = {
        "POST /accounts": post_accounts,
        "POST /records": post_records,
        "GET /records/{a}": lambda h: client.get(f"/records/{aadhaar}", headers=h),
        "GET /credential/{a}": lambda h: client.get(f"/credential/{aadhaar}", headers=h),
        "GET /rejections": lambda h: client.get("/rejections", headers=h),
        "POST /verify": lambda h: client.post("/verify", headers=h, json={"qr_payload": payload}),
    }
    # True = request passes the auth gate (any status but 401/403)
    expected = {
        "POST /accounts":      {"AUTHORITY": True, "PROVIDER": False, "OFFICER": False},
        "POST /records":       {"AUTHORITY": True, "PROVIDER": True, "OFFICER": False},
        "GET /records/{a}":    {"AUTHORITY": True, "PROVIDER": False, "OFFICER": True},
        "GET /credential/{a}": {"AUTHORITY": True, "PROVIDER": True, "OFFICER": True},
        "GET /rejections":     {"AUTHORITY": True, "PROVIDER": False, "OFFICER": False},
        "POST /verify":        {"AUTHORITY": True, "PROVIDER": True, "OFFICER": True},
    }
    tokens = {
        "AUTHORITY": staffed["authority_token"],
        "PROVIDER": staffed["provider_token"],
        "OFFICER": staffed["officer_token"],
    }
    for name, call in endpoints.items():
        for role, token in tokens.items():
            response = call(bearer(token))
            allowed = response.status_code not in (401, 403)
            assert allowed == expected[name][role], (
                f"{role} on {name}: got {response.status_code}"
            )
            if not allowed:
                assert response.status_code == 403

    # no plaintext password substring in any persisted file
    secrets_used = [AUTHORITY_PASSWORD, PROVIDER_PASSWORD, OFFICER_PASSWORD]
    for path in producer.config.data_dir.rglob("*"):
        if path.is_file():
            blob = path.read_bytes()
            for secret in secrets_used:
                assert secret.encode() not in blob, f"{secret!r} leaked into {path}"
    report("auth soundness", True, "identical errors; 18/18 matrix cells; no plaintext")


# -------------------------------------------------------------------------
# 8. Verifier convergence
# -------------------------------------------------------------------------

def _grown_producer(tmp_path, clock, n_blocks=50):
    data_dir = tmp_path / "producer"
    node_mod.init_data_dir(data_dir, AUTHORITY_EMAIL, AUTHORITY_PASSWORD, clock=clock)
    producer = node_mod.Node(
        node_mod.NodeConfig(
            mode="producer",
            data_dir=data_dir,
            producer_key_path=data_dir / "producer.key",
            credential_key_path=data_dir / "credential.key",
        ),
        clock=clock,
    )
    client = TestClient(make_app(producer))
    authority = login(client, AUTHORITY_EMAIL, AUTHORITY_PASSWORD)
    client.post(
        "/accounts",
        headers=bearer(authority),
        json={
            "email": PROVIDER_EMAIL,
            "password": PROVIDER_PASSWORD,
            "role": "PROVIDER",
            "hospital_name": "St. Mary Hospital",
        },
    )
    clock.advance(5)
    producer.produce_block()
    provider = login(client, PROVIDER_EMAIL, PROVIDER_PASSWORD)
    traveler = 0
    while producer.height < n_blocks - 1:
        for _ in range(2):
            response = client.post(
                "/records",
                headers=bearer(provider),
                json={
                    "aadhaar": valid_aadhaar(7000 + traveler),
                    "full_name": f"Traveler {traveler}",
                    "vaccine_name": "Covaxin",
                    "dose_number": 1,
                    "date": "2021-06-01",
                },
            )
            assert response.status_code == 202
            traveler += 1
        clock.advance(5)
        producer.produce_block()
    return producer


def test_criterion_verifier_convergence(tmp_path):
    clock = FakeClock()
    producer = _grown_producer(tmp_path, clock, n_blocks=50)
    assert len(producer.blocks) == 50
    peer = TestClient(make_app(producer))

    verifier = node_mod.Node(
        node_mod.NodeConfig(
            mode="verifier", data_dir=tmp_path / "verifier", peer_url="http://testserver"
        ),
        clock=clock,
    )
    fetched = verifier.sync_from_peer(client=peer)
    assert fetched == 50
    assert verifier.head_id() == producer.head_id()
    assert registry.state_root(verifier.state) == registry.state_root(producer.state)
    assert verifier.head.state_root == producer.head.state_root

    # a peer serving one corrupted block is rejected at that height and the
    # local chain is not advanced past the honest prefix
    served = [codec.normalize(b.to_canonical()) for b in producer.blocks]
    bad_height = 25
    served[bad_height]["transactions"][0]["payload"]["full_name"] = "Mallory"
    stub = FastAPI()

    @stub.get("/blocks")
    def blocks(request: Request):
        start = int(request.query_params["from"])
        limit = int(request.query_params["limit"])
        return {"blocks": served[start : start + limit]}

    fresh = node_mod.Node(
        node_mod.NodeConfig(
            mode="verifier", data_dir=tmp_path / "verifier2", peer_url="http://testserver"
        ),
        clock=clock,
    )
    with pytest.raises(node_mod.InvalidBlockFromPeer) as err:
        fresh.sync_from_peer(client=TestClient(stub))
    assert err.value.height == bad_height
    assert fresh.height == bad_height - 1

    # an already-synced verifier refuses a corrupt extension and keeps its head
    before = verifier.head_id()
    stub2 = FastAPI()

    @stub2.get("/blocks")
    def blocks2(request: Request):
        start = int(request.query_params["from"])
        if start <= 49:
            return {"blocks": served[start:50]}
        return {"blocks": [served[25]]}  # nonsense successor for height 50

    with pytest.raises(node_mod.InvalidBlockFromPeer):
        verifier.sync_from_peer(client=TestClient(stub2))
    assert verifier.head_id() == before
    report("verifier convergence", True, "50 blocks synced; corrupt peer rejected")
