"""Shared fixtures: an initialized producer node and API clients around it."""

import pytest
from fastapi.testclient import TestClient

from vaxledger import node as node_mod
from vaxledger.api import make_app

AUTHORITY_EMAIL = "root@health.gov"
AUTHORITY_PASSWORD = "authority-passphrase"
PROVIDER_EMAIL = "dr@stmary.org"
PROVIDER_PASSWORD = "provider-passphrase"
OFFICER_EMAIL = "officer@border.gov"
OFFICER_PASSWORD = "officer-passphrase"


class FakeClock:
    def __init__(self, t=1_700_000_000):
        self.t = t

    def __call__(self):
        return self.t

    def advance(self, dt):
        self.t += dt


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def producer(tmp_path, clock):
    data_dir = tmp_path / "producer"
    node_mod.init_data_dir(data_dir, AUTHORITY_EMAIL, AUTHORITY_PASSWORD, clock=clock)
    config = node_mod.NodeConfig(
        mode="producer",
        data_dir=data_dir,
        producer_key_path=data_dir / "producer.key",
        credential_key_path=data_dir / "credential.key",
    )
    return node_mod.Node(config, clock=clock)


@pytest.fixture
def client(producer):
    return TestClient(make_app(producer))


def login(client, email, password):
    response = client.post("/auth/login", json={"email": email, "password": password})
    assert response.status_code == 200, response.text
    return response.json()["token"]


@pytest.fixture
def authority_token(client):
    return login(client, AUTHORITY_EMAIL, AUTHORITY_PASSWORD)


def bearer(token):
    return {"Authorization": f"Bearer {token}"}


@pytest.fixture
def staffed(client, producer, authority_token, clock):
    """Producer with a registered provider and officer, roles on chain."""
    provider = client.post(
        "/accounts",
        headers=bearer(authority_token),
        json={
            "email": PROVIDER_EMAIL,
            "password": PROVIDER_PASSWORD,
            "role": "PROVIDER",
            "hospital_name": "St. Mary Hospital",
        },
    )
    assert provider.status_code == 201, provider.text
    officer = client.post(
        "/accounts",
        headers=bearer(authority_token),
        json={
            "email": OFFICER_EMAIL,
            "password": OFFICER_PASSWORD,
            "role": "OFFICER",
        },
    )
    assert officer.status_code == 201, officer.text
    clock.advance(5)
    block = producer.produce_block()
    assert block is not None and len(block.transactions) == 2
    return {
        "authority_token": authority_token,
        "provider_token": login(client, PROVIDER_EMAIL, PROVIDER_PASSWORD),
        "officer_token": login(client, OFFICER_EMAIL, OFFICER_PASSWORD),
        "provider_id": provider.json()["account_id"],
        "officer_id": officer.json()["account_id"],
    }
