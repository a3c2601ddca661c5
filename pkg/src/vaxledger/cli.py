"""Operator CLI: bootstrap, run and administer a node, plus offline verification.

Exit codes: 0 success, 1 user error (bad input, denied request, non-VALID
credential), 2 system error (unreachable peer/API, bind or persist failure).
Every subcommand prints line-oriented `key: value` output, or a single JSON
object with `--json`.

Admin actions go through the HTTP API with a session token (see `login`),
never by writing the data dir directly. Secrets are read from environment
variables or an interactive prompt; passing `--password` on argv is
supported for test scripting only.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click
import httpx

from . import codec, credential, node as node_mod
from .api import make_app

# Contract: 1 = user error (click's default usage-error exit code is 2)
click.UsageError.exit_code = 1

DEFAULT_API = "http://127.0.0.1:8530"


def _emit(data: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(data, sort_keys=True))
    else:
        for key, value in data.items():
            click.echo(f"{key}: {value}")


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _request(method: str, api: str, path: str, token: str | None = None, **kwargs):
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    try:
        response = httpx.request(
            method, api.rstrip("/") + path, headers=headers, timeout=10.0, **kwargs
        )
    except httpx.HTTPError as exc:
        _fail(2, f"cannot reach API at {api}: {exc}")
    if response.status_code >= 500:
        _fail(2, f"API error {response.status_code}: {response.text}")
    if response.status_code >= 400:
        try:
            detail = response.json().get("error", response.text)
        except ValueError:
            detail = response.text
        _fail(1, f"request refused ({response.status_code}): {detail}")
    return response.json()


@click.group()
def main():
    """vaxledger: permissioned ledger for digital vaccine passports."""


@main.command()
@click.option("--data-dir", required=True, type=click.Path(path_type=Path))
@click.option("--authority-email", required=True)
@click.option(
    "--authority-password",
    envvar="VAXLEDGER_AUTHORITY_PASSWORD",
    prompt=True,
    hide_input=True,
)
@click.option("--json", "as_json", is_flag=True)
def init(data_dir: Path, authority_email: str, authority_password: str, as_json: bool):
    """Create keys, chain salt, genesis block and the authority account."""
    try:
        info = node_mod.init_data_dir(data_dir, authority_email, authority_password)
    except node_mod.ConfigError as exc:
        _fail(1, str(exc))
    except Exception as exc:  # key/chain write failures
        _fail(2, str(exc))
    _emit(info, as_json)


@main.command()
@click.option(
    "--config",
    "config_path",
    required=True,
    envvar="VAXLEDGER_CONFIG",
    type=click.Path(path_type=Path),
)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None)
def serve(config_path: Path, ui_dir: Path | None):
    """Run the node until terminated; drains in-flight persists on shutdown."""
    import uvicorn

    try:
        config = node_mod.NodeConfig.from_file(config_path)
        node = node_mod.Node(config)
    except (node_mod.ConfigError, OSError) as exc:
        _fail(2, str(exc))
    host, _, port_text = config.listen_addr.partition(":")
    port = int(port_text or "8530")
    probe = socket.socket()
    try:
        probe.bind((host, port))
    except OSError as exc:
        _fail(2, f"cannot bind {config.listen_addr}: {exc}")
    finally:
        probe.close()
    app = make_app(node, ui_dir=ui_dir)
    node.start_loop()
    # uvicorn re-raises a captured SIGTERM after its graceful shutdown, which
    # would kill us before cleanup; absorb it so stop_loop() can complete any
    # in-flight block persist and the process exits 0.
    import signal

    signal.signal(signal.SIGTERM, lambda signum, frame: None)
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        node.stop_loop()


@main.command()
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@click.option("--email", required=True)
@click.option("--password", envvar="VAXLEDGER_PASSWORD", prompt=True, hide_input=True)
@click.option("--json", "as_json", is_flag=True)
def login(api: str, email: str, password: str, as_json: bool):
    """Obtain a session token for subsequent commands."""
    body = _request("POST", api, "/auth/login", json={"email": email, "password": password})
    _emit(body, as_json)


def _token_option(fn):
    return click.option("--token", required=True, envvar="VAXLEDGER_TOKEN")(fn)


@main.command("register-provider")
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@_token_option
@click.option("--email", required=True)
@click.option("--password", envvar="VAXLEDGER_NEW_PASSWORD", prompt=True, hide_input=True)
@click.option("--hospital", required=True)
@click.option("--json", "as_json", is_flag=True)
def register_provider(api, token, email, password, hospital, as_json):
    """Register a healthcare provider (authority only)."""
    body = _request(
        "POST",
        api,
        "/accounts",
        token=token,
        json={
            "email": email,
            "password": password,
            "role": "PROVIDER",
            "hospital_name": hospital,
        },
    )
    _emit(body, as_json)


@main.command("register-officer")
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@_token_option
@click.option("--email", required=True)
@click.option("--password", envvar="VAXLEDGER_NEW_PASSWORD", prompt=True, hide_input=True)
@click.option("--json", "as_json", is_flag=True)
def register_officer(api, token, email, password, as_json):
    """Register an immigration officer (authority only)."""
    body = _request(
        "POST",
        api,
        "/accounts",
        token=token,
        json={"email": email, "password": password, "role": "OFFICER"},
    )
    _emit(body, as_json)


@main.command()
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@_token_option
@click.option("--aadhaar", required=True)
@click.option("--name", required=True)
@click.option("--vaccine", required=True)
@click.option("--dose", required=True, type=int)
@click.option("--date", required=True)
@click.option("--json", "as_json", is_flag=True)
def issue(api, token, aadhaar, name, vaccine, dose, date, as_json):
    """Submit a vaccination record (provider only)."""
    body = _request(
        "POST",
        api,
        "/records",
        token=token,
        json={
            "aadhaar": aadhaar,
            "full_name": name,
            "vaccine_name": vaccine,
            "dose_number": dose,
            "date": date,
        },
    )
    _emit(body, as_json)


@main.command()
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@_token_option
@click.option("--aadhaar", required=True)
@click.option("--json", "as_json", is_flag=True)
def lookup(api, token, aadhaar, as_json):
    """Look up a traveler's record by Aadhaar (officer only)."""
    body = _request("GET", api, f"/records/{aadhaar}", token=token)
    if as_json:
        _emit(body, True)
        return
    record = body["record"]
    click.echo(f"full_name: {record['full_name']}")
    click.echo(f"verified_at_height: {body['verified_at_height']}")
    for entry in record["entries"]:
        click.echo(
            "entry: {vaccine_name} dose {dose_number} on {date} at {hospital_name}".format(
                **entry
            )
        )


@main.command("credential")
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@_token_option
@click.option("--aadhaar", required=True)
@click.option("--json", "as_json", is_flag=True)
def credential_cmd(api, token, aadhaar, as_json):
    """Fetch the signed QR payload for a traveler."""
    body = _request("GET", api, f"/credential/{aadhaar}", token=token)
    if as_json:
        _emit(body, True)
    else:
        click.echo(body["qr_payload"])


@main.command()
@click.option("--qr-payload", required=True)
@click.option("--pubkey", required=True, help="authority credential public key, hex")
@click.option("--validity-days", default=credential.DEFAULT_VALIDITY_DAYS, type=int)
@click.option("--json", "as_json", is_flag=True)
def verify(qr_payload, pubkey, validity_days, as_json):
    """Verify a QR payload fully offline; exit 0 iff VALID."""
    import time

    try:
        key = codec.bytes_from_hex(pubkey)
    except codec.DecodeError:
        _fail(1, "pubkey must be lowercase hex")
    status = credential.verify_qr_payload(qr_payload, key, int(time.time()), validity_days)
    _emit({"status": status}, as_json)
    sys.exit(0 if status == credential.VALID else 1)


@main.command("sync-status")
@click.option("--api", default=DEFAULT_API, envvar="VAXLEDGER_API")
@click.option("--json", "as_json", is_flag=True)
def sync_status(api, as_json):
    """Show the chain head of a running node."""
    body = _request("GET", api, "/chain/head")
    summary = {
        "height": body["header"]["height"],
        "block_id": body["block_id"],
        "timestamp": body["header"]["timestamp"],
    }
    _emit(summary, as_json)


if __name__ == "__main__":
    main()
