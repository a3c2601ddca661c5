"""Ed25519 signing helpers and on-disk key storage (32-byte raw seeds, hex)."""

from __future__ import annotations

import os
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SigningKey = Ed25519PrivateKey


def generate_signing_key() -> SigningKey:
    return Ed25519PrivateKey.generate()


def signing_key_from_seed(seed: bytes) -> SigningKey:
    return Ed25519PrivateKey.from_private_bytes(seed)


def signing_key_seed(key: SigningKey) -> bytes:
    return key.private_bytes(
        encoding=serialization.Encoding.Raw,
        format=serialization.PrivateFormat.Raw,
        encryption_algorithm=serialization.NoEncryption(),
    )


def public_key_bytes(key: SigningKey) -> bytes:
    return key.public_key().public_bytes(
        encoding=serialization.Encoding.Raw,
        format=serialization.PublicFormat.Raw,
    )


def sign(key: SigningKey, data: bytes) -> bytes:
    return key.sign(data)


def verify(public_key: bytes, data: bytes, signature: bytes) -> bool:
    if len(public_key) != 32 or len(signature) != 64:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, data)
        return True
    except (InvalidSignature, ValueError):
        return False


def save_signing_key(path: Path, key: SigningKey) -> None:
    """Write the seed as hex, readable only by the service user."""
    path.write_text(signing_key_seed(key).hex() + "\n")
    os.chmod(path, 0o600)


def load_signing_key(path: Path) -> SigningKey:
    seed = bytes.fromhex(path.read_text().strip())
    return signing_key_from_seed(seed)
