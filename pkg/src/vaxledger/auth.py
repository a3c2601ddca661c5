"""Self-hosted email/password authentication with role-gated session tokens.

Accounts live off-chain in a local JSON-lines store (passwords must never
reach the immutable ledger); only role registrations go on-chain, wired up
by the node. Passwords are hashed with scrypt (memory-hard), with the salt
and cost parameters recorded per account so they can be migrated later.
Sessions are opaque random tokens held in a server-side table.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import re
import secrets
import threading
import time
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

from . import codec
from .codec import DecodeError, encode_canonical
from .registry import Role

SESSION_LIFETIME_S = 8 * 3600
MIN_PASSWORD_LENGTH = 10

# Recorded per account; bump here to migrate new accounts to stronger costs.
SCRYPT_PARAMS = {"algorithm": "scrypt", "n": 16384, "r": 8, "p": 1, "dklen": 32}

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


class AuthError(Exception):
    pass


class Forbidden(AuthError):
    pass


class EmailTaken(AuthError):
    pass


class WeakPassword(AuthError):
    pass


class MissingHospital(AuthError):
    pass


class BadEmail(AuthError):
    pass


class InvalidCredentials(AuthError):
    """Single error for unknown email and wrong password alike."""

    def __init__(self):
        super().__init__("invalid credentials")


class TokenUnknown(AuthError):
    pass


class TokenExpired(AuthError):
    pass


@dataclass(frozen=True)
class Account:
    account_id: str
    email: str
    password_hash: bytes
    salt: bytes
    kdf_params: dict
    role: Role
    hospital_name: str | None = None

    def to_canonical(self) -> dict:
        return {
            "account_id": self.account_id,
            "email": self.email,
            "password_hash": self.password_hash,
            "salt": self.salt,
            "kdf_params": self.kdf_params,
            "role": self.role.value,
            "hospital_name": self.hospital_name,
        }

    @staticmethod
    def from_canonical(obj) -> "Account":
        if not isinstance(obj, dict):
            raise DecodeError("account must be a map")
        try:
            return Account(
                account_id=obj["account_id"],
                email=obj["email"],
                password_hash=codec.bytes_from_hex(obj["password_hash"]),
                salt=codec.bytes_from_hex(obj["salt"]),
                kdf_params=obj["kdf_params"],
                role=Role(obj["role"]),
                hospital_name=obj["hospital_name"],
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise DecodeError(f"bad account record: {exc}") from None


@dataclass(frozen=True)
class SessionToken:
    token_id: str
    account_id: str
    role: Role
    issued_at: int
    expires_at: int


def hash_password(password: str, salt: bytes, params: dict) -> bytes:
    if params["algorithm"] != "scrypt":
        raise ValueError(f"unknown KDF {params['algorithm']!r}")
    return hashlib.scrypt(
        password.encode("utf-8"),
        salt=salt,
        n=params["n"],
        r=params["r"],
        p=params["p"],
        dklen=params["dklen"],
    )


class LoginRateLimiter:
    """Fixed per-client login attempt cap over a sliding window."""

    def __init__(self, limit: int = 10, window_s: float = 60.0, clock=time.monotonic):
        self.limit = limit
        self.window_s = window_s
        self._clock = clock
        self._attempts: dict[str, deque[float]] = {}
        self._lock = threading.Lock()

    def allow(self, client: str) -> bool:
        now = self._clock()
        with self._lock:
            window = self._attempts.setdefault(client, deque())
            while window and now - window[0] >= self.window_s:
                window.popleft()
            if len(window) >= self.limit:
                return False
            window.append(now)
            return True


class AuthService:
    """Account registry + session table, safe for concurrent request handlers."""

    def __init__(
        self,
        store_path: Path | None = None,
        clock=time.time,
        session_lifetime_s: int = SESSION_LIFETIME_S,
    ):
        self._store_path = store_path
        self._clock = clock
        self._session_lifetime_s = session_lifetime_s
        self._lock = threading.RLock()
        self._by_email: dict[str, Account] = {}
        self._by_id: dict[str, Account] = {}
        self._tokens: dict[str, SessionToken] = {}
        if store_path is not None and store_path.exists():
            for line in store_path.read_bytes().splitlines():
                account = Account.from_canonical(codec.decode_canonical(line))
                self._by_email[account.email] = account
                self._by_id[account.account_id] = account

    # -- account management ------------------------------------------------

    def bootstrap_authority(self, account_id: str, email: str, password: str) -> Account:
        """Create the root authority account (init-time only, no actor gate)."""
        return self._add_account(account_id, email, password, Role.AUTHORITY, None)

    def create_account(
        self,
        actor_token: str,
        email: str,
        password: str,
        role: Role,
        hospital_name: str | None = None,
        account_id: str | None = None,
    ) -> Account:
        """Authority-gated account creation for providers and officers."""
        self.authorize(actor_token, Role.AUTHORITY)
        if role == Role.AUTHORITY:
            raise Forbidden("additional authority accounts cannot be created")
        if role == Role.PROVIDER and not hospital_name:
            raise MissingHospital("provider accounts need a hospital_name")
        if role == Role.OFFICER:
            hospital_name = None
        if account_id is None:
            prefix = "prov" if role == Role.PROVIDER else "off"
            account_id = f"{prefix}-{secrets.token_hex(4)}"
        return self._add_account(account_id, email, password, role, hospital_name)

    def _add_account(
        self,
        account_id: str,
        email: str,
        password: str,
        role: Role,
        hospital_name: str | None,
    ) -> Account:
        if not _EMAIL_RE.match(email):
            raise BadEmail(f"not a well-formed email address: {email!r}")
        if len(password) < MIN_PASSWORD_LENGTH:
            raise WeakPassword(f"password must be at least {MIN_PASSWORD_LENGTH} characters")
        salt = secrets.token_bytes(16)
        account = Account(
            account_id=account_id,
            email=email,
            password_hash=hash_password(password, salt, SCRYPT_PARAMS),
            salt=salt,
            kdf_params=dict(SCRYPT_PARAMS),
            role=role,
            hospital_name=hospital_name,
        )
        with self._lock:
            if email in self._by_email:
                raise EmailTaken(f"email {email!r} already registered")
            if account_id in self._by_id:
                raise EmailTaken(f"account id {account_id!r} already exists")
            self._by_email[email] = account
            self._by_id[account_id] = account
            self._persist()
        return account

    def remove_account(self, account_id: str) -> None:
        """Compensation hook: used when the matching on-chain tx is refused."""
        with self._lock:
            account = self._by_id.pop(account_id, None)
            if account is not None:
                self._by_email.pop(account.email, None)
                self._persist()

    def get_account(self, account_id: str) -> Account | None:
        with self._lock:
            return self._by_id.get(account_id)

    def _persist(self) -> None:
        if self._store_path is None:
            return
        tmp = self._store_path.with_suffix(".tmp")
        lines = [
            encode_canonical(a.to_canonical()) + b"\n"
            for a in sorted(self._by_id.values(), key=lambda a: a.account_id)
        ]
        with open(tmp, "wb") as fh:
            fh.write(b"".join(lines))
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o600)
        os.replace(tmp, self._store_path)

    # -- sessions ------------------------------------------------------------

    def login(self, email: str, password: str) -> SessionToken:
        with self._lock:
            account = self._by_email.get(email)
        if account is None:
            # burn the same KDF cost as a real check; no user enumeration
            hash_password(password, b"\x00" * 16, SCRYPT_PARAMS)
            raise InvalidCredentials()
        candidate = hash_password(password, account.salt, account.kdf_params)
        if not hmac.compare_digest(candidate, account.password_hash):
            raise InvalidCredentials()
        now = int(self._clock())
        token = SessionToken(
            token_id=secrets.token_hex(32),
            account_id=account.account_id,
            role=account.role,
            issued_at=now,
            expires_at=now + self._session_lifetime_s,
        )
        with self._lock:
            self._tokens[token.token_id] = token
        return token

    def authorize(self, token_id: str, required_role: Role | set[Role]) -> str:
        """account_id iff the token is live and its role passes the gate.

        AUTHORITY passes every check. Expiry is inclusive: a token is
        invalid at exactly its expires_at second.
        """
        with self._lock:
            token = self._tokens.get(token_id)
        if token is None:
            raise TokenUnknown("unknown session token")
        if int(self._clock()) >= token.expires_at:
            raise TokenExpired("session token has expired")
        required = {required_role} if isinstance(required_role, Role) else set(required_role)
        if token.role != Role.AUTHORITY and token.role not in required:
            raise Forbidden(f"role {token.role.value} may not perform this action")
        return token.account_id

    def token_info(self, token_id: str) -> SessionToken | None:
        with self._lock:
            return self._tokens.get(token_id)
