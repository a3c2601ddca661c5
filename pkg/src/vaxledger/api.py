"""HTTP/JSON API over a Node. All bodies are canonical-encoding-compatible JSON."""

from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from . import auth, codec, node as node_mod, registry
from .ledger import block_id
from .registry import Role


class BadRequest(Exception):
    pass


# exception class -> (http status, stable error slug)
_ERROR_MAP: list[tuple[type, int, str]] = [
    (auth.InvalidCredentials, 401, "invalid credentials"),
    (auth.TokenUnknown, 401, "authentication required"),
    (auth.TokenExpired, 401, "session expired"),
    (auth.Forbidden, 403, "forbidden"),
    (auth.EmailTaken, 409, "email already registered"),
    (auth.WeakPassword, 400, "weak password"),
    (auth.MissingHospital, 400, "missing hospital_name"),
    (auth.BadEmail, 400, "bad email"),
    (node_mod.PoolDuplicate, 409, "duplicate pending transaction"),
    (node_mod.WouldFail, 400, "transaction would fail"),
    (registry.InvalidAadhaar, 400, "invalid aadhaar number"),
    (registry.MalformedPayload, 400, "malformed payload"),
    (node_mod.NotProducer, 503, "not available on this node"),
    (BadRequest, 400, "bad request"),
]


def _error_body(exc: Exception, slug: str) -> dict:
    body = {"error": slug}
    if isinstance(exc, node_mod.WouldFail):
        body["reason"] = type(exc.inner).__name__
        body["detail"] = str(exc.inner)
    elif isinstance(exc, (BadRequest, registry.MalformedPayload, auth.WeakPassword,
                          auth.BadEmail, auth.MissingHospital)):
        body["detail"] = str(exc)
    return body


def _bearer_token(request: Request) -> str:
    header = request.headers.get("authorization", "")
    scheme, _, token = header.partition(" ")
    if scheme.lower() != "bearer" or not token:
        raise auth.TokenUnknown("missing bearer token")
    return token.strip()


def _field(body: dict, name: str, kind: type) -> object:
    value = body.get(name)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise BadRequest(f"field {name!r} must be {kind.__name__}")
    return value


def make_app(
    node: node_mod.Node,
    rate_limiter: auth.LoginRateLimiter | None = None,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="vaxledger")
    limiter = rate_limiter or auth.LoginRateLimiter()

    for exc_class, status, slug in _ERROR_MAP:
        def handler(request: Request, exc: Exception, *, _status=status, _slug=slug):
            return JSONResponse(_error_body(exc, _slug), status_code=_status)

        app.add_exception_handler(exc_class, handler)

    @app.post("/auth/login")
    def login(request: Request, body: dict = Body(...)):
        client = request.client.host if request.client else "unknown"
        if not limiter.allow(client):
            return JSONResponse({"error": "too many login attempts"}, status_code=429)
        email = _field(body, "email", str)
        password = _field(body, "password", str)
        token = node.auth.login(email, password)
        account = node.auth.get_account(token.account_id)
        return {
            "token": token.token_id,
            "role": token.role.value,
            "expires_at": token.expires_at,
            "account_id": token.account_id,
            "hospital_name": account.hospital_name if account else None,
        }

    @app.post("/accounts", status_code=201)
    def create_account(request: Request, body: dict = Body(...)):
        token = _bearer_token(request)
        role_name = _field(body, "role", str)
        if role_name not in (Role.PROVIDER.value, Role.OFFICER.value):
            raise BadRequest("role must be PROVIDER or OFFICER")
        role = Role(role_name)
        hospital = body.get("hospital_name")
        if hospital is not None and not isinstance(hospital, str):
            raise BadRequest("field 'hospital_name' must be str")
        account, receipt = node.register_account(
            token_id=token,
            email=_field(body, "email", str),
            password=_field(body, "password", str),
            role=role,
            hospital_name=hospital,
        )
        return {
            "account_id": account.account_id,
            "email": account.email,
            "role": account.role.value,
            "hospital_name": account.hospital_name,
            "receipt": receipt,
        }

    @app.post("/records", status_code=202)
    def submit_record(request: Request, body: dict = Body(...)):
        token = _bearer_token(request)
        return node.submit_issue(
            token_id=token,
            aadhaar=_field(body, "aadhaar", str),
            full_name=_field(body, "full_name", str),
            vaccine_name=_field(body, "vaccine_name", str),
            dose_number=_field(body, "dose_number", int),
            date=_field(body, "date", str),
        )

    @app.get("/records/{aadhaar}")
    def lookup(aadhaar: str, request: Request):
        token = _bearer_token(request)
        found = node.officer_lookup(aadhaar, token)
        if found is None:
            return JSONResponse({"error": "no record for this aadhaar"}, status_code=404)
        record, height = found
        return {
            "record": codec.normalize(record.to_canonical()),
            "verified_at_height": height,
        }

    @app.get("/credential/{aadhaar}")
    def credential_for(aadhaar: str, request: Request):
        token = _bearer_token(request)
        payload = node.credential_payload(aadhaar, token)
        if payload is None:
            return JSONResponse({"error": "no record for this aadhaar"}, status_code=404)
        return {"qr_payload": payload}

    @app.post("/verify")
    def verify(body: dict = Body(...)):
        payload = _field(body, "qr_payload", str)
        return {"status": node.verify_payload(payload)}

    @app.get("/chain/head")
    def chain_head():
        head = node.head
        if head is None:
            return JSONResponse({"error": "empty chain"}, status_code=404)
        return {
            "header": codec.normalize(head.to_canonical()),
            "block_id": block_id(head).hex(),
        }

    @app.get("/blocks")
    def blocks(request: Request):
        try:
            start = int(request.query_params.get("from", "0"))
            limit = int(request.query_params.get("limit", str(node_mod.SYNC_PAGE_LIMIT)))
        except ValueError:
            raise BadRequest("'from' and 'limit' must be integers") from None
        batch = node.get_blocks(start, limit)
        return {"blocks": [codec.normalize(b.to_canonical()) for b in batch]}

    @app.get("/rejections")
    def rejections(request: Request):
        token = _bearer_token(request)
        node.auth.authorize(token, Role.AUTHORITY)
        return {"rejections": list(node.rejection_log)}

    @app.get("/healthz")
    def healthz():
        if node.halted:
            return JSONResponse({"status": "halted"}, status_code=503)
        return {"status": "ok"}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
