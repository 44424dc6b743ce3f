"""HTTP surface of the node: JSON in, JSON out, canonical where hashed."""

from __future__ import annotations

from fastapi import Body, FastAPI, Header, Request
from fastapi.responses import JSONResponse

from . import block as blockmod
from . import state as statemod
from .hashing import from_hex
from .keys import BadKeyLength, address_from_hex
from .merkle import merkle_root
from .node import Node, NodeError
from .qr import encode_qr, make_payload, render_ascii, render_pbm
from .state import Rejected
from .tx import WireError, tx_from_json, tx_to_json

_STATUS_BY_CODE = {
    "AuthFailed": 401,
    "ChallengeExpired": 401,
    "NotFound": 404,
    "NothingToMine": 409,
    "CorruptChain": 500,
}


def _error(code: str, detail: str = "", status: int | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status or _STATUS_BY_CODE.get(code, 400),
        content={"error": code, "detail": detail},
    )


def create_app(node: Node) -> FastAPI:
    app = FastAPI(title="medichain node", docs_url=None, redoc_url=None)

    @app.exception_handler(NodeError)
    async def node_error_handler(request: Request, exc: NodeError):
        return _error(exc.code, exc.detail)

    @app.exception_handler(Rejected)
    async def rejected_handler(request: Request, exc: Rejected):
        return _error(exc.code, exc.detail)

    @app.exception_handler(WireError)
    async def wire_error_handler(request: Request, exc: WireError):
        return _error("MalformedRequest", str(exc))

    def _addr(text: str) -> bytes:
        try:
            return address_from_hex(text)
        except BadKeyLength as exc:
            raise WireError(str(exc))

    def _session_address(authorization: str | None) -> bytes:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return node.session_address(token)

    # --- chain & transactions ------------------------------------------------

    @app.post("/tx")
    def post_tx(body: dict = Body(...), preflight: bool = False):
        tx = tx_from_json(body)
        if preflight:
            node.preflight_tx(tx)  # raises with the state rule's rejection
        txid = node.submit_tx(tx)
        return {"txid": txid}

    @app.get("/mempool")
    def get_mempool():
        with node.lock:
            pending = list(node.mempool)
        return {"pending": [tx_to_json(t) for t in pending]}

    @app.post("/mine")
    def post_mine(body: dict = Body(default={})):
        allow_empty = bool(body.get("allow_empty", False))
        now = body.get("timestamp")
        blk, dropped = node.produce_block(now=now, allow_empty=allow_empty)
        return {
            "block": blockmod.block_to_json(blk),
            "dropped": [{"txid": t, "error": code} for t, code in dropped],
        }

    @app.get("/chain")
    def get_chain():
        blocks, _ = node.snapshot()
        return {
            "height": blocks[-1].header.height if blocks else None,
            "blocks": [blockmod.block_to_json(b) for b in blocks],
        }

    @app.get("/block/{height}")
    def get_block(height: int):
        blocks, _ = node.snapshot()
        if not 0 <= height < len(blocks):
            raise NodeError("NotFound", f"no block at height {height}")
        return blockmod.block_to_json(blocks[height])

    @app.get("/accounts/{addr}")
    def get_account(addr: str):
        address = _addr(addr)
        _, state = node.snapshot()
        account = state.accounts.get(address)
        role = state.roles.get(address)
        return {
            "address": addr,
            "balance": str(account.balance if account else 0),
            "nonce": account.nonce if account else 0,
            "role": role.role.value if role else None,
        }

    # --- authentication -------------------------------------------------------

    @app.post("/auth/challenge")
    def post_challenge():
        challenge = node.issue_challenge()
        return {
            "challenge_id": challenge.id,
            "nonce": challenge.nonce.hex(),
            "lifetime": node.config.challenge_lifetime,
        }

    @app.post("/auth/enroll")
    def post_enroll(body: dict = Body(...)):
        address = _addr(str(body.get("address", "")))
        stored_hash = from_hex(str(body.get("stored_hash", "")), "stored_hash")
        public_key = bytes.fromhex(str(body.get("public_key", "")))
        signature = bytes.fromhex(str(body.get("signature", "")))
        node.enroll_password(address, stored_hash, public_key, signature)
        return {"enrolled": True, "address": body["address"]}

    @app.post("/auth/login")
    def post_login(body: dict = Body(...)):
        address = _addr(str(body.get("address", "")))
        challenge_id = str(body.get("challenge_id", ""))
        response = from_hex(str(body.get("response", "")), "response")
        session = node.login(address, challenge_id, response)
        return {
            "token": session.token,
            "address": body["address"],
            "expires_at": session.expires_at,
        }

    # --- privileged reads -------------------------------------------------------

    @app.get("/patients/{addr}/records")
    def get_records(addr: str, authorization: str | None = Header(default=None)):
        requester = _session_address(authorization)
        patient = _addr(addr)
        _, state = node.snapshot()
        records = statemod.query_records(state, requester, patient)
        return {
            "patient": addr,
            "records": [statemod.record_to_json(r) for r in records],
        }

    @app.get("/prescriptions/{rx_id}")
    def get_prescription(rx_id: int, authorization: str | None = Header(default=None)):
        requester = _session_address(authorization)
        _, state = node.snapshot()
        rx = state.prescriptions.get(rx_id)
        if rx is None:
            raise NodeError("NotFound", f"prescription {rx_id}")
        if requester not in statemod.parties_of(rx):
            raise Rejected("Unauthorized")
        invoice = state.invoices.get(rx_id)
        return {
            "prescription": statemod.prescription_to_json(rx),
            "invoice": statemod.invoice_to_json(invoice) if invoice else None,
        }

    @app.get("/grants")
    def get_grants(patient: str | None = None, grantee: str | None = None,
                   active: bool | None = None):
        _, state = node.snapshot()
        rows = []
        for key in sorted(state.grants):
            grant = state.grants[key]
            if patient is not None and grant.patient != _addr(patient):
                continue
            if grantee is not None and grant.grantee != _addr(grantee):
                continue
            if active is not None and grant.active != active:
                continue
            rows.append(statemod.grant_to_json(grant))
        return {"grants": rows}

    @app.get("/prescriptions")
    def list_prescriptions(authorization: str | None = Header(default=None),
                           status: str | None = None):
        requester = _session_address(authorization)
        _, state = node.snapshot()
        rows = []
        for rx_id in sorted(state.prescriptions):
            rx = state.prescriptions[rx_id]
            if requester not in statemod.parties_of(rx):
                continue
            if status is not None and rx.status != status:
                continue
            row = statemod.prescription_to_json(rx)
            invoice = state.invoices.get(rx_id)
            row["invoice"] = statemod.invoice_to_json(invoice) if invoice else None
            rows.append(row)
        return {"prescriptions": rows}

    @app.get("/invoices")
    def get_invoices(patient: str | None = None, payee: str | None = None):
        _, state = node.snapshot()
        rows = []
        for inv_id in sorted(state.invoices):
            invoice = state.invoices[inv_id]
            rx = state.prescriptions[invoice.prescription_id]
            if patient is not None and rx.patient != _addr(patient):
                continue
            if payee is not None and invoice.payee != _addr(payee):
                continue
            row = statemod.invoice_to_json(invoice)
            row["patient"] = rx.patient.hex()
            rows.append(row)
        return {"invoices": rows}

    # --- QR sharing ----------------------------------------------------------------

    @app.get("/qr/{addr}")
    def get_qr(addr: str, record_id: int | None = None, format: str = "ascii"):
        patient = _addr(addr)
        _, state = node.snapshot()
        patient_records = [r for r in state.records if r.patient == patient]
        if record_id is not None:
            matches = [r for r in patient_records if r.id == record_id]
            if not matches:
                raise NodeError("NotFound", f"record {record_id}")
            payload = make_payload(patient, matches[0].record_hash, "record")
        else:
            digest = merkle_root([r.record_hash for r in patient_records])
            payload = make_payload(patient, digest, "merkle-root")
        symbol = encode_qr(payload)
        out = {
            "payload": payload.uri,
            "digest_kind": payload.digest_kind,
            "version": symbol.version,
            "side": symbol.side,
            "ascii": render_ascii(symbol),
        }
        if format == "pbm":
            out["pbm"] = render_pbm(symbol)
        return out

    # --- peers, sync, health ----------------------------------------------------

    @app.get("/peers")
    def get_peers():
        with node.lock:
            return {"peers": list(node.peers)}

    @app.post("/peers")
    def post_peers(body: dict = Body(...)):
        url = body.get("url")
        if not isinstance(url, str) or not url.startswith("http"):
            raise WireError("url: expected an http(s) URL")
        node.add_peer(url)
        with node.lock:
            return {"peers": list(node.peers)}

    @app.post("/sync")
    def post_sync():
        adopted = node.sync_with_peers()
        with node.lock:
            height = node.chain[-1].header.height if node.chain else None
        return {"adopted": adopted, "height": height}

    @app.get("/health")
    def get_health():
        blocks, state = node.snapshot()
        tip = blocks[-1].header if blocks else None
        return {
            "status": "ok",
            "height": tip.height if tip else None,
            "tip_hash": blockmod.header_hash(tip).hex() if tip else None,
            "state_digest": statemod.state_digest(state),
            "mempool_size": len(node.mempool),
            "difficulty_bits": node.config.difficulty_bits,
        }

    return app
