"""HTTP face of the login service.

Thin request/response mapping over service.AuthService; no protocol logic
lives here. Payload schemas mirror the wire contract: challenge JSON goes
out through challenge_client_view only, answers come in as ordered slots or
selected slots plus a client click count.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (
    AuthenticationError,
    ConfigurationError,
    EgopassError,
    InvalidAnswerError,
    PairingConflictError,
    SessionNotFoundError,
    SessionStateError,
)
from .service import AuthService

STATUS_BY_ERROR = (
    (AuthenticationError, 401),
    (PairingConflictError, 409),
    (SessionStateError, 409),
    (SessionNotFoundError, 404),
    (InvalidAnswerError, 422),
    (ConfigurationError, 400),
)


class PairRequest(BaseModel):
    device_id: str
    credential: str


class LoginRequest(BaseModel):
    device_id: str
    shared_secret: str
    format: str = "arrangement"
    day: Optional[int] = None
    force_length: Optional[int] = None


class RenderedBeacon(BaseModel):
    session_id: str
    challenge_id: Optional[str] = None


class AnswerRequest(BaseModel):
    session_id: str
    challenge_id: Optional[str] = None
    order: Optional[list[int]] = None
    selected: Optional[list[int]] = None
    click_count: int = 0
    idempotency_key: Optional[str] = None


def create_app(service: AuthService) -> FastAPI:
    app = FastAPI(title="egopass login service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(EgopassError)
    async def egopass_error_handler(request: Request, err: EgopassError):
        status = next((code for cls, code in STATUS_BY_ERROR if isinstance(err, cls)), 500)
        return JSONResponse(status_code=status, content={"error": str(err)})

    @app.post("/pair")
    def pair(body: PairRequest):
        record = service.pair(body.device_id, body.credential)
        return {"device_id": record.device_id, "shared_secret": record.shared_secret}

    @app.post("/login")
    def login(body: LoginRequest):
        return service.request_login(
            body.device_id,
            body.shared_secret,
            format=body.format,
            day=body.day,
            force_length=body.force_length,
        )

    @app.post("/rendered", status_code=204)
    def rendered(body: RenderedBeacon):
        service.mark_rendered(body.session_id, body.challenge_id)
        return Response(status_code=204)

    @app.post("/answer")
    def answer(body: AnswerRequest):
        payload = {}
        if body.order is not None:
            payload["order"] = body.order
        if body.selected is not None:
            payload["selected"] = body.selected
        return service.submit_answer(
            body.session_id,
            payload,
            click_count=body.click_count,
            idempotency_key=body.idempotency_key,
        )

    @app.get("/session/{session_id}")
    def session(session_id: str):
        return service.session_metrics(session_id)

    @app.get("/metrics")
    def metrics():
        return service.aggregate_metrics()

    @app.get("/image/{challenge_id}/{slot}")
    def image(challenge_id: str, slot: int):
        png = service.image_png(challenge_id, slot)
        return Response(content=png, media_type="image/png")

    return app
