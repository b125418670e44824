"""HTTP front end for screening sessions.

Thin by design: every request is decoded, handed to the session store, and
the store's answer is returned verbatim, so anything a client sees over the
wire is exactly what the library computes. Failures surface as
``{"error": {"code": ..., "message": ...}}`` with the code machine-readable.
"""

from __future__ import annotations

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.exceptions import HTTPException as StarletteHTTPException

from .session import SessionConfig, SessionError, SessionStore

__all__ = ["create_app"]

_ERROR_STATUS = {
    "unknown_session": 404,
    "unknown_dataset": 404,
    "already_labeled": 409,
}

_CONFIG_KEYS = ("method", "variance_mode", "alpha", "seed", "c", "cv_model")
_CREATE_KEYS = _CONFIG_KEYS + ("dataset", "stop_targets")


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(store: SessionStore, static_dir: str | None = None) -> FastAPI:
    """The session service; ``static_dir`` optionally serves a UI bundle at /.

    CORS is wide open: the API carries no credentials and the dashboard may
    be hosted anywhere.
    """
    app = FastAPI(title="screencount", docs_url=None, redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(SessionError)
    async def _session_error(request: Request, exc: SessionError):
        return _error_response(exc.code, exc.message,
                               _ERROR_STATUS.get(exc.code, 400))

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return _error_response("invalid_request", str(exc.errors()[:1]), 400)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        return _error_response("http_error", str(exc.detail), exc.status_code)

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": store.list_datasets()}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict | None = Body(None)):
        payload = dict(payload or {})
        unknown = sorted(set(payload) - set(_CREATE_KEYS))
        if unknown:
            raise SessionError("invalid_config",
                               f"unknown config keys: {', '.join(unknown)}")
        dataset = payload.pop("dataset", None)
        targets = payload.pop("stop_targets", None)
        config = SessionConfig.from_dict(payload)
        session = store.create_session(config, dataset_name=dataset)
        if targets:
            if not isinstance(targets, dict):
                raise SessionError("invalid_config", "stop_targets must be an object")
            store.set_stop_targets(session.id, targets)
        return {"id": session.id}

    @app.post("/sessions/{session_id}/draws")
    def draw(session_id: str, n: int):
        return {"draws": store.draw_batch(session_id, n)}

    @app.post("/sessions/{session_id}/labels")
    def label(session_id: str, items: list = Body(...)):
        return store.submit_labels(session_id, items)

    @app.get("/sessions/{session_id}/estimates")
    def estimates(session_id: str):
        return store.estimates(session_id)

    @app.get("/sessions/{session_id}")
    def full_state(session_id: str):
        return store.full_state(session_id)

    @app.post("/sessions/{session_id}/config")
    def update_config(session_id: str, payload: dict = Body(...)):
        unknown = sorted(set(payload) - {"stop_targets"})
        if unknown:
            raise SessionError("invalid_config",
                               f"only stop_targets may change; got: {', '.join(unknown)}")
        targets = payload.get("stop_targets")
        if not isinstance(targets, dict):
            raise SessionError("invalid_config", "stop_targets must be an object")
        return store.set_stop_targets(session_id, targets)

    if static_dir is not None:
        # Mounted last so the API routes above keep precedence.
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
