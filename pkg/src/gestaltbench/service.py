"""HTTP facade over the trial engine.

All state lives in the engine; endpoints only translate payloads and
attach image URLs. Test-item payloads carry an opaque item id and are
served through the per-item image route, so the class-bearing sample
paths never reach the subject. Training exhibits are addressed by
sample path (their labels are the whole point of the exhibit).
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .errors import GestaltError, ProtocolError
from .trial import TrialSession


class CreateRequest(BaseModel):
    task: str
    seed: int = 0
    biased: bool = False


class MoreRequest(BaseModel):
    class_id: int


class AnswerRequest(BaseModel):
    item_id: str
    class_id: int
    response_ms: Optional[float] = None


def _with_image_urls(sid: str, view: dict) -> dict:
    """Decorate engine payloads with routes; engine dicts stay transport-free."""
    out = dict(view)
    if "exhibit" in out:
        exhibit = {}
        for cls, entries in out["exhibit"].items():
            exhibit[cls] = [dict(e, image_url=f"/api/images/{e['path']}")
                            for e in entries]
        out["exhibit"] = exhibit
    if "samples" in out:
        out["samples"] = [dict(e, image_url=f"/api/images/{e['path']}")
                          for e in out["samples"]]
    if out.get("item") is not None:
        item = dict(out["item"])
        item["image_url"] = f"/api/sessions/{sid}/items/{item['item_id']}/image"
        out["item"] = item
    return out


def create_app(root, log_dir=None, static_dir=None) -> FastAPI:
    root = Path(root).resolve()
    app = FastAPI(title="gestaltbench trial service")
    sessions: dict[str, TrialSession] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(GestaltError)
    def _on_error(request: Request, exc: GestaltError):
        status = 409 if isinstance(exc, ProtocolError) else 400
        return JSONResponse(status_code=status,
                            content={"error": exc.category, "detail": str(exc)})

    def _get(sid: str) -> tuple[TrialSession, threading.Lock]:
        with registry_lock:
            if sid not in sessions:
                raise HTTPException(status_code=404, detail=f"no session {sid}")
            return sessions[sid], locks[sid]

    @app.post("/api/sessions")
    def create_session(req: CreateRequest):
        session = TrialSession(req.task, root, seed=req.seed,
                               biased=req.biased, log_dir=log_dir)
        with registry_lock:
            sessions[session.id] = session
            locks[session.id] = threading.Lock()
        return _with_image_urls(session.id, session.state_view())

    @app.get("/api/sessions/{sid}")
    def session_state(sid: str):
        session, lock = _get(sid)
        with lock:
            return _with_image_urls(sid, session.state_view())

    @app.post("/api/sessions/{sid}/more")
    def more_examples(sid: str, req: MoreRequest):
        session, lock = _get(sid)
        with lock:
            return _with_image_urls(sid, session.more_examples(req.class_id))

    @app.post("/api/sessions/{sid}/begin")
    def begin_testing(sid: str):
        session, lock = _get(sid)
        with lock:
            return _with_image_urls(sid, session.begin_testing())

    @app.post("/api/sessions/{sid}/answers")
    def submit_answer(sid: str, req: AnswerRequest):
        session, lock = _get(sid)
        with lock:
            out = session.submit_answer(req.item_id, req.class_id,
                                        response_ms=req.response_ms)
            return _with_image_urls(sid, out)

    @app.get("/api/sessions/{sid}/items/{item_id}/image")
    def item_image(sid: str, item_id: str):
        session, lock = _get(sid)
        with lock:
            path = session.item_path(item_id)
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.get("/api/sessions/{sid}/report")
    def report(sid: str):
        session, lock = _get(sid)
        with lock:
            return session.report()

    @app.get("/api/images/{path:path}")
    def sample_image(path: str):
        full = (root / path).resolve()
        if root not in full.parents or not full.is_file():
            raise HTTPException(status_code=404, detail=f"no sample {path}")
        return Response(content=full.read_bytes(), media_type="image/png")

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
