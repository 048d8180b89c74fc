"""HTTP surface.

POST /sessions                 -> {id}
POST /sessions/{id}/chat       -> {reply, decision_kind, memory, policy?, kpis?}
GET  /markets                  -> {markets: [...]}
GET  /markets/{od}/policy/base -> base policy JSON
GET  /health                   -> {status: ok}
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..errors import UnknownMarket, UnknownSession
from .config import ServiceConfig, load_config
from .engine import ChatEngine


def create_app(config: ServiceConfig | None = None,
               engine: ChatEngine | None = None,
               ui_dir: str | Path | None = None) -> FastAPI:
    config = config or load_config()
    engine = engine or ChatEngine(config)
    app = FastAPI(title="presaise", version="0.1.0")
    app.state.engine = engine

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session():
        return {"id": engine.create_session()}

    @app.post("/sessions/{sid}/chat")
    def chat(sid: str, payload: dict = Body(...)):
        text = payload.get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise HTTPException(status_code=422, detail="text required")
        try:
            return engine.chat(sid, text).to_json_dict()
        except UnknownSession as e:
            raise HTTPException(status_code=404, detail=str(e)) from e

    @app.get("/markets")
    def markets():
        return {"markets": engine.store.list_markets()}

    @app.get("/markets/{od}/policy/base")
    def base_policy(od: str):
        parts = od.split("-")
        if len(parts) != 2:
            raise HTTPException(status_code=422,
                                detail="market must look like DTW-JFK")
        try:
            entry = engine.store.get((parts[0], parts[1]))
        except UnknownMarket as e:
            raise HTTPException(status_code=404, detail=str(e)) from e
        return JSONResponse(entry.base_policy.to_json_dict())

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")
    return app
