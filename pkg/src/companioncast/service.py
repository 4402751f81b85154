"""HTTP + realtime stream API around the session engine.

Endpoints:
  POST /timelines                      upload a timeline JSON file -> id
  GET  /timelines                      list uploaded timelines
  POST /sessions                       {"timeline_id", "supported_team"} -> {"session_id"}
  GET  /sessions/{id}/transcript       append-only event log as JSON lines
  GET  /sessions/{id}/blobs/{name}     fetch an audio clip too big to inline
  WS   /sessions/{id}/stream           single-line JSON frames both ways

Stream frames client->server: {"kind": "clock_sync", "video_t": num} and
{"kind": "user_message", "text": str}. Server->client frames are the session
events themselves (clock_sync is not echoed).
"""
from __future__ import annotations

import asyncio
import json
import logging
import uuid
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import EngineConfig
from .events import event_to_json
from .session import SessionManager, SessionNotFoundError
from .timeline import TimelineParseError, TimelineValidationError, parse_timeline

logger = logging.getLogger(__name__)


class CreateSessionRequest(BaseModel):
    timeline_id: str
    supported_team: Literal["home", "away"]


def create_app(config: EngineConfig, data_dir: Path | None = None,
               frontend_dist: Path | None = None) -> FastAPI:
    app = FastAPI(title="companioncast")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    manager = SessionManager(config, data_dir=data_dir)
    app.state.manager = manager

    @app.post("/timelines")
    async def upload_timeline(request: Request):
        body = await request.body()
        try:
            doc = parse_timeline(body)
        except (TimelineParseError, TimelineValidationError) as exc:
            return Response(
                content=json.dumps({"detail": str(exc)}), status_code=400,
                media_type="application/json",
            )
        timeline_id = manager.add_timeline(doc)
        return {"timeline_id": timeline_id}

    @app.get("/timelines")
    async def list_timelines():
        return [
            {
                "timeline_id": tid,
                "duration_s": doc.duration_s,
                "home_team": doc.home_team,
                "away_team": doc.away_team,
            }
            for tid, doc in manager.timelines.items()
        ]

    @app.post("/sessions")
    async def create_session(req: CreateSessionRequest):
        session_id = uuid.uuid4().hex
        try:
            manager.create_session(req.timeline_id, req.supported_team, session_id)
        except SessionNotFoundError as exc:
            return Response(
                content=json.dumps({"detail": str(exc)}), status_code=404,
                media_type="application/json",
            )
        return {"session_id": session_id}

    @app.get("/sessions/{session_id}/transcript")
    async def transcript(session_id: str):
        try:
            engine = manager.get(session_id)
        except SessionNotFoundError:
            return Response(
                content=json.dumps({"detail": f"unknown session {session_id!r}"}),
                status_code=404, media_type="application/json",
            )
        return PlainTextResponse(engine.transcript_jsonl(), media_type="application/x-ndjson")

    @app.get("/sessions/{session_id}/blobs/{blob_id}")
    async def blob(session_id: str, blob_id: str):
        try:
            engine = manager.get(session_id)
        except SessionNotFoundError:
            return Response(status_code=404)
        data = engine.blobs.get(blob_id)
        if data is None:
            return Response(status_code=404)
        return Response(content=data, media_type="audio/wav")

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        await websocket.accept()
        try:
            engine = manager.get(session_id)
        except SessionNotFoundError:
            await websocket.send_text(json.dumps({"kind": "error", "message": f"unknown session {session_id!r}"}))
            await websocket.close(code=4404)
            return
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    frame = json.loads(raw)
                    if not isinstance(frame, dict):
                        raise ValueError("frame must be a JSON object")
                except (json.JSONDecodeError, ValueError) as exc:
                    await websocket.send_text(json.dumps({"kind": "error", "message": f"bad frame: {exc}"}))
                    continue
                kind = frame.get("kind")
                try:
                    if kind == "clock_sync":
                        # engine calls are synchronous; run off the event loop and
                        # strictly one at a time per session (this loop is the
                        # session's single logical executor)
                        events = await asyncio.to_thread(engine.on_clock, float(frame["video_t"]))
                    elif kind == "user_message":
                        events = await asyncio.to_thread(engine.on_user_message, str(frame.get("text", "")))
                    else:
                        await websocket.send_text(
                            json.dumps({"kind": "error", "message": f"unknown frame kind {kind!r}"})
                        )
                        continue
                except (ValueError, TypeError, KeyError) as exc:
                    await websocket.send_text(json.dumps({"kind": "error", "message": str(exc)}))
                    continue
                for event in events:
                    if event.kind == "clock_sync":
                        continue
                    await websocket.send_text(event_to_json(event))
        except WebSocketDisconnect:
            logger.info("stream for session %s disconnected", session_id)

    if frontend_dist is not None and frontend_dist.is_dir():
        app.mount("/app", StaticFiles(directory=frontend_dist, html=True), name="app")

    return app
