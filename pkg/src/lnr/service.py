"""HTTP operator service.

Every route lives under /api/.  Authentication and the admin-role check for
/api/admin/* both run in middleware, before any body handling; /api/info is
the only open route.  Failures map onto status codes by exception type: bad
manifest text 400, semantic validation 422, version or queue conflicts 409,
unknown names 404.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field
from starlette.concurrency import run_in_threadpool

from .dsp import Calibration, FilterSpec
from .errors import (
    ManifestError,
    QueueFullError,
    UnknownSensorError,
    ValidationError,
    VersionConflictError,
)
from .portio import DriveCommand
from .runtime import RobotRuntime


class DriveRequest(BaseModel):
    command: Literal["forward", "backward", "turn_left", "turn_right", "stop"]
    duration_ms: Optional[int] = Field(default=None, ge=0)


class RetuneRequest(BaseModel):
    sensor_id: str
    filters: List[Dict[str, Any]] = Field(default_factory=list)
    calibration: Dict[str, float] = Field(default_factory=dict)


class UserRequest(BaseModel):
    token: str = Field(min_length=1)
    role: Literal["admin", "user"]


def _principal(request: Request) -> str:
    return getattr(request.state, "principal", "anonymous")


def create_app(runtime: RobotRuntime, static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="lnr operator service", docs_url=None, redoc_url=None)
    app.state.runtime = runtime

    @app.middleware("http")
    async def auth(request: Request, call_next):
        path = request.url.path
        if path.startswith("/api/") and path != "/api/info":
            header = request.headers.get("authorization", "")
            token = header[7:] if header.lower().startswith("bearer ") else ""
            role = runtime.role_for(token) if token else None
            if role is None:
                return JSONResponse(
                    {"detail": "missing or invalid bearer token"}, status_code=401
                )
            if path.startswith("/api/admin/") and role != "admin":
                return JSONResponse({"detail": "admin role required"}, status_code=403)
            request.state.role = role
            request.state.principal = f"{role}(...{token[-4:]})"
        return await call_next(request)

    @app.get("/api/info")
    def info():
        return runtime.info()

    @app.post("/api/control/drive")
    def drive(body: DriveRequest):
        try:
            command_id = runtime.submit_drive(DriveCommand(body.command), body.duration_ms)
        except QueueFullError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {"command_id": command_id, "status": "accepted"}

    @app.get("/api/telemetry")
    def telemetry():
        frame = runtime.latest_frame()
        if frame is None:
            raise HTTPException(status_code=404, detail="no telemetry frame yet")
        return frame

    @app.get("/api/telemetry/stream")
    async def telemetry_stream(limit: Optional[int] = None):
        async def gen():
            last_seq = 0
            sent = 0
            while True:
                frame = await run_in_threadpool(runtime.wait_for_frame, last_seq, 0.5)
                if frame is None:
                    yield ": keep-alive\n\n"
                    continue
                last_seq = frame["seq"]
                yield f"data: {json.dumps(frame)}\n\n"
                sent += 1
                if limit is not None and sent >= limit:
                    return

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.get("/api/path")
    def path(format: Literal["json", "csv"] = "json"):
        if format == "csv":
            return PlainTextResponse(runtime.path_csv(), media_type="text/csv")
        return runtime.path_dict()

    @app.get("/api/data/{sensor_id}")
    def data(
        sensor_id: str,
        t1: float = 0.0,
        t2: Optional[float] = None,
        stride: int = 1,
    ):
        if t2 is None:
            t2 = runtime.sim.t_s
        if t1 > t2:
            raise HTTPException(status_code=422, detail="t1 must not exceed t2")
        if stride < 1:
            raise HTTPException(status_code=422, detail="stride must be >= 1")
        try:
            return runtime.query_data(sensor_id, t1, t2, stride)
        except UnknownSensorError as e:
            raise HTTPException(status_code=404, detail=str(e.sensor_id))

    @app.get("/api/events")
    def events():
        return {"events": runtime.event_log()}

    @app.post("/api/admin/daps")
    async def install_daps(request: Request):
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            return runtime.install_manifest(text, principal=_principal(request))
        except ManifestError as e:
            raise HTTPException(status_code=400, detail=str(e))
        except ValidationError as e:
            raise HTTPException(status_code=422, detail=str(e))
        except VersionConflictError as e:
            raise HTTPException(status_code=409, detail=str(e))

    @app.post("/api/admin/dsp/retune")
    def retune(body: RetuneRequest, request: Request):
        try:
            specs = [
                FilterSpec.from_dict(obj, where=f"filters[{i}]")
                for i, obj in enumerate(body.filters)
            ]
            cal = Calibration(
                gain=body.calibration.get("gain", 1.0),
                offset=body.calibration.get("offset", 0.0),
            )
            cal.validate("calibration")
            runtime.retune(body.sensor_id, specs, cal, principal=_principal(request))
        except UnknownSensorError as e:
            raise HTTPException(status_code=404, detail=str(e.sensor_id))
        except ValidationError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return {"status": "ok"}

    @app.post("/api/admin/users")
    def add_user(body: UserRequest, request: Request):
        runtime.add_user(body.token, body.role, principal=_principal(request))
        return {"status": "ok"}

    @app.get("/api/admin/audit")
    def audit():
        return {"audit": runtime.audit_log()}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app
