"""HTTP service wrapping an interactive tuning session.

One session owns a replay source (the preloaded frame list), a sliding
window integrator, and the current visualization parameters.  The left
view is the newest single frame, the right view the integral or
detection raster rendered from the retained window; parameter updates
apply atomically under the session lock and re-render retroactively, so
the operator sees the effect without new frames.

Parameters travel under their GUI names: ``FP`` (focal plane distance,
meters), ``P_i`` (plane pitch, radians), ``R_o`` (plane roll, radians),
``CC`` (compass correction, radians), ``C_n`` (contrast gain), ``R_x``
(RX threshold percentile), plus ``mode`` and ``window_size``.

Endpoint summary (all JSON unless noted, exact schemas in the README):

    GET    /api/v1/health
    POST   /api/v1/session
    GET    /api/v1/session/{sid}/state
    PATCH  /api/v1/session/{sid}/params
    POST   /api/v1/session/{sid}/reset
    POST   /api/v1/session/{sid}/step        {"count": n}
    POST   /api/v1/session/{sid}/play        {"fps": optional}
    POST   /api/v1/session/{sid}/pause
    GET    /api/v1/session/{sid}/view/left         (image/png)
    GET    /api/v1/session/{sid}/view/right        (image/png)
    GET    /api/v1/session/{sid}/view/right/meta

Errors come back as ``{"error": {"code", "message", "field"?}}`` with
stable codes: unknown_session, invalid_parameter, no_frames,
end_of_stream, render_failure.
"""

from __future__ import annotations

import math
import secrets
import threading
import time
from dataclasses import replace
from typing import Mapping, Optional, Sequence

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .dataset import display_png_bytes, rgb_png_bytes
from .errors import PipelineError, SaaiError
from .geometry import CameraIntrinsics, Frame
from .pipeline import (
    MODES,
    FrameSelector,
    PipelineConfig,
    WindowIntegrator,
    detect_stage,
)

PARAM_FIELDS = ("FP", "P_i", "R_o", "CC", "C_n", "R_x", "mode", "window_size")
MIN_FPS = 0.1
MAX_FPS = 60.0


class ApiError(Exception):
    """Maps straight onto the structured error payload."""

    def __init__(self, status: int, code: str, message: str,
                 field: Optional[str] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.field = field


def _number(name: str, value) -> float:
    # bool is an int subclass; a JSON true must not pass as 1.0
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ApiError(422, "invalid_parameter", f"{name} must be a number",
                       field=name)
    v = float(value)
    if not math.isfinite(v):
        raise ApiError(422, "invalid_parameter", f"{name} must be finite",
                       field=name)
    return v


def apply_param_changes(config: PipelineConfig, changes: Mapping) -> PipelineConfig:
    """Validated copy of ``config`` with the requested fields replaced.

    ``changes`` uses the wire schema; every rejection names the offending
    field so the client can highlight it.
    """
    for key in changes:
        if key not in PARAM_FIELDS:
            raise ApiError(422, "invalid_parameter", f"unknown parameter {key!r}",
                           field=str(key))
    params = config.params
    plane = params.plane

    plane_changes = {}
    if "FP" in changes:
        plane_changes["fp_distance"] = _number("FP", changes["FP"])
    for name, attr in (("P_i", "fp_pitch"), ("R_o", "fp_roll")):
        if name in changes:
            v = _number(name, changes[name])
            if not -math.pi / 2 < v < math.pi / 2:
                raise ApiError(422, "invalid_parameter",
                               f"{name} must lie in (-pi/2, pi/2) radians",
                               field=name)
            plane_changes[attr] = v
    if "CC" in changes:
        plane_changes["compass_correction"] = _number("CC", changes["CC"])

    param_changes = {}
    if "C_n" in changes:
        v = _number("C_n", changes["C_n"])
        if v < 0.0:
            raise ApiError(422, "invalid_parameter", "C_n must be >= 0",
                           field="C_n")
        param_changes["c_n"] = v
    if "R_x" in changes:
        v = _number("R_x", changes["R_x"])
        if not 0.0 <= v <= 100.0:
            raise ApiError(422, "invalid_parameter", "R_x must be in [0, 100]",
                           field="R_x")
        param_changes["t"] = v

    config_changes = {}
    if "mode" in changes:
        if changes["mode"] not in MODES:
            raise ApiError(422, "invalid_parameter",
                           f"mode must be one of {list(MODES)}", field="mode")
        config_changes["mode"] = changes["mode"]
    if "window_size" in changes:
        v = changes["window_size"]
        if isinstance(v, bool) or not (
            isinstance(v, int) or (isinstance(v, float) and v.is_integer())
        ):
            raise ApiError(422, "invalid_parameter",
                           "window_size must be an integer", field="window_size")
        v = int(v)
        if v < 1:
            raise ApiError(422, "invalid_parameter", "window_size must be >= 1",
                           field="window_size")
        config_changes["window_size"] = v

    try:
        if plane_changes:
            plane = replace(plane, **plane_changes)
        params = replace(params, plane=plane, **param_changes)
        return replace(config, params=params, **config_changes)
    except ValueError as e:  # belt and braces: constructor-level rejections
        raise ApiError(422, "invalid_parameter", str(e)) from e


class Session:
    """One tuning session: replay cursor, window, rendered snapshots."""

    def __init__(self, session_id: str, frames: Sequence[Frame],
                 intrinsics: CameraIntrinsics, config: PipelineConfig,
                 fps: float):
        self.id = session_id
        self.frames = list(frames)
        self.lock = threading.RLock()
        self.defaults = config
        self.integrator = WindowIntegrator(intrinsics, config)
        self.selector = FrameSelector(config.sampling_distance)
        self.fps = fps
        self.cursor = 0  # next position in the replay list
        self.current: Optional[Frame] = None  # newest frame seen (left view)
        self.playing = False
        self.last_output = None
        self.last_render_ms: Optional[float] = None
        self._left_png: Optional[bytes] = None
        self._right_png: Optional[bytes] = None

    # -- documents

    def params_doc(self) -> dict:
        cfg = self.integrator.config
        p = cfg.params
        return {
            "FP": p.plane.fp_distance,
            "P_i": p.plane.fp_pitch,
            "R_o": p.plane.fp_roll,
            "CC": p.plane.compass_correction,
            "C_n": p.c_n,
            "R_x": p.t,
            "mode": cfg.mode,
            "window_size": cfg.window_size,
        }

    def state_doc(self) -> dict:
        with self.lock:
            current = self.current
            return {
                "session_id": self.id,
                "params": self.params_doc(),
                "params_version": self.integrator.params_version,
                "playback": {
                    "playing": self.playing,
                    "fps": self.fps,
                    "cursor": self.cursor,
                    "frame_count": len(self.frames),
                    "at_end": self.cursor >= len(self.frames),
                    "current_index": None if current is None else current.index,
                },
                "window": {
                    "fill": self.integrator.window_fill,
                    "capacity": self.integrator.config.window_size,
                    "indices": list(self.integrator.window_indices),
                },
                "last_render_ms": self.last_render_ms,
                "modes": list(MODES),
            }

    # -- mutations (all under the session lock)

    def step(self, count: int = 1) -> int:
        with self.lock:
            if self.cursor >= len(self.frames) and count > 0:
                raise ApiError(409, "end_of_stream",
                               "the replay source has no more frames")
            stepped = 0
            while stepped < count and self.cursor < len(self.frames):
                frame = self.frames[self.cursor]
                self.cursor += 1
                self.current = frame
                self._left_png = None
                if self.selector.offer(frame):
                    t0 = time.perf_counter()
                    mask = detect_stage(frame, self.integrator.config)
                    out = self.integrator.push(frame, mask)
                    self._store_output(out, t0)
                stepped += 1
            return stepped

    def apply_params(self, changes: Mapping) -> None:
        with self.lock:
            self.integrator.update(apply_param_changes(self.integrator.config,
                                                       changes))
            self._rerender()

    def reset_params(self) -> None:
        with self.lock:
            self.integrator.update(self.defaults)
            self._rerender()

    def play(self, fps: Optional[float] = None) -> None:
        with self.lock:
            if fps is not None:
                v = _number("fps", fps)
                if not MIN_FPS <= v <= MAX_FPS:
                    raise ApiError(422, "invalid_parameter",
                                   f"fps must be in [{MIN_FPS}, {MAX_FPS}]",
                                   field="fps")
                self.fps = v
            if self.cursor >= len(self.frames):
                raise ApiError(409, "end_of_stream",
                               "the replay source has no more frames")
            if self.playing:
                return
            self.playing = True
        threading.Thread(target=self._play_loop, name=f"saai-play-{self.id}",
                         daemon=True).start()

    def pause(self) -> None:
        with self.lock:
            self.playing = False

    def _play_loop(self) -> None:
        while True:
            t0 = time.perf_counter()
            with self.lock:
                if not self.playing:
                    return
                if self.cursor >= len(self.frames):
                    self.playing = False  # end of dataset pauses playback
                    return
                interval = 1.0 / self.fps
            try:
                self.step(1)
            except (ApiError, SaaiError):
                self.pause()
                return
            rest = interval - (time.perf_counter() - t0)
            if rest > 0:
                time.sleep(rest)

    def _rerender(self) -> None:
        if self.integrator.window_fill:
            t0 = time.perf_counter()
            self._store_output(self.integrator.render(), t0)
        else:
            self.last_output = None
            self._right_png = None

    def _store_output(self, out, t0: float) -> None:
        self.last_render_ms = (time.perf_counter() - t0) * 1000.0
        self.last_output = out
        self._right_png = None

    # -- views

    def left_png(self) -> bytes:
        with self.lock:
            if self.current is None:
                raise ApiError(409, "no_frames", "no frame stepped yet")
            if self._left_png is None:
                image = self.current.image
                self._left_png = (
                    display_png_bytes(image) if image.ndim == 2
                    else rgb_png_bytes(image)
                )
            return self._left_png

    def right_png(self) -> bytes:
        with self.lock:
            if self.last_output is None:
                raise ApiError(409, "no_frames", "the window holds no frames")
            if self._right_png is None:
                self._right_png = display_png_bytes(self.last_output.display)
            return self._right_png

    def right_meta(self) -> dict:
        with self.lock:
            if self.last_output is None:
                raise ApiError(409, "no_frames", "the window holds no frames")
            display = self.last_output.display
            return {
                "frame_index": self.last_output.frame_index,
                "params_version": self.last_output.params_version,
                "shape": list(display.shape),
                "nonzero_count": int(np.count_nonzero(display)),
                "min": float(display.min()),
                "max": float(display.max()),
            }


def create_app(
    frames: Sequence[Frame],
    intrinsics: CameraIntrinsics,
    config: PipelineConfig,
    fps: float = 10.0,
    multi_session: bool = False,
    static_dir=None,
) -> FastAPI:
    """Build the FastAPI app around one preloaded replay source.

    Single-session by default: creating a session replaces the previous
    one (the field app has one operator).  ``multi_session`` keeps them
    all.  ``static_dir`` optionally mounts a built UI at ``/``.
    """
    if not frames:
        raise ValueError("the service needs at least one frame")
    app = FastAPI(title="saai service")
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        err = {"code": exc.code, "message": str(exc)}
        if exc.field is not None:
            err["field"] = exc.field
        return JSONResponse(status_code=exc.status, content={"error": err})

    @app.exception_handler(SaaiError)
    async def render_error_handler(request: Request, exc: SaaiError):
        err = {"code": "render_failure", "message": str(exc)}
        if isinstance(exc, PipelineError) and exc.frame_index is not None:
            err["frame_index"] = exc.frame_index
        return JSONResponse(status_code=500, content={"error": err})

    def get_session(sid: str) -> Session:
        with sessions_lock:
            session = sessions.get(sid)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {sid!r}")
        return session

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "frames": len(frames), "modes": list(MODES)}

    @app.post("/api/v1/session", status_code=201)
    def create_session():
        session = Session(secrets.token_hex(4), frames, intrinsics, config, fps)
        with sessions_lock:
            if not multi_session:
                for old in sessions.values():
                    old.pause()
                sessions.clear()
            sessions[session.id] = session
        return {"session_id": session.id, "state": session.state_doc()}

    @app.get("/api/v1/session/{sid}/state")
    def get_state(sid: str):
        return get_session(sid).state_doc()

    @app.patch("/api/v1/session/{sid}/params")
    def patch_params(sid: str, changes: dict):
        session = get_session(sid)
        session.apply_params(changes)
        return session.state_doc()

    @app.post("/api/v1/session/{sid}/reset")
    def reset(sid: str):
        session = get_session(sid)
        session.reset_params()
        return session.state_doc()

    @app.post("/api/v1/session/{sid}/step")
    def step(sid: str, body: Optional[dict] = None):
        session = get_session(sid)
        count = 1
        if body and "count" in body:
            v = body["count"]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ApiError(422, "invalid_parameter",
                               "count must be a positive integer", field="count")
            count = v
        stepped = session.step(count)
        return {"stepped": stepped, "state": session.state_doc()}

    @app.post("/api/v1/session/{sid}/play")
    def play(sid: str, body: Optional[dict] = None):
        session = get_session(sid)
        session.play(fps=(body or {}).get("fps"))
        return session.state_doc()

    @app.post("/api/v1/session/{sid}/pause")
    def pause(sid: str):
        session = get_session(sid)
        session.pause()
        return session.state_doc()

    @app.get("/api/v1/session/{sid}/view/left")
    def view_left(sid: str):
        return Response(content=get_session(sid).left_png(),
                        media_type="image/png")

    @app.get("/api/v1/session/{sid}/view/right")
    def view_right(sid: str):
        return Response(content=get_session(sid).right_png(),
                        media_type="image/png")

    @app.get("/api/v1/session/{sid}/view/right/meta")
    def view_right_meta(sid: str):
        return get_session(sid).right_meta()

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app
