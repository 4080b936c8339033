"""Streaming pipeline: select, detect, register, integrate.

Three stages connected by bounded queues mirror the field system's
thread layout:

  stage 1  frame selection by flight distance
  stage 2  per-frame RX masks (saai mode) or thermal pass-through
  stage 3  sliding-window registration and integration, then display

The correctness contract is that the streamed output after any frame is
bit-identical to a batch computation over the same window, and that
serial and parallel execution produce identical bytes.  Two properties
make that hold:

  * every fold of per-frame warps runs in ascending frame-index order
    (the canonical order shared with the batch operations), and
  * the saai incremental fast path only touches integer accumulators
    (mask hits and coverage counts), where add/subtract round trips are
    exact.  Thermal sums are floating point, so those modes re-fold the
    cached warps per output instead of updating a rolling sum.

Parameter updates (focal plane, threshold, contrast) invalidate the
cached warps and re-render retroactively from the retained window; no
new frames are needed to see the effect.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .errors import EmptyInputError, OrderingError, PipelineError, SaaiError
from .geometry import CameraIntrinsics, FocalPlaneSpec, Frame
from .rx import AnomalyMask
from .integrate import (
    FrameWarp,
    IntegralImage,
    SaaiImage,
    apply_contrast,
    detect_frame_mask,
    detect_on_integral,
    fold_thermal,
    saai_from_counts,
    warp_frame,
    warp_mask,
)

MODES = ("thermal_integral", "ad_on_integral", "saai")

_SENTINEL = None


@dataclass(frozen=True)
class RenderParams:
    """Visualization parameters applied at integration time."""

    plane: FocalPlaneSpec
    t: float = 90.0  # RX threshold percentile
    c_n: float = 1.0  # display contrast gain
    epsilon: float = 0.0  # RX covariance regularization

    def __post_init__(self):
        if not 0.0 <= self.t <= 100.0:
            raise ValueError(f"t must be in [0, 100], got {self.t}")
        if self.c_n < 0.0:
            raise ValueError(f"c_n must be >= 0, got {self.c_n}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the pipeline needs besides the frames themselves."""

    params: RenderParams
    mode: str = "saai"
    sampling_distance: float = 0.5  # meters of flight per selected frame
    window_size: int = 30  # frames n in the sliding window
    queue_capacity: int = 8

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sampling_distance < 0.0:
            raise ValueError("sampling_distance must be >= 0")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")

    @property
    def aperture(self) -> float:
        """Synthetic aperture length a = sampling_distance x window_size."""
        return self.sampling_distance * self.window_size


@dataclass(frozen=True)
class PipelineOutput:
    """One rendered output, emitted per selected frame (or re-render)."""

    frame_index: int  # newest frame in the window
    window_indices: tuple[int, ...]
    raw: Union[IntegralImage, SaaiImage, AnomalyMask]
    display: np.ndarray  # contrast-applied raster in [0, 1]
    params_version: int


@dataclass
class PipelineStats:
    """Raw per-frame timing samples plus stream counters."""

    frames_in: int = 0
    frames_selected: int = 0
    frames_dropped: int = 0  # backpressure never drops; stays 0
    select_ms: list = field(default_factory=list)
    detect_ms: list = field(default_factory=list)
    integrate_ms: list = field(default_factory=list)
    end_to_end_ms: list = field(default_factory=list)


def collect_stats(stats: PipelineStats, warmup: int = 0) -> dict:
    """Latency percentiles per stage, as a JSON-ready document.

    ``warmup`` drops that many leading samples from every series before
    reducing: the first outputs pay one-off costs (allocator growth,
    plane grid construction, cold caches) that say nothing about the
    steady-state cadence.  Counters are never trimmed.
    """
    if stats.frames_in < 1:
        raise EmptyInputError("pipeline processed no frames")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")

    def pct(samples):
        samples = samples[warmup:]
        if not samples:
            return {"p50_ms": 0.0, "p95_ms": 0.0}
        return {
            "p50_ms": float(np.percentile(samples, 50)),
            "p95_ms": float(np.percentile(samples, 95)),
        }

    return {
        "frames_in": stats.frames_in,
        "frames_selected": stats.frames_selected,
        "frames_dropped": stats.frames_dropped,
        "stages": {
            "select": pct(stats.select_ms),
            "detect": pct(stats.detect_ms),
            "integrate": pct(stats.integrate_ms),
        },
        "end_to_end": pct(stats.end_to_end_ms),
    }


# ---------------------------------------------------------------------------
# stage 1: frame selection


class FrameSelector:
    """Greedy distance gate over an ordered frame stream."""

    def __init__(self, sampling_distance: float):
        if sampling_distance < 0.0:
            raise ValueError("sampling_distance must be >= 0")
        self.sampling_distance = sampling_distance
        self._last_index: Optional[int] = None
        self._last_position: Optional[np.ndarray] = None

    def offer(self, frame: Frame) -> bool:
        """True when the frame passes the distance gate."""
        if self._last_index is not None and frame.index <= self._last_index:
            raise OrderingError(
                f"frame index {frame.index} arrived after {self._last_index}"
            )
        self._last_index = frame.index
        pos = frame.pose.position[:2]
        if self._last_position is None:
            self._last_position = pos
            return True
        # horizontal distance only: altitude jitter must not trigger selection
        if float(np.hypot(*(pos - self._last_position))) >= self.sampling_distance:
            self._last_position = pos
            return True
        return False


def select_frames(frames: Iterable[Frame], sampling_distance: float) -> Iterator[Frame]:
    """Yield the first frame, then frames >= sampling_distance from the last kept."""
    selector = FrameSelector(sampling_distance)
    for frame in frames:
        if selector.offer(frame):
            yield frame


# ---------------------------------------------------------------------------
# stage 2: per-frame detection


def detect_stage(frame: Frame, config: PipelineConfig) -> Optional[np.ndarray]:
    """Per-frame RX mask in saai mode, None (pass-through) otherwise."""
    if config.mode != "saai":
        return None
    try:
        return detect_frame_mask(frame, config.params.t, config.params.epsilon)
    except SaaiError as e:
        raise PipelineError(f"detect stage failed: {e}", frame_index=frame.index) from e


# ---------------------------------------------------------------------------
# stage 3: sliding-window integration


class _Entry:
    """One retained frame plus its per-version cached artifacts."""

    __slots__ = ("frame", "mask", "warp")

    def __init__(self, frame: Frame, mask: Optional[np.ndarray] = None):
        self.frame = frame
        self.mask = mask  # saai mode: bool RX mask for the current params
        self.warp: Optional[FrameWarp] = None  # registered onto the current plane


class WindowIntegrator:
    """Sliding window of selected frames with retroactive re-rendering.

    ``push`` appends a frame, evicts beyond the window size, and renders;
    ``update`` swaps parameters and invalidates every cached warp so the
    next render recomputes from the retained frames.  All folds run in
    ascending frame-index order, matching the batch operations bit for
    bit.
    """

    def __init__(self, intrinsics: CameraIntrinsics, config: PipelineConfig):
        self._intrinsics = intrinsics
        self._config = config
        self._version = 0
        self._entries: deque[_Entry] = deque()
        self._world: Optional[np.ndarray] = None
        # saai integer accumulators; valid only while _sums_ok
        self._hits: Optional[np.ndarray] = None
        self._counts: Optional[np.ndarray] = None
        self._sums_ok = False

    @property
    def config(self) -> PipelineConfig:
        return self._config

    @property
    def params_version(self) -> int:
        return self._version

    @property
    def window_indices(self) -> tuple[int, ...]:
        return tuple(e.frame.index for e in self._entries)

    @property
    def window_fill(self) -> int:
        return len(self._entries)

    def update(self, config: PipelineConfig) -> None:
        """Swap the configuration; cached warps and sums become stale."""
        self._config = config
        self._version += 1
        self._world = None
        self._sums_ok = False
        for e in self._entries:
            e.mask = None
            e.warp = None
        while len(self._entries) > config.window_size:
            self._entries.popleft()

    def update_params(self, params: RenderParams) -> None:
        self.update(replace(self._config, params=params))

    def push(self, frame: Frame, mask: Optional[np.ndarray] = None) -> PipelineOutput:
        """Admit a selected frame (with its stage-2 mask) and render."""
        entry = _Entry(frame, mask)
        self._entries.append(entry)
        evicted = None
        if len(self._entries) > self._config.window_size:
            evicted = self._entries.popleft()
        if self._config.mode == "saai" and self._sums_ok:
            try:
                self._admit_incremental(entry, evicted)
            except PipelineError:
                raise
            except SaaiError as e:
                raise PipelineError(
                    f"detect stage failed: {e}", frame_index=frame.index
                ) from e
        return self.render()

    def render(self) -> PipelineOutput:
        """Render the current window under the current parameters."""
        if not self._entries:
            raise EmptyInputError("window holds no frames")
        cfg = self._config
        if cfg.mode == "saai":
            raw = self._render_saai()
        else:
            integral = self._render_integral()
            if cfg.mode == "thermal_integral":
                raw = integral
            else:
                newest = self._entries[-1].frame.index
                try:
                    raw = detect_on_integral(integral, cfg.params.t, cfg.params.epsilon)
                except SaaiError as e:
                    raise PipelineError(
                        f"integral detection failed: {e}", frame_index=newest
                    ) from e
        if isinstance(raw, AnomalyMask):
            display = apply_contrast(raw.mask.astype(np.float64), cfg.params.c_n)
        else:
            display = apply_contrast(raw, cfg.params.c_n)
        return PipelineOutput(
            frame_index=self._entries[-1].frame.index,
            window_indices=self.window_indices,
            raw=raw,
            display=display,
            params_version=self._version,
        )

    # -- internals

    def _world_points(self) -> np.ndarray:
        if self._world is None:
            self._world = self._config.params.plane.world_points()
        return self._world

    def _mask_warp(self, entry: _Entry) -> FrameWarp:
        if entry.warp is None:
            if entry.mask is None:
                entry.mask = detect_frame_mask(
                    entry.frame, self._config.params.t, self._config.params.epsilon
                )
            entry.warp = warp_mask(
                entry.mask,
                entry.frame.pose,
                entry.frame.index,
                self._intrinsics,
                self._config.params.plane,
                self._world_points(),
            )
        return entry.warp

    def _thermal_warp(self, entry: _Entry) -> FrameWarp:
        if entry.warp is None:
            entry.warp = warp_frame(
                entry.frame,
                self._intrinsics,
                self._config.params.plane,
                self._world_points(),
            )
        return entry.warp

    def _admit_incremental(self, entry: _Entry, evicted: Optional[_Entry]) -> None:
        # integer add/subtract is exact, so the rolling sums stay
        # bit-identical to a fold from scratch
        warp = self._mask_warp(entry)
        self._hits += warp.values
        self._counts += warp.valid
        if evicted is not None:
            if evicted.warp is None:  # cannot subtract; re-fold on next render
                self._sums_ok = False
                return
            self._hits -= evicted.warp.values
            self._counts -= evicted.warp.valid

    def _render_saai(self) -> SaaiImage:
        if not self._sums_ok:
            warps = []
            for e in self._entries:
                try:
                    warps.append(self._mask_warp(e))
                except SaaiError as err:
                    raise PipelineError(
                        f"detect stage failed: {err}", frame_index=e.frame.index
                    ) from err
            hits = np.zeros(self._config.params.plane.shape, dtype=np.int64)
            counts = np.zeros_like(hits)
            for w in sorted(warps, key=lambda w: w.index):
                hits += w.values
                counts += w.valid
            self._hits = hits
            self._counts = counts
            self._sums_ok = True
        return saai_from_counts(
            self._hits.copy(), self._counts.copy(), self._config.params.plane
        )

    def _render_integral(self) -> IntegralImage:
        warps = [self._thermal_warp(e) for e in self._entries]
        values, counts = fold_thermal(warps)
        return IntegralImage(
            values=values, counts=counts, plane=self._config.params.plane
        )


# ---------------------------------------------------------------------------
# the full pipeline


def _now_ms() -> float:
    return time.perf_counter() * 1000.0


def run_pipeline(
    source: Iterable[Frame],
    intrinsics: CameraIntrinsics,
    config: PipelineConfig,
    sink: Callable[[PipelineOutput], None],
    serial: bool = False,
) -> PipelineStats:
    """Drive the three stages over a frame stream and report timings.

    ``serial`` runs the exact same stage functions in one thread; outputs
    are identical either way, only the latency profile differs.
    """
    if serial:
        return _run_serial(source, intrinsics, config, sink)
    return _run_parallel(source, intrinsics, config, sink)


def _run_serial(source, intrinsics, config, sink) -> PipelineStats:
    stats = PipelineStats()
    selector = FrameSelector(config.sampling_distance)
    integrator = WindowIntegrator(intrinsics, config)
    for frame in source:
        t_in = _now_ms()
        stats.frames_in += 1
        keep = selector.offer(frame)
        stats.select_ms.append(_now_ms() - t_in)
        if not keep:
            continue
        stats.frames_selected += 1
        t_detect = _now_ms()
        mask = detect_stage(frame, config)
        stats.detect_ms.append(_now_ms() - t_detect)
        t_int = _now_ms()
        out = integrator.push(frame, mask)
        stats.integrate_ms.append(_now_ms() - t_int)
        sink(out)
        stats.end_to_end_ms.append(_now_ms() - t_in)
    return stats


def _run_parallel(source, intrinsics, config, sink) -> PipelineStats:
    stats = PipelineStats()
    q_selected: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    q_detected: queue.Queue = queue.Queue(maxsize=config.queue_capacity)
    errors: list[BaseException] = []
    error_lock = threading.Lock()
    stop = threading.Event()

    def fail(exc: BaseException):
        with error_lock:
            if not errors:
                errors.append(exc)
        stop.set()

    def stage_select():
        try:
            selector = FrameSelector(config.sampling_distance)
            for frame in source:
                if stop.is_set():
                    break
                t_in = _now_ms()
                stats.frames_in += 1
                keep = selector.offer(frame)
                stats.select_ms.append(_now_ms() - t_in)
                if keep:
                    stats.frames_selected += 1
                    q_selected.put((frame, t_in))
        except BaseException as e:
            fail(e)
        finally:
            q_selected.put(_SENTINEL)

    def stage_detect():
        try:
            while True:
                item = q_selected.get()
                if item is _SENTINEL:
                    break
                if stop.is_set():
                    continue  # drain so the producer cannot block
                frame, t_in = item
                t0 = _now_ms()
                mask = detect_stage(frame, config)
                stats.detect_ms.append(_now_ms() - t0)
                q_detected.put((frame, mask, t_in))
        except BaseException as e:
            fail(e)
            _drain(q_selected)
        finally:
            q_detected.put(_SENTINEL)

    def stage_integrate():
        integrator = WindowIntegrator(intrinsics, config)
        try:
            while True:
                item = q_detected.get()
                if item is _SENTINEL:
                    break
                if stop.is_set():
                    continue
                frame, mask, t_in = item
                t0 = _now_ms()
                out = integrator.push(frame, mask)
                stats.integrate_ms.append(_now_ms() - t0)
                sink(out)
                stats.end_to_end_ms.append(_now_ms() - t_in)
        except BaseException as e:
            fail(e)
            _drain(q_detected)

    threads = [
        threading.Thread(target=stage_select, name="saai-select"),
        threading.Thread(target=stage_detect, name="saai-detect"),
        threading.Thread(target=stage_integrate, name="saai-integrate"),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return stats


def _drain(q: queue.Queue) -> None:
    """Consume a queue until its sentinel so upstream puts cannot block."""
    while True:
        item = q.get()
        if item is _SENTINEL:
            return
