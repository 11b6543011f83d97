"""Runtime orchestration: one object owns the clock and every pipeline.

All simulation mutation happens under one re-entrant lock, in sim-time
order, driven by `advance_to_us`.  HTTP handlers only enqueue commands and
read snapshots; they never advance time themselves.  That single-writer
discipline is what makes headless runs bit-reproducible.

Per poll cycle, in fixed order: sample raw sensors, condition them through
the DSP chains, append to the store, evaluate warnings, read compass and
wheel ticks over the port, feed the dead-reckoning tracker, assemble the
telemetry frame.
"""

from __future__ import annotations

import logging
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Deque, Dict, List, Optional

from . import __version__
from .config import AppConfig
from .daps import (
    DapsManifest,
    DapsRegistry,
    TimeSeriesStore,
    WarningEngine,
    parse_manifest,
    validate_against_profile,
)
from .dsp import Calibration, DspEngine, FilterSpec
from .errors import QueueFullError, UnknownSensorError
from .hwsim import HardwareSim
from .navigation import (
    EstimatedPose,
    PathLog,
    PathSegment,
    SegmentTracker,
    advance,
    norm_deg,
    turn_hop,
    wheel_tick_quantum,
)
from .portio import DriveCommand, ParallelPortDriver, TraceLog

log = logging.getLogger(__name__)

CAMERA_PLACEHOLDER = {
    "available": False,
    "note": "visual feed is not modeled; mounting point reserved",
}

# Travel sign for interpreting wheel-tick deltas.  Stop is absent on
# purpose: ticks latched just after a stop are residue of the previous
# motion and must keep its sign, so stops leave the hint untouched.
_DIRECTION = {
    DriveCommand.FORWARD: 1,
    DriveCommand.TURN_LEFT: 1,
    DriveCommand.TURN_RIGHT: 1,
    DriveCommand.BACKWARD: -1,
}


@dataclass
class _QueuedCommand:
    command_id: int
    command: DriveCommand
    duration_ms: Optional[int]


@dataclass
class _ActiveCommand:
    command_id: int
    command: DriveCommand
    deadline_us: Optional[int]


class RobotRuntime:
    def __init__(self, cfg: AppConfig, trace: bool = False):
        cfg.validate()
        self.cfg = cfg
        self.sim = HardwareSim(cfg.world, tick_us=cfg.sim.tick_us)
        self.trace: Optional[TraceLog] = TraceLog() if trace else None
        self.driver = ParallelPortDriver.for_sim(
            self.sim,
            trace=self.trace,
            settle_us=cfg.sim.settle_us,
            phase_settle_us=cfg.sim.phase_settle_us,
        )
        self._profile: List[str] = list(cfg.world.sensor_fields)

        self.dsp = DspEngine()
        for sid in self._profile:
            self.dsp.configure(sid, [], Calibration(), "counts", t=0.0, source="default")
        self.registry = DapsRegistry()
        self.warnings = WarningEngine()
        self.store = TimeSeriesStore(self._profile, retention_s=cfg.daps.retention_s)
        self.path_log = PathLog()
        self.tracker = SegmentTracker(
            quantum=wheel_tick_quantum(cfg.world.wheel_radius, cfg.world.ticks_per_revolution),
            track_width=cfg.world.track_width,
            log=self.path_log,
            split_threshold_deg=cfg.navigation.split_threshold_deg,
            turn_ratio=cfg.navigation.turn_ratio,
            idle_close_polls=cfg.navigation.idle_close_polls,
        )

        self._lock = threading.RLock()
        self._frame_cond = threading.Condition(self._lock)
        self._queue: Deque[_QueuedCommand] = deque()
        self._active: Optional[_ActiveCommand] = None
        self._next_command_id = 1
        self._direction = 0
        self._poll_period_us = cfg.sim.poll_period_us
        self._next_poll_us = 0
        self._frame_seq = 0
        self._latest_frame: Optional[dict] = None
        self.frame_listeners: List[Callable[[dict], None]] = []
        self.warning_listeners: List[Callable[[dict], None]] = []
        self.events: List[dict] = []
        self.audit: List[dict] = []

        self._tokens: Dict[str, str] = dict(cfg.service.tokens)
        self._tokens[cfg.service.admin_token] = "admin"

        for manifest_path in cfg.daps.autoload:
            text = Path(manifest_path).read_text()
            self.install_manifest(text, principal="boot")

    # -- principals ----------------------------------------------------------

    def role_for(self, token: str) -> Optional[str]:
        with self._lock:
            return self._tokens.get(token)

    def add_user(self, token: str, role: str, principal: str) -> None:
        with self._lock:
            replaced = token in self._tokens
            self._tokens[token] = role
            self._audit(
                "user_add",
                principal,
                "ok",
                {"role": role, "replaced": replaced, "token_hint": f"...{token[-4:]}"},
            )

    # -- drive lane ----------------------------------------------------------

    def submit_drive(self, command: DriveCommand, duration_ms: Optional[int]) -> int:
        with self._lock:
            if len(self._queue) >= self.cfg.service.queue_bound:
                raise QueueFullError(
                    f"drive queue is full ({self.cfg.service.queue_bound} pending)"
                )
            command_id = self._next_command_id
            self._next_command_id += 1
            self._queue.append(_QueuedCommand(command_id, command, duration_ms))
            self.events.append(
                {
                    "t": self.sim.t_s,
                    "kind": "accepted",
                    "command_id": command_id,
                    "command": command.value,
                    "duration_ms": duration_ms,
                }
            )
            return command_id

    def _lane_free(self) -> bool:
        # An untimed command occupies the lane only until something else
        # arrives; a timed one holds it until its auto-stop.
        return self._active is None or self._active.deadline_us is None

    def _dispatch_next(self) -> None:
        queued = self._queue.popleft()
        t_us = self.sim.t_us
        self.driver.send_command(queued.command)
        deadline = None
        if queued.duration_ms is not None:
            deadline = t_us + queued.duration_ms * 1000
        self._active = _ActiveCommand(queued.command_id, queued.command, deadline)
        if queued.command in _DIRECTION:
            self._direction = _DIRECTION[queued.command]
        self.events.append(
            {
                "t": t_us / 1e6,
                "kind": "dispatched",
                "command_id": queued.command_id,
                "command": queued.command.value,
                "duration_ms": queued.duration_ms,
            }
        )

    def _auto_stop(self) -> None:
        active = self._active
        assert active is not None
        t = self.sim.t_s
        self.driver.send_command(DriveCommand.STOP)
        self.events.append(
            {
                "t": t,
                "kind": "auto_stop",
                "command_id": active.command_id,
                "command": active.command.value,
                "duration_ms": None,
            }
        )
        self._active = None

    # -- clock ---------------------------------------------------------------

    def advance_to_us(self, target_us: int) -> None:
        """Advance sim time to target, executing every due event in order."""
        with self._lock:
            while True:
                if self._queue and self._lane_free():
                    self._dispatch_next()
                    continue
                now = self.sim.t_us
                deadline = self._active.deadline_us if self._active else None

                due = []
                if deadline is not None and deadline <= target_us:
                    due.append((deadline, 0))  # stops sort before polls on ties
                if self._next_poll_us <= target_us:
                    due.append((self._next_poll_us, 1))
                if not due:
                    if target_us > now:
                        self.sim.pump_to_us(target_us)
                    return
                t_evt, kind = min(due)
                if t_evt > now:
                    self.sim.pump_to_us(t_evt)
                    continue
                # Event is due (settle pumps may have overshot its slot).
                if kind == 0:
                    self._auto_stop()
                else:
                    self._poll_cycle()
                    self._next_poll_us += self._poll_period_us

    def advance_s(self, seconds: float) -> None:
        self.advance_to_us(self.sim.t_us + int(round(seconds * 1e6)))

    # -- acquisition ---------------------------------------------------------

    def _poll_cycle(self) -> None:
        t = self.sim.t_us / 1e6
        raws: Dict[str, int] = {}
        for sid in self._profile:
            value = self.sim.world.sample_sensor(sid, t)
            raws[sid] = value
            if self.trace is not None:
                self.trace.record_sensor(self.sim.t_us, sid, value)
        filtered = {sid: self.dsp.process(sid, raws[sid]) for sid in self._profile}
        for sid in self._profile:
            self.store.append(sid, t, raws[sid], filtered[sid])

        transitions = self.warnings.evaluate(t, filtered)
        for event in transitions:
            payload = event.to_dict()
            payload["kind"] = "cleared" if event.cleared_at is not None else "raised"
            for listener in self.warning_listeners:
                listener(payload)

        compass = self.driver.read_compass()
        dl, dr = self.driver.read_wheel_ticks()
        self.tracker.observe(t, compass.degrees, dl, dr, self._direction)

        state = self.sim.world.snapshot()
        pose = self._live_pose()
        self._frame_seq += 1
        frame = {
            "seq": self._frame_seq,
            "t": t,
            "pose": {"x": pose[0], "y": pose[1], "heading": pose[2]},
            "compass_deg": compass.degrees,
            "motors": {"left": state.left_motor.value, "right": state.right_motor.value},
            "sensors": {
                sid: {
                    "raw": raws[sid],
                    "value": filtered[sid],
                    "unit": self.dsp.unit_of(sid),
                }
                for sid in self._profile
            },
            "warnings": [event.to_dict() for event in self.warnings.active()],
            "camera": CAMERA_PLACEHOLDER,
            "active_command": (
                {"command_id": self._active.command_id, "command": self._active.command.value}
                if self._active is not None
                else None
            ),
            "queue_depth": len(self._queue),
        }
        self._latest_frame = frame
        for listener in self.frame_listeners:
            listener(frame)
        self._frame_cond.notify_all()

    def _live_pose(self):
        """Committed cursor plus the in-flight window/turn contribution."""
        pose = self.path_log.cursor
        pending = self.tracker._pending_turn
        if pending is not None and pending.sweep != 0.0:
            dx, dy = turn_hop(pending.heading_before, pending.sweep, self.tracker.track_width)
            pose = EstimatedPose(
                pose.x + dx, pose.y + dy, norm_deg(pose.heading + pending.sweep)
            )
        win = self.tracker._window
        if win is not None and (win.sum_left or win.sum_right):
            if win.is_turn(self.tracker.turn_ratio):
                before = win.entry_compass if win.entry_compass is not None else win.samples[0]
                dx, dy = turn_hop(before, win.sweep, self.tracker.track_width)
                pose = EstimatedPose(
                    pose.x + dx, pose.y + dy, norm_deg(pose.heading + win.sweep)
                )
            else:
                heading = win.mean_heading()
                if win.direction < 0:
                    heading = norm_deg(heading + 180.0)
                distance = 0.5 * (win.sum_left + win.sum_right) * self.tracker.quantum
                pose = advance(
                    pose, PathSegment(heading, distance, win.t_start, win.t_last_motion)
                )
        return pose.x, pose.y, pose.heading

    # -- snapshots -----------------------------------------------------------

    def latest_frame(self) -> Optional[dict]:
        with self._lock:
            return self._latest_frame

    def wait_for_frame(self, after_seq: int, timeout: float) -> Optional[dict]:
        with self._frame_cond:
            self._frame_cond.wait_for(
                lambda: self._latest_frame is not None
                and self._latest_frame["seq"] > after_seq,
                timeout,
            )
            frame = self._latest_frame
            if frame is not None and frame["seq"] > after_seq:
                return frame
            return None

    def path_dict(self) -> dict:
        with self._lock:
            return self.path_log.to_dict()

    def path_csv(self) -> str:
        with self._lock:
            return self.path_log.to_csv()

    def info(self) -> dict:
        with self._lock:
            world = self.cfg.world
            return {
                "name": "lnr",
                "version": __version__,
                "profile": {
                    "sensors": list(self._profile),
                    "wheel_radius_m": world.wheel_radius,
                    "track_width_m": world.track_width,
                    "wheel_speed_mps": world.wheel_speed,
                    "ticks_per_revolution": world.ticks_per_revolution,
                    "tick_ms": self.cfg.sim.tick_ms,
                    "poll_hz": self.cfg.sim.poll_hz,
                },
                "packages": [m.summary() for m in self.registry.packages()],
            }

    def query_data(self, sensor_id: str, t1: float, t2: float, stride: int) -> dict:
        with self._lock:
            samples = self.store.query(sensor_id, t1, t2, stride)
            return {
                "sensor": sensor_id,
                "unit": self.dsp.unit_of(sensor_id),
                "samples": samples,
            }

    def event_log(self) -> List[dict]:
        with self._lock:
            return list(self.events)

    def audit_log(self) -> List[dict]:
        with self._lock:
            return list(self.audit)

    # -- admin ---------------------------------------------------------------

    def _audit(self, action: str, principal: str, outcome: str, detail: dict) -> None:
        self.audit.append(
            {
                "t": self.sim.t_s,
                "principal": principal,
                "action": action,
                "outcome": outcome,
                "detail": detail,
            }
        )

    def install_manifest(self, text: str, principal: str) -> dict:
        manifest = parse_manifest(text)
        validate_against_profile(manifest, self._profile)
        with self._lock:
            try:
                superseded = self.registry.install(manifest)
            except Exception as e:
                self._audit(
                    "daps_install",
                    principal,
                    f"error: {e}",
                    {"name": manifest.name, "version": manifest.version_str},
                )
                raise
            t = self.sim.t_s
            for binding in manifest.sensors:
                self.dsp.configure(
                    binding.sensor_id,
                    binding.filters,
                    binding.calibration,
                    binding.unit,
                    t=t,
                    source=f"daps:{manifest.name}@{manifest.version_str}",
                )
            self.warnings.set_rules(manifest.name, manifest.warnings)
            self._audit(
                "daps_install",
                principal,
                "ok",
                {
                    "name": manifest.name,
                    "version": manifest.version_str,
                    "superseded": superseded.version_str if superseded else None,
                },
            )
            return {
                "installed": manifest.summary(),
                "superseded": superseded.version_str if superseded else None,
            }

    def retune(
        self,
        sensor_id: str,
        specs: List[FilterSpec],
        calibration: Calibration,
        principal: str,
    ) -> None:
        with self._lock:
            try:
                self.dsp.retune(sensor_id, specs, calibration, t=self.sim.t_s)
            except Exception as e:
                self._audit("dsp_retune", principal, f"error: {e}", {"sensor_id": sensor_id})
                raise
            self._audit(
                "dsp_retune",
                principal,
                "ok",
                {"sensor_id": sensor_id, "filters": [s.to_dict() for s in specs]},
            )

    def flush_tracker(self) -> None:
        with self._lock:
            self.tracker.flush()


class Stepper(threading.Thread):
    """Paces the simulation against the wall clock for live serving."""

    def __init__(self, runtime: RobotRuntime, chunk_s: float = 0.005):
        super().__init__(name="lnr-stepper", daemon=True)
        self.runtime = runtime
        self.chunk_s = chunk_s
        self._stop = threading.Event()

    def run(self) -> None:
        wall0 = time.monotonic()
        sim0 = self.runtime.sim.t_us
        while not self._stop.is_set():
            target = sim0 + int((time.monotonic() - wall0) * 1e6)
            if target > self.runtime.sim.t_us:
                self.runtime.advance_to_us(target)
            time.sleep(self.chunk_s)

    def stop(self) -> None:
        self._stop.set()
        self.join(timeout=2.0)
