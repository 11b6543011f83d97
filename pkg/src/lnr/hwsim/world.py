"""Differential-drive robot world: pose integration, wheel ticks, sensors.

Conventions, used everywhere downstream: x = East, y = North, heading in
degrees clockwise from North in [0, 360).  Pose reference point is the
midpoint of the driven axle.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Tuple

from ..errors import UnknownSensorError, ValidationError

DEFAULT_SENSORS = ("co", "no", "smoke", "temperature", "humidity")

SENSOR_MIN = 0
SENSOR_MAX = 1023


class MotorState(enum.Enum):
    STOPPED = "stopped"
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class FieldEvent:
    """A time-windowed additive disturbance, optionally localized to a disc."""

    t_start: float
    t_end: float
    delta: float
    center: Optional[Tuple[float, float]] = None
    radius: float = 0.0

    def active(self, x: float, y: float, t: float) -> bool:
        if not (self.t_start <= t < self.t_end):
            return False
        if self.center is None:
            return True
        return math.hypot(x - self.center[0], y - self.center[1]) <= self.radius


@dataclass(frozen=True)
class FieldGrid:
    """Piecewise-constant ambient values over square cells.

    `values[row][col]` covers the cell starting at
    (x0 + col*cell_size, y0 + row*cell_size).  Outside the grid extent the
    sensor falls back to its base level.
    """

    x0: float
    y0: float
    cell_size: float
    values: Tuple[Tuple[float, ...], ...]

    def value_at(self, x: float, y: float) -> Optional[float]:
        if self.cell_size <= 0 or not self.values:
            return None
        col = math.floor((x - self.x0) / self.cell_size)
        row = math.floor((y - self.y0) / self.cell_size)
        if row < 0 or row >= len(self.values):
            return None
        if col < 0 or col >= len(self.values[row]):
            return None
        return self.values[row][col]


@dataclass(frozen=True)
class SensorField:
    """Ambient value of one sensor as a function of (x, y, t)."""

    base: float = 512.0
    grid: Optional[FieldGrid] = None
    events: Tuple[FieldEvent, ...] = ()

    def value(self, x: float, y: float, t: float) -> float:
        v: Optional[float] = None
        if self.grid is not None:
            v = self.grid.value_at(x, y)
        if v is None:
            v = self.base
        for ev in self.events:
            if ev.active(x, y, t):
                v += ev.delta
        return v


def _default_fields() -> Dict[str, SensorField]:
    return {sid: SensorField() for sid in DEFAULT_SENSORS}


def _default_sigma() -> Dict[str, float]:
    return {sid: 2.0 for sid in DEFAULT_SENSORS}


@dataclass(frozen=True)
class WorldConfig:
    wheel_radius: float = 0.05
    track_width: float = 0.30
    wheel_speed: float = 0.20
    ticks_per_revolution: int = 8
    sensor_fields: Mapping[str, SensorField] = field(default_factory=_default_fields)
    noise_sigma: Mapping[str, float] = field(default_factory=_default_sigma)
    seed: int = 0

    def validate(self) -> None:
        if not self.wheel_radius > 0:
            raise ValidationError("wheel_radius", "must be > 0")
        if not self.track_width > 0:
            raise ValidationError("track_width", "must be > 0")
        if not self.wheel_speed > 0:
            raise ValidationError("wheel_speed", "must be > 0")
        if self.ticks_per_revolution < 1:
            raise ValidationError("ticks_per_revolution", "must be >= 1")
        for sid, sigma in self.noise_sigma.items():
            if sigma < 0:
                raise ValidationError(f"noise_sigma.{sid}", "must be >= 0")
            if sid not in self.sensor_fields:
                raise ValidationError(f"noise_sigma.{sid}", "no such sensor")

    def tick_quantum(self) -> float:
        """Distance one wheel travels per optocoupler tick, meters."""
        return 2.0 * math.pi * self.wheel_radius / self.ticks_per_revolution


@dataclass
class RobotState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    left_motor: MotorState = MotorState.STOPPED
    right_motor: MotorState = MotorState.STOPPED
    left_ticks: int = 0
    right_ticks: int = 0
    sim_time: float = 0.0


def _norm_deg(deg: float) -> float:
    deg = deg % 360.0
    # Float modulo can land exactly on the divisor for tiny negatives.
    if deg >= 360.0:
        deg -= 360.0
    return deg


def compass_byte(heading_deg: float) -> int:
    """Quantize a heading to the device's single-byte encoding."""
    return int(_norm_deg(heading_deg) * 256.0 / 360.0)


def _motor_velocity(motor: MotorState, speed: float) -> float:
    if motor is MotorState.FORWARD:
        return speed
    if motor is MotorState.BACKWARD:
        return -speed
    return 0.0


class World:
    """Ground-truth simulation state plus the physics step."""

    def __init__(self, cfg: WorldConfig):
        cfg.validate()
        self.cfg = cfg
        self.state = RobotState()
        # Cumulative wheel travel in meters; tick counters are floors of
        # these, so fractional travel is never lost across steps.
        self._left_travel = 0.0
        self._right_travel = 0.0
        self._rngs = {
            sid: random.Random(f"{cfg.seed}:{sid}") for sid in cfg.sensor_fields
        }

    def set_motors(self, left: MotorState, right: MotorState) -> None:
        self.state.left_motor = left
        self.state.right_motor = right

    def snapshot(self) -> RobotState:
        return replace(self.state)

    def step(self, dt: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be > 0")
        st = self.state
        cfg = self.cfg
        vl = _motor_velocity(st.left_motor, cfg.wheel_speed)
        vr = _motor_velocity(st.right_motor, cfg.wheel_speed)
        linear = 0.5 * (vl + vr)
        omega = (vl - vr) / cfg.track_width  # rad/s, clockwise positive

        theta = math.radians(st.heading)
        if abs(omega) < 1e-12:
            st.x += linear * dt * math.sin(theta)
            st.y += linear * dt * math.cos(theta)
        else:
            # Exact arc about the instantaneous center of curvature, which
            # for one stopped wheel is that wheel's contact point.
            delta = omega * dt
            r = linear / omega
            px = st.x + r * math.cos(theta)
            py = st.y - r * math.sin(theta)
            vx = st.x - px
            vy = st.y - py
            cos_d = math.cos(delta)
            sin_d = math.sin(delta)
            st.x = px + vx * cos_d + vy * sin_d
            st.y = py - vx * sin_d + vy * cos_d
            st.heading = _norm_deg(st.heading + math.degrees(delta))

        self._left_travel += abs(vl) * dt
        self._right_travel += abs(vr) * dt
        q = cfg.tick_quantum()
        st.left_ticks = int(self._left_travel / q)
        st.right_ticks = int(self._right_travel / q)
        st.sim_time += dt

    def sample_sensor(self, sensor_id: str, t: Optional[float] = None) -> int:
        st = self.state
        if t is None:
            t = st.sim_time
        try:
            fld = self.cfg.sensor_fields[sensor_id]
        except KeyError:
            raise UnknownSensorError(sensor_id) from None
        value = fld.value(st.x, st.y, t)
        sigma = self.cfg.noise_sigma.get(sensor_id, 0.0)
        if sigma > 0:
            value += self._rngs[sensor_id].gauss(0.0, sigma)
        reading = math.floor(value)
        return max(SENSOR_MIN, min(SENSOR_MAX, reading))

    def sample_sensors(self, t: Optional[float] = None) -> Dict[str, int]:
        return {sid: self.sample_sensor(sid, t) for sid in self.cfg.sensor_fields}
