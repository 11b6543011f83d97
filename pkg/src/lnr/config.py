"""Configuration: one JSON file boots the whole stack.

Precedence, lowest to highest: built-in defaults, config file, LNR_*
environment variables, command-line flags.  Unknown keys are rejected so
typos fail loudly with the offending key path in the message.

Environment overrides: LNR_LISTEN, LNR_SEED, LNR_TICK_MS, LNR_ADMIN_TOKEN.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError, ValidationError
from .hwsim.world import (
    DEFAULT_SENSORS,
    FieldEvent,
    FieldGrid,
    SensorField,
    WorldConfig,
)

ENV_PREFIX = "LNR_"
DEFAULT_ADMIN_TOKEN = "lnr-admin"


@dataclass(frozen=True)
class SimConfig:
    tick_ms: int = 10
    poll_hz: float = 20.0
    settle_us: int = 5000
    phase_settle_us: int = 100

    @property
    def tick_us(self) -> int:
        return self.tick_ms * 1000

    @property
    def poll_period_us(self) -> int:
        return round(1_000_000 / self.poll_hz)

    def validate(self) -> None:
        if self.tick_ms < 1:
            raise ConfigError("sim.tick_ms: must be >= 1")
        if self.poll_hz <= 0:
            raise ConfigError("sim.poll_hz: must be > 0")
        if self.settle_us < 0 or self.phase_settle_us < 0:
            raise ConfigError("sim.settle_us: settle intervals must be >= 0")
        if self.poll_period_us % self.tick_us != 0:
            raise ConfigError(
                "sim.poll_hz: poll period must be a whole number of ticks "
                f"(period {self.poll_period_us} us, tick {self.tick_us} us)"
            )


@dataclass(frozen=True)
class ServiceConfig:
    listen: str = "127.0.0.1:8000"
    admin_token: str = DEFAULT_ADMIN_TOKEN
    tokens: Mapping[str, str] = field(default_factory=dict)  # token -> role
    queue_bound: int = 32

    def validate(self) -> None:
        if ":" not in self.listen:
            raise ConfigError("service.listen: expected HOST:PORT")
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError("service.listen: expected HOST:PORT")
        if not self.admin_token:
            raise ConfigError("service.admin_token: must be nonempty")
        for token, role in self.tokens.items():
            if role not in ("admin", "user"):
                raise ConfigError(
                    f"service.tokens.{token}: role must be 'admin' or 'user'"
                )
        if self.queue_bound < 1:
            raise ConfigError("service.queue_bound: must be >= 1")

    @property
    def host(self) -> str:
        return self.listen.rpartition(":")[0]

    @property
    def port(self) -> int:
        return int(self.listen.rpartition(":")[2])


@dataclass(frozen=True)
class NavigationConfig:
    split_threshold_deg: float = 5.0
    turn_ratio: float = 0.25
    idle_close_polls: int = 5

    def validate(self) -> None:
        if self.split_threshold_deg <= 0:
            raise ConfigError("navigation.split_threshold_deg: must be > 0")
        if not (0 <= self.turn_ratio < 1):
            raise ConfigError("navigation.turn_ratio: must be in [0, 1)")
        if self.idle_close_polls < 1:
            raise ConfigError("navigation.idle_close_polls: must be >= 1")


@dataclass(frozen=True)
class DapsConfig:
    retention_s: float = 86_400.0
    autoload: Tuple[str, ...] = ()

    def validate(self) -> None:
        if self.retention_s <= 0:
            raise ConfigError("daps.retention_s: must be > 0")


@dataclass(frozen=True)
class AppConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    navigation: NavigationConfig = field(default_factory=NavigationConfig)
    daps: DapsConfig = field(default_factory=DapsConfig)

    def validate(self) -> None:
        try:
            self.world.validate()
        except ValidationError as e:
            raise ConfigError(f"world.{e.field}: {e}") from None
        self.sim.validate()
        self.service.validate()
        self.navigation.validate()
        self.daps.validate()


class _Section:
    """Dict wrapper that tracks its key path and rejects unknown keys."""

    def __init__(self, obj: dict, path: str):
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: expected an object")
        self._obj = obj
        self._path = path
        self._seen: set = set()

    def _get(self, key: str, default):
        self._seen.add(key)
        return self._obj.get(key, default)

    def number(self, key: str, default: float) -> float:
        v = self._get(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._path}.{key}: expected a number")
        return float(v)

    def integer(self, key: str, default: int) -> int:
        v = self._get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._path}.{key}: expected an integer")
        return v

    def text(self, key: str, default: str) -> str:
        v = self._get(key, default)
        if not isinstance(v, str):
            raise ConfigError(f"{self._path}.{key}: expected a string")
        return v

    def section(self, key: str) -> Optional["_Section"]:
        v = self._get(key, None)
        if v is None:
            return None
        return _Section(v, f"{self._path}.{key}")

    def raw(self, key: str, default):
        return self._get(key, default)

    def reject_unknown(self) -> None:
        for key in self._obj:
            if key not in self._seen:
                raise ConfigError(f"{self._path}.{key}: unknown key")


def _parse_event(obj, path: str) -> FieldEvent:
    sec = _Section(obj, path)
    center_raw = sec.raw("center", None)
    center = None
    if center_raw is not None:
        if (
            not isinstance(center_raw, list)
            or len(center_raw) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in center_raw)
        ):
            raise ConfigError(f"{path}.center: expected [x, y]")
        center = (float(center_raw[0]), float(center_raw[1]))
    event = FieldEvent(
        t_start=sec.number("t_start", 0.0),
        t_end=sec.number("t_end", float("inf")),
        delta=sec.number("delta", 0.0),
        center=center,
        radius=sec.number("radius", 0.0),
    )
    sec.reject_unknown()
    if event.t_end < event.t_start:
        raise ConfigError(f"{path}.t_end: must be >= t_start")
    return event


def _parse_grid(obj, path: str) -> FieldGrid:
    sec = _Section(obj, path)
    values_raw = sec.raw("values", None)
    if not isinstance(values_raw, list) or not values_raw:
        raise ConfigError(f"{path}.values: expected a nonempty list of rows")
    rows = []
    for j, row in enumerate(values_raw):
        if not isinstance(row, list) or not row:
            raise ConfigError(f"{path}.values[{j}]: expected a nonempty row")
        for v in row:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}.values[{j}]: expected numbers")
        rows.append(tuple(float(v) for v in row))
    grid = FieldGrid(
        x0=sec.number("x0", 0.0),
        y0=sec.number("y0", 0.0),
        cell_size=sec.number("cell_size", 1.0),
        values=tuple(rows),
    )
    sec.reject_unknown()
    if grid.cell_size <= 0:
        raise ConfigError(f"{path}.cell_size: must be > 0")
    return grid


def _parse_world(sec: Optional[_Section]) -> WorldConfig:
    if sec is None:
        return WorldConfig()
    sensors_raw = sec.raw("sensors", None)
    fields: Dict[str, SensorField] = {}
    sigma: Dict[str, float] = {}
    if sensors_raw is None:
        fields = {sid: SensorField() for sid in DEFAULT_SENSORS}
        sigma = {sid: 2.0 for sid in DEFAULT_SENSORS}
    else:
        if not isinstance(sensors_raw, dict) or not sensors_raw:
            raise ConfigError("world.sensors: expected a nonempty object")
        for sid, s_obj in sensors_raw.items():
            s_sec = _Section(s_obj, f"world.sensors.{sid}")
            base = s_sec.number("base", 512.0)
            sigma[sid] = s_sec.number("noise_sigma", 2.0)
            grid_obj = s_sec.raw("grid", None)
            grid = _parse_grid(grid_obj, f"world.sensors.{sid}.grid") if grid_obj is not None else None
            events_raw = s_sec.raw("events", [])
            if not isinstance(events_raw, list):
                raise ConfigError(f"world.sensors.{sid}.events: expected a list")
            events = tuple(
                _parse_event(e, f"world.sensors.{sid}.events[{i}]")
                for i, e in enumerate(events_raw)
            )
            s_sec.reject_unknown()
            fields[sid] = SensorField(base=base, grid=grid, events=events)
    cfg = WorldConfig(
        wheel_radius=sec.number("wheel_radius", 0.05),
        track_width=sec.number("track_width", 0.30),
        wheel_speed=sec.number("wheel_speed", 0.20),
        ticks_per_revolution=sec.integer("ticks_per_revolution", 8),
        sensor_fields=fields,
        noise_sigma=sigma,
        seed=sec.integer("seed", 0),
    )
    sec.reject_unknown()
    return cfg


def _parse_sim(sec: Optional[_Section]) -> SimConfig:
    if sec is None:
        return SimConfig()
    cfg = SimConfig(
        tick_ms=sec.integer("tick_ms", 10),
        poll_hz=sec.number("poll_hz", 20.0),
        settle_us=sec.integer("settle_us", 5000),
        phase_settle_us=sec.integer("phase_settle_us", 100),
    )
    sec.reject_unknown()
    return cfg


def _parse_service(sec: Optional[_Section]) -> ServiceConfig:
    if sec is None:
        return ServiceConfig()
    tokens_raw = sec.raw("tokens", {})
    if not isinstance(tokens_raw, dict):
        raise ConfigError("service.tokens: expected an object of token -> role")
    tokens = {}
    for token, role in tokens_raw.items():
        if not isinstance(role, str):
            raise ConfigError(f"service.tokens.{token}: role must be a string")
        tokens[token] = role
    cfg = ServiceConfig(
        listen=sec.text("listen", "127.0.0.1:8000"),
        admin_token=sec.text("admin_token", DEFAULT_ADMIN_TOKEN),
        tokens=tokens,
        queue_bound=sec.integer("queue_bound", 32),
    )
    sec.reject_unknown()
    return cfg


def _parse_navigation(sec: Optional[_Section]) -> NavigationConfig:
    if sec is None:
        return NavigationConfig()
    cfg = NavigationConfig(
        split_threshold_deg=sec.number("split_threshold_deg", 5.0),
        turn_ratio=sec.number("turn_ratio", 0.25),
        idle_close_polls=sec.integer("idle_close_polls", 5),
    )
    sec.reject_unknown()
    return cfg


def _parse_daps(sec: Optional[_Section]) -> DapsConfig:
    if sec is None:
        return DapsConfig()
    autoload_raw = sec.raw("autoload", [])
    if not isinstance(autoload_raw, list) or not all(
        isinstance(p, str) for p in autoload_raw
    ):
        raise ConfigError("daps.autoload: expected a list of manifest paths")
    cfg = DapsConfig(
        retention_s=sec.number("retention_s", 86_400.0),
        autoload=tuple(autoload_raw),
    )
    sec.reject_unknown()
    return cfg


def parse_config(text: str) -> AppConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    root = _Section(obj, "config")
    cfg = AppConfig(
        world=_parse_world(root.section("world")),
        sim=_parse_sim(root.section("sim")),
        service=_parse_service(root.section("service")),
        navigation=_parse_navigation(root.section("navigation")),
        daps=_parse_daps(root.section("daps")),
    )
    root.reject_unknown()
    cfg.validate()
    return cfg


def load_config(path: Optional[Path]) -> AppConfig:
    if path is None:
        cfg = AppConfig()
        cfg.validate()
        return cfg
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from None
    try:
        cfg = parse_config(text)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None
    # manifest paths are written relative to the config file, not the cwd
    base = Path(path).resolve().parent
    autoload = tuple(
        p if Path(p).is_absolute() else str(base / p) for p in cfg.daps.autoload
    )
    if autoload != cfg.daps.autoload:
        cfg = replace(cfg, daps=replace(cfg.daps, autoload=autoload))
    return cfg


def apply_env(cfg: AppConfig, environ: Mapping[str, str]) -> AppConfig:
    """Fold LNR_* overrides into a parsed config."""
    service = cfg.service
    world = cfg.world
    sim = cfg.sim
    if ENV_PREFIX + "LISTEN" in environ:
        service = replace(service, listen=environ[ENV_PREFIX + "LISTEN"])
    if ENV_PREFIX + "ADMIN_TOKEN" in environ:
        service = replace(service, admin_token=environ[ENV_PREFIX + "ADMIN_TOKEN"])
    if ENV_PREFIX + "SEED" in environ:
        try:
            world = replace(world, seed=int(environ[ENV_PREFIX + "SEED"]))
        except ValueError:
            raise ConfigError("LNR_SEED: expected an integer") from None
    if ENV_PREFIX + "TICK_MS" in environ:
        try:
            sim = replace(sim, tick_ms=int(environ[ENV_PREFIX + "TICK_MS"]))
        except ValueError:
            raise ConfigError("LNR_TICK_MS: expected an integer") from None
    out = AppConfig(
        world=world, sim=sim, service=service, navigation=cfg.navigation, daps=cfg.daps
    )
    out.validate()
    return out
