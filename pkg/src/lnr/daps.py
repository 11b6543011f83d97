"""Installable data-processing packages, warnings, and sample storage.

A package is a declarative manifest, not executable code: it binds sensors
to calibrations and filter chains and declares warning rules.  Installing
a newer version of a same-name package supersedes it atomically at a frame
boundary (the runtime holds its frame lock around the swap).
"""

from __future__ import annotations

import bisect
import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .dsp import Calibration, FilterSpec
from .errors import (
    ManifestError,
    UnknownSensorError,
    ValidationError,
    VersionConflictError,
)

_NAME_RE = re.compile(r"^[a-z][a-z0-9_-]*$")
_VERSION_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")

STORE_FORMAT = "lnr-timeseries"
STORE_FORMAT_VERSION = 1
DEFAULT_RETENTION_S = 86_400.0


class Severity(enum.Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


def parse_version(text: str) -> Tuple[int, int, int]:
    m = _VERSION_RE.match(text)
    if not m:
        raise ManifestError(f"version: expected dotted triple, got {text!r}")
    return (int(m.group(1)), int(m.group(2)), int(m.group(3)))


@dataclass(frozen=True)
class WarningRule:
    sensor_id: str
    raise_threshold: float
    clear_threshold: float
    min_duration: float
    severity: Severity

    def validate(self, where: str = "warning") -> None:
        if not (self.clear_threshold < self.raise_threshold):
            raise ValidationError(
                f"{where}.clear_threshold",
                "hysteresis band is empty: clear_threshold must be < raise_threshold",
            )
        if self.min_duration < 0:
            raise ValidationError(f"{where}.min_duration", "must be >= 0")

    def to_dict(self) -> dict:
        return {
            "sensor_id": self.sensor_id,
            "raise_threshold": self.raise_threshold,
            "clear_threshold": self.clear_threshold,
            "min_duration": self.min_duration,
            "severity": self.severity.value,
        }


@dataclass(frozen=True)
class SensorBinding:
    sensor_id: str
    unit: str
    calibration: Calibration
    filters: Tuple[FilterSpec, ...]


@dataclass(frozen=True)
class DapsManifest:
    name: str
    version: Tuple[int, int, int]
    description: str
    sensors: Tuple[SensorBinding, ...]
    warnings: Tuple[WarningRule, ...]

    @property
    def version_str(self) -> str:
        return ".".join(str(v) for v in self.version)

    def sensor_ids(self) -> List[str]:
        return [s.sensor_id for s in self.sensors]

    def summary(self) -> dict:
        return {
            "name": self.name,
            "version": self.version_str,
            "description": self.description,
            "sensors": self.sensor_ids(),
            "warning_rules": len(self.warnings),
        }


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise ManifestError(f"{where}.{key}: missing required field")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ManifestError(f"{where}.{key}: expected a number")
        return float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ManifestError(f"{where}.{key}: expected {kind.__name__}")
    return value


def _parse_sensor(obj, where: str) -> SensorBinding:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: expected an object")
    sensor_id = _require(obj, "sensor_id", str, where)
    unit = _require(obj, "unit", str, where)
    cal_obj = obj.get("calibration", {"gain": 1.0, "offset": 0.0})
    if not isinstance(cal_obj, dict):
        raise ManifestError(f"{where}.calibration: expected an object")
    try:
        cal = Calibration(
            gain=float(cal_obj.get("gain", 1.0)), offset=float(cal_obj.get("offset", 0.0))
        )
        cal.validate(f"{where}.calibration")
    except (TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise ManifestError(str(e)) from None
        raise ManifestError(f"{where}.calibration: expected numeric gain/offset") from None
    filters_obj = obj.get("filters", [])
    if not isinstance(filters_obj, list):
        raise ManifestError(f"{where}.filters: expected a list")
    specs = []
    for i, f_obj in enumerate(filters_obj):
        try:
            specs.append(FilterSpec.from_dict(f_obj, f"{where}.filters[{i}]"))
        except ValidationError as e:
            raise ManifestError(str(e)) from None
    return SensorBinding(sensor_id=sensor_id, unit=unit, calibration=cal, filters=tuple(specs))


def _parse_warning(obj, where: str) -> WarningRule:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: expected an object")
    severity_text = _require(obj, "severity", str, where)
    try:
        severity = Severity(severity_text)
    except ValueError:
        raise ManifestError(
            f"{where}.severity: unknown severity {severity_text!r}"
        ) from None
    rule = WarningRule(
        sensor_id=_require(obj, "sensor_id", str, where),
        raise_threshold=_require(obj, "raise_threshold", float, where),
        clear_threshold=_require(obj, "clear_threshold", float, where),
        min_duration=float(obj.get("min_duration", 0.0)),
        severity=severity,
    )
    try:
        rule.validate(where)
    except ValidationError as e:
        raise ManifestError(str(e)) from None
    return rule


def parse_manifest(text: str) -> DapsManifest:
    """Parse and shape-check a manifest document (JSON)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ManifestError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise ManifestError("manifest: expected a top-level object")
    name = _require(obj, "name", str, "manifest")
    if not _NAME_RE.match(name):
        raise ManifestError(f"manifest.name: invalid identifier {name!r}")
    version = parse_version(_require(obj, "version", str, "manifest"))
    description = obj.get("description", "")
    if not isinstance(description, str):
        raise ManifestError("manifest.description: expected a string")
    sensors_obj = _require(obj, "sensors", list, "manifest")
    if not sensors_obj:
        raise ManifestError("manifest.sensors: at least one sensor binding required")
    sensors = tuple(
        _parse_sensor(s, f"manifest.sensors[{i}]") for i, s in enumerate(sensors_obj)
    )
    seen = set()
    for i, s in enumerate(sensors):
        if s.sensor_id in seen:
            raise ManifestError(f"manifest.sensors[{i}].sensor_id: duplicate binding")
        seen.add(s.sensor_id)
    warnings_obj = obj.get("warnings", [])
    if not isinstance(warnings_obj, list):
        raise ManifestError("manifest.warnings: expected a list")
    warnings = tuple(
        _parse_warning(w, f"manifest.warnings[{i}]") for i, w in enumerate(warnings_obj)
    )
    return DapsManifest(
        name=name,
        version=version,
        description=description,
        sensors=sensors,
        warnings=warnings,
    )


def validate_against_profile(manifest: DapsManifest, profile_sensors: Sequence[str]) -> None:
    known = set(profile_sensors)
    for i, binding in enumerate(manifest.sensors):
        if binding.sensor_id not in known:
            raise ValidationError(
                f"sensors[{i}].sensor_id", f"unknown sensor {binding.sensor_id!r}"
            )
    for i, rule in enumerate(manifest.warnings):
        if rule.sensor_id not in known:
            raise ValidationError(
                f"warnings[{i}].sensor_id", f"unknown sensor {rule.sensor_id!r}"
            )


class DapsRegistry:
    """Installed-package bookkeeping with version ordering."""

    def __init__(self) -> None:
        self._packages: Dict[str, DapsManifest] = {}

    def install(self, manifest: DapsManifest) -> Optional[DapsManifest]:
        """Record the package; returns the manifest it superseded, if any."""
        existing = self._packages.get(manifest.name)
        if existing is not None and manifest.version <= existing.version:
            raise VersionConflictError(
                f"{manifest.name} {manifest.version_str} does not supersede "
                f"installed {existing.version_str}"
            )
        self._packages[manifest.name] = manifest
        return existing

    def packages(self) -> List[DapsManifest]:
        return list(self._packages.values())

    def get(self, name: str) -> Optional[DapsManifest]:
        return self._packages.get(name)


class _RuleState(enum.Enum):
    INACTIVE = "inactive"
    PENDING = "pending"
    RAISED = "raised"


@dataclass
class WarningEvent:
    event_id: int
    sensor_id: str
    severity: Severity
    raised_at: float
    peak_value: float
    cleared_at: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "sensor_id": self.sensor_id,
            "severity": self.severity.value,
            "raised_at": self.raised_at,
            "cleared_at": self.cleared_at,
            "peak_value": self.peak_value,
        }


@dataclass
class _TrackedRule:
    rule: WarningRule
    state: _RuleState = _RuleState.INACTIVE
    pending_since: float = 0.0
    peak: float = 0.0
    event: Optional[WarningEvent] = None


class WarningEngine:
    """Hysteresis automaton bank, one tracked state per installed rule.

    A rule raises when its value has been at or above raise_threshold
    continuously for at least min_duration, clears at or below
    clear_threshold, and holds state in between.  Transitions are emitted
    exactly once each.
    """

    def __init__(self) -> None:
        self._by_package: Dict[str, List[_TrackedRule]] = {}
        self.history: List[WarningEvent] = []
        self._next_id = 1

    def set_rules(self, package: str, rules: Sequence[WarningRule]) -> None:
        # Replacing a package's rules resets their automata; in-flight
        # raised events stay in history but no longer clear.
        self._by_package[package] = [_TrackedRule(rule=r) for r in rules]

    def remove_package(self, package: str) -> None:
        self._by_package.pop(package, None)

    def rules(self) -> List[WarningRule]:
        return [tr.rule for bank in self._by_package.values() for tr in bank]

    def evaluate(self, t: float, values: Mapping[str, float]) -> List[WarningEvent]:
        """Feed one frame of engineering values; returns transition events.

        A raise returns the event with cleared_at None; the clear returns
        the same event object with cleared_at set.
        """
        transitions: List[WarningEvent] = []
        for bank in self._by_package.values():
            for tracked in bank:
                value = values.get(tracked.rule.sensor_id)
                if value is None:
                    continue
                transitions.extend(self._step(tracked, t, value))
        return transitions

    def _step(self, tracked: _TrackedRule, t: float, value: float) -> List[WarningEvent]:
        rule = tracked.rule
        out: List[WarningEvent] = []
        if tracked.state is _RuleState.INACTIVE:
            if value >= rule.raise_threshold:
                tracked.state = _RuleState.PENDING
                tracked.pending_since = t
                tracked.peak = value
                # min_duration 0 raises on the same sample.
                out.extend(self._maybe_raise(tracked, t))
        elif tracked.state is _RuleState.PENDING:
            if value >= rule.raise_threshold:
                tracked.peak = max(tracked.peak, value)
                out.extend(self._maybe_raise(tracked, t))
            else:
                # Continuity broken before the duration gate opened.
                tracked.state = _RuleState.INACTIVE
        else:  # RAISED
            assert tracked.event is not None
            tracked.peak = max(tracked.peak, value)
            tracked.event.peak_value = tracked.peak
            if value <= rule.clear_threshold:
                tracked.event.cleared_at = t
                out.append(tracked.event)
                tracked.state = _RuleState.INACTIVE
                tracked.event = None
        return out

    def _maybe_raise(self, tracked: _TrackedRule, t: float) -> List[WarningEvent]:
        if t - tracked.pending_since < tracked.rule.min_duration:
            return []
        event = WarningEvent(
            event_id=self._next_id,
            sensor_id=tracked.rule.sensor_id,
            severity=tracked.rule.severity,
            raised_at=t,
            peak_value=tracked.peak,
        )
        self._next_id += 1
        tracked.state = _RuleState.RAISED
        tracked.event = event
        self.history.append(event)
        return [event]

    def active(self) -> List[WarningEvent]:
        return [
            tracked.event
            for bank in self._by_package.values()
            for tracked in bank
            if tracked.state is _RuleState.RAISED and tracked.event is not None
        ]


@dataclass
class _Series:
    times: List[float] = field(default_factory=list)
    raw: List[int] = field(default_factory=list)
    filtered: List[float] = field(default_factory=list)


class TimeSeriesStore:
    """Append-only per-sensor (t, raw, filtered) with a retention horizon."""

    def __init__(self, sensor_ids: Sequence[str], retention_s: float = DEFAULT_RETENTION_S):
        if retention_s <= 0:
            raise ValueError("retention_s must be > 0")
        self.retention_s = retention_s
        self._series: Dict[str, _Series] = {sid: _Series() for sid in sensor_ids}

    def sensor_ids(self) -> List[str]:
        return list(self._series)

    def append(self, sensor_id: str, t: float, raw: int, filtered: float) -> None:
        try:
            series = self._series[sensor_id]
        except KeyError:
            raise UnknownSensorError(sensor_id) from None
        if series.times and t < series.times[-1]:
            raise ValueError(f"samples must be time-ordered, got {t} after {series.times[-1]}")
        series.times.append(t)
        series.raw.append(raw)
        series.filtered.append(filtered)
        horizon = t - self.retention_s
        if series.times[0] < horizon:
            cut = bisect.bisect_left(series.times, horizon)
            del series.times[:cut]
            del series.raw[:cut]
            del series.filtered[:cut]

    def query(
        self, sensor_id: str, t1: float, t2: float, stride: int = 1
    ) -> List[dict]:
        """Samples with t1 <= t <= t2; stride k buckets k samples together,
        reporting the first sample of each bucket plus the bucket's
        filtered min/max envelope."""
        if t1 > t2:
            raise ValueError("t1 must be <= t2")
        if stride < 1:
            raise ValueError("stride must be >= 1")
        try:
            series = self._series[sensor_id]
        except KeyError:
            raise UnknownSensorError(sensor_id) from None
        lo = bisect.bisect_left(series.times, t1)
        hi = bisect.bisect_right(series.times, t2)
        out = []
        for start in range(lo, hi, stride):
            end = min(start + stride, hi)
            window = series.filtered[start:end]
            out.append(
                {
                    "t": series.times[start],
                    "raw": series.raw[start],
                    "filtered": series.filtered[start],
                    "min": min(window),
                    "max": max(window),
                }
            )
        return out

    def save(self, path: Path) -> None:
        header = {
            "format": STORE_FORMAT,
            "version": STORE_FORMAT_VERSION,
            "retention_s": self.retention_s,
            "sensors": list(self._series),
        }
        with open(path, "w") as fh:
            fh.write(json.dumps(header) + "\n")
            for sid, series in self._series.items():
                for t, raw, filtered in zip(series.times, series.raw, series.filtered):
                    fh.write(
                        json.dumps(
                            {"sensor": sid, "t": t, "raw": raw, "filtered": filtered}
                        )
                        + "\n"
                    )

    @classmethod
    def load(cls, path: Path) -> "TimeSeriesStore":
        with open(path) as fh:
            header_line = fh.readline()
            if not header_line:
                raise ValueError("empty store file")
            header = json.loads(header_line)
            if header.get("format") != STORE_FORMAT:
                raise ValueError(f"not a {STORE_FORMAT} file")
            if header.get("version") != STORE_FORMAT_VERSION:
                raise ValueError(f"unsupported store version {header.get('version')}")
            store = cls(header["sensors"], retention_s=header["retention_s"])
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                store.append(rec["sensor"], rec["t"], rec["raw"], rec["filtered"])
        return store
