"""Software signal conditioning: calibration and per-sensor filter chains.

All conditioning happens on the main-unit side in software, so a chain is
re-tunable at runtime without touching acquisition.  Windowed filters use
causal warm-up: with fewer samples than the window they emit the statistic
of what has arrived, never blocking the warning system behind a fill.
"""

from __future__ import annotations

import math
import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import UnknownSensorError, ValidationError


@dataclass(frozen=True)
class Calibration:
    """Affine counts-to-engineering-units map."""

    gain: float = 1.0
    offset: float = 0.0

    def validate(self, where: str = "calibration") -> None:
        if not math.isfinite(self.gain) or self.gain == 0:
            raise ValidationError(f"{where}.gain", "must be finite and nonzero")
        if not math.isfinite(self.offset):
            raise ValidationError(f"{where}.offset", "must be finite")

    def apply(self, value: float) -> float:
        return value * self.gain + self.offset

    def to_dict(self) -> Dict[str, float]:
        return {"gain": self.gain, "offset": self.offset}


class MovingAverage:
    def __init__(self, window: int):
        self._buf: deque = deque(maxlen=window)

    def push(self, value: float) -> float:
        self._buf.append(value)
        return statistics.fmean(self._buf)

    def reset(self) -> None:
        self._buf.clear()


class Median:
    def __init__(self, window: int):
        self._buf: deque = deque(maxlen=window)

    def push(self, value: float) -> float:
        self._buf.append(value)
        return float(statistics.median(self._buf))

    def reset(self) -> None:
        self._buf.clear()


class ExponentialSmoothing:
    def __init__(self, alpha: float):
        self._alpha = alpha
        self._value: Optional[float] = None

    def push(self, value: float) -> float:
        if self._value is None:
            self._value = float(value)
        else:
            self._value = self._alpha * value + (1.0 - self._alpha) * self._value
        return self._value

    def reset(self) -> None:
        self._value = None


KIND_MOVING_AVERAGE = "moving_average"
KIND_MEDIAN = "median"
KIND_EXPONENTIAL = "exponential_smoothing"

FILTER_KINDS = (KIND_MOVING_AVERAGE, KIND_MEDIAN, KIND_EXPONENTIAL)


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    window: Optional[int] = None
    alpha: Optional[float] = None

    def validate(self, where: str = "filter") -> None:
        if self.kind not in FILTER_KINDS:
            raise ValidationError(
                f"{where}.kind", f"unknown kind {self.kind!r}, expected one of {FILTER_KINDS}"
            )
        if self.kind in (KIND_MOVING_AVERAGE, KIND_MEDIAN):
            if not isinstance(self.window, int) or isinstance(self.window, bool):
                raise ValidationError(f"{where}.window", "must be an integer")
            if self.window < 1:
                raise ValidationError(f"{where}.window", "must be >= 1")
        else:
            if not isinstance(self.alpha, (int, float)) or isinstance(self.alpha, bool):
                raise ValidationError(f"{where}.alpha", "must be a number")
            if not (0.0 < float(self.alpha) <= 1.0):
                raise ValidationError(f"{where}.alpha", "must be in (0, 1]")

    def build(self):
        self.validate()
        if self.kind == KIND_MOVING_AVERAGE:
            return MovingAverage(self.window)  # type: ignore[arg-type]
        if self.kind == KIND_MEDIAN:
            return Median(self.window)  # type: ignore[arg-type]
        return ExponentialSmoothing(float(self.alpha))  # type: ignore[arg-type]

    @classmethod
    def from_dict(cls, obj, where: str = "filter") -> "FilterSpec":
        if not isinstance(obj, dict):
            raise ValidationError(where, "must be an object")
        kind = obj.get("kind")
        if not isinstance(kind, str):
            raise ValidationError(f"{where}.kind", "must be a string")
        known = {"kind", "window", "alpha"}
        for key in obj:
            if key not in known:
                raise ValidationError(f"{where}.{key}", "unknown field")
        spec = cls(kind=kind, window=obj.get("window"), alpha=obj.get("alpha"))
        spec.validate(where)
        return spec

    def to_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {"kind": self.kind}
        if self.window is not None:
            out["window"] = self.window
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out


def calibrate(value: float, cal: Calibration) -> float:
    return cal.apply(value)


def apply_filter_chain(values: Iterable[float], specs: Sequence[FilterSpec]) -> List[float]:
    """Run a stream through freshly built filters, left to right."""
    filters = [spec.build() for spec in specs]
    out = []
    for v in values:
        y = float(v)
        for f in filters:
            y = f.push(y)
        out.append(y)
    return out


@dataclass(frozen=True)
class DspAuditEntry:
    t: float
    sensor_id: str
    action: str
    detail: str


@dataclass
class _SensorChain:
    unit: str
    calibration: Calibration
    specs: List[FilterSpec]
    filters: List[object] = field(default_factory=list)

    def rebuild(self) -> None:
        self.filters = [spec.build() for spec in self.specs]

    def process(self, raw: float) -> float:
        y = self.calibration.apply(raw)
        for f in self.filters:
            y = f.push(y)  # type: ignore[attr-defined]
        return y


class DspEngine:
    """One independent filter-state instance per sensor."""

    def __init__(self) -> None:
        self._chains: Dict[str, _SensorChain] = {}
        self.audit: List[DspAuditEntry] = []

    def sensors(self) -> List[str]:
        return list(self._chains)

    def has_sensor(self, sensor_id: str) -> bool:
        return sensor_id in self._chains

    def configure(
        self,
        sensor_id: str,
        specs: Sequence[FilterSpec],
        calibration: Calibration,
        unit: str,
        t: float = 0.0,
        source: str = "config",
    ) -> None:
        """Create or replace a sensor's whole chain; filter state resets."""
        calibration.validate()
        for i, spec in enumerate(specs):
            spec.validate(f"filters[{i}]")
        chain = _SensorChain(unit=unit, calibration=calibration, specs=list(specs))
        chain.rebuild()
        self._chains[sensor_id] = chain
        self.audit.append(DspAuditEntry(t, sensor_id, "configure", source))

    def retune(
        self,
        sensor_id: str,
        specs: Sequence[FilterSpec],
        calibration: Calibration,
        t: float = 0.0,
    ) -> None:
        if sensor_id not in self._chains:
            raise UnknownSensorError(sensor_id)
        calibration.validate()
        for i, spec in enumerate(specs):
            spec.validate(f"filters[{i}]")
        chain = self._chains[sensor_id]
        chain.calibration = calibration
        chain.specs = list(specs)
        chain.rebuild()
        self.audit.append(
            DspAuditEntry(t, sensor_id, "retune", f"{len(specs)} filters")
        )

    def process(self, sensor_id: str, raw: float) -> float:
        try:
            chain = self._chains[sensor_id]
        except KeyError:
            raise UnknownSensorError(sensor_id) from None
        return chain.process(raw)

    def unit_of(self, sensor_id: str) -> str:
        try:
            return self._chains[sensor_id].unit
        except KeyError:
            raise UnknownSensorError(sensor_id) from None

    def describe(self, sensor_id: str) -> Dict[str, object]:
        try:
            chain = self._chains[sensor_id]
        except KeyError:
            raise UnknownSensorError(sensor_id) from None
        return {
            "unit": chain.unit,
            "calibration": chain.calibration.to_dict(),
            "filters": [spec.to_dict() for spec in chain.specs],
        }
