"""Shared exception types."""

from __future__ import annotations


class TransportError(RuntimeError):
    """Register bus is detached or otherwise unusable."""


class ValidationError(ValueError):
    """A field failed validation; `field` names the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class UnknownSensorError(KeyError):
    def __init__(self, sensor_id: str):
        super().__init__(sensor_id)
        self.sensor_id = sensor_id

    def __str__(self) -> str:
        return f"unknown sensor {self.sensor_id!r}"


class ManifestError(ValueError):
    """Manifest failed to parse or validate; message carries line/field."""


class VersionConflictError(ValueError):
    """Install attempted with a version not greater than the installed one."""


class QueueFullError(RuntimeError):
    """Drive command queue exceeded its bound."""


class ConfigError(ValueError):
    """Config file failed to parse or validate; message names the key."""


class ScenarioError(ValueError):
    """Scenario script failed to parse; message carries file:line."""


class TraceError(ValueError):
    """Transaction trace failed to parse; message carries the line number."""
