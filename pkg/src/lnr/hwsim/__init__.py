"""Deterministic hardware emulation: port registers, robot world, device firmware."""

from .registers import PortRegisters
from .world import (
    DEFAULT_SENSORS,
    FieldEvent,
    FieldGrid,
    MotorState,
    RobotState,
    SensorField,
    World,
    WorldConfig,
    compass_byte,
)
from .device import Microcontroller
from .sim import HardwareSim

__all__ = [
    "PortRegisters",
    "MotorState",
    "RobotState",
    "WorldConfig",
    "SensorField",
    "FieldGrid",
    "FieldEvent",
    "World",
    "compass_byte",
    "DEFAULT_SENSORS",
    "Microcontroller",
    "HardwareSim",
]
