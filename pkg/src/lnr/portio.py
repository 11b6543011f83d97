"""Host-side port driver: command writes, strobe sequencing, nibble assembly.

Mirrors the register access pattern of the original host program byte for
byte: a command byte on the data lane, a settle wait, then for reads two
strobe-selected status nibbles reassembled and corrected with XOR 0x88
(the inverted line sits at bit 7 of each raw nibble read, i.e. bits 7 and
3 of the assembled byte).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple

from .errors import TransportError
from .protocol import (
    CMD_BACKWARD,
    CMD_FORWARD,
    CMD_LATCH_COMPASS,
    CMD_LATCH_LEFT_TICKS,
    CMD_LATCH_RIGHT_TICKS,
    CMD_STOP,
    CMD_TURN_LEFT,
    CMD_TURN_RIGHT,
    CTRL_NIBBLE_SELECT,
    LATCH_COMMANDS,
    NIBBLE_DECODE_XOR,
    SETTLE_AFTER_SELECT_US,
    SETTLE_BETWEEN_PHASES_US,
)
from .hwsim.registers import PortRegisters

log = logging.getLogger(__name__)


class DriveCommand(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"


COMMAND_BYTES = {
    DriveCommand.STOP: CMD_STOP,
    DriveCommand.FORWARD: CMD_FORWARD,
    DriveCommand.BACKWARD: CMD_BACKWARD,
    DriveCommand.TURN_LEFT: CMD_TURN_LEFT,
    DriveCommand.TURN_RIGHT: CMD_TURN_RIGHT,
}


@dataclass(frozen=True)
class CompassReading:
    raw: int
    degrees: float


def compass_degrees(raw: int) -> float:
    return raw * 360.0 / 256.0


class TraceLog:
    """Line-oriented record of every register transaction.

    `<t_us> <lane> <R|W> 0xNN` for port traffic; the acquisition loop also
    appends `<t_us> sensor <id> <reading>` lines so a replay under a
    different seed can show divergence confined to sensor values.
    """

    def __init__(self) -> None:
        self.lines: List[str] = []

    def record_io(self, t_us: int, lane: str, direction: str, value: int) -> None:
        self.lines.append(f"{t_us:012d} {lane} {direction} 0x{value:02X}")

    def record_sensor(self, t_us: int, sensor_id: str, value: int) -> None:
        self.lines.append(f"{t_us:012d} sensor {sensor_id} {value}")

    def write(self, path: Path) -> None:
        path.write_text("".join(line + "\n" for line in self.lines))


class ParallelPortDriver:
    """Single-task driver over the three-register bus.

    The driver owns its timing through two callbacks: `pump_us` advances
    the simulation clock (the settle waits), `now_us` stamps the trace.
    Wheel counters arrive as wrapping low bytes; the driver accumulates
    deltas modulo 256 into wide counters, assuming both start at zero
    (the device's counters reset at boot, and the driver attaches then).
    """

    def __init__(
        self,
        regs: PortRegisters,
        pump_us: Callable[[int], None],
        now_us: Callable[[], int],
        settle_us: int = SETTLE_AFTER_SELECT_US,
        phase_settle_us: int = SETTLE_BETWEEN_PHASES_US,
        trace: Optional[TraceLog] = None,
    ):
        self._regs = regs
        self._pump = pump_us
        self._now = now_us
        self._settle_us = settle_us
        self._phase_settle_us = phase_settle_us
        self.trace = trace
        self._attached = True
        self._last_left = 0
        self._last_right = 0
        self.left_total = 0
        self.right_total = 0

    @classmethod
    def for_sim(cls, sim, trace: Optional[TraceLog] = None, **kwargs) -> "ParallelPortDriver":
        return cls(sim.regs, sim.pump_us, lambda: sim.t_us, trace=trace, **kwargs)

    def detach(self) -> None:
        self._attached = False

    def _check_attached(self) -> None:
        if not self._attached:
            raise TransportError("port bus is detached")

    def _write_data(self, value: int) -> None:
        if self.trace is not None:
            self.trace.record_io(self._now(), "data", "W", value & 0xFF)
        self._regs.write_data(value)

    def _write_control(self, value: int) -> None:
        if self.trace is not None:
            self.trace.record_io(self._now(), "control", "W", value & 0xFF)
        self._regs.write_control(value)

    def _read_status(self) -> int:
        value = self._regs.read_status()
        if self.trace is not None:
            self.trace.record_io(self._now(), "status", "R", value)
        return value

    def send_command(self, cmd: DriveCommand) -> None:
        """Motion commands are fire-and-forget; the settle is the handshake."""
        self._check_attached()
        self._write_data(COMMAND_BYTES[cmd])
        self._pump(self._settle_us)

    def read_nibble_byte(self, select_command: int) -> int:
        self._check_attached()
        if select_command not in LATCH_COMMANDS:
            raise ValueError(f"not a latch select: 0x{select_command:02X}")
        self._write_data(select_command)
        self._pump(self._settle_us)

        ctrl = self._regs.read_control()
        self._write_control(ctrl | CTRL_NIBBLE_SELECT)
        self._pump(self._phase_settle_us)
        value = (self._read_status() & 0xF0) >> 4

        self._write_control(ctrl & ~CTRL_NIBBLE_SELECT)
        self._pump(self._phase_settle_us)
        value |= self._read_status() & 0xF0

        return value ^ NIBBLE_DECODE_XOR

    def read_compass(self) -> CompassReading:
        raw = self.read_nibble_byte(CMD_LATCH_COMPASS)
        return CompassReading(raw=raw, degrees=compass_degrees(raw))

    def read_wheel_ticks(self) -> Tuple[int, int]:
        left = self.read_nibble_byte(CMD_LATCH_LEFT_TICKS)
        right = self.read_nibble_byte(CMD_LATCH_RIGHT_TICKS)
        left_delta = (left - self._last_left) % 256
        right_delta = (right - self._last_right) % 256
        self._last_left = left
        self._last_right = right
        self.left_total += left_delta
        self.right_total += right_delta
        return left_delta, right_delta
