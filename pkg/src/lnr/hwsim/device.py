"""Emulated microcontroller firmware behind the port registers."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

from ..protocol import (
    CMD_BACKWARD,
    CMD_FORWARD,
    CMD_LATCH_COMPASS,
    CMD_LATCH_LEFT_TICKS,
    CMD_LATCH_RIGHT_TICKS,
    CMD_STOP,
    CMD_TURN_LEFT,
    CMD_TURN_RIGHT,
    CTRL_NIBBLE_SELECT,
)
from .registers import PortRegisters
from .world import MotorState, World, compass_byte

log = logging.getLogger(__name__)

_MOTOR_TABLE = {
    CMD_STOP: (MotorState.STOPPED, MotorState.STOPPED),
    CMD_FORWARD: (MotorState.FORWARD, MotorState.FORWARD),
    CMD_BACKWARD: (MotorState.BACKWARD, MotorState.BACKWARD),
    # Turning left: stop the left motor, run the right one.
    CMD_TURN_LEFT: (MotorState.STOPPED, MotorState.FORWARD),
    CMD_TURN_RIGHT: (MotorState.FORWARD, MotorState.STOPPED),
}


@dataclass(frozen=True)
class Diagnostic:
    sim_time: float
    command: int

    def __str__(self) -> str:
        return f"t={self.sim_time:.3f}s unknown command 0x{self.command:02X}"


class Microcontroller:
    """Polls the command lane and answers nibble reads.

    The status lines are driven combinationally from the reply latch: the
    control register's select bit picks which half of the latched byte sits
    on bits 7..4.  Low nibble with the bit set, high nibble with it clear,
    matching the order the host assembles them in.
    """

    def __init__(self, regs: PortRegisters, world: World):
        self._regs = regs
        self._world = world
        self._reply = 0x00
        self.diagnostics: List[Diagnostic] = []
        regs.attach_status_driver(self._drive_status)

    def _drive_status(self, control: int) -> int:
        if control & CTRL_NIBBLE_SELECT:
            return (self._reply & 0x0F) << 4
        return self._reply & 0xF0

    def poll(self) -> None:
        """Consume at most one armed command; safe to call at any cadence."""
        cmd = self._regs.take_pending_command()
        if cmd is None:
            return
        if cmd in _MOTOR_TABLE:
            left, right = _MOTOR_TABLE[cmd]
            self._world.set_motors(left, right)
        elif cmd == CMD_LATCH_COMPASS:
            self._reply = compass_byte(self._world.state.heading)
        elif cmd == CMD_LATCH_LEFT_TICKS:
            self._reply = self._world.state.left_ticks & 0xFF
        elif cmd == CMD_LATCH_RIGHT_TICKS:
            self._reply = self._world.state.right_ticks & 0xFF
        else:
            diag = Diagnostic(self._world.state.sim_time, cmd)
            self.diagnostics.append(diag)
            log.warning("ignoring %s", diag)
