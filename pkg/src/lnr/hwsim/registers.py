"""The three-register port shared by the host driver and the device."""

from __future__ import annotations

from typing import Callable, Optional

from ..protocol import STATUS_INVERT_MASK

StatusDriver = Callable[[int], int]


class PortRegisters:
    """Data, status and control registers with printer-port read semantics.

    The host owns `data` and `control`; the device drives the status lines
    through an attached combinational driver (select bit in, nibble out).
    Status reads invert bit 7, modelling the hard-wired inverted BUSY line,
    so the device never sees its own inversion.
    """

    def __init__(self) -> None:
        self._data = 0x00
        self._control = 0x00
        self._status_driver: Optional[StatusDriver] = None
        # Each data write arms exactly one device dispatch; polls between
        # writes are no-ops.  This is what makes replay byte-exact.
        self._command_pending = False

    def write_data(self, value: int) -> None:
        self._data = value & 0xFF
        self._command_pending = True

    def read_data(self) -> int:
        return self._data

    def write_control(self, value: int) -> None:
        self._control = value & 0xFF

    def read_control(self) -> int:
        return self._control

    def attach_status_driver(self, driver: StatusDriver) -> None:
        self._status_driver = driver

    def status_lines(self) -> int:
        """Electrical level of the status lines, before read inversion."""
        if self._status_driver is None:
            return 0x00
        return self._status_driver(self._control) & 0xFF

    def read_status(self) -> int:
        return (self.status_lines() ^ STATUS_INVERT_MASK) & 0xFF

    def take_pending_command(self) -> Optional[int]:
        """Consume the armed command byte, if any.  Device-side only."""
        if not self._command_pending:
            return None
        self._command_pending = False
        return self._data
