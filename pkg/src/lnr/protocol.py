"""Wire-level byte values shared by the host driver and the emulated device.

Command bytes ride on the data register; replies come back as two status
nibbles.  Low nibble first (strobe high), then high nibble (strobe low),
each in status bits 7..4, and the reassembled byte is XOR'd with 0x88 to
undo the hard-inverted line on bit 7 of each phase.
"""

CMD_STOP = 0x00
CMD_FORWARD = 0x01
CMD_BACKWARD = 0x02
CMD_TURN_LEFT = 0x03
CMD_TURN_RIGHT = 0x04

CMD_LATCH_COMPASS = 0x09
CMD_LATCH_LEFT_TICKS = 0x0A
CMD_LATCH_RIGHT_TICKS = 0x0B

MOTION_COMMANDS = (CMD_STOP, CMD_FORWARD, CMD_BACKWARD, CMD_TURN_LEFT, CMD_TURN_RIGHT)
LATCH_COMMANDS = (CMD_LATCH_COMPASS, CMD_LATCH_LEFT_TICKS, CMD_LATCH_RIGHT_TICKS)

# Control register bit 0 selects which nibble the device drives onto the
# status lines: 1 = low nibble, 0 = high nibble.
CTRL_NIBBLE_SELECT = 0x01

# Bit 7 of the status register reads back inverted (printer-port BUSY
# convention), hence the per-phase bit-3 flip after the shift: 0x88.
STATUS_INVERT_MASK = 0x80
NIBBLE_DECODE_XOR = 0x88

# Host-side pacing, microseconds.
SETTLE_AFTER_SELECT_US = 5000
SETTLE_BETWEEN_PHASES_US = 100
