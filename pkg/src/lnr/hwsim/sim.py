"""Fixed-step simulation clock tying world, registers and device together."""

from __future__ import annotations

from .device import Microcontroller
from .registers import PortRegisters
from .world import World, WorldConfig

DEFAULT_TICK_US = 10_000


class HardwareSim:
    """Integer-microsecond clock around the world and the emulated device.

    Physics advances in whole ticks; the device is polled before every
    physics step and once more at the end of every pump, so a command
    written mid-tick is consumed after the host's settle wait without the
    caller caring how the wait aligns with tick boundaries.  Polls with no
    armed command are no-ops, which keeps pump granularity out of the
    trajectory: only the write times matter.
    """

    def __init__(self, cfg: WorldConfig, tick_us: int = DEFAULT_TICK_US):
        if tick_us <= 0:
            raise ValueError("tick_us must be > 0")
        self.world = World(cfg)
        self.regs = PortRegisters()
        self.mcu = Microcontroller(self.regs, self.world)
        self.tick_us = tick_us
        self.t_us = 0
        self._ticks_done = 0

    @property
    def t_s(self) -> float:
        return self.t_us / 1e6

    def pump_us(self, duration_us: int) -> None:
        if duration_us < 0:
            raise ValueError("duration_us must be >= 0")
        target = self.t_us + duration_us
        tick = self.tick_us
        while (self._ticks_done + 1) * tick <= target:
            self.mcu.poll()
            self.world.step(tick / 1e6)
            self._ticks_done += 1
        self.t_us = target
        self.mcu.poll()

    def pump_to_us(self, t_us: int) -> None:
        if t_us < self.t_us:
            raise ValueError(f"clock runs forward: at {self.t_us}, asked {t_us}")
        self.pump_us(t_us - self.t_us)
