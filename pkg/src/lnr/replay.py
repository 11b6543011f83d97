"""Deterministic re-execution of a port/sensor trace.

Writes are applied to a fresh simulation, reads are compared.  The clock is
pumped to each line's timestamp before the line is applied; equal-time pumps
still run a device poll, matching the settle-wait pump that preceded every
traced read in the original run.  Polls with nothing pending have no side
effects, so the replayed poll schedule does not need to match the original
one, only the timestamps of the traffic itself.

Sensor lines re-sample the per-sensor noise streams.  Replaying under the
recorded seed reproduces every value; under a different seed the port
traffic still matches and divergence is confined to sensor lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import TraceError
from .hwsim import HardwareSim, WorldConfig

MAX_REPORTED = 50

_IO_RE = re.compile(r"^(\d{12}) (data|control|status) (R|W) 0x([0-9A-Fa-f]{2})$")
_SENSOR_RE = re.compile(r"^(\d{12}) sensor ([a-z][a-z0-9_-]*) (\d+)$")


@dataclass(frozen=True)
class TraceLine:
    lineno: int
    t_us: int
    lane: str  # data | control | status | sensor
    direction: Optional[str]  # R | W for port lanes
    value: int
    sensor_id: Optional[str] = None


def parse_trace(text: str) -> List[TraceLine]:
    lines: List[TraceLine] = []
    last_t = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        m = _IO_RE.match(raw)
        if m:
            entry = TraceLine(
                lineno=lineno,
                t_us=int(m.group(1)),
                lane=m.group(2),
                direction=m.group(3),
                value=int(m.group(4), 16),
            )
            if entry.lane == "status" and entry.direction != "R":
                raise TraceError(f"line {lineno}: status lane is read-only")
            if entry.lane in ("data", "control") and entry.direction != "W":
                raise TraceError(f"line {lineno}: {entry.lane} lane is write-only")
        else:
            m = _SENSOR_RE.match(raw)
            if m is None:
                raise TraceError(f"line {lineno}: unrecognized trace line: {raw!r}")
            entry = TraceLine(
                lineno=lineno,
                t_us=int(m.group(1)),
                lane="sensor",
                direction=None,
                value=int(m.group(3)),
                sensor_id=m.group(2),
            )
        if entry.t_us < last_t:
            raise TraceError(f"line {lineno}: timestamp runs backwards")
        last_t = entry.t_us
        lines.append(entry)
    return lines


def replay_trace(
    lines: List[TraceLine], cfg: WorldConfig, tick_us: int = 10_000
) -> Tuple[List[str], int]:
    """Returns (divergence messages, number of lines replayed)."""
    sim = HardwareSim(cfg, tick_us=tick_us)
    divergences: List[str] = []

    def report(msg: str) -> None:
        if len(divergences) < MAX_REPORTED:
            divergences.append(msg)
        elif len(divergences) == MAX_REPORTED:
            divergences.append("... further divergences suppressed")

    for entry in lines:
        if entry.t_us >= sim.t_us:
            sim.pump_to_us(entry.t_us)
        if entry.lane == "data":
            sim.regs.write_data(entry.value)
        elif entry.lane == "control":
            sim.regs.write_control(entry.value)
        elif entry.lane == "status":
            actual = sim.regs.read_status()
            if actual != entry.value:
                report(
                    f"line {entry.lineno}: status read at t={entry.t_us} "
                    f"expected 0x{entry.value:02X}, got 0x{actual:02X}"
                )
        else:
            try:
                actual = sim.world.sample_sensor(entry.sensor_id, entry.t_us / 1e6)
            except KeyError:
                report(
                    f"line {entry.lineno}: sensor {entry.sensor_id!r} "
                    "is not in the configured profile"
                )
                continue
            if actual != entry.value:
                report(
                    f"line {entry.lineno}: sensor {entry.sensor_id} at t={entry.t_us} "
                    f"expected {entry.value}, got {actual}"
                )
    return divergences, len(lines)
