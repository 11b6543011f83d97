"""Shared helpers: randomized command scripts and error-bound arithmetic.

Scripts strictly alternate straight runs and in-place turns, starting with
a straight, so every script yields at least one path segment and the
tick-quantization slack dominates the small chord residue of each turn.
Gaps between commands exceed the tracker's idle-close threshold.
"""

import math
import random
from dataclasses import dataclass
from typing import List

from lnr.navigation import PathLog
from lnr.portio import DriveCommand
from lnr.runtime import RobotRuntime

WHEEL_SPEED = 0.2
TRACK_WIDTH = 0.3
# One wheel driving about the other, stopped: omega = v / track_width.
TURN_RATE_DEG_S = math.degrees(WHEEL_SPEED / TRACK_WIDTH)
COMPASS_QUANTUM_DEG = 360.0 / 256.0


@dataclass(frozen=True)
class ScriptAction:
    t_ms: int
    command: DriveCommand
    duration_ms: int


def make_script(seed: int) -> List[ScriptAction]:
    rng = random.Random(f"script:{seed}")
    count = rng.randint(3, 8)
    t_ms = 200
    actions: List[ScriptAction] = []
    for i in range(count):
        if i % 2 == 0:
            distance = rng.uniform(0.3, 2.5)
            duration = int(round(distance / WHEEL_SPEED * 1000))
            command = (
                DriveCommand.FORWARD if rng.random() < 0.75 else DriveCommand.BACKWARD
            )
        else:
            sweep = rng.uniform(15.0, 120.0)
            duration = int(round(sweep / TURN_RATE_DEG_S * 1000))
            command = rng.choice([DriveCommand.TURN_LEFT, DriveCommand.TURN_RIGHT])
        actions.append(ScriptAction(t_ms, command, duration))
        t_ms += duration + rng.randint(350, 900)
    return actions


def run_script(runtime: RobotRuntime, actions: List[ScriptAction], tail_ms: int = 600) -> None:
    for action in actions:
        runtime.advance_to_us(action.t_ms * 1000)
        runtime.submit_drive(action.command, action.duration_ms)
    end_ms = max(a.t_ms + a.duration_ms for a in actions)
    runtime.advance_to_us((end_ms + tail_ms) * 1000)
    runtime.flush_tracker()


def position_error_bound(log: PathLog, quantum: float) -> float:
    """Sum of the per-segment quantization allowances."""
    half = math.radians(COMPASS_QUANTUM_DEG) / 2.0
    return sum(2.0 * quantum + seg.distance * math.sin(half) for seg in log.segments)
