"""Dead-reckoning tracker: compass + wheel-tick streams to path records.

Straight runs become PathSegments (heading = circular mean of compass
readings, distance = mean of the two wheel distances).  In-place turns are
not segments: one driven wheel sweeping about a stopped one displaces the
axle midpoint by a chord, so each absorbed turn contributes a
TurnTransition that advances the pose cursor by

    chord = track_width * sin(|sweep| / 2)   along   heading_before + sweep/2

exact for a constant-radius pivot, whatever the sweep.

Conventions match the hardware side: x East, y North, heading degrees
clockwise from North.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

DEFAULT_SPLIT_THRESHOLD_DEG = 5.0
DEFAULT_TURN_RATIO = 0.25
# A wheel at default speed ticks roughly every fourth poll cycle, so a few
# silent polls mean "between ticks", not "stopped".  Only after this many
# consecutive zero-delta polls does a window close.
DEFAULT_IDLE_CLOSE_POLLS = 5


def wheel_tick_quantum(wheel_radius: float, ticks_per_revolution: int) -> float:
    return 2.0 * math.pi * wheel_radius / ticks_per_revolution


def ticks_to_distance(delta: int, quantum: float) -> float:
    if delta < 0:
        raise ValueError("tick delta must be >= 0")
    return delta * quantum


def norm_deg(deg: float) -> float:
    deg = deg % 360.0
    if deg >= 360.0:
        deg -= 360.0
    return deg


def circ_diff(a: float, b: float) -> float:
    """Signed smallest a-b, in [-180, 180)."""
    return (a - b + 180.0) % 360.0 - 180.0


def circular_mean(degrees: Sequence[float]) -> float:
    """Mean direction; {359, 1} averages to 0, not 180."""
    if not degrees:
        raise ValueError("empty sample set")
    s = sum(math.sin(math.radians(d)) for d in degrees)
    c = sum(math.cos(math.radians(d)) for d in degrees)
    return norm_deg(math.degrees(math.atan2(s, c)))


@dataclass(frozen=True)
class PathSegment:
    heading: float
    distance: float
    t_start: float
    t_end: float


@dataclass(frozen=True)
class EstimatedPose:
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class TurnTransition:
    sweep_deg: float  # signed, clockwise positive
    t_start: float
    t_end: float
    dx: float
    dy: float


def advance(pose: EstimatedPose, segment: PathSegment) -> EstimatedPose:
    h = math.radians(segment.heading)
    return EstimatedPose(
        x=pose.x + segment.distance * math.sin(h),
        y=pose.y + segment.distance * math.cos(h),
        heading=segment.heading,
    )


def turn_hop(heading_before: float, sweep_deg: float, track_width: float) -> Tuple[float, float]:
    """Chord displacement of the axle midpoint for a one-wheel pivot."""
    half = math.radians(sweep_deg) / 2.0
    chord = track_width * abs(math.sin(half))
    direction = math.radians(heading_before) + half
    return chord * math.sin(direction), chord * math.cos(direction)


class PathLog:
    """Ordered dead-reckoning record plus the derived pose chain.

    Waypoints are cursor snapshots after each segment; a turn between two
    segments shifts the cursor by its chord first, so waypoint i follows
    from waypoint i-1 via the recorded transitions plus segment i.
    """

    def __init__(self, origin: EstimatedPose = EstimatedPose(0.0, 0.0, 0.0)):
        self.origin = origin
        self.segments: List[PathSegment] = []
        self.waypoints: List[EstimatedPose] = []
        self.turns: List[TurnTransition] = []
        self._cursor = origin

    @property
    def cursor(self) -> EstimatedPose:
        return self._cursor

    def append_segment(self, segment: PathSegment) -> None:
        if segment.distance < 0:
            raise ValueError("segment distance must be >= 0")
        self._cursor = advance(self._cursor, segment)
        self.segments.append(segment)
        self.waypoints.append(self._cursor)

    def apply_turn(self, turn: TurnTransition) -> None:
        self.turns.append(turn)
        self._cursor = EstimatedPose(
            x=self._cursor.x + turn.dx,
            y=self._cursor.y + turn.dy,
            heading=norm_deg(self._cursor.heading + turn.sweep_deg),
        )

    def summarize(self) -> Tuple[float, float]:
        """(total running distance, straight-line start-to-end distance).

        Net displacement is measured to the cursor, so a trailing turn's
        chord still counts even though it closed no segment.
        """
        total = sum(seg.distance for seg in self.segments)
        net = math.hypot(self._cursor.x - self.origin.x, self._cursor.y - self.origin.y)
        return total, net

    def to_csv(self) -> str:
        lines = ["t_start,t_end,heading_deg,distance_m,x,y"]
        for seg, wp in zip(self.segments, self.waypoints):
            lines.append(
                f"{seg.t_start!r},{seg.t_end!r},{seg.heading!r},{seg.distance!r},{wp.x!r},{wp.y!r}"
            )
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        total, net = self.summarize()
        return {
            "origin": _pose_dict(self.origin),
            "segments": [
                {
                    "t_start": s.t_start,
                    "t_end": s.t_end,
                    "heading_deg": s.heading,
                    "distance_m": s.distance,
                }
                for s in self.segments
            ],
            "waypoints": [_pose_dict(w) for w in self.waypoints],
            "turns": [
                {
                    "t_start": t.t_start,
                    "t_end": t.t_end,
                    "sweep_deg": t.sweep_deg,
                    "dx": t.dx,
                    "dy": t.dy,
                }
                for t in self.turns
            ],
            "cursor": _pose_dict(self._cursor),
            "totals": {"total_distance_m": total, "net_displacement_m": net},
        }


def _pose_dict(p: EstimatedPose) -> dict:
    return {"x": p.x, "y": p.y, "heading": p.heading}


def summarize(log: PathLog) -> Tuple[float, float]:
    return log.summarize()


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


@dataclass
class _Window:
    t_start: float
    direction: int
    entry_compass: Optional[float]
    samples: List[float] = field(default_factory=list)  # tick-bearing polls only
    sum_left: int = 0
    sum_right: int = 0
    sweep: float = 0.0  # accumulated over every poll, silent ones included
    t_last_motion: float = 0.0
    zero_run: int = 0

    def add_motion(self, t: float, compass: float, dl: int, dr: int) -> None:
        self.samples.append(compass)
        self.sum_left += dl
        self.sum_right += dr
        self.t_last_motion = t
        self.zero_run = 0

    def mean_heading(self) -> float:
        return circular_mean(self.samples)

    def is_turn(self, turn_ratio: float) -> bool:
        lo = min(self.sum_left, self.sum_right)
        hi = max(self.sum_left, self.sum_right)
        return hi > 0 and lo <= turn_ratio * hi


@dataclass
class _PendingTurn:
    t_start: float
    t_end: float
    sweep: float
    heading_before: float


class SegmentTracker:
    """Sequential state machine over the poll-aligned compass/tick streams.

    `observe` is called once per poll cycle with the tick deltas since the
    previous call, the compass reading, and the sign of the commanded
    motion (+1 forward, -1 backward; turns may pass +1).  Backward travel
    records its segment along the direction of travel, compass + 180.

    Motions separated by fewer idle polls than the close threshold merge
    into one window; script timelines should leave a gap of at least
    idle_close_polls poll cycles between commands.
    """

    def __init__(
        self,
        quantum: float,
        track_width: float,
        log: Optional[PathLog] = None,
        split_threshold_deg: float = DEFAULT_SPLIT_THRESHOLD_DEG,
        turn_ratio: float = DEFAULT_TURN_RATIO,
        idle_close_polls: int = DEFAULT_IDLE_CLOSE_POLLS,
    ):
        if quantum <= 0:
            raise ValueError("quantum must be > 0")
        if track_width <= 0:
            raise ValueError("track_width must be > 0")
        if idle_close_polls < 1:
            raise ValueError("idle_close_polls must be >= 1")
        self.quantum = quantum
        self.track_width = track_width
        self.log = log if log is not None else PathLog()
        self.split_threshold = split_threshold_deg
        self.turn_ratio = turn_ratio
        self.idle_close_polls = idle_close_polls
        self._window: Optional[_Window] = None
        self._pending_turn: Optional[_PendingTurn] = None
        self._prev_t: Optional[float] = None
        self._prev_compass: Optional[float] = None
        # Rotation seen while no window is open.  The compass is quantized
        # but not noisy, so a nonzero step with the wheels silent is real
        # rotation (a turn whose first tick has not landed yet); it seeds
        # the next window's sweep instead of being dropped.
        self._idle_sweep = 0.0

    def observe(self, t: float, compass_deg: float, dl: int, dr: int, direction: int) -> None:
        moving = dl > 0 or dr > 0
        win = self._window
        # The robot can rotate between ticks, so sweep integrates every poll.
        # Each inter-poll step belongs to exactly one window: the survivor
        # of this call (on close-and-reopen it seeds the new window).
        if self._prev_compass is not None:
            step = circ_diff(compass_deg, self._prev_compass)
        else:
            step = 0.0

        if win is None:
            if moving:
                self._open_window(t, compass_deg, dl, dr, direction)
            else:
                self._idle_sweep += step
                # Truly idle: whatever turn was in progress is over.
                self._finalize_pending_turn()
        elif moving:
            if direction != win.direction:
                self._close_window()
                self._open_window(t, compass_deg, dl, dr, direction)
            elif (
                not win.is_turn(self.turn_ratio)
                and abs(circ_diff(compass_deg, win.mean_heading())) > self.split_threshold
            ):
                # Heading walked away from the running mean of a two-wheel
                # run; close and let this poll start the next leg.
                self._close_window()
                self._open_window(t, compass_deg, dl, dr, direction)
            else:
                win.sweep += step
                win.add_motion(t, compass_deg, dl, dr)
        else:
            win.sweep += step
            win.zero_run += 1
            if win.zero_run >= self.idle_close_polls:
                self._close_window()
                self._finalize_pending_turn()

        self._prev_t = t
        self._prev_compass = compass_deg

    def flush(self) -> None:
        """Close any open window and finalize a pending turn (end of run)."""
        if self._window is not None:
            self._close_window()
        self._finalize_pending_turn()

    # -- internals ---------------------------------------------------------

    def _open_window(self, t: float, compass: float, dl: int, dr: int, direction: int) -> None:
        t_start = self._prev_t if self._prev_t is not None else t
        # Any carried idle rotation already moved the compass, so the
        # heading the window "entered at" sits that much further back.
        entry = None
        if self._prev_compass is not None:
            entry = norm_deg(self._prev_compass - self._idle_sweep)
        win = _Window(t_start=t_start, direction=direction, entry_compass=entry)
        win.sweep += self._idle_sweep
        self._idle_sweep = 0.0
        if self._prev_compass is not None:
            win.sweep += circ_diff(compass, self._prev_compass)
        win.add_motion(t, compass, dl, dr)
        self._window = win

    def _close_window(self) -> None:
        win = self._window
        self._window = None
        if win is None or (win.sum_left == 0 and win.sum_right == 0):
            return
        if win.is_turn(self.turn_ratio):
            self._absorb_turn(win)
        else:
            self._finalize_pending_turn()
            heading = win.mean_heading()
            if win.direction < 0:
                heading = norm_deg(heading + 180.0)
            distance = 0.5 * (
                ticks_to_distance(win.sum_left, self.quantum)
                + ticks_to_distance(win.sum_right, self.quantum)
            )
            if distance > 0:
                self.log.append_segment(
                    PathSegment(
                        heading=heading,
                        distance=distance,
                        t_start=win.t_start,
                        t_end=win.t_last_motion,
                    )
                )

    def _absorb_turn(self, win: _Window) -> None:
        pending = self._pending_turn
        if pending is not None and _sign(pending.sweep) not in (0, _sign(win.sweep)):
            # Reversed rotation is a new pivot about the other wheel, not a
            # continuation; the chords must not cancel inside one record.
            self._finalize_pending_turn()
            pending = None
        if pending is None:
            before = win.entry_compass
            if before is None:
                before = win.samples[0]
            self._pending_turn = _PendingTurn(
                t_start=win.t_start,
                t_end=win.t_last_motion,
                sweep=win.sweep,
                heading_before=before,
            )
        else:
            # Consecutive same-direction turn windows merge; the entry diff
            # of each window keeps the sweep telescoping across the split.
            pending.sweep += win.sweep
            pending.t_end = win.t_last_motion

    def _finalize_pending_turn(self) -> None:
        pending = self._pending_turn
        self._pending_turn = None
        if pending is None or pending.sweep == 0.0:
            return
        dx, dy = turn_hop(pending.heading_before, pending.sweep, self.track_width)
        self.log.apply_turn(
            TurnTransition(
                sweep_deg=pending.sweep,
                t_start=pending.t_start,
                t_end=pending.t_end,
                dx=dx,
                dy=dy,
            )
        )
