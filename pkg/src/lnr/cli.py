"""Command-line entry points.

`lnr run` either serves the operator API against a wall-clock-paced
simulation, or, with --scenario, executes a scripted command timeline
headlessly (sim time only, no sleeping) and writes the run artifacts:
path.csv, telemetry.ndjson, warnings.ndjson, trace.log.

`lnr replay` re-executes a trace.log against a fresh simulation and
reports divergences.  Exit codes: 0 clean, 1 divergence, 2 usage/parse.

Scenario files are line-oriented: `<t_ms> <command> [duration_ms]` with
`#` comments.  Timestamps are simulation time, milliseconds, non-
decreasing.  Commands: forward backward turn_left turn_right stop.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Sequence

from .config import AppConfig, apply_env, load_config
from .errors import ConfigError, ScenarioError, TraceError
from .portio import DriveCommand
from .replay import parse_trace, replay_trace
from .runtime import RobotRuntime, Stepper
from .service import create_app

# Sim-time padding after the last scripted command so auto-stops land and
# the final wheel ticks drain through the poll loop before artifacts are
# written.
TAIL_MS = 600


@dataclass(frozen=True)
class ScenarioStep:
    lineno: int
    t_ms: int
    command: DriveCommand
    duration_ms: Optional[int]


def parse_scenario(text: str, origin: str = "scenario") -> List[ScenarioStep]:
    steps: List[ScenarioStep] = []
    last_t = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) not in (2, 3):
            raise ScenarioError(
                f"{origin}:{lineno}: expected '<t_ms> <command> [duration_ms]'"
            )
        try:
            t_ms = int(parts[0])
        except ValueError:
            raise ScenarioError(f"{origin}:{lineno}: bad timestamp {parts[0]!r}") from None
        if t_ms < 0:
            raise ScenarioError(f"{origin}:{lineno}: timestamp must be >= 0")
        if t_ms < last_t:
            raise ScenarioError(f"{origin}:{lineno}: timestamps must not decrease")
        last_t = t_ms
        try:
            command = DriveCommand(parts[1])
        except ValueError:
            valid = ", ".join(c.value for c in DriveCommand)
            raise ScenarioError(
                f"{origin}:{lineno}: unknown command {parts[1]!r} (expected one of: {valid})"
            ) from None
        duration_ms: Optional[int] = None
        if len(parts) == 3:
            try:
                duration_ms = int(parts[2])
            except ValueError:
                raise ScenarioError(
                    f"{origin}:{lineno}: bad duration {parts[2]!r}"
                ) from None
            if duration_ms < 0:
                raise ScenarioError(f"{origin}:{lineno}: duration must be >= 0")
        steps.append(ScenarioStep(lineno, t_ms, command, duration_ms))
    return steps


def run_scenario(cfg: AppConfig, steps: List[ScenarioStep], out_dir: Path) -> int:
    # starlette warns about the httpx pairing this environment ships; not
    # actionable here and not worth a line of stderr per run
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    runtime = RobotRuntime(cfg, trace=True)
    app = create_app(runtime)
    out_dir.mkdir(parents=True, exist_ok=True)

    with (out_dir / "telemetry.ndjson").open("w") as tf, (
        out_dir / "warnings.ndjson"
    ).open("w") as wf:
        runtime.frame_listeners.append(lambda frame: tf.write(json.dumps(frame) + "\n"))
        runtime.warning_listeners.append(lambda event: wf.write(json.dumps(event) + "\n"))
        headers = {"Authorization": f"Bearer {cfg.service.admin_token}"}
        with TestClient(app) as client:
            for step in steps:
                runtime.advance_to_us(step.t_ms * 1000)
                body: dict = {"command": step.command.value}
                if step.duration_ms is not None:
                    body["duration_ms"] = step.duration_ms
                resp = client.post("/api/control/drive", json=body, headers=headers)
                if resp.status_code != 200:
                    print(
                        f"lnr: scenario line {step.lineno}: drive rejected "
                        f"({resp.status_code}): {resp.text}",
                        file=sys.stderr,
                    )
                    return 1
            end_ms = 0
            for step in steps:
                end_ms = max(end_ms, step.t_ms + (step.duration_ms or 0))
            runtime.advance_to_us((end_ms + TAIL_MS) * 1000)
        runtime.flush_tracker()

    (out_dir / "path.csv").write_text(runtime.path_csv())
    assert runtime.trace is not None
    runtime.trace.write(out_dir / "trace.log")

    total, net = runtime.path_log.summarize()
    print(
        f"scenario complete: sim time {runtime.sim.t_s:.3f} s, "
        f"{len(runtime.path_log.segments)} segments, "
        f"{len(runtime.path_log.turns)} turns, "
        f"total {total:.3f} m, net {net:.3f} m"
    )
    print(f"artifacts written to {out_dir}/")
    return 0


def run_server(cfg: AppConfig, static_dir: Optional[Path], trace: bool) -> int:
    import uvicorn

    runtime = RobotRuntime(cfg, trace=trace)
    app = create_app(runtime, static_dir=static_dir)
    stepper = Stepper(runtime)
    stepper.start()
    try:
        uvicorn.run(app, host=cfg.service.host, port=cfg.service.port, log_level="info")
    finally:
        stepper.stop()
    return 0


def _build_config(args: argparse.Namespace) -> AppConfig:
    cfg = load_config(Path(args.config) if args.config else None)
    cfg = apply_env(cfg, os.environ)
    world, sim, service = cfg.world, cfg.sim, cfg.service
    if args.seed is not None:
        world = replace(world, seed=args.seed)
    if args.tick_ms is not None:
        sim = replace(sim, tick_ms=args.tick_ms)
    if getattr(args, "listen", None):
        service = replace(service, listen=args.listen)
    cfg = AppConfig(
        world=world, sim=sim, service=service, navigation=cfg.navigation, daps=cfg.daps
    )
    cfg.validate()
    return cfg


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override world.seed")
    p.add_argument("--tick-ms", type=int, dest="tick_ms", help="override sim.tick_ms")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lnr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="serve the operator API or run a scenario")
    _add_shared_flags(run_p)
    run_p.add_argument("--listen", help="override service.listen (HOST:PORT)")
    run_p.add_argument("--scenario", help="scripted timeline; runs headless and exits")
    run_p.add_argument("--out", default="out", help="artifact directory for scenario runs")
    run_p.add_argument(
        "--static",
        default="frontend/dist",
        help="directory of web console assets to serve at / (server mode)",
    )
    run_p.add_argument(
        "--trace",
        action="store_true",
        help="record port traffic in server mode (scenario runs always trace)",
    )

    replay_p = sub.add_parser("replay", help="re-execute a trace and report divergences")
    _add_shared_flags(replay_p)
    replay_p.add_argument("trace", help="trace.log from a previous run")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    if args.scenario:
        path = Path(args.scenario)
        try:
            text = path.read_text()
        except OSError as e:
            print(f"lnr: {path}: {e.strerror or e}", file=sys.stderr)
            return 2
        steps = parse_scenario(text, origin=str(path))
        return run_scenario(cfg, steps, Path(args.out))
    static_dir = Path(args.static) if args.static else None
    if static_dir is not None and not static_dir.is_dir():
        static_dir = None
    return run_server(cfg, static_dir, trace=args.trace)


def _cmd_replay(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    path = Path(args.trace)
    try:
        text = path.read_text()
    except OSError as e:
        print(f"lnr: {path}: {e.strerror or e}", file=sys.stderr)
        return 2
    try:
        lines = parse_trace(text)
    except TraceError as e:
        print(f"lnr: {path}: {e}", file=sys.stderr)
        return 2
    divergences, replayed = replay_trace(lines, cfg.world, tick_us=cfg.sim.tick_us)
    if divergences:
        for msg in divergences:
            print(f"{path}: {msg}")
        print(f"replay diverged: {len(divergences)} finding(s) over {replayed} lines")
        return 1
    print(f"replay clean: {replayed} lines")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_replay(args)
    except ConfigError as e:
        print(f"lnr: config error: {e}", file=sys.stderr)
        return 2
    except ScenarioError as e:
        print(f"lnr: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
