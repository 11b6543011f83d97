"""Command-line behavior: scenario parsing, artifact runs, replay exit codes."""

import json
from pathlib import Path

import pytest

from lnr.cli import _build_config, build_parser, main, parse_scenario
from lnr.errors import ScenarioError
from lnr.portio import DriveCommand

SCENARIO = """\
# drive out and back
0 forward 400

500 backward 200   # trailing comment
800 stop
"""


def test_parse_scenario():
    steps = parse_scenario(SCENARIO, origin="demo.txt")
    assert [(s.t_ms, s.command, s.duration_ms) for s in steps] == [
        (0, DriveCommand.FORWARD, 400),
        (500, DriveCommand.BACKWARD, 200),
        (800, DriveCommand.STOP, None),
    ]
    assert [s.lineno for s in steps] == [2, 4, 5]


@pytest.mark.parametrize(
    ("line", "message"),
    [
        ("0 forward 100 extra", "expected '<t_ms> <command>"),
        ("soon forward", "bad timestamp 'soon'"),
        ("-5 forward", "timestamp must be >= 0"),
        ("0 sideways", "unknown command 'sideways'"),
        ("0 forward 1.5", "bad duration '1.5'"),
        ("0 forward -100", "duration must be >= 0"),
    ],
)
def test_parse_scenario_errors(line, message):
    with pytest.raises(ScenarioError, match=message) as exc:
        parse_scenario("# header\n" + line, origin="demo.txt")
    assert str(exc.value).startswith("demo.txt:2:")


def test_parse_scenario_rejects_decreasing_time():
    with pytest.raises(ScenarioError, match="demo.txt:2: timestamps must not decrease"):
        parse_scenario("500 forward\n400 stop", origin="demo.txt")


def test_unknown_command_lists_the_valid_ones():
    with pytest.raises(ScenarioError, match="turn_left"):
        parse_scenario("0 sideways")


# --------------------------------------------------------------- run config


def test_flag_precedence_over_env_over_file(tmp_path, monkeypatch):
    cfg_path = tmp_path / "app.json"
    cfg_path.write_text(json.dumps({"world": {"seed": 1}, "sim": {"tick_ms": 10}}))
    monkeypatch.setenv("LNR_SEED", "2")

    parser = build_parser()
    # file only
    monkeypatch.delenv("LNR_SEED")
    args = parser.parse_args(["run", "--config", str(cfg_path)])
    assert _build_config(args).world.seed == 1
    # env beats file
    monkeypatch.setenv("LNR_SEED", "2")
    assert _build_config(args).world.seed == 2
    # flag beats both
    args = parser.parse_args(["run", "--config", str(cfg_path), "--seed", "3"])
    assert _build_config(args).world.seed == 3


def test_bad_config_file_exits_2(tmp_path, capsys):
    cfg_path = tmp_path / "app.json"
    cfg_path.write_text('{"sim": {"tick_ms": 0}}')
    rc = main(["run", "--config", str(cfg_path), "--scenario", "whatever"])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_missing_scenario_file_exits_2(tmp_path, capsys):
    rc = main(["run", "--scenario", str(tmp_path / "nope.txt")])
    assert rc == 2
    assert "nope.txt" in capsys.readouterr().err


def test_scenario_parse_error_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("0 sideways\n")
    rc = main(["run", "--scenario", str(path)])
    assert rc == 2
    assert f"{path}:1" in capsys.readouterr().err


# ------------------------------------------------------------ scenario runs


@pytest.fixture()
def artifact_run(tmp_path, capsys):
    scenario = tmp_path / "demo.txt"
    scenario.write_text(SCENARIO)
    out = tmp_path / "out"
    rc = main(["run", "--scenario", str(scenario), "--out", str(out)])
    return rc, out, capsys.readouterr().out


def test_scenario_run_writes_artifacts(artifact_run):
    rc, out, stdout = artifact_run
    assert rc == 0
    assert "scenario complete" in stdout

    csv_lines = (out / "path.csv").read_text().splitlines()
    assert csv_lines[0] == "t_start,t_end,heading_deg,distance_m,x,y"
    assert len(csv_lines) == 3  # one forward leg, one backward leg

    telemetry = [
        json.loads(line) for line in (out / "telemetry.ndjson").read_text().splitlines()
    ]
    # polls every 50 ms from t=0 through the 600 ms tail after the last step
    assert len(telemetry) == 29
    assert telemetry[-1]["t"] == 1.4
    assert [f["seq"] for f in telemetry] == list(range(1, 30))

    assert (out / "warnings.ndjson").read_text() == ""
    trace = (out / "trace.log").read_text().splitlines()
    # the boot poll samples sensors before the first command write lands,
    # and its three nibble reads (compass, two wheels) take 15.6 ms of bus
    # time, so the forward command is written at t=15600 us
    assert trace[0] == "000000000000 sensor co 511"
    assert "000000015600 data W 0x01" in trace


def test_replay_of_a_run_is_clean(artifact_run, capsys):
    _, out, _ = artifact_run
    rc = main(["replay", str(out / "trace.log")])
    assert rc == 0
    assert "replay clean" in capsys.readouterr().out


def test_replay_flags_divergence(artifact_run, capsys):
    _, out, _ = artifact_run
    trace = out / "trace.log"
    lines = trace.read_text().splitlines()
    idx = next(i for i, l in enumerate(lines) if " sensor co " in l)
    head, value = lines[idx].rsplit(" ", 1)
    lines[idx] = f"{head} {int(value) + 1}"
    trace.write_text("\n".join(lines) + "\n")

    rc = main(["replay", str(trace)])
    assert rc == 1
    assert "replay diverged" in capsys.readouterr().out


def test_replay_under_wrong_seed_diverges(artifact_run, capsys):
    _, out, _ = artifact_run
    rc = main(["replay", "--seed", "7", str(out / "trace.log")])
    assert rc == 1
    report = capsys.readouterr().out
    # the seed feeds only the sensor noise streams; motion must still match
    assert "sensor" in report
    assert "status" not in report


def test_replay_garbage_exits_2(tmp_path, capsys):
    path = tmp_path / "trace.log"
    path.write_text("000000000000 data W 0x01\nnot a trace line\n")
    rc = main(["replay", str(path)])
    assert rc == 2
    assert "line 2" in capsys.readouterr().err


def test_replay_missing_file_exits_2(tmp_path, capsys):
    rc = main(["replay", str(tmp_path / "gone.log")])
    assert rc == 2


def test_shipped_co_spike_demo_raises_and_clears(tmp_path):
    scenarios = Path(__file__).resolve().parent.parent / "scenarios"
    out = tmp_path / "out"
    rc = main(
        [
            "run",
            "--config", str(scenarios / "co-spike.json"),
            "--scenario", str(scenarios / "co-spike.txt"),
            "--out", str(out),
        ]
    )
    assert rc == 0
    events = [
        json.loads(line)
        for line in (out / "warnings.ndjson").read_text().splitlines()
    ]
    assert [e["kind"] for e in events] == ["raised", "cleared"]
    assert events[0]["sensor_id"] == "co"
    assert events[0]["severity"] == "critical"
    assert events[1]["peak_value"] >= 50.0


def test_scenario_rejected_drive_exits_1(tmp_path, capsys):
    # 40 concurrent long commands overrun the 32-slot queue
    scenario = tmp_path / "flood.txt"
    scenario.write_text("".join("0 forward 5000\n" for _ in range(40)))
    rc = main(["run", "--scenario", str(scenario), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "drive rejected (409)" in capsys.readouterr().err
