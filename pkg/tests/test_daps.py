"""Manifest parsing, package registry, warning hysteresis, sample store."""

import json

import pytest
from hypothesis import given, strategies as st

from lnr.daps import (
    DapsManifest,
    DapsRegistry,
    Severity,
    TimeSeriesStore,
    WarningEngine,
    WarningRule,
    parse_manifest,
    parse_version,
    validate_against_profile,
)
from lnr.errors import (
    ManifestError,
    UnknownSensorError,
    ValidationError,
    VersionConflictError,
)


def manifest_dict(**overrides):
    base = {
        "name": "air-quality",
        "version": "1.2.0",
        "description": "carbon monoxide watch",
        "sensors": [
            {
                "sensor_id": "co",
                "unit": "ppm",
                "calibration": {"gain": 0.25, "offset": -3.0},
                "filters": [{"kind": "moving_average", "window": 3}],
            }
        ],
        "warnings": [
            {
                "sensor_id": "co",
                "raise_threshold": 50.0,
                "clear_threshold": 45.0,
                "min_duration": 0.0,
                "severity": "warning",
            }
        ],
    }
    base.update(overrides)
    return base


def make_manifest(**overrides) -> DapsManifest:
    return parse_manifest(json.dumps(manifest_dict(**overrides)))


# ---------------------------------------------------------------- parsing


def test_parse_round_trip():
    m = make_manifest()
    assert m.name == "air-quality"
    assert m.version == (1, 2, 0)
    assert m.version_str == "1.2.0"
    assert m.sensor_ids() == ["co"]
    assert m.sensors[0].unit == "ppm"
    assert m.sensors[0].calibration.gain == 0.25
    assert m.sensors[0].filters[0].kind == "moving_average"
    assert m.warnings[0].severity is Severity.WARNING
    assert m.summary() == {
        "name": "air-quality",
        "version": "1.2.0",
        "description": "carbon monoxide watch",
        "sensors": ["co"],
        "warning_rules": 1,
    }


def test_parse_minimal_defaults():
    # calibration, filters, warnings, description are all optional
    m = parse_manifest(
        json.dumps(
            {
                "name": "bare",
                "version": "0.0.1",
                "sensors": [{"sensor_id": "co", "unit": "counts"}],
            }
        )
    )
    assert m.description == ""
    assert m.sensors[0].calibration.gain == 1.0
    assert m.sensors[0].calibration.offset == 0.0
    assert m.sensors[0].filters == ()
    assert m.warnings == ()


def test_parse_bad_json_reports_position():
    with pytest.raises(ManifestError, match=r"line 2, column"):
        parse_manifest('{\n  "name": }')


def test_parse_top_level_must_be_object():
    with pytest.raises(ManifestError, match="top-level object"):
        parse_manifest("[1, 2]")


@pytest.mark.parametrize("bad", ["CO", "9lives", "has space", "", "-lead"])
def test_parse_rejects_bad_names(bad):
    with pytest.raises(ManifestError, match="manifest.name"):
        make_manifest(name=bad)


@pytest.mark.parametrize("bad", ["1.2", "v1.2.3", "1.2.3.4", "1.a.3", ""])
def test_parse_rejects_bad_versions(bad):
    with pytest.raises(ManifestError):
        make_manifest(version=bad)


def test_parse_version_triple():
    assert parse_version("10.0.3") == (10, 0, 3)


def test_parse_requires_sensors():
    with pytest.raises(ManifestError, match="missing required field"):
        parse_manifest(json.dumps({"name": "x", "version": "1.0.0"}))
    with pytest.raises(ManifestError, match="at least one sensor"):
        make_manifest(sensors=[])


def test_parse_rejects_duplicate_sensor_binding():
    binding = {"sensor_id": "co", "unit": "ppm"}
    with pytest.raises(ManifestError, match=r"sensors\[1\].sensor_id: duplicate"):
        make_manifest(sensors=[binding, dict(binding)])


def test_parse_rejects_zero_gain():
    sensors = [{"sensor_id": "co", "unit": "ppm", "calibration": {"gain": 0.0}}]
    with pytest.raises(ManifestError, match="gain"):
        make_manifest(sensors=sensors)


def test_parse_rejects_bad_filter_spec():
    sensors = [
        {
            "sensor_id": "co",
            "unit": "ppm",
            "filters": [{"kind": "moving_average", "window": 0}],
        }
    ]
    with pytest.raises(ManifestError, match=r"filters\[0\].window"):
        make_manifest(sensors=sensors)


def test_parse_rejects_unknown_severity():
    warn = manifest_dict()["warnings"][0]
    warn["severity"] = "panic"
    with pytest.raises(ManifestError, match="unknown severity 'panic'"):
        make_manifest(warnings=[warn])


def test_parse_rejects_empty_hysteresis_band():
    # clear must sit strictly below raise or the automaton can oscillate
    warn = manifest_dict()["warnings"][0]
    warn["clear_threshold"] = warn["raise_threshold"]
    with pytest.raises(ManifestError, match="hysteresis band is empty"):
        make_manifest(warnings=[warn])


def test_parse_rejects_negative_min_duration():
    warn = manifest_dict()["warnings"][0]
    warn["min_duration"] = -1.0
    with pytest.raises(ManifestError, match="min_duration"):
        make_manifest(warnings=[warn])


def test_parse_rejects_boolean_threshold():
    warn = manifest_dict()["warnings"][0]
    warn["raise_threshold"] = True
    with pytest.raises(ManifestError, match="expected a number"):
        make_manifest(warnings=[warn])


def test_validate_against_profile():
    m = make_manifest()
    validate_against_profile(m, ["co", "smoke"])
    with pytest.raises(ValidationError, match=r"sensors\[0\].sensor_id"):
        validate_against_profile(m, ["smoke"])
    rule_only = make_manifest(
        sensors=[{"sensor_id": "smoke", "unit": "counts"}]
    )
    with pytest.raises(ValidationError, match=r"warnings\[0\].sensor_id"):
        validate_against_profile(rule_only, ["smoke"])


# --------------------------------------------------------------- registry


def test_registry_install_and_supersede():
    reg = DapsRegistry()
    assert reg.install(make_manifest(version="1.0.0")) is None
    old = reg.get("air-quality")
    superseded = reg.install(make_manifest(version="1.1.0"))
    assert superseded is old
    assert reg.get("air-quality").version == (1, 1, 0)
    assert [m.name for m in reg.packages()] == ["air-quality"]


@pytest.mark.parametrize("version", ["1.1.0", "1.0.9", "0.9.9"])
def test_registry_rejects_non_superseding_versions(version):
    reg = DapsRegistry()
    reg.install(make_manifest(version="1.1.0"))
    with pytest.raises(VersionConflictError):
        reg.install(make_manifest(version=version))
    assert reg.get("air-quality").version == (1, 1, 0)


def test_registry_names_are_independent():
    reg = DapsRegistry()
    reg.install(make_manifest(name="alpha", version="2.0.0"))
    reg.install(make_manifest(name="beta", version="1.0.0"))
    assert {m.name for m in reg.packages()} == {"alpha", "beta"}


# ------------------------------------------------------- warning automaton


def co_rule(min_duration=0.0):
    return WarningRule(
        sensor_id="co",
        raise_threshold=50.0,
        clear_threshold=45.0,
        min_duration=min_duration,
        severity=Severity.WARNING,
    )


def feed(engine, trace, sensor="co", dt=1.0):
    events = []
    for i, value in enumerate(trace):
        events.extend(engine.evaluate(i * dt, {sensor: value}))
    return events


def test_hysteresis_co_trace():
    # 49 below raise; 51 raises; 47 inside the band holds; 44 clears
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    events = feed(engine, [49.0, 51.0, 47.0, 44.0])
    assert len(events) == 2
    raised, cleared = events
    assert raised is cleared  # clear re-emits the same event, completed
    assert raised.raised_at == 1.0
    assert raised.cleared_at == 3.0
    assert raised.peak_value == 51.0
    assert len(engine.history) == 1
    assert engine.active() == []


def test_hysteresis_boundary_values():
    # >= raises and <= clears, exactly at the thresholds
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    events = feed(engine, [50.0, 45.0])
    assert len(events) == 2
    assert events[0].raised_at == 0.0
    assert events[0].cleared_at == 1.0


def test_hysteresis_band_holds_state_both_ways():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    # never reaches raise: values inside the band do nothing from INACTIVE
    assert feed(engine, [49.0, 46.0, 48.0]) == []
    assert engine.active() == []


def test_min_duration_gates_the_raise():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule(min_duration=2.0)])
    events = feed(engine, [60.0, 60.0, 60.0])
    # pending at t=0, still short at t=1, gate opens at t=2
    assert len(events) == 1
    assert events[0].raised_at == 2.0


def test_min_duration_continuity_must_be_unbroken():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule(min_duration=2.0)])
    events = feed(engine, [60.0, 49.0, 60.0, 60.0, 60.0])
    # dip at t=1 resets the clock; the raise waits until t=4
    assert len(events) == 1
    assert events[0].raised_at == 4.0


def test_peak_tracks_through_raised_state():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    events = feed(engine, [55.0, 80.0, 60.0, 40.0])
    assert events[-1].peak_value == 80.0


def test_rules_reset_on_replacement():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    feed(engine, [60.0])
    assert len(engine.active()) == 1
    engine.set_rules("pkg", [co_rule()])
    # the in-flight event stays in history but its automaton is gone
    assert engine.active() == []
    assert len(engine.history) == 1
    assert engine.history[0].cleared_at is None


def test_unknown_sensor_values_are_ignored():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    assert engine.evaluate(0.0, {"smoke": 999.0}) == []


def test_event_ids_are_sequential():
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    feed(engine, [60.0, 40.0, 60.0, 40.0])
    assert [e.event_id for e in engine.history] == [1, 2]


@given(
    st.lists(
        st.floats(min_value=0.0, max_value=100.0, allow_nan=False), max_size=60
    )
)
def test_transitions_strictly_alternate(trace):
    # however the value wanders, each rule emits raise, clear, raise, ...
    # and never two of the same kind in a row
    engine = WarningEngine()
    engine.set_rules("pkg", [co_rule()])
    kinds = []
    for i, value in enumerate(trace):
        for event in engine.evaluate(float(i), {"co": value}):
            kinds.append("clear" if event.cleared_at is not None else "raise")
    expected = ["raise", "clear"] * (len(kinds) // 2 + 1)
    assert kinds == expected[: len(kinds)]
    raises = kinds.count("raise")
    assert len(engine.history) == raises
    assert len(engine.active()) == (1 if raises > kinds.count("clear") else 0)


# ------------------------------------------------------------ sample store


def test_store_append_and_query():
    store = TimeSeriesStore(["co"])
    for i in range(5):
        store.append("co", float(i), 100 + i, 10.0 + i)
    rows = store.query("co", 1.0, 3.0)
    assert [r["t"] for r in rows] == [1.0, 2.0, 3.0]
    assert rows[0] == {"t": 1.0, "raw": 101, "filtered": 11.0, "min": 11.0, "max": 11.0}


def test_store_rejects_backwards_time():
    store = TimeSeriesStore(["co"])
    store.append("co", 1.0, 1, 1.0)
    with pytest.raises(ValueError, match="time-ordered"):
        store.append("co", 0.5, 2, 2.0)
    store.append("co", 1.0, 3, 3.0)  # equal timestamps are allowed


def test_store_unknown_sensor():
    store = TimeSeriesStore(["co"])
    with pytest.raises(UnknownSensorError):
        store.append("smoke", 0.0, 1, 1.0)
    with pytest.raises(UnknownSensorError):
        store.query("smoke", 0.0, 1.0)


def test_store_stride_buckets():
    store = TimeSeriesStore(["co"])
    for i in range(100):
        store.append("co", float(i), i, float(i))
    rows = store.query("co", 0.0, 99.0, stride=10)
    assert len(rows) == 10
    assert [r["t"] for r in rows] == [float(k * 10) for k in range(10)]
    # each bucket reports its first sample plus the envelope across it
    assert rows[3]["filtered"] == 30.0
    assert rows[3]["min"] == 30.0
    assert rows[3]["max"] == 39.0


def test_store_stride_partial_final_bucket():
    store = TimeSeriesStore(["co"])
    for i in range(25):
        store.append("co", float(i), i, float(i))
    rows = store.query("co", 0.0, 24.0, stride=10)
    assert len(rows) == 3
    assert rows[2]["min"] == 20.0
    assert rows[2]["max"] == 24.0


def test_store_query_validation():
    store = TimeSeriesStore(["co"])
    with pytest.raises(ValueError, match="t1 must be <= t2"):
        store.query("co", 2.0, 1.0)
    with pytest.raises(ValueError, match="stride"):
        store.query("co", 0.0, 1.0, stride=0)


def test_store_retention_prunes_old_samples():
    store = TimeSeriesStore(["co"], retention_s=10.0)
    for i in range(30):
        store.append("co", float(i), i, float(i))
    rows = store.query("co", 0.0, 100.0)
    assert rows[0]["t"] >= 29.0 - 10.0
    assert rows[-1]["t"] == 29.0


def test_store_retention_must_be_positive():
    with pytest.raises(ValueError):
        TimeSeriesStore(["co"], retention_s=0.0)


def test_store_save_load_round_trip(tmp_path):
    store = TimeSeriesStore(["co", "smoke"], retention_s=500.0)
    for i in range(20):
        store.append("co", float(i), i, i * 0.5)
    store.append("smoke", 3.0, 7, 7.0)
    path = tmp_path / "series.ndjson"
    store.save(path)

    loaded = TimeSeriesStore.load(path)
    assert loaded.retention_s == 500.0
    assert loaded.sensor_ids() == ["co", "smoke"]
    assert loaded.query("co", 0.0, 100.0) == store.query("co", 0.0, 100.0)
    assert loaded.query("smoke", 0.0, 100.0) == store.query("smoke", 0.0, 100.0)


def test_store_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus"
    path.write_text(json.dumps({"format": "something-else", "version": 1}) + "\n")
    with pytest.raises(ValueError, match="not a"):
        TimeSeriesStore.load(path)
    path.write_text("")
    with pytest.raises(ValueError, match="empty"):
        TimeSeriesStore.load(path)
