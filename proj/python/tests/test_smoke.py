import json
import math
import pathlib

import pytest

import ecdrive

ROOT = pathlib.Path(__file__).resolve().parents[2]


def small_config(**overrides):
    cfg = {
        "scenario": {"name": "py", "lane_count": 3, "vehicle_count": 3},
        "offload": {"detector": {"n_ref": 40, "window": 20}},
        "seeds": [1],
        "steps": 25,
        "output_dir": "unused",
    }
    cfg.update(overrides)
    return cfg


def test_shipped_configs_validate():
    for name in ("workzone", "obstacle", "highway"):
        ecdrive.validate_config((ROOT / "configs" / f"{name}.json").read_text())


def test_invalid_config_names_field():
    cfg = small_config()
    del cfg["steps"]
    with pytest.raises(ecdrive.ConfigError, match="steps"):
        ecdrive.validate_config(cfg)
    with pytest.raises(ValueError):
        ecdrive.validate_config(small_config(offload={"tau": 1.5}))


def test_run_episode_modes():
    header, records = ecdrive.run_episode(small_config(), "EdgeOnly", 3)
    assert header["schema_version"] == "1"
    assert len(records) == 25
    assert header["summary"]["offload_rate"] == 0.0
    assert header["summary"]["mean_latency_ms"] == 50.0

    _, cloud = ecdrive.run_episode(small_config(), "CloudOnly", 3)
    assert all(r["offloaded"] for r in cloud)
    assert all(r["latency_ms"] == 850.0 for r in cloud)


def test_trace_is_deterministic_and_consistent():
    a = ecdrive.run_episode_text(small_config(), "Collaborative", 5)
    b = ecdrive.run_episode_text(small_config(), "Collaborative", 5)
    assert a == b
    stored, recomputed = ecdrive.recompute_summary(a)
    assert stored == recomputed


def test_describe_and_featurize():
    scenario = {
        "lane_count": 4,
        "ego_speed": 25.0,
        "ego_position": 361.18,
        "vehicle_count": 0,
        "vehicles": [
            {"id": 496, "lane": 1, "position": 372.81, "speed": 21.2, "accel": 0.2}
        ],
    }
    text = ecdrive.describe(scenario)
    for value in ("25.0", "361.18", "496", "372.81", "21.2", "0.2"):
        assert value in text
    x = ecdrive.featurize(scenario)
    assert len(x) == 15
    assert x[0] == 25.0
    assert all(math.isfinite(v) for v in x)


def test_parse_decision():
    assert ecdrive.parse_decision("Decision: change lane to the left.") == "LaneChangeLeft"
    with pytest.raises(ecdrive.NoDecisionFound):
        ecdrive.parse_decision("nothing to see")


def test_statistics():
    d, p = ecdrive.ks_two_sample([1.0, 2.0, 3.0], [10.0, 11.0])
    assert d == 1.0
    assert 0.0 < p < 1.0
    x = [[0.0, 0.0]] * 20
    y = [[3.0, 4.0]] * 20
    mmd2, pval = ecdrive.mmd_permutation(x, y, 1.0, 99, 1)
    assert mmd2 == pytest.approx(2.0 - 2.0 * math.exp(-12.5), abs=1e-12)
    assert pval == pytest.approx(0.01)


def test_trace_error_on_garbage():
    with pytest.raises(ecdrive.TraceError):
        ecdrive.recompute_summary('{"schema_version": "1"')
    with pytest.raises(ValueError):
        ecdrive.load_trace("")
