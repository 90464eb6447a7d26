import dataclasses
import json

import numpy as np
import pytest

from hetnetopt.errors import ConfigError, ParseError
from hetnetopt.scenario import (
    Placement,
    ScenarioConfig,
    dbm_to_watt,
    generate_scenario,
    load_scenario,
    pathloss_db,
    save_scenario,
    scenario_to_dict,
    watt_to_dbm,
)


def test_pathloss_values():
    assert pathloss_db("macro", 100.0) == pytest.approx(114.0)
    assert pathloss_db("pico", 100.0) == pytest.approx(114.0)
    assert pathloss_db("femto", 100.0) == pytest.approx(97.0)
    assert pathloss_db("macro", 1.0) == pytest.approx(34.0)
    # clamp below one meter
    assert pathloss_db("macro", 0.0) == pytest.approx(34.0)


def test_dbm_conversions():
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(46.0) == pytest.approx(39.81, abs=0.01)
    assert dbm_to_watt(-104.0) == pytest.approx(3.981e-14, abs=1e-17)
    assert watt_to_dbm(dbm_to_watt(17.3)) == pytest.approx(17.3)


def test_generation_is_deterministic():
    cfg = ScenarioConfig(rng_seed=42)
    s1, p1 = generate_scenario(cfg)
    s2, p2 = generate_scenario(cfg)
    assert s1.equals(s2)
    assert np.array_equal(p1.user_xy, p2.user_xy)


def test_generation_pathloss_only_gain():
    cfg = ScenarioConfig(
        macro_count=1, pico_count=0, femto_count=0, user_count=1,
        high_priority_count=0, shadow_std_db=0.0, bs_positions=((0.0, 0.0),),
        rng_seed=0, power_split_across_blocks=False,
    )
    s, placement = generate_scenario(cfg)
    d = np.hypot(*placement.user_xy[0])
    expected = 10 ** (-(34 + 40 * np.log10(d)) / 10)
    assert s.gains[0, 0] == pytest.approx(expected, rel=1e-12)


def test_shadowing_matches_lognormal_moment():
    # mean of 10^(S/10) for S ~ N(0, 8^2) is exp((8*ln10/10)^2/2)
    rng = np.random.default_rng(2024)
    sigma = 8.0
    draws = 10 ** (rng.normal(0.0, sigma, size=100_000) / 10)
    closed_form = np.exp((sigma * np.log(10) / 10) ** 2 / 2)
    assert np.mean(draws) == pytest.approx(closed_form, rel=0.02)


def test_priority_split_counts():
    cfg = ScenarioConfig(rng_seed=9)
    s, _ = generate_scenario(cfg)
    assert int((s.priorities == 2.0).sum()) == cfg.high_priority_count
    assert int((s.priorities == 1.0).sum()) == cfg.user_count - cfg.high_priority_count
    assert (s.gains > 0).all()


def test_power_split_convention():
    cfg = ScenarioConfig(rng_seed=0)
    s, _ = generate_scenario(cfg)
    assert s.max_power[0] == pytest.approx(dbm_to_watt(46.0) / 55)
    full = dataclasses.replace(cfg, power_split_across_blocks=False)
    s2, _ = generate_scenario(full)
    assert s2.max_power[0] == pytest.approx(dbm_to_watt(46.0))


def test_users_inside_disc():
    cfg = ScenarioConfig(rng_seed=5)
    _, placement = generate_scenario(cfg)
    assert (np.hypot(*placement.user_xy.T) <= cfg.cell_radius_m + 1e-9).all()


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(user_count=5, high_priority_count=9).validate()
    with pytest.raises(ConfigError):
        ScenarioConfig(cell_radius_m=-1.0).validate()
    with pytest.raises(ConfigError):
        ScenarioConfig(bs_positions=((0, 0),)).validate()  # five BSs expected


def test_roundtrip_is_byte_identical(tmp_path):
    cfg = ScenarioConfig(rng_seed=3)
    s, placement = generate_scenario(cfg)
    path = tmp_path / "scenario.json"
    save_scenario(path, s, placement)
    loaded, loaded_placement = load_scenario(path)
    assert loaded.equals(s)
    assert np.array_equal(loaded_placement.bs_xy, placement.bs_xy)
    path2 = tmp_path / "resaved.json"
    save_scenario(path2, loaded, loaded_placement)
    assert path.read_bytes() == path2.read_bytes()


def test_load_scenario_missing_priority(tmp_path):
    doc = {
        "bs": [{"tier": "macro", "power_dbm": 46.0, "xy": [0.0, 0.0]}],
        "users": [{"xy": [10.0, 0.0]}],
        "noise_dbm": -104.0,
        "K": 55,
        "B_hz": 180e3,
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError, match="priorit"):
        load_scenario(path)


def test_load_handwritten_two_by_two(tmp_path):
    doc = {
        "bs": [
            {"tier": "macro", "power_dbm": 40.0, "xy": [0.0, 0.0]},
            {"tier": "femto", "power_dbm": 20.0, "xy": [100.0, 0.0]},
        ],
        "users": [
            {"xy": [10.0, 0.0], "priority": 2.0},
            {"xy": [90.0, 0.0], "priority": 1.0},
        ],
        "noise_dbm": -100.0,
        "K": 10,
        "B_hz": 1e5,
        "gains": [[1e-9, 2e-11], [5e-12, 3e-9]],
    }
    path = tmp_path / "two.json"
    path.write_text(json.dumps(doc))
    s, _ = load_scenario(path)
    assert s.num_bs == 2 and s.num_users == 2
    assert s.gains[0, 1] == pytest.approx(2e-11)
    assert s.tiers == ("macro", "femto")


def test_load_scenario_bad_gain_shape(tmp_path):
    doc = scenario_to_dict(*generate_scenario(ScenarioConfig(rng_seed=1)))
    doc["gains"] = [[1.0]]
    path = tmp_path / "shape.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError, match="gains"):
        load_scenario(path)


def test_hotspot_placement_centers_on_bs():
    cfg = ScenarioConfig(
        macro_count=0, pico_count=3, femto_count=0, user_count=9,
        high_priority_count=3, cell_radius_m=400.0, pico_offset_m=200.0, rng_seed=0,
        user_placement="hotspot", hotspot_radius_m=30.0,
    )
    s, placement = generate_scenario(cfg)
    anchors = np.arange(9) % 3
    dists = np.hypot(*(placement.user_xy - placement.bs_xy[anchors]).T)
    assert (dists <= 30.0 + 1e-9).all()
