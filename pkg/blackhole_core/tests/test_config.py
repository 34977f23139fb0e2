from __future__ import annotations

import pytest

from blackhole_core.app.core.errors import ConfigError
from blackhole_core.app.core.plant import PlantConfig
from blackhole_core.app.services.scenarios import ScenarioConfig, build_config, parse_config_text
from blackhole_core.app.services.scenarios.config import load_config_file


def test_parse_config_text_handles_comments_and_plant_keys() -> None:
    text = """
    # tank-overflow run
    scenario = tank-overflow
    drop_duration_s = 900   # seconds
    plant.inflow_rate = 0.6
    """

    values = parse_config_text(text)

    assert values == {
        "scenario": "tank-overflow",
        "drop_duration_s": "900",
        "plant": {"inflow_rate": "0.6"},
    }


@pytest.mark.parametrize("line", ["scenario tank-overflow", "= 3"])
def test_malformed_lines_name_their_location(line: str) -> None:
    with pytest.raises(ConfigError) as excinfo:
        parse_config_text(f"seed = 1\n{line}\n", source="run.cfg")

    assert str(excinfo.value).startswith("run.cfg:2:")
    assert excinfo.value.error_class == "invalid_config"


def test_defaults_match_the_reference_setup() -> None:
    config = build_config(environ={})

    assert config.seed == 1
    assert config.scenario == "baseline"
    assert config.drop_duration_s == 600.0
    assert config.window_sizes_s == [30.0, 60.0, 120.0, 300.0, 600.0, 1800.0]
    assert config.plant_config() == PlantConfig()


def test_precedence_environment_file_then_overrides(tmp_path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("seed = 7\nscenario = profile\nout = from-file\n")
    environ = {"BLACKHOLE_SEED": "3", "BLACKHOLE_OUT": "from-env"}

    assert build_config(environ=environ).seed == 3
    from_file = build_config(config_path=path, environ=environ)
    assert (from_file.seed, from_file.out) == (7, "from-file")
    overridden = build_config(
        config_path=path, overrides={"seed": 11, "out": None}, environ=environ
    )
    assert (overridden.seed, overridden.scenario, overridden.out) == (11, "profile", "from-file")


def test_plant_constants_flow_into_the_plant_config(tmp_path) -> None:
    path = tmp_path / "run.cfg"
    path.write_text("plant.inflow_rate = 0.6\nplant.s12_repetitions = 100\n")

    plant = build_config(config_path=path, environ={}).plant_config()

    assert plant.inflow_rate == 0.6
    assert plant.s12_repetitions == 100


@pytest.mark.parametrize(
    "overrides",
    [
        {"scenario": "meltdown"},
        {"colour": "blue"},
        {"plant": {"bogus_rate": 1.0}},
        {"scenario": "tank-overflow", "drop_duration_s": 0},
        {"fluctuation_min_s": 90, "fluctuation_max_s": 60},
        {"fluctuation_span_start_s": 100, "fluctuation_span_end_s": 100},
        {"fluctuation_cycle": 4},
        {"window_sizes_s": "30,-1"},
        {"seed": "abc"},
    ],
)
def test_invalid_values_raise_config_error(overrides) -> None:
    with pytest.raises(ConfigError) as excinfo:
        build_config(overrides=overrides, environ={})
    assert excinfo.value.error_class == "invalid_config"


def test_zero_drop_is_allowed_outside_attack_scenarios() -> None:
    assert build_config(overrides={"scenario": "profile", "drop_duration_s": 0}, environ={}).drop_duration_s == 0


def test_inconsistent_plant_levels_are_reported_on_use() -> None:
    config = ScenarioConfig(plant={"functional_max_level": 950.0})

    with pytest.raises(ConfigError):
        config.plant_config()


def test_window_sizes_accept_a_comma_list() -> None:
    config = build_config(overrides={"window_sizes_s": "60, 600"}, environ={})

    assert config.window_sizes_s == [60.0, 600.0]


def test_config_hash_ignores_the_output_directory() -> None:
    a = ScenarioConfig(seed=5, out="one")
    b = ScenarioConfig(seed=5, out="two")
    c = ScenarioConfig(seed=6, out="one")

    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()
    assert len(a.config_hash()) == 64
    assert "plant.inflow_rate=0.6" in ScenarioConfig(plant={"inflow_rate": 0.6}).canonical_items()


def test_missing_config_file_is_a_config_error(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "absent.cfg")
