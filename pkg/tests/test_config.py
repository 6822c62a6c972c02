import pytest

from fleet_hfc.config import (
    KEY_DOCS,
    ConfigError,
    ScenarioConfig,
    bundled_config,
    config_hash,
    load_config,
    parse_config,
)

MINIMAL = """
[field]
hotspots = 300 300 100 1.0; 700 700 120 0.8
"""


def test_bundled_canonical_loads():
    cfg = load_config("canonical_s4.cfg")
    assert bundled_config() is not None
    assert cfg.task_count == 90 and cfg.n_vehicles == 3
    assert cfg.battery_time_s == 3600 and cfg.speed_mps == 1.0
    assert cfg.injection_time_s == 90
    assert (cfg.hfc.population_size, cfg.hfc.max_iter) == (100, 150)
    assert (cfg.ga.population_size, cfg.ga.max_iter) == (100, 150)
    assert cfg.hfc.screening_sample == 1


def test_defaults_from_minimal_text():
    cfg = parse_config(MINIMAL)
    assert len(cfg.field_spec.hotspots) == 2
    assert cfg.field_spec.hotspots[1].intensity == 0.8
    assert cfg.goal_xyz == cfg.start_xyz == (0.0, 0.0, 0.0)
    assert cfg.mode == "cm" and cfg.solver == "hfc" and cfg.clustering == "kmeans"
    assert cfg.hfc.cooperation_on and cfg.hfc.screening_on


def test_blank_injection_time_means_random():
    cfg = parse_config(MINIMAL + "[tasks]\ninjection_time_s =\ninjection_range_s = 30 60\n")
    assert cfg.injection_time_s is None and cfg.injection_range_s == (30.0, 60.0)


def test_mask_rows_survive_hash_characters():
    cfg = parse_config(MINIMAL + "mask =\n    10*.10#\n    20*.\n")
    assert cfg.field_spec.mask_rows == ("10*.10#", "20*.")


@pytest.mark.parametrize("text, key", [
    (MINIMAL + "[fleet]\nspeed_mps = 0\n", "fleet.speed_mps"),
    (MINIMAL + "[fleet]\nbattery_time_s = abc\n", "fleet.battery_time_s"),
    (MINIMAL + "[fleet]\nstart = 1 2\n", "fleet.start"),
    (MINIMAL + "[fleet]\nstart = 5000 0 0\n", "fleet.start"),
    (MINIMAL + "[solver]\nmode = fast\n", "solver.mode"),
    (MINIMAL + "[solver]\nname = sa\n", "solver.name"),
    (MINIMAL + "[solver]\nclustering = dbscan\n", "solver.clustering"),
    (MINIMAL + "[tasks]\ncount = 2\n", "tasks.count"),
    (MINIMAL + "[tasks]\npriority_range = 0 10\n", "tasks.priority_range"),
    (MINIMAL + "[fleet]\ncolour = red\n", "fleet.colour"),
    (MINIMAL + "[extras]\nx = 1\n", "extras"),
    ("[field]\nwidth_m = 10\n", "field.hotspots"),
    ("[field]\nhotspots = 1 2 3\n", "field.hotspots[0]"),
    (MINIMAL + "[hfc]\nscreening_sample = 5\n", "hfc"),
    (MINIMAL + "[ga]\ncrossover_rate = 2\n", "ga"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key
    assert key in str(err.value)


def test_missing_file():
    with pytest.raises(ConfigError) as err:
        load_config("/nonexistent/scenario.cfg")
    assert err.value.key == "config"


def test_overrides():
    cfg = parse_config(MINIMAL)
    out = cfg.with_overrides(seed=7, mode="ncm1", solver="ga", iters=12, runs=3, deform_std=10)
    assert out.seed == out.hfc.seed == out.ga.seed == 7
    assert out.mode == "ncm1"
    assert (out.hfc.ordering_on, out.hfc.screening_on, out.hfc.cooperation_on) == (True, False, False)
    assert out.solver == "ga" and out.hfc.max_iter == out.ga.max_iter == 12
    assert out.mc_runs == 3 and out.deform_std_m == 10 and out.jitter_m == 2
    assert cfg.with_overrides() == cfg
    with pytest.raises(ConfigError):
        cfg.with_overrides(iters=0)


def test_hash_is_stable_and_sensitive():
    a = parse_config(MINIMAL)
    b = parse_config(MINIMAL)
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64
    assert config_hash(a.with_overrides(seed=1)) != config_hash(a)


def test_key_docs_cover_config_fields():
    sections = {s for s, _ in KEY_DOCS}
    assert sections == {"field", "tasks", "fleet", "solver", "hfc", "ga", "weights", "montecarlo"}
    assert isinstance(ScenarioConfig(), ScenarioConfig)
