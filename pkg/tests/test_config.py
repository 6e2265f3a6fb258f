"""YAML experiment config: parsing, validation, defaults, runtime assembly."""

import dataclasses

import pytest
import yaml

from fedcost.config import (
    ExperimentConfig,
    build_runtime,
    default_config,
    load_config,
    parse_config,
)
from fedcost.core import ConfigError


MINIMAL = {
    "seed": 7,
    "population": {"n": 12},
    "dataset": {"counts": {"mean_samples": 40, "min_count": 10}},
    "training": {"target_loss": 1.6, "max_rounds": 50},
    # shrink the spots where defaults assume a 100-device pool
    "estimation": {"probes": [[4, 4], [8, 8], [12, 12]]},
    "simulate": {"point": [4, 8]},
    "sweep": {"k_values": [1, 4, 12], "e_values": [4, 10]},
}


def test_defaults_round_trip():
    cfg = default_config()
    assert cfg.population.n == 100
    assert cfg.training.batch_size == 64
    assert cfg.sweep.k_values == (1, 5, 10, 20, 50, 100)
    assert cfg.gamma == 0.5


def test_parse_minimal_overrides():
    cfg = parse_config(MINIMAL)
    assert cfg.seed == 7
    assert cfg.population.n == 12
    assert cfg.dataset.mean_samples == 40
    assert cfg.training.target_loss == 1.6
    # untouched sections keep defaults
    assert cfg.estimation.f_a == 1.5


def test_unknown_keys_rejected():
    bad = dict(MINIMAL)
    bad["populaton"] = {"n": 5}
    with pytest.raises(ConfigError):
        parse_config(bad)
    bad2 = {"population": {"n": 10, "sigma": 3}}
    with pytest.raises(ConfigError):
        parse_config(bad2)


def test_type_errors_rejected():
    with pytest.raises(ConfigError):
        parse_config({"population": {"n": "many"}})
    with pytest.raises(ConfigError):
        parse_config({"gamma": 1.5})
    with pytest.raises(ConfigError):
        parse_config({"training": {"batch_size": 0}})


def test_cross_field_checks():
    with pytest.raises(ConfigError):
        parse_config({"population": {"n": 10}, "estimation": {"probes": [[20, 10]]}})
    with pytest.raises(ConfigError):
        parse_config({"population": {"n": 10}, "sweep": {"k_values": [1, 50]}})
    with pytest.raises(ConfigError):
        parse_config({"population": {"n": 10}, "simulate": {"point": [40, 10]}})


def test_load_config_yaml(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(MINIMAL))
    cfg = load_config(path)
    assert cfg == parse_config(MINIMAL)
    assert isinstance(cfg, ExperimentConfig)


def test_bound_section():
    cfg = parse_config({"bound": {"rho": 1234.0}})
    assert cfg.bound.rho == 1234.0
    full = parse_config({"bound": {"a0": 10.0, "b0": 0.1, "epsilon": 0.5}})
    assert full.bound.a0 == 10.0
    with pytest.raises(ConfigError):
        parse_config({"bound": {"b0": -0.1}})


def test_planted_estimation_section():
    cfg = parse_config({"estimation": {"planted": {"a0": 30.0, "b0": 0.01, "f_star": 0.3}}})
    assert cfg.estimation.planted is not None
    assert cfg.estimation.planted.f_star == 0.3


def test_training_section_to_training_config():
    cfg = parse_config({"training": {"eta0": 0.05, "lr_schedule": "multiplicative"}})
    tc = cfg.training.to_training_config()
    assert tc.eta0 == 0.05
    assert tc.lr_schedule == "multiplicative"
    with pytest.raises(ConfigError):
        parse_config({"training": {"lr_schedule": "cosine"}})


def test_build_runtime_synthetic():
    cfg = parse_config(MINIMAL)
    pop, ds, sim = build_runtime(cfg)
    assert pop.n_devices == 12
    assert ds.n_clients == 12
    # data weights in the population mirror the dataset sizes
    import numpy as np

    np.testing.assert_allclose(pop.data_weights, ds.data_weights)


def test_build_runtime_from_file(tmp_path):
    from fedcost.synthetic import generate_synthetic, save_dataset

    ds = generate_synthetic(1.0, 1.0, 4, counts=[25] * 4, seed=3)
    path = tmp_path / "pool.csv"
    save_dataset(ds, path)
    cfg = parse_config(
        {
            "population": {"n": 4},
            "dataset": {"kind": "file", "path": str(path)},
            "estimation": {"probes": [[2, 4], [4, 8]]},
            "simulate": {"point": [2, 4]},
            "sweep": {"k_values": [1, 4], "e_values": [4]},
        }
    )
    pop, loaded, sim = build_runtime(cfg)
    assert loaded.n_clients == 4
    assert loaded.total_samples == 100


def test_dataset_file_requires_path():
    with pytest.raises(ConfigError):
        parse_config({"dataset": {"kind": "file"}})
    with pytest.raises(ConfigError):
        parse_config({"dataset": {"kind": "mnist"}})


def test_config_immutable():
    cfg = default_config()
    with pytest.raises(dataclasses.FrozenInstanceError):
        cfg.seed = 9
