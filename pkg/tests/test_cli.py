"""Command-line front end: every subcommand, exit codes, replay determinism."""

import json
import os

import pytest
import yaml

from fedcost.cli import (
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_UNREACHABLE,
    main,
)

SMALL = {
    "seed": 20240601,
    "gamma": 0.5,
    "population": {"n": 12},
    "dataset": {"counts": {"mean_samples": 50, "min_count": 20}},
    # slow persistent learning rate: loss crossings land in distinct rounds and
    # longer local work costs extra rounds, so probe inversion stays plausible
    "training": {"target_loss": 1.6, "max_rounds": 250, "eta0": 0.01,
                 "lr_schedule": "multiplicative", "lr_decay": 0.998},
    "bound": {"rho": 400.0},
    "estimation": {"probes": [[4, 2], [8, 4], [12, 6]], "f_a": 1.8, "f_b": 1.4, "max_rounds": 400},
    "simulate": {"point": [4, 8], "n_seeds": 2},
    "sweep": {"k_values": [1, 4, 12], "e_values": [4, 10], "seeds_per_cell": 2},
    "tradeoff": {"gammas": [0.0, 1.0], "seeds_per_gamma": 2},
}


def write_cfg(tmp_path, overrides=None, name="exp.yaml"):
    raw = json.loads(json.dumps(SMALL))
    for key, val in (overrides or {}).items():
        if isinstance(val, dict):
            raw.setdefault(key, {}).update(val)
        else:
            raw[key] = val
    path = tmp_path / name
    path.write_text(yaml.safe_dump(raw))
    return path


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_missing_config_is_config_error(tmp_path, capsys):
    rc = main(["optimize", "--config", str(tmp_path / "nope.yaml")])
    assert rc == EXIT_CONFIG


def test_bad_yaml_is_config_error(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("population: {n: 10, unknown_knob: 3}\n")
    assert main(["optimize", "--config", str(p)]) == EXIT_CONFIG


def test_optimize_writes_trace(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    rc = main(["optimize", "--config", str(cfg), "--output", str(out)])
    assert rc == EXIT_OK
    trace = out / "acs_trace.csv"
    assert trace.exists()
    lines = trace.read_text().strip().splitlines()
    assert lines[0] == "iteration,k,e,objective"
    assert len(lines) >= 3
    text = capsys.readouterr().out
    assert "k*=" in text


def test_optimize_json_mode(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    rc = main(["optimize", "--config", str(cfg), "--output", str(tmp_path / "o"), "--json"])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["converged"] is True
    assert 1 <= payload["k_star"] <= 12


def test_optimize_without_rho_fails_config(tmp_path):
    cfg = write_cfg(tmp_path, {"bound": {"rho": None}})
    rc = main(["optimize", "--config", str(cfg), "--output", str(tmp_path / "o")])
    assert rc == EXIT_CONFIG


def test_estimate_planted_mode(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        {"estimation": {"planted": {"a0": 30.0, "b0": 0.05, "f_star": 0.4}}},
    )
    out = tmp_path / "est"
    rc = main(["estimate", "--config", str(cfg), "--output", str(out), "--json"])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["rho"] == pytest.approx(600.0, rel=1e-6)
    assert (out / "estimation_samples.csv").exists()


def test_estimate_probe_mode_runs(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "est"
    rc = main(["estimate", "--config", str(cfg), "--output", str(out), "--json"])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["rho"] > 0
    assert payload["pairs_used"] >= 1
    lines = (out / "estimation_samples.csv").read_text().strip().splitlines()
    assert lines[0] == "k,e,rounds_fa,rounds_fb,seed"
    assert len(lines) == 4
    # probing effort is accounted as rounds-to-f_b times local iterations
    rows = [line.split(",") for line in lines[1:]]
    expected = sum(float(r[3]) * float(r[1]) for r in rows)
    assert payload["overhead_iterations"] == pytest.approx(expected)


def test_estimate_unreachable_probe_exit(tmp_path):
    cfg = write_cfg(tmp_path, {"estimation": {"f_b": 0.0001, "max_rounds": 30}})
    rc = main(["estimate", "--config", str(cfg), "--output", str(tmp_path / "e")])
    assert rc == EXIT_UNREACHABLE


def test_estimate_same_round_crossing_exit(tmp_path, capsys):
    # fast learning rate squeezes both thresholds into one round: estimation
    # cannot separate them and must fail cleanly, not crash
    cfg = write_cfg(
        tmp_path,
        {
            "training": {"eta0": 0.1},
            "estimation": {"probes": [[12, 12]], "f_a": 1.9, "f_b": 1.8},
        },
    )
    rc = main(["estimate", "--config", str(cfg), "--output", str(tmp_path / "e")])
    assert rc == EXIT_NO_CONVERGENCE
    assert "same round" in capsys.readouterr().err


def test_simulate_writes_per_seed_runs(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "sim"
    rc = main(["simulate", "--config", str(cfg), "--output", str(out)])
    assert rc == EXIT_OK
    for i in range(2):
        run_file = out / f"fed_run_seed{i}.csv"
        lines = run_file.read_text().strip().splitlines()
        assert lines[0] == "round,loss,round_time_s,round_energy_j,cumulative_time_s,cumulative_energy_j"
        assert len(lines) >= 2


def test_simulate_unreachable_exit(tmp_path):
    cfg = write_cfg(tmp_path, {"training": {"target_loss": 0.0001, "max_rounds": 20}})
    rc = main(["simulate", "--config", str(cfg), "--output", str(tmp_path / "s")])
    assert rc == EXIT_UNREACHABLE


def test_sweep_csv_shape_and_argmin(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "sw"
    rc = main(["sweep", "--config", str(cfg), "--output", str(out)])
    assert rc == EXIT_OK
    lines = (out / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "k,e,seeds,completed,mean_rounds,mean_time_s,mean_energy_j,mean_weighted_cost,is_argmin"
    assert len(lines) == 1 + 3 * 2
    argmins = [ln for ln in lines[1:] if ln.endswith(",1")]
    assert len(argmins) == 1


def test_tradeoff_csv(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "to"
    rc = main(["tradeoff", "--config", str(cfg), "--output", str(out)])
    assert rc == EXIT_OK
    lines = (out / "tradeoff.csv").read_text().strip().splitlines()
    assert lines[0].startswith("gamma,k_star,e_star,")
    assert len(lines) == 3


def test_seed_and_gamma_overrides(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    rc = main(["optimize", "--config", str(cfg), "--output", str(tmp_path / "a"),
               "--gamma", "1.0", "--json"])
    assert rc == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["k_star"] == 1  # energy-only design keeps one client per round


def test_replay_byte_identical_all_commands(tmp_path):
    # same config + seed twice -> identical bytes for every artifact
    cfg = write_cfg(tmp_path)
    for cmd in ("estimate", "optimize", "simulate", "sweep", "tradeoff"):
        out_a = tmp_path / f"{cmd}_a"
        out_b = tmp_path / f"{cmd}_b"
        assert main([cmd, "--config", str(cfg), "--output", str(out_a)]) == EXIT_OK
        assert main([cmd, "--config", str(cfg), "--output", str(out_b)]) == EXIT_OK
        names_a = sorted(os.listdir(out_a))
        names_b = sorted(os.listdir(out_b))
        assert names_a == names_b and names_a
        for name in names_a:
            assert read(out_a / name) == read(out_b / name), f"{cmd}/{name} differs"


def test_sweep_parallel_matches_serial(tmp_path):
    cfg = write_cfg(tmp_path)
    out1 = tmp_path / "serial"
    out2 = tmp_path / "par"
    assert main(["sweep", "--config", str(cfg), "--output", str(out1)]) == EXIT_OK
    assert main(["sweep", "--config", str(cfg), "--output", str(out2), "--workers", "2"]) == EXIT_OK
    assert read(out1 / "sweep.csv") == read(out2 / "sweep.csv")
