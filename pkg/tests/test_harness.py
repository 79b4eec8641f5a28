"""Run harness: determinism, feasibility gating, config files, CLI."""

import json
import os

import numpy as np
import pytest

from lislam.cli import main
from lislam.harness import (
    RunConfig,
    check_preconditions,
    config_from_dict,
    csv_header,
    initial_az,
    load_config,
    reference_config,
    run,
)
from lislam.observer import Gains
from lislam.system import GnssSchedule


def short_config(**overrides):
    base = dict(horizon_s=0.5, dt=1e-3, log_interval=50)
    base.update(overrides)
    return reference_config(**base)


# --- run() -------------------------------------------------------------------

def test_run_is_deterministic():
    a = run(short_config(seed=3))
    b = run(short_config(seed=3))
    assert a.csv_text == b.csv_text
    sa = {k: v for k, v in a.summary.items() if k != "wall_clock_s"}
    sb = {k: v for k, v in b.summary.items() if k != "wall_clock_s"}
    assert sa == sb


def test_zero_horizon_gives_header_only_csv():
    r = run(short_config(horizon_s=0.0))
    lines = r.csv_text.strip().split("\n")
    assert len(lines) == 1
    assert lines[0].split(",") == csv_header(5)
    assert r.summary["steps"] == 0
    assert r.summary["pos_err_initial"] == pytest.approx(np.sqrt(2.0))
    assert r.summary["max_lyap_increase"] == 0.0


def test_csv_values_roundtrip_exactly():
    r = run(short_config())
    lines = r.csv_text.strip().split("\n")
    header = lines[0].split(",")
    first = dict(zip(header, lines[1].split(",")))
    assert float(first["pos_err"]) == r.rows[0].pos_err
    assert float(first["lyap"]) == r.rows[0].lyap
    assert int(first["sigma"]) == r.rows[0].sigma


def test_csv_row_count_matches_log_interval():
    r = run(short_config(horizon_s=0.1, dt=1e-3, log_interval=10))
    lines = r.csv_text.strip().split("\n")
    # rows at k = 0, 10, ..., 100 -> 11 rows plus the header
    assert len(lines) == 12


def test_run_refuses_infeasible_gains():
    weak = Gains(kx=1.0, kp=1e-4, q=0.01, T=10.0, tau=0.5)
    cfg = short_config(gains=weak)
    assert check_preconditions(cfg)
    with pytest.raises(ValueError, match="refusing to run"):
        run(cfg)


def test_run_refuses_starved_schedule():
    starved = GnssSchedule("windows", T=10.0, tau=5.0, windows=[(0.0, 2.0)])
    with pytest.raises(ValueError, match="excitation"):
        run(short_config(schedule=starved))


def test_allow_infeasible_override_runs_anyway():
    starved = GnssSchedule("windows", T=10.0, tau=5.0, windows=[(0.0, 2.0)])
    r = run(short_config(schedule=starved, allow_infeasible=True))
    assert r.summary["steps"] == 500


def test_short_run_is_healthy():
    r = run(short_config())
    s = r.summary
    # the verbatim A_Z(0) is only quoted to ~5 digits and the splitting
    # integrator leaves an O(dt) residual in the landmark template blocks,
    # so small template deviations are flagged -- but nothing else may be.
    assert all("deviates" in v for v in s["violations"])
    assert s["sp_dev_max"] < 1e-3
    assert s["max_lyap_increase"] <= 0.0
    assert s["lyap_final"] < s["lyap_initial"]
    assert s["min_sv_az_min"] > 1e-6
    assert s["schur_det_min"] > 243.74


def test_factorized_az_source_matches_reference_scalars():
    from lislam.gains import p_from_az

    cfg = short_config(az_source="factorized")
    p = p_from_az(initial_az(cfg))
    assert p.s_x == pytest.approx(52.0, abs=1e-2)
    assert np.abs(p.S_p - 10.0 * np.eye(5)).max() < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(dt=0.0)
    with pytest.raises(ValueError):
        RunConfig(horizon_s=-1.0)
    with pytest.raises(ValueError):
        RunConfig(log_interval=0)
    with pytest.raises(ValueError):
        RunConfig(trajectory="spiral")
    with pytest.raises(ValueError):
        RunConfig(az_source="guess")


def test_result_write(tmp_path):
    r = run(short_config())
    csv_path, json_path = r.write(tmp_path / "out")
    assert os.path.exists(csv_path) and os.path.exists(json_path)
    with open(json_path) as f:
        s = json.load(f)
    assert s["steps"] == r.summary["steps"]
    with open(csv_path) as f:
        assert f.read() == r.csv_text


# --- configuration files -----------------------------------------------------

def test_config_from_dict_defaults():
    cfg = config_from_dict({})
    ref = RunConfig()
    assert (cfg.dt, cfg.horizon_s, cfg.seed) == (ref.dt, ref.horizon_s, ref.seed)
    assert cfg.gains == ref.gains
    assert np.array_equal(cfg.params.landmarks0, ref.params.landmarks0)
    assert cfg.schedule.sigma(7.0) == ref.schedule.sigma(7.0) == 1


def test_config_from_dict_overrides():
    cfg = config_from_dict({
        "gravity": 9.7,
        "gains": {"kp": 3.0},
        "schedule": {"mode": "always-on"},
        "dt": 1e-3,
        "horizon_s": 2.0,
        "seed": 7,
        "az_source": "factorized",
        "noise": {"gnss_std": 0.01},
    })
    assert cfg.params.g == 9.7
    assert cfg.gains.kp == 3.0
    assert cfg.schedule.sigma(0.0) == 1
    assert cfg.dt == 1e-3 and cfg.seed == 7
    assert cfg.noise.gnss_std == 0.01


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(
        "dt: 0.001\nhorizon_s: 1.5\ngains:\n  kp: 2.5\n"
        "schedule:\n  mode: periodic\n  start_s: 5.0\n"
    )
    cfg = load_config(str(path))
    assert cfg.dt == 0.001 and cfg.horizon_s == 1.5
    assert cfg.gains.kp == 2.5


def test_load_config_rejects_non_mapping(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError, match="mapping"):
        load_config(str(path))


# --- CLI ---------------------------------------------------------------------

def test_cli_simulate_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["simulate", "--horizon", "0.2", "--dt", "0.001",
               "--log-interval", "40", "--out", str(out)])
    assert (out / "metrics.csv").exists() and (out / "summary.json").exists()
    captured = capsys.readouterr().out
    assert "final errors" in captured
    # the template-deviation monitors trip (see test_short_run_is_healthy),
    # which the CLI reports through a nonzero exit status
    assert rc == 1 and "monitor violation" in captured


def test_cli_simulate_missing_config_exits_nonzero():
    with pytest.raises(SystemExit, match="not found"):
        main(["simulate", "--config", "/nonexistent/x.yaml"])


def test_cli_check_gains(capsys):
    rc = main(["check-gains"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "feasible" in out and "margin" in out


def test_cli_check_gains_infeasible(tmp_path, capsys):
    path = tmp_path / "weak.yaml"
    path.write_text("gains:\n  kp: 0.0001\n  q: 0.01\n  tau: 0.5\n")
    rc = main(["check-gains", "--config", str(path)])
    assert rc == 1
    assert "infeasible" in capsys.readouterr().out


def test_cli_validate_schedule(capsys):
    rc = main(["validate-schedule"])
    assert rc == 0
    assert "TPE: yes" in capsys.readouterr().out


def test_cli_validate_schedule_rejects_gap(tmp_path, capsys):
    path = tmp_path / "gap.yaml"
    path.write_text(
        "schedule:\n  mode: windows\n  windows:\n"
        "  - [0.0, 5.0]\n  - [25.0, 30.0]\n"
    )
    rc = main(["validate-schedule", "--config", str(path)])
    assert rc == 1
    assert "TPE: no" in capsys.readouterr().out


def test_cli_selftest(capsys):
    rc = main(["selftest"])
    assert rc == 0
    assert "all selftests passed" in capsys.readouterr().out
