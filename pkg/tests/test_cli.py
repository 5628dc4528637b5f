import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from ringcurrent import cli, grape, io
from ringcurrent.analytics import beat_frequency
from ringcurrent.errors import NonFiniteGradientError
from ringcurrent.ring import RingSpec


def write_config(tmp_path, **cfg):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg))
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


def run(tmp_path, command, name="out", extra=(), **cfg):
    out = tmp_path / name
    args = [command, "--config", str(write_config(tmp_path, **cfg)), "--out", str(out), *extra]
    return cli.main(args), out


def test_optimize_single_current(tmp_path):
    code, out = run(tmp_path, "optimize", ring={"L": 8}, target={"windings": [1]})
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["fidelity_at_switch_off"] >= 0.98
    _, I = read_csv(out / "current.csv")
    after = I[I[:, 0] >= summary["t_switch_off"] - 1e-12, 1]
    assert np.ptp(after) < 1e-10
    assert I[-1, 0] == pytest.approx(3.0)
    manifest = json.loads((out / "manifest.json").read_text())
    assert io.verify_manifest(out, manifest) == []
    header, P = read_csv(out / "populations.csv")
    assert header == ["time"] + [f"P{j}" for j in range(1, 9)]
    assert np.allclose(P[:, 1:].sum(axis=1), 1, atol=1e-12)


def test_optimize_two_winding_rabi_period(tmp_path):
    code, out = run(tmp_path, "optimize", ring={"L": 8}, target={"windings": [1, 2]}, horizon=8.0)
    assert code == 0
    _, F = read_csv(out / "fidelity.csv")
    t_off = json.loads((out / "summary.json").read_text())["t_switch_off"]
    after = F[F[:, 0] >= t_off - 1e-12]
    omega = abs(beat_frequency(RingSpec.unit_hopping(8), 1, 2))
    period = 2 * np.pi / omega
    first = after[after[:, 0] - t_off <= period]
    minimum = first[np.argmin(first[:, 1]), 0] - t_off
    assert minimum == pytest.approx(period / 2, abs=0.011)
    assert first[:, 1].min() < 0.02
    # fidelity returns to its switch-off value one beat period later
    k = int(round(period / 0.01))
    assert after[k, 1] == pytest.approx(after[0, 1], abs=5e-3)


def test_optimize_full_superposition_has_no_current(tmp_path):
    code, out = run(tmp_path, "optimize", ring={"L": 8}, target={"windings": list(range(1, 9))})
    assert code == 0
    t_off = json.loads((out / "summary.json").read_text())["t_switch_off"]
    _, I = read_csv(out / "current.csv")
    assert np.max(np.abs(I[I[:, 0] >= t_off - 1e-12, 1])) < 0.02


def test_optimize_reports_non_convergence(tmp_path):
    code, out = run(tmp_path, "optimize", grape={"max_iters": 1})
    assert code == cli.EXIT_NOT_CONVERGED
    assert (out / "report.json").exists()
    assert json.loads((out / "report.json").read_text())["converged"] is False


def test_config_errors(tmp_path, capsys):
    code, _ = run(tmp_path, "optimize", rings={"L": 8})
    assert code == cli.EXIT_CONFIG
    code, _ = run(tmp_path, "optimize", timing={"T_targ": 1.0, "dt": 0.03})
    assert code == cli.EXIT_CONFIG
    code, _ = run(tmp_path, "optimize", ring={"L": 2})
    assert code == cli.EXIT_CONFIG
    code, _ = run(tmp_path, "sweep", sweep={"kind": "disorder", "grid": []})
    assert code == cli.EXIT_CONFIG
    assert cli.main(["analytics", "--config", str(tmp_path / "missing.yaml")]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NonFiniteGradientError("gradient contains non-finite entries")

    monkeypatch.setattr(grape, "optimize", boom)
    code, _ = run(tmp_path, "optimize")
    assert code == cli.EXIT_NUMERICAL


def test_rerun_is_bitwise_reproducible(tmp_path):
    cfg = dict(ring={"L": 6}, target={"windings": [1, 2]}, timing={"T_targ": 0.5, "dt": 0.01},
               grape={"init_mode": "uniform", "init_width": 0.3, "max_iters": 50},
               noise={"W": 1.0, "n_realizations": 8, "rng_seed": 2},
               sweep={"kind": "disorder", "grid": [0.0, 1.0]})
    _, a = run(tmp_path, "sweep", name="a", **cfg)
    _, b = run(tmp_path, "sweep", name="b", **cfg)
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["files"] == mb["files"]
    assert ma["seeds"] == {"grape": 0, "noise": 2}


def test_seed_flag_overrides_config(tmp_path):
    code, out = run(tmp_path, "analytics", extra=("--seed", "17"), grape={"rng_seed": 3})
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seeds"] == {"grape": 17, "noise": 17}


def test_analytics_records(tmp_path, capsys):
    code, out = run(tmp_path, "analytics", name="a", ring={"L": 8}, target={"windings": [1, 2]})
    assert code == 0
    rec = json.loads((out / "analytics.json").read_text())
    pair = rec["pairs"]["1,2"]
    assert pair["qsl"]["tau_mt"] == pytest.approx(np.pi / abs(pair["omega"]), rel=1e-14)
    assert json.loads(capsys.readouterr().out) == rec
    _, out = run(tmp_path, "analytics", name="b", ring={"L": 8}, target={"windings": list(range(1, 9))})
    assert json.loads((out / "analytics.json").read_text())["superposition_current"] == pytest.approx(0, abs=1e-15)
    _, out = run(tmp_path, "analytics", name="c", ring={"L": 3}, target={"windings": [1]})
    assert json.loads((out / "analytics.json").read_text())["eigenenergies"]["1"] == pytest.approx(-4.0, rel=1e-14)


def test_jnn_mhz_conversion_record(tmp_path):
    code, out = run(tmp_path, "analytics", extra=("--jnn-mhz", "2.5"))
    units = json.loads((out / "manifest.json").read_text())["units"]
    assert units["J_nn_MHz"] == 2.5
    assert units["time_unit_us"] == pytest.approx(1 / (2 * np.pi * 2.5))


def test_json_format(tmp_path):
    code, out = run(tmp_path, "optimize", extra=("--format", "json"), timing={"T_targ": 0.5, "dt": 0.01})
    assert code == 0
    data = json.loads((out / "populations.json").read_text())
    assert data["columns"][0] == "P1" and len(data["times"]) == len(data["values"])
    series = json.loads((out / "fidelity.json").read_text())
    assert list(series) == sorted(series)


def _movie(tmp_path, name, windings):
    code, out = run(tmp_path, "population-movie", name=name, ring={"L": 8}, target={"windings": windings}, horizon=4.0)
    assert code == 0
    _, tracking = read_csv(out / "peak_tracking.csv")
    _, P = read_csv(out / "population_movie.csv")
    return tracking, P


def test_population_movie_zero_plus_winding(tmp_path):
    for ell in (1, 2, 3):
        tracking, _ = _movie(tmp_path, f"m{ell}", [ell, 0])
        assert np.all(tracking[:, 1] == ell)


def test_population_movie_mirror_and_flat(tmp_path):
    fwd, _ = _movie(tmp_path, "f", [1, 2])
    rev, _ = _movie(tmp_path, "r", [-1, -2])
    # opposite windings send the peak around the ring in opposite directions
    def travelled(track):
        steps = (np.diff(track[:, 2]) + 4) % 8 - 4
        return steps.sum()

    assert travelled(fwd) <= -8
    assert abs(travelled(fwd) + travelled(rev)) <= 1
    flat_tracking, P = _movie(tmp_path, "flat", [1])
    t_off = flat_tracking[0, 0]
    after = P[P[:, 0] >= t_off - 1e-12, 1:]
    # residual infidelity 1 - F <= 1e-3 bounds the ripple by about 2 sqrt((1 - F) / L)
    assert np.max(np.abs(after - 1 / 8)) < 2 * np.sqrt(1e-3 / 8) + 1e-3


@pytest.mark.parametrize("kind,grid", [("target_time", [0.4, 0.5]), ("dt", [20, 10]), ("dephasing", [0.0, 0.1])])
def test_sweeps_write_artifacts(tmp_path, kind, grid):
    code, out = run(tmp_path, "sweep", ring={"L": 6}, timing={"T_targ": 0.5, "dt": 0.01},
                    sweep={"kind": kind, "grid": grid}, horizon=2.0)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["failures"] == []
    assert io.verify_manifest(out, manifest) == []
    assert any(kind.split("_")[0] in f for f in manifest["files"])


def test_sweep_failures_recorded(tmp_path):
    code, out = run(tmp_path, "sweep", ring={"L": 6}, timing={"T_targ": 0.5, "dt": 0.01},
                    noise={"W": 1.0, "n_realizations": 4, "rng_seed": 0},
                    sweep={"kind": "disorder", "grid": [0.5, -1.0]})
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert [f["grid_value"] for f in manifest["failures"]] == [-1.0]
    header, rows = read_csv(out / "disorder_at_target_vs_W.csv")
    assert rows[:, 0].tolist() == [0.5]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ringcurrent", "analytics", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["L"] == 8
