import csv
import io
import json

import pytest

from ddbench.harness import dumps_config, loads_curves, loads_schedule, ExperimentConfig
from ddbench.harness.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0
    ids = [r["id"] for r in csv.DictReader(io.StringIO(out))]
    assert "xy4" in ids and "uddx25" in ids


def test_schedule_verb(capsys, tmp_path):
    p = tmp_path / "s.json"
    code, _, _ = run(["schedule", "--seq", "xy4", "--T", "1e-5", "--sym", "s", "--d", "1e-8",
                      "--out", str(p)], capsys)
    assert code == 0
    s = loads_schedule(p.read_text())
    assert s.sequence == "xy4" and s.symmetry == "s" and s.reps >= 1


def test_schedule_overpacked_exit_2(capsys):
    code, _, err = run(["schedule", "--seq", "cdd3", "--T", "1e-7"], capsys)
    assert code == 2 and "error" in err


def test_unknown_sequence_exit_2(capsys):
    code, _, err = run(["simulate", "--seq", "nope", "--calibrations", "1"], capsys)
    assert code == 2 and "sequences[0]" in err


def test_bad_config_file_exit_2(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"sequences": ["xy4"], "whatever": 3}')
    code, _, err = run(["simulate", "--config", str(p)], capsys)
    assert code == 2 and "whatever" in err


def _simulate(tmp_path, name, capsys, extra=()):
    p = tmp_path / name
    code, _, _ = run(["simulate", "--seq", "free,xy4", "--calibrations", "2", "--T", "2e-5",
                      "--points", "4", "--shots", "512", "--seed", "7", "--out", str(p), *extra],
                     capsys)
    assert code == 0
    return p


def test_simulate_deterministic(tmp_path, capsys):
    a = _simulate(tmp_path, "a.csv", capsys).read_bytes()
    b = _simulate(tmp_path, "b.csv", capsys).read_bytes()
    assert a == b
    curves = loads_curves(a.decode())
    assert len(curves) == 2 * 6 * 2
    c = _simulate(tmp_path, "c.csv", capsys, ["--seed", "8"]).read_bytes()
    assert c != a


def test_simulate_workers_same_bytes(tmp_path, capsys):
    a = _simulate(tmp_path, "a.csv", capsys).read_bytes()
    b = _simulate(tmp_path, "b.csv", capsys, ["--workers", "2"]).read_bytes()
    assert a == b


def test_simulate_from_config(tmp_path, capsys):
    cfg = ExperimentConfig(sequences=("cpmg",), states="haar:2", T=10e-6, calibrations=1,
                           d_points=3, shots=64)
    p = tmp_path / "cfg.json"
    p.write_text(dumps_config(cfg))
    out = tmp_path / "h.csv"
    code, _, _ = run(["simulate", "--experiment", "haar", "--config", str(p), "--out", str(out)],
                     capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 2 * 3 * 2


def test_analyze_modes(tmp_path, capsys):
    data = _simulate(tmp_path, "a.csv", capsys)
    code, out, _ = run(["analyze", "ita", "--in", str(data)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 24 and all(0 < float(r["ita"]) <= 1.5 for r in rows)
    code, out, _ = run(["analyze", "boxstats", "--in", str(data), "--format", "json"], capsys)
    assert code == 0
    box = json.loads(out)
    assert {b["sequence"] for b in box} == {"free", "xy4"}
    code, out, _ = run(["analyze", "fit", "--in", str(data), "--resamples", "200",
                        "--format", "json"], capsys)
    assert code == 0
    assert len(json.loads(out)) == 24


def test_analyze_bad_csv(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("sequence,state,calibration,time_s,zeros,shots\nxy4,0,zero,0,1,1\n")
    code, _, err = run(["analyze", "ita", "--in", str(p)], capsys)
    assert code == 2 and "line 2" in err


def test_filter_and_theory(capsys):
    code, out, _ = run(["filter", "--seq", "hahn", "--T", "1.0", "--points", "5"], capsys)
    assert code == 0 and len(list(csv.DictReader(io.StringIO(out)))) == 5
    code, out, _ = run(["filter", "--seq", "cpmg", "--T", "1.0", "--chi", "--spectrum",
                        "lorentzian", "--cutoff", "2.0", "--format", "json"], capsys)
    assert code == 0 and json.loads(out)[0]["chi"] > 0
    code, out, _ = run(["filter", "--seq", "cpmg", "--T", "1.0", "--chi", "--cutoff", "2.0"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["chi"]) > 0 and float(row["coherence"]) < 1
    code, out, _ = run(["theory", "--nopt", str(4.0 ** -4), "--format", "json"], capsys)
    assert json.loads(out)[0]["n_opt"] == 3
    code, out, _ = run(["theory", "--kind", "xy4", "--J", "0.1", "--eps", "0.2", "--tau", "0.01",
                        "--format", "json"], capsys)
    assert json.loads(out)[0]["eta"] == pytest.approx(1.606e-5, rel=1e-3)


def test_numerical_failure_exit_3(capsys):
    code, _, err = run(["filter", "--seq", "cpmg", "--T", "1.0", "--chi", "--spectrum",
                        "one_over_f", "--omega-min", "1e-12", "--cutoff", "1e9"], capsys)
    assert code == 3 and "numerical" in err


def test_fit_on_default_grid(tmp_path, capsys):
    p = tmp_path / "d.csv"
    assert main(["simulate", "--seq", "free,xy4", "--calibrations", "2", "--out", str(p)]) == 0
    code, out, _ = run(["analyze", "fit", "--in", str(p), "--dt", "6.25e-6", "--resamples", "200"],
                       capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 24
    for r in rows:
        if r["accepted"] == "True":
            assert float(r["lam"]) > 0 and float(r["alpha"]) > 0
