import json
import math

import numpy as np
import pytest

from ddbench import seqlib
from ddbench.analysis import DecayCurve
from ddbench.dynamics import phase_aligned_distance, sequence_unitary
from ddbench.harness import (
    ConfigError, DeviceSpec, ExperimentConfig, FormatError, config_from_dict, d_grid,
    default_time_grid, dumps_config, dumps_curves, dumps_schedule, haar_state, loads_config,
    loads_curves, loads_schedule, pauli_states, prepare_sequence, run_haar_interval_experiment,
    run_pauli_experiment, sample_shots, task_seed, virtualize_y,
)
from ddbench.scheduler import dense, render
from ddbench.seqlib import VIRTUAL_Z


def test_sample_shots_examples():
    assert sample_shots(1.0, 8192, 0) == 8192
    assert sample_shots(0.0, 8192, 0) == 0
    assert sample_shots(0.3, 100, 5) == sample_shots(0.3, 100, 5)


def test_sample_shots_binomial():
    z = np.array([sample_shots(0.5, 8192, s) for s in range(10_000)])
    assert np.all(np.abs(z - 4096) <= 4 * math.sqrt(8192 * 0.25))
    assert abs(z.mean() / 4096 - 1) < 0.005


def test_sample_shots_tolerance():
    with pytest.warns(RuntimeWarning):
        assert sample_shots(1 + 1e-13, 10, 0) == 10
    with pytest.raises(ValueError):
        sample_shots(1 + 1e-9, 10, 0)
    with pytest.raises(ValueError):
        sample_shots(-1e-9, 10, 0)


def test_haar_state_deterministic_and_normalized():
    a, b = haar_state(3, 7), haar_state(3, 7)
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1.0)
    assert not np.array_equal(a, haar_state(3, 8))


def test_haar_moments():
    z = np.empty(100_000)
    for i in range(z.size):
        v = haar_state(1, i)
        z[i] = abs(v[0]) ** 2 - abs(v[1]) ** 2
    assert abs(z.mean()) < 0.01
    assert abs((z ** 2).mean() - 1 / 3) < 0.01


def test_pauli_states():
    s = pauli_states()
    assert list(s) == ["0", "1", "+", "-", "+i", "-i"]
    for a in s.values():
        assert np.linalg.norm(a) == pytest.approx(1.0)


def test_task_seed_keys():
    a = task_seed(1, "x", 2).generate_state(2)
    assert np.array_equal(a, task_seed(1, "x", 2).generate_state(2))
    assert not np.array_equal(a, task_seed(1, "y", 2).generate_state(2))


def test_default_time_grid():
    g = default_time_grid()
    assert len(g) == 13 and g[0] == 0.0 and g[-1] == pytest.approx(75e-6)


def test_config_validation_names_field():
    with pytest.raises(ConfigError) as e:
        ExperimentConfig(sequences=("xy4", "nope"))
    assert e.value.field == "sequences[1]"
    for kw, field in [({"shots": 0}, "shots"), ({"states": "haar:0"}, "states"),
                      ({"calibrations": 0}, "calibrations"), ({"z_mode": "x"}, "z_mode")]:
        with pytest.raises(ConfigError) as e:
            ExperimentConfig(**kw)
        assert e.value.field == field
    with pytest.raises(ConfigError) as e:
        DeviceSpec.from_dict({"T1": 1e-4, "bogus": 1})
    assert e.value.field == "device.bogus"


def test_free_ground_state_flat():
    cfg = ExperimentConfig(sequences=("free",), calibrations=2, seed=3)
    res = run_pauli_experiment(cfg)
    for c in res.curves:
        if c.state_label == "0":
            assert min(c.fidelities) > 0.999


def test_free_excited_state_t1():
    T1 = 100e-6
    dev = DeviceSpec(T1=T1, T2=2 * T1, zz_hz=0.0, coupling_hz=0.0, jitter=0.0)
    cfg = ExperimentConfig(sequences=("free",), calibrations=1, device=dev, seed=1)
    (c,) = [c for c in run_pauli_experiment(cfg).curves if c.state_label == "1"]
    for t, z, n in zip(c.times, c.zeros, c.shots):
        p = math.exp(-t / T1)
        assert abs(z - n * p) <= 4 * math.sqrt(n * p * (1 - p)) + 1e-9


def test_xy4_beats_free():
    cfg = ExperimentConfig(sequences=("free", "xy4"), calibrations=3, seed=2)
    res = run_pauli_experiment(cfg)

    def final_median(name):
        return np.median([c.fidelities[-1] for c in res.by_sequence(name)])

    assert final_median("xy4") > final_median("free")


def test_pauli_output_shape_and_conservation():
    cfg = ExperimentConfig(sequences=("xy4", "uddx3"), calibrations=2,
                           times=default_time_grid(10e-6, 4))
    res = run_pauli_experiment(cfg)
    assert len(res.curves) == 2 * 6 * 2
    for c in res.curves:
        assert c.times == cfg.times
        assert all(0 <= f <= 1 for f in c.fidelities)


def test_pauli_skips_overpacked_times():
    cfg = ExperimentConfig(sequences=("cdd3",), calibrations=1, times=(0.0, 1e-6, 20e-6))
    res = run_pauli_experiment(cfg)
    assert [r["time_s"] for r in res.skipped] == [1e-6]
    assert all(c.times == (0.0, 20e-6) for c in res.curves)


def test_pauli_rejects_haar_states():
    with pytest.raises(ConfigError):
        run_pauli_experiment(ExperimentConfig(states="haar:3"))


def test_d_grid_eight_values():
    seq = seqlib.build("cpmg")
    g = d_grid(seq, 75e-6, 35.56e-9)
    assert len(g) == 8 and g[0] == 0.0
    assert g[-1] == pytest.approx(37.5e-6 - 35.56e-9)
    assert dense(seq, 75e-6, 35.56e-9, g[-1]).reps == 1


def test_symmetry_schedules():
    seq = seqlib.build("xy4")
    assert dense(seq, 20e-6, 35e-9, 0.0, "a").events == dense(seq, 20e-6, 35e-9, 0.0, "s").events
    assert dense(seq, 20e-6, 35e-9, 1e-6, "a").events != dense(seq, 20e-6, 35e-9, 1e-6, "s").events


def test_haar_experiment_rows():
    cfg = ExperimentConfig(sequences=("cpmg",), states="haar:3", T=20e-6, calibrations=2,
                           d_points=4)
    res = run_haar_interval_experiment(cfg)
    assert len(res.rows) == 2 * 4 * 3 * 2
    by_sym = {}
    for r in res.rows:
        if r["d_index"] == 0:
            by_sym.setdefault(r["symmetry"], []).append((r["state"], r["calibration"], r["zeros"]))
    assert sorted(by_sym["a"]) == sorted(by_sym["s"])
    idx, med = res.best_d("cpmg", "a")
    assert 0 <= idx < 4 and 0 <= med <= 1
    assert len(res.summary()) == 2 * 4


def test_haar_too_short_T():
    with pytest.raises(ConfigError) as e:
        run_haar_interval_experiment(ExperimentConfig(sequences=("cdd3",), T=1e-6, states="haar:1"))
    assert e.value.field == "T"


def test_pauli_subset_of_haar():
    T = 15e-6
    base = ExperimentConfig(sequences=("xy4",), calibrations=2, seed=9, T=T,
                            times=default_time_grid(T, 3), d_points=2, symmetries=("a",))
    pauli = run_pauli_experiment(base)
    haar = run_haar_interval_experiment(base)
    want = sorted((c.state_label, c.calibration_id, c.zeros[-1]) for c in pauli.curves)
    got = sorted((r["state"], r["calibration"], r["zeros"]) for r in haar.rows if r["d_index"] == 0)
    assert got == want


@pytest.mark.parametrize("name", ["xy4", "edd", "ur6", "rga8a", "qdd2_2"])
def test_virtualize_y_same_ideal_product(name):
    seq = seqlib.build(name)
    v = virtualize_y(seq)
    assert phase_aligned_distance(sequence_unitary(v.pulses), sequence_unitary(seq.pulses)) < 1e-12
    assert math.fsum(v.fractions) == pytest.approx(1.0)
    n_y = sum(1 for p in seq.pulses if p.kind == "physical" and abs(math.cos(p.phi)) < 1e-12)
    assert sum(p.kind == VIRTUAL_Z for p in v.pulses) - sum(p.kind == VIRTUAL_Z for p in seq.pulses) == n_y


def test_virtual_mode_runs():
    cfg = ExperimentConfig(sequences=("xy4",), calibrations=1, z_mode="virtual",
                           times=default_time_grid(10e-6, 3))
    res = run_pauli_experiment(cfg)
    assert len(res.curves) == 6
    assert prepare_sequence("xy4", "virtual").n_physical == 4


def test_schedule_round_trip():
    for name in ("xy4", "uddx4", "qdd1_1", "cdd2"):
        s = render(seqlib.build(name), 20e-6, 35.56e-9, 1e-8, "s", 2)
        assert loads_schedule(dumps_schedule(s)) == s


def test_schedule_errors_name_field():
    s = render(seqlib.build("xy4"), 20e-6, 35.56e-9)
    d = json.loads(dumps_schedule(s))
    del d["events"][2]["phi"]
    with pytest.raises(FormatError, match=r"events\[2\]"):
        loads_schedule(json.dumps(d))
    with pytest.raises(FormatError, match="line"):
        loads_schedule("{\n oops")


def test_curves_round_trip():
    c = [DecayCurve((0.0, 1e-6, 2.5e-6), (8192, 8000, 7001), (8192,) * 3, "+i", "xy4", 4),
         DecayCurve((0.0, 1e-6), (10, 3), (10, 10), "0", "free", 0)]
    back = loads_curves(dumps_curves(c))
    assert sorted(back, key=lambda x: x.sequence_label) == sorted(c, key=lambda x: x.sequence_label)


def test_curves_errors_carry_line():
    text = "sequence,state,calibration,time_s,zeros,shots\nxy4,0,0,0.0,10,10\nxy4,0,0,1e-6,x,10\n"
    with pytest.raises(FormatError, match="line 3.*zeros"):
        loads_curves(text)
    with pytest.raises(FormatError, match="line 1"):
        loads_curves("a,b\n")


def test_config_round_trip_and_unknown_sequence():
    cfg = ExperimentConfig(sequences=("xy4", "cdd2"), states="haar:5", seed=12, shots=100,
                           device=DeviceSpec(T1=90e-6))
    assert loads_config(dumps_config(cfg)) == cfg
    d = json.loads(dumps_config(cfg))
    d["sequences"] = ["xy4", "bogus"]
    with pytest.raises(ConfigError) as e:
        config_from_dict(d)
    assert e.value.field == "sequences[1]"
    d = json.loads(dumps_config(cfg))
    d["colour"] = 1
    with pytest.raises(ConfigError) as e:
        config_from_dict(d)
    assert e.value.field == "colour"
