"""Pauli-state decay and Haar pulse-interval experiments in simulation."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .. import seqlib
from ..analysis import DecayCurve, quartile_summary
from ..dynamics import DynamicsError, PulseErrorModel, evolve_states, sequence_unitary
from ..scheduler import ASYMMETRIC, SYMMETRIC, ScheduleError, dense, max_delay, normalize_symmetry
from ..seqlib import PHYSICAL, VIRTUAL_Z, Pulse, SequenceIR
from .device import ConfigError, DeviceSpec, device_model, spectator_vector, task_seed
from .states import PAULI_LABELS, haar_state, pauli_states, sample_shots

TRACE_TOL = 1e-9
DEFAULT_DELTA = 35.56e-9
DEFAULT_T_MAX = 75e-6


def default_time_grid(t_max: float = DEFAULT_T_MAX, points: int = 12) -> tuple:
    """``t = 0`` plus ``points`` equally spaced times up to ``t_max``."""
    return tuple(float(x) for x in np.linspace(0.0, t_max, points + 1))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a simulated run (and its output bytes).

    ``states`` is ``"pauli6"`` or ``"haar:K"``. ``times`` drives the Pauli
    experiment; ``T`` and ``d_points``/``symmetries`` drive the Haar one.
    """
    sequences: tuple = ("free", "xy4")
    states: str = "pauli6"
    times: tuple = field(default_factory=default_time_grid)
    T: float = DEFAULT_T_MAX
    delta: float = DEFAULT_DELTA
    d_points: int = 8
    symmetries: tuple = (ASYMMETRIC, SYMMETRIC)
    shots: int = 8192
    calibrations: int = 10
    seed: int = 0
    device: DeviceSpec = field(default_factory=DeviceSpec)
    z_mode: str = "physical"
    eps_r: float = 0.0
    workers: int = 1

    def __post_init__(self):
        seqs = tuple(self.sequences)
        if not seqs:
            raise ConfigError("sequences", "at least one sequence is required")
        for i, name in enumerate(seqs):
            try:
                seqlib.build(name)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"sequences[{i}]", f"unknown sequence {name!r} ({exc})") from None
        object.__setattr__(self, "sequences", seqs)
        self.state_labels()  # validates
        times = tuple(float(t) for t in self.times)
        if not times or any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("times", "must be non-negative and strictly increasing")
        object.__setattr__(self, "times", times)
        if not self.T > 0:
            raise ConfigError("T", "must be positive")
        if self.delta < 0:
            raise ConfigError("delta", "must be non-negative")
        if self.d_points < 1:
            raise ConfigError("d_points", "must be at least 1")
        try:
            syms = tuple(normalize_symmetry(s) for s in self.symmetries)
        except ValueError as exc:
            raise ConfigError("symmetries", str(exc)) from None
        object.__setattr__(self, "symmetries", syms)
        if self.shots <= 0:
            raise ConfigError("shots", "must be positive")
        if self.calibrations < 1:
            raise ConfigError("calibrations", "must be at least 1")
        if self.z_mode not in ("physical", "virtual"):
            raise ConfigError("z_mode", "expected physical or virtual")
        if self.workers < 1:
            raise ConfigError("workers", "must be at least 1")
        if isinstance(self.device, dict):
            object.__setattr__(self, "device", DeviceSpec.from_dict(self.device))

    def state_labels(self) -> tuple:
        if self.states == "pauli6":
            return PAULI_LABELS
        kind, _, k = self.states.partition(":")
        if kind == "haar" and k.isdigit() and int(k) >= 1:
            return tuple(f"haar{i}" for i in range(int(k)))
        raise ConfigError("states", f"expected pauli6 or haar:K with K >= 1, got {self.states!r}")

    def state_vectors(self) -> dict:
        if self.states == "pauli6":
            return pauli_states()
        return {lab: haar_state(self.seed, i) for i, lab in enumerate(self.state_labels())}

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# sequence preparation

def virtualize_y(seq: SequenceIR) -> SequenceIR:
    """Replace each ``Y``-axis pi pulse by a virtual ``Z`` followed by an ``X`` pulse.

    ``X Z`` equals ``Y`` up to a global phase, so the ideal product is
    unchanged. The ``Z`` takes no time and gets a zero-width free period.
    """
    pulses, fracs = [], [seq.fractions[0]]
    times = [] if seq.times is not None else None
    for i, p in enumerate(seq.pulses):
        is_y = (p.kind == PHYSICAL and math.isclose(p.theta, math.pi)
                and math.isclose(math.cos(p.phi), 0.0, abs_tol=1e-12))
        if is_y:
            pulses += [Pulse(0.0, kind=VIRTUAL_Z), Pulse(0.0, math.pi, p.sign)]
            fracs += [0.0, seq.fractions[i + 1]]
            if times is not None:
                times += [seq.times[i], seq.times[i]]
        else:
            pulses.append(p)
            fracs.append(seq.fractions[i + 1])
            if times is not None:
                times.append(seq.times[i])
    return SequenceIR(seq.name, tuple(pulses), tuple(fracs), seq.uniform, seq.universal,
                      seq.family, None if times is None else tuple(times), dict(seq.params))


def prepare_sequence(name: str, z_mode: str = "physical") -> SequenceIR:
    seq = seqlib.build(name)
    return virtualize_y(seq) if z_mode == "virtual" else seq


# ---------------------------------------------------------------------------
# core simulation

def _joint_states(vectors: list, spec: DeviceSpec) -> np.ndarray:
    spect = spectator_vector(spec)
    out = []
    for v in vectors:
        psi = np.kron(v, spect)
        out.append(np.outer(psi, psi.conj()))
    return np.array(out)


def _system_part(rhos: np.ndarray) -> np.ndarray:
    k = rhos.shape[0]
    return np.einsum("kiaja->kij", rhos.reshape(k, 2, 2, 2, 2))


def survival(schedule, model, vectors: list, spec: DeviceSpec,
             err: PulseErrorModel) -> np.ndarray:
    """Survival probability of each state against its ideal noiseless image.

    Raises
    ------
    DynamicsError
        If a density operator loses trace beyond ``1e-9``.
    """
    rhos = _joint_states(vectors, spec)
    if schedule is not None:
        rhos = evolve_states(schedule, model, rhos, frame="rotating", err=err)
        u0 = sequence_unitary([ev.pulse for ev in schedule.events])
    else:
        u0 = np.eye(2, dtype=complex)
    sys = _system_part(rhos)
    tr = np.einsum("kii->k", sys).real
    if np.max(np.abs(tr - 1)) > TRACE_TOL:
        raise DynamicsError(f"trace drifted by {np.max(np.abs(tr - 1)):.3g}")
    out = np.empty(len(vectors))
    for i, v in enumerate(vectors):
        target = u0 @ v
        out[i] = np.vdot(target, sys[i] @ target).real
    if np.any(out < -1e-9) or np.any(out > 1 + 1e-9):
        raise DynamicsError("survival probability left [0, 1]")
    return np.clip(out, 0.0, 1.0)


def _shot_seed(cfg: ExperimentConfig, seq: str, state: str, cal: int, T: float):
    return task_seed(cfg.seed, "shots", seq, state, cal, repr(float(T)))


def _pauli_task(args):
    cfg, name, cal = args
    seq = prepare_sequence(name, cfg.z_mode)
    model = device_model(cfg.device, cal, cfg.seed)
    err = PulseErrorModel(eps_r=cfg.eps_r)
    vecs = cfg.state_vectors()
    labels = list(vecs)
    counts = {lab: [] for lab in labels}
    skipped = []
    for ti, t in enumerate(cfg.times):
        if t == 0:
            sched = None
        else:
            try:
                sched = dense(seq, t, cfg.delta)
            except ScheduleError as exc:
                skipped.append({"sequence": name, "calibration": cal, "time_s": t,
                                "reason": str(exc)})
                continue
        p = survival(sched, model, [vecs[k] for k in labels], cfg.device, err)
        for lab, pk in zip(labels, p):
            z = sample_shots(float(pk), cfg.shots, _shot_seed(cfg, name, lab, cal, t))
            counts[lab].append((t, z, pk))
    curves = []
    for lab in labels:
        rows = counts[lab]
        curves.append(DecayCurve(tuple(r[0] for r in rows), tuple(r[1] for r in rows),
                                 tuple(cfg.shots for _ in rows), lab, name, cal))
    return curves, skipped


def _run(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


@dataclass
class PauliResult:
    curves: list
    skipped: list

    def by_sequence(self, name: str) -> list:
        return [c for c in self.curves if c.sequence_label == name]


def run_pauli_experiment(config: ExperimentConfig) -> PauliResult:
    """One decay curve per (sequence, state, calibration), densest layout at every time."""
    if config.states != "pauli6":
        raise ConfigError("states", "the Pauli experiment needs states = pauli6")
    tasks = [(config, s, c) for s in config.sequences for c in range(config.calibrations)]
    curves, skipped = [], []
    for cs, sk in _run(_pauli_task, tasks, config.workers):
        curves += cs
        skipped += sk
    order = {lab: i for i, lab in enumerate(config.state_labels())}
    curves.sort(key=lambda c: (c.sequence_label, order[c.state_label], c.calibration_id))
    skipped.sort(key=lambda r: (r["sequence"], r["calibration"], r["time_s"]))
    return PauliResult(curves, skipped)


def d_grid(seq: SequenceIR, T: float, delta: float, points: int = 8) -> tuple:
    """``points`` equally spaced delays from 0 to the single-repetition maximum."""
    dmax = max_delay(seq, T, delta)
    if points == 1:
        return (0.0,)
    return tuple(float(x) for x in np.linspace(0.0, dmax, points))


def _haar_task(args):
    cfg, name, cal = args
    seq = prepare_sequence(name, cfg.z_mode)
    model = device_model(cfg.device, cal, cfg.seed)
    err = PulseErrorModel(eps_r=cfg.eps_r)
    vecs = cfg.state_vectors()
    labels = list(vecs)
    grid = d_grid(seq, cfg.T, cfg.delta, cfg.d_points)
    rows = []
    for sym in cfg.symmetries:
        for di, d in enumerate(grid):
            sched = dense(seq, cfg.T, cfg.delta, d, sym)
            p = survival(sched, model, [vecs[k] for k in labels], cfg.device, err)
            for lab, pk in zip(labels, p):
                z = sample_shots(float(pk), cfg.shots, _shot_seed(cfg, name, lab, cal, cfg.T))
                rows.append({"sequence": name, "symmetry": sym, "d_index": di, "d_s": d,
                             "reps": sched.reps, "state": lab, "calibration": cal,
                             "zeros": z, "shots": cfg.shots, "survival": float(pk)})
    return rows


@dataclass
class HaarResult:
    rows: list
    T: float

    def fidelities(self, sequence: str, symmetry: str, d_index: int) -> list:
        return [r["zeros"] / r["shots"] for r in self.rows
                if r["sequence"] == sequence and r["symmetry"] == symmetry
                and r["d_index"] == d_index]

    def summary(self) -> list:
        """Quartile summary of the empirical fidelity per (sequence, symmetry, d)."""
        keys = sorted({(r["sequence"], r["symmetry"], r["d_index"], r["d_s"]) for r in self.rows})
        out = []
        for seq, sym, di, d in keys:
            box = quartile_summary(self.fidelities(seq, sym, di))
            out.append({"sequence": seq, "symmetry": sym, "d_index": di, "d_s": d,
                        **box._asdict()})
        return out

    def best_d(self, sequence: str, symmetry: str = ASYMMETRIC) -> tuple:
        """``(d_index, median)`` with the highest median fidelity."""
        rows = [s for s in self.summary() if s["sequence"] == sequence and s["symmetry"] == symmetry]
        best = max(rows, key=lambda s: (s["median"], -s["d_index"]))
        return best["d_index"], best["median"]


def run_haar_interval_experiment(config: ExperimentConfig) -> HaarResult:
    """Fidelity at fixed ``T`` over the pulse-interval grid, both symmetries."""
    for name in config.sequences:
        seq = prepare_sequence(name, config.z_mode)
        try:
            max_delay(seq, config.T, config.delta)
        except ScheduleError as exc:
            raise ConfigError("T", f"{name}: {exc}") from None
    tasks = [(config, s, c) for s in config.sequences for c in range(config.calibrations)]
    rows = [r for chunk in _run(_haar_task, tasks, config.workers) for r in chunk]
    order = {lab: i for i, lab in enumerate(config.state_labels())}
    rows.sort(key=lambda r: (r["sequence"], r["symmetry"], r["d_index"], r["calibration"],
                             order[r["state"]]))
    return HaarResult(rows, config.T)
