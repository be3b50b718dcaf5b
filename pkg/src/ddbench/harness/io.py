"""File formats: schedule JSON, curve CSV, config JSON, Haar table CSV.

Floats are written with ``repr`` (shortest round-trip decimal), so every
export/import cycle is bit-exact.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Iterable

from ..analysis import DecayCurve
from ..scheduler import Event, Schedule
from ..seqlib import PULSE_KINDS, Pulse
from .device import ConfigError, DeviceSpec
from .experiments import ExperimentConfig

SCHEDULE_VERSION = 1
CURVE_HEADER = ("sequence", "state", "calibration", "time_s", "zeros", "shots")
HAAR_HEADER = ("sequence", "symmetry", "d_index", "d_s", "reps", "state", "calibration",
               "zeros", "shots")


class FormatError(ValueError):
    """Malformed input file; the message carries the line or field."""


# ---------------------------------------------------------------------------
# schedules

def schedule_to_dict(s: Schedule) -> dict:
    return {
        "version": SCHEDULE_VERSION,
        "sequence": s.sequence,
        "T": s.T,
        "delta": s.delta,
        "d": s.d,
        "symmetry": s.symmetry,
        "reps": s.reps,
        "events": [
            {"t_start": e.t_start, "duration": e.duration, "phi": e.pulse.phi,
             "theta": e.pulse.theta, "sign": e.pulse.sign, "kind": e.pulse.kind}
            for e in s.events
        ],
    }


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def schedule_from_dict(data: dict) -> Schedule:
    if not isinstance(data, dict):
        raise FormatError("schedule: expected a JSON object")
    if _need(data, "version", "schedule") != SCHEDULE_VERSION:
        raise FormatError(f"schedule.version: unsupported version {data['version']!r}")
    events = []
    for i, ev in enumerate(_need(data, "events", "schedule")):
        where = f"events[{i}]"
        kind = _need(ev, "kind", where)
        if kind not in PULSE_KINDS:
            raise FormatError(f"{where}.kind: unknown pulse kind {kind!r}")
        try:
            pulse = Pulse(float(_need(ev, "phi", where)), float(_need(ev, "theta", where)),
                          int(_need(ev, "sign", where)), kind)
            events.append(Event(float(_need(ev, "t_start", where)),
                                float(_need(ev, "duration", where)), pulse))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{where}: {exc}") from None
    try:
        return Schedule(tuple(events), float(_need(data, "T", "schedule")),
                        float(_need(data, "delta", "schedule")), float(_need(data, "d", "schedule")),
                        str(_need(data, "symmetry", "schedule")), int(_need(data, "reps", "schedule")),
                        str(data.get("sequence", "")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"schedule: {exc}") from None


def dumps_schedule(s: Schedule) -> str:
    return json.dumps(schedule_to_dict(s), indent=1) + "\n"


def loads_schedule(text: str) -> Schedule:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from None
    return schedule_from_dict(data)


# ---------------------------------------------------------------------------
# curves

def dumps_curves(curves: Iterable[DecayCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for c in curves:
        for t, z, n in zip(c.times, c.zeros, c.shots):
            w.writerow((c.sequence_label, c.state_label, c.calibration_id, repr(t), z, n))
    return buf.getvalue()


def loads_curves(text: str) -> list:
    """Group CSV rows into curves keyed by (sequence, state, calibration)."""
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None or tuple(h.strip() for h in header) != CURVE_HEADER:
        raise FormatError(f"line 1: expected header {','.join(CURVE_HEADER)}")
    groups = {}
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(CURVE_HEADER):
            raise FormatError(f"line {lineno}: expected {len(CURVE_HEADER)} fields, got {len(row)}")
        seq, state, cal, t, z, n = row
        try:
            key = (seq, state, int(cal))
            groups.setdefault(key, []).append((float(t), int(z), int(n)))
        except ValueError:
            bad = next(name for name, val, conv in
                       zip(CURVE_HEADER[2:], (cal, t, z, n), (int, float, int, int))
                       if not _converts(conv, val))
            raise FormatError(f"line {lineno}: field {bad!r} has invalid value") from None
    out = []
    for (seq, state, cal), pts in groups.items():
        try:
            out.append(DecayCurve(tuple(p[0] for p in pts), tuple(p[1] for p in pts),
                                  tuple(p[2] for p in pts), state, seq, cal))
        except ValueError as exc:
            raise FormatError(f"curve ({seq}, {state}, {cal}): {exc}") from None
    return out


def _converts(conv, val) -> bool:
    try:
        conv(val)
        return True
    except ValueError:
        return False


def dumps_haar(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HAAR_HEADER)
    for r in rows:
        w.writerow(tuple(repr(r[k]) if isinstance(r[k], float) else r[k] for k in HAAR_HEADER))
    return buf.getvalue()


# ---------------------------------------------------------------------------
# config

def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "sequences": list(cfg.sequences),
        "states": cfg.states,
        "times": list(cfg.times),
        "T": cfg.T,
        "delta": cfg.delta,
        "d_points": cfg.d_points,
        "symmetries": list(cfg.symmetries),
        "shots": cfg.shots,
        "calibrations": cfg.calibrations,
        "seed": cfg.seed,
        "device": cfg.device.to_dict(),
        "z_mode": cfg.z_mode,
        "eps_r": cfg.eps_r,
        "workers": cfg.workers,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config", "expected a JSON object")
    known = set(config_to_dict(ExperimentConfig()))
    for k in data:
        if k not in known:
            raise ConfigError(k, "unknown field")
    kw = dict(data)
    if "device" in kw:
        kw["device"] = DeviceSpec.from_dict(kw["device"])
    for k in ("sequences", "times", "symmetries"):
        if k in kw:
            kw[k] = tuple(kw[k])
    return ExperimentConfig(**kw)


def dumps_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=1) + "\n"


def loads_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(data)
