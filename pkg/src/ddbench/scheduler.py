"""
Render abstract sequences into absolute-time schedules.

Timing model
------------
A schedule of total duration ``T`` holds ``reps`` back-to-back blocks.
Every time-occupying pulse (physical or identity wait) of a block is
followed by an extra delay ``d``; the symmetric form moves ``d/2`` of the
last delay to the front of the block. What remains of the block after
pulses and delays is distributed over the free periods:

* uniform sequences: proportionally to the sequence fractions, pulses
  placed left to right, so the dense layout (``T = n * delta``) packs the
  pulses back to back;
* UDD/QDD: each pulse ends at its target time (``t_j - delta`` start), and
  coincident virtual-Z slots become a zero-length Z plus an identity wait.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .seqlib import IDENTITY_WAIT, PHYSICAL, VIRTUAL_Z, Pulse, SequenceIR

ASYMMETRIC = "a"
SYMMETRIC = "s"
TIME_RTOL = 1e-15


class ScheduleError(ValueError):
    """The requested layout cannot be realized (over-packing, bad padding)."""


def normalize_symmetry(symmetry: str) -> str:
    s = str(symmetry).lower()
    if s in ("a", "asym", "asymmetric"):
        return ASYMMETRIC
    if s in ("s", "sym", "symmetric"):
        return SYMMETRIC
    raise ValueError(f"unknown symmetry {symmetry!r}")


@dataclass(frozen=True)
class Event:
    t_start: float
    duration: float
    pulse: Pulse

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration


@dataclass(frozen=True)
class Schedule:
    events: tuple
    T: float
    delta: float
    d: float = 0.0
    symmetry: str = ASYMMETRIC
    reps: int = 1
    sequence: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.events)


def _occupying(seq: SequenceIR) -> list:
    return [p.kind != VIRTUAL_Z for p in seq.pulses]


def n_slots(seq: SequenceIR) -> int:
    """Number of pulses that occupy time and therefore receive padding."""
    return sum(_occupying(seq))


def _slot_times(seq: SequenceIR) -> list:
    """Normalized target times of the occupying pulses of a timed sequence."""
    return [t for t, occ in zip(seq.times, _occupying(seq)) if occ]


def min_core_duration(seq: SequenceIR, delta: float) -> float:
    """Shortest block (without extra delay) that fits all pulses."""
    if delta < 0:
        raise ScheduleError("negative pulse width")
    if seq.times is None:
        return n_slots(seq) * delta
    times = _slot_times(seq)
    if not times or delta == 0:
        return 0.0
    gaps = [times[0]] + [b - a for a, b in zip(times, times[1:])]
    return delta / min(gaps)


def block_duration(seq: SequenceIR, delta: float, d: float = 0.0) -> float:
    return min_core_duration(seq, delta) + n_slots(seq) * d


def max_reps(seq: SequenceIR, T: float, delta: float, d: float = 0.0) -> int:
    """How many blocks of the densest layout (plus delay ``d``) fit in ``T``."""
    L = block_duration(seq, delta, d)
    if L <= 0:
        return 1
    return int(math.floor(T / L * (1 + 1e-12)))


def max_delay(seq: SequenceIR, T: float, delta: float, symmetry: str = ASYMMETRIC) -> float:
    """Largest extra delay such that exactly one block fills ``T``.

    The total padding per block is ``n_slots * d`` for both symmetries, so
    ``symmetry`` does not change the value; it is accepted for symmetry with
    :func:`render`.
    """
    normalize_symmetry(symmetry)
    k = n_slots(seq)
    core = min_core_duration(seq, delta)
    if T < core * (1 - 1e-12):
        raise ScheduleError(f"T={T:g} is shorter than one dense block ({core:g})")
    if k == 0:
        return 0.0
    return max(T - core, 0.0) / k


def render(seq: SequenceIR, T: float, delta: float = 0.0, d: float = 0.0,
           symmetry: str = ASYMMETRIC, reps: int = 1) -> Schedule:
    """Lay ``reps`` copies of ``seq`` out on ``[0, T]``.

    Non-uniform sequences are delegated to :func:`render_udd_family`.
    """
    if seq.times is not None:
        return render_udd_family(seq, T, delta, d, symmetry, reps)
    _check_args(T, delta, d, reps)
    sym = normalize_symmetry(symmetry)
    L = T / reps
    occ = _occupying(seq)
    k = sum(occ)
    free = L - k * d - k * delta
    if free < -1e-12 * T:
        raise ScheduleError(
            f"{seq.name}: {reps} rep(s) with delta={delta:g}, d={d:g} do not fit in T={T:g}"
        )
    free = max(free, 0.0)
    lead = d / 2 if sym == SYMMETRIC else 0.0
    events = []
    for b in range(reps):
        base = b * L
        cum = 0.0
        done = 0
        for i, p in enumerate(seq.pulses):
            cum += seq.fractions[i]
            start = math.fsum((base, lead, free * cum, done * (delta + d)))
            dur = delta if occ[i] else 0.0
            events.append(Event(start, dur, p))
            done += occ[i]
    return Schedule(tuple(events), float(T), float(delta), float(d), sym, int(reps), seq.name)


def render_udd_family(seq: SequenceIR, T: float, delta: float = 0.0, d: float = 0.0,
                      symmetry: str = ASYMMETRIC, reps: int = 1) -> Schedule:
    """Place each pulse so that it ends at its target time.

    Raises
    ------
    ScheduleError
        If ``delta`` exceeds the smallest gap between target times.
    """
    if seq.times is None:
        raise ScheduleError(f"{seq.name} carries no target times")
    _check_args(T, delta, d, reps)
    sym = normalize_symmetry(symmetry)
    L = T / reps
    occ = _occupying(seq)
    k = sum(occ)
    core = L - k * d
    need = min_core_duration(seq, delta)
    if core < need * (1 - 1e-12) or core < -1e-12 * T:
        raise ScheduleError(
            f"{seq.name}: pulse width {delta:g} exceeds the smallest pulse gap "
            f"(core {core:g} < {need:g})"
        )
    lead = d / 2 if sym == SYMMETRIC else 0.0
    events = []
    for b in range(reps):
        base = b * L
        done = 0
        for i, p in enumerate(seq.pulses):
            if occ[i]:
                end = math.fsum((base, lead, core * seq.times[i], done * d))
                start = end - delta
                events.append(Event(max(start, base), delta, p))
                done += 1
            else:
                # a virtual Z takes no time; it opens the slot of the next pulse
                end = math.fsum((base, lead, core * seq.times[i], done * d))
                events.append(Event(max(end - delta, base), 0.0, p))
    return Schedule(tuple(events), float(T), float(delta), float(d), sym, int(reps), seq.name)


def _check_args(T, delta, d, reps):
    if not T > 0:
        raise ScheduleError("T must be positive")
    if delta < 0:
        raise ScheduleError("negative pulse width")
    if d < 0:
        raise ScheduleError("negative padding")
    if int(reps) != reps or reps < 1:
        raise ScheduleError("reps must be a positive integer")


def dense(seq: SequenceIR, T: float, delta: float, d: float = 0.0,
          symmetry: str = ASYMMETRIC) -> Schedule:
    """As many repetitions as fit in ``T`` with delay ``d`` (at least one).

    Raises
    ------
    ScheduleError
        If not even one block fits.
    """
    if n_slots(seq) == 0:
        return render(seq, T, delta, 0.0, symmetry, 1)
    n = max_reps(seq, T, delta, d)
    if n < 1:
        raise ScheduleError(f"{seq.name}: T={T:g} shorter than one block")
    return render(seq, T, delta, d, symmetry, n)


def validate(schedule: Schedule) -> list:
    """Check the schedule invariants; an empty list means valid."""
    out = []
    T = schedule.T
    tol = TIME_RTOL * max(T, 1e-300) * 8
    for i, ev in enumerate(schedule.events):
        kind = ev.pulse.kind
        want = 0.0 if kind == VIRTUAL_Z else schedule.delta
        if abs(ev.duration - want) > tol:
            out.append({"code": "duration", "index": i, "expected": want, "got": ev.duration})
        if ev.t_start < -tol:
            out.append({"code": "negative_start", "index": i, "t_start": ev.t_start})
        if ev.t_end > T + tol:
            out.append({"code": "exceeds_total", "index": i, "t_end": ev.t_end, "T": T})
        if i + 1 < len(schedule.events):
            nxt = schedule.events[i + 1]
            if ev.t_end > nxt.t_start + tol:
                out.append({"code": "overlap", "index": i, "t_end": ev.t_end,
                            "next_start": nxt.t_start})
    if schedule.d < 0:
        out.append({"code": "negative_padding", "d": schedule.d})
    return out


def fractions_of(schedule: Schedule) -> list:
    """Free-period fractions recovered from a zero-width, zero-delay, single-rep schedule."""
    starts = [ev.t_start for ev in schedule.events]
    edges = [0.0] + starts + [schedule.T]
    return [(b - a) / schedule.T for a, b in zip(edges, edges[1:])]


def kinds_summary(schedule: Schedule) -> dict:
    out = {PHYSICAL: 0, VIRTUAL_Z: 0, IDENTITY_WAIT: 0}
    for ev in schedule.events:
        out[ev.pulse.kind] += 1
    return out
