"""Toggling-frame and first-order average Hamiltonians."""
from __future__ import annotations

import itertools
import math

import numpy as np

from ..scheduler import Schedule, render
from ..seqlib import IDENTITY_WAIT, SequenceIR
from .models import NoiseModel
from .operators import PAULI_LABELS, dagger, kron, op_norm, pauli_string, system_components
from .propagation import IDEAL, PulseErrorModel, ideal_pulse_unitary


def _require_ideal(schedule: Schedule):
    if schedule.delta != 0:
        raise ValueError("toggling-frame analysis needs an ideal-pulse schedule (delta = 0)")


def _control_segments(schedule: Schedule, bath_dim: int, err: PulseErrorModel = IDEAL):
    """Yield ``(t0, t1, U_c)`` for the piecewise-constant control propagator."""
    uc = np.eye(2, dtype=complex)
    t = 0.0
    for ev in schedule.events:
        if ev.pulse.kind == IDENTITY_WAIT:
            continue
        if ev.t_start > t:
            yield t, ev.t_start, np.kron(uc, np.eye(bath_dim))
            t = ev.t_start
        uc = ideal_pulse_unitary(ev.pulse, err) @ uc
    if schedule.T > t:
        yield t, schedule.T, np.kron(uc, np.eye(bath_dim))


def control_unitary(schedule: Schedule, t: float, err: PulseErrorModel = IDEAL) -> np.ndarray:
    """System control propagator ``U_c(t)``; a pulse at ``t`` counts as applied."""
    _require_ideal(schedule)
    uc = np.eye(2, dtype=complex)
    for ev in schedule.events:
        if ev.t_start > t:
            break
        uc = ideal_pulse_unitary(ev.pulse, err) @ uc
    return uc


def toggling_hamiltonian(schedule: Schedule, model: NoiseModel, t: float,
                         err: PulseErrorModel = IDEAL) -> np.ndarray:
    """``U_c^dag(t) H U_c(t)`` with ``H`` the model's error Hamiltonian."""
    _require_ideal(schedule)
    u = np.kron(control_unitary(schedule, t, err), np.eye(model.bath_dim))
    return dagger(u) @ model.H_bar @ u


def first_order_average_hamiltonian(schedule: Schedule, model: NoiseModel,
                                    err: PulseErrorModel = IDEAL) -> np.ndarray:
    """Exact time average of the toggled error Hamiltonian over the schedule."""
    _require_ideal(schedule)
    h = model.H_bar
    acc = np.zeros_like(h)
    for t0, t1, u in _control_segments(schedule, model.bath_dim, err):
        acc += (t1 - t0) * (dagger(u) @ h @ u)
    return acc / schedule.T


def system_part(h: np.ndarray, bath_dim: int) -> dict:
    """Norms of the bath operators multiplying ``I, X, Y, Z`` on the system."""
    comps = system_components(h, bath_dim)
    return {lab: op_norm(c) for lab, c in zip(PAULI_LABELS, comps)}


def _integrated_phases(freqs: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """``int_{t0}^{t1} exp(i f t) dt`` elementwise."""
    out = np.empty(freqs.shape, dtype=complex)
    small = np.abs(freqs) * (t1 - t0) < 1e-8
    out[small] = (t1 - t0) * np.exp(1j * freqs[small] * (t0 + t1) / 2)
    f = freqs[~small]
    out[~small] = (np.exp(1j * f * t1) - np.exp(1j * f * t0)) / (1j * f)
    return out


def _frame_average(op: np.ndarray, schedule: Schedule, model: NoiseModel, with_dd: bool):
    omega = model.rotating_frame.omega_d
    n = model.number_diag
    freqs = omega * (n[:, None] - n[None, :])
    acc = np.zeros_like(op)
    if with_dd:
        segs = _control_segments(schedule, model.bath_dim)
    else:
        segs = [(0.0, schedule.T, np.eye(model.dim, dtype=complex))]
    for t0, t1, u in segs:
        rot = op * _integrated_phases(freqs, t0, t1)
        acc += dagger(u) @ rot @ u
    return acc / schedule.T


def rotating_frame_term_scan(sequence: SequenceIR, model: NoiseModel, tau: float,
                             tol: float = 1e-12) -> dict:
    """First-order contribution of each two-qubit Pauli term in the rotating frame.

    DD acts on qubit 1 with ideal pulses at pulse interval ``tau`` (one cycle
    of duration ``n * tau``). For each term ``P`` on (DD qubit, spectator) the
    cycle average of ``U_c^dag V^dag P V U_c`` is computed exactly, with and
    without DD; ``V`` is the number-operator frame rotation.

    Returns
    -------
    dict
        ``terms``: one record per Pauli label with keys ``label``,
        ``with_dd``, ``without_dd`` (norms of the averaged unit term),
        ``weight`` (norm of the term's coefficient in the model) and
        ``cancelled`` (``with_dd < tol``); ``fine_tuned`` flags
        ``tau`` equal to an integer multiple of ``2 pi / omega_d``.
    """
    rf = model.rotating_frame
    if rf is None:
        raise ValueError("term scan needs rotating-frame parameters")
    n_p = max(sequence.n_pulses, 1)
    T = n_p * tau
    schedule = render(sequence, T, 0.0)
    rest = model.dim // 4
    records = []
    for a, b in itertools.product(PAULI_LABELS, repeat=2):
        label = a + b
        if label == "II":
            continue
        p = kron(pauli_string(label), np.eye(rest))
        coeff = (dagger(p) @ model.H_bar).reshape(4, rest, 4, rest)
        weight = op_norm(np.einsum("iaib->ab", coeff) / 4)
        with_dd = op_norm(_frame_average(p, schedule, model, True))
        without = op_norm(_frame_average(p, schedule, model, False))
        records.append({"label": label, "with_dd": with_dd, "without_dd": without,
                        "weight": weight, "cancelled": with_dd < tol})
    k = tau * rf.omega_d / (2 * math.pi)
    fine = rf.omega_d != 0 and round(k) >= 1 and abs(k - round(k)) < 1e-9
    return {"sequence": sequence.name, "tau": tau, "cycle": T, "fine_tuned": bool(fine),
            "terms": records}
