"""
Pulse unitaries and schedule propagation.

Two pulse models are supported by :func:`propagate`:

``"sc"``
    Ideal instantaneous pulses (optionally with flip-angle and axis errors)
    applied at the centre of their slot, with free evolution covering the
    whole schedule including the pulse windows.
``"finite"``
    Each pulse is the time-ordered propagator of control plus noise over its
    window.

Rotating-frame evolution with instantaneous pulses is computed in the lab
frame with frame-conjugated pulses. The frame operator is diagonal, so this
is exact and cheap; :func:`free_propagator` with ``method="slice"`` is an
independent integrator of the time-dependent frame Hamiltonian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.special import erf

from ..scheduler import Schedule
from ..seqlib import IDENTITY_WAIT, VIRTUAL_Z, Pulse
from .models import NoiseModel
from .operators import I2, SX, SY, SZ, HermitianExp, dagger, expm_hermitian, superop

SLICE_TOL = 1e-10
MAX_HALVINGS = 16


class DynamicsError(RuntimeError):
    """Numerical failure (step-size control, dimension mismatch)."""


@dataclass(frozen=True)
class PulseErrorModel:
    """Systematic pulse imperfections.

    Attributes
    ----------
    eps_r : float
        Relative flip-angle error; the rotation angle is ``pi (1 + eps_r)``.
    axis_errors : tuple of float
        ``(eps_beta, eps_gamma)`` admixture of the two axes orthogonal to the
        nominal one (in-plane perpendicular, then z).
    envelope : {"square", "gaussian"}
    width : float
        Pulse width in seconds.
    """
    eps_r: float = 0.0
    axis_errors: tuple = (0.0, 0.0)
    envelope: str = "square"
    width: float = 0.0

    def __post_init__(self):
        if self.envelope not in ("square", "gaussian"):
            raise ValueError(f"unknown envelope {self.envelope!r}")
        if self.width < 0:
            raise ValueError("negative width")

    @property
    def omega0(self) -> float:
        """Peak amplitude with unit area ``pi/2`` over the window."""
        if self.width == 0:
            return math.inf
        if self.envelope == "square":
            return math.pi / (2 * self.width)
        s = self.width / 6
        return (math.pi / 2) / (s * math.sqrt(2 * math.pi) * erf(3 / math.sqrt(2)))

    def envelope_at(self, t: float) -> float:
        """Envelope value at ``t`` measured from the pulse centre."""
        if abs(t) > self.width / 2:
            return 0.0
        if self.envelope == "square":
            return self.omega0
        s = self.width / 6
        return self.omega0 * math.exp(-t * t / (2 * s * s))


IDEAL = PulseErrorModel()


def pulse_axis(pulse: Pulse, err: PulseErrorModel = IDEAL) -> np.ndarray:
    """Unit rotation axis ``(nx, ny, nz)`` including axis misspecification."""
    c, s = math.cos(pulse.phi), math.sin(pulse.phi)
    eb, eg = err.axis_errors
    n = np.array([c, s, 0.0]) + eb * np.array([-s, c, 0.0]) + eg * np.array([0.0, 0.0, 1.0])
    return n / np.linalg.norm(n)


def _axis_op(n) -> np.ndarray:
    return n[0] * SX + n[1] * SY + n[2] * SZ


def control_hamiltonian(pulse: Pulse, err: PulseErrorModel = IDEAL) -> np.ndarray:
    """Unit-amplitude control generator ``sign (1 + eps_r) n . sigma`` on the system."""
    return pulse.sign * (1 + err.eps_r) * _axis_op(pulse_axis(pulse, err))


def ideal_pulse_unitary(pulse: Pulse, err: PulseErrorModel = IDEAL) -> np.ndarray:
    """Instantaneous pulse on the system qubit.

    ``exp(-i sign (theta/2)(1 + eps_r) n . sigma)``; a virtual Z is the exact
    ``exp(-i pi/2 Z)`` and an identity wait is the identity.
    """
    if pulse.kind == VIRTUAL_Z:
        return np.array([[-1j, 0], [0, 1j]], dtype=complex)
    if pulse.kind == IDENTITY_WAIT:
        return I2.copy()
    a = pulse.sign * (pulse.theta / 2) * (1 + err.eps_r)
    return math.cos(a) * I2 - 1j * math.sin(a) * _axis_op(pulse_axis(pulse, err))


def sequence_unitary(pulses, err: PulseErrorModel = IDEAL, reps: int = 1) -> np.ndarray:
    """Product of ideal pulses (first pulse rightmost), repeated ``reps`` times."""
    u = I2.copy()
    for p in pulses:
        u = ideal_pulse_unitary(p, err) @ u
    return np.linalg.matrix_power(u, reps)


# ---------------------------------------------------------------------------
# free evolution

def _midpoint_product(hfun, t0: float, t1: float, n: int) -> np.ndarray:
    h = (t1 - t0) / n
    u = None
    for k in range(n):
        step = expm_hermitian(hfun(t0 + (k + 0.5) * h), h)
        u = step if u is None else step @ u
    return u


def sliced_propagator(hfun, t0: float, t1: float, tol: float = SLICE_TOL,
                      n0: int = 1) -> np.ndarray:
    """Time-ordered ``exp`` of a time-dependent Hermitian generator.

    Midpoint slicing; the slice count doubles until the result changes by
    less than ``tol`` in operator norm.

    Raises
    ------
    DynamicsError
        If the tolerance is not met after ``MAX_HALVINGS`` doublings.
    """
    if t1 == t0:
        return np.eye(hfun(t0).shape[0], dtype=complex)
    n = max(int(n0), 1)
    prev = _midpoint_product(hfun, t0, t1, n)
    for _ in range(MAX_HALVINGS):
        n *= 2
        cur = _midpoint_product(hfun, t0, t1, n)
        if np.linalg.norm(cur - prev, 2) < tol:
            return cur
        prev = cur
    raise DynamicsError(f"slicing did not converge to {tol:g} with {n} slices")


def frame_unitary(model: NoiseModel, t: float) -> np.ndarray:
    return np.diag(model.frame_diag(t))


def free_propagator(model: NoiseModel, tau: float, frame: str = "lab", t0: float = 0.0,
                    method: str = "exact", tol: float = SLICE_TOL) -> np.ndarray:
    """Unitary free evolution over ``[t0, t0 + tau]``.

    Parameters
    ----------
    frame : {"lab", "rotating"}
    method : {"exact", "slice"}
        In the rotating frame ``"exact"`` unwinds the frame around the lab
        propagator and ``"slice"`` integrates the time-dependent Hamiltonian
        directly. Both agree to the slicing tolerance.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if frame not in ("lab", "rotating"):
        raise ValueError(f"unknown frame {frame!r}")
    if frame == "lab" or model.rotating_frame is None:
        return _lab_exp(model)(tau)
    if model.frame_static:
        return expm_hermitian(model.H_rot(0.0), tau)
    if method == "slice":
        omega = model.rotating_frame.omega_d
        n0 = max(1, int(math.ceil(abs(omega) * tau / 0.5)))
        return sliced_propagator(model.H_rot, t0, t0 + tau, tol, n0)
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    v0, v1 = model.frame_diag(t0), model.frame_diag(t0 + tau)
    u = _lab_exp(model)(tau)
    return (v1.conj()[:, None] * u) * v0[None, :]


def _lab_exp(model: NoiseModel) -> HermitianExp:
    return model._memo("lab_exp", lambda: HermitianExp(model.H_lab))


# ---------------------------------------------------------------------------
# Lindblad

def lindbladian(model: NoiseModel, h: Optional[np.ndarray] = None) -> np.ndarray:
    """Generator on row-major ``vec(rho)`` for ``h`` (default lab Hamiltonian)."""
    if h is None:
        h = model.H_lab
    d = h.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for c in model.collapse_ops():
        cdc = dagger(c) @ c
        L += np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T)
    return L


class _LindbladExp:
    def __init__(self, L: np.ndarray):
        self.L = L
        self.cache = {}

    def __call__(self, t: float) -> np.ndarray:
        key = float(t)
        m = self.cache.get(key)
        if m is None:
            m = expm(self.L * t)
            if len(self.cache) < 4096:
                self.cache[key] = m
        return m


def _lindblad_exp(model: NoiseModel) -> _LindbladExp:
    return model._memo("lindblad_exp", lambda: _LindbladExp(lindbladian(model)))


# ---------------------------------------------------------------------------
# finite-width pulses

def finite_pulse_unitary(pulse: Pulse, err: PulseErrorModel, model: Optional[NoiseModel] = None,
                         frame: str = "lab", t_center: float = 0.0,
                         tol: float = SLICE_TOL) -> np.ndarray:
    """Propagator of control plus noise over ``[t_center - w/2, t_center + w/2]``.

    A square envelope in a static frame is a single exponential; otherwise
    the generator is sliced.
    """
    w = err.width
    if w <= 0:
        raise ValueError("finite pulses need a positive width")
    if model is None:
        from .models import zero_model
        model = zero_model(0)
    db = model.bath_dim
    if pulse.kind == VIRTUAL_Z:
        return np.kron(ideal_pulse_unitary(pulse), np.eye(db))
    if pulse.kind == IDENTITY_WAIT:
        return free_propagator(model, w, frame, t_center - w / 2)
    hc = np.kron(control_hamiltonian(pulse, err), np.eye(db))
    rotating = frame == "rotating" and model.rotating_frame is not None
    if err.envelope == "square" and (not rotating or model.frame_static):
        h0 = model.H_rot(0.0) if rotating else model.H_lab
        return expm_hermitian(err.omega0 * hc + h0, w)
    a, b = t_center - w / 2, t_center + w / 2
    if rotating:
        def hfun(t):
            return err.envelope_at(t - t_center) * hc + model.H_rot(t)
    else:
        def hfun(t):
            return err.envelope_at(t - t_center) * hc + model.H_lab
    return sliced_propagator(hfun, a, b, tol, n0=8)


# ---------------------------------------------------------------------------
# schedules

def _segments(schedule: Schedule, mode: str):
    """Yield ("free", t0, t1) and ("pulse", t, event) items in time order."""
    t = 0.0
    for ev in schedule.events:
        if mode == "sc" or ev.pulse.kind == VIRTUAL_Z:
            tp = ev.t_start + ev.duration / 2
            if ev.pulse.kind == IDENTITY_WAIT:
                continue
            if tp > t:
                yield ("free", t, tp)
                t = tp
            yield ("pulse", tp, ev)
        else:
            if ev.pulse.kind == IDENTITY_WAIT:
                continue
            if ev.t_start > t:
                yield ("free", t, ev.t_start)
            yield ("pulse", ev.t_start + ev.duration / 2, ev)
            t = max(t, ev.t_end)
    if schedule.T > t:
        yield ("free", t, schedule.T)


def _check_dims(schedule: Schedule, model: NoiseModel):
    if model.dim % 2:
        raise DynamicsError("model dimension must contain the system qubit")


def propagate(schedule: Schedule, model: NoiseModel, frame: str = "lab",
              err: PulseErrorModel = IDEAL, mode: str = "sc") -> np.ndarray:
    """Total propagator of ``schedule``.

    Returns the joint unitary, or the superoperator on row-major
    ``vec(rho)`` when the model carries a Lindblad part. Pulses act on the
    system qubit only.

    Parameters
    ----------
    mode : {"sc", "finite"}
        Instantaneous pulses at slot centres, or finite-width pulses of width
        ``schedule.delta`` built with ``err``'s envelope.
    """
    _check_dims(schedule, model)
    if mode not in ("sc", "finite"):
        raise ValueError(f"unknown mode {mode!r}")
    rotating = frame == "rotating" and model.rotating_frame is not None
    lind = model.lindblad is not None
    if mode == "finite" and rotating and not model.frame_static and lind:
        raise DynamicsError("finite pulses with a time-dependent frame and Lindblad are unsupported")
    db = model.bath_dim
    d = model.dim
    total = np.eye(d * d if lind else d, dtype=complex)
    fexp = _lindblad_exp(model) if lind else _lab_exp(model)
    # Instantaneous pulses in the rotating frame are simulated in the lab frame
    # with frame-conjugated pulses; finite pulses use rotating-frame blocks.
    lab_trick = rotating and mode == "sc"
    ferr = PulseErrorModel(err.eps_r, err.axis_errors, err.envelope, schedule.delta)
    for item in _segments(schedule, mode):
        if item[0] == "free":
            _, a, b = item
            if rotating and not lab_trick:
                m = _rot_lindblad(model, a, b) if lind else free_propagator(model, b - a, "rotating", a)
            else:
                m = fexp(b - a)
        else:
            _, tp, ev = item
            if mode == "finite" and ev.pulse.kind != VIRTUAL_Z and ev.duration > 0:
                if lind:
                    hc = np.kron(control_hamiltonian(ev.pulse, ferr), np.eye(db))
                    if ferr.envelope != "square":
                        raise DynamicsError("Gaussian finite pulses with Lindblad are unsupported")
                    h0 = model.H_rot(0.0) if rotating else model.H_lab
                    m = expm(lindbladian(model, h0 + ferr.omega0 * hc) * ev.duration)
                else:
                    m = finite_pulse_unitary(ev.pulse, ferr, model, frame, tp)
            else:
                u = np.kron(ideal_pulse_unitary(ev.pulse, err), np.eye(db))
                if lab_trick:
                    v = model.frame_diag(tp)
                    u = (v[:, None] * u) * v.conj()[None, :]
                m = superop(u) if lind else u
        total = m @ total
    if lab_trick:
        vT = model.frame_diag(schedule.T).conj()
        fin = np.diag(vT)
        total = (superop(fin) if lind else fin) @ total
    return total


def _rot_lindblad(model: NoiseModel, a: float, b: float) -> np.ndarray:
    va = np.diag(model.frame_diag(a))
    vb = np.diag(model.frame_diag(b)).conj()
    return superop(vb) @ _lindblad_exp(model)(b - a) @ superop(va)


def evolve_states(schedule: Schedule, model: NoiseModel, rhos: np.ndarray,
                  frame: str = "lab", err: PulseErrorModel = IDEAL) -> np.ndarray:
    """Evolve a stack of density matrices ``(k, d, d)`` with instantaneous pulses.

    Equivalent to applying :func:`propagate` in ``"sc"`` mode but works on the
    states directly, which is much cheaper for long schedules.
    """
    _check_dims(schedule, model)
    rhos = np.array(rhos, dtype=complex, copy=True)
    if rhos.ndim == 2:
        rhos = rhos[None]
    k, d, _ = rhos.shape
    if d != model.dim:
        raise DynamicsError(f"state dimension {d} does not match model dimension {model.dim}")
    rotating = frame == "rotating" and model.rotating_frame is not None
    lind = model.lindblad is not None
    db = model.bath_dim
    fexp = _lindblad_exp(model) if lind else _lab_exp(model)
    pulse_cache = {}
    for item in _segments(schedule, "sc"):
        if item[0] == "free":
            _, a, b = item
            m = fexp(b - a)
            if lind:
                rhos = (rhos.reshape(k, d * d) @ m.T).reshape(k, d, d)
            else:
                rhos = m @ rhos @ dagger(m)
        else:
            _, tp, ev = item
            key = ev.pulse
            u = pulse_cache.get(key)
            if u is None:
                u = np.kron(ideal_pulse_unitary(ev.pulse, err), np.eye(db))
                pulse_cache[key] = u
            if rotating:
                v = model.frame_diag(tp)
                u = (v[:, None] * u) * v.conj()[None, :]
            rhos = u @ rhos @ dagger(u)
    if rotating:
        v = model.frame_diag(schedule.T).conj()
        rhos = (v[:, None] * rhos) * v.conj()[None, :]
    return rhos
