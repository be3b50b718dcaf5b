"""
Noise and pulse-error models.

The joint space is ``system (x) bath`` with the DD qubit first. When a
rotating frame is attached, the first bath qubit is the spectator that shares
the always-on ZZ coupling with the DD qubit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .operators import (
    I2, PAULIS, SIGMA_MINUS, SZ, is_hermitian, kron, op_norm, random_hermitian,
)


@dataclass(frozen=True)
class RotatingFrame:
    """Drive frequency, qubit frequencies and ZZ crosstalk (all in rad/s)."""
    omega_d: float
    omega_q1: float
    omega_q2: float
    J_zz: float = 0.0


@dataclass(frozen=True)
class Lindblad:
    """Markovian relaxation (``T1``) and dephasing (``T2``) times in seconds.

    ``qubits`` lists the qubits of the joint space that decohere; ``None``
    means the DD qubit plus the spectator when a rotating frame is present.
    """
    T1: float
    T2: float
    qubits: Optional[tuple] = None

    def __post_init__(self):
        if not (self.T1 > 0 and self.T2 > 0):
            raise ValueError("T1 and T2 must be positive")
        if self.T2 > 2 * self.T1 * (1 + 1e-12):
            raise ValueError("T2 must not exceed 2*T1")

    @property
    def gamma_phi(self) -> float:
        """Pure-dephasing rate ``1/T2 - 1/(2 T1)``."""
        return max(1.0 / self.T2 - 0.5 / self.T1, 0.0)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """``H = sum_a gamma_a sigma^a (x) B^a + I (x) H_B`` plus optional frame and decoherence.

    Attributes
    ----------
    gamma : ndarray, shape (4,)
        Couplings for ``a = 0..3`` (``sigma^0 = I``).
    bath_ops : tuple of ndarray
        ``B^a`` on the bath, ``a = 0..3``. ``B^0`` is kept for completeness;
        :func:`random_model` folds it into ``H_B``.
    H_B : ndarray
        Pure bath Hamiltonian.
    """
    gamma: np.ndarray
    bath_ops: tuple
    H_B: np.ndarray
    rotating_frame: Optional[RotatingFrame] = None
    lindblad: Optional[Lindblad] = None
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (4,):
            raise ValueError("gamma must have four entries")
        object.__setattr__(self, "gamma", g)
        ops = tuple(np.asarray(b, dtype=complex) for b in self.bath_ops)
        hb = np.asarray(self.H_B, dtype=complex)
        if len(ops) != 4:
            raise ValueError("bath_ops needs four operators")
        dim = hb.shape[0]
        if dim & (dim - 1) or dim > 8:
            raise ValueError("bath dimension must be 2^n_B with n_B <= 3")
        for b in ops + (hb,):
            if b.shape != (dim, dim):
                raise ValueError("bath operators have inconsistent shapes")
            if not is_hermitian(b):
                raise ValueError("bath operators must be Hermitian")
        if self.rotating_frame is not None and dim < 2:
            raise ValueError("a rotating frame needs a spectator qubit in the bath")
        object.__setattr__(self, "bath_ops", ops)
        object.__setattr__(self, "H_B", hb)

    # dimensions -----------------------------------------------------------
    system_dim = 2

    @property
    def bath_dim(self) -> int:
        return self.H_B.shape[0]

    @property
    def dim(self) -> int:
        return 2 * self.bath_dim

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    # Hamiltonian pieces ---------------------------------------------------
    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def H_SB(self) -> np.ndarray:
        """Coupling part ``sum_{a>=1} gamma_a sigma^a (x) B^a``."""
        return self._memo("H_SB", lambda: sum(
            self.gamma[a] * np.kron(PAULIS[a], self.bath_ops[a]) for a in range(1, 4)))

    @property
    def H_bar(self) -> np.ndarray:
        """Error Hamiltonian ``H_SB + gamma_0 I (x) B^0 + I (x) H_B``."""
        return self._memo("H_bar", lambda: self.H_SB + np.kron(
            I2, self.H_B + self.gamma[0] * self.bath_ops[0]))

    @property
    def beta(self) -> float:
        return op_norm(self.H_B + self.gamma[0] * self.bath_ops[0])

    @property
    def J(self) -> float:
        return op_norm(self.H_SB)

    @property
    def epsilon(self) -> float:
        return self.beta + self.J

    def qubit_op(self, op: np.ndarray, qubit: int) -> np.ndarray:
        mats = [I2] * self.n_qubits
        mats[qubit] = op
        return kron(*mats)

    @property
    def H_frame(self) -> np.ndarray:
        """Qubit-frequency and ZZ terms of the lab Hamiltonian (zero without a frame)."""
        def build():
            rf = self.rotating_frame
            if rf is None:
                return np.zeros((self.dim, self.dim), dtype=complex)
            z1, z2 = self.qubit_op(SZ, 0), self.qubit_op(SZ, 1)
            return -rf.omega_q1 / 2 * z1 - rf.omega_q2 / 2 * z2 + rf.J_zz * (z1 @ z2)
        return self._memo("H_frame", build)

    @property
    def H_lab(self) -> np.ndarray:
        return self._memo("H_lab", lambda: self.H_frame + self.H_bar)

    @property
    def number_diag(self) -> np.ndarray:
        """Diagonal of ``-(Z1 + Z2)/2``: the excitation number without its identity part."""
        def build():
            z = np.real(np.diag(self.qubit_op(SZ, 0) + self.qubit_op(SZ, 1)))
            return -z / 2
        return self._memo("number_diag", build)

    def frame_diag(self, t: float) -> np.ndarray:
        """Diagonal of ``V(t) = exp(-i omega_d N t)`` (identity without a frame)."""
        if self.rotating_frame is None:
            return np.ones(self.dim, dtype=complex)
        return np.exp(-1j * self.rotating_frame.omega_d * t * self.number_diag)

    def H_rot(self, t: float) -> np.ndarray:
        """Rotating-frame Hamiltonian ``V^dag H_lab V - omega_d N`` at time ``t``."""
        if self.rotating_frame is None:
            return self.H_lab
        v = self.frame_diag(t)
        h = (v.conj()[:, None] * self.H_lab) * v[None, :]
        return h - self.rotating_frame.omega_d * np.diag(self.number_diag)

    @property
    def frame_static(self) -> bool:
        """True when ``H_lab`` commutes with the number operator (rotating-frame H is constant)."""
        if self.rotating_frame is None:
            return True
        n = self.number_diag
        mask = np.abs(n[:, None] - n[None, :]) > 0.5
        return bool(np.max(np.abs(self.H_lab[mask]), initial=0.0) < 1e-14)

    def decay_qubits(self) -> tuple:
        if self.lindblad is None:
            return ()
        if self.lindblad.qubits is not None:
            return tuple(self.lindblad.qubits)
        return (0, 1) if self.rotating_frame is not None else (0,)

    def collapse_ops(self) -> list:
        """Lindblad jump operators (relaxation and pure dephasing)."""
        if self.lindblad is None:
            return []
        lb = self.lindblad
        out = []
        for q in self.decay_qubits():
            out.append(math.sqrt(1.0 / lb.T1) * self.qubit_op(SIGMA_MINUS, q))
            if lb.gamma_phi > 0:
                out.append(math.sqrt(lb.gamma_phi / 2) * self.qubit_op(SZ, q))
        return out

    def with_(self, **changes) -> "NoiseModel":
        kw = dict(gamma=self.gamma, bath_ops=self.bath_ops, H_B=self.H_B,
                  rotating_frame=self.rotating_frame, lindblad=self.lindblad, label=self.label)
        kw.update(changes)
        return NoiseModel(**kw)

    def norms(self) -> dict:
        return {"beta": self.beta, "J": self.J, "epsilon": self.epsilon}


def zero_model(n_bath: int = 1) -> NoiseModel:
    d = 2 ** n_bath
    z = np.zeros((d, d), dtype=complex)
    return NoiseModel(np.zeros(4), (z, z, z, z), z, label="zero")


def random_model(n_bath: int = 1, J: float = 1.0, beta: float = 1.0, seed=0,
                 gamma: Sequence[float] = (0.0, 1.0, 1.0, 1.0),
                 rotating_frame: Optional[RotatingFrame] = None,
                 lindblad: Optional[Lindblad] = None, label: str = "") -> NoiseModel:
    """Seeded generic model with ``||H_SB|| = J`` and ``||H_B|| = beta``.

    Bath operators are random Hermitian matrices; the couplings ``gamma``
    fix the relative weight of the ``x, y, z`` channels before the overall
    rescaling. ``gamma[0]`` is ignored (a pure-bath term belongs in ``H_B``).
    """
    if not 0 <= n_bath <= 3:
        raise ValueError("n_bath must be in [0, 3]")
    rng = np.random.default_rng(seed)
    d = 2 ** n_bath
    ops = [np.zeros((d, d), dtype=complex)]
    for _ in range(3):
        b = random_hermitian(d, rng)
        ops.append(b / op_norm(b))
    hb = random_hermitian(d, rng)
    g = np.array([0.0, *gamma[1:]], dtype=float)
    probe = NoiseModel(g, tuple(ops), np.zeros((d, d)))
    j0 = probe.J
    if j0 > 0:
        ops = [ops[0]] + [b * (J / j0) for b in ops[1:]]
    elif J > 0:
        raise ValueError("gamma switches off every coupling channel but J > 0")
    nb = op_norm(hb)
    hb = hb * (beta / nb) if nb > 0 else hb
    return NoiseModel(g, tuple(ops), hb, rotating_frame, lindblad, label or f"random(seed={seed})")
