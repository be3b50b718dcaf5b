"""Small linear-algebra helpers shared by the dynamics engine."""
from __future__ import annotations

from functools import reduce

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
PAULI_LABELS = ("I", "X", "Y", "Z")
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|


def kron(*ops) -> np.ndarray:
    return reduce(np.kron, ops)


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().swapaxes(-1, -2)


def op_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol * max(1.0, op_norm(a)))


def unitarity_error(u: np.ndarray) -> float:
    return op_norm(dagger(u) @ u - np.eye(u.shape[0]))


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h`` via its spectral decomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ dagger(v)


class HermitianExp:
    """Cache the spectral decomposition of ``h`` for repeated ``exp(-i t h)``."""

    def __init__(self, h: np.ndarray):
        self.w, self.v = np.linalg.eigh(h)
        self.vh = dagger(self.v)

    def __call__(self, t: float) -> np.ndarray:
        return (self.v * np.exp(-1j * t * self.w)) @ self.vh


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_theta ||a - exp(i theta) b||`` using ``theta = arg tr(b^dag a)``."""
    ov = np.trace(dagger(b) @ a)
    phase = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return op_norm(a - phase * b)


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + dagger(g)) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of Paulis, e.g. ``"XZ"`` -> X (x) Z."""
    return kron(*(PAULIS[PAULI_LABELS.index(c)] for c in label.upper()))


def system_components(h: np.ndarray, bath_dim: int) -> list:
    """Bath operators ``C_a`` with ``h = sum_a sigma^a (x) C_a`` (a = I, X, Y, Z)."""
    h4 = h.reshape(2, bath_dim, 2, bath_dim)
    out = []
    for p in PAULIS:
        out.append(np.einsum("ji,iajb->ab", p, h4) / 2)
    return out


def superop(left: np.ndarray, right: np.ndarray | None = None) -> np.ndarray:
    """Matrix of ``rho -> left rho right`` on row-major ``vec(rho)``."""
    if right is None:
        right = dagger(left)
    return np.kron(left, right.T)
