"""Initial states and shot sampling."""
from __future__ import annotations

import math
import warnings

import numpy as np

from .device import task_seed

PAULI_LABELS = ("0", "1", "+", "-", "+i", "-i")

_S = 1 / math.sqrt(2)
_PAULI = {
    "0": (1, 0),
    "1": (0, 1),
    "+": (_S, _S),
    "-": (_S, -_S),
    "+i": (_S, 1j * _S),
    "-i": (_S, -1j * _S),
}

PROB_TOL = 1e-12


def pauli_states() -> dict:
    """The six Pauli eigenstates keyed by label."""
    return {k: np.array(v, dtype=complex) for k, v in _PAULI.items()}


def haar_state(seed: int, index: int) -> np.ndarray:
    """Haar-random qubit state ``(cos(theta/2), e^{i phi} sin(theta/2))``."""
    rng = np.random.default_rng(task_seed(seed, "haar", index))
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * math.pi)
    c = math.sqrt((1 + cos_t) / 2)
    s = math.sqrt((1 - cos_t) / 2)
    return np.array([c, np.exp(1j * phi) * s], dtype=complex)


def sample_shots(p: float, shots: int, seed) -> int:
    """Binomial count of 0 outcomes.

    Values within ``1e-12`` outside ``[0, 1]`` are clamped with a warning.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not (-PROB_TOL <= p <= 1 + PROB_TOL) or not math.isfinite(p):
        raise ValueError(f"probability {p!r} outside [0, 1]")
    if p < 0 or p > 1:
        warnings.warn(f"probability {p!r} clamped into [0, 1]", RuntimeWarning, stacklevel=2)
        p = min(max(p, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    return int(rng.binomial(shots, p))
