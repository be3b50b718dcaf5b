"""Simulated device: DD qubit plus one spectator, rotating frame and Lindblad decay."""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..dynamics import Lindblad, NoiseModel, RotatingFrame, random_model

TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    """Bad configuration value; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def task_seed(master: int, *keys) -> np.random.SeedSequence:
    """Deterministic child seed from a master seed and string/int keys."""
    words = [int(master) & 0xFFFFFFFF]
    for k in keys:
        words.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF)
    return np.random.SeedSequence(words)


@dataclass(frozen=True)
class DeviceSpec:
    """Frequencies in Hz, times in seconds.

    ``coupling`` and ``bath_field`` set the norms of the random
    qubit-spectator coupling and of the spectator's own Hamiltonian.
    ``jitter`` is the relative spread of ``T1``/``T2`` across calibrations.
    """
    T1: float = 105e-6
    T2: float = 145e-6
    drive_hz: float = 5.0e9
    detuning_hz: float = 2.0e3
    spectator_hz: float = 4.9e9
    zz_hz: float = 15.0e3
    coupling_hz: float = 1.0e3
    bath_field_hz: float = 5.0e3
    jitter: float = 0.10
    spectator_state: str = "plus"

    def __post_init__(self):
        for f in ("T1", "T2", "drive_hz", "spectator_hz"):
            if not getattr(self, f) > 0:
                raise ConfigError(f"device.{f}", "must be positive")
        for f in ("coupling_hz", "bath_field_hz", "zz_hz", "jitter"):
            if getattr(self, f) < 0:
                raise ConfigError(f"device.{f}", "must be non-negative")
        if self.jitter >= 1:
            raise ConfigError("device.jitter", "must be below 1")
        if self.spectator_state not in ("zero", "one", "plus"):
            raise ConfigError("device.spectator_state", "expected zero, one or plus")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceSpec":
        known = {f.name for f in fields(cls)}
        for k in data:
            if k not in known:
                raise ConfigError(f"device.{k}", "unknown field")
        return cls(**data)


def device_model(spec: DeviceSpec, calibration: int = 0, seed: int = 0) -> NoiseModel:
    """Seeded redraw of the device for one calibration cycle.

    Each calibration draws fresh spectator operators and scales ``T1`` and
    ``T2`` by independent uniform factors in ``1 +/- jitter`` (``T2`` is capped
    at ``2 T1``).
    """
    rng = np.random.default_rng(task_seed(seed, "calibration", calibration))
    j1, j2 = 1 + spec.jitter * rng.uniform(-1, 1, size=2)
    T1 = spec.T1 * j1
    T2 = min(spec.T2 * j2, 2 * T1)
    wd = TWO_PI * spec.drive_hz
    frame = RotatingFrame(omega_d=wd, omega_q1=wd + TWO_PI * spec.detuning_hz,
                          omega_q2=TWO_PI * spec.spectator_hz, J_zz=TWO_PI * spec.zz_hz)
    bath_seed = int(rng.integers(2 ** 31))
    return random_model(1, J=TWO_PI * spec.coupling_hz, beta=TWO_PI * spec.bath_field_hz,
                        seed=bath_seed, rotating_frame=frame, lindblad=Lindblad(T1, T2),
                        label=f"device(cal={calibration})")


def spectator_vector(spec: DeviceSpec) -> np.ndarray:
    if spec.spectator_state == "zero":
        return np.array([1, 0], dtype=complex)
    if spec.spectator_state == "one":
        return np.array([0, 1], dtype=complex)
    return np.array([1, 1], dtype=complex) / math.sqrt(2)
