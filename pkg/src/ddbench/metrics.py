"""
Fidelity and error measures, filter functions and closed-form DD bounds.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .dynamics.operators import dagger, op_norm, unitarity_error


class MetricsError(ValueError):
    """Invalid input to a metric."""


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested accuracy."""


# ---------------------------------------------------------------------------
# state and gate measures

def state_fidelity(rho: np.ndarray, psi: np.ndarray, tol: float = 1e-8) -> float:
    """Survival probability ``<psi|rho|psi>``.

    Raises
    ------
    MetricsError
        If ``psi`` is not normalized or ``rho`` does not have unit trace.
    """
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.vdot(psi, psi).real - 1) > tol:
        raise MetricsError("state is not normalized")
    if abs(np.trace(rho).real - 1) > tol:
        raise MetricsError("density operator does not have unit trace")
    f = np.vdot(psi, rho @ psi).real
    return float(min(max(f, 0.0), 1.0))


def nearest_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary polar factor of ``m``."""
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def eta_dd(U_total: np.ndarray, U0: np.ndarray, tol: float = 1e-8) -> float:
    """Distance of ``U_total`` from the nearest ``U0 (x) B'``.

    ``B'`` is the polar factor of ``tr_S[(U0^dag (x) I) U_total] / d_S``.
    """
    U_total = np.asarray(U_total, dtype=complex)
    U0 = np.asarray(U0, dtype=complex)
    if unitarity_error(U_total) > tol or unitarity_error(U0) > tol:
        raise MetricsError("eta_dd needs unitary inputs")
    ds = U0.shape[0]
    db = U_total.shape[0] // ds
    if ds * db != U_total.shape[0]:
        raise MetricsError("system dimension does not divide the joint dimension")
    v = np.kron(dagger(U0), np.eye(db)) @ U_total
    m = np.einsum("iaib->ab", v.reshape(ds, db, ds, db)) / ds
    # a vanishing block leaves the polar factor undefined; fall back to identity
    b = np.eye(db) if op_norm(m) < 1e-12 else nearest_unitary(m)
    return op_norm(U_total - np.kron(U0, b))


# ---------------------------------------------------------------------------
# filter functions

def filter_function(pulse_times: Sequence[float], n: Optional[int], T: float, omega) -> np.ndarray:
    """``|1 + (-1)^(n+1) e^{i w T} + 2 sum_j (-1)^j e^{i w t_j}|^2``.

    Parameters
    ----------
    pulse_times : sequence of float
        Absolute times ``0 < t_1 < ... < t_n <= T``.
    n : int or None
        Pulse count; defaults to ``len(pulse_times)``.
    omega : float or array
    """
    t = np.asarray(pulse_times, dtype=float)
    if n is None:
        n = t.size
    if n != t.size:
        raise MetricsError("n does not match the number of pulse times")
    if t.size and (np.any(np.diff(t) < 0) or t[0] < 0 or t[-1] > T * (1 + 1e-12)):
        raise MetricsError("pulse times must be sorted inside [0, T]")
    w = np.asarray(omega, dtype=float)
    signs = (-1.0) ** np.arange(1, n + 1)
    g = 1 + (-1) ** (n + 1) * np.exp(1j * w * T)
    if n:
        g = g + 2 * np.exp(1j * np.multiply.outer(w, t)) @ signs
    return np.abs(g) ** 2


def _filter_slope2(t: np.ndarray, T: float) -> float:
    """``lim_{w->0} F(w)/w^2``."""
    n = t.size
    d = (-1) ** (n + 1) * T + 2 * float(np.sum((-1.0) ** np.arange(1, n + 1) * t))
    return d * d


@dataclass(frozen=True)
class SpectralDensity:
    """Classical noise spectrum ``S(w)`` (rad/s) supported on ``[w_min, w_max]``.

    Kinds
    -----
    ``white``       ``A``
    ``ohmic``       ``A w (w/w_c)^(s-1)`` times ``exp(-w/w_c)`` or a sharp cutoff at ``w_c``
    ``lorentzian``  ``A w_c^2 / (w^2 + w_c^2)``
    ``one_over_f``  ``A / w^s``
    ``tabulated``   linear interpolation of ``table``
    """
    kind: str
    amplitude: float = 1.0
    cutoff: float = math.inf
    exponent: float = 1.0
    omega_min: float = 0.0
    omega_max: float = math.inf
    cutoff_shape: str = "exp"
    table: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("white", "ohmic", "lorentzian", "one_over_f", "tabulated"):
            raise MetricsError(f"unknown spectral density kind {self.kind!r}")
        if self.cutoff_shape not in ("exp", "sharp"):
            raise MetricsError("cutoff_shape must be 'exp' or 'sharp'")
        if self.amplitude < 0:
            raise MetricsError("negative amplitude")
        if self.kind == "tabulated":
            w, s = self.grid()
            if np.any(s < 0) or np.any(np.diff(w) <= 0):
                raise MetricsError("tabulated spectrum must be non-negative on increasing w")
        if self.kind == "one_over_f" and self.omega_min <= 0:
            raise MetricsError("1/f noise needs a positive lower frequency")

    def grid(self):
        arr = np.asarray(self.table, dtype=float)
        return arr[:, 0], arr[:, 1]

    @property
    def support(self) -> tuple:
        hi = self.omega_max
        if self.kind == "ohmic" and self.cutoff_shape == "sharp":
            hi = min(hi, self.cutoff)
        if self.kind == "white" and self.cutoff_shape == "sharp":
            hi = min(hi, self.cutoff)
        if self.kind == "tabulated":
            w, _ = self.grid()
            return max(self.omega_min, w[0]), min(hi, w[-1])
        return self.omega_min, hi

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        lo, hi = self.support
        a = self.amplitude
        if self.kind == "white":
            s = np.full_like(w, a)
        elif self.kind == "ohmic":
            wc = self.cutoff
            s = a * w * (w / wc) ** (self.exponent - 1) if math.isfinite(wc) else a * w
            if self.cutoff_shape == "exp" and math.isfinite(wc):
                s = s * np.exp(-w / wc)
        elif self.kind == "lorentzian":
            s = a * self.cutoff ** 2 / (w ** 2 + self.cutoff ** 2)
        elif self.kind == "one_over_f":
            s = a / np.maximum(w, 1e-300) ** self.exponent
        else:
            gw, gs = self.grid()
            s = np.interp(w, gw, gs)
        return np.where((w >= lo) & (w <= hi), s, 0.0)

    def scaled(self, factor: float) -> "SpectralDensity":
        from dataclasses import replace
        table = tuple((w, s * factor) for w, s in self.table)
        return replace(self, amplitude=self.amplitude * factor, table=table)


def _chi_tail(S: SpectralDensity, times: np.ndarray, t: float, end: float) -> tuple:
    """``int_end^inf S(w) F(w t) / w^2 dw`` with ``F`` expanded into cosines."""
    n = times.size
    nodes = np.concatenate(([0.0], times, [t]))
    coef = np.concatenate(([1.0], 2 * (-1.0) ** np.arange(1, n + 1), [(-1.0) ** (n + 1)]))
    if n and times[-1] == t:
        # a pulse at T merges with the end node
        coef[-2] += coef[-1]
        nodes, coef = nodes[:-1], coef[:-1]
    weights = {}
    for j in range(nodes.size):
        for k in range(j + 1, nodes.size):
            gap = round(float(nodes[k] - nodes[j]), 15)
            weights[gap] = weights.get(gap, 0.0) + 2 * coef[j] * coef[k]

    def base(w):
        return float(S(w)) / (w * w)

    total, err = integrate.quad(base, end, math.inf, epsabs=1e-15, epsrel=1e-12, limit=500)
    total *= float(np.sum(coef ** 2))
    for gap, c in weights.items():
        if c == 0.0 or gap <= 0.0:
            total += c * integrate.quad(base, end, math.inf, epsabs=1e-15, limit=500)[0]
            continue
        v, e = integrate.quad(base, end, math.inf, weight="cos", wvar=gap, limlst=200,
                              epsabs=1e-14)
        total += c * v
        err += abs(c) * e
    return total, err


def coherence_chi(S: SpectralDensity, pulse_times: Sequence[float], t: float,
                  panels_per_period: int = 1, rtol: float = 1e-8,
                  return_error: bool = False):
    """Decoherence function ``(2/pi) int_0^inf S(w)/w^2 F(w t) dw``.

    The integral is split into panels of width ``2 pi / (t * panels_per_period)``
    (the oscillation scale of the filter) up to the spectral support, or up
    to a tail point beyond which the remaining integral is handled by an
    infinite-range rule.

    Raises
    ------
    QuadratureError
        If the estimated absolute error exceeds ``rtol * max(1, chi)``.
    """
    times = np.asarray(pulse_times, dtype=float)
    if t <= 0:
        raise MetricsError("t must be positive")
    lim = _filter_slope2(times, t)

    def integrand(w):
        if w < 1e-9 / t:
            return float(S(w)) * lim
        return float(S(w)) * float(filter_function(times, times.size, t, w)) / (w * w)

    lo, hi = S.support
    period = 2 * math.pi / t / max(int(panels_per_period), 1)
    scale = S.cutoff if math.isfinite(S.cutoff) else 0.0
    if math.isfinite(hi):
        end = hi
    else:
        end = max(lo, 60 * scale, 200 * period)
    n_panels = int(math.ceil((end - lo) / period)) if end > lo else 0
    if n_panels > 200000:
        raise QuadratureError("too many panels; spectrum too broad for the requested t")
    edges = np.linspace(lo, end, n_panels + 1) if n_panels else np.array([lo, lo])
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += v
        err += e
    if not math.isfinite(hi):
        v, e = _chi_tail(S, times, t, end)
        total += v
        err += e
    chi = 2 / math.pi * total
    err = 2 / math.pi * err
    if err > rtol * max(1.0, abs(chi)):
        raise QuadratureError(f"chi quadrature error {err:g} above tolerance")
    return (chi, err) if return_error else chi


# ---------------------------------------------------------------------------
# closed-form bounds

THEORY_KINDS = ("xy4", "xy4_width", "cdd", "cdd_floor", "edd")


def theory_eta(kind: str, J: float, eps: float, tau: float, delta: float = 0.0,
               c: float = 1.0, n: int = 1) -> float:
    """Leading-order error bounds.

    ``xy4``        ``(4 J tau)[(4 eps tau)/2 + (2/9)(4 eps tau)^2]``
    ``xy4_width``  ``4 J delta`` plus the ``xy4`` value
    ``cdd``        ``4^(n(n+3)/2) (c eps tau)^n (J tau)``
    ``cdd_floor``  ``16 delta J`` (finite-width floor of every CDD level)
    ``edd``        ``(8 J tau)[(8 eps tau)/2 + (2/9)(8 eps tau)^2]``
    """
    if min(J, eps, tau, delta, c) < 0:
        raise MetricsError("all scales must be non-negative")
    if kind == "xy4":
        x = 4 * eps * tau
        return (4 * J * tau) * (0.5 * x + (2 / 9) * x * x)
    if kind == "xy4_width":
        return 4 * J * delta + theory_eta("xy4", J, eps, tau)
    if kind == "edd":
        x = 8 * eps * tau
        return (8 * J * tau) * (0.5 * x + (2 / 9) * x * x)
    if kind == "cdd":
        if n < 1:
            raise MetricsError("CDD level must be >= 1")
        return 4.0 ** (n * (n + 3) / 2) * (c * eps * tau) ** n * (J * tau)
    if kind == "cdd_floor":
        return 16 * delta * J
    raise MetricsError(f"unknown kind {kind!r}; expected one of {THEORY_KINDS}")


@dataclass(frozen=True)
class OptimalLevel:
    level: int
    warning: Optional[str] = None

    def __int__(self):
        return self.level


def cdd_optimal_level(cbar_eps_tau: float) -> OptimalLevel:
    """``floor(log4(1/x) - 1)`` with a warning (and level 0) outside ``0 < x < 1``.

    Computed on exact powers of four so that ``x = 4^-k`` lands on ``k - 1``.
    """
    x = float(cbar_eps_tau)
    if not x > 0:
        raise MetricsError("argument must be positive")
    if x >= 1:
        msg = "c*eps*tau >= 1: concatenation does not help; returning level 0"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return OptimalLevel(0, msg)
    # largest k with 4^k <= 1/x, i.e. floor(log4(1/x)), without rounding trouble
    k = int(math.floor(math.log(1 / x, 4)))
    while 4.0 ** (k + 1) * x <= 1:
        k += 1
    while 4.0 ** k * x > 1:
        k -= 1
    level = k - 1
    if level < 0:
        msg = "optimal level below 1; no concatenation recommended"
        return OptimalLevel(0, msg)
    return OptimalLevel(level)


def cdd_level_interval(level: int) -> tuple:
    """Range ``(lo, hi]`` of ``c*eps*tau`` whose optimal level is ``level``."""
    if level < 0:
        raise MetricsError("level must be non-negative")
    return 4.0 ** -(level + 2), 4.0 ** -(level + 1)
