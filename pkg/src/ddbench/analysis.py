"""
Statistics for fidelity decay data.

Bootstrap error bars, interpolation with time averaging (ITA), box-plot
summaries, and the three-parameter decay fit with AICc selection and
post-selection rules.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy import interpolate as _interp
from scipy import stats


class AnalysisError(ValueError):
    """Invalid input to an analysis routine."""


# ---------------------------------------------------------------------------
# data containers

@dataclass(frozen=True)
class DecayCurve:
    """Counts of the 0 outcome at each sampled time."""
    times: tuple
    zeros: tuple
    shots: tuple
    state_label: str = ""
    sequence_label: str = ""
    calibration_id: int = 0

    def __post_init__(self):
        t = tuple(float(x) for x in self.times)
        z = tuple(int(x) for x in self.zeros)
        s = tuple(int(x) for x in self.shots)
        if not (len(t) == len(z) == len(s)):
            raise AnalysisError("times, zeros and shots must have equal length")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise AnalysisError("times must be strictly increasing")
        if any(n <= 0 for n in s) or any(k < 0 or k > n for k, n in zip(z, s)):
            raise AnalysisError("need 0 <= zeros <= shots and shots > 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "zeros", z)
        object.__setattr__(self, "shots", s)

    @property
    def fidelities(self) -> np.ndarray:
        return np.array(self.zeros, dtype=float) / np.array(self.shots, dtype=float)

    def bootstrap(self, resamples: int = 1000, seed=0) -> tuple:
        """Per-point bootstrap means and standard deviations."""
        ss = np.random.SeedSequence(seed).spawn(len(self.times))
        out = [bootstrap_fidelity(z, n, resamples, s) for z, n, s in zip(self.zeros, self.shots, ss)]
        return np.array([m for m, _ in out]), np.array([s for _, s in out])


def bootstrap_fidelity(zeros: int, shots: int, resamples: int = 1000, seed=0) -> tuple:
    """Mean and sample standard deviation of resampled zero ratios.

    Resampling ``shots`` outcomes with replacement from ``zeros`` zeros is a
    binomial draw with the empirical ratio, which is what is sampled here.
    """
    if shots <= 0:
        raise AnalysisError("shots must be positive")
    if not 0 <= zeros <= shots:
        raise AnalysisError("need 0 <= zeros <= shots")
    if resamples < 100:
        raise AnalysisError("use at least 100 resamples")
    rng = np.random.default_rng(seed)
    p = zeros / shots
    draws = rng.binomial(shots, p, size=resamples) / shots
    return float(draws.mean()), float(draws.std(ddof=1))


# ---------------------------------------------------------------------------
# interpolation and ITA

def _lagrange_slope(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Derivative at ``x[i]`` of the polynomial through all ``(x, y)``."""
    xi = x[i]
    d = 0.0
    for k in range(len(x)):
        if k == i:
            d += y[i] * sum(1.0 / (xi - x[m]) for m in range(len(x)) if m != i)
        else:
            num = np.prod([xi - x[m] for m in range(len(x)) if m not in (i, k)])
            den = np.prod([x[k] - x[m] for m in range(len(x)) if m != k])
            d += y[k] * num / den
    return d


def local_cubic_slopes(x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Node slopes from the cubic through four neighbouring points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    w = min(4, n)
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - 1, 0), n - w)
        idx = slice(lo, lo + w)
        out[i] = _lagrange_slope(x[idx], y[idx], i - lo)
    return out


def _xy(curve) -> tuple:
    if isinstance(curve, DecayCurve):
        return np.array(curve.times), curve.fidelities
    t, f = curve
    return np.asarray(t, dtype=float), np.asarray(f, dtype=float)


def interpolate(curve, method: str = "hermite3") -> _interp.PPoly:
    """Piecewise cubic through every data point.

    Parameters
    ----------
    curve : DecayCurve or (times, values)
    method : {"hermite3", "cubic_spline"}
        Third-order Hermite with local-cubic slopes, or a not-a-knot cubic spline.
    """
    x, y = _xy(curve)
    if len(x) < 3:
        raise AnalysisError("interpolation needs at least 3 points")
    if np.any(np.diff(x) <= 0):
        raise AnalysisError("times must be strictly increasing (duplicates are not allowed)")
    if method == "hermite3":
        return _interp.CubicHermiteSpline(x, y, local_cubic_slopes(x, y))
    if method == "cubic_spline":
        return _interp.CubicSpline(x, y, bc_type="not-a-knot")
    raise AnalysisError(f"unknown interpolation method {method!r}")


def time_averaged_fidelity(curve, T: float, method: str = "hermite3") -> float:
    """``(1/T) int_0^T f(t)/f(0) dt`` of the interpolated curve.

    The interpolant is piecewise polynomial, so the integral is exact.
    """
    x, _ = _xy(curve)
    if T <= 0:
        raise AnalysisError("T must be positive")
    if x[0] > 1e-12 * T:
        raise AnalysisError("curve must start at t = 0")
    if T > x[-1] * (1 + 1e-12):
        raise AnalysisError("T lies beyond the sampled range")
    pp = interpolate(curve, method)
    f0 = float(pp(0.0))
    if f0 == 0:
        raise AnalysisError("f(0) = 0; cannot normalize")
    return float(pp.integrate(0.0, T)) / (T * f0)


class BoxStats(NamedTuple):
    min: float
    q25: float
    median: float
    q75: float
    max: float
    mean: float


def quantile(sorted_values: Sequence[float], x: int) -> float:
    """Smallest value with at least ``x`` percent of the data at or below it."""
    n = len(sorted_values)
    k = max(-(-x * n // 100), 1)
    return float(sorted_values[k - 1])


def quartile_summary(values: Sequence[float]) -> BoxStats:
    v = sorted(float(a) for a in values)
    if not v:
        raise AnalysisError("empty input")
    return BoxStats(v[0], quantile(v, 25), quantile(v, 50), quantile(v, 75), v[-1],
                    float(np.mean(v)))


def haar_convergence(fidelities_by_state: Sequence[float], prefix_sizes: Sequence[int]) -> dict:
    """Running mean over the first ``N`` states for each ``N`` in ``prefix_sizes``."""
    f = np.asarray(fidelities_by_state, dtype=float)
    out = {}
    for n in prefix_sizes:
        if n < 1 or n > f.size:
            raise AnalysisError(f"prefix {n} exceeds the {f.size} available states")
        out[int(n)] = float(f[:n].mean())
    return out


# ---------------------------------------------------------------------------
# decay fit

def gamma_decay(t, lam, gam, alp):
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.exp(-t / lam) * np.cos(gam * t) + np.exp(-t / alp))


def _gamma_grad(t, lam, gam, alp):
    e1 = np.exp(-t / lam)
    e2 = np.exp(-t / alp)
    c, s = np.cos(gam * t), np.sin(gam * t)
    return np.stack([0.5 * e1 * c * t / lam ** 2, -0.5 * e1 * s * t, 0.5 * e2 * t / alp ** 2], -1)


def decay_model(t, params, f0: float, fT: float, T_f: float) -> np.ndarray:
    """``(fT - f0)/(Gamma(T_f) - 1) (Gamma(t) - 1) + f0``."""
    lam, gam, alp = params
    G = gamma_decay(T_f, lam, gam, alp) - 1
    return (fT - f0) / G * (gamma_decay(t, lam, gam, alp) - 1) + f0


def _model_jac(t, params, f0, fT, T_f) -> np.ndarray:
    lam, gam, alp = params
    g = gamma_decay(t, lam, gam, alp) - 1
    G = np.float64(gamma_decay(T_f, lam, gam, alp) - 1)
    dg = _gamma_grad(np.asarray(t, dtype=float), lam, gam, alp)
    dG = _gamma_grad(np.asarray(T_f, dtype=float), lam, gam, alp)
    return (fT - f0) * (dg * G - g[:, None] * dG[None, :]) / G ** 2


@dataclass
class FitResult:
    lam: float
    gamma: float
    alpha: float
    se: tuple
    half_width: tuple
    aicc: float
    chi2: float
    converged: bool
    history: list = field(default_factory=list, repr=False)
    accepted: bool = False
    reasons: list = field(default_factory=list)
    seed_index: int = -1
    seed: tuple = ()
    folded: bool = False

    @property
    def params(self) -> tuple:
        return (self.lam, self.gamma, self.alpha)


def aicc(chi2: float, n: int, k: int = 4) -> float:
    """Small-sample corrected AIC for a Gaussian likelihood with ``k`` parameters."""
    if n - k - 1 <= 0:
        return math.inf
    if chi2 <= 0:
        return -math.inf
    return n * math.log(2 * math.pi * chi2 / n) + n + 2 * k + 2 * k * (k + 1) / (n - k - 1)


def levenberg_marquardt(resid: Callable, jac: Callable, x0, max_iter: int = 300,
                        ftol: float = 1e-12, xtol: float = 1e-12) -> tuple:
    """Minimize ``sum resid(x)^2`` with Levenberg-Marquardt damping.

    Returns ``(x, cost_history, converged)``; the history lists the cost at
    every accepted iterate and is non-increasing.
    """
    x = np.asarray(x0, dtype=float)
    r = resid(x)
    cost = float(r @ r)
    if not math.isfinite(cost):
        return x, [cost], False
    hist = [cost]
    mu = None
    nu = 2.0
    for _ in range(max_iter):
        Jm = jac(x)
        if not np.all(np.isfinite(Jm)):
            return x, hist, False
        A = Jm.T @ Jm
        g = Jm.T @ r
        dA = np.diag(A).copy()
        dA[dA <= 0] = 1e-12 * max(dA.max(initial=0.0), 1.0)
        if mu is None:
            mu = 1e-3 * dA.max()
        improved = False
        for _inner in range(60):
            try:
                step = np.linalg.solve(A + mu * np.diag(dA), -g)
            except np.linalg.LinAlgError:
                mu *= nu
                nu *= 2
                continue
            xn = x + step
            rn = resid(xn)
            cn = float(rn @ rn)
            if math.isfinite(cn) and cn <= cost:
                rel = (cost - cn) / max(cost, 1e-300)
                x, r = xn, rn
                cost = cn
                hist.append(cost)
                mu *= max(1 / 3, 1 - (2 * min(rel * 10, 1.0) - 1) ** 3)
                nu = 2.0
                improved = True
                small = np.linalg.norm(step) <= xtol * (np.linalg.norm(x) + xtol)
                if rel < ftol or small:
                    return x, hist, True
                break
            mu *= nu
            nu *= 2
        if not improved:
            # no downhill step at any damping: stationary point
            return x, hist, True
    return x, hist, False


def default_seeds(T_f: float, dt: float) -> list:
    """Cartesian grid of starting points ``(lambda, gamma, alpha)``."""
    B = math.pi / dt
    out = []
    for gam, lam, a_mult in itertools.product((0.0, B / 4, B / 2), (T_f / 2, T_f, 2 * T_f), (1, 10)):
        out.append((lam, gam, a_mult * lam))
    return out


def fit_decay(curve, sigmas: Optional[Sequence[float]] = None, seeds: Optional[Sequence] = None,
              dt: Optional[float] = None, check_points: int = 1000) -> list:
    """Weighted least-squares fits of the three-parameter decay model.

    Parameters
    ----------
    curve : DecayCurve or (times, fidelities)
        Endpoints ``f(0)`` and ``f(T_f)`` anchor the model.
    sigmas : per-point standard deviations (required for raw arrays)
    seeds : starting ``(lambda, gamma, alpha)`` triples; defaults to :func:`default_seeds`
    dt : sample spacing for the Nyquist band (defaults to the mean spacing)

    Returns
    -------
    list of FitResult
        One per seed, with rule (a)/(b) checks applied and ``accepted`` set.
        Failures are reported per seed and never raised.
    """
    t, f = _xy(curve)
    if sigmas is None:
        if isinstance(curve, DecayCurve):
            _, sigmas = curve.bootstrap()
        else:
            raise AnalysisError("sigmas are required")
    sig = np.asarray(sigmas, dtype=float)
    if len(t) < 5:
        raise AnalysisError("fit needs at least 5 points")
    if np.any(sig <= 0):
        raise AnalysisError("sigmas must be positive")
    T_f = float(t[-1])
    if dt is None:
        dt = T_f / (len(t) - 1)
    f0, fT = float(f[0]), float(f[-1])
    if seeds is None:
        seeds = default_seeds(T_f, dt)
    # work in units of T_f for conditioning
    ts = t / T_f
    w = 1.0 / sig
    n = len(t)
    nu = n - 3
    tcrit = float(stats.t.ppf(0.975, nu))
    grid = np.linspace(0.0, 1.0, check_points)
    B = math.pi / dt
    results = []
    for idx, seed in enumerate(seeds):
        lam0, gam0, alp0 = seed
        x0 = np.array([lam0 / T_f, gam0 * T_f, alp0 / T_f])

        def resid(x):
            with np.errstate(all="ignore"):
                return w * (decay_model(ts, x, f0, fT, 1.0) - f)

        def jac(x):
            with np.errstate(all="ignore"):
                return w[:, None] * _model_jac(ts, x, f0, fT, 1.0)

        scale = np.array([T_f, 1 / T_f, T_f])
        try:
            x, hist, conv = levenberg_marquardt(resid, jac, x0)
        except (ArithmeticError, ValueError) as exc:
            results.append(FitResult(math.nan, math.nan, math.nan, (math.nan,) * 3, (math.nan,) * 3,
                                     math.inf, math.inf, False, [], False, [f"optimizer: {exc}"],
                                     idx, tuple(seed)))
            continue
        r = resid(x)
        chi2 = float(r @ r)
        reasons = []
        if not conv:
            reasons.append("not converged")
        Jm = jac(x)
        se = (math.nan,) * 3
        try:
            A = Jm.T @ Jm
            if not np.all(np.isfinite(A)) or np.linalg.cond(A) > 1e14:
                raise np.linalg.LinAlgError("singular normal matrix")
            cov = np.linalg.inv(A)
            se = tuple(float(math.sqrt(max(c, 0.0))) for c in np.diag(cov) * scale ** 2)
        except np.linalg.LinAlgError:
            reasons.append("singular normal matrix")
        p = x * scale
        lam, gam, alp = float(p[0]), abs(float(p[1])), float(p[2])
        hw = tuple(tcrit * s for s in se)
        # rule (a)
        with np.errstate(all="ignore"):
            pred = decay_model(grid, x, f0, fT, 1.0)
        if not np.all(np.isfinite(pred)) or pred.min() < 0 or pred.max() > 1:
            reasons.append("rule (a): prediction outside [0, 1]")
        if not (lam > 0 and alp > 0):
            reasons.append("non-positive decay constant")
        # rule (b)
        for name, v, h in zip(("lambda", "gamma", "alpha"), (lam, gam, alp), hw):
            if not (math.isfinite(h) and abs(v) > h):
                reasons.append(f"rule (b): |{name}| not larger than its 95% half-width")
        res = FitResult(lam, gam, alp, se, hw, aicc(chi2, n), chi2, conv, hist,
                        not reasons, reasons, idx, tuple(seed))
        if res.accepted and gam > B:
            res.reasons.append("rule (c): gamma above the Nyquist band (fold before use)")
            res.accepted = False
        results.append(res)
    return results


@dataclass
class Selection:
    best: Optional[FitResult]
    B: float
    rejected: list


def postselect_and_fold(fits: Sequence[FitResult], dt: float) -> Selection:
    """Drop fits violating rules (a)/(b), keep the lowest AICc, fold gamma into ``[0, B)``.

    ``B = 2 pi / (2 dt)``. Ties on AICc are broken by seed index.
    """
    if dt <= 0:
        raise AnalysisError("dt must be positive")
    B = 2 * math.pi / (2 * dt)
    ok, rejected = [], []
    for f in fits:
        hard = [r for r in f.reasons if not r.startswith("rule (c)")]
        if hard:
            rejected.append((f.seed_index, hard))
        else:
            ok.append(f)
    if not ok:
        return Selection(None, B, rejected)
    best = min(ok, key=lambda f: (f.aicc, f.seed_index))
    g = math.fmod(best.gamma, B)
    if g < 0:
        g += B
    folded = FitResult(best.lam, g, best.alpha, best.se, best.half_width, best.aicc, best.chi2,
                       best.converged, best.history, True, [], best.seed_index, best.seed,
                       folded=g != best.gamma)
    return Selection(folded, B, rejected)
