"""
Catalog of dynamical-decoupling sequences as abstract pulse programs.

A sequence is an ordered list of pi pulses together with the fractions of
the total duration spent in free evolution before, between and after the
pulses. Uniform sequences are stored in their asymmetric form
``P1 f P2 f ... Pn f`` (leading fraction 0), except Hahn and CPMG which
carry their conventional symmetric timing ``f/2 P ... P f/2``.
Non-uniform sequences (UDD, QDD) additionally carry the target pulse
times normalized to a unit total duration.

Examples
--------
>>> seq = build("xy4")
>>> [p.label for p in seq.pulses]
['Y', 'X', 'Y', 'X']
>>> build("cdd", n=2).n_physical
20
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

PHYSICAL = "physical"
VIRTUAL_Z = "virtual_z"
IDENTITY_WAIT = "identity_wait"
PULSE_KINDS = (PHYSICAL, VIRTUAL_Z, IDENTITY_WAIT)

FAMILIES = ("Free", "Hahn", "CPMG", "XY4", "CDD", "EDD", "RGA", "KDD", "UR", "UDDx", "QDD")


class SequenceError(ValueError):
    """Raised for unknown catalog names or unsupported orders."""


@dataclass(frozen=True)
class Pulse:
    """A single pi rotation about an axis in the xy-plane.

    ``phi`` is the axis angle measured from x, ``sign`` = -1 marks the
    barred pulse (opposite orientation).
    """

    phi: float = 0.0
    theta: float = math.pi
    sign: int = 1
    kind: str = PHYSICAL

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @property
    def label(self) -> str:
        if self.kind == VIRTUAL_Z:
            return "Z"
        if self.kind == IDENTITY_WAIT:
            return "I"
        names = {0.0: "X", math.pi / 2: "Y", math.pi: "-X", 3 * math.pi / 2: "-Y"}
        base = None
        for ang, nm in names.items():
            if abs(self.phi - ang) < 1e-12:
                base = nm
        if base is None:
            base = f"({self.phi:.6g})"
        return base + ("bar" if self.sign < 0 else "")

    def occupies_time(self) -> bool:
        return self.kind != VIRTUAL_Z


X = Pulse(0.0)
Y = Pulse(math.pi / 2)
XBAR = Pulse(0.0, sign=-1)
YBAR = Pulse(math.pi / 2, sign=-1)
Z = Pulse(0.0, kind=VIRTUAL_Z)
IDLE = Pulse(0.0, kind=IDENTITY_WAIT)


def rot(phi: float) -> Pulse:
    """The pi pulse about the axis at angle ``phi`` from x."""
    return Pulse(phi)


@dataclass(frozen=True)
class SequenceIR:
    """Pulses plus normalized free-evolution fractions.

    ``fractions`` has ``len(pulses) + 1`` entries: leading gap, the gap
    after each pulse. ``times`` (non-uniform families only) holds the target
    time of every pulse on a unit total duration.
    """

    name: str
    pulses: tuple
    fractions: tuple
    uniform: bool
    universal: bool
    family: str
    times: Optional[tuple] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.fractions) != len(self.pulses) + 1:
            raise ValueError("fractions must have len(pulses) + 1 entries")
        if any(f < -1e-15 for f in self.fractions):
            raise ValueError("negative interval fraction")
        if abs(math.fsum(self.fractions) - 1.0) > 1e-12:
            raise ValueError("fractions must sum to 1")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def n_pulses(self) -> int:
        return len(self.pulses)

    @property
    def n_physical(self) -> int:
        return sum(p.kind == PHYSICAL for p in self.pulses)

    @property
    def free_periods(self) -> int:
        """Number of non-empty free-evolution periods."""
        return sum(f > 0 for f in self.fractions)

    @property
    def labels(self) -> list:
        return [p.label for p in self.pulses]

    def interior_fractions(self) -> list:
        return list(self.fractions[1:-1])


# ---------------------------------------------------------------------------
# builders for the uniform families


def _uniform(name, pulses, family, universal, symmetric=False, **params) -> SequenceIR:
    pulses = tuple(pulses)
    n = len(pulses)
    if n == 0:
        fr = (1.0,)
    elif symmetric:
        fr = (0.5 / n,) + (1.0 / n,) * (n - 1) + (0.5 / n,)
    else:
        fr = (0.0,) + (1.0 / n,) * n
    return SequenceIR(name, pulses, fr, True, universal, family, params=params)


def _tokens(seq: SequenceIR) -> list:
    """Flatten to alternating wait/pulse tokens: ('w', frac) or ('p', Pulse)."""
    out = []
    for k, p in enumerate(seq.pulses):
        out.append(("w", seq.fractions[k]))
        out.append(("p", p))
    out.append(("w", seq.fractions[-1]))
    return out


def _from_tokens(name, tokens, family, universal, **params) -> SequenceIR:
    pulses, fracs, acc = [], [], 0.0
    for kind, val in tokens:
        if kind == "w":
            acc += val
        else:
            fracs.append(acc)
            pulses.append(val)
            acc = 0.0
    fracs.append(acc)
    total = math.fsum(fracs)
    fracs = [f / total for f in fracs]
    nz = [f for f in fracs[1:-1] if f > 0]
    uniform = all(abs(f - nz[0]) < 1e-12 for f in nz) if nz else True
    return SequenceIR(name, tuple(pulses), tuple(fracs), uniform, universal, family, params=params)


def concat(outer: SequenceIR, inner: SequenceIR, name: Optional[str] = None,
           family: Optional[str] = None, universal: Optional[bool] = None) -> SequenceIR:
    """Replace every free period of ``outer`` with a full copy of ``inner``.

    Pulses are emitted literally; adjacent pulses are never merged.
    """
    if not outer.uniform:
        raise SequenceError(f"cannot concatenate into non-uniform sequence {outer.name}")
    if not inner.uniform:
        raise SequenceError(f"cannot concatenate non-uniform sequence {inner.name}")
    inner_tokens = _tokens(inner)
    tokens = []
    for kind, val in _tokens(outer):
        if kind == "w":
            if val > 0:
                tokens.extend((k, v * val if k == "w" else v) for k, v in inner_tokens)
        else:
            tokens.append((kind, val))
    return _from_tokens(
        name or f"{outer.name}[{inner.name}]",
        tokens,
        family or outer.family,
        outer.universal if universal is None else universal,
    )


def free() -> SequenceIR:
    return SequenceIR("free", (), (1.0,), True, True, "Free")


def ur_phases(n: int) -> list:
    """Axis angles of the universally robust sequence with ``n`` pulses."""
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2:
        raise SequenceError("UR is defined for even n >= 2")
    if n == 2:
        return [0.0, 0.0]
    m, r = divmod(n, 4)
    # phases in units of pi, reduced exactly before converting
    big_phi = Fraction(1, m) if r == 0 else Fraction(2 * m, 2 * m + 1)
    phis = []
    for k in range(1, n + 1):
        turns = (Fraction((k - 1) * (k - 2), 2) * big_phi + Fraction(k - 1, 2)) % 2
        phis.append(float(turns) * math.pi)
    return phis


def kdd_block(phi: float) -> list:
    """Five-pulse Knill composite about ``phi``."""
    return [rot(math.pi / 6 + phi), rot(phi), rot(math.pi / 2 + phi), rot(phi), rot(math.pi / 6 + phi)]


# ---------------------------------------------------------------------------
# non-uniform timing


def uhrig_times(n: int, T: float = 1.0) -> list:
    """Uhrig pulse times, padded to an even pulse count for odd ``n``."""
    if n < 1:
        raise SequenceError("UDD order must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    jmax = n if n % 2 == 0 else n + 1
    return [T * math.sin(j * math.pi / (2 * n + 2)) ** 2 for j in range(1, jmax + 1)]


def udd_normalized_intervals(n: int) -> list:
    """Intervals of UDD_n in units of the first pulse time."""
    if n < 1:
        raise SequenceError("UDD order must be >= 1")
    c = 1.0 / math.sin(math.pi / (2 * n + 2))
    return [math.sin((2 * j - 1) * math.pi / (2 * n + 2)) * c for j in range(1, n + 2)]


def _timed(name, slots, family, universal, **params) -> SequenceIR:
    """Build a SequenceIR from (time, pulse) slots on [0, 1]."""
    slots = sorted(slots, key=lambda s: s[0])
    pulses, fracs, times, prev = [], [], [], 0.0
    for t, p in slots:
        fracs.append(max(t - prev, 0.0))
        pulses.append(p)
        times.append(t)
        prev = t
    fracs.append(max(1.0 - prev, 0.0))
    s = math.fsum(fracs)
    fracs = [f / s for f in fracs]
    return SequenceIR(name, tuple(pulses), tuple(fracs), False, universal, family,
                      times=tuple(times), params=params)


def uddx(n: int) -> SequenceIR:
    times = uhrig_times(n, 1.0)
    slots = [(t, X) for t in times]
    if n % 2 == 0:
        slots.append((1.0, IDLE))
    return _timed(f"uddx{n}", slots, "UDDx", False, n=n)


@dataclass(frozen=True)
class QDDTiming:
    """Absolute outer (Y) and inner (X) target times of QDD_{n,m}."""

    outer: tuple
    inner: tuple  # one tuple of inner times per outer interval


def qdd_timing(n: int, m: int, T: float = 1.0) -> QDDTiming:
    if n < 1 or m < 1:
        raise SequenceError("QDD orders must be >= 1")
    if not T > 0:
        raise ValueError("T must be positive")
    outer = uhrig_times(n, T)
    bounds = [0.0] + outer[:n] + [T]  # n+1 outer intervals
    kmax = m if m % 2 == 0 else m + 1
    inner = []
    for j in range(1, n + 2):
        tau_j = bounds[j] - bounds[j - 1]
        inner.append(tuple(
            tau_j * math.sin(k * math.pi / (2 * m + 2)) ** 2 + bounds[j - 1] for k in range(1, kmax + 1)
        ))
    return QDDTiming(tuple(outer), tuple(inner))


def qdd(n: int, m: int) -> SequenceIR:
    """Quadratic DD: UDD_m of X pulses nested in the intervals of UDD_n of Y pulses.

    Where an inner X coincides with an outer Y (odd ``m``) a virtual Z is
    emitted followed by an identity wait so the slot keeps its timing.
    ``times`` are normalized to a unit duration; see :func:`qdd_timing` for
    absolute times.
    """
    timing = qdd_timing(n, m, 1.0)
    outer = set(timing.outer)
    slots = []
    tol = 1e-12
    for j, inner in enumerate(timing.inner):
        for t in inner:
            hit = [o for o in outer if abs(o - t) < tol]
            if hit:
                slots.append((hit[0], Z))
                slots.append((hit[0], IDLE))
                outer.discard(hit[0])
            else:
                slots.append((t, X))
    for o in outer:
        slots.append((o, Y))
    if n % 2 == 0 and m % 2 == 0:
        slots.append((1.0, IDLE))
    # stable order: a coincident Z precedes its identity wait
    order = {VIRTUAL_Z: 0, PHYSICAL: 1, IDENTITY_WAIT: 2}
    slots.sort(key=lambda s: (s[0], order[s[1].kind]))
    return _timed(f"qdd{n}_{m}", slots, "QDD", True, n=n, m=m)


# ---------------------------------------------------------------------------
# catalog

_RGA_BASE = {
    "rga2x": [X, XBAR],
    "rga2y": [Y, YBAR],
    "rga4": [YBAR, X, YBAR, X],
    "rga4p": [YBAR, XBAR, YBAR, XBAR],
    "rga8c": [X, Y, X, Y, Y, X, Y, X],
    "rga8a": [X, YBAR, X, YBAR, Y, XBAR, Y, XBAR],
}
_RGA_RECURSIVE = {
    "rga16b": ("rga4p", "rga4p"),
    "rga32a": ("rga4", "rga8a"),
    "rga32c": ("rga8c", "rga4"),
    "rga64a": ("rga8a", "rga8a"),
    "rga64c": ("rga8c", "rga8c"),
    "rga256a": ("rga4", "rga64a"),
}
RGA_NAMES = tuple(_RGA_BASE) + tuple(_RGA_RECURSIVE)

ALIASES = {
    "super_hahn": "rga2x",
    "xy8": "rga8c",
    "cdd1": "xy4",
    "ur2": "cpmg",
    "ur4": "xy4",
}

# orders of the paper's tested set, used by list/catalog
CDD_ORDERS = range(1, 6)
UR_ORDERS = (2, 4, 6, 10, 20, 50, 100)
UDD_ORDERS = range(1, 26)
QDD_ORDERS = range(1, 7)


def _simple(name: str) -> Optional[SequenceIR]:
    if name == "free":
        return free()
    if name == "hahn":
        return _uniform("hahn", [X], "Hahn", False, symmetric=True)
    if name == "px":
        return _uniform("px", [X, X], "CPMG", False)
    if name == "cpmg":
        return _uniform("cpmg", [X, X], "CPMG", False, symmetric=True)
    if name == "super_cpmg":
        return _uniform("super_cpmg", [X, X, XBAR, XBAR], "CPMG", False)
    if name == "xy4":
        return _uniform("xy4", [Y, X, Y, X], "XY4", True)
    if name == "edd":
        return _uniform("edd", _RGA_BASE["rga8c"], "EDD", True)
    if name == "super_euler":
        fwd = [X, Y, X, Y, Y, X, Y, X]
        bar = [XBAR, YBAR, XBAR, YBAR, YBAR, XBAR, YBAR, XBAR]
        return _uniform("super_euler", fwd + bar, "EDD", True)
    if name == "kdd":
        pulses = kdd_block(math.pi / 2) + kdd_block(0.0) + kdd_block(math.pi / 2) + kdd_block(0.0)
        return _uniform("kdd", pulses, "KDD", True)
    if name in _RGA_BASE:
        if name == "rga8c":
            return _uniform(name, _RGA_BASE[name], "RGA", True)
        return _uniform(name, _RGA_BASE[name], "RGA", name not in ("rga2x", "rga2y"))
    if name in _RGA_RECURSIVE:
        o, i = _RGA_RECURSIVE[name]
        return concat(build(o), build(i), name=name, family="RGA", universal=True)
    return None


def _cdd(n: int) -> SequenceIR:
    if not 1 <= n <= 5:
        raise SequenceError("CDD order must be in [1, 5]")
    return _cdd_any(n)


@lru_cache(maxsize=None)
def _cdd_any(n: int) -> SequenceIR:
    base = _uniform("cdd1", [Y, X, Y, X], "CDD", True)
    seq = base
    for k in range(2, n + 1):
        seq = concat(base, seq, name=f"cdd{k}", family="CDD", universal=True)
    return seq


def _ur(n: int) -> SequenceIR:
    pulses = [rot(phi) for phi in ur_phases(n)]
    return _uniform(f"ur{n}", pulses, "UR", n >= 4, symmetric=(n == 2), n=n)


def parse_name(name: str, n: Optional[int] = None, m: Optional[int] = None):
    """Split catalog ids like ``cdd3``, ``ur20``, ``uddx7``, ``qdd2_4``."""
    key = name.strip().lower().replace("-", "_")
    key = ALIASES.get(key, key)
    if key.startswith("qdd") and key != "qdd":
        body = key[3:].strip("_")
        a, _, b = body.partition("_")
        return "qdd", int(a), int(b)
    for fam in ("uddx", "udd", "cdd", "ur"):
        if key.startswith(fam) and key[len(fam):].isdigit():
            return ("uddx" if fam == "udd" else fam), int(key[len(fam):]), m
    return key, n, m


def build(name: str, n: Optional[int] = None, m: Optional[int] = None) -> SequenceIR:
    """Construct a catalog sequence.

    Parameters
    ----------
    name : str
        Catalog id. Ordered families accept the order either inline
        (``"cdd3"``, ``"ur10"``, ``"uddx5"``, ``"qdd2_3"``) or through ``n``/``m``.
    n, m : int, optional
        Orders for CDD, UR, UDDx (``n``) and QDD (``n``, ``m``).
    """
    key, n, m = parse_name(name, n, m)
    if key == "cdd":
        if n is None:
            raise SequenceError("CDD needs an order n")
        return _cdd(n)
    if key == "ur":
        if n is None:
            raise SequenceError("UR needs an order n")
        return _ur(n)
    if key == "uddx":
        if n is None or not 1 <= n <= 25:
            raise SequenceError("UDDx order must be in [1, 25]")
        return uddx(n)
    if key == "qdd":
        if n is None or m is None or not (1 <= n <= 6 and 1 <= m <= 6):
            raise SequenceError("QDD orders must be in [1, 6]")
        return qdd(n, m)
    seq = _simple(key)
    if seq is None:
        raise SequenceError(f"unknown sequence {name!r}")
    return seq


def catalog() -> list:
    """Every supported sequence id (tested orders only), plus Free."""
    names = ["free", "hahn", "super_hahn", "rga2y", "cpmg", "super_cpmg"]
    names += [f"ur{n}" for n in UR_ORDERS if n >= 4] + ["xy4"]
    names += [f"cdd{n}" for n in CDD_ORDERS if n >= 2]
    names += ["rga4", "rga4p", "rga8c", "rga8a", "super_euler", "kdd"]
    names += list(_RGA_RECURSIVE)
    names += [f"uddx{n}" for n in UDD_ORDERS]
    names += [f"qdd{n}_{m}" for n in QDD_ORDERS for m in QDD_ORDERS]
    return names


def resolve(names: Sequence[str]) -> list:
    return [build(nm) for nm in names]
