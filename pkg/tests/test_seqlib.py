import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddbench import seqlib
from ddbench.dynamics import phase_aligned_distance, sequence_unitary
from ddbench.seqlib import (
    IDENTITY_WAIT, PHYSICAL, VIRTUAL_Z, X, XBAR, Y, YBAR, SequenceError, build, concat,
    kdd_block, qdd, qdd_timing, uddx, udd_normalized_intervals, uhrig_times, ur_phases,
)

PI = math.pi


def phases(seq):
    return [p.phi for p in seq.pulses]


def test_xy4_pulses_and_flags():
    s = build("xy4")
    assert list(s.pulses) == [Y, X, Y, X]
    assert s.uniform and s.universal
    assert s.fractions == (0.0, 0.25, 0.25, 0.25, 0.25)


def test_hahn_single_pulse():
    s = build("hahn")
    assert list(s.pulses) == [X]
    assert s.fractions == (0.5, 0.5)


def test_rga2y():
    assert list(build("rga2y").pulses) == [Y, YBAR]


def test_edd_and_rga8a_literal():
    assert list(build("edd").pulses) == [X, Y, X, Y, Y, X, Y, X]
    assert list(build("rga8a").pulses) == [X, YBAR, X, YBAR, Y, XBAR, Y, XBAR]


def _cdd_count(n):
    # recursion p(n) = 4 + 4 p(n-1), p(1) = 4
    return 4 if n == 1 else 4 + 4 * _cdd_count(n - 1)


@pytest.mark.parametrize("n", range(1, 6))
def test_cdd_counts(n):
    s = build("cdd", n)
    assert s.n_physical == _cdd_count(n)
    # every pulse slot is followed by a free period of equal length
    assert sum(f > 0 for f in s.fractions[1:]) == 4 ** n


def test_cdd2_brute_force():
    inner = [Y, X, Y, X]
    expanded = []
    for p in [Y, X, Y, X]:
        expanded += [p] + inner
    assert list(build("cdd2").pulses) == expanded
    assert len(expanded) == 20


def test_ur_phases_examples():
    assert ur_phases(4) == [0.0, PI / 2, 0.0, PI / 2]
    assert ur_phases(2) == [0.0, 0.0]
    want6 = [0, PI / 2, 5 * PI / 3, 3 * PI / 2, 0, 7 * PI / 6]
    assert np.allclose(ur_phases(6), want6, atol=1e-14)


@pytest.mark.parametrize("n", [4, 6, 8, 10, 12, 20, 50, 100])
def test_ur_phases_formula(n):
    m, r = divmod(n, 4)
    big = Fraction(1, m) if r == 0 else Fraction(2 * m, 2 * m + 1)
    for k, phi in enumerate(ur_phases(n), start=1):
        turns = (Fraction((k - 1) * (k - 2), 2) * big + Fraction(k - 1, 2)) % 2
        assert phi == pytest.approx(float(turns) * PI, abs=1e-13)
        assert 0 <= phi < 2 * PI


@pytest.mark.parametrize("n", [0, 3, 7, -2])
def test_ur_rejects_odd(n):
    with pytest.raises(SequenceError):
        ur_phases(n)


def test_ur4_is_xy4_up_to_rotation():
    ur = build("ur4")
    assert ur.name == "xy4"
    raw = [seqlib.rot(p) for p in ur_phases(4)]
    xy4 = list(build("xy4").pulses)
    assert raw[1:] + raw[:1] == xy4


def test_kdd_block():
    assert np.allclose([p.phi for p in kdd_block(0.0)], [PI / 6, 0, PI / 2, 0, PI / 6])
    assert np.allclose([p.phi for p in kdd_block(PI / 2)],
                       [2 * PI / 3, PI / 2, PI, PI / 2, 2 * PI / 3])
    assert build("kdd").n_pulses == 20


def test_kdd_block_product():
    u = sequence_unitary(kdd_block(0.0))
    rx = np.array([[0, -1j], [-1j, 0]])
    th = -PI / 3
    rz = np.diag([np.exp(-1j * th / 2), np.exp(1j * th / 2)])
    assert min(phase_aligned_distance(u, rz @ rx), phase_aligned_distance(u, rx @ rz)) < 1e-12


def test_uhrig_times_examples():
    assert uhrig_times(1, 1.0) == pytest.approx([0.5, 1.0], abs=1e-15)
    assert uhrig_times(2, 1.0) == pytest.approx([0.25, 0.75], abs=1e-15)
    assert uhrig_times(3, 1.0) == pytest.approx([0.146447, 0.5, 0.853553, 1.0], abs=1e-6)
    with pytest.raises(ValueError):
        uhrig_times(2, 0.0)


@pytest.mark.parametrize("n", range(1, 26))
def test_udd_parity_and_intervals(n):
    t = uhrig_times(n, 2.0)
    assert len(t) % 2 == 0
    if n % 2:
        assert t[-1] == 2.0
    s = udd_normalized_intervals(n)
    assert np.allclose(s, s[::-1], atol=1e-12)
    # intervals in units of the first pulse time
    full = [0.0] + [math.sin(j * PI / (2 * n + 2)) ** 2 for j in range(1, n + 2)]
    gaps = np.diff(full)
    assert np.allclose(gaps / gaps[0], s, atol=1e-12)


def test_udd_intervals_small():
    assert udd_normalized_intervals(1) == pytest.approx([1, 1])
    assert udd_normalized_intervals(2) == pytest.approx([1, 2, 1])


def test_uddx_even_padding():
    s = uddx(2)
    assert [p.kind for p in s.pulses] == [PHYSICAL, PHYSICAL, IDENTITY_WAIT]
    assert s.times[-1] == 1.0
    assert not s.uniform


def test_qdd11_virtual_z():
    s = qdd(1, 1)
    kinds = [p.kind for p in s.pulses]
    assert VIRTUAL_Z in kinds
    zi = kinds.index(VIRTUAL_Z)
    assert kinds[zi + 1] == IDENTITY_WAIT
    assert s.times[zi] == s.times[zi + 1]


@pytest.mark.parametrize("n", range(1, 7))
def test_qdd_even_m_no_z(n):
    s = qdd(n, 2)
    assert all(p.kind != VIRTUAL_Z for p in s.pulses)


@pytest.mark.parametrize("n,m", [(2, 2), (2, 4), (4, 2), (4, 4)])
def test_qdd_even_count(n, m):
    s = qdd(n, m)
    assert s.n_physical == n + n * m + m


@pytest.mark.parametrize("n,m", [(a, b) for a in range(1, 7) for b in range(1, 7)])
def test_qdd_inner_times(n, m):
    T = 3.0
    tm = qdd_timing(n, m, T)
    bounds = [0.0] + list(tm.outer[:n]) + [T]
    kmax = m if m % 2 == 0 else m + 1
    for j in range(1, n + 2):
        tau = bounds[j] - bounds[j - 1]
        want = [tau * math.sin(k * PI / (2 * m + 2)) ** 2 + bounds[j - 1] for k in range(1, kmax + 1)]
        assert np.allclose(tm.inner[j - 1], want, atol=1e-12, rtol=0)


def test_concat_examples():
    xy4 = build("xy4")
    c = concat(xy4, xy4)
    assert list(c.pulses) == list(build("cdd2").pulses)
    assert concat(xy4, seqlib.free()).pulses == xy4.pulses
    rga32a = build("rga32a")
    expect = []
    inner = list(build("rga8a").pulses)
    for p in build("rga4").pulses:
        expect += [p] + inner
    assert list(rga32a.pulses) == expect


def test_concat_rejects_nonuniform():
    with pytest.raises(SequenceError):
        concat(uddx(2), build("xy4"))


@pytest.mark.parametrize("name", seqlib.catalog())
def test_catalog_closure_and_fractions(name):
    s = build(name)
    assert math.fsum(s.fractions) == pytest.approx(1.0, abs=1e-12)
    if name == "hahn":
        return
    u = sequence_unitary(s.pulses)
    if s.family == "UR" and s.n_pulses % 4 == 2:
        # phi_2 = pi/2 leaves a pi rotation about z for n = 2 mod 4
        assert phase_aligned_distance(u, np.diag([1, -1])) < 1e-12
        return
    assert phase_aligned_distance(u, np.eye(2)) < 1e-12


def test_unknown_and_out_of_range():
    for bad in [("nope",), ("cdd", 6), ("uddx", 26), ("qdd", 7, 1)]:
        with pytest.raises(SequenceError):
            build(*bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5))
def test_cdd_free_periods_property(n):
    s = build("cdd", n)
    assert s.free_periods == 4 ** n
