import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdsdr.bandwidth import BandwidthSchedule, initial_bandwidths, next_bandwidths
from cdsdr.errors import DimensionError


def test_initial_bandwidths_example():
    h0, b0 = initial_bandwidths(100, 10)
    assert h0 == pytest.approx(2.34 * 100 ** (-1 / 16), rel=1e-12)
    assert h0 == pytest.approx(1.7548, abs=1e-4)
    # direct evaluation: 2.34 * exp(-ln(100) / 15)
    assert b0 == pytest.approx(1.7214, abs=1e-4)
    assert b0 < h0


def test_small_p_uses_p0_three():
    assert initial_bandwidths(100, 1) == initial_bandwidths(100, 3)


def test_schedule_example():
    s = BandwidthSchedule(100, 10, 2)
    assert s.r_n == pytest.approx(0.86596, abs=1e-5)
    assert s.h_floor == pytest.approx(2.34 * 100 ** (-1 / 6))
    assert s.b_floor == pytest.approx(2.34 * 100 ** (-1 / 5))


@given(st.integers(10, 100_000), st.integers(1, 20), st.integers(1, 5))
def test_schedule_monotone_to_floor(n, p, q):
    s = BandwidthSchedule(n, p, q)
    h, b = s.initial()
    for _ in range(60):
        h1, b1 = next_bandwidths(h, b, s)
        assert h1 <= h and b1 <= b
        assert h1 >= s.h_floor * (1 - 1e-12) or h1 == h
        h, b = h1, b1
    assert h == pytest.approx(max(s.h_floor, h), rel=1e-9)


def test_schedule_validation():
    with pytest.raises(DimensionError):
        BandwidthSchedule(1, 3, 1)
    with pytest.raises(DimensionError):
        BandwidthSchedule(10, 3, 0)
    with pytest.raises(ValueError):
        BandwidthSchedule(10, 3, 1, c0=0)
