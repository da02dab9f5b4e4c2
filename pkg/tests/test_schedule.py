import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vardro.schedule import RampSchedule


def test_warmup_returns_start():
    sched = RampSchedule(eps_start=0.05, eps_end=0.25, warmup=10, total=110)
    for t in range(10):
        assert sched.cap_at(t) == 0.05


def test_endpoint_identities_exact():
    sched = RampSchedule(eps_start=0.05, eps_end=0.25, warmup=10, total=110)
    assert sched.cap_at(0) == 0.05
    assert sched.cap_at(110) == 0.25


def test_midpoint_value():
    sched = RampSchedule(eps_start=0.05, eps_end=0.25, warmup=10, total=110)
    assert sched.cap_at(60) == pytest.approx(0.15)


def test_rejects_out_of_range_step():
    sched = RampSchedule(eps_start=0.05, eps_end=0.25, warmup=10, total=110)
    with pytest.raises(ValueError):
        sched.cap_at(111)
    with pytest.raises(ValueError):
        sched.cap_at(-1)


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        RampSchedule(eps_start=0.0, eps_end=0.25, warmup=0, total=10)
    with pytest.raises(ValueError):
        RampSchedule(eps_start=0.3, eps_end=0.25, warmup=0, total=10)
    with pytest.raises(ValueError):
        RampSchedule(eps_start=0.05, eps_end=0.25, warmup=10, total=10)


@given(
    st.floats(min_value=1e-3, max_value=1.0, allow_nan=False),
    st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
    st.integers(min_value=0, max_value=50),
    st.integers(min_value=1, max_value=200),
)
@settings(max_examples=200, deadline=None)
def test_monotone_and_bounded_on_dense_grid(eps_start, extra, warmup, span):
    total = warmup + span
    sched = RampSchedule(eps_start=eps_start, eps_end=eps_start + extra, warmup=warmup, total=total)
    caps = [sched.cap_at(t) for t in range(total + 1)]
    assert caps[0] == eps_start
    assert caps[-1] == eps_start + extra
    for earlier, later in zip(caps, caps[1:]):
        assert later >= earlier
    assert all(eps_start <= c <= eps_start + extra for c in caps)


def test_affine_on_ramp_segment():
    sched = RampSchedule(eps_start=0.1, eps_end=0.9, warmup=20, total=120)
    # Second differences vanish on the linear part.
    caps = [sched.cap_at(t) for t in range(20, 121)]
    diffs = [b - a for a, b in zip(caps, caps[1:])]
    for d in diffs:
        assert d == pytest.approx(diffs[0], abs=1e-12)
