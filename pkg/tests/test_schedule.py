import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relclock.constants import DAY, GM_EARTH, R_EARTH
from relclock.dynamics import OrbitElements
from relclock.errors import DomainError
from relclock.schedule import (DEMO_NETWORK, Station, common_view_windows, comparison_uncertainty,
                               elevation, visibility_passes, write_passes_csv)

ISS = OrbitElements(GM_EARTH, R_EARTH + 400e3, 0.0, math.radians(51.6))
PARIS = Station("paris", math.radians(48.836), math.radians(2.336))
BRAUNSCHWEIG = Station("braunschweig", math.radians(52.296), math.radians(10.460))
MASK = math.radians(10)


@pytest.fixture(scope="module")
def paris_passes():
    return visibility_passes(ISS, PARIS, MASK, (0.0, 3 * DAY))


def test_median_pass_duration(paris_passes):
    assert len(paris_passes) > 5
    assert 300 <= np.median([p.duration for p in paris_passes]) <= 500


def test_high_latitude_high_mask_has_no_passes():
    polar = Station("north", math.radians(80), 0.0)
    assert visibility_passes(ISS, polar, math.radians(40), (0.0, 3 * DAY)) == []


def test_mask_monotonicity():
    low = visibility_passes(ISS, PARIS, 0.0, (0.0, 2 * DAY))
    high = visibility_passes(ISS, PARIS, math.radians(20), (0.0, 2 * DAY))
    assert len(high) <= len(low)
    for p in high:
        parent = [q for q in low if q.start <= p.start and p.end <= q.end]
        assert len(parent) == 1 and p.duration <= parent[0].duration


def test_pass_boundaries_bracket_mask(paris_passes):
    for p in paris_passes:
        e = elevation(ISS, PARIS, [p.start - 1, p.start + 1, p.end - 1, p.end + 1])
        assert e[0] < MASK <= e[1]
        assert e[2] >= MASK > e[3]
        assert MASK < p.max_elevation <= math.pi / 2


def test_common_view_nearby_stations():
    windows = common_view_windows(ISS, [PARIS, BRAUNSCHWEIG], MASK, (0.0, 3 * DAY))
    assert len(windows) / 3 >= 1
    per = {s.id: visibility_passes(ISS, s, MASK, (0.0, 3 * DAY)) for s in (PARIS, BRAUNSCHWEIG)}
    for w in windows:
        for sid in w.stations:
            assert any(p.start <= w.start and w.end <= p.end for p in per[sid])


def test_duplicate_station_windows_equal_passes(paris_passes):
    twin = Station("paris-2", PARIS.latitude, PARIS.longitude)
    windows = common_view_windows(ISS, [PARIS, twin], MASK, (0.0, 3 * DAY))
    assert [(w.start, w.end) for w in windows] == [(p.start, p.end) for p in paris_passes]


def test_antipodal_stations_never_share_view():
    a = Station("a", math.radians(30), 0.0)
    b = Station("b", math.radians(-30), math.pi)
    assert common_view_windows(ISS, [a, b], MASK, (0.0, 3 * DAY)) == []


def test_schedule_errors():
    with pytest.raises(DomainError):
        visibility_passes(ISS, PARIS, MASK, (10.0, 10.0))
    with pytest.raises(DomainError):
        visibility_passes(ISS, PARIS, math.radians(70), (0.0, DAY))
    with pytest.raises(DomainError):
        common_view_windows(ISS, [PARIS], MASK)


def test_demo_network_ids_unique():
    assert len({s.id for s in DEMO_NETWORK}) == len(DEMO_NETWORK) == 5


@pytest.mark.parametrize("dt,ps", [(1000.0, 3.16), (1e4, 10.0)])
def test_non_common_view_budget(dt, ps):
    b = comparison_uncertainty("non-common-view", dt)
    assert b.resolution == 1e-13 * math.sqrt(dt)
    assert b.resolution * 1e12 == pytest.approx(ps, abs=0.005)


def test_common_view_budget():
    assert comparison_uncertainty("common-view", 300.0).resolution == pytest.approx(0.3e-12, rel=1e-12)


@given(st.floats(min_value=1000.0, max_value=1e7), st.floats(min_value=1000.0, max_value=1e7))
def test_budget_monotone(a, b):
    lo, hi = sorted((a, b))
    assert (comparison_uncertainty("non-common-view", lo).resolution
            <= comparison_uncertainty("non-common-view", hi).resolution)


def test_budget_mode_mismatch():
    with pytest.raises(DomainError):
        comparison_uncertainty("non-common-view", 100.0)
    with pytest.raises(DomainError):
        comparison_uncertainty("common-view", 1e4)
    with pytest.raises(DomainError):
        comparison_uncertainty("two-way", 1e3)
    with pytest.raises(DomainError):
        comparison_uncertainty("common-view", -1.0)


def test_passes_csv(tmp_path, paris_passes):
    write_passes_csv(paris_passes, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "station,start_s,end_s,max_elevation_rad"
    assert len(lines) == len(paris_passes) + 1
