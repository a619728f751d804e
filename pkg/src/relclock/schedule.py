"""Ground-station visibility passes, common-view windows and comparison budgets."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import optimize

from .constants import R_EARTH
from .dynamics import OrbitElements, ground_station_states, kepler_states
from .errors import DomainError
from .noise import LinkNoiseModel

DEFAULT_MASK = math.radians(10.0)
COARSE_STEP = 10.0


@dataclass(frozen=True)
class Station:
    id: str
    latitude: float   # rad
    longitude: float  # rad
    radius: float = R_EARTH


DEMO_NETWORK = (
    Station("paris", math.radians(48.836), math.radians(2.336)),
    Station("braunschweig", math.radians(52.296), math.radians(10.460)),
    Station("torino", math.radians(45.015), math.radians(7.640)),
    Station("teddington", math.radians(51.426), math.radians(-0.339)),
    Station("boulder", math.radians(39.995), math.radians(-105.262)),
)


@dataclass(frozen=True)
class Pass:
    station: str
    start: float
    end: float
    max_elevation: float

    def __post_init__(self):
        if not self.end > self.start:
            raise DomainError("pass must end after it starts")
        if not 0.0 < self.max_elevation <= math.pi / 2:
            raise DomainError("max elevation outside (0, pi/2]")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class CommonViewWindow:
    stations: tuple[str, str]
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ComparisonBudget:
    mode: str
    dt: float
    resolution: float  # s

    def __post_init__(self):
        if not self.resolution > 0:
            raise DomainError("resolution must be positive")


def elevation(orbit: OrbitElements, station: Station, epochs) -> np.ndarray:
    """Elevation (rad) of the satellite above the station's spherical horizon."""
    t = np.atleast_1d(np.asarray(epochs, dtype=float))
    sat, _ = kepler_states(orbit, t)
    st, _ = ground_station_states(station.latitude, station.longitude, station.radius, t)
    los = sat - st
    up = st / np.linalg.norm(st, axis=-1, keepdims=True)
    s = np.sum(los * up, axis=-1) / np.linalg.norm(los, axis=-1)
    return np.arcsin(np.clip(s, -1.0, 1.0))


def visibility_passes(orbit: OrbitElements, station: Station, mask: float = DEFAULT_MASK,
                      span: tuple[float, float] = (0.0, 86400.0)) -> list[Pass]:
    """Passes above ``mask``; passes clipped by either end of ``span`` are dropped."""
    if not 0.0 <= mask <= math.pi / 3:
        raise DomainError("elevation mask must lie in [0, pi/3]")
    t0, t1 = map(float, span)
    if not t1 > t0:
        raise DomainError("empty span")
    n = max(2, int(math.ceil((t1 - t0) / COARSE_STEP)) + 1)
    ts = np.linspace(t0, t1, n)
    f = elevation(orbit, station, ts) - mask
    g = lambda t: float(elevation(orbit, station, t)[0]) - mask
    above = f >= 0
    edges = np.flatnonzero(above[1:] != above[:-1])
    crossings = [(optimize.brentq(g, ts[k], ts[k + 1], xtol=1e-3), bool(above[k + 1])) for k in edges]
    passes = []
    for (ta, rising), (tb, setting_flag) in zip(crossings, crossings[1:]):
        if not rising or setting_flag:
            continue
        res = optimize.minimize_scalar(lambda t: -g(t), bounds=(ta, tb), method="bounded",
                                       options={"xatol": 1e-2})
        el_max = min(mask - res.fun, math.pi / 2)
        passes.append(Pass(station.id, ta, tb, el_max))
    return passes


def common_view_windows(orbit: OrbitElements, stations: Sequence[Station], mask: float = DEFAULT_MASK,
                        span=(0.0, 86400.0)) -> list[CommonViewWindow]:
    if len(stations) < 2:
        raise DomainError("common view needs at least two stations")
    per = [visibility_passes(orbit, s, mask, span) for s in stations]
    out = []
    for (i, a), (j, b) in combinations(enumerate(stations), 2):
        for pa in per[i]:
            for pb in per[j]:
                lo, hi = max(pa.start, pb.start), min(pa.end, pb.end)
                if hi > lo:
                    out.append(CommonViewWindow((a.id, b.id), lo, hi))
    out.sort(key=lambda w: (w.start, w.stations))
    return out


NON_COMMON_VIEW_COEFF = 1e-13     # s per sqrt(s)
NON_COMMON_VIEW_MIN_DT = 1000.0
COMMON_VIEW_MAX_DT = 3600.0


def _interp_tdev(spec, dt):
    lt = np.log([t for t, _ in spec])
    lv = np.log([v for _, v in spec])
    x = math.log(dt)
    if x <= lt[0]:
        k = 0
    elif x >= lt[-1]:
        k = len(lt) - 2
    else:
        k = int(np.searchsorted(lt, x)) - 1
    slope = (lv[k + 1] - lv[k]) / (lt[k + 1] - lt[k])
    return math.exp(lv[k] + slope * (x - lt[k]))


def comparison_uncertainty(mode: str, dt: float, link: LinkNoiseModel | None = None) -> ComparisonBudget:
    """Time-comparison resolution for space-ground (non-common-view) or
    ground-ground (common-view) comparisons separated by ``dt``."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    if mode == "non-common-view":
        if dt < NON_COMMON_VIEW_MIN_DT:
            raise DomainError("non-common-view budget valid only for dt >= 1000 s")
        return ComparisonBudget(mode, dt, NON_COMMON_VIEW_COEFF * math.sqrt(dt))
    if mode == "common-view":
        if dt > COMMON_VIEW_MAX_DT:
            raise DomainError("common-view windows cannot exceed 3600 s")
        link = link or LinkNoiseModel()
        return ComparisonBudget(mode, dt, _interp_tdev(link.spec, dt))
    raise DomainError(f"unknown comparison mode {mode!r}")


def write_passes_csv(passes: Sequence[Pass], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["station", "start_s", "end_s", "max_elevation_rad"])
        for p in passes:
            w.writerow([p.station, repr(p.start), repr(p.end), repr(p.max_elevation)])
