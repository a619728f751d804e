"""Mission baselines: an ISS clock over a mid-latitude station and a deep-space
clock on a solar-escape trajectory."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..constants import AU, DAY, GM_EARTH, GM_SUN, R_EARTH, R_SUN, V_SUN_CMB, YEAR
from ..dynamics import EscapeProfile, OrbitElements, earth_trajectory, ground_station_trajectory, kepler_trajectory
from ..metric import MetricModel, static_source
from ..noise import (PHARAO, SAGAS_ACCELEROMETER, SAGAS_CLOCK, WHITE_FM, AccelerometerModel, ClockModel,
                     LinkNoiseModel)
from .clock_tests import ALPHA_SENSITIVITY, GROUND_FLOOR, ClockComparison, clock_comparison

ISS_ALTITUDE = 400e3
ISS_INCLINATION = math.radians(51.6)


@dataclass(frozen=True)
class AcesScenario:
    altitude: float = ISS_ALTITUDE
    inclination: float = ISS_INCLINATION
    station_latitude: float = math.radians(48.8)
    station_longitude: float = math.radians(2.3)
    span: float = 182.625 * DAY
    space_clock: ClockModel = PHARAO
    ground_clock: ClockModel = ClockModel(((WHITE_FM, 1e-13),), name="ground")
    link: LinkNoiseModel | None = None
    floor: float = GROUND_FLOOR
    tau: float = DAY

    @cached_property
    def orbit(self) -> OrbitElements:
        return OrbitElements(GM_EARTH, R_EARTH + self.altitude, 0.0, self.inclination)

    @cached_property
    def metric(self) -> MetricModel:
        return MetricModel.gr([static_source(GM_EARTH, name="earth", radius=R_EARTH)])

    def space(self):
        return kepler_trajectory(self.orbit, (0.0, self.span), "iss")

    def ground(self):
        return ground_station_trajectory(self.station_latitude, self.station_longitude, R_EARTH, (0.0, self.span))

    def comparison(self, samples_per_bin: int = 288) -> ClockComparison:
        link = self.link if self.link is not None else LinkNoiseModel.calibrate()
        return clock_comparison(self.ground(), self.space(), self.metric, (0.0, self.span),
                                self.space_clock, self.ground_clock, link, self.tau, self.floor,
                                samples_per_bin)


NOMINAL_END_WINDOW = (14 * YEAR, 15 * YEAR)
EXTENDED_END_WINDOW = (19 * YEAR, 20 * YEAR)


@dataclass(frozen=True)
class SagasScenario:
    """Ground clock at the geocentre (heliocentric terms only) versus the
    spacecraft clock; the Sun is the only source."""

    profile: EscapeProfile = field(default_factory=EscapeProfile)
    clock: ClockModel = SAGAS_CLOCK
    ground_clock: ClockModel = ClockModel(((WHITE_FM, 1e-14),), name="ground-optical")
    accelerometer: AccelerometerModel = SAGAS_ACCELEROMETER
    turbulence: float = 3e-13
    floor: float = GROUND_FLOOR
    sensitivity: float = ALPHA_SENSITIVITY
    v_sun: float = V_SUN_CMB
    tau: float = DAY

    @cached_property
    def sun(self):
        return static_source(GM_SUN, name="sun", radius=R_SUN)

    @cached_property
    def metric(self) -> MetricModel:
        return MetricModel.gr([self.sun])

    @cached_property
    def link(self) -> LinkNoiseModel:
        return LinkNoiseModel(turbulence=self.turbulence)

    def space(self):
        return self.profile.trajectory()

    def ground(self):
        return earth_trajectory((0.0, self.profile.duration + YEAR))

    def sun_velocity(self, epoch: float) -> np.ndarray:
        """Preferred-frame velocity of the Sun, taken along the spacecraft's
        heliocentric velocity at ``epoch``."""
        _, v = self.profile.states(epoch)
        return self.v_sun * v[0] / np.linalg.norm(v[0])

    def comparison(self, window=EXTENDED_END_WINDOW, samples_per_bin: int = 4,
                   preferred_frame: bool = False) -> ClockComparison:
        v_sun = self.sun_velocity(window[1]) if preferred_frame else None
        return clock_comparison(self.ground(), self.space(), self.metric, window, self.clock,
                                self.ground_clock, self.link, self.tau, self.floor,
                                samples_per_bin, v_sun)
