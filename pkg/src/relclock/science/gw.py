"""Strain sensitivity of one-arm Doppler tracking to low-frequency
gravitational waves."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..constants import C, YEAR
from ..errors import DomainError
from ..noise import SAGAS_ACCELEROMETER, SAGAS_CLOCK, AccelerometerModel, ClockModel, WHITE_FM

BAND_LIMITS = (1e-6, 1e-2)


@dataclass(frozen=True, eq=False)
class GWSensitivity:
    frequency: np.ndarray       # Hz
    strain_asd: np.ndarray      # 1/sqrt(Hz)
    floor: float
    corner: float               # Hz, where accelerometer and clock terms are equal
    span: float
    template_frequency: float
    template_limit: float

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.frequency, self.strain_asd]), delimiter=",",
                   header="f_Hz,strain_per_sqrtHz", comments="", fmt="%.10g")


def strain_asd(f, clock: ClockModel = SAGAS_CLOCK, accelerometer: AccelerometerModel = SAGAS_ACCELEROMETER):
    """One-sided strain ASD: white-FM clock floor ``sqrt(2) sigma_1`` plus
    accelerometer noise integrated to velocity, ``level / (2 pi f c)``.
    Geometric response factor set to one."""
    f = np.asarray(f, dtype=float)
    s1 = clock.coefficient(WHITE_FM)
    return np.sqrt(2 * s1 * s1 + (accelerometer.level / (2 * math.pi * f * C)) ** 2)


def gw_sensitivity(clock: ClockModel = SAGAS_CLOCK, accelerometer: AccelerometerModel = SAGAS_ACCELEROMETER,
                   span: float = YEAR, band=(0.06e-3, 1e-3), n: int = 200,
                   template_frequency: float = 0.3e-3) -> GWSensitivity:
    """Sensitivity curve over ``band`` and the matched-filter limit for a
    monochromatic template at ``template_frequency`` observed for ``span``:
    ``h = ASD(f0) / sqrt(span)``."""
    lo, hi = map(float, band)
    if not (BAND_LIMITS[0] <= lo < hi <= BAND_LIMITS[1]):
        raise DomainError(f"band must lie within [{BAND_LIMITS[0]}, {BAND_LIMITS[1]}] Hz")
    if not lo <= template_frequency <= hi:
        raise DomainError("template frequency outside the band")
    if not span > 0:
        raise DomainError("span must be positive")
    f = np.geomspace(lo, hi, n)
    asd = strain_asd(f, clock, accelerometer)
    floor = math.sqrt(2.0) * clock.coefficient(WHITE_FM)
    corner = accelerometer.level / (2 * math.pi * C * floor) if floor > 0 else math.inf
    h = float(strain_asd(template_frequency, clock, accelerometer)) / math.sqrt(span)
    return GWSensitivity(f, asd, floor, corner, span, template_frequency, h)
