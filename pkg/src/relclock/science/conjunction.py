"""Solar-conjunction measurement of the PPN parameter gamma from the two-way
Shapiro Doppler signature."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..constants import AU, C, DAY, EARTH_ORBIT_PERIOD, GM_SUN, R_SUN
from ..errors import DomainError, OccultationError
from ..noise import SAGAS_ACCELEROMETER, AccelerometerModel
from ..observables import shapiro_log
from .estimation import EstimationResult, LinearProblem

CASSINI_SIGMA_GAMMA = 2.3e-5


@dataclass(frozen=True)
class ConjunctionGeometry:
    """Earth on a circular 1 AU orbit; spacecraft fixed at heliocentric
    distance ``spacecraft_radius`` behind the Sun, lifted out of the orbital
    plane so the minimum impact parameter (at t = 0) is ``min_impact``."""

    spacecraft_radius: float = 20 * AU
    min_impact: float = 2 * R_SUN
    half_span: float = 10 * DAY
    bin_length: float = 1000.0
    gm: float = GM_SUN
    sun_radius: float = R_SUN

    def __post_init__(self):
        if not (self.half_span > 0 and self.bin_length > 0 and self.min_impact > 0):
            raise DomainError("conjunction span, bin length and impact parameter must be positive")

    @property
    def spacecraft_position(self) -> np.ndarray:
        b = self.min_impact
        z = b * (self.spacecraft_radius + AU) / math.sqrt(AU * AU - b * b)
        return np.array([self.spacecraft_radius, 0.0, z])

    def earth_position(self, t):
        ang = math.pi + 2 * math.pi * np.asarray(t, dtype=float) / EARTH_ORBIT_PERIOD
        return AU * np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=-1)

    def impact_parameter(self, t) -> np.ndarray:
        e = self.earth_position(t)
        s = self.spacecraft_position
        d = s - e
        u = np.clip(-np.sum(e * d, axis=-1) / np.sum(d * d, axis=-1), 0.0, 1.0)
        return np.linalg.norm(e + u[..., None] * d, axis=-1)

    @property
    def bin_edges(self) -> np.ndarray:
        n = int(round(2 * self.half_span / self.bin_length))
        return -self.half_span + self.bin_length * np.arange(n + 1)

    def shapiro_template(self) -> np.ndarray:
        """Bin-averaged two-way Doppler per unit ``(1 + gamma)``:
        ``-2 GM/c^3 * [L(t_hi) - L(t_lo)] / bin``, ``L`` the Shapiro log."""
        edges = self.bin_edges
        L = shapiro_log(self.earth_position(edges), self.spacecraft_position[None, :])
        return -2.0 * self.gm / C ** 3 * np.diff(L) / self.bin_length


@dataclass(frozen=True)
class ConjunctionNoise:
    """Two-way link with the on-board clock cancelled: ground clock (up and
    down legs), tropospheric turbulence per leg, and accelerometer noise."""

    ground_white: float = 1e-14
    turbulence: float = 3e-13
    accelerometer: AccelerometerModel = SAGAS_ACCELEROMETER

    def scaled(self, k: float) -> "ConjunctionNoise":
        return ConjunctionNoise(k * self.ground_white, k * self.turbulence, self.accelerometer.scaled(k))

    def per_bin(self, tau: float) -> float:
        clock = math.sqrt(2.0) * self.ground_white / math.sqrt(tau)
        turb = math.sqrt(2.0) * self.turbulence / tau
        accel = self.accelerometer.level * math.sqrt(tau) / C
        return math.sqrt(clock ** 2 + turb ** 2 + accel ** 2)


def conjunction_problem(geometry: ConjunctionGeometry, noise: ConjunctionNoise,
                        max_impact: float = 5 * R_SUN) -> LinearProblem:
    """Design for ``delta_gamma`` plus a Doppler offset and a linear drift
    (which absorb residual accelerometer bias)."""
    b = geometry.impact_parameter(geometry.bin_edges)
    if b.min() < geometry.sun_radius:
        raise OccultationError("line of sight passes behind the solar disk")
    if b.min() > max_impact:
        raise DomainError("no conjunction within the span: impact parameter stays above 5 solar radii")
    s = geometry.shapiro_template()
    t = 0.5 * (geometry.bin_edges[1:] + geometry.bin_edges[:-1]) / geometry.half_span
    G = np.column_stack([s, np.ones_like(t), t])
    sig = np.full(t.size, noise.per_bin(geometry.bin_length))
    return LinearProblem(("delta_gamma", "offset", "drift"), G, sig)


def simulate_conjunction(geometry: ConjunctionGeometry, noise: ConjunctionNoise, gamma=1.0,
                         seed=None, offset=0.0, drift=0.0, noiseless=False) -> np.ndarray:
    s = geometry.shapiro_template()
    t = 0.5 * (geometry.bin_edges[1:] + geometry.bin_edges[:-1]) / geometry.half_span
    y = (1.0 + gamma) * s + offset + drift * t
    if not noiseless:
        if seed is None:
            raise DomainError("a seed is required for a noisy simulation")
        y = y + noise.per_bin(geometry.bin_length) * np.random.default_rng(seed).standard_normal(y.size)
    return y


def ppn_gamma_conjunction(geometry: ConjunctionGeometry, noise: ConjunctionNoise,
                          measured: np.ndarray) -> EstimationResult:
    """Fit gamma from bin-averaged two-way Doppler around a solar conjunction."""
    prob = conjunction_problem(geometry, noise)
    y = np.asarray(measured, dtype=float) - 2.0 * prob.design[:, 0]
    res = prob.solve(y, {"test": "ppn_gamma", "baseline_sigma": CASSINI_SIGMA_GAMMA})
    params = dict(res.parameters)
    params["gamma"] = 1.0 + params.pop("delta_gamma")
    sig = dict(res.sigmas)
    sig["gamma"] = sig.pop("delta_gamma")
    order = ["gamma", "offset", "drift"]
    meta = dict(res.metadata, improvement=CASSINI_SIGMA_GAMMA / sig["gamma"],
                min_impact_parameter_solar_radii=float(geometry.impact_parameter(0.0) / geometry.sun_radius))
    return EstimationResult({k: params[k] for k in order}, {k: sig[k] for k in order},
                            res.covariance, res.residual_rms, res.n_obs, meta)
