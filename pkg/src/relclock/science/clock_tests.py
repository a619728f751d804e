"""Clock-comparison tests: gravitational redshift, Lorentz invariance and
fine-structure-constant coupling/drift."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..constants import C2, DAY, YEAR
from ..dynamics import Trajectory
from ..errors import DomainError, RankError
from ..metric import MetricModel
from ..noise import ClockModel, LinkNoiseModel
from ..observables import shift_terms
from .estimation import EstimationResult, LinearProblem

GROUND_FLOOR = 1e-17
ALPHA_SENSITIVITY = 0.43


@dataclass(frozen=True, eq=False)
class ClockComparison:
    """Bin-averaged space-minus-ground clock comparison.

    ``gravitational`` and ``velocity`` are the modelled terms of the
    fractional frequency difference in each bin; ``cmb`` (optional) is the
    preferred-frame regressor ``(v_s - v_g).V/c^2``.  ``measured`` holds the
    observed bin values once ``inject`` has been called.
    """

    epochs: np.ndarray
    tau: float
    gravitational: np.ndarray
    velocity: np.ndarray
    sigma_white: np.ndarray
    sigma_common: float
    cmb: np.ndarray | None = None
    measured: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.epochs.size

    @property
    def model_gr(self) -> np.ndarray:
        return self.gravitational + self.velocity

    def scaled_noise(self, k: float) -> "ClockComparison":
        return replace(self, sigma_white=k * self.sigma_white, sigma_common=k * self.sigma_common,
                       measured=None)

    def draw_noise(self, rng: np.random.Generator) -> np.ndarray:
        e = rng.standard_normal(self.n) * self.sigma_white
        half = math.sqrt(3.0) * self.sigma_common
        return e + (rng.uniform(-half, half) if half > 0 else 0.0)

    def inject(self, seed=None, *, epsilon=0.0, kappa=0.0, cmb=0.0, k_alpha=0.0,
               sensitivity=ALPHA_SENSITIVITY, noise=True) -> "ClockComparison":
        """Simulated measurement with the given violation parameters."""
        # anomalous terms added last so the GR part cancels exactly in the residual
        y = self.model_gr + ((epsilon + sensitivity * k_alpha) * self.gravitational + kappa * self.velocity)
        if cmb:
            if self.cmb is None:
                raise DomainError("comparison was built without a preferred-frame velocity")
            y = y + cmb * self.cmb
        if noise:
            if seed is None:
                raise DomainError("a seed is required for a noisy measurement")
            y = y + self.draw_noise(np.random.default_rng(seed))
        return replace(self, measured=y)


def _bin_edges(span, tau):
    t0, t1 = map(float, span)
    n = int(math.floor((t1 - t0) / tau + 1e-9))
    if n < 1:
        raise DomainError("span shorter than one bin")
    return t0 + tau * np.arange(n + 1)


def clock_comparison(ground: Trajectory, space: Trajectory, model: MetricModel, span,
                     space_clock: ClockModel, ground_clock: ClockModel | None = None,
                     link: LinkNoiseModel | None = None, tau: float = DAY,
                     floor: float = GROUND_FLOOR, samples_per_bin: int = 8,
                     v_sun=None) -> ClockComparison:
    """Bin the modelled frequency difference over ``span`` in bins of ``tau``.

    Per-bin white noise: space and ground clock ADEV at ``tau``, link ADEV,
    and the ground-segment floor.  The common offset combines both clock
    accuracies.
    """
    edges = _bin_edges(span, tau)
    nb = edges.size - 1
    frac = (np.arange(samples_per_bin) + 0.5) / samples_per_bin
    t = (edges[:-1, None] + tau * frac[None, :]).ravel()
    pg, vg = ground.sample(t)
    ps, vs = space.sample(t)
    grav, vel = shift_terms(model, pg, vg, ps, vs, t)
    cmb = None
    if v_sun is not None:
        cmb = ((vs - vg) @ np.asarray(v_sun, dtype=float) / C2).reshape(nb, -1).mean(axis=1)
    var = float(space_clock.adev(tau)) ** 2 + floor ** 2
    acc2 = space_clock.accuracy_bias ** 2
    if ground_clock is not None:
        var += float(ground_clock.adev(tau)) ** 2
        acc2 += ground_clock.accuracy_bias ** 2
    if link is not None:
        var += link.adev(tau) ** 2
    return ClockComparison(
        epochs=0.5 * (edges[:-1] + edges[1:]), tau=float(tau),
        gravitational=grav.reshape(nb, -1).mean(axis=1),
        velocity=vel.reshape(nb, -1).mean(axis=1),
        sigma_white=np.full(nb, math.sqrt(var)), sigma_common=math.sqrt(acc2), cmb=cmb)


def _residual(obs: ClockComparison) -> np.ndarray:
    if obs.measured is None:
        raise DomainError("comparison carries no measurement; call inject() first")
    return obs.measured - obs.model_gr


def _problem(name, regressor, obs):
    return LinearProblem((name,), np.asarray(regressor)[:, None], obs.sigma_white, obs.sigma_common)


def redshift_problem(obs: ClockComparison) -> LinearProblem:
    if not np.any(obs.gravitational):
        raise RankError("no gravitational potential difference: redshift not observable")
    return _problem("epsilon", obs.gravitational, obs)


def redshift_test(obs: ClockComparison) -> EstimationResult:
    """Fit ``epsilon`` in ``y = (1 + epsilon) dw/c^2 + velocity term``."""
    return redshift_problem(obs).solve(_residual(obs), {
        "test": "redshift", "max_potential_difference": float(np.max(np.abs(obs.gravitational)))})


def lorentz_problem(obs: ClockComparison, frame: str = "none") -> LinearProblem:
    if frame == "none":
        if not np.any(obs.velocity):
            raise RankError("velocity term vanishes: Ives-Stilwell coefficient not observable")
        return _problem("kappa", obs.velocity, obs)
    if frame == "cmb":
        if obs.cmb is None:
            raise DomainError("preferred-frame test needs a comparison built with v_sun")
        if not np.any(obs.cmb):
            raise RankError("preferred-frame regressor vanishes")
        return _problem("cmb_coefficient", obs.cmb, obs)
    raise DomainError(f"unknown frame {frame!r}")


def lorentz_test(obs: ClockComparison, frame: str = "none") -> EstimationResult:
    """Ives-Stilwell scaling ``kappa`` of ``(v_g^2 - v_s^2)/2c^2`` or, for
    ``frame='cmb'``, the coefficient of ``(v_s - v_g).V_sun/c^2``."""
    meta = {"test": "lorentz", "frame": frame,
            "velocity_term_end": float(obs.velocity[-1])}
    if frame == "cmb" and obs.cmb is not None:
        meta["cmb_regressor_rms"] = float(np.sqrt(np.mean(obs.cmb ** 2)))
    return lorentz_problem(obs, frame).solve(_residual(obs), meta)


def alpha_problem(obs: ClockComparison, sensitivity: float = ALPHA_SENSITIVITY) -> LinearProblem:
    if not sensitivity > 0:
        raise DomainError("transition sensitivity must be positive")
    span = float(np.max(np.abs(obs.gravitational)))
    if not span > 10.0 * max(obs.sigma_common, 1e-300):
        raise RankError("potential variation below ten times the clock accuracy")
    return _problem("k_alpha", sensitivity * obs.gravitational, obs)


def alpha_variation(obs, sensitivity: float = ALPHA_SENSITIVITY) -> EstimationResult:
    """Coupling ``k_alpha`` in ``delta alpha/alpha = k_alpha dw/c^2`` for a
    ``ClockComparison``; linear drift per year for ``DriftCampaigns``."""
    if isinstance(obs, DriftCampaigns):
        return constants_drift(obs)
    return alpha_problem(obs, sensitivity).solve(_residual(obs), {
        "test": "alpha_coupling", "sensitivity": sensitivity})


# --- constants drift -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DriftCampaigns:
    """Repeated clock-ratio measurements at ``epochs`` (s), each with white
    resolution ``resolution``."""

    epochs: np.ndarray
    resolution: float
    measured: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.epochs, dtype=float)
        if e.size < 2 or np.ptp(e) == 0:
            raise RankError("drift needs at least two distinct campaign epochs")
        object.__setattr__(self, "epochs", e)

    def inject(self, seed=None, *, drift=0.0, offset=0.0, noise=True) -> "DriftCampaigns":
        y = offset + drift * (self.epochs - self.epochs[0]) / YEAR
        if noise:
            if seed is None:
                raise DomainError("a seed is required for a noisy measurement")
            y = y + self.resolution * np.random.default_rng(seed).standard_normal(y.size)
        return replace(self, measured=y)


def drift_campaigns(years: float, interval: float = YEAR / 4, resolution: float = 1e-17) -> DriftCampaigns:
    n = int(math.floor(years * YEAR / interval + 1e-9)) + 1
    return DriftCampaigns(interval * np.arange(n), resolution)


def drift_problem(c: DriftCampaigns) -> LinearProblem:
    t = (c.epochs - c.epochs[0]) / YEAR
    return LinearProblem(("offset", "drift_per_year"), np.column_stack([np.ones_like(t), t]),
                         np.full(t.size, c.resolution))


def constants_drift(c: DriftCampaigns) -> EstimationResult:
    """Offset plus linear drift (per year) of a clock-frequency ratio."""
    if c.measured is None:
        raise DomainError("campaigns carry no measurement; call inject() first")
    return drift_problem(c).solve(c.measured, {"test": "alpha_drift"})
