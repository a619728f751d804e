"""Trajectories: Kepler orbits, rotating ground stations, the SAGAS escape
profile and numerically integrated perturbed motion."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import fsolve

from .constants import (AU, C, DAY, EARTH_ORBIT_PERIOD, GM_EARTH, GM_JUPITER, GM_SUN,
                        JUPITER_ORBIT_RADIUS, OMEGA_EARTH, R_EARTH, R_JUPITER, YEAR)
from .errors import AccuracyError, ConvergenceError, DomainError
from .metric import (GravitySource, MetricModel, anomalous_acceleration_at, circular_source,
                     static_source)


@dataclass(frozen=True)
class StateVector:
    position: np.ndarray
    velocity: np.ndarray
    epoch: float

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        v = np.asarray(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise DomainError("state vector has non-finite components")
        if np.linalg.norm(v) >= C:
            raise DomainError("state vector speed must be below c")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "epoch", float(self.epoch))

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


BatchSampler = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Trajectory:
    """Immutable epoch -> state map over a closed span.

    ``batch`` evaluates many epochs at once and returns ``(positions, velocities)``
    with shape ``(n, 3)``; it is used by ``sample`` when present.
    """

    sampler: Callable[[float], StateVector]
    span: tuple[float, float]
    label: str = ""
    batch: BatchSampler | None = None

    def __post_init__(self):
        if not self.span[1] > self.span[0]:
            raise DomainError(f"trajectory {self.label!r} has an empty span")

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.span
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(f"epoch outside span {self.span} of trajectory {self.label!r}")
        return t

    def __call__(self, epoch: float) -> StateVector:
        self._check(epoch)
        return self.sampler(float(epoch))

    def sample(self, epochs) -> tuple[np.ndarray, np.ndarray]:
        t = np.atleast_1d(self._check(epochs))
        if self.batch is not None:
            return self.batch(t)
        states = [self.sampler(float(x)) for x in t]
        return (np.array([s.position for s in states]), np.array([s.velocity for s in states]))


def trajectory_from_batch(batch: BatchSampler, span, label="") -> Trajectory:
    def sampler(t):
        p, v = batch(np.array([t]))
        return StateVector(p[0], v[0], t)
    return Trajectory(sampler, (float(span[0]), float(span[1])), label, batch)


# --- two-body -----------------------------------------------------------------

@dataclass(frozen=True)
class OrbitElements:
    """Classical elements; ``mean_anomaly`` is the value at ``epoch0``."""

    gm: float
    a: float
    e: float = 0.0
    inc: float = 0.0
    raan: float = 0.0
    argp: float = 0.0
    mean_anomaly: float = 0.0
    epoch0: float = 0.0

    def __post_init__(self):
        if not self.a > 0 or not self.gm > 0:
            raise DomainError("orbit needs a > 0 and gm > 0")
        if not 0.0 <= self.e < 1.0:
            raise DomainError(f"bound orbit required, got e = {self.e}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.a ** 3 / self.gm)

    @property
    def mean_motion(self) -> float:
        return math.sqrt(self.gm / self.a ** 3)


def rotation_perifocal(inc, raan, argp) -> np.ndarray:
    cO, sO = math.cos(raan), math.sin(raan)
    ci, si = math.cos(inc), math.sin(inc)
    cw, sw = math.cos(argp), math.sin(argp)
    return np.array([
        [cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si],
        [sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si],
        [sw * si, cw * si, ci],
    ])


def solve_kepler(mean_anomaly, e, tol=1e-15, max_iter=50):
    M = np.asarray(mean_anomaly, dtype=float)
    M = np.remainder(M + math.pi, 2.0 * math.pi) - math.pi
    E = M + e * np.sin(M) if e < 0.8 else np.where(M >= 0, math.pi, -math.pi) * np.ones_like(M)
    for _ in range(max_iter):
        f = E - e * np.sin(E) - M
        dE = f / (1.0 - e * np.cos(E))
        E = E - dE
        if np.all(np.abs(dE) < tol):
            return E
    raise ConvergenceError("Kepler equation did not converge")


def solve_kepler_hyperbolic(mean_anomaly, e, tol=1e-14, max_iter=100):
    M = np.asarray(mean_anomaly, dtype=float)
    H = np.arcsinh(M / e)
    for _ in range(max_iter):
        f = e * np.sinh(H) - H - M
        dH = f / (e * np.cosh(H) - 1.0)
        H = H - dH
        if np.all(np.abs(dH) <= tol * np.maximum(1.0, np.abs(H))):
            return H
    raise ConvergenceError("hyperbolic Kepler equation did not converge")


def kepler_states(el: OrbitElements, epochs) -> tuple[np.ndarray, np.ndarray]:
    t = np.atleast_1d(np.asarray(epochs, dtype=float))
    n = el.mean_motion
    E = solve_kepler(el.mean_anomaly + n * (t - el.epoch0), el.e)
    cE, sE = np.cos(E), np.sin(E)
    b = el.a * math.sqrt(1.0 - el.e ** 2)
    Edot = n / (1.0 - el.e * cE)
    pf = np.stack([el.a * (cE - el.e), b * sE, np.zeros_like(E)], axis=-1)
    vf = np.stack([-el.a * sE * Edot, b * cE * Edot, np.zeros_like(E)], axis=-1)
    R = rotation_perifocal(el.inc, el.raan, el.argp)
    return pf @ R.T, vf @ R.T


def propagate_kepler(elements: OrbitElements, epoch: float) -> StateVector:
    p, v = kepler_states(elements, epoch)
    return StateVector(p[0], v[0], epoch)


def kepler_trajectory(elements: OrbitElements, span, label="kepler") -> Trajectory:
    return trajectory_from_batch(lambda t: kepler_states(elements, t), span, label)


@dataclass(frozen=True)
class HyperbolicArc:
    """Heliocentric hyperbola given by semi-major axis magnitude, eccentricity,
    perihelion time and orientation."""

    gm: float
    a: float
    e: float
    t_peri: float
    inc: float = 0.0
    raan: float = 0.0
    argp: float = 0.0

    def states(self, epochs):
        t = np.atleast_1d(np.asarray(epochs, dtype=float))
        n = math.sqrt(self.gm / self.a ** 3)
        H = solve_kepler_hyperbolic(n * (t - self.t_peri), self.e)
        cH, sH = np.cosh(H), np.sinh(H)
        b = self.a * math.sqrt(self.e ** 2 - 1.0)
        Hdot = n / (self.e * cH - 1.0)
        pf = np.stack([self.a * (self.e - cH), b * sH, np.zeros_like(H)], axis=-1)
        vf = np.stack([-self.a * sH * Hdot, b * cH * Hdot, np.zeros_like(H)], axis=-1)
        R = rotation_perifocal(self.inc, self.raan, self.argp)
        return pf @ R.T, vf @ R.T

    def radius(self, epoch) -> float:
        p, _ = self.states(epoch)
        return float(np.linalg.norm(p[0]))


# --- ground segment -----------------------------------------------------------

def ground_station_states(latitude, longitude, radius, epochs) -> tuple[np.ndarray, np.ndarray]:
    if not 6.3e6 <= radius <= 6.5e6:
        raise DomainError(f"station radius {radius} m outside [6.3e6, 6.5e6]")
    t = np.atleast_1d(np.asarray(epochs, dtype=float))
    theta = longitude + OMEGA_EARTH * t
    cl = math.cos(latitude)
    pos = radius * np.stack([cl * np.cos(theta), cl * np.sin(theta),
                             np.full_like(theta, math.sin(latitude))], axis=-1)
    vel = OMEGA_EARTH * radius * cl * np.stack([-np.sin(theta), np.cos(theta),
                                                np.zeros_like(theta)], axis=-1)
    return pos, vel


def ground_station_state(latitude, longitude, radius, epoch) -> StateVector:
    """Earth-centred inertial state of a station on a uniformly rotating sphere.

    The prime meridian points along +x at epoch 0.
    """
    p, v = ground_station_states(latitude, longitude, radius, epoch)
    return StateVector(p[0], v[0], epoch)


def ground_station_trajectory(latitude, longitude, radius=R_EARTH, span=(0.0, 10 * YEAR),
                              label="station") -> Trajectory:
    return trajectory_from_batch(
        lambda t: ground_station_states(latitude, longitude, radius, t), span, label)


def earth_trajectory(span=(0.0, 25 * YEAR), phase=0.0) -> Trajectory:
    """Geocentre on a circular 1 AU heliocentric orbit in the x-y plane."""
    n = 2.0 * math.pi / EARTH_ORBIT_PERIOD

    def batch(t):
        ang = phase + n * t
        pos = AU * np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=-1)
        vel = AU * n * np.stack([-np.sin(ang), np.cos(ang), np.zeros_like(ang)], axis=-1)
        return pos, vel

    return trajectory_from_batch(batch, span, "earth")


# --- SAGAS escape profile ----------------------------------------------------

@dataclass(frozen=True)
class EscapeProfile:
    """Patched-conic heliocentric profile: a Hohmann-type leg from 1 AU to
    Jupiter's orbit, then a solar-escape hyperbola fitted through two
    radius/epoch waypoints.

    The whole trajectory may be tilted about the x axis (the Earth-departure
    direction) by ``inclination`` so that solar conjunctions graze rather
    than occult the Sun.
    """

    departure_radius: float = AU
    flyby_radius: float = JUPITER_ORBIT_RADIUS
    waypoints: tuple[tuple[float, float], tuple[float, float]] = ((15 * YEAR, 39 * AU), (20 * YEAR, 53 * AU))
    duration: float = 20 * YEAR
    flyby_distance: float = 6.0e8
    inclination: float = 0.0
    gm: float = GM_SUN

    @cached_property
    def transfer(self) -> OrbitElements:
        a = 0.5 * (self.departure_radius + self.flyby_radius)
        e = (self.flyby_radius - self.departure_radius) / (self.flyby_radius + self.departure_radius)
        return OrbitElements(self.gm, a, e, inc=self.inclination)

    @property
    def flyby_epoch(self) -> float:
        return 0.5 * self.transfer.period

    @cached_property
    def escape(self) -> HyperbolicArc:
        tJ = self.flyby_epoch
        (t1, r1), (t2, r2) = self.waypoints

        def resid(p):
            a, e, tp = p[0] * AU, p[1], p[2] * YEAR
            arc = HyperbolicArc(self.gm, abs(a), abs(e - 1.0) + 1.0, tp)
            return [arc.radius(tJ) / self.flyby_radius - 1.0,
                    arc.radius(t1) / r1 - 1.0,
                    arc.radius(t2) / r2 - 1.0]

        # Initial guess: perihelion at the flyby, v_inf ~ 12 km/s.
        guess = [6.0, 1.0 + self.flyby_radius / (6.0 * AU), tJ / YEAR]
        sol, info, ier, msg = fsolve(resid, guess, full_output=True, xtol=1e-13)
        if ier != 1 or max(abs(x) for x in resid(sol)) > 1e-9:
            raise ConvergenceError(f"escape profile waypoints not attainable: {msg}")
        a, e, tp = abs(sol[0]) * AU, abs(sol[1] - 1.0) + 1.0, sol[2] * YEAR
        base = HyperbolicArc(self.gm, a, e, tp)
        # Orient the arc so that its position at the flyby matches the transfer aphelion (-x).
        p, _ = base.states(tJ)
        nu = math.atan2(p[0, 1], p[0, 0])
        return HyperbolicArc(self.gm, a, e, tp, inc=self.inclination, argp=math.pi - nu)

    @property
    def escape_start(self) -> float:
        """End of the escape phase: after it the radial velocity stays positive."""
        return max(self.flyby_epoch, self.escape.t_peri)

    def states(self, epochs):
        t = np.atleast_1d(np.asarray(epochs, dtype=float))
        if np.any(t < 0.0) or np.any(t > self.duration):
            raise DomainError(f"epoch outside escape profile span [0, {self.duration}] s")
        pos = np.empty((t.size, 3))
        vel = np.empty((t.size, 3))
        leg1 = t < self.flyby_epoch
        if np.any(leg1):
            pos[leg1], vel[leg1] = kepler_states(self.transfer, t[leg1])
        if np.any(~leg1):
            pos[~leg1], vel[~leg1] = self.escape.states(t[~leg1])
        return pos, vel

    def trajectory(self) -> Trajectory:
        return trajectory_from_batch(self.states, (0.0, self.duration), "sagas")

    def jupiter(self) -> GravitySource:
        """Jupiter on a circular orbit, placed ``flyby_distance`` ahead of the
        spacecraft along its orbit at the flyby epoch."""
        p, _ = self.states(self.flyby_epoch)
        ang = math.atan2(p[0, 1], p[0, 0]) + self.flyby_distance / self.flyby_radius
        period = 2.0 * math.pi * math.sqrt(self.flyby_radius ** 3 / self.gm)
        phase = ang - 2.0 * math.pi * self.flyby_epoch / period
        return circular_source(GM_JUPITER, self.flyby_radius, period, phase, "jupiter", R_JUPITER)


def escape_trajectory(profile: EscapeProfile, epoch: float) -> StateVector:
    p, v = profile.states(epoch)
    return StateVector(p[0], v[0], epoch)


# --- numerical propagation --------------------------------------------------

def _acceleration(model: MetricModel, bias, pos, t):
    acc = np.zeros(3)
    for src in model.sources:
        rel = pos - src.position(t)
        r = math.sqrt(rel @ rel)
        mag = src.gm / (r * r * r)
        if model.variant == "yukawa":
            mag *= 1.0 + model.alpha * (1.0 + r / model.lam) * math.exp(-r / model.lam)
        acc -= mag * rel
    if model.variant == "anomaly":
        acc += anomalous_acceleration_at(model, pos, t)
    if bias is not None:
        acc += bias(pos, t)
    return acc


def _bias_function(model, accel_bias):
    if accel_bias is None:
        return None
    b = np.asarray(accel_bias, dtype=float)
    if b.ndim == 0:
        if b == 0.0:
            return None
        # Scalar bias acts along the sunward direction.
        def radial(pos, t):
            rel = pos - model.primary.position(t)
            return -float(b) * rel / np.linalg.norm(rel)
        return radial
    return lambda pos, t: b


def _rk4(model, bias, t0, y0, step, nsteps):
    ts = t0 + step * np.arange(nsteps + 1)
    ys = np.empty((nsteps + 1, 6))
    acc = np.empty((nsteps + 1, 3))
    ys[0] = y0

    def f(t, y):
        return np.concatenate([y[3:], _acceleration(model, bias, y[:3], t)])

    for i in range(nsteps):
        t, y = ts[i], ys[i]
        k1 = f(t, y)
        acc[i] = k1[3:]
        k2 = f(t + 0.5 * step, y + 0.5 * step * k1)
        k3 = f(t + 0.5 * step, y + 0.5 * step * k2)
        k4 = f(t + step, y + step * k3)
        ys[i + 1] = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    acc[-1] = _acceleration(model, bias, ys[-1, :3], ts[-1])
    return ts, ys, acc


@lru_cache(maxsize=256)
def integrator_self_test(gm, radius, step, max_steps=256) -> float:
    """Relative energy drift per orbit of RK4 on a circular orbit of ``radius``.

    At most ``max_steps`` steps are integrated; the drift is extrapolated
    linearly to one full period.
    """
    period = 2.0 * math.pi * math.sqrt(radius ** 3 / gm)
    nsteps = max(1, min(max_steps, int(round(period / step))))
    v = math.sqrt(gm / radius)
    src = static_source(gm)
    model = MetricModel.gr([src])
    _, ys, _ = _rk4(model, None, 0.0, np.array([radius, 0, 0, 0, v, 0]), step, nsteps)
    e0 = -0.5 * gm / radius
    r = np.linalg.norm(ys[-1, :3])
    e1 = 0.5 * ys[-1, 3:] @ ys[-1, 3:] - gm / r
    return abs(e1 - e0) / abs(e0) * period / (nsteps * step)


def _hermite(ts, ys, acc, step):
    def batch(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = np.clip(((t - ts[0]) / step).astype(int), 0, len(ts) - 2)
        s = ((t - ts[i]) / step)[:, None]
        h00 = 2 * s ** 3 - 3 * s ** 2 + 1
        h10 = s ** 3 - 2 * s ** 2 + s
        h01 = -2 * s ** 3 + 3 * s ** 2
        h11 = s ** 3 - s ** 2
        p0, p1 = ys[i, :3], ys[i + 1, :3]
        v0, v1 = ys[i, 3:], ys[i + 1, 3:]
        a0, a1 = acc[i], acc[i + 1]
        pos = h00 * p0 + h10 * step * v0 + h01 * p1 + h11 * step * v1
        vel = h00 * v0 + h10 * step * a0 + h01 * v1 + h11 * step * a1
        return pos, vel
    return batch


def propagate_perturbed(base: Trajectory, model: MetricModel, accel_bias=None,
                        span=None, step=3600.0, drift_tolerance=1e-6) -> Trajectory:
    """Integrate from ``base``'s state at the span start with fixed-step RK4.

    Accelerations: point-mass gravity of every source in ``model`` (with the
    Yukawa correction for that variant), the anomaly for the anomaly variant,
    and a constant ``accel_bias`` (3-vector, or a scalar taken sunward).

    Raises:
        AccuracyError: the anomaly-free RK4 self-test at the starting radius
            drifts by more than ``drift_tolerance`` in energy per orbit.
    """
    if not step > 0:
        raise DomainError("step must be positive")
    t0, t1 = span if span is not None else base.span
    s0 = base(t0)
    if not model.sources:
        raise DomainError("propagation needs at least one gravity source")
    prim = model.primary
    r0 = float(np.linalg.norm(s0.position - prim.position(t0)))
    drift = integrator_self_test(prim.gm, r0, step)
    if drift > drift_tolerance:
        raise AccuracyError(f"step {step} s gives energy drift {drift:.2e} per orbit at r = {r0:.3e} m")
    nsteps = int(math.ceil((t1 - t0) / step - 1e-9))
    h = (t1 - t0) / nsteps
    ts, ys, acc = _rk4(model, _bias_function(model, accel_bias), t0,
                       np.concatenate([s0.position, s0.velocity]), h, nsteps)
    return trajectory_from_batch(_hermite(ts, ys, acc, h), (t0, t1), f"{base.label}+perturbed")
