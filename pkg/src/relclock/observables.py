"""Relativistic observables: clock-rate differences, proper time, light time
with Shapiro delay, and Doppler link combinations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import C, C2
from .dynamics import StateVector, Trajectory
from .errors import ConvergenceError, DomainError, OccultationError
from .metric import MetricModel, WEAK_FIELD_LIMIT, coefficients_from_phi, potential


@dataclass(frozen=True)
class FrequencyShift:
    """Fractional rate of the space clock relative to the ground clock.

    ``total`` is positive when the space clock ticks faster.
    """

    total: float
    gravitational: float
    velocity: float


def _guard(w):
    if np.any(np.abs(w) / C2 >= WEAK_FIELD_LIMIT):
        raise DomainError("weak-field guard violated")


def shift_terms(model: MetricModel, ground_pos, ground_vel, space_pos, space_vel, epochs):
    """Vectorized gravitational and velocity parts of the clock-rate difference."""
    wg = potential(model, ground_pos, epochs)
    ws = potential(model, space_pos, epochs)
    _guard(wg)
    _guard(ws)
    grav = (wg - ws) / C2
    vg2 = np.sum(np.asarray(ground_vel) ** 2, axis=-1)
    vs2 = np.sum(np.asarray(space_vel) ** 2, axis=-1)
    vel = (vg2 - vs2) / (2.0 * C2)
    return grav, vel


def fractional_frequency_shift(ground: StateVector, space: StateVector,
                               model: MetricModel) -> FrequencyShift:
    if ground.epoch != space.epoch:
        raise DomainError("ground and space states must share an epoch")
    g, v = shift_terms(model, ground.position, ground.velocity,
                       space.position, space.velocity, ground.epoch)
    g, v = float(g), float(v)
    return FrequencyShift(g + v, g, v)


# --- proper time ---------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _rate_minus_one(traj: Trajectory, model: MetricModel, t):
    pos, vel = traj.sample(t)
    w = potential(model, pos, t)
    phi = -w / C2
    g00, grr = coefficients_from_phi(phi, model.beta, model.gamma)
    v2 = np.sum(vel * vel, axis=-1) / C2
    # sqrt(1 + x) - 1 without cancellation
    x = (g00 - 1.0) + grr * v2
    return x / (1.0 + np.sqrt(1.0 + x))


def _panel_integral(f, t0, t1, panels):
    edges = np.linspace(t0, t1, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    vals = f(nodes).reshape(panels, -1)
    return float(np.sum(half * (vals @ _GL_W)))


def proper_time_offset(traj: Trajectory, model: MetricModel, t0: float, t1: float,
                       rtol=1e-13, panel=600.0, max_doublings=12) -> float:
    """``Δτ - (t1 - t0)`` in seconds, by composite 8-point Gauss-Legendre
    quadrature with panel doubling until successive estimates agree."""
    if not t1 >= t0:
        raise DomainError("t1 must not precede t0")
    traj._check([t0, t1])
    if t1 == t0:
        return 0.0
    f = lambda t: _rate_minus_one(traj, model, t)
    panels = max(1, int(math.ceil((t1 - t0) / panel)))
    prev = _panel_integral(f, t0, t1, panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = _panel_integral(f, t0, t1, panels)
        if abs(cur - prev) <= rtol * abs(cur) + 1e-16 * (t1 - t0):
            return cur
        prev = cur
    raise ConvergenceError("proper-time quadrature did not converge")


def proper_time_elapsed(traj: Trajectory, model: MetricModel, t0: float, t1: float) -> float:
    """Proper time along ``traj`` between coordinate epochs ``t0`` and ``t1``."""
    return (t1 - t0) + proper_time_offset(traj, model, t0, t1)


# --- light propagation ---------------------------------------------------------

def _effective_gamma(model: MetricModel) -> float:
    return model.gamma if model.variant == "ppn" else 1.0


def shapiro_delay(model: MetricModel, x_emit, x_recv, epoch) -> float:
    """One-way excess light time (s) summed over sources, PPN ``(1+gamma)`` form.

    Raises OccultationError when the straight segment crosses a source body.
    """
    gamma = _effective_gamma(model)
    x_emit = np.asarray(x_emit, dtype=float)
    x_recv = np.asarray(x_recv, dtype=float)
    seg = x_recv - x_emit
    R = float(np.linalg.norm(seg))
    total = 0.0
    if R == 0.0:
        return total
    for src in model.sources:
        s = src.position(epoch)
        if src.radius > 0.0:
            u = np.clip(np.dot(s - x_emit, seg) / (R * R), 0.0, 1.0)
            # endpoints on the surface (ground stations) are not occulted
            if np.linalg.norm(x_emit + u * seg - s) < src.radius * (1.0 - 1e-9):
                raise OccultationError(f"ray occulted by {src.name!r}")
        total += (1.0 + gamma) * src.gm / C ** 3 * shapiro_log(x_emit - s, x_recv - s)
    return total


def shapiro_log(xe, xr):
    """``ln((re + rr + R)/(re + rr - R))`` for source-centred endpoints.

    Uses ``re + rr - R = re*rr*|ue + ur|**2 / (re + rr + R)`` to avoid
    cancellation near conjunction.  Broadcasts over leading axes.
    """
    xe = np.asarray(xe, dtype=float)
    xr = np.asarray(xr, dtype=float)
    re = np.linalg.norm(xe, axis=-1)
    rr = np.linalg.norm(xr, axis=-1)
    R = np.linalg.norm(xr - xe, axis=-1)
    if np.any(re == 0.0) or np.any(rr == 0.0):
        raise OccultationError("ray endpoint coincides with a source")
    s = np.linalg.norm(xe / re[..., None] + xr / rr[..., None], axis=-1) ** 2
    plus = re + rr + R
    out = np.log(plus * plus / (re * rr * s))
    return float(out) if out.ndim == 0 else out


def light_time(emit: StateVector, receiver: Trajectory, model: MetricModel,
               tol=1e-12, max_iter=20) -> tuple[float, StateVector]:
    """Coordinate light time from ``emit`` to the receiver trajectory.

    Fixed-point iteration on geometric range plus Shapiro delay.
    """
    T = 0.0
    for _ in range(max_iter):
        recv = receiver(emit.epoch + T)
        R = float(np.linalg.norm(recv.position - emit.position))
        T_new = R / C + shapiro_delay(model, emit.position, recv.position, emit.epoch + 0.5 * T)
        if abs(T_new - T) < tol:
            return T_new, receiver(emit.epoch + T_new)
        T = T_new
    raise ConvergenceError("light-time iteration did not converge in 20 iterations")


def light_time_backward(receive: StateVector, emitter: Trajectory, model: MetricModel,
                        tol=1e-12, max_iter=20) -> tuple[float, StateVector]:
    """Light time for a signal received at ``receive``; returns the emitter state."""
    T = 0.0
    for _ in range(max_iter):
        em = emitter(receive.epoch - T)
        R = float(np.linalg.norm(receive.position - em.position))
        T_new = R / C + shapiro_delay(model, em.position, receive.position, receive.epoch - 0.5 * T)
        if abs(T_new - T) < tol:
            return T_new, emitter(receive.epoch - T_new)
        T = T_new
    raise ConvergenceError("light-time iteration did not converge in 20 iterations")


# --- Doppler combinations -------------------------------------------------------

COMBINATIONS = ("one-way", "two-way-coincident-at-satellite",
                "two-way-coincident-at-ground", "common-view")


@dataclass(frozen=True)
class LinkGeometry:
    """Space clock ``emitter`` linked to ground ``receiver``.

    ``second_receiver`` is the second ground station in common view.
    """

    emitter: Trajectory
    receiver: Trajectory
    metric: MetricModel
    combination: str = "one-way"
    second_receiver: Trajectory | None = None

    def __post_init__(self):
        if self.combination not in COMBINATIONS:
            raise DomainError(f"unknown link combination {self.combination!r}")
        if self.combination == "common-view" and self.second_receiver is None:
            raise DomainError("common view needs a second receiver")


@dataclass(frozen=True)
class DopplerMeasurement:
    """Combined fractional-frequency observable.

    ``clock_contributions`` holds each clock's net noise contribution after
    combination, computed by exact differencing of the sampled values.
    """

    value: float
    deterministic: float
    clock_contributions: dict = field(default_factory=dict)
    link: float = 0.0


def _noise_at(series, epoch, what):
    if series is None:
        return 0.0
    return series.value_at(epoch, what)


def _one_way(em: StateVector, rc: StateVector, model: MetricModel) -> float:
    """Clock-rate difference plus first-order Doppler for emitter -> receiver.

    Positive when the received frequency exceeds the receiver's local clock.
    """
    shift = fractional_frequency_shift(
        StateVector(rc.position, rc.velocity, em.epoch),
        StateVector(em.position, em.velocity, em.epoch), model).total
    los = rc.position - em.position
    n = los / np.linalg.norm(los) if np.any(los) else np.zeros(3)
    return shift - float(n @ (rc.velocity - em.velocity)) / C


def doppler_observable(geometry: LinkGeometry, noises: Sequence, epoch: float,
                       link_noise=None) -> DopplerMeasurement:
    """Simulated fractional-frequency measurement for the chosen combination.

    ``noises`` is ``(emitter_clock, receiver_clock[, second_receiver_clock])``;
    entries may be None for a noiseless clock.  Epoch meaning per combination:
    one-way -> reception; coincident-at-satellite -> on-board coincidence;
    coincident-at-ground -> ground coincidence; common-view -> emission.
    """
    g = geometry
    model = g.metric
    ys = noises[0] if len(noises) > 0 else None
    yg = noises[1] if len(noises) > 1 else None
    y2 = noises[2] if len(noises) > 2 else None
    comb = g.combination
    if comb == "one-way":
        rc = g.receiver(epoch)
        T, em = light_time_backward(rc, g.emitter, model)
        det = _one_way(em, rc, model)
        contrib = {"emitter": _noise_at(ys, em.epoch, "emitter"),
                   "receiver": -_noise_at(yg, epoch, "receiver")}
    elif comb == "two-way-coincident-at-satellite":
        sat = g.emitter(epoch)
        T_up, g_up = light_time_backward(sat, g.receiver, model)
        T_dn, g_dn = light_time(sat, g.receiver, model)
        det = _one_way(g_up, sat, model) + _one_way(sat, g_dn, model)
        s = _noise_at(ys, epoch, "emitter")
        contrib = {"emitter": s - s,
                   "receiver": _noise_at(yg, g_up.epoch, "receiver") - _noise_at(yg, g_dn.epoch, "receiver")}
    elif comb == "two-way-coincident-at-ground":
        gr = g.receiver(epoch)
        T_dn, s_dn = light_time_backward(gr, g.emitter, model)
        T_up, s_up = light_time(gr, g.emitter, model)
        det = _one_way(s_dn, gr, model) + _one_way(gr, s_up, model)
        r = _noise_at(yg, epoch, "receiver")
        contrib = {"emitter": _noise_at(ys, s_dn.epoch, "emitter") - _noise_at(ys, s_up.epoch, "emitter"),
                   "receiver": r - r}
    else:
        sat = g.emitter(epoch)
        T1, r1 = light_time(sat, g.receiver, model)
        T2, r2 = light_time(sat, g.second_receiver, model)
        det = _one_way(sat, r1, model) - _one_way(sat, r2, model)
        s = _noise_at(ys, epoch, "emitter")
        contrib = {"emitter": s - s,
                   "receiver": -_noise_at(yg, r1.epoch, "receiver"),
                   "second_receiver": _noise_at(y2, r2.epoch, "second_receiver")}
    link = _noise_at(link_noise, epoch, "link")
    value = det + sum(contrib.values()) + link
    return DopplerMeasurement(value, det, contrib, link)
