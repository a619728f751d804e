"""Weak-field gravitational potentials and metric coefficients.

Sign convention: the Newtonian potential is stored positive, ``w = +GM/r``,
and the reduced potential entering the metric is ``phi = -w/c**2``.  A clock
deeper in the potential (larger ``w``) therefore ticks slower.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constants import AU, C2
from .errors import DomainError, SingularityError, VariantMismatchError

WEAK_FIELD_LIMIT = 1e-3

Ephemeris = Callable[[float | np.ndarray], np.ndarray]

VARIANTS = ("gr", "ppn", "yukawa", "anomaly")


@dataclass(frozen=True)
class GravitySource:
    """Point mass with an ephemeris in the simulation inertial frame.

    ``ephemeris`` must accept a scalar epoch (returning shape ``(3,)``) or a
    1-d array of epochs (returning shape ``(n, 3)``).
    """

    gm: float
    ephemeris: Ephemeris
    name: str = ""
    radius: float = 0.0
    span: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        if not self.gm > 0:
            raise DomainError(f"source {self.name!r}: gm must be positive, got {self.gm}")
        if self.radius < 0:
            raise DomainError(f"source {self.name!r}: negative radius")

    def position(self, epoch):
        lo, hi = self.span
        if isinstance(epoch, (float, int)):
            if not lo <= epoch <= hi:
                raise DomainError(f"epoch outside ephemeris span of source {self.name!r}")
            return np.asarray(self.ephemeris(np.float64(epoch)), dtype=float)
        t = np.asarray(epoch, dtype=float)
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(f"epoch outside ephemeris span of source {self.name!r}")
        return np.asarray(self.ephemeris(t), dtype=float)


def static_source(gm, position=(0.0, 0.0, 0.0), name="", radius=0.0) -> GravitySource:
    pos = np.asarray(position, dtype=float)

    def ephemeris(t):
        t = np.asarray(t)
        if t.ndim == 0:
            return pos.copy()
        return np.broadcast_to(pos, t.shape + (3,)).copy()

    return GravitySource(gm, ephemeris, name, radius)


def circular_source(gm, orbit_radius, period, phase=0.0, name="", radius=0.0,
                    center=(0.0, 0.0, 0.0)) -> GravitySource:
    """Source on a circular orbit in the x-y plane, prograde, angle ``phase`` at t=0."""
    n = 2.0 * math.pi / period
    c = np.asarray(center, dtype=float)

    def ephemeris(t):
        ang = phase + n * np.asarray(t, dtype=float)
        xyz = np.stack([orbit_radius * np.cos(ang), orbit_radius * np.sin(ang),
                        np.zeros_like(ang)], axis=-1)
        return xyz + c

    return GravitySource(gm, ephemeris, name, radius)


@dataclass(frozen=True)
class MetricModel:
    """Tagged metric variant plus the list of sources it is evaluated over.

    Use the ``gr``/``ppn``/``yukawa``/``anomaly`` constructors rather than
    filling the variant fields by hand.
    """

    variant: str
    sources: tuple[GravitySource, ...] = field(default_factory=tuple)
    beta: float = 1.0
    gamma: float = 1.0
    alpha: float = 0.0
    lam: float = math.inf
    a_p: float = 0.0
    onset_radius: float = 15.0 * AU
    sunward: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown metric variant {self.variant!r}")
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.variant == "yukawa" and not self.lam > 0:
            raise DomainError("Yukawa range lambda must be positive")
        if self.variant == "anomaly" and (self.a_p < 0 or self.onset_radius < 0):
            raise DomainError("anomaly requires a_p >= 0 and onset_radius >= 0")
        if self.variant != "ppn" and (self.beta != 1.0 or self.gamma != 1.0):
            raise DomainError("beta/gamma may only differ from 1 in the ppn variant")

    @classmethod
    def gr(cls, sources: Sequence[GravitySource]) -> "MetricModel":
        return cls("gr", tuple(sources))

    @classmethod
    def ppn(cls, sources, beta=1.0, gamma=1.0) -> "MetricModel":
        return cls("ppn", tuple(sources), beta=float(beta), gamma=float(gamma))

    @classmethod
    def yukawa(cls, sources, alpha, lam) -> "MetricModel":
        return cls("yukawa", tuple(sources), alpha=float(alpha), lam=float(lam))

    @classmethod
    def anomaly(cls, sources, a_p, onset_radius=15.0 * AU, sunward=True) -> "MetricModel":
        return cls("anomaly", tuple(sources), a_p=float(a_p),
                   onset_radius=float(onset_radius), sunward=sunward)

    def with_sources(self, sources) -> "MetricModel":
        kw = {k: getattr(self, k) for k in
              ("variant", "beta", "gamma", "alpha", "lam", "a_p", "onset_radius", "sunward")}
        return MetricModel(sources=tuple(sources), **kw)

    @property
    def primary(self) -> GravitySource:
        """The most massive source; taken as the Sun for the anomaly direction."""
        if not self.sources:
            raise DomainError("metric model has no sources")
        return max(self.sources, key=lambda s: s.gm)


@dataclass(frozen=True)
class PotentialValue:
    w: float
    reduced: float


def potential(model: MetricModel, positions, epochs) -> np.ndarray:
    """Vectorized ``w`` (m^2/s^2) at ``positions`` (..., 3) and matching ``epochs``."""
    pos = np.asarray(positions, dtype=float)
    t = np.asarray(epochs, dtype=float)
    batch = pos.shape[:-1]
    t = np.broadcast_to(t, batch)
    w = np.zeros(batch)
    for src in model.sources:
        if t.ndim == 0:
            sp = src.position(float(t))
        else:
            sp = src.position(t.ravel()).reshape(batch + (3,))
        r = np.linalg.norm(pos - sp, axis=-1)
        if np.any(r == 0.0):
            raise SingularityError(f"position coincides with source {src.name!r}")
        term = src.gm / r
        if model.variant == "yukawa":
            term = term * (1.0 + model.alpha * np.exp(-r / model.lam))
        w = w + term
    return w


def newtonian_potential(model: MetricModel, position, epoch) -> PotentialValue:
    w = float(potential(model, np.asarray(position, dtype=float), float(epoch)))
    return PotentialValue(w, w / C2)


def coefficients_from_phi(phi, beta=1.0, gamma=1.0):
    """``(g00, grr)`` of the isotropic PPN expansion for reduced potential ``phi``."""
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi) >= WEAK_FIELD_LIMIT):
        raise DomainError(f"|phi| >= {WEAK_FIELD_LIMIT}: outside weak-field validity")
    g00 = 1.0 + 2.0 * phi + 2.0 * beta * phi * phi
    grr = -1.0 + 2.0 * gamma * phi
    if g00.ndim == 0:
        return float(g00), float(grr)
    return g00, grr


def metric_coefficients(model: MetricModel, position, epoch) -> tuple[float, float]:
    phi = -newtonian_potential(model, position, epoch).reduced
    return coefficients_from_phi(phi, model.beta, model.gamma)


def anomalous_acceleration_at(model: MetricModel, position, epoch) -> np.ndarray:
    if model.variant != "anomaly":
        raise VariantMismatchError(f"anomalous acceleration needs the anomaly variant, got {model.variant!r}")
    pos = np.asarray(position, dtype=float)
    rel = pos - model.primary.position(epoch)
    r = float(np.linalg.norm(rel))
    if model.a_p == 0.0 or r < model.onset_radius:
        return np.zeros(3)
    if r == 0.0:
        raise SingularityError("position coincides with the primary source")
    sign = -1.0 if model.sunward else 1.0
    return sign * model.a_p * rel / r


def anomalous_acceleration(model: MetricModel, state) -> np.ndarray:
    """Constant-magnitude anomaly beyond the onset radius, zero inside it."""
    return anomalous_acceleration_at(model, state.position, state.epoch)
