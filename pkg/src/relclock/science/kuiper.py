"""Kuiper-belt potential by quadrature, and the accelerometer/clock crossover
for weighing individual belt objects."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ellipkm1

from ..constants import AU, C2, G, M_EARTH
from ..errors import ConvergenceError, DomainError, SingularityError
from ..metric import PotentialValue

DISTRIBUTIONS = ("ring", "annulus", "two-ring")


@dataclass(frozen=True)
class KuiperBeltModel:
    """Axisymmetric belt centred on the Sun, in a plane tilted by
    ``inclination`` about the x axis.

    ``ring``: all mass at ``radius``.  ``annulus``: uniform surface density
    on ``[r1, r2]``.  ``two-ring``: ``fraction`` of the mass at ``radius``,
    the rest at ``radius2``.
    """

    distribution: str = "annulus"
    mass: float = 0.1 * M_EARTH
    inclination: float = 0.0
    radius: float = 40 * AU
    r1: float = 30 * AU
    r2: float = 100 * AU
    radius2: float = 60 * AU
    fraction: float = 0.5

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise DomainError(f"unknown belt distribution {self.distribution!r}")
        if not 0.0 <= self.mass <= M_EARTH:
            raise DomainError("belt mass must lie within [0, 1 Earth mass]")
        if not 0.0 < self.r1 < self.r2:
            raise DomainError("annulus needs 0 < r1 < r2")
        if not 0.0 <= self.fraction <= 1.0:
            raise DomainError("two-ring fraction must lie in [0, 1]")
        if self.radius <= 0 or self.radius2 <= 0:
            raise DomainError("ring radii must be positive")

    def scaled(self, k: float) -> "KuiperBeltModel":
        return replace(self, mass=self.mass * k)


def _belt_coords(model: KuiperBeltModel, position):
    x, y, z = np.asarray(position, dtype=float)
    ci, si = math.cos(model.inclination), math.sin(model.inclination)
    yb, zb = ci * y + si * z, -si * y + ci * z
    return math.hypot(x, yb), zb


def _ring_trapezoid(gm, R, rho, z, tol, n0=16, max_n=1 << 16):
    """Periodic trapezoid in azimuth; node count doubled until converged."""
    n = n0
    prev = None
    while n <= max_n:
        phi = 2 * math.pi * np.arange(n) / n
        d = np.sqrt(R * R + rho * rho + z * z - 2 * R * rho * np.cos(phi))
        if np.any(d == 0.0):
            raise SingularityError("field point lies on the ring")
        val = gm * float(np.mean(1.0 / d))
        if prev is not None and abs(val - prev) <= tol * abs(val):
            return val
        prev = val
        n *= 2
    raise ConvergenceError("ring quadrature did not converge")


def _ring_kernel(R, rho, z):
    """Potential of a unit-GM ring (closed form with the elliptic integral K).

    The complementary parameter ``1 - m`` is formed directly so that points
    close to the ring keep full precision."""
    s = (R + rho) ** 2 + z * z
    p = ((R - rho) ** 2 + z * z) / s
    if np.any(p <= 0.0):
        raise SingularityError("field point lies on the ring")
    return 2.0 / (math.pi * np.sqrt(s)) * ellipkm1(p)


_GL_CACHE: dict = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _annulus_rule(gm, r1, r2, rho, z, n):
    """Fixed ``n``-node Gauss-Legendre rule over ring radius for a uniform
    annulus, split at ``rho`` with a quadratic substitution to tame the
    in-plane log singularity."""
    sigma = gm / (math.pi * (r2 * r2 - r1 * r1))
    # (singular end, far end) pairs; r = a + (b - a) u^2 clusters nodes at a
    pieces = [(rho, r1), (rho, r2)] if r1 < rho < r2 else [(r1, r2)]
    x, w = _gauss(n)
    u = 0.5 * (x + 1.0)
    total = 0.0
    for a, b in pieces:
        r = a + (b - a) * u * u
        jac = abs(b - a) * u
        total += float(np.sum(w * jac * 2 * math.pi * r * _ring_kernel(r, rho, z)))
    return sigma * total


def _annulus(gm, r1, r2, rho, z, tol, n0=16, max_n=4096):
    n = n0
    prev = _annulus_rule(gm, r1, r2, rho, z, n)
    while n < max_n:
        n *= 2
        cur = _annulus_rule(gm, r1, r2, rho, z, n)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    raise ConvergenceError("annulus quadrature did not converge")


def kuiper_potential(model: KuiperBeltModel, position, tol: float = 1e-6) -> PotentialValue:
    """Newtonian potential ``w`` (positive) of the belt at ``position``."""
    gm = G * model.mass
    if gm == 0.0:
        return PotentialValue(0.0, 0.0)
    rho, z = _belt_coords(model, position)
    if model.distribution == "ring":
        w = _ring_trapezoid(gm, model.radius, rho, z, tol)
    elif model.distribution == "two-ring":
        w = (_ring_trapezoid(gm * model.fraction, model.radius, rho, z, tol) if model.fraction > 0 else 0.0) + \
            (_ring_trapezoid(gm * (1 - model.fraction), model.radius2, rho, z, tol) if model.fraction < 1 else 0.0)
    else:
        if z == 0.0 and (rho == model.r1 or rho == model.r2):
            raise SingularityError("field point on the annulus edge")
        w = _annulus(gm, model.r1, model.r2, rho, z, tol)
    return PotentialValue(w, w / C2)


# --- individual objects -----------------------------------------------------------

@dataclass(frozen=True)
class KboSensitivity:
    crossover_radius: float
    acceleration: float
    frequency_shift: float
    mass_sigma_relative: float
    route: str


def kbo_crossover_and_mass(gm: float, approach_distance: float, a_min: float = 5e-12,
                           y_min: float = 1e-17) -> KboSensitivity:
    """Crossover radius ``r* = y_min c^2 / a_min`` between accelerometer
    (``GM/r^2``) and clock (``GM/(r c^2)``) detection, and the relative mass
    uncertainty at ``approach_distance`` from the better route."""
    if not approach_distance > 0:
        raise DomainError("approach distance must be positive")
    if gm < 0 or a_min <= 0 or y_min <= 0:
        raise DomainError("gm must be non-negative and instrument floors positive")
    r_star = y_min * C2 / a_min
    acc = gm / approach_distance ** 2
    shift = gm / (approach_distance * C2)
    s_acc = a_min / acc if acc > 0 else math.inf
    s_clk = y_min / shift if shift > 0 else math.inf
    route = "accelerometer" if s_acc <= s_clk else "clock"
    return KboSensitivity(r_star, acc, shift, min(s_acc, s_clk), route)
