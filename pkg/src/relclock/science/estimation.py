"""Weighted least squares with a fully correlated systematic term."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DomainError, RankError

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class EstimationResult:
    parameters: dict
    sigmas: dict
    covariance: np.ndarray
    residual_rms: float
    n_obs: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (len(self.parameters),) * 2:
            raise DomainError("covariance shape does not match parameters")
        object.__setattr__(self, "covariance", 0.5 * (cov + cov.T))

    @property
    def names(self) -> list[str]:
        return list(self.parameters)

    def value(self, name=None) -> float:
        return self.parameters[name or self.names[0]]

    def sigma(self, name=None) -> float:
        return self.sigmas[name or self.names[0]]

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        return {
            "parameters": clean(self.parameters),
            "sigmas": clean(self.sigmas),
            "covariance": clean(self.covariance),
            "residual_rms": float(self.residual_rms),
            "n_obs": int(self.n_obs),
            "metadata": clean(self.metadata),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


@dataclass(frozen=True, eq=False)
class LinearProblem:
    """Linear model ``y = G theta + e`` with ``e = white + b * u``.

    ``white`` is independent with per-row std ``sigma_white``; ``b`` is a
    single unfitted offset of std ``sigma_common`` shared by every row
    (shape vector ``u``, default all ones).  The estimator uses white-noise
    weights; its covariance includes the propagated common term.
    """

    names: tuple[str, ...]
    design: np.ndarray
    sigma_white: np.ndarray
    sigma_common: float = 0.0
    common_shape: np.ndarray | None = None

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.design, dtype=float))
        if G.shape[0] == 1 and len(self.names) == 1 and G.shape[1] != 1:
            G = G.T
        n, p = G.shape
        if p != len(self.names):
            raise DomainError("design columns do not match parameter names")
        sw = np.broadcast_to(np.asarray(self.sigma_white, dtype=float), (n,)).copy()
        if np.any(sw <= 0):
            raise DomainError("white sigmas must be positive")
        u = np.ones(n) if self.common_shape is None else np.asarray(self.common_shape, dtype=float)
        if n < p:
            raise RankError("fewer observations than parameters")
        A = G / sw[:, None]
        scale = np.linalg.norm(A, axis=0)
        if np.any(scale == 0):
            raise RankError("design has an all-zero column: parameter not observable")
        cond = np.linalg.cond(A / scale)
        if not cond < CONDITION_LIMIT:
            raise RankError(f"design matrix ill-conditioned (cond = {cond:.2e})")
        normal_inv = np.linalg.inv(A.T @ A)
        gain = normal_inv @ A.T / sw[None, :]            # p x n
        cov = normal_inv.copy()
        ku = gain @ u
        cov += self.sigma_common ** 2 * np.outer(ku, ku)
        for k, v in (("design", G), ("sigma_white", sw), ("common_shape", u),
                     ("gain", gain), ("covariance", 0.5 * (cov + cov.T))):
            object.__setattr__(self, k, v)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    def solve(self, y, metadata=None) -> EstimationResult:
        y = np.asarray(y, dtype=float)
        theta = self.gain @ y
        resid = y - self.design @ theta
        return EstimationResult(
            dict(zip(self.names, map(float, theta))),
            dict(zip(self.names, map(float, self.sigmas))),
            self.covariance, float(np.sqrt(np.mean(resid ** 2))), self.n_obs,
            dict(metadata or {}))

    def draw_noise(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """One realization: Gaussian white part plus a uniform common offset of
        the configured standard deviation."""
        e = rng.standard_normal(self.n_obs) * self.sigma_white
        if self.sigma_common > 0:
            half = math.sqrt(3.0) * self.sigma_common
            e = e + rng.uniform(-half, half) * self.common_shape
        return scale * e

    def simulate(self, truth: Sequence[float], seed=None, noise=True) -> np.ndarray:
        y = self.design @ np.asarray(truth, dtype=float)
        if noise:
            if seed is None:
                raise DomainError("a seed is required for noisy simulation")
            y = y + self.draw_noise(np.random.default_rng(seed))
        return y

    def monte_carlo(self, truth, seeds) -> np.ndarray:
        """Fitted parameters for each seed, shape ``(len(seeds), p)``."""
        return np.array([self.gain @ self.simulate(truth, s) for s in seeds])
