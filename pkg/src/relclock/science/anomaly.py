"""Recovery of a constant anomalous acceleration from Doppler residuals
corrected by accelerometer readings, arc by arc."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..constants import AU, C, DAY, YEAR
from ..dynamics import Trajectory, propagate_perturbed
from ..errors import ConvergenceError, DomainError
from ..metric import MetricModel
from ..noise import AccelerometerModel, FrequencySeries, synthesize_accel_noise
from .estimation import EstimationResult

MIN_ARC = YEAR
ARC_STEP = DAY


@dataclass(frozen=True, eq=False)
class AnomalyArc:
    """One tracking arc.

    ``doppler`` is the radial-velocity residual (m/s) against the
    gravity-only reference propagated from the same initial state;
    ``accel_mean`` is the mean sunward accelerometer reading (m/s^2).
    """

    t0: float
    t1: float
    epochs: np.ndarray
    radius: np.ndarray
    doppler: np.ndarray
    sigma_doppler: float
    accel_mean: float
    accel_white_sigma: float


@dataclass(frozen=True, eq=False)
class AnomalyData:
    base: Trajectory
    reference: MetricModel
    arcs: tuple[AnomalyArc, ...]
    accel_bias_sigma: float
    step: float = ARC_STEP


def _radial_residual(base, reference, t0, t1, step, sunward_accel, ref_traj=None):
    """Radial-velocity difference between a propagation with an extra constant
    sunward acceleration and the gravity-only reference."""
    ref = ref_traj or propagate_perturbed(base, reference, span=(t0, t1), step=step)
    pert = propagate_perturbed(base, reference, accel_bias=sunward_accel, span=(t0, t1), step=step)
    n = int(round((t1 - t0) / step))
    t = t0 + step * np.arange(n + 1)
    p0, v0 = ref.sample(t)
    _, v1 = pert.sample(t)
    sun = reference.primary.position(t)
    rhat = (p0 - sun) / np.linalg.norm(p0 - sun, axis=-1, keepdims=True)
    return t, np.sum((v1 - v0) * rhat, axis=-1), ref


def simulate_anomaly_data(base: Trajectory, truth: MetricModel, arcs: Sequence[tuple[float, float]],
                          accelerometer: AccelerometerModel, seed, doppler_white: float = 1e-14,
                          nongravitational: float = 0.0, step: float = ARC_STEP,
                          accel_tau0: float = 3600.0, noiseless: bool = False) -> AnomalyData:
    """Tracking arcs on ``base`` under ``truth`` (anomaly variant).

    ``nongravitational`` is a true sunward non-gravitational acceleration
    seen by both the Doppler and the accelerometer.  Doppler noise is the
    two-way ground-clock white noise ``doppler_white`` averaged over ``step``.
    """
    if truth.variant != "anomaly":
        raise DomainError("truth model must be the anomaly variant")
    reference = MetricModel.gr(truth.sources)
    rng = np.random.default_rng(seed) if not noiseless else None
    sigma_v = math.sqrt(2.0) * doppler_white / math.sqrt(step) * C
    if noiseless:
        sigma_v = 0.0
    out = []
    t_all0 = min(a for a, _ in arcs)
    t_all1 = max(b for _, b in arcs)
    n_acc = int(math.ceil((t_all1 - t_all0) / accel_tau0)) + 1
    if noiseless:
        accel = FrequencySeries(accel_tau0, np.zeros(max(n_acc, 2)), None, t_all0)
    else:
        accel = synthesize_accel_noise(accelerometer, max(n_acc, 2), accel_tau0, int(rng.integers(2**63)), t_all0)
    for t0, t1 in arcs:
        if t1 - t0 < MIN_ARC * (1 - 1e-9):
            raise DomainError("each arc needs at least one year of data")
        ref = propagate_perturbed(base, reference, span=(t0, t1), step=step)
        pert = propagate_perturbed(base, truth, accel_bias=nongravitational or None, span=(t0, t1), step=step)
        n = int(round((t1 - t0) / step))
        t = t0 + step * np.arange(n + 1)
        p0, v0 = ref.sample(t)
        _, v1 = pert.sample(t)
        sun = reference.primary.position(t)
        rel = p0 - sun
        r = np.linalg.norm(rel, axis=-1)
        dv = np.sum((v1 - v0) * rel / r[:, None], axis=-1)
        if sigma_v > 0:
            dv = dv + sigma_v * rng.standard_normal(dv.size)
        k = accel.index(np.arange(t0, t1, accel_tau0))
        a_mean = nongravitational + float(np.mean(accel.values[k]))
        out.append(AnomalyArc(t0, t1, t, r, dv, sigma_v, a_mean,
                              accelerometer.level / math.sqrt(t1 - t0)))
    return AnomalyData(base, reference, tuple(out), accelerometer.bias_uncertainty, step)


def _fit_arc(data: AnomalyData, arc: AnomalyArc, max_iter=8, rtol=1e-10):
    """Gauss-Newton fit of offset + total sunward acceleration ``A`` to the
    Doppler residual; returns ``(A, sigma_A_white)``."""
    A = arc.accel_mean
    ref = None
    h = 1e-11
    for _ in range(max_iter):
        t, m0, ref = _radial_residual(data.base, data.reference, arc.t0, arc.t1, data.step, A, ref)
        _, m1, _ = _radial_residual(data.base, data.reference, arc.t0, arc.t1, data.step, A + h, ref)
        J = np.column_stack([np.ones_like(t), (m1 - m0) / h])
        r = arc.doppler - m0
        sol, *_ = np.linalg.lstsq(J, r, rcond=None)
        A += sol[1]
        if abs(sol[1]) <= rtol * abs(A) + 1e-17:
            break
    else:
        raise ConvergenceError("anomaly arc fit did not converge")
    cov = np.linalg.inv(J.T @ J) * arc.sigma_doppler ** 2
    return A, math.sqrt(cov[1, 1])


def anomaly_mapping(data: AnomalyData, bin_edges_au: Sequence[float] | None = None) -> EstimationResult:
    """Per-arc anomalous acceleration ``a_p`` (sunward positive).

    Each arc is labelled by its heliocentric range.  With ``bin_edges_au``
    the arcs are assigned to radial bins by mean radius; bins without arcs are
    listed under ``metadata['absent_bins']`` rather than reported as zero.
    The accelerometer bias is common to every arc.
    """
    names, vals, white = [], [], []
    labels = []
    for arc in data.arcs:
        A, s_dop = _fit_arc(data, arc)
        vals.append(A - arc.accel_mean)
        white.append(s_dop ** 2 + arc.accel_white_sigma ** 2)
        lo, hi = arc.radius.min() / AU, arc.radius.max() / AU
        labels.append((lo, hi))
        names.append(f"a_p[{lo:.2f}-{hi:.2f}AU]")
    cov = np.diag(white) + data.accel_bias_sigma ** 2 * np.ones((len(vals), len(vals)))
    absent = []
    if bin_edges_au is not None:
        edges = np.asarray(bin_edges_au, dtype=float)
        mids = np.array([0.5 * (a + b) for a, b in labels])
        for lo, hi in zip(edges[:-1], edges[1:]):
            if not np.any((mids >= lo) & (mids < hi)):
                absent.append([float(lo), float(hi)])
    sig = np.sqrt(np.diag(cov))
    return EstimationResult(dict(zip(names, vals)), dict(zip(names, map(float, sig))), cov,
                            0.0, sum(a.epochs.size for a in data.arcs),
                            {"test": "anomaly_mapping", "absent_bins": absent,
                             "arc_radii_au": [list(x) for x in labels]})


def fit_onset(radii, values, sigmas) -> dict:
    """Step model ``a(r) = a_p * [r >= r_on]`` over arc estimates.

    Every gap between sorted radii is a candidate; the winner's onset is the
    midpoint of its gap and ``a_p`` the weighted mean beyond it.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    w = 1.0 / np.asarray(sigmas, dtype=float) ** 2
    order = np.argsort(r)
    r, v, w = r[order], v[order], w[order]
    best = None
    for k in range(1, r.size):
        a = np.sum(w[k:] * v[k:]) / np.sum(w[k:])
        chi2 = np.sum(w[:k] * v[:k] ** 2) + np.sum(w[k:] * (v[k:] - a) ** 2)
        if best is None or chi2 < best[0]:
            best = (chi2, k, a)
    if best is None:
        raise DomainError("onset fit needs at least two arcs")
    _, k, a = best
    return {"onset_radius": 0.5 * (r[k - 1] + r[k]), "bracket": (r[k - 1], r[k]),
            "a_p": a, "sigma_a_p": math.sqrt(1.0 / np.sum(w[k:]))}
