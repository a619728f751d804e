"""Power-law clock noise, accelerometer noise and link noise; ADEV/TDEV estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize, signal

from .errors import ConvergenceError, DomainError

WHITE_FM, FLICKER_FM, RANDOM_WALK_FM = -0.5, 0.0, 0.5
_SLOPES = (WHITE_FM, FLICKER_FM, RANDOM_WALK_FM)


# --- series container ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FrequencySeries:
    """Uniformly sampled series starting at epoch ``t0``.

    Sample ``k`` holds over ``[t0 + k*tau0, t0 + (k+1)*tau0)``.
    """

    tau0: float
    values: np.ndarray
    seed: int | None = None
    t0: float = 0.0
    bias: float = 0.0
    quantity: str = "fractional_frequency"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise DomainError("series needs at least two samples")
        if not self.tau0 > 0:
            raise DomainError("tau0 must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    @property
    def span(self) -> float:
        return self.values.size * self.tau0

    @property
    def epochs(self) -> np.ndarray:
        return self.t0 + self.tau0 * np.arange(self.values.size)

    def index(self, epoch):
        k = np.floor((np.asarray(epoch, dtype=float) - self.t0) / self.tau0).astype(np.int64)
        if np.any(k < 0) or np.any(k >= self.values.size):
            raise DomainError("epoch not covered by noise series")
        return k

    def value_at(self, epoch, what: str = "series"):
        try:
            k = self.index(epoch)
        except DomainError:
            raise DomainError(f"{what} noise series does not cover epoch {epoch}") from None
        v = self.values[k]
        return float(v) if np.ndim(v) == 0 else v

    def to_csv(self, path) -> None:
        header = f"epoch_s,{self.quantity}"
        np.savetxt(path, np.column_stack([self.epochs, self.values]), delimiter=",",
                   header=header, comments="", fmt="%.17g")


# --- models ----------------------------------------------------------------------

@dataclass(frozen=True)
class ClockModel:
    """Power-law clock: ``terms`` are ``(mu, sigma_1s)`` with ADEV ``sigma_1s * tau**mu``.

    ``accuracy_bias`` is the 1-sigma fractional accuracy; each run draws its bias
    uniformly on ``±sqrt(3)*accuracy_bias`` so the draw has that standard
    deviation.  ``bias`` fixes the offset deterministically instead.
    """

    terms: tuple[tuple[float, float], ...] = ()
    accuracy_bias: float = 0.0
    name: str = ""
    bias: float | None = None

    def __post_init__(self):
        terms = tuple((float(mu), float(c)) for mu, c in self.terms)
        object.__setattr__(self, "terms", terms)
        for mu, c in terms:
            if mu not in _SLOPES:
                raise DomainError(f"unsupported Allan slope {mu}")
            if c < 0:
                raise DomainError("noise coefficients must be non-negative")
        if self.accuracy_bias < 0:
            raise DomainError("accuracy must be non-negative")
        if not terms and self.accuracy_bias == 0 and self.bias is None:
            raise DomainError("clock model needs a noise term or a bias")

    def coefficient(self, mu) -> float:
        return sum(c for m, c in self.terms if m == mu)

    def scaled(self, k: float) -> "ClockModel":
        return ClockModel(tuple((mu, k * c) for mu, c in self.terms), k * self.accuracy_bias,
                          self.name, None if self.bias is None else k * self.bias)

    def adev(self, tau) -> np.ndarray:
        """Nominal Allan deviation of the noise terms (bias excluded)."""
        tau = np.asarray(tau, dtype=float)
        return np.sqrt(sum((c * tau ** mu) ** 2 for mu, c in self.terms) + 0.0 * tau)


@dataclass(frozen=True)
class AccelerometerModel:
    level: float = 0.0          # m/s^2/sqrt(Hz)
    bias_uncertainty: float = 0.0  # m/s^2, 1-sigma

    def __post_init__(self):
        if self.level < 0 or self.bias_uncertainty < 0:
            raise DomainError("accelerometer levels must be non-negative")

    def scaled(self, k):
        return AccelerometerModel(k * self.level, k * self.bias_uncertainty)


PHARAO = ClockModel(((WHITE_FM, 1e-13),), accuracy_bias=1e-16, name="pharao")
SHM = ClockModel(((WHITE_FM, 1e-13), (FLICKER_FM, 1.1e-15)), name="shm")
SAGAS_CLOCK = ClockModel(((WHITE_FM, 1e-14),), accuracy_bias=1e-17, name="sagas")
SAGAS_ACCELEROMETER = AccelerometerModel(1.3e-9, 5e-12)
CLOCK_PRESETS = {"pharao": PHARAO, "shm": SHM, "sagas": SAGAS_CLOCK}


# --- synthesis -------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    if seed is None:
        raise DomainError("a seed is required")
    return np.random.default_rng(seed)


@lru_cache(maxsize=8)
def _flicker_sos(tau0: float, decades: int = 6, per_decade: int = 3):
    """Pole/zero cascade whose PSD (unit white input, one-sided ``2*tau0``)
    approximates ``1/f`` over ``decades`` below Nyquist; unit flicker level."""
    fn = 0.5 / tau0
    step = 10.0 ** (1.0 / per_decade)
    f_pole = fn * 10.0 ** -decades * step ** np.arange(decades * per_decade)
    f_zero = f_pole * math.sqrt(step)
    p = np.exp(-2 * math.pi * f_pole * tau0)
    z = np.exp(-2 * math.pi * f_zero * tau0)
    sos = np.zeros((p.size, 6))
    sos[:, 0], sos[:, 1] = 1.0, -z
    sos[:, 3], sos[:, 4] = 1.0, -p
    # calibrate so that 2*tau0*|H|^2 ~ 1/f on a log-average over the inner band
    f = np.geomspace(f_pole[1], f_pole[-2], 400)
    _, h = signal.sosfreqz(sos, worN=f, fs=1.0 / tau0)
    gain = math.exp(-0.5 * np.mean(np.log(2 * tau0 * np.abs(h) ** 2 * f)))
    sos[0, :3] *= gain
    return sos


def _flicker(rng, n, tau0, h_minus1):
    sos = _flicker_sos(float(tau0))
    warm = min(n, 1 << 18)
    x = signal.sosfilt(sos, rng.standard_normal(n + warm))[warm:]
    return math.sqrt(h_minus1) * x


def synthesize_clock_noise(model: ClockModel, n: int, tau0: float, seed, t0=0.0) -> FrequencySeries:
    if n < 2:
        raise DomainError("n must be at least 2")
    if not tau0 > 0:
        raise DomainError("tau0 must be positive")
    rng = _rng(seed)
    y = np.zeros(n)
    for mu, c in model.terms:
        if c == 0:
            continue
        if mu == WHITE_FM:
            y += c / math.sqrt(tau0) * rng.standard_normal(n)
        elif mu == FLICKER_FM:
            y += _flicker(rng, n, tau0, c * c / (2 * math.log(2)))
        else:
            diffusion = 3.0 * c * c
            y += np.cumsum(math.sqrt(diffusion * tau0) * rng.standard_normal(n))
    if model.bias is not None:
        b = float(model.bias)
    else:
        half = math.sqrt(3.0) * model.accuracy_bias
        b = float(rng.uniform(-half, half)) if half > 0 else 0.0
    return FrequencySeries(tau0, y + b, seed, t0, b)


def synthesize_accel_noise(model: AccelerometerModel, n: int, tau0: float, seed, t0=0.0) -> FrequencySeries:
    if n < 2:
        raise DomainError("n must be at least 2")
    rng = _rng(seed)
    a = model.level / math.sqrt(tau0) * rng.standard_normal(n) if model.level > 0 else np.zeros(n)
    half = math.sqrt(3.0) * model.bias_uncertainty
    b = float(rng.uniform(-half, half)) if half > 0 else 0.0
    return FrequencySeries(tau0, a + b, seed, t0, b, quantity="acceleration_m_s2")


# --- estimators ------------------------------------------------------------------

def _factors(series: FrequencySeries, taus) -> list[int]:
    out = []
    for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
        m = tau / series.tau0
        mi = int(round(m))
        if mi < 1 or abs(m - mi) > 1e-9 * max(1.0, m):
            raise DomainError(f"tau={tau} is not an integer multiple of tau0={series.tau0}")
        if tau > series.span / 4:
            raise DomainError(f"tau={tau} exceeds a quarter of the series span")
        out.append(mi)
    return out


def _phase(series: FrequencySeries) -> np.ndarray:
    y = series.values - series.values[0]
    return np.concatenate([[0.0], np.cumsum(y) * series.tau0])


def allan_deviation(series: FrequencySeries, taus) -> list[tuple[float, float]]:
    """Overlapping Allan deviation at each ``tau``."""
    x = _phase(series)
    out = []
    for m in _factors(series, taus):
        d2 = x[2 * m:] - 2 * x[m:-m] + x[:-2 * m]
        tau = m * series.tau0
        out.append((tau, math.sqrt(np.mean(d2 * d2) / (2 * tau * tau))))
    return out


def modified_allan_deviation(series: FrequencySeries, taus) -> list[tuple[float, float]]:
    x = _phase(series)
    out = []
    for m in _factors(series, taus):
        d2 = x[2 * m:] - 2 * x[m:-m] + x[:-2 * m]
        c = np.concatenate([[0.0], np.cumsum(d2)])
        inner = c[m:] - c[:-m]
        tau = m * series.tau0
        out.append((tau, math.sqrt(np.mean(inner * inner) / (2 * m * m * tau * tau))))
    return out


def time_deviation(series: FrequencySeries, taus) -> list[tuple[float, float]]:
    return [(tau, tau * md / math.sqrt(3.0)) for tau, md in modified_allan_deviation(series, taus)]


# --- link noise ------------------------------------------------------------------

MWL_SPEC = ((300.0, 0.3e-12), (86400.0, 7e-12), (864000.0, 23e-12))


def _kernel_integral(psd, tau, kernel) -> float:
    x = np.concatenate([np.geomspace(1e-7, 1.0, 400, endpoint=False), np.linspace(1.0, 3000.0, 60000)])
    return float(np.trapezoid(psd(x / (math.pi * tau)) * kernel(x), x) / (math.pi * tau))


def _adev_from_psd(psd, tau) -> float:
    return math.sqrt(_kernel_integral(psd, tau, lambda x: 2 * np.sin(x) ** 4 / x ** 2))


def _tdev_from_psd(psd, tau) -> float:
    """TDEV for a one-sided fractional-frequency PSD in the continuous limit."""
    mvar = _kernel_integral(psd, tau, lambda x: 2 * np.sin(x) ** 6 / x ** 4)
    return tau * math.sqrt(mvar / 3.0)


@dataclass(frozen=True)
class LinkNoiseModel:
    """Time-transfer link noise: white FM plus band-limited (first-order
    Gauss-Markov) frequency noise, optionally with turbulence white PM.

    ``white_fm`` is ADEV at 1 s; ``bl_variance`` and ``bl_time`` are the
    variance and correlation time of the band-limited part.  Turbulence gives
    ADEV ``turbulence/tau`` and is modelled as white phase noise.
    """

    spec: tuple[tuple[float, float], ...] = MWL_SPEC
    turbulence: float = 0.0
    white_fm: float = 0.0
    bl_variance: float = 0.0
    bl_time: float = 3600.0

    def __post_init__(self):
        spec = tuple((float(t), float(v)) for t, v in self.spec)
        object.__setattr__(self, "spec", spec)
        taus = [t for t, _ in spec]
        if taus != sorted(taus) or any(t <= 0 or v <= 0 for t, v in spec):
            raise DomainError("spec points must be positive and sorted by tau")
        if min(self.turbulence, self.white_fm, self.bl_variance) < 0 or self.bl_time <= 0:
            raise DomainError("link noise parameters must be non-negative")

    def psd(self, f):
        f = np.asarray(f, dtype=float)
        s = 2 * self.white_fm ** 2 + 4 * self.bl_variance * self.bl_time / (1 + (2 * math.pi * f * self.bl_time) ** 2)
        return s

    def adev(self, tau) -> float:
        """Allan deviation of the link noise at ``tau`` (continuous limit)."""
        pm = self.turbulence / tau
        return math.sqrt(_adev_from_psd(self.psd, float(tau)) ** 2 + pm * pm)

    def theoretical_tdev(self, taus, tau0: float = 1.0) -> np.ndarray:
        """TDEV (s) in the continuous limit.  Turbulence enters as white PM of
        rms ``c_t/sqrt(3)`` per ``tau0`` sample, so its TDEV falls as ``tau**-0.5``."""
        sx2 = self.turbulence ** 2 / 3.0
        return np.array([math.sqrt(_tdev_from_psd(self.psd, float(t)) ** 2 + sx2 * tau0 / float(t))
                         for t in np.atleast_1d(taus)])

    @classmethod
    def calibrate(cls, spec=MWL_SPEC, turbulence=0.0, target=0.85, tau0=60.0) -> "LinkNoiseModel":
        """Fit the white-FM and band-limited parameters so TDEV equals
        ``target`` times each spec value (least squares in log space)."""
        spec = tuple(spec)
        taus = np.array([t for t, _ in spec])
        vals = np.array([v for _, v in spec]) * target

        def resid(p):
            m = cls(spec, turbulence, math.exp(p[0]), math.exp(p[1]), math.exp(p[2]))
            return np.log(m.theoretical_tdev(taus, tau0) / vals)

        wfm0 = vals[0] * math.sqrt(6.0 / taus[0])
        p0 = [math.log(wfm0), math.log(1e-31), math.log(3600.0)]
        sol = optimize.least_squares(resid, p0, x_scale=1.0, xtol=1e-12, ftol=1e-12)
        if not sol.success:
            raise ConvergenceError("link noise calibration failed")
        return cls(spec, turbulence, *np.exp(sol.x))

    def synthesize(self, n: int, tau0: float, seed, t0=0.0) -> FrequencySeries:
        """Fractional-frequency link noise averaged over each ``tau0`` interval."""
        if n < 2:
            raise DomainError("n must be at least 2")
        rng = _rng(seed)
        y = self.white_fm / math.sqrt(tau0) * rng.standard_normal(n)
        if self.bl_variance > 0:
            phi = math.exp(-tau0 / self.bl_time)
            e = rng.standard_normal(n) * math.sqrt(self.bl_variance * (1 - phi * phi))
            e[0] = rng.standard_normal() * math.sqrt(self.bl_variance)
            y += signal.lfilter([1.0], [1.0, -phi], e)
        if self.turbulence > 0:
            sx = self.turbulence / math.sqrt(3.0)
            x = sx * rng.standard_normal(n + 1)
            y += np.diff(x) / tau0
        return FrequencySeries(tau0, y, seed, t0, quantity="link_fractional_frequency")
