"""
Energy certificates for recorded trajectories.

Each certificate compares an observed norm (LHS) against the right-hand side
of an a priori estimate assembled from the same telemetry by trapezoidal
quadrature, and reports the margin RHS - LHS at every observed time together
with the smallest constant that would make the estimate hold on the run.
"""

import csv
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import curve_fit

from exceptions import TelemetryError

logger = logging.getLogger(__name__)

WHICH = ('basic', 'high', 'improved', 'growth', 'stability', 'exponential')
GRONWALL_KINDS = ('i', 'ii')
IMPROVED_EXPONENT_SLACK = 1.25
MARGIN_RTOL = 1e-12

REQUIRED_COLUMNS = {
    'basic': ('t', 'w_s1'),
    'high': ('t', 'w_s1', 'w_s'),
    'improved': ('t', 'w_s1', 'w_s'),
    'growth': ('t', 'hs', 'l2'),
    'stability': ('t', 'hs1', 'l2'),
    'exponential': ('t', 'hs', 'l2'),
}

CERTIFICATE_COLUMNS = ('which', 't', 'lhs', 'rhs', 'margin')
SUMMARY_COLUMNS = ('which', 'constant_name', 'constant', 'required_constant', 'inflation',
                   'min_margin', 'holds')


@dataclass
class CertificateSeries:
    """
    Margin series of one certificate on one run.

    `constant` is the value used to build the RHS; `required_constant` is the
    smallest value of the same constant for which every margin is >= 0.
    """

    which: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    constant_name: str
    constant: float
    required_constant: float
    extras: dict = field(default_factory=dict)

    @property
    def margins(self):
        return self.rhs - self.lhs

    @property
    def min_margin(self):
        return float(np.min(self.margins)) if self.margins.size else 0.0

    @property
    def holds(self):
        scale = float(np.max(np.abs(self.rhs), initial=0.0))
        return self.min_margin >= -MARGIN_RTOL * max(scale, 1.0)

    @property
    def inflation(self):
        """required/pinned; values above 1 mean the pinned constant was too small."""
        if self.constant <= 0:
            return math.inf
        return self.required_constant / self.constant

    def to_rows(self):
        return [
            {'which': self.which, 't': repr(float(t)), 'lhs': repr(float(l)),
             'rhs': repr(float(r)), 'margin': repr(float(r - l))}
            for t, l, r in zip(self.times, self.lhs, self.rhs)
        ]

    def summary(self):
        return {
            'which': self.which,
            'constant_name': self.constant_name,
            'constant': self.constant,
            'required_constant': self.required_constant,
            'inflation': self.inflation,
            'min_margin': self.min_margin,
            'holds': self.holds,
        }


def _telemetry(traj):
    if isinstance(traj, Mapping):
        return {k: np.asarray(v, dtype=np.float64) for k, v in traj.items()}
    if not traj.rows:
        return {}
    return {name: traj.column(name) for name in traj.columns}


def _require(data, which):
    missing = [c for c in REQUIRED_COLUMNS[which] if c not in data]
    if missing:
        raise TelemetryError(f"certificate {which!r} needs telemetry columns {missing}")
    if data['t'].size == 0:
        raise TelemetryError(f"certificate {which!r} got an empty trajectory")


def _integral(values, times):
    return cumulative_trapezoid(values, times, initial=0.0)


def _root_max(numerator, denominator, exponent):
    """max over samples of (numerator/denominator)^(1/exponent), ignoring empty terms."""
    mask = (denominator > 0) & (numerator > 0)
    if not np.any(mask):
        return 0.0
    return float(np.max(numerator[mask] / denominator[mask]) ** (1.0 / exponent))


def _basic(data, cfg, M, C):
    p, s0, s1 = cfg.p, cfg.s0, cfg.s1
    t, low = data['t'], data['w_s1']
    lhs = low ** 2
    gain = 2.0 ** (-2 * p * (s1 - s0))
    integral = _integral(low ** (2 * p + 2), t)
    rhs = lhs[0] + M ** (2 * p * s0) * gain * integral
    required = _root_max(lhs - lhs[0], gain * integral, 2 * p * s0)
    return lhs, rhs, 'M', M, required, {}


def _high(data, cfg, M, C):
    p, s0, s1, s = cfg.p, cfg.s0, cfg.s1, cfg.s
    t = data['t']
    lhs = data['w_s'] ** 2
    power = 2 * p * (s - s1 + s0)
    gain = 2.0 / 2.0 ** (2 * p * (s1 - s0))
    integral = _integral(data['w_s1'] ** (2 * p), t)
    rhs = lhs[0] * np.exp(M ** power * gain * integral)
    if lhs[0] > 0:
        log_growth = np.log(np.maximum(lhs, np.finfo(float).tiny) / lhs[0])
    else:
        log_growth = np.zeros_like(lhs)
    required = _root_max(log_growth, gain * integral, power)
    return lhs, rhs, 'M', M, required, {}


def _improved(data, cfg, M, C):
    p, s0, s1, s = cfg.p, cfg.s0, cfg.s1, cfg.s
    t = data['t']
    gap = s - s1
    lhs = data['w_s'] ** 2
    coefficient = M ** (2 * p * (s - s1 + s0)) / 2.0 ** (2 * p * (s1 - s0))
    integral = _integral(data['w_s1'] ** (2 * p + 1.0 / gap), t)
    core = lhs[0] + (coefficient * integral) ** (2 * gap)
    power = 2 * p * s * gap
    rhs = C ** power * core
    required = _root_max(lhs, core, power)
    extras = {'alpha': 1.0 - 1.0 / (2 * gap)}
    extras.update(improved_exponent_check(t, data['w_s'], cfg))
    return lhs, rhs, 'C', C, required, extras


def _growth(data, cfg, M, C):
    p, s0, s1, s = cfg.p, cfg.s0, cfg.s1, cfg.s
    t = data['t']
    gap = s - s1
    lhs = data['hs']
    size = data['hs'][0] + (2.0 * M) ** s * data['l2'][0]
    rate = M ** (2 * p * gap) * 2.0 ** (4 * p) * M ** (2 * p * s0) / 2.0 ** (2 * p * (s1 - s0))
    envelope = 3.0 * size * (1.0 + (rate * cfg.eps ** (2 * p) * t) ** gap)
    power = p * s * gap
    rhs = C ** power * envelope
    required = _root_max(lhs, envelope, power)
    return lhs, rhs, 'C', C, required, {}


def _stability(data, cfg, M, C):
    lhs = data['hs1']
    delta = data['hs1'][0] + (2.0 * M) ** cfg.s1 * data['l2'][0]
    rhs = np.full_like(lhs, 6.0 * delta)
    required = float(np.max(lhs) / delta) if delta > 0 else 0.0
    return lhs, rhs, 'prefactor', 6.0, required, {'delta': delta}


def _exponential(data, cfg, M, C):
    p, s0, s1, s = cfg.p, cfg.s0, cfg.s1, cfg.s
    t = data['t']
    lhs = data['hs']
    size = data['hs'][0] + (2.0 * M) ** s * data['l2'][0]
    rate = (M ** (2 * p * (s - s1)) * 2.0 ** (4 * p + 1) * M ** (2 * p * s0)
            / 2.0 ** (2 * p * (s1 - s0)))
    envelope = size * np.exp(rate * cfg.eps ** (2 * p) * t)
    rhs = 3.0 * envelope
    required = float(np.max(lhs / envelope)) if size > 0 else 0.0
    return lhs, rhs, 'prefactor', 3.0, required, {}


_BUILDERS = {
    'basic': _basic,
    'high': _high,
    'improved': _improved,
    'growth': _growth,
    'stability': _stability,
    'exponential': _exponential,
}


def energy_certificate(traj, cfg, which, M=None, C=None):
    """
    Margin series of one a priori estimate along a recorded run.

    Args:
        traj (Trajectory or Mapping): Run, or telemetry columns as arrays
        cfg (ExperimentConfig): Regularities, p and eps
        which (str): One of WHICH
        M (float): Pinned tame constant, default cfg.M
        C (float): Pinned equivalence constant, default cfg.C

    Returns:
        CertificateSeries: LHS, RHS, margins and the required constant

    Raises:
        TelemetryError: If the needed telemetry columns are missing
    """
    if which not in WHICH:
        raise ValueError(f"certificate must be one of {WHICH}, got {which!r}")
    data = _telemetry(traj)
    _require(data, which)
    M = cfg.M if M is None else M
    C = cfg.C if C is None else C

    lhs, rhs, name, constant, required, extras = _BUILDERS[which](data, cfg, M, C)
    series = CertificateSeries(which, data['t'], np.asarray(lhs, dtype=np.float64),
                               np.asarray(rhs, dtype=np.float64), name, float(constant),
                               float(required), extras)
    if not series.holds:
        logger.warning("%s certificate margin %.3e < 0; %s would need %.4g (pinned %.4g)",
                       which, series.min_margin, name, required, constant)
    else:
        logger.info("%s certificate holds; required %s=%.4g (pinned %.4g)",
                    which, name, required, constant)
    return series


def all_certificates(traj, cfg, M=None, C=None, which=WHICH):
    return [energy_certificate(traj, cfg, w, M, C) for w in which]


def write_certificates_csv(series, path):
    """Margins of several certificates in one long-format CSV."""
    with open(str(path), 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(CERTIFICATE_COLUMNS))
        writer.writeheader()
        for item in series:
            writer.writerows(item.to_rows())
    return path


# Grönwall bounds


def gronwall_bound(kind, M, alpha, f, times):
    """
    Evaluate the Grönwall-type bounds on sampled data.

    kind 'i':  x <= M + int f x          gives  x(t) <= M exp(int_0^t f)
    kind 'ii': x <= M + int f x^alpha/(1-alpha)
               gives  x(t)^(1-alpha) <= M^(1-alpha) + int_0^t f

    Args:
        kind (str): 'i' or 'ii'
        M (float): Initial bound, >= 0
        alpha (float): Exponent in (0, 1), used by kind 'ii'
        f (array-like or callable): Nonnegative rate sampled on times, or a function of t
        times (array-like): Increasing sample times

    Returns:
        np.ndarray: Bound on x at every sample time
    """
    if kind not in GRONWALL_KINDS:
        raise ValueError(f"Grönwall kind must be one of {GRONWALL_KINDS}, got {kind!r}")
    if not M >= 0:
        raise ValueError(f"M must be >= 0, got {M}")
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a non-empty increasing sequence")
    rates = np.asarray(f(times) if callable(f) else f, dtype=np.float64)
    rates = np.broadcast_to(rates, times.shape)
    if np.any(rates < 0):
        raise ValueError("the rate f must be nonnegative")
    integral = cumulative_trapezoid(rates, times, initial=0.0)

    if kind == 'i':
        return M * np.exp(integral)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return (M ** (1.0 - alpha) + integral) ** (1.0 / (1.0 - alpha))


def rk4_solve(rhs, x0, times, substeps=16):
    """
    Classical RK4 for the scalar ODE x' = rhs(t, x), reported at the given times.
    """
    times = np.asarray(times, dtype=np.float64)
    out = np.empty_like(times)
    x = float(x0)
    out[0] = x
    for i in range(1, times.size):
        h = (times[i] - times[i - 1]) / substeps
        t = times[i - 1]
        for _ in range(substeps):
            k1 = rhs(t, x)
            k2 = rhs(t + h / 2, x + h * k1 / 2)
            k3 = rhs(t + h / 2, x + h * k2 / 2)
            k4 = rhs(t + h, x + h * k3)
            x += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
            t += h
        out[i] = x
    return out


# Growth envelopes


def _growth_model(t, beta, gamma):
    return (1.0 + beta * t) ** gamma


def fit_growth_exponent(times, values):
    """
    Fit values/values[0] ~ (1 + beta t)^gamma.

    Returns:
        tuple: (beta, gamma); (nan, nan) when the fit does not converge
    """
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.size < 3 or values[0] <= 0:
        raise ValueError("need at least three samples with a positive initial value")
    ratio = values / values[0]
    try:
        (beta, gamma), _ = curve_fit(_growth_model, times, ratio, p0=(1.0, 1.0),
                                     bounds=([0.0, 0.0], [np.inf, np.inf]), maxfev=20000)
    except RuntimeError as exc:
        logger.warning("growth fit did not converge: %s", exc)
        return math.nan, math.nan
    return float(beta), float(gamma)


def improved_exponent_check(times, high_norm, cfg, min_growth=1e-6):
    """
    Cap the fitted polynomial degree of |u(t)|_s at (s - s1)*IMPROVED_EXPONENT_SLACK.

    Runs where the high norm grows by less than min_growth (relative) are
    reported as flat and pass.
    """
    cap = (cfg.s - cfg.s1) * IMPROVED_EXPONENT_SLACK
    high_norm = np.asarray(high_norm, dtype=np.float64)
    growth = float(np.max(high_norm) / high_norm[0] - 1.0) if high_norm[0] > 0 else 0.0
    if high_norm.size < 3 or growth < min_growth:
        return {'gamma': 0.0, 'gamma_cap': cap, 'exponent_ok': True}
    beta, gamma = fit_growth_exponent(times, high_norm)
    ok = bool(math.isnan(gamma) or gamma <= cap)
    return {'gamma': gamma, 'beta': beta, 'gamma_cap': cap, 'exponent_ok': ok}


@dataclass
class GrowthEnvelopes:
    times: np.ndarray
    improved: np.ndarray
    exponential: np.ndarray
    crossover: float


def growth_envelopes(traj, cfg, times=None, M=None, C=None):
    """
    Improved (polynomial) and exponential envelopes of |u(t)|_{s,R}.

    Both use the largest observed |u|_{s1,R} as a bound on the low norm, so
    they can be evaluated past the recorded horizon. `crossover` is the first
    time after which the improved envelope stays below the exponential one
    (inf if never within `times`).
    """
    data = _telemetry(traj)
    _require(data, 'high')
    M = cfg.M if M is None else M
    C = cfg.C if C is None else C
    p, s0, s1, s = cfg.p, cfg.s0, cfg.s1, cfg.s
    gap = s - s1
    times = data['t'] if times is None else np.asarray(times, dtype=np.float64)
    start = data['w_s'][0]
    low = float(np.max(data['w_s1']))

    coefficient = M ** (2 * p * (s - s1 + s0)) / 2.0 ** (2 * p * (s1 - s0))
    improved = C ** (p * s * gap) * np.sqrt(
        start ** 2 + (coefficient * low ** (2 * p + 1.0 / gap) * times) ** (2 * gap))
    exponential = start * np.exp(coefficient * low ** (2 * p) * times)

    above = np.nonzero(improved > exponential)[0]
    if above.size == 0:
        crossover = float(times[0])
    elif above[-1] == times.size - 1:
        crossover = math.inf
    else:
        crossover = float(times[above[-1] + 1])
    logger.info("growth envelopes: improved bound tighter from t=%.4g", crossover)
    return GrowthEnvelopes(times, improved, exponential, crossover)
