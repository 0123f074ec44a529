"""
Experiment layer for the resonant NLS laboratory.
Experiment configuration, presets, admissible initial data, the T_good clock
and the empirical constant estimators.
"""

import copy
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import config
from diagonalizer import Diagonalizer, DiagonalizerParams
from exceptions import AdmissibilityError, ConfigError
from fourier_core import (
    FourierField, LatticeSpec, NormParams, make_field, monomial, norm, random_field
)
from nls_solver import NormSet, SolverConfig
from paradiff import CutoffSpec

logger = logging.getLogger(__name__)

PROFILES = ('flat', 'decaying', 'plane_wave')
TARGETS = ('hs1', 'w_s1')
TIGHT_FRACTION = 0.5  # an L2 term above this share of eps is reported as tight
TAME_POWERS = ((2, 0), (1, 1), (2, 1), (1, 2))


@dataclass
class DataSpec:
    """
    Random initial data on the annulus j_min <= |j| <= j_max.

    profile 'plane_wave' puts a single mode at (j_min, 0, ...).
    """

    j_min: float = 8.0
    j_max: Optional[float] = None
    profile: str = 'decaying'
    decay: float = 4.0
    target: str = 'hs1'
    target_fraction: float = 0.5
    real_valued: bool = False
    seed: Optional[int] = None

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"data profile must be one of {PROFILES}, got {self.profile!r}")
        if self.target not in TARGETS:
            raise ConfigError(f"data target must be one of {TARGETS}, got {self.target!r}")
        if not 0 < self.target_fraction <= 1:
            raise ConfigError(f"target_fraction must lie in (0, 1], got {self.target_fraction}")
        if self.j_max is not None and self.j_max < self.j_min:
            raise ConfigError(f"j_max={self.j_max} is below j_min={self.j_min}")


@dataclass
class VerifySettings:
    samples: int = config.DEFAULT_SAMPLES
    k_ladder: tuple = config.K_LADDER
    n_ladder: tuple = config.N_LADDER
    ratio_ceiling: float = config.RATIO_CEILING
    slope_limit: float = config.TREND_SLOPE_LIMIT

    def __post_init__(self):
        self.k_ladder = tuple(int(k) for k in self.k_ladder)
        self.n_ladder = tuple(int(n) for n in self.n_ladder)
        if len(self.k_ladder) < 3:
            raise ConfigError("k_ladder needs at least three lattice sizes for a trend")
        if self.samples < 1:
            raise ConfigError(f"samples must be positive, got {self.samples}")


@dataclass
class LifespanSettings:
    eps_values: tuple = (0.05, 0.1)
    s1_values: tuple = (3.0, 4.0, 5.0)
    horizon_factor: float = 2.0
    steps_per_t_good: int = config.STEPS_PER_T_GOOD

    def __post_init__(self):
        self.eps_values = tuple(float(e) for e in self.eps_values)
        self.s1_values = tuple(float(s) for s in self.s1_values)
        if not self.horizon_factor > 0:
            raise ConfigError(f"horizon_factor must be positive, got {self.horizon_factor}")


SECTIONS = {
    'data': DataSpec,
    'solver': SolverConfig,
    'verify': VerifySettings,
    'lifespan': LifespanSettings,
}


@dataclass
class ExperimentConfig:
    """
    Complete description of one experiment.

    R defaults to 2M. N defaults to max(C^{2ps}, 2R) with the pinned
    equivalence constant C. horizon_factor, when set, fixes the solver
    horizon to that multiple of T_good.
    """

    d: int = 1
    p: int = 1
    K: int = 32
    pad_factor: int = config.DEFAULT_PAD_FACTOR
    s0: float = 1.0
    s1: float = 3.0
    s: float = 4.0
    eps: float = 0.1
    M: float = 2.0
    R: Optional[float] = None
    N: Optional[float] = None
    C: float = 1.0
    sign: int = 1
    seed: int = config.DEFAULT_SEED
    cutoff_eps: float = config.DEFAULT_CUTOFF_EPS
    cutoff_profile: str = config.DEFAULT_CUTOFF_PROFILE
    horizon_factor: Optional[float] = None
    data: DataSpec = field(default_factory=DataSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    verify: VerifySettings = field(default_factory=VerifySettings)
    lifespan: LifespanSettings = field(default_factory=LifespanSettings)

    def __post_init__(self):
        if self.R is None:
            self.R = 2.0 * self.M
        self.validate()
        self.solver = dataclasses.replace(self.solver, p=self.p, sign=self.sign)

    def validate(self):
        """
        Check the regularity ladder and lattice invariants.

        Raises:
            ConfigError: On the first violated invariant
        """
        if self.d < 1:
            raise ConfigError(f"d must be positive, got {self.d}")
        if self.K < config.MIN_LATTICE_K:
            raise ConfigError(f"K={self.K} is below the minimum lattice size {config.MIN_LATTICE_K}")
        if self.pad_factor < 2 * self.p + 1:
            raise ConfigError(f"pad_factor={self.pad_factor} cannot host the {2 * self.p + 1}-fold "
                              f"nonlinearity; use at least {2 * self.p + 1}")
        if not self.s0 > self.d / 2:
            raise ConfigError(f"need s0 > d/2, got s0={self.s0}, d={self.d}")
        if not self.s1 >= self.s0 + 2:
            raise ConfigError(f"need s1 >= s0 + 2, got s0={self.s0}, s1={self.s1}")
        if not self.s >= self.s1 + 1:
            raise ConfigError(f"need s >= s1 + 1, got s1={self.s1}, s={self.s}")
        if not self.eps > 0 or not self.M > 0:
            raise ConfigError("eps and M must be positive")
        if not self.R > 1:
            raise ConfigError(f"weight floor R must exceed 1, got {self.R}")
        if self.N is not None and not self.N > self.R:
            raise ConfigError(f"threshold N={self.N} must exceed R={self.R}")
        if self.sign not in (1, -1):
            raise ConfigError(f"sign must be +1 or -1, got {self.sign}")
        if not self.C >= 1:
            raise ConfigError(f"equivalence constant C must be >= 1, got {self.C}")
        try:
            CutoffSpec(self.cutoff_eps, self.cutoff_profile)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    @classmethod
    def from_dict(cls, payload):
        """
        Build a config from a JSON-compatible dict, rejecting unknown keys.
        """
        payload = copy.deepcopy(payload)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        for name, section in SECTIONS.items():
            if name not in payload:
                continue
            body = payload[name]
            if not isinstance(body, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            allowed = {f.name for f in dataclasses.fields(section)}
            if name == 'solver':
                allowed -= {'p', 'sign'}
            extra = sorted(set(body) - allowed)
            if extra:
                raise ConfigError(f"unknown keys in section {name!r}: {', '.join(extra)}")
            try:
                payload[name] = section(**body)
            except TypeError as e:
                raise ConfigError(f"bad section {name!r}: {e}") from e
        try:
            return cls(**payload)
        except TypeError as e:
            raise ConfigError(f"bad config: {e}") from e

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, 'r') as f:
                payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        return cls.from_dict(payload)

    def to_dict(self):
        result = dataclasses.asdict(self)
        for name in ('p', 'sign'):
            result['solver'].pop(name)
        return result

    def with_overrides(self, **overrides):
        """Copy with top-level or 'section.key' overrides, re-validated."""
        payload = self.to_dict()
        for key, value in overrides.items():
            if '.' in key:
                section, sub = key.split('.', 1)
                payload[section][sub] = value
            else:
                payload[key] = value
        return ExperimentConfig.from_dict(payload)

    @property
    def lattice(self):
        return LatticeSpec(self.d, self.K, self.pad_factor)

    @property
    def cutoff(self):
        return CutoffSpec(self.cutoff_eps, self.cutoff_profile)

    def norm_params(self, s):
        return NormParams(s, self.R)


PRESETS = {
    'plane_wave': {
        'd': 1, 'K': 16,
        'data': {'j_min': 8, 'j_max': 8, 'profile': 'plane_wave'},
        'solver': {'dt': 1e-3, 't_end': 0.5},
    },
    'admissible_1d': {
        'd': 1, 'K': 64,
        'data': {'j_min': 8, 'j_max': 16, 'profile': 'decaying', 'decay': 4.0},
        'horizon_factor': 1.0,
    },
    'admissible_2d': {
        'd': 2, 'K': 16, 's0': 1.5, 's1': 3.5, 's': 4.5,
        'data': {'j_min': 6, 'j_max': 12, 'profile': 'decaying', 'decay': 4.0},
        'horizon_factor': 1.0,
    },
}


def _merge(base, overrides):
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path=None, preset=None, overrides=None):
    """
    Resolve preset, file and override dicts into one ExperimentConfig; later wins.

    Raises:
        ConfigError: Unknown preset, unknown keys or violated invariants
    """
    payload = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        payload = _merge(payload, PRESETS[preset])
    if path is not None:
        try:
            with open(path, 'r') as f:
                payload = _merge(payload, json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
    payload = _merge(payload, overrides or {})
    cfg = ExperimentConfig.from_dict(payload)
    if cfg.horizon_factor is not None:
        cfg = with_horizon(cfg, cfg.horizon_factor)
    return cfg


def with_horizon(cfg, factor):
    """Set the solver horizon to factor*T_good with at least steps_per_t_good steps per T_good."""
    clock = t_good(cfg)
    dt = min(cfg.solver.dt, clock / cfg.lifespan.steps_per_t_good)
    solver = dataclasses.replace(cfg.solver, t_end=factor * clock, dt=dt)
    return dataclasses.replace(cfg, solver=solver)


def config_variations(cfg, key, values):
    """
    Yield (config, description) pairs sweeping one key over values.
    """
    for value in values:
        yield cfg.with_overrides(**{key: value}), f"{key}={value}"


def t_good(cfg):
    """
    T_good = eps^{-2p} 2^{-4(2p+2)} 2^{2p(s1-s0)} / M^{2p s0}.
    """
    p = cfg.p
    rest = 2.0 ** (2 * p * (cfg.s1 - cfg.s0)) / (2.0 ** (4 * (2 * p + 2)) * cfg.M ** (2 * p * cfg.s0))
    return rest * (1.0 / cfg.eps) ** (2 * p)


@dataclass
class AdmissibilityReport:
    """Both smallness conditions on the initial data and the resulting delta."""

    hs1: float
    l2: float
    l2_term: float
    eps: float
    hs1_ok: bool
    l2_ok: bool
    l2_tight: bool
    delta: float

    @property
    def passed(self):
        return self.hs1_ok and self.l2_ok

    def violations(self):
        out = []
        if not self.hs1_ok:
            out.append(f"||u0||_H^s1 = {self.hs1:.4g} > eps = {self.eps:.4g}")
        if not self.l2_ok:
            out.append(f"(2M)^s1 ||u0||_L2 = {self.l2_term:.4g} > eps = {self.eps:.4g}")
        return out

    def to_dict(self):
        result = dataclasses.asdict(self)
        result['passed'] = self.passed
        return result


def admissibility_report(u0, cfg):
    """Evaluate the two smallness conditions for u0 under cfg."""
    hs1 = norm(u0, 'Hs_sum', cfg.norm_params(cfg.s1))
    l2 = norm(u0, 'L2')
    l2_term = (2.0 * cfg.M) ** cfg.s1 * l2
    slack = 1.0 + config.LITERAL_SLACK
    return AdmissibilityReport(
        hs1=hs1, l2=l2, l2_term=l2_term, eps=cfg.eps,
        hs1_ok=hs1 <= cfg.eps * slack,
        l2_ok=l2_term <= cfg.eps * slack,
        l2_tight=l2_term > TIGHT_FRACTION * cfg.eps,
        delta=hs1 + l2_term,
    )


def initial_delta(u0, cfg):
    """delta = ||u0||_{H^s1} + (2M)^s1 ||u0||_L2."""
    return admissibility_report(u0, cfg).delta


def _target_norm(u, data, cfg):
    if data.target == 'hs1':
        return norm(u, 'Hs_sum', cfg.norm_params(cfg.s1))
    return norm(u, 'weighted', cfg.norm_params(cfg.s1))


def gen_initial_data(data, cfg, strict=True):
    """
    Draw initial data and normalize it to target_fraction*eps.

    Args:
        data (DataSpec): Annulus, profile and normalization target
        cfg (ExperimentConfig): Experiment constants
        strict (bool): Raise when a smallness condition fails

    Returns:
        tuple: (FourierField, AdmissibilityReport)

    Raises:
        AdmissibilityError: j_min < 1, an empty annulus, or a failed condition in strict mode
    """
    spec = cfg.lattice
    level = data.target_fraction * cfg.eps
    if data.j_min < 1:
        # the constant candidate: its L2 norm carries the whole H^s1 norm
        candidate = make_field(spec, {(0,) * spec.d: level})
        report = admissibility_report(candidate, cfg)
        raise AdmissibilityError(
            f"j_min={data.j_min} admits low modes; constant candidate fails: "
            f"{'; '.join(report.violations()) or 'no margin'}", report)

    if data.j_max is not None and data.j_max > spec.K * math.sqrt(spec.d):
        raise AdmissibilityError(f"j_max={data.j_max} lies beyond the lattice", None)

    rng = np.random.default_rng(cfg.seed if data.seed is None else data.seed)
    if data.profile == 'plane_wave':
        mode = (int(data.j_min),) + (0,) * (spec.d - 1)
        phase = np.exp(2j * np.pi * rng.random())
        u0 = make_field(spec, {mode: phase})
    else:
        decay = data.decay if data.profile == 'decaying' else 0.0
        u0 = random_field(spec, rng, j_min=data.j_min, j_max=data.j_max, decay=decay,
                          real_valued=data.real_valued)

    size = _target_norm(u0, data, cfg)
    if size == 0:
        raise AdmissibilityError(f"annulus [{data.j_min}, {data.j_max}] holds no lattice points", None)
    u0 = (level / size) * u0

    report = admissibility_report(u0, cfg)
    if report.l2_tight:
        logger.warning("L2 smallness is tight: (2M)^s1 ||u0||_L2 = %.4g vs eps = %.4g",
                       report.l2_term, cfg.eps)
    if strict and not report.passed:
        raise AdmissibilityError("initial data violate: " + '; '.join(report.violations()), report)
    logger.info("initial data: ||u0||_H^s1=%.4g, L2 term=%.4g, delta=%.4g",
                report.hs1, report.l2_term, report.delta)
    return u0, report


def nested_field(spec, rng, reference_K=None, **kwargs):
    """
    Random field drawn on a reference lattice and restricted to spec.

    Draws for different K share their low modes, so ratios compare like for like.
    """
    top = max(spec.K, reference_K or max(config.K_LADDER))
    reference = LatticeSpec(spec.d, top, spec.pad_factor)
    big = random_field(reference, rng, **kwargs)
    return FourierField(spec, big.resize(spec.K).coeffs, big.real_valued)


def sample_states(spec, seed, count, decay, amplitude=1.0, reference_K=None):
    """`count` nested random states with |j|^{-decay} spectra, deterministic in seed."""
    rng = np.random.default_rng(seed)
    return [nested_field(spec, rng, reference_K, decay=decay, amplitude=amplitude)
            for _ in range(count)]


def tame_ratio_root(u, q1, q2, cfg):
    """(|u^q1 conj(u)^q2|_s / (|u|_{s0}^{q-1}|u|_s))^{1/((q-1)s)} with q = q1 + q2."""
    q = q1 + q2
    lhs = norm(monomial(u, q1, q2), 'weighted', cfg.norm_params(cfg.s))
    base = norm(u, 'weighted', cfg.norm_params(cfg.s0))
    rhs = base ** (q - 1) * norm(u, 'weighted', cfg.norm_params(cfg.s))
    if rhs == 0:
        return 0.0
    return (lhs / rhs) ** (1.0 / ((q - 1) * cfg.s))


def estimate_tame_constant(cfg, samples=config.DEFAULT_SAMPLES, powers=TAME_POWERS, K=None):
    """
    Empirical M from the power estimate over random states and the given (q1, q2).

    Args:
        cfg (ExperimentConfig): Regularities, weight floor and seed
        samples (int): Number of random states
        powers (tuple): (q1, q2) pairs with q1 + q2 >= 2
        K (int): Lattice size, default cfg.K

    Returns:
        float: M_hat, deterministic under cfg.seed
    """
    spec = LatticeSpec(cfg.d, cfg.K if K is None else K, max(cfg.pad_factor, max(sum(q) for q in powers)))
    states = sample_states(spec, cfg.seed, samples, decay=cfg.s + 2)
    estimate = 0.0
    for u in states:
        for q1, q2 in powers:
            if q1 + q2 < 2:
                raise ValueError(f"power pair ({q1}, {q2}) has no tame content")
            estimate = max(estimate, tame_ratio_root(u, q1, q2, cfg))
    logger.info("tame constant estimate M_hat=%.4f from %d samples on K=%d", estimate, samples, spec.K)
    return estimate


def diagonalizer_params(cfg, N=None, s=None):
    return DiagonalizerParams(
        N=resolve_threshold(cfg) if N is None else N,
        cutoff=cfg.cutoff,
        norm=cfg.norm_params(cfg.s if s is None else s),
    )


def estimate_equivalence_constant(cfg, samples=config.DEFAULT_SAMPLES, K=None):
    """
    Empirical C with C^{-ps}|u|_s <= |w|_s <= C^{ps}|u|_s over small random states.

    The threshold is fixed at 2R so the estimate does not depend on itself.
    """
    spec = LatticeSpec(cfg.d, cfg.K if K is None else K, cfg.pad_factor)
    params = diagonalizer_params(cfg, N=2.0 * cfg.R)
    estimate = 1.0
    for u in sample_states(spec, cfg.seed + 1, samples, decay=cfg.s + 2):
        size = norm(u, 'weighted', cfg.norm_params(cfg.s0))
        if size == 0:
            continue
        u = (cfg.eps / size) * u
        w = Diagonalizer(u, cfg.p, params).w_transform()
        ratio = norm(w, 'weighted', params.norm) / norm(u, 'weighted', params.norm)
        spread = max(ratio, 1.0 / ratio)
        estimate = max(estimate, spread ** (1.0 / (cfg.p * cfg.s)))
    logger.info("equivalence constant estimate C_hat=%.6f", estimate)
    return estimate


def resolve_threshold(cfg, C_hat=None):
    """N = cfg.N if pinned, else max(C^{2ps}, 2R)."""
    if cfg.N is not None:
        return cfg.N
    C = cfg.C if C_hat is None else C_hat
    return max(C ** (2 * cfg.p * cfg.s), 2.0 * cfg.R)


def norm_set(cfg, N=None):
    return NormSet(cfg.s0, cfg.s1, cfg.s, cfg.R,
                   N=resolve_threshold(cfg) if N is None else N, cutoff=cfg.cutoff)
