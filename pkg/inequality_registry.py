"""
Registry of empirical inequality checks.

Each entry draws probe fields on a ladder of lattice sizes (or truncation
thresholds), evaluates the ratio LHS/RHS of one estimate of the
para-differential calculus, and summarizes it in a RatioReport: the largest
ratio, its normalized constant and the log-log trend across the ladder.
"""

import csv
import json
import logging
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

import config
from diagonalizer import Diagonalizer, DiagonalizerParams, PairField
from exceptions import UnknownInequalityError
from fourier_core import (
    LatticeSpec, NormParams, apply_multiplier, jap, make_field, monomial, multiply, norm,
    project, random_field
)
from lab import nested_field
from paradiff import (
    bony_remainder, commutator_jjap, paraproduct, paraproduct_truncated, regularizing_remainder
)
from paralinearization import dt_symbol_c, paralinearize_power, symbol_b

logger = logging.getLogger(__name__)

KINDS = ('literal', 'trend', 'decay', 'contrast', 'gain')
REGREM_EPS1 = 0.24
CANCEL_BASE = 0.5
CANCEL_SIDE = 0.1
ROUNDTRIP_TOL = 1e-10
TAME_S_RANGE = (2, 3, 4, 5, 6, 7, 8)
_FLOOR = 1e-300


@dataclass
class RatioReport:
    """Summary of one inequality over samples and a ladder of scales."""

    id: str
    sample_count: int
    max_ratio: float
    normalized_constant: float
    trend_slope: float
    scales: tuple
    per_scale_max: tuple
    ceiling: float
    passed: bool
    description: str = ''
    extras: dict = field(default_factory=dict)

    def to_row(self):
        return {
            'id': self.id,
            'sample_count': self.sample_count,
            'max_ratio': repr(self.max_ratio),
            'normalized_constant': repr(self.normalized_constant),
            'trend_slope': repr(self.trend_slope),
            'ceiling': repr(self.ceiling),
            'passed': int(self.passed),
            'scales': ';'.join(str(s) for s in self.scales),
            'per_scale_max': ';'.join(repr(v) for v in self.per_scale_max),
            'extras': json.dumps(self.extras, sort_keys=True),
        }


REPORT_COLUMNS = ('id', 'sample_count', 'max_ratio', 'normalized_constant', 'trend_slope',
                  'ceiling', 'passed', 'scales', 'per_scale_max', 'extras')


@dataclass
class ProbeContext:
    """Everything a probe needs at one rung of the ladder."""

    cfg: object
    scale: int
    samples: int
    rng: np.random.Generator
    reference_K: int

    @property
    def R(self):
        return self.cfg.R

    def spec(self, K=None, min_pad=0):
        return LatticeSpec(self.cfg.d, self.scale if K is None else K,
                           max(self.cfg.pad_factor, min_pad))

    def w(self, f, s):
        return norm(f, 'weighted', NormParams(s, self.R))

    def pair(self, V, s):
        return V.norm(NormParams(s, self.R))


@dataclass
class ProbeResult:
    ratios: list
    secondary: Optional[list] = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Inequality:
    id: str
    description: str
    kind: str
    ladder: str
    probe: Callable
    shape: Callable


REGISTRY = {}


def register(ident, description, kind='trend', ladder='K', shape=None):
    """
    Decorator adding a probe to the registry.

    Args:
        ident (str): Registry id
        description (str): Estimate being checked
        kind (str): Acceptance rule, one of KINDS
        ladder (str): 'K' for lattice sizes, 'N' for truncation thresholds
        shape (callable): cfg -> exponent used to normalize the constant
    """
    if kind not in KINDS:
        raise ValueError(f"unknown inequality kind {kind!r}")

    def wrap(func):
        REGISTRY[ident] = Inequality(ident, description, kind, ladder, func,
                                     shape or (lambda cfg: 1.0))
        return func
    return wrap


def registered_ids():
    return tuple(REGISTRY)


# Probe families


def _symbol(ctx, spec=None):
    """Smooth symbol with modes |m|_inf <= 1."""
    return random_field(spec or ctx.spec(), ctx.rng, extent=1)


def _rough(ctx, spec=None):
    """|k|^{-1} spectrum on 1 <= |k| <= K/2, nested across the ladder."""
    spec = spec or ctx.spec()
    h = nested_field(spec, ctx.rng, ctx.reference_K, j_min=1.0, decay=1.0)
    return project(h, spec.K / 2.0, 'low')


def _upper_rough(ctx, floor, spec=None):
    """|k|^{-1} spectrum on floor < |k| <= K, nested across the ladder."""
    spec = spec or ctx.spec()
    return nested_field(spec, ctx.rng, ctx.reference_K, j_min=floor + 1e-9, decay=1.0)


def _shell(ctx, radius, spec=None):
    """Random coefficients on radius-1 < |k| <= radius."""
    spec = spec or ctx.spec()
    return random_field(spec, ctx.rng, j_min=radius - 1 + 1e-9, j_max=radius)


def _state(ctx, spec=None, level=None):
    """Nested state with |j|^{-(s+2)} spectrum, optionally scaled to |u|_{s0} = level."""
    spec = spec or ctx.spec()
    u = nested_field(spec, ctx.rng, ctx.reference_K, decay=ctx.cfg.s + 2)
    if level is not None:
        size = ctx.w(u, ctx.cfg.s0)
        u = (level / size) * u if size > 0 else u
    return u


def _mixed_state(ctx, index):
    decays = (0.0, 1.0, ctx.cfg.s + 2)
    return nested_field(ctx.spec(), ctx.rng, ctx.reference_K, decay=decays[index % len(decays)])


def _ratio(lhs, rhs):
    return lhs / rhs if rhs > 0 else 0.0


def _top(cfg):
    return max(cfg.s1, cfg.s0)


# Norm identities


@register('EQNORM', "||u||_H^s + R^s||u||_L2 <= 3|u|_{s,R} <= 3(||u||_H^s + R^s||u||_L2)",
          kind='literal')
def _probe_eqnorm(ctx):
    cfg = ctx.cfg
    ratios = []
    for i in range(ctx.samples):
        u = _mixed_state(ctx, i)
        for s in (cfg.s0, cfg.s1, cfg.s):
            weighted = ctx.w(u, s)
            classic = norm(u, 'Hs_sum', NormParams(s, ctx.R)) + ctx.R ** s * norm(u, 'L2')
            ratios.append(max(_ratio(classic, 3.0 * weighted), _ratio(weighted, classic)))
    return ProbeResult(ratios)


def interpolation_ratio(u, s_lo, s_hi, lam, R):
    """|u|_s / (2|u|_{s_lo}^lam |u|_{s_hi}^(1-lam)) with s = lam s_lo + (1-lam) s_hi."""
    s_mid = lam * s_lo + (1.0 - lam) * s_hi
    rhs = 2.0 * (norm(u, 'weighted', NormParams(s_lo, R)) ** lam
                 * norm(u, 'weighted', NormParams(s_hi, R)) ** (1.0 - lam))
    return _ratio(norm(u, 'weighted', NormParams(s_mid, R)), rhs)


@register('INTERP', "|u|_s <= 2|u|_{s1}^lam |u|_{s2}^(1-lam)", kind='literal')
def _probe_interp(ctx):
    cfg = ctx.cfg
    ratios = []
    for i in range(ctx.samples):
        u = _mixed_state(ctx, i)
        for lam in (0.25, 0.5, 0.75):
            ratios.append(interpolation_ratio(u, cfg.s0, cfg.s, lam, ctx.R))
    return ProbeResult(ratios)


@register('SCALE', "|u|_{s0} <= R^{-(s-s0)}|u|_s", kind='literal')
def _probe_scale(ctx):
    cfg = ctx.cfg
    ratios = []
    for i in range(ctx.samples):
        u = _mixed_state(ctx, i)
        ratios.append(_ratio(ctx.R ** (cfg.s - cfg.s0) * ctx.w(u, cfg.s0), ctx.w(u, cfg.s)))
    return ProbeResult(ratios)


def _power_root(u, p, s0, s, R):
    lhs = norm(monomial(u, p + 1, p), 'weighted', NormParams(s, R))
    rhs = (norm(u, 'weighted', NormParams(s0, R)) ** (2 * p)
           * norm(u, 'weighted', NormParams(s, R)))
    return _ratio(lhs, rhs) ** (1.0 / (2 * p * s))


@register('POWER', "||u|^{2p}u|_s <= M^{2ps0} 2^{-2p(s-s0)} |u|_s^{2p+1} with R >= 2M",
          kind='literal')
def _probe_power(ctx):
    cfg = ctx.cfg
    p = cfg.p
    spec = ctx.spec(min_pad=2 * p + 1)
    states = [_state(ctx, spec) for _ in range(ctx.samples)]
    R = ctx.R
    m_hat = max(_power_root(u, p, cfg.s0, cfg.s, R) for u in states)
    if 2.0 * m_hat > R:
        # the root shrinks as R grows, so one refit keeps R >= 2 M_hat
        R = 2.0 * m_hat
        m_hat = max(_power_root(u, p, cfg.s0, cfg.s, R) for u in states)
    ratios = []
    for u in states:
        lhs = norm(monomial(u, p + 1, p), 'weighted', NormParams(cfg.s, R))
        rhs = (m_hat ** (2 * p * cfg.s0) * 2.0 ** (-2 * p * (cfg.s - cfg.s0))
               * norm(u, 'weighted', NormParams(cfg.s, R)) ** (2 * p + 1))
        ratios.append(_ratio(lhs, rhs))
    return ProbeResult(ratios, extras={'M_hat': m_hat, 'R_used': R})


# Para-product calculus


@register('ACTION', "|T_a h|_s <= C^s |a|_{s0}|h|_s", shape=_top)
def _probe_action(ctx):
    cfg = ctx.cfg
    ratios = []
    for _ in range(ctx.samples):
        a, h = _symbol(ctx), _rough(ctx)
        out = paraproduct(a, h, cfg.cutoff)
        ratios.append(_ratio(ctx.w(out, cfg.s1), ctx.w(a, cfg.s0) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


@register('REGREM', "|R^{e1,e2}_a h|_{s+rho} <= C^s |a|_{s0+rho}|h|_s", shape=_top)
def _probe_regrem(ctx):
    cfg = ctx.cfg
    eps2 = cfg.cutoff_eps / 2.0
    ratios = []
    for _ in range(ctx.samples):
        a, h = _symbol(ctx), _rough(ctx)
        out = regularizing_remainder(a, h, REGREM_EPS1, eps2, cfg.cutoff_profile)
        for rho in (1, 2):
            ratios.append(_ratio(ctx.w(out, cfg.s1 + rho),
                                 ctx.w(a, cfg.s0 + rho) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


@register('PROD', "|Q(a)[b]|_{s+rho} <= C^s |a|_{s0+rho}|b|_s", shape=lambda cfg: cfg.s1)
def _probe_prod(ctx):
    cfg = ctx.cfg
    rho = min(1.0, cfg.s1 - cfg.s0)
    ratios = []
    for _ in range(ctx.samples):
        a, b = _state(ctx), _state(ctx)
        out = bony_remainder(a, b, cfg.cutoff)
        ratios.append(_ratio(ctx.w(out, cfg.s1 + rho), ctx.w(a, cfg.s0 + rho) * ctx.w(b, cfg.s1)))
    return ProbeResult(ratios)


def tame_ratio(a, b, s, s0, R):
    """|ab|_s / (|a|_s|b|_{s0} + |a|_{s0}|b|_s)."""
    w = lambda f, t: norm(f, 'weighted', NormParams(t, R))
    return _ratio(w(multiply(a, b), s), w(a, s) * w(b, s0) + w(a, s0) * w(b, s))


@register('TAME', "|ab|_s <= C^s(|a|_s|b|_{s0} + |a|_{s0}|b|_s)", shape=lambda cfg: cfg.s)
def _probe_tame(ctx):
    cfg = ctx.cfg
    pairs = [(_state(ctx), _state(ctx)) for _ in range(ctx.samples)]
    ratios = [tame_ratio(a, b, cfg.s, cfg.s0, ctx.R) for a, b in pairs]
    roots = {}
    for s in TAME_S_RANGE:
        if s < cfg.s0:
            continue
        worst = max(tame_ratio(a, b, s, cfg.s0, ctx.R) for a, b in pairs)
        roots[str(s)] = worst ** (1.0 / s)
    return ProbeResult(ratios, extras={'s_roots': roots})


@register('COMM', "|[<<D>>^q, T_a]h|_{s+1-q} <= R^q C^{s+q} |a|_{s0+1}|h|_s",
          shape=lambda cfg: _top(cfg) + 2.0)
def _probe_comm(ctx):
    cfg = ctx.cfg
    q = 2.0
    params = NormParams(q, ctx.R)
    ratios = []
    for _ in range(ctx.samples):
        # |m| = 1 couples to h only inside the cutoff plateau, <k> >= 4/(5 eps)
        a, h = _symbol(ctx), _upper_rough(ctx, ctx.scale / 2.0)
        out = commutator_jjap(q, a, h, params, cfg.cutoff)
        ratios.append(_ratio(ctx.w(out, cfg.s1 + 1 - q),
                             ctx.R ** q * ctx.w(a, cfg.s0 + 1) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


@register('COMP1', "|T_a<D>^{-1}T_b<D>^{-1}h|_{s+2} <= R^2 C^s |a|_{s0}|b|_{s0}|h|_s", shape=_top)
def _probe_comp1(ctx):
    cfg = ctx.cfg
    smooth = jap(-1)
    ratios = []
    for _ in range(ctx.samples):
        a, b, h = _symbol(ctx), _symbol(ctx), _rough(ctx)
        inner = paraproduct(b, apply_multiplier(h, smooth), cfg.cutoff)
        out = paraproduct(a, apply_multiplier(inner, smooth), cfg.cutoff)
        ratios.append(_ratio(ctx.w(out, cfg.s1 + 2),
                             ctx.R ** 2 * ctx.w(a, cfg.s0) * ctx.w(b, cfg.s0) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


@register('COMP2', "|(T_aT_b - T_ab)h|_{s+rho} <= C^s |a|_{s0+rho}|b|_{s0+rho}|h|_s", shape=_top)
def _probe_comp2(ctx):
    cfg = ctx.cfg
    ratios = []
    for _ in range(ctx.samples):
        a, b, h = _symbol(ctx), _symbol(ctx), _rough(ctx)
        out = (paraproduct(a, paraproduct(b, h, cfg.cutoff), cfg.cutoff)
               - paraproduct(multiply(a, b), h, cfg.cutoff))
        ratios.append(_ratio(ctx.w(out, cfg.s1 + 1),
                             ctx.w(a, cfg.s0 + 1) * ctx.w(b, cfg.s0 + 1) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


@register('COMP3', "|T_a Q(b)h|_{s+rho} + |Q(b)T_a h|_{s+rho} <= C^s |b|_{s0+rho}|a|_{s0}|h|_s",
          shape=_top)
def _probe_comp3(ctx):
    cfg = ctx.cfg
    ratios = []
    for _ in range(ctx.samples):
        a, b, h = _symbol(ctx), _symbol(ctx), _rough(ctx)
        left = paraproduct(a, bony_remainder(b, h, cfg.cutoff), cfg.cutoff)
        right = bony_remainder(b, paraproduct(a, h, cfg.cutoff), cfg.cutoff)
        lhs = ctx.w(left, cfg.s1 + 1) + ctx.w(right, cfg.s1 + 1)
        ratios.append(_ratio(lhs, ctx.w(b, cfg.s0 + 1) * ctx.w(a, cfg.s0) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


@register('TRUNC', "|T_a^{>N}<D>^{-1}h|_s <= R N^{-1} C^s |a|_{s0}|h|_s",
          kind='decay', ladder='N', shape=_top)
def _probe_trunc(ctx):
    cfg = ctx.cfg
    N = ctx.scale
    spec = ctx.spec(K=N + 2)
    ratios = []
    for _ in range(ctx.samples):
        a, h = _symbol(ctx, spec), _shell(ctx, N + 1, spec)
        out = paraproduct_truncated(a, apply_multiplier(h, jap(-1)), N, 'high', cfg.cutoff)
        ratios.append(_ratio(ctx.w(out, cfg.s1), ctx.R * ctx.w(a, cfg.s0) * ctx.w(h, cfg.s1)))
    return ProbeResult(ratios)


# Nonlinear structure


@register('PARALIN', "|remainder|_{s+rho} <= M^{2p max(s,s0)} |u|_{s0+rho}^{2p}|u|_s",
          shape=lambda cfg: 2 * cfg.p * _top(cfg))
def _probe_paralin(ctx):
    cfg = ctx.cfg
    spec = ctx.spec(min_pad=2 * cfg.p + 1)
    ratios = []
    for _ in range(ctx.samples):
        u = _state(ctx, spec)
        rest = paralinearize_power(u, cfg.p, cfg.cutoff).remainder
        for rho in (0, 1, 2):
            rhs = ctx.w(u, cfg.s0 + rho) ** (2 * cfg.p) * ctx.w(u, cfg.s1)
            ratios.append(_ratio(ctx.w(rest, cfg.s1 + rho), rhs))
    return ProbeResult(ratios)


@register('DTC', "|d/dt c|_q <= C |u|_{s0+2}^{2p-1}|u|_{q+2}", shape=_top)
def _probe_dtc(ctx):
    cfg = ctx.cfg
    spec = ctx.spec(min_pad=4 * cfg.p)
    ratios = []
    for _ in range(ctx.samples):
        u = _state(ctx, spec, level=cfg.eps)
        out = dt_symbol_c(u, cfg.p, cfg.sign)
        rhs = ctx.w(u, cfg.s0 + 2) ** (2 * cfg.p - 1) * ctx.w(u, cfg.s1 + 2)
        ratios.append(_ratio(ctx.w(out, cfg.s1), rhs))
    return ProbeResult(ratios)


def _diag(ctx, u, N, s):
    params = DiagonalizerParams(N=N, cutoff=ctx.cfg.cutoff, norm=NormParams(s, ctx.R))
    return Diagonalizer(u, ctx.cfg.p, params)


def _rough_pair(ctx, spec=None):
    return PairField(_rough(ctx, spec), _rough(ctx, spec))


@register('GMAP', "|G(u)V|_{s+2} <= C^{2ps} |u|_{s0}^{2p}|V|_s",
          shape=lambda cfg: 2 * cfg.p * _top(cfg))
def _probe_gmap(ctx):
    cfg = ctx.cfg
    N = min(2.0 * ctx.R, ctx.scale / 2.0)
    ratios = []
    for _ in range(ctx.samples):
        u = _state(ctx, level=cfg.eps)
        # G only sees modes above N
        V = PairField(_upper_rough(ctx, N), _upper_rough(ctx, N))
        out = _diag(ctx, u, N, cfg.s1).gmap_apply(V)
        rhs = ctx.w(u, cfg.s0) ** (2 * cfg.p) * ctx.pair(V, cfg.s1)
        ratios.append(_ratio(ctx.pair(out, cfg.s1 + 2), rhs))
    return ProbeResult(ratios)


@register('PHIINV', "|Phi(u)^{-1}V|_s <= (1 + C|u|_{s0}^{2p})|V|_s and Phi^{-1}Phi = I")
def _probe_phiinv(ctx):
    cfg = ctx.cfg
    ratios, roundtrip = [], 0.0
    for _ in range(ctx.samples):
        u = _state(ctx, level=cfg.eps)
        V = _rough_pair(ctx)
        diag = _diag(ctx, u, 2.0 * ctx.R, cfg.s1)
        Y = diag.phi_inverse_apply(V)
        scale = ctx.pair(V, cfg.s1)
        ratios.append(_ratio(ctx.pair(Y, cfg.s1),
                             (1.0 + ctx.w(u, cfg.s0) ** (2 * cfg.p)) * scale))
        back = diag.phi_inverse_apply(diag.phi_apply(V))
        roundtrip = max(roundtrip, _ratio(ctx.pair(back - V, cfg.s1), scale))
    return ProbeResult(ratios, extras={'roundtrip': roundtrip})


@register('WEQUIV', "C^{-ps}|u|_s <= |w|_s <= C^{ps}|u|_s", shape=lambda cfg: cfg.p * cfg.s)
def _probe_wequiv(ctx):
    cfg = ctx.cfg
    ratios = []
    for _ in range(ctx.samples):
        u = _state(ctx, level=cfg.eps)
        w = _diag(ctx, u, 2.0 * ctx.R, cfg.s).w_transform()
        ratio = _ratio(ctx.w(w, cfg.s), ctx.w(u, cfg.s))
        ratios.append(max(ratio, 1.0 / ratio) if ratio > 0 else 0.0)
    return ProbeResult(ratios)


def _cancel_state(ctx, spec):
    d = spec.d
    e1 = (1,) + (0,) * (d - 1)
    minus_e1 = (-1,) + (0,) * (d - 1)
    phases = np.exp(2j * np.pi * ctx.rng.random(3))
    return make_field(spec, {(0,) * d: CANCEL_BASE * phases[0],
                             e1: CANCEL_SIDE * phases[1],
                             minus_e1: CANCEL_SIDE * phases[2]})


@register('CANCEL', "|(T_b + G(u))h|_{s+1} <= C |u|_{s0+1}^{2p}|h|_s while |T_b h|_{s+1} grows",
          kind='contrast', shape=lambda cfg: 2 * cfg.p * _top(cfg))
def _probe_cancel(ctx):
    cfg = ctx.cfg
    spec = ctx.spec()
    N = ctx.R + 1.0
    cancelled, raw = [], []
    for _ in range(ctx.samples):
        u = _cancel_state(ctx, spec)
        h = _shell(ctx, spec.K / 2.0, spec)
        diag = _diag(ctx, u, N, cfg.s1)
        rhs = ctx.w(u, cfg.s0 + 1) ** (2 * cfg.p) * ctx.w(h, cfg.s1)
        cancelled.append(_ratio(ctx.w(diag.cancellation_operator(h), cfg.s1 + 1), rhs))
        bare = paraproduct(symbol_b(u, cfg.p), h, cfg.cutoff)
        raw.append(_ratio(ctx.w(bare, cfg.s1 + 1), rhs))
    return ProbeResult(cancelled, secondary=raw)


@register('QGAIN', "|Q(u)V|_{s+4} <= C|u|_{s0}^{4p}|V|_s, and |Q(u)V|_{s+3} decays like N^{-1}",
          kind='gain', ladder='N', shape=lambda cfg: 4 * cfg.p * _top(cfg))
def _probe_qgain(ctx):
    cfg = ctx.cfg
    N = ctx.scale
    spec = ctx.spec(K=N + 2)
    gain4, gain3 = [], []
    for _ in range(ctx.samples):
        u = _state(ctx, spec, level=cfg.eps)
        V = PairField(_shell(ctx, N + 1, spec), _shell(ctx, N + 1, spec))
        out = _diag(ctx, u, float(N), cfg.s1).q_apply(V)
        rhs = ctx.w(u, cfg.s0) ** (4 * cfg.p) * ctx.pair(V, cfg.s1)
        gain4.append(_ratio(ctx.pair(out, cfg.s1 + 4), rhs))
        gain3.append(_ratio(ctx.pair(out, cfg.s1 + 3), rhs))
    return ProbeResult(gain4, secondary=gain3)


# Evaluation


def _slope(scales, values):
    if len(scales) < 2:
        return 0.0
    x = np.log(np.asarray(scales, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(values, dtype=np.float64), _FLOOR))
    return float(np.polyfit(x, y, 1)[0])


def _seed_for(ident, cfg):
    return (cfg.seed + zlib.crc32(ident.encode('utf-8'))) % (2 ** 32)


def inequality_check(ident, cfg, samples=None):
    """
    Evaluate one registered inequality over the configured ladder.

    Args:
        ident (str): Registry id
        cfg (ExperimentConfig): Regularities, weight floor, cutoff and verify settings
        samples (int): Samples per rung, default cfg.verify.samples

    Returns:
        RatioReport: Summary with pass/fail

    Raises:
        UnknownInequalityError: If ident is not registered
    """
    if ident not in REGISTRY:
        raise UnknownInequalityError(f"no inequality registered under {ident!r}")
    entry = REGISTRY[ident]
    settings = cfg.verify
    samples = settings.samples if samples is None else samples
    scales = settings.n_ladder if entry.ladder == 'N' else settings.k_ladder
    reference_K = max(scales) + 2 if entry.ladder == 'N' else max(scales)

    per_scale, secondary, extras = [], [], {}
    all_ratios = []
    for scale in scales:
        # same seed per rung, so nested probes share their low modes
        ctx = ProbeContext(cfg, scale, samples, np.random.default_rng(_seed_for(ident, cfg)),
                           reference_K)
        result = entry.probe(ctx)
        all_ratios.extend(result.ratios)
        per_scale.append(max(result.ratios) if result.ratios else 0.0)
        if result.secondary is not None:
            secondary.append(max(result.secondary))
        for key, value in result.extras.items():
            extras.setdefault(key, {})[str(scale)] = value
        logger.debug("%s at scale %d: max ratio %.4e", ident, scale, per_scale[-1])

    max_ratio = max(all_ratios) if all_ratios else 0.0
    shape = entry.shape(cfg)
    normalized = max_ratio ** (1.0 / shape) if max_ratio > 0 else 0.0
    slope = _slope(scales, per_scale)

    if entry.kind == 'literal':
        ceiling = 1.0 + config.LITERAL_SLACK
        passed = max_ratio <= ceiling
    else:
        ceiling = settings.ratio_ceiling
        passed = normalized <= ceiling
        if entry.kind in ('trend', 'contrast', 'gain'):
            passed = passed and slope <= settings.slope_limit
        if entry.kind == 'decay':
            low, high = config.TRUNC_SLOPE_RANGE
            passed = passed and low <= slope <= high
        if entry.kind == 'contrast':
            extras['contrast_slope'] = _slope(scales, secondary)
            extras['contrast_per_scale'] = list(secondary)
            passed = passed and extras['contrast_slope'] >= config.CONTRAST_SLOPE_MIN
        if entry.kind == 'gain':
            low, high = config.TRUNC_SLOPE_RANGE
            extras['decay_slope'] = _slope(scales, secondary)
            passed = passed and low <= extras['decay_slope'] <= high
    if 's_roots' in extras:
        worst = max(max(roots.values(), default=0.0) for roots in extras['s_roots'].values())
        extras['s_root_max'] = worst
        passed = passed and worst <= settings.ratio_ceiling
    if 'roundtrip' in extras:
        worst = max(extras['roundtrip'].values())
        extras['roundtrip_max'] = worst
        passed = passed and worst <= ROUNDTRIP_TOL

    report = RatioReport(
        id=ident, sample_count=len(all_ratios), max_ratio=float(max_ratio),
        normalized_constant=float(normalized), trend_slope=slope, scales=tuple(scales),
        per_scale_max=tuple(float(v) for v in per_scale), ceiling=ceiling, passed=bool(passed),
        description=entry.description, extras=extras,
    )
    log = logger.info if passed else logger.warning
    log("%s %s: max ratio %.4e, normalized %.4f, slope %+.3f", ident,
        'passed' if passed else 'FAILED', max_ratio, normalized, slope)
    return report


def run_suite(cfg, ids=None, threads=1, samples=None):
    """
    Check several inequalities, in parallel when threads > 1.

    Reports come back in the order of ids.
    """
    ids = tuple(ids) if ids else registered_ids()
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise UnknownInequalityError(f"no inequality registered under {', '.join(unknown)}")
    if threads <= 1:
        return [inequality_check(i, cfg, samples) for i in ids]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: inequality_check(i, cfg, samples), ids))


def write_reports_csv(reports, path):
    with open(str(path), 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(REPORT_COLUMNS))
        writer.writeheader()
        for report in reports:
            writer.writerow(report.to_row())
    return path


def suite_passed(reports):
    return all(r.passed and not math.isnan(r.max_ratio) for r in reports)
