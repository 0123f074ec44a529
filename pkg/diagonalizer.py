"""
Block-diagonalizing change of variables for the paralinearized NLS.
Phi(u) = I + G(u) with the off-diagonal map G built from T_c restricted to
frequencies above N, its Neumann-series inverse, the w-variable with its
modified energy, and the cancellation operator T_b + G(u).
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

import config
from exceptions import ContractionError
from fourier_core import (
    FourierField, NormParams, apply_multiplier, jap, laplacian, norm, project, random_field
)
from paradiff import CutoffSpec, paraproduct
from paralinearization import symbol_a, symbol_b, symbol_c

logger = logging.getLogger(__name__)

DIRECTIONS = ('forward', 'gamma')


@dataclass(frozen=True)
class DiagonalizerParams:
    """
    Threshold and numerical controls of Phi(u).

    `norm` fixes the weighted norm in which contraction is measured; N must
    exceed its floor R.
    """

    N: float
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)
    norm: NormParams = field(default_factory=lambda: NormParams(1.0, 2.0))
    neumann_tol: float = config.NEUMANN_TOL
    neumann_max_terms: int = config.NEUMANN_MAX_TERMS

    def __post_init__(self):
        if not self.N > self.norm.R:
            raise ValueError(f"threshold N={self.N} must exceed the weight floor R={self.norm.R}")
        if not self.neumann_tol > 0:
            raise ValueError(f"neumann_tol must be positive, got {self.neumann_tol}")
        if self.neumann_max_terms < 1:
            raise ValueError(f"neumann_max_terms must be >= 1, got {self.neumann_max_terms}")


@dataclass(frozen=True)
class PairField:
    """
    A pair (plus, minus) standing for (u, conj(u)) or a general 2-vector of fields.
    """

    plus: FourierField
    minus: FourierField

    @classmethod
    def from_field(cls, u):
        """The real-to-real pair (u, conj(u))."""
        return cls(u, u.conj())

    def is_real_to_real(self, tol=1e-12):
        gap = norm(self.minus - self.plus.conj(), 'L2')
        return gap <= tol * max(1.0, norm(self.plus, 'L2'))

    def resize(self, plus_extent, minus_extent):
        return PairField(self.plus.resize(plus_extent), self.minus.resize(minus_extent))

    def norm(self, params):
        """sqrt(|plus|^2 + |minus|^2) in the weighted norm."""
        return math.hypot(norm(self.plus, 'weighted', params), norm(self.minus, 'weighted', params))

    def __add__(self, other):
        return PairField(self.plus + other.plus, self.minus + other.minus)

    def __sub__(self, other):
        return PairField(self.plus - other.plus, self.minus - other.minus)

    def __neg__(self):
        return PairField(-self.plus, -self.minus)

    def __mul__(self, scalar):
        return PairField(scalar * self.plus, scalar * self.minus)

    __rmul__ = __mul__


def _smooth_high(h, N):
    """Pi_N^perp <D>^{-2} h."""
    return project(apply_multiplier(h, jap(-2)), N, 'high')


class Diagonalizer:
    """
    The operators G, Phi, Gamma, Q = Gamma Phi - I and Phi^{-1} at a fixed state u.

    The symbol c(u) and its conjugate are computed once per instance.
    """

    def __init__(self, u, p, params):
        """
        Initialize the diagonalizer.

        Args:
            u (FourierField): State defining c(u)
            p (int): Power of the nonlinearity
            params (DiagonalizerParams): Threshold and Neumann controls
        """
        self.u = u
        self.p = p
        self.params = params
        self.c = symbol_c(u, p)
        self.c_bar = self.c.conj()

    def _high_para(self, symbol, h):
        return paraproduct(symbol, _smooth_high(h, self.params.N), self.params.cutoff)

    def gmap_apply(self, V):
        """G(u)V = (T_c Pi^perp <D>^{-2} V.minus, T_{conj c} Pi^perp <D>^{-2} V.plus)."""
        return PairField(self._high_para(self.c, V.minus), self._high_para(self.c_bar, V.plus))

    def phi_apply(self, V, direction='forward'):
        """
        Apply Phi(u) = I + G(u) ('forward') or Gamma(u) = I - G(u) ('gamma').
        """
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        image = self.gmap_apply(V)
        return V + image if direction == 'forward' else V - image

    def q_apply(self, V):
        """Q V = (Gamma Phi - I) V = -G(G(V)); block-diagonal."""
        return -self.gmap_apply(self.gmap_apply(V))

    def _galerkin_q(self, V, extents):
        return self.q_apply(V).resize(*extents)

    def contraction_estimate(self, extents, iterations=config.CONTRACTION_PROBE_ITERATIONS, seed=0):
        """
        Power-iteration estimate of the norm of Q restricted to the given extents.

        Args:
            extents (tuple): (plus_extent, minus_extent) of the Galerkin space
            iterations (int): Number of power steps
            seed (int): Seed of the probe vector

        Returns:
            float: Largest observed amplification |QY| / |Y|
        """
        rng = np.random.default_rng(seed)
        spec = self.u.spec
        probe = PairField(random_field(spec, rng, extent=extents[0]),
                          random_field(spec, rng, extent=extents[1]))
        factor = 0.0
        for _ in range(iterations):
            size = probe.norm(self.params.norm)
            if size == 0:
                break
            image = self._galerkin_q(probe * (1.0 / size), extents)
            amplification = image.norm(self.params.norm)
            factor = max(factor, amplification)
            probe = image
        logger.debug("contraction estimate %.4f on extents %s", factor, extents)
        return factor

    def phi_inverse_apply(self, V):
        """
        Solve Phi(u)Y = V for Y on the lattice of V.

        Sums x_{n+1} = P Gamma V - P Q x_n, which is Phi^{-1} = (I + Q)^{-1} Gamma
        truncated to V's extents.

        Raises:
            ContractionError: If Q is not contractive there
        """
        extents = (V.plus.extent, V.minus.extent)
        factor = self.contraction_estimate(extents)
        if factor >= 1.0:
            raise ContractionError(
                f"Q is not contractive for N={self.params.N}: estimated factor {factor:.4f}",
                factor=factor)

        source = self.phi_apply(V, 'gamma').resize(*extents)
        x = source
        previous_step = None
        scale = max(V.norm(self.params.norm), np.finfo(float).tiny)
        for term in range(1, self.params.neumann_max_terms + 1):
            x_next = source - self._galerkin_q(x, extents)
            step = (x_next - x).norm(self.params.norm)
            x = x_next
            logger.debug("Neumann term %d: increment %.3e", term, step)
            if step <= self.params.neumann_tol * scale:
                return x
            if previous_step is not None and previous_step > 0 and step / previous_step >= 1.0:
                raise ContractionError(
                    f"Neumann increments stopped shrinking at term {term}",
                    factor=step / previous_step)
            previous_step = step
        raise ContractionError(
            f"Neumann series did not reach tolerance in {self.params.neumann_max_terms} terms",
            factor=factor)

    def w_transform(self):
        """w = u + T_c Pi^perp <D>^{-2} conj(u), the plus-component of Phi(u)(u, conj u)."""
        return self.u + self._high_para(self.c, self.u.conj())

    def modified_energy(self, s=None):
        """E_s = |w|^2_{s,R}."""
        params = self.params.norm if s is None else self.params.norm.with_s(s)
        return norm(self.w_transform(), 'weighted', params) ** 2

    def cancellation_operator(self, h):
        """
        (T_b + G(u))h with b = p|u|^{2(p-1)}u^2 = 2c and
        G(u) = T_c^{>N}<D>^{-2}Lap + Lap T_c^{>N}<D>^{-2}.
        """
        lap = laplacian()
        first = self._high_para(self.c, apply_multiplier(h, lap))
        second = apply_multiplier(self._high_para(self.c, h), lap)
        para_b = paraproduct(symbol_b(self.u, self.p), h, self.params.cutoff)
        return para_b + first + second


def gmap_apply(u, V, p, params):
    return Diagonalizer(u, p, params).gmap_apply(V)


def phi_apply(u, V, p, params, direction='forward'):
    return Diagonalizer(u, p, params).phi_apply(V, direction)


def phi_inverse_apply(u, V, p, params):
    return Diagonalizer(u, p, params).phi_inverse_apply(V)


def w_transform(u, p, params):
    return Diagonalizer(u, p, params).w_transform()


def modified_energy(u, p, params, s=None):
    return Diagonalizer(u, p, params).modified_energy(s)


def cancellation_residual(u, h, p, params):
    return Diagonalizer(u, p, params).cancellation_operator(h)


def w_equation_residual(u_prev, u_now, u_next, dt, p, sign, params):
    """
    Residual D_t w - (-i Lap w + i T_a w) of the diagonalized equation.

    D_t w is the centered difference of w over three states spaced by dt;
    a = sign (p+1)|u|^{2p} at the middle state.

    Returns:
        FourierField: The residual field
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    w_prev = w_transform(u_prev, p, params)
    w_now = w_transform(u_now, p, params)
    w_next = w_transform(u_next, p, params)
    dw = (w_next - w_prev) / (2.0 * dt)

    a = sign * symbol_a(u_now, p)
    flow = -1j * apply_multiplier(w_now, laplacian()) + 1j * paraproduct(a, w_now, params.cutoff)
    return dw - flow
