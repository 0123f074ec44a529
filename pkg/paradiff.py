"""
Discrete Bony calculus on truncated Fourier lattices.
Cutoffs, para-products, regularizing remainders, the Bony remainder and
commutators with the weighted multiplier, all evaluated from their frequency
kernels.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal

import config
from exceptions import CutoffError
from fourier_core import (
    FourierField, check_same_spec, lattice_sq_norm, lattice_vectors, project
)

logger = logging.getLogger(__name__)

_PLATEAU = 5.0 / 4.0
_SUPPORT = 8.0 / 5.0


def _quintic(t):
    return t ** 3 * (t * (6.0 * t - 15.0) + 10.0)


def _cubic(t):
    return t * t * (3.0 - 2.0 * t)


PROFILES = {
    'quintic': _quintic,
    'cubic': _cubic,
}


@dataclass(frozen=True)
class CutoffSpec:
    """
    Cutoff chi_eps(xi) = chi(|xi|/eps): 1 up to 5/4, 0 from 8/5, smooth between.
    """

    eps: float = config.DEFAULT_CUTOFF_EPS
    profile: str = config.DEFAULT_CUTOFF_PROFILE

    def __post_init__(self):
        if not 0 < self.eps < 0.25:
            raise CutoffError(f"cutoff eps must lie in (0, 1/4), got {self.eps}")
        if self.profile not in PROFILES:
            raise CutoffError(f"unknown cutoff profile {self.profile!r}")


def _chi_of_ratio(ratio, profile):
    t = np.clip((_SUPPORT - ratio) / (_SUPPORT - _PLATEAU), 0.0, 1.0)
    return PROFILES[profile](t)


def cutoff_chi(spec, xi):
    """
    Evaluate chi_eps(xi).

    Args:
        spec (CutoffSpec): Cutoff parameters
        xi (float or array): Real argument(s)

    Returns:
        float or numpy.ndarray: Values in [0, 1]
    """
    values = _chi_of_ratio(np.abs(np.asarray(xi, dtype=np.float64)) / spec.eps, spec.profile)
    return float(values) if np.ndim(values) == 0 else values


def _length(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0:
        return abs(float(v))
    return np.sqrt(np.sum(v ** 2, axis=-1))


def cutoff_psi(spec, v, w):
    """Symmetric Bony cutoff 1 - chi_eps(|v|/<w>) - chi_eps(|w|/<v>)."""
    nv, nw = _length(v), _length(w)
    return 1.0 - cutoff_chi(spec, nv / np.sqrt(1.0 + nw ** 2)) - cutoff_chi(spec, nw / np.sqrt(1.0 + nv ** 2))


class BilinearKernel:
    """
    Weight w(m, k) of a bilinear operator sum_k w(j-k, k) a_hat(j-k) h_hat(k).

    Radial kernels depend only on (|m|, |k|) and admit the shell-binned path.
    """

    radial = False

    def weights(self, m, k):
        """
        Evaluate the kernel on broadcastable integer vectors of shape (..., d).
        """
        if self.radial:
            return self.radial_weight(_length(m), np.sum(np.asarray(k, dtype=np.float64) ** 2, axis=-1))
        raise NotImplementedError

    def radial_weight(self, m_len, k_sq):
        raise NotImplementedError


class ParaproductKernel(BilinearKernel):
    radial = True

    def __init__(self, cutoff):
        self.cutoff = cutoff

    def radial_weight(self, m_len, k_sq):
        return _chi_of_ratio(m_len / np.sqrt(1.0 + k_sq) / self.cutoff.eps, self.cutoff.profile)


class RegularizingKernel(BilinearKernel):
    radial = True

    def __init__(self, eps1, eps2, profile):
        self.wide = ParaproductKernel(CutoffSpec(eps1, profile))
        self.narrow = ParaproductKernel(CutoffSpec(eps2, profile))

    def radial_weight(self, m_len, k_sq):
        return self.wide.radial_weight(m_len, k_sq) - self.narrow.radial_weight(m_len, k_sq)


class BonyRemainderKernel(BilinearKernel):
    radial = True

    def __init__(self, cutoff):
        self.cutoff = cutoff

    def radial_weight(self, m_len, k_sq):
        k_len = np.sqrt(k_sq)
        eps, profile = self.cutoff.eps, self.cutoff.profile
        low_m = _chi_of_ratio(m_len / np.sqrt(1.0 + k_sq) / eps, profile)
        low_k = _chi_of_ratio(k_len / np.sqrt(1.0 + m_len ** 2) / eps, profile)
        return 1.0 - low_m - low_k


class CommutatorKernel(BilinearKernel):
    """(max{R,|m+k|}^p - max{R,|k|}^p) chi_eps(|m|/<k>)."""

    def __init__(self, p_exp, R, cutoff):
        self.p_exp = p_exp
        self.R = R
        self.para = ParaproductKernel(cutoff)

    def weights(self, m, k):
        m = np.asarray(m, dtype=np.float64)
        k = np.asarray(k, dtype=np.float64)
        k_sq = np.sum(k ** 2, axis=-1)
        out_len = np.sqrt(np.sum((m + k) ** 2, axis=-1))
        bracket = (np.maximum(self.R, out_len) ** self.p_exp
                   - np.maximum(self.R, np.sqrt(k_sq)) ** self.p_exp)
        return bracket * self.para.radial_weight(_length(m), k_sq)


def _apply_direct(a, h, kernel):
    d = a.spec.d
    ea, eh = a.extent, h.extent
    eo = ea + eh
    out = np.zeros((2 * eo + 1,) * d, dtype=np.complex128)
    kvec = lattice_vectors(d, eh)
    for idx in np.argwhere(a.coeffs != 0):
        m = idx - ea
        w = kernel.weights(m, kvec)
        if not np.any(w):
            continue
        window = tuple(slice(mi + eo - eh, mi + eo + eh + 1) for mi in m)
        out[window] += (a.coeffs[tuple(idx)] * w) * h.coeffs
    return FourierField(a.spec, out)


def _apply_shells(a, h, kernel):
    # chi depends on k only through <k>, so each |k|^2 shell is one convolution
    d = a.spec.d
    eo = a.extent + h.extent
    out = np.zeros((2 * eo + 1,) * d, dtype=np.complex128)
    m_len = np.sqrt(lattice_sq_norm(d, a.extent))
    k_sq = lattice_sq_norm(d, h.extent)
    shells = np.unique(k_sq[h.coeffs != 0])
    for value in shells:
        weighted = a.coeffs * kernel.radial_weight(m_len, float(value))
        if not np.any(weighted):
            continue
        out += signal.fftconvolve(weighted, np.where(k_sq == value, h.coeffs, 0), mode='full')
    logger.debug("shell-binned kernel used %d shells", len(shells))
    return FourierField(a.spec, out)


def _kernel_rows(a, kernel, in_extent, out_extent):
    d = a.spec.d
    ea = a.extent
    kvec = lattice_vectors(d, in_extent).reshape(-1, d)
    jvec = lattice_vectors(d, out_extent).reshape(-1, d)
    for row, j in enumerate(jvec):
        m = j - kvec
        inside = np.all(np.abs(m) <= ea, axis=1)
        if not np.any(inside):
            continue
        mm = m[inside]
        a_vals = a.coeffs[tuple((mm + ea).T)]
        yield row, inside, kernel.weights(mm, kvec[inside]) * a_vals


def _apply_bruteforce(a, h, kernel):
    eo = a.extent + h.extent
    h_flat = h.coeffs.reshape(-1)
    out = np.zeros((2 * eo + 1) ** a.spec.d, dtype=np.complex128)
    for row, inside, entries in _kernel_rows(a, kernel, h.extent, eo):
        out[row] = np.sum(entries * h_flat[inside])
    return FourierField(a.spec, out.reshape((2 * eo + 1,) * a.spec.d))


def apply_kernel(a, h, kernel, method='auto'):
    """
    Evaluate sum_k w(j-k, k) a_hat(j-k) h_hat(k) on the exact output support.

    Args:
        a (FourierField): Symbol field
        h (FourierField): Argument field
        kernel (BilinearKernel): Weight function
        method (str): 'auto', 'direct', 'shells' or 'bruteforce'

    Returns:
        FourierField: Result on extent a.extent + h.extent
    """
    check_same_spec(a, h)
    if method == 'auto':
        big = h.extent > config.PARAPRODUCT_DIRECT_MAX_K
        method = 'shells' if (big and kernel.radial) else 'direct'
    if method == 'direct':
        return _apply_direct(a, h, kernel)
    if method == 'shells':
        if not kernel.radial:
            raise ValueError("shell-binned evaluation needs a radial kernel")
        return _apply_shells(a, h, kernel)
    if method == 'bruteforce':
        return _apply_bruteforce(a, h, kernel)
    raise ValueError(f"unknown kernel evaluation method {method!r}")


def paraproduct(a, h, cutoff=None, method='auto'):
    """
    Para-product T_a h with coefficients sum_k chi_eps(|j-k|/<k>) a_hat(j-k) h_hat(k).
    """
    return apply_kernel(a, h, ParaproductKernel(cutoff or CutoffSpec()), method)


def paraproduct_bruteforce(a, h, cutoff=None):
    """Literal double sum over lattice pairs; the reference for paraproduct."""
    return paraproduct(a, h, cutoff, method='bruteforce')


def regularizing_remainder(a, h, eps1, eps2, profile=config.DEFAULT_CUTOFF_PROFILE, method='auto'):
    """
    Difference T^{eps1}_a h - T^{eps2}_a h of two para-products.

    Args:
        a (FourierField): Symbol
        h (FourierField): Argument
        eps1 (float): Wider cutoff parameter
        eps2 (float): Narrower cutoff parameter, 0 < eps2 <= eps1 < 1/4
        profile (str): Cutoff profile name
        method (str): Kernel evaluation path

    Returns:
        FourierField: The regularizing remainder
    """
    if not 0 < eps2 <= eps1 < 0.25:
        raise CutoffError(f"need 0 < eps2 <= eps1 < 1/4, got eps1={eps1}, eps2={eps2}")
    return apply_kernel(a, h, RegularizingKernel(eps1, eps2, profile), method)


def bony_remainder(a, b, cutoff=None, method='auto'):
    """Remainder Q(a)[b] with kernel psi(j - eta, eta)."""
    return apply_kernel(a, b, BonyRemainderKernel(cutoff or CutoffSpec()), method)


class BonyParts(NamedTuple):
    para_ab: FourierField
    para_ba: FourierField
    remainder: FourierField


def bony_decompose(a, b, cutoff=None, method='auto'):
    """
    Split a*b into T_a b + T_b a + Q(a)[b].

    Returns:
        BonyParts: The three fields, summing to the exact product
    """
    cutoff = cutoff or CutoffSpec()
    return BonyParts(
        para_ab=paraproduct(a, b, cutoff, method),
        para_ba=paraproduct(b, a, cutoff, method),
        remainder=bony_remainder(a, b, cutoff, method),
    )


def paraproduct_truncated(a, h, N, side='high', cutoff=None, method='auto'):
    """T_a applied to the low (|k| <= N) or high part of h."""
    return paraproduct(a, project(h, N, side), cutoff, method)


def commutator_jjap(p_exp, a, h, norm_params, cutoff=None, method='auto'):
    """
    Commutator [<<D>>^p, T_a] h with <<j>> = max{R, |j|}.
    """
    if not p_exp > 0:
        raise ValueError(f"commutator order must be positive, got {p_exp}")
    kernel = CommutatorKernel(p_exp, norm_params.R, cutoff or CutoffSpec())
    return apply_kernel(a, h, kernel, method)


def paraproduct_matrix(a, cutoff=None, in_extent=None, out_extent=None):
    """
    Dense matrix of T_a from the cube of in_extent to the cube of out_extent,
    in row-major lattice order.
    """
    kernel = ParaproductKernel(cutoff or CutoffSpec())
    d = a.spec.d
    in_extent = a.spec.K if in_extent is None else in_extent
    out_extent = a.extent + in_extent if out_extent is None else out_extent
    matrix = np.zeros(((2 * out_extent + 1) ** d, (2 * in_extent + 1) ** d), dtype=np.complex128)
    for row, inside, entries in _kernel_rows(a, kernel, in_extent, out_extent):
        matrix[row, inside] = entries
    return matrix


def adjoint_discrepancy(a, cutoff=None, extent=None):
    """
    Relative Frobenius distance between the adjoint of T_a and T_{conj(a)}
    on the square block |j|_inf <= extent.

    The cutoff argument |j-k|/<k> is not symmetric in (j, k), so the two
    matrices differ by a regularizing part; the value is reported, not asserted.
    """
    extent = a.spec.K if extent is None else extent
    forward = paraproduct_matrix(a, cutoff, extent, extent)
    flipped = paraproduct_matrix(a.conj(), cutoff, extent, extent)
    scale = np.linalg.norm(forward)
    if scale == 0:
        return 0.0
    gap = float(np.linalg.norm(forward.conj().T - flipped) / scale)
    logger.info("para-product adjoint discrepancy on extent %d: %.3e", extent, gap)
    return gap
